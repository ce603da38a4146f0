//! Linear response of the dressed chain to the cavity field: current
//! operators in the non-Bloch two-band basis, the paramagnetic current-current
//! correlator `K(omega)`, and the photon spectral function built from
//! `chi = K - <J_d>`.
//!
//! Everything here assumes the PT-symmetric regime, where the dressed bulk
//! bands `±eps_k` are real. The two-band Bloch matrix
//! `h(beta) = [[0, R+], [R-, 0]]` is then diagonalizable with real
//! eigenvalues and the Lehmann sum uses biorthogonal matrix elements.

use std::f64::consts::PI;

use crate::fock::CavityParams;
use crate::lattice::{bulk_dispersion, non_bloch_beta, DressedHoppings, LatticeParams};
use crate::{par, Error, Result, C64};

/// Imaginary part of `eps_k` above which a band is treated as complex.
pub const PT_REALITY_TOL: f64 = 1e-9;

/// Wave numbers with `|eps_k|` below this carry no interband weight.
pub const GAP_CUTOFF: f64 = 1e-12;

type Block = [[C64; 2]; 2];

/// Prefactor of the diamagnetic current.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiamagneticScaling {
    /// `g^2 / sqrt L`, as the current operator is usually written. The
    /// diamagnetic shift then grows like `sqrt L` and swamps `K`.
    Printed,
    /// `g^2 / L`, the second-order term of the Peierls expansion.
    #[default]
    PeierlsOrder,
}

impl DiamagneticScaling {
    fn prefactor(self, g: f64, l: usize) -> f64 {
        match self {
            DiamagneticScaling::Printed => g * g / (l as f64).sqrt(),
            DiamagneticScaling::PeierlsOrder => g * g / l as f64,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ResponseConfig {
    /// Lorentzian broadening `eta > 0`.
    pub eta: f64,
    pub diamagnetic: DiamagneticScaling,
    /// Momentum grid size for the band sums; `None` uses the `L` points of
    /// the chain. A finer grid keeps the `L`-point normalization and only
    /// resolves the two-particle continuum better.
    pub k_points: Option<usize>,
}

impl ResponseConfig {
    /// `eta = 0.02 omega_c`.
    pub fn for_cavity(cp: &CavityParams) -> Self {
        ResponseConfig { eta: 0.02 * cp.omega_c, diamagnetic: DiamagneticScaling::default(), k_points: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.k_points == Some(0) {
            return Err(Error::InvalidParameter("k_points must be at least 1".into()));
        }
        Ok(())
    }
}

/// 2x2 blocks in the `(A, B)` pseudo-spin basis at one momentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentOperators {
    pub j_para: Block,
    pub j_dia: Block,
}

fn sigma_block(up: C64, down: C64) -> Block {
    // up sigma+ + down sigma-
    [[C64::new(0.0, 0.0), up], [down, C64::new(0.0, 0.0)]]
}

fn block_scale(b: &Block, s: C64) -> Block {
    [[b[0][0] * s, b[0][1] * s], [b[1][0] * s, b[1][1] * s]]
}

#[cfg(test)]
fn block_norm(b: &Block) -> f64 {
    b.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sandwich `l^T J r` for a row vector `l` and column vector `r`.
fn sandwich(l: &[C64; 2], b: &Block, r: &[C64; 2]) -> C64 {
    l[0] * (b[0][0] * r[0] + b[0][1] * r[1]) + l[1] * (b[1][0] * r[0] + b[1][1] * r[1])
}

fn current_blocks(w: f64, beta: C64, kappa: f64, dia: f64) -> CurrentOperators {
    let i = C64::i();
    let j_para = block_scale(&sigma_block(i * w / beta, -i * w * beta), C64::new(kappa, 0.0));
    let j_dia = block_scale(&sigma_block(w / beta, w * beta), C64::new(-dia, 0.0));
    CurrentOperators { j_para, j_dia }
}

/// `J_p = (g/sqrt L)(i w/beta sigma+ - i w beta sigma-)` and
/// `J_d = -c_d (w beta sigma- + w/beta sigma+)` at momentum `k` of the bare
/// chain, with `c_d` set by `scaling`.
pub fn build_current_operators(
    lp: &LatticeParams,
    cp: &CavityParams,
    k: f64,
    scaling: DiamagneticScaling,
) -> Result<CurrentOperators> {
    let beta = non_bloch_beta(&DressedHoppings::bare(lp), k)?.beta;
    let kappa = cp.g_coupling / (lp.l as f64).sqrt();
    Ok(current_blocks(lp.w, beta, kappa, scaling.prefactor(cp.g_coupling, lp.l)))
}

/// Upper and lower bands of `h(beta)` with right eigenvectors (columns) and
/// left eigenvectors (rows), normalized so that `l_n r_n = 1`.
struct TwoBand {
    eps: f64,
    r_up: [C64; 2],
    l_up: [C64; 2],
    r_lo: [C64; 2],
    l_lo: [C64; 2],
}

fn two_band(d: &DressedHoppings, beta: C64) -> Result<Option<TwoBand>> {
    let rp = d.v_plus - d.w_left / beta;
    let rm = d.v_minus - d.w_right * beta;
    let eps = (rp * rm).sqrt();
    if eps.im.abs() > PT_REALITY_TOL * eps.norm().max(1.0) {
        return Err(Error::PtBrokenResponse(eps.im));
    }
    if eps.norm() < GAP_CUTOFF {
        return Ok(None);
    }
    // h (R+, ±eps)^T = ±eps (R+, ±eps)^T and (R-, ±eps) h = ±eps (R-, ±eps)
    let e = C64::new(eps.re.abs(), 0.0);
    let norm = 2.0 * e * e;
    Ok(Some(TwoBand {
        eps: e.re,
        r_up: [rp, e],
        l_up: [rm / norm, e / norm],
        r_lo: [rp, -e],
        l_lo: [rm / norm, -e / norm],
    }))
}

fn k_grid(l: usize) -> Vec<f64> {
    (0..l).map(|j| 2.0 * PI * j as f64 / l as f64).collect()
}

/// Interband data at one momentum: excitation energy `2 eps_k`, the Lehmann
/// weight `<lo|J_p|up><up|J_p|lo>` and the lower-band `<J_d>`.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub k: f64,
    pub energy: f64,
    pub weight: C64,
    pub dia: C64,
}

/// Collects [`Transition`]s over the momentum grid. With a refined grid of
/// `N` points the weights are rescaled by `L/N`. Fails in the PT-broken regime.
pub fn transitions(
    lp: &LatticeParams,
    cp: &CavityParams,
    dressed: &DressedHoppings,
    cfg: &ResponseConfig,
) -> Result<Vec<Transition>> {
    let nk = cfg.k_points.unwrap_or(lp.l);
    let density = lp.l as f64 / nk as f64;
    let kappa = cp.g_coupling / (lp.l as f64).sqrt();
    let dia = cfg.diamagnetic.prefactor(cp.g_coupling, lp.l);
    let per_k = par::map(&k_grid(nk), |&k| -> Result<Option<Transition>> {
        let beta = non_bloch_beta(dressed, k)?.beta;
        let Some(tb) = two_band(dressed, beta)? else {
            return Ok(None);
        };
        let ops = current_blocks(lp.w, beta, kappa, dia);
        let up_lo = sandwich(&tb.l_up, &ops.j_para, &tb.r_lo);
        let lo_up = sandwich(&tb.l_lo, &ops.j_para, &tb.r_up);
        Ok(Some(Transition {
            k,
            energy: 2.0 * tb.eps,
            weight: up_lo * lo_up * density,
            dia: sandwich(&tb.l_lo, &ops.j_dia, &tb.r_lo) * density,
        }))
    });
    let mut out = Vec::with_capacity(lp.l);
    for t in per_k {
        if let Some(t) = t? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Retarded `K(omega) = sum_k W_k [1/(omega - D_k + i eta) - 1/(omega + D_k + i eta)]`.
pub fn correlation_k(
    lp: &LatticeParams,
    cp: &CavityParams,
    dressed: &DressedHoppings,
    omega_axis: &[f64],
    cfg: &ResponseConfig,
) -> Result<Vec<C64>> {
    cfg.validate()?;
    let ts = transitions(lp, cp, dressed, cfg)?;
    Ok(lehmann_sum(&ts, omega_axis, cfg.eta))
}

fn lehmann_sum(ts: &[Transition], omega_axis: &[f64], eta: f64) -> Vec<C64> {
    par::map(omega_axis, |&w| {
        let z = C64::new(w, eta);
        ts.iter().map(|t| t.weight * (1.0 / (z - t.energy) - 1.0 / (z + t.energy))).sum()
    })
}

/// Ground-state `<J_d>` summed over the filled lower band.
pub fn diamagnetic_expectation(
    lp: &LatticeParams,
    cp: &CavityParams,
    dressed: &DressedHoppings,
    cfg: &ResponseConfig,
) -> Result<C64> {
    cfg.validate()?;
    Ok(transitions(lp, cp, dressed, cfg)?.iter().map(|t| t.dia).sum())
}

/// `chi(omega) = K(omega) - <J_d>`.
pub fn susceptibility(
    lp: &LatticeParams,
    cp: &CavityParams,
    dressed: &DressedHoppings,
    omega_axis: &[f64],
    cfg: &ResponseConfig,
) -> Result<Vec<C64>> {
    cfg.validate()?;
    let ts = transitions(lp, cp, dressed, cfg)?;
    let jd: C64 = ts.iter().map(|t| t.dia).sum();
    Ok(lehmann_sum(&ts, omega_axis, cfg.eta).into_iter().map(|k| k - jd).collect())
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub omega_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub eta: f64,
}

impl SpectralCurve {
    /// Trapezoidal `∫ A d omega`.
    pub fn total_weight(&self) -> f64 {
        self.omega_axis
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, a)| 0.5 * (w[1] - w[0]) * (a[0] + a[1]))
            .sum()
    }

    /// Positions of strict local maxima whose height exceeds `rel` times the
    /// global maximum.
    pub fn peaks(&self, rel: f64) -> Vec<f64> {
        let top = self.values.iter().copied().fold(0.0, f64::max);
        let a = &self.values;
        (1..a.len().saturating_sub(1))
            .filter(|&i| a[i] > a[i - 1] && a[i] >= a[i + 1] && a[i] > rel * top)
            .map(|i| self.omega_axis[i])
            .collect()
    }
}

/// `A = -(1/pi) chi'' (omega + omega_c)^2 / [(omega^2 - omega_c^2 - 2 omega_c chi')^2 + (2 omega_c chi'')^2]`.
pub fn spectral_function(chi: &[C64], omega_axis: &[f64], omega_c: f64, eta: f64) -> SpectralCurve {
    let values = chi
        .iter()
        .zip(omega_axis)
        .map(|(x, &w)| {
            let re = w * w - omega_c * omega_c - 2.0 * omega_c * x.re;
            let im = 2.0 * omega_c * x.im;
            -x.im * (w + omega_c).powi(2) / (PI * (re * re + im * im))
        })
        .collect();
    SpectralCurve { omega_axis: omega_axis.to_vec(), values, eta }
}

/// Half the width of the two-band spectrum, `max_k eps_k`.
pub fn band_top(dressed: &DressedHoppings) -> f64 {
    [0.0, PI].iter().map(|&k| bulk_dispersion(dressed, k).0.norm()).fold(0.0, f64::max)
}

/// 400 points on `[0, 2 omega_c + 2 * bandwidth]`, the bandwidth being `2 max eps_k`.
pub fn default_omega_axis(cp: &CavityParams, dressed: &DressedHoppings) -> Vec<f64> {
    let stop = 2.0 * cp.omega_c + 4.0 * band_top(dressed);
    (0..400).map(|i| stop * i as f64 / 399.0).collect()
}

/// Photon spectral function of the dressed chain on `omega_axis`.
pub fn photon_spectral(
    lp: &LatticeParams,
    cp: &CavityParams,
    dressed: &DressedHoppings,
    omega_axis: &[f64],
    cfg: &ResponseConfig,
) -> Result<SpectralCurve> {
    let chi = susceptibility(lp, cp, dressed, omega_axis, cfg)?;
    Ok(spectral_function(&chi, omega_axis, cp.omega_c, cfg.eta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn setup(v: f64, g: f64) -> (LatticeParams, CavityParams) {
        (
            LatticeParams::new(v, 1.0, 4.0 / 3.0, 40, 0.5).unwrap(),
            CavityParams::new(1.0, g, 40).unwrap(),
        )
    }

    #[test]
    fn zero_coupling_gives_zero_currents() {
        let (lp, cp) = setup(1.5, 0.0);
        let ops = build_current_operators(&lp, &cp, 0.7, DiamagneticScaling::Printed).unwrap();
        assert_eq!(block_norm(&ops.j_para), 0.0);
        assert_eq!(block_norm(&ops.j_dia), 0.0);
        let k = correlation_k(&lp, &cp, &DressedHoppings::bare(&lp), &[0.5, 1.0], &ResponseConfig::for_cavity(&cp))
            .unwrap();
        assert!(k.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn hermitian_k_zero_structure() {
        let lp = LatticeParams::new(1.0, 0.8, 0.0, 25, 0.5).unwrap();
        let cp = CavityParams::new(1.0, 3.0, 10).unwrap();
        let ops = build_current_operators(&lp, &cp, 0.0, DiamagneticScaling::Printed).unwrap();
        let kappa = 3.0 / 5.0;
        assert!((ops.j_para[0][1] - c(0.0, 0.8 * kappa)).norm() < 1e-14);
        assert!((ops.j_para[1][0] - c(0.0, -0.8 * kappa)).norm() < 1e-14);
        assert_eq!(ops.j_para[0][0], c(0.0, 0.0));
    }

    #[test]
    fn coupling_scaling() {
        let (lp, cp) = setup(1.5, 2.0);
        for s in [DiamagneticScaling::Printed, DiamagneticScaling::PeierlsOrder] {
            let a = build_current_operators(&lp, &cp, 1.1, s).unwrap();
            let b = build_current_operators(&lp, &cp.with_coupling(4.0), 1.1, s).unwrap();
            assert!((block_norm(&b.j_para) / block_norm(&a.j_para) - 2.0).abs() < 1e-12);
            assert!((block_norm(&b.j_dia) / block_norm(&a.j_dia) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_lehmann_sign() {
        // one transition of unit weight at energy 1: Im K = -eta [1/((w-1)^2+eta^2) - 1/((w+1)^2+eta^2)]
        let t = Transition { k: 0.0, energy: 1.0, weight: c(1.0, 0.0), dia: c(0.0, 0.0) };
        let axis: Vec<f64> = (1..200).map(|i| 0.02 * i as f64).collect();
        let k = lehmann_sum(&[t], &axis, 0.05);
        for (w, z) in axis.iter().zip(&k) {
            let expect = -0.05 * (1.0 / ((w - 1.0).powi(2) + 0.0025) - 1.0 / ((w + 1.0).powi(2) + 0.0025));
            assert!((z.im - expect).abs() < 1e-12);
            assert!(z.im < 0.0);
        }
    }

    #[test]
    fn weights_are_real_and_positive_in_pt_symmetric_regime() {
        let (lp, cp) = setup(1.5, 3.0);
        let d = DressedHoppings::dressed(&lp, c(0.9, 0.0), c(0.9, 0.0), c(0.8, 0.0), c(0.8, 0.0));
        for t in transitions(&lp, &cp, &d, &ResponseConfig::for_cavity(&cp)).unwrap() {
            assert!(t.weight.im.abs() < 1e-12 * t.weight.norm().max(1.0));
            assert!(t.weight.re >= 0.0);
            assert!((t.energy - 2.0 * bulk_dispersion(&d, t.k).0.re).abs() < 1e-12);
        }
    }

    #[test]
    fn im_k_negative_for_positive_frequency() {
        let (lp, cp) = setup(1.5, 3.0);
        let d = DressedHoppings::bare(&lp);
        let axis = default_omega_axis(&cp, &d);
        let k = correlation_k(&lp, &cp, &d, &axis[1..], &ResponseConfig::for_cavity(&cp)).unwrap();
        assert!(k.iter().all(|z| z.im < 0.0));
    }

    #[test]
    fn refined_grid_converges_to_coarse_average() {
        let (lp, cp) = setup(1.5, 3.0);
        let d = DressedHoppings::bare(&lp);
        let coarse = ResponseConfig { eta: 0.5, ..ResponseConfig::for_cavity(&cp) };
        let fine = ResponseConfig { k_points: Some(4 * lp.l), ..coarse };
        let a = diamagnetic_expectation(&lp, &cp, &d, &coarse).unwrap();
        let b = diamagnetic_expectation(&lp, &cp, &d, &fine).unwrap();
        assert!((a - b).norm() < 1e-3 * a.norm());
        let ka = correlation_k(&lp, &cp, &d, &[2.0], &coarse).unwrap()[0];
        let kb = correlation_k(&lp, &cp, &d, &[2.0], &fine).unwrap()[0];
        assert!((ka - kb).norm() < 1e-2 * ka.norm());
    }

    #[test]
    fn broken_regime_is_rejected() {
        let lp = LatticeParams::new(1.0, 1.0, 0.5, 20, 0.5).unwrap();
        let cp = CavityParams::new(1.0, 1.0, 10).unwrap();
        // real positive v_minus / v_plus but complex eps: shrink the intracell amplitudes
        let d = DressedHoppings { v_plus: c(0.5, 0.0), v_minus: c(0.5, 0.0), w_left: c(1.0, 0.0), w_right: c(-1.0, 0.0) };
        assert!(matches!(
            correlation_k(&lp, &cp, &d, &[1.0], &ResponseConfig::for_cavity(&cp)),
            Err(Error::PtBrokenResponse(_))
        ));
        let gamma_big = LatticeParams::new(0.5, 1.0, 2.0, 20, 0.5).unwrap();
        assert!(matches!(
            correlation_k(&gamma_big, &cp, &DressedHoppings::bare(&gamma_big), &[1.0], &ResponseConfig::for_cavity(&cp)),
            Err(Error::BetaDomain(_))
        ));
    }

    #[test]
    fn weak_coupling_peak_sits_at_cavity_frequency() {
        let (lp, cp) = setup(1.5, 1e-3);
        let d = DressedHoppings::bare(&lp);
        let cfg = ResponseConfig::for_cavity(&cp);
        let axis: Vec<f64> = (0..2001).map(|i| 0.5 + 0.0005 * i as f64).collect();
        let curve = photon_spectral(&lp, &cp, &d, &axis, &cfg).unwrap();
        let peaks = curve.peaks(0.5);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0] - cp.omega_c).abs() < 2.0 * cfg.eta);
        assert!(curve.values.iter().all(|a| *a >= 0.0 && a.is_finite()));
    }
}
