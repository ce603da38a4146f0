//! Phase-space views of the cavity state: Wigner functions, fidelities, fits
//! to squeezed displaced cat states, the semiclassical energy landscape and
//! the quadratic (displaced squeezed vacuum) approximation.
//!
//! Two quadrature conventions appear. Wigner grids use `q = (a + a†)/sqrt 2`,
//! `p = (a - a†)/(i sqrt 2)`, so the vacuum has `W(0,0) = 1/pi`. The
//! semiclassical landscape uses `x = (a + a†)/2`, so a coherent state `|alpha>`
//! sits at `x = Re alpha` there and at `q = sqrt 2 Re alpha` on a Wigner grid.

use std::f64::consts::{PI, SQRT_2};

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;

use crate::fock::{self, CavityParams, PhotonState, SdscParams};
use crate::lattice::LatticeParams;
use crate::meanfield::{peierls_angles, ConjugateTerms, HoppingExpectations};
use crate::par;
use crate::{Error, Result, C64};

/// Samples of `W(q, p)`; `values[i][j]` is taken at `(q_axis[j], p_axis[i])`.
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
        }
    }

    /// Riemann sum of `W dq dp` on a uniform grid.
    pub fn normalization(&self) -> f64 {
        let dq = Self::spacing(&self.q_axis);
        let dp = Self::spacing(&self.p_axis);
        self.values.iter().flatten().sum::<f64>() * dq * dp
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sum_p W(q, p) dp` for every `q`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let dp = Self::spacing(&self.p_axis);
        (0..self.q_axis.len())
            .map(|j| self.values.iter().map(|row| row[j]).sum::<f64>() * dp)
            .collect()
    }
}

/// Evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `W(q, p) = (1/pi) <psi| D(beta) P D(beta)† |psi>` with `beta = (q + ip)/sqrt 2`
/// and `P = (-1)^n`, evaluated through the Fock-basis matrix elements of the
/// displaced parity (generalized Laguerre polynomials, built by recurrence).
/// Costs `O(n_max^2)` per point and has no truncation error beyond that of
/// the state itself.
pub fn wigner_point(state: &PhotonState, q: f64, p: f64) -> f64 {
    let c = state.amplitudes();
    let m_dim = c.len();
    let rho = |m: usize, n: usize| c[m] * c[n].conj();
    let a = C64::new(q, p) / SQRT_2;
    let mut wl = vec![C64::new(0.0, 0.0); m_dim];
    wl[0] = C64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
    let mut w = rho(0, 0).re * wl[0].re;
    for n in 1..m_dim {
        wl[n] = 2.0 * a * wl[n - 1] / (n as f64).sqrt();
        w += 2.0 * (rho(0, n) * wl[n]).re;
    }
    for m in 1..m_dim {
        let sm = (m as f64).sqrt();
        let mut temp = wl[m];
        wl[m] = (2.0 * a.conj() * temp - sm * wl[m - 1]) / sm;
        w += (rho(m, m) * wl[m]).re;
        for n in m + 1..m_dim {
            let next = (2.0 * a * wl[n - 1] - sm * temp) / (n as f64).sqrt();
            temp = wl[n];
            wl[n] = next;
            w += 2.0 * (rho(m, n) * wl[n]).re;
        }
    }
    w
}

/// Same quantity by explicit matrix exponentials: `D(-beta)|psi>` followed by
/// the parity expectation. Slower and limited by truncation of `D`; kept as an
/// independent route.
pub fn wigner_point_displaced_parity(state: &PhotonState, q: f64, p: f64) -> Result<f64> {
    let beta = C64::new(q, p) / SQRT_2;
    let shifted = fock::displacement(-beta, state.n_max())?.apply(state);
    let parity: f64 = shifted
        .iter()
        .enumerate()
        .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
        .sum();
    Ok(parity / PI)
}

pub fn wigner(state: &PhotonState, q_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    let values = par::map(p_axis, |&p| q_axis.iter().map(|&q| wigner_point(state, q, p)).collect());
    WignerGrid { q_axis: q_axis.to_vec(), p_axis: p_axis.to_vec(), values }
}

/// Pure-state fidelity `|<a|b>|`.
pub fn fidelity(a: &PhotonState, b: &PhotonState) -> f64 {
    a.overlap(b).norm().min(1.0)
}

/// Quadrature moments used to seed fits: means and variances of
/// `X = a + a†` and `P = -i (a - a†)` (vacuum variance 1 each).
#[derive(Clone, Copy, Debug)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
}

pub fn quadrature_moments(state: &PhotonState) -> QuadratureMoments {
    let c = state.amplitudes();
    let n = c.len();
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    let mut nn = 0.0;
    for k in 0..n {
        nn += k as f64 * c[k].norm_sqr();
        if k + 1 < n {
            a1 += c[k].conj() * c[k + 1] * ((k + 1) as f64).sqrt();
        }
        if k + 2 < n {
            a2 += c[k].conj() * c[k + 2] * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    // <X^2> = <a^2> + <a†^2> + 2n + 1,  <P^2> = -<a^2> - <a†^2> + 2n + 1
    let x2 = 2.0 * a2.re + 2.0 * nn + 1.0;
    let p2 = -2.0 * a2.re + 2.0 * nn + 1.0;
    let mean_x = 2.0 * a1.re;
    let mean_p = 2.0 * a1.im;
    QuadratureMoments {
        mean_x,
        mean_p,
        var_x: (x2 - mean_x * mean_x).max(1e-12),
        var_p: (p2 - mean_p * mean_p).max(1e-12),
    }
}

/// Seed for [`fit_sdsc`] from quadrature moments, assuming the cat lies along
/// `X`: `r` from the `P` spread, `lambda` from the means in the unsqueezed
/// frame and `alpha` from the excess `X` spread.
pub fn seed_from_moments(state: &PhotonState) -> SdscParams {
    // S(r)† X S(r) = e^r X and S(r)† P S(r) = e^-r P for real r
    let m = quadrature_moments(state);
    let r = -0.5 * m.var_p.ln();
    let lam = C64::new(0.5 * m.mean_x * (-r).exp(), 0.5 * m.mean_p * r.exp());
    let excess = m.var_x * (-2.0 * r).exp() - 1.0;
    let alpha = if excess > 0.0 { 0.5 * excess.sqrt() } else { 0.0 };
    SdscParams::new(C64::new(r, 0.0), lam, C64::new(alpha, 0.0))
}

/// Seed from the semiclassical landscape: `alpha` at the outer minimum
/// (scaled back by the squeeze) and `r` from the ratio of the `x`-curvature at
/// the minimum to the bare `2 omega_c`.
pub fn seed_from_landscape(report: &LandscapeReport, omega_c: f64) -> SdscParams {
    let (x_star, curvature) = match report.minima.iter().max_by(|a, b| a.x.abs().total_cmp(&b.x.abs())) {
        Some(m) => (m.x.abs(), m.curvature),
        None => (0.0, 2.0 * omega_c),
    };
    let ratio = (curvature / (2.0 * omega_c)).max(1e-6);
    // stiffer x-direction means x is squeezed, which is negative r here
    let r = -0.25 * ratio.ln();
    let alpha = x_star * (-r).exp();
    SdscParams::new(C64::new(r, 0.0), C64::new(0.0, 0.0), C64::new(alpha, 0.0))
}

struct FitCost<'a> {
    target: &'a PhotonState,
}

fn params_from_vec(p: &[f64]) -> SdscParams {
    SdscParams::new(C64::new(p[0], 0.0), C64::new(p[1], p[2]), C64::new(p[3], p[4]))
}

fn fidelity_to(target: &PhotonState, p: &SdscParams) -> f64 {
    match fock::sdsc_state(p, target.n_max()) {
        Ok(s) => fidelity(target, &s),
        Err(_) => 0.0,
    }
}

impl CostFunction for FitCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(1.0 - fidelity_to(self.target, &params_from_vec(p)))
    }
}

fn nelder_mead(target: &PhotonState, start: &[f64], step: f64) -> Option<(Vec<f64>, f64)> {
    let mut simplex = vec![start.to_vec()];
    for k in 0..start.len() {
        let mut v = start.to_vec();
        v[k] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-9).ok()?;
    let res = Executor::new(FitCost { target }, solver)
        .configure(|s| s.max_iters(800))
        .run()
        .ok()?;
    let best = res.state().get_best_param()?.clone();
    let cost = res.state().get_best_cost();
    Some((best, cost))
}

/// Maximizes `|<state|S(r) D(lambda) cat(alpha)>|` over real `r` and complex
/// `lambda`, `alpha` by Nelder-Mead, starting from `seed` (or from
/// [`seed_from_moments`] when `None`). Deterministic; returns the seed itself
/// if the search does not improve on it.
pub fn fit_sdsc(state: &PhotonState, seed: Option<&SdscParams>) -> (SdscParams, f64) {
    let seed = seed.copied().unwrap_or_else(|| seed_from_moments(state));
    let start = [seed.r.re, seed.lambda.re, seed.lambda.im, seed.alpha.re, seed.alpha.im];
    let mut best = (start.to_vec(), 1.0 - fidelity_to(state, &seed));
    for step in [0.3, 0.05] {
        if let Some((p, c)) = nelder_mead(state, &best.0, step) {
            if c < best.1 {
                best = (p, c);
            }
        }
    }
    let params = params_from_vec(&best.0);
    (params, fidelity_to(state, &params))
}

/// The classical energy surface obtained from the photon Hamiltonian with
/// `a + a† -> 2x` and `a†a + 1/2 -> x^2 + p^2 + 1/2`.
pub fn semiclassical_energy(
    x: f64,
    p: f64,
    h: &HoppingExpectations,
    lp: &LatticeParams,
    cp: &CavityParams,
    conj: ConjugateTerms,
) -> C64 {
    let c = h.photon_coefficients(lp, conj);
    let (tb, tw) = peierls_angles(lp, cp);
    let e = |theta: f64| C64::from_polar(1.0, 2.0 * theta * x);
    c[0] * e(tb) + c[1] * e(-tb) + c[2] * e(tw) + c[3] * e(-tw) + cp.omega_c * (x * x + p * p + 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Landscape {
    SingleWell,
    DoubleWell,
}

#[derive(Clone, Copy, Debug)]
pub struct LocalMinimum {
    pub x: f64,
    pub energy: f64,
    /// Second derivative of `Re H_eff(x, 0)` by finite differences.
    pub curvature: f64,
}

#[derive(Clone, Debug)]
pub struct LandscapeReport {
    pub kind: Landscape,
    /// Strict local minima of `Re H_eff(x, 0)`, deepest first.
    pub minima: Vec<LocalMinimum>,
    /// Largest `|Im H_eff(x, 0)|` on the sampled line.
    pub max_imag: f64,
}

/// Number of samples on `[-x_window, x_window]` used by [`classify_landscape`].
pub const LANDSCAPE_SAMPLES: usize = 4001;

/// Equal-depth tolerance for the two deepest minima.
pub const DOUBLE_WELL_TOL: f64 = 1e-6;

/// Classifies `Re H_eff(x, 0)`: a double well has its two deepest minima at
/// `±x*` with `x* != 0`, of equal depth.
///
/// With `ConjugateTerms::Reversed` the hermitian-conjugate hoppings are read
/// as the reversed bond correlators; on the PT-symmetric/broken sweep this
/// reading switches from two wells to one at `v = gamma/2`.
pub fn classify_landscape(
    h: &HoppingExpectations,
    lp: &LatticeParams,
    cp: &CavityParams,
    conj: ConjugateTerms,
    x_window: f64,
) -> LandscapeReport {
    let xs = linspace(-x_window, x_window, LANDSCAPE_SAMPLES);
    let dx = xs[1] - xs[0];
    let vals: Vec<C64> = xs.iter().map(|&x| semiclassical_energy(x, 0.0, h, lp, cp, conj)).collect();
    let max_imag = vals.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let re: Vec<f64> = vals.iter().map(|z| z.re).collect();
    let mut minima: Vec<LocalMinimum> = (1..re.len() - 1)
        .filter(|&i| re[i] < re[i - 1] && re[i] < re[i + 1])
        .map(|i| LocalMinimum {
            x: xs[i],
            energy: re[i],
            curvature: (re[i + 1] - 2.0 * re[i] + re[i - 1]) / (dx * dx),
        })
        .collect();
    minima.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let kind = match minima.as_slice() {
        [m1, m2, ..] => {
            let equal = (m1.energy - m2.energy).abs() <= DOUBLE_WELL_TOL;
            let mirrored = (m1.x + m2.x).abs() <= 1.5 * dx;
            let off_centre = m1.x.abs() > 1.5 * dx;
            if equal && mirrored && off_centre {
                Landscape::DoubleWell
            } else {
                Landscape::SingleWell
            }
        }
        _ => Landscape::SingleWell,
    };
    LandscapeReport { kind, minima, max_imag }
}

/// Coefficients of the photon Hamiltonian expanded to second order in the field,
/// `omega_c (n + 1/2) + (g/sqrt L) X Pi - (g^2 / 2L) X^2 Lambda`.
#[derive(Clone, Copy, Debug)]
pub struct QuadraticPhotonModel {
    pub lambda_coef: C64,
    pub pi_coef: C64,
    /// `omega_c sqrt(1 - 2 g^2 Lambda / (L omega_c))`.
    pub w_eff: C64,
    /// Standard squeeze parameter `ln(W / omega_c) / 2`.
    pub squeeze: C64,
    /// Coherent amplitude displaced before squeezing.
    pub displacement: C64,
}

impl QuadraticPhotonModel {
    /// Solves `omega (n + 1/2) + kappa X Pi - (kappa^2 / 2) X^2 Lambda`. Fails
    /// when the quadratic form is not bounded below.
    pub fn new(lambda_coef: C64, pi_coef: C64, kappa: f64, omega: f64) -> Result<Self> {
        let arg = 1.0 - 2.0 * kappa * kappa * lambda_coef / omega;
        if arg.re <= 0.0 {
            return Err(Error::UnstableQuadraticModel(arg.re));
        }
        let ratio = arg.sqrt();
        Ok(QuadraticPhotonModel {
            lambda_coef,
            pi_coef,
            w_eff: omega * ratio,
            squeeze: 0.5 * ratio.ln(),
            displacement: -(kappa * pi_coef / omega) * ratio.powf(-1.5),
        })
    }

    /// `S(xi) D(lambda) |0>` with `S(xi) = exp[(xi* a^2 - xi a†^2)/2]`.
    pub fn ground_state(&self, n_max: usize) -> Result<PhotonState> {
        let coherent = fock::coherent_amplitudes(self.displacement, n_max);
        // fock::squeeze uses exp[(r a†^2 - r* a^2)/2], i.e. r = -xi
        let s = fock::squeeze(-self.squeeze, n_max)?;
        PhotonState::from_amplitudes(crate::linalg::matvec(s.matrix(), &coherent))
    }
}

/// Builds the quadratic model from the hopping correlators. `Lambda` and `Pi`
/// are the second- and first-order Taylor coefficients of the four Peierls
/// exponentials.
pub fn quadratic_model(
    h: &HoppingExpectations,
    lp: &LatticeParams,
    cp: &CavityParams,
    conj: ConjugateTerms,
) -> Result<QuadraticPhotonModel> {
    let c = h.photon_coefficients(lp, conj);
    let b = lp.b0;
    let d = lp.inter_distance();
    let lambda_coef = (c[0] + c[1]) * (b * b) + (c[2] + c[3]) * (d * d);
    let pi_coef = C64::i() * ((c[0] - c[1]) * b + (c[2] - c[3]) * d);
    let kappa = cp.g_coupling / (lp.l as f64).sqrt();
    QuadraticPhotonModel::new(lambda_coef, pi_coef, kappa, cp.omega_c)
}

/// The displaced squeezed vacuum that is the exact ground state of the
/// quadratic model.
pub fn dsv_ground_state(
    h: &HoppingExpectations,
    lp: &LatticeParams,
    cp: &CavityParams,
    conj: ConjugateTerms,
) -> Result<(PhotonState, QuadraticPhotonModel)> {
    let model = quadratic_model(h, lp, cp, conj)?;
    Ok((model.ground_state(cp.n_max)?, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_origin_value() {
        let vac = PhotonState::vacuum(20).unwrap();
        assert!((wigner_point(&vac, 0.0, 0.0) - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_peak_position() {
        let alpha = c(1.0, 0.5);
        let s = PhotonState::coherent(alpha, 40).unwrap();
        let (q0, p0) = (SQRT_2 * alpha.re, SQRT_2 * alpha.im);
        assert!((wigner_point(&s, q0, p0) - 1.0 / PI).abs() < 1e-10);
        let off = wigner_point(&s, q0 + 0.3, p0 - 0.2);
        assert!((off - (-(0.09f64 + 0.04)).exp() / PI).abs() < 1e-10);
    }

    #[test]
    fn recurrence_matches_displaced_parity() {
        let s = fock::sdsc_state(&SdscParams::new(c(0.3, 0.0), c(0.2, -0.4), c(1.2, 0.0)), 60).unwrap();
        for &(q, p) in &[(0.0, 0.0), (1.1, -0.7), (-2.0, 0.4), (0.3, 1.9)] {
            let a = wigner_point(&s, q, p);
            let b = wigner_point_displaced_parity(&s, q, p).unwrap();
            assert!((a - b).abs() < 1e-9, "({q},{p}): {a} vs {b}");
        }
    }

    #[test]
    fn cat_has_negative_fringes() {
        let cat = fock::cat_state(c(2.0, 0.0), 60).unwrap();
        assert!(wigner_point(&cat, 0.0, PI / (4.0 * SQRT_2 * 2.0) * 2.0) < -0.1);
    }

    #[test]
    fn fidelity_basics() {
        let v = PhotonState::vacuum(30).unwrap();
        let one = PhotonState::fock(1, 30).unwrap();
        let coh = PhotonState::coherent(c(1.0, 0.0), 30).unwrap();
        assert_eq!(fidelity(&v, &v), 1.0);
        assert_eq!(fidelity(&v, &one), 0.0);
        assert!((fidelity(&v, &coh) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((fidelity(&coh, &v.with_global_phase(1.3)) - fidelity(&v, &coh)).abs() < 1e-15);
    }

    #[test]
    fn moments_of_coherent_state() {
        let s = PhotonState::coherent(c(0.8, -0.3), 40).unwrap();
        let m = quadrature_moments(&s);
        assert!((m.mean_x - 1.6).abs() < 1e-10 && (m.mean_p + 0.6).abs() < 1e-10);
        assert!((m.var_x - 1.0).abs() < 1e-10 && (m.var_p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn vacuum_fit_is_trivial() {
        let vac = PhotonState::vacuum(60).unwrap();
        let (p, f) = fit_sdsc(&vac, None);
        assert!(f > 1.0 - 1e-9);
        assert!(p.r.norm() < 1e-6 && p.lambda.norm() < 1e-6 && p.alpha.norm() < 1e-3);
    }

    #[test]
    fn zero_coupling_landscape_has_single_well() {
        let lp = LatticeParams::new(1.3, 1.0, 8.0 / 3.0, 185, 0.9).unwrap();
        let cp = CavityParams::new(0.15, 0.0, 60).unwrap();
        let h = HoppingExpectations { d_intra: c(-40.0, 0.0), d_inter: c(-80.0, 0.0), ..HoppingExpectations::zero() };
        let rep = classify_landscape(&h, &lp, &cp, ConjugateTerms::ComplexConjugate, 6.0);
        assert_eq!(rep.kind, Landscape::SingleWell);
        assert!(rep.minima[0].x.abs() < 1e-12);
    }

    #[test]
    fn symmetric_double_well_is_detected() {
        // a positive cos(2 theta x) term with theta large enough opens a barrier at x = 0
        let lp = LatticeParams::new(1.0, 1.0, 0.0, 100, 0.5).unwrap();
        let cp = CavityParams::new(0.15, 10.0, 60).unwrap();
        let h = HoppingExpectations { d_intra: c(1.0, 0.0), d_intra_rev: c(1.0, 0.0), ..HoppingExpectations::zero() };
        let rep = classify_landscape(&h, &lp, &cp, ConjugateTerms::Reversed, 4.0);
        assert_eq!(rep.kind, Landscape::DoubleWell);
        assert!((rep.minima[0].x + rep.minima[1].x).abs() < 1e-9);
    }

    #[test]
    fn quadratic_model_limits() {
        let lp = LatticeParams::new(1.4, 1.0, 8.0 / 3.0, 185, 0.9).unwrap();
        let h = HoppingExpectations { d_intra: c(-50.0, 0.0), d_inter: c(-60.0, 0.0), ..HoppingExpectations::zero() };
        let cp0 = CavityParams::new(0.15, 0.0, 40).unwrap();
        let (s, m) = dsv_ground_state(&h, &lp, &cp0, ConjugateTerms::ComplexConjugate).unwrap();
        assert!((m.w_eff - c(0.15, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let cp = CavityParams::new(0.15, 11.1, 40).unwrap();
        let (_, m) = dsv_ground_state(&HoppingExpectations::zero(), &lp, &cp, ConjugateTerms::ComplexConjugate).unwrap();
        assert!(m.squeeze.norm() == 0.0 && m.displacement.norm() == 0.0);
    }

    #[test]
    fn displacement_without_curvature_is_coherent() {
        // equal and opposite intracell coefficients cancel in Lambda but not in Pi
        let lp = LatticeParams::new(1.0, 1.0, 0.0, 100, 0.5).unwrap();
        let cp = CavityParams::new(0.5, 2.0, 40).unwrap();
        let h = HoppingExpectations { d_intra: c(0.3, 0.0), d_intra_rev: c(-0.3, 0.0), ..HoppingExpectations::zero() };
        let (s, m) = dsv_ground_state(&h, &lp, &cp, ConjugateTerms::Reversed).unwrap();
        assert!(m.lambda_coef.norm() < 1e-15 && m.squeeze.norm() < 1e-15);
        assert!(m.displacement.norm() > 0.0);
        let coh = PhotonState::coherent(m.displacement, 40).unwrap();
        assert!((fidelity(&s, &coh) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dsv_matches_direct_diagonalization() {
        use crate::linalg;
        use crate::meanfield::photon_ground_state;
        let (kappa, omega, n_max) = (0.4, 0.8, 80);
        for &(lam, pi) in &[(0.9, 0.5), (-1.5, -0.3), (0.2, 1.1)] {
            let model = QuadraticPhotonModel::new(c(lam, 0.0), c(pi, 0.0), kappa, omega).unwrap();
            let x = fock::quadrature_sum(n_max).unwrap();
            let n = fock::number(n_max).unwrap();
            let x2 = x.compose(&x);
            let id = linalg::identity(n_max + 1);
            let h = linalg::linear_combination(&[
                (c(omega, 0.0), n.matrix()),
                (c(0.5 * omega, 0.0), &id),
                (c(kappa * pi, 0.0), x.matrix()),
                (c(-0.5 * kappa * kappa * lam, 0.0), x2.matrix()),
            ]);
            let exact = photon_ground_state(&h).unwrap();
            let dsv = model.ground_state(n_max).unwrap();
            assert!(1.0 - fidelity(&exact.state, &dsv) < 1e-8, "{lam} {pi}");
            let w = model.w_eff.re;
            assert!((exact.energy.re - (0.5 * w - (kappa * pi).powi(2) * omega / (w * w))).abs() < 1e-8);
        }
    }

    #[test]
    fn unstable_model_is_rejected() {
        let lp = LatticeParams::new(1.0, 1.0, 0.0, 100, 0.5).unwrap();
        let cp = CavityParams::new(0.15, 10.0, 40).unwrap();
        let h = HoppingExpectations { d_intra: c(5.0, 0.0), d_intra_rev: c(5.0, 0.0), ..HoppingExpectations::zero() };
        assert!(matches!(
            dsv_ground_state(&h, &lp, &cp, ConjugateTerms::Reversed),
            Err(Error::UnstableQuadraticModel(_))
        ));
    }
}
