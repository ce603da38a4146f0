//! Open-chain Hamiltonians of the nonreciprocal SSH model, their spectra, and
//! the non-Bloch bulk dispersion with its winding diagnostics.
//!
//! Basis ordering is `(1A, 1B, 2A, 2B, ...)`. The intracell bond carries
//! `v_plus` on `c†_A c_B` and `v_minus` on `c†_B c_A`; the intercell bond
//! carries `-w_left` on `c†_{j+1,A} c_{j,B}` and `-w_right` on the reverse.
//!
//! Whenever all four amplitudes are nonzero the chain is similar, through a
//! diagonal gauge transformation, to a complex-symmetric chain with hoppings
//! `sqrt(v_plus v_minus)` and `-sqrt(w_left w_right)`. [`obc_spectrum`]
//! diagonalizes that symmetric partner instead of the raw matrix: the skin
//! effect makes the raw eigenvector matrix exponentially ill-conditioned, and
//! its eigenvalues then pick up spurious imaginary parts far above rounding.

use std::f64::consts::PI;

use faer::Mat;

use crate::linalg;
use crate::{CMatrix, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    pub v: f64,
    pub w: f64,
    pub gamma: f64,
    pub l: usize,
    pub a0: f64,
    pub b0: f64,
}

impl LatticeParams {
    /// Parameters with the lattice constant fixed to 1.
    pub fn new(v: f64, w: f64, gamma: f64, l: usize, b0: f64) -> Result<Self> {
        let p = LatticeParams { v, w, gamma, l, a0: 1.0, b0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v, self.w, self.gamma, self.a0, self.b0]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("lattice parameters must be finite".into()));
        }
        if self.l < 2 {
            return Err(Error::InvalidParameter(format!("L must be at least 2, got {}", self.l)));
        }
        if self.w == 0.0 {
            return Err(Error::InvalidParameter("w must be nonzero".into()));
        }
        if self.a0 <= 0.0 {
            return Err(Error::InvalidParameter("a0 must be positive".into()));
        }
        if !(self.b0 > 0.0 && self.b0 < self.a0) {
            return Err(Error::InvalidParameter(format!(
                "b0 must lie in (0, a0), got {}",
                self.b0
            )));
        }
        Ok(())
    }

    /// Bare `v + gamma/2`.
    pub fn t_plus(&self) -> f64 {
        self.v + 0.5 * self.gamma
    }

    /// Bare `v - gamma/2`.
    pub fn t_minus(&self) -> f64 {
        self.v - 0.5 * self.gamma
    }

    /// Intercell A-B distance `a0 - b0`.
    pub fn inter_distance(&self) -> f64 {
        self.a0 - self.b0
    }

    pub fn dim(&self) -> usize {
        2 * self.l
    }
}

/// The four hopping amplitudes of a (possibly cavity-dressed) chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedHoppings {
    pub v_plus: C64,
    pub v_minus: C64,
    pub w_right: C64,
    pub w_left: C64,
}

impl DressedHoppings {
    pub fn bare(p: &LatticeParams) -> Self {
        DressedHoppings {
            v_plus: C64::new(p.t_plus(), 0.0),
            v_minus: C64::new(p.t_minus(), 0.0),
            w_right: C64::new(p.w, 0.0),
            w_left: C64::new(p.w, 0.0),
        }
    }

    /// Bare amplitudes multiplied by photon expectation values: `xi_plus`
    /// dresses `v + gamma/2`, `xi_minus` dresses `v - gamma/2`, `zeta_left`
    /// dresses the `c†_{j+1,A} c_{j,B}` bond and `zeta_right` its reverse.
    pub fn dressed(
        p: &LatticeParams,
        xi_plus: C64,
        xi_minus: C64,
        zeta_left: C64,
        zeta_right: C64,
    ) -> Self {
        DressedHoppings {
            v_plus: xi_plus * p.t_plus(),
            v_minus: xi_minus * p.t_minus(),
            w_right: zeta_right * p.w,
            w_left: zeta_left * p.w,
        }
    }

    /// Effective `v'` and `gamma'` with `v_plus = v' + gamma'/2`, `v_minus = v' - gamma'/2`.
    pub fn v_gamma(&self) -> (C64, C64) {
        (0.5 * (self.v_plus + self.v_minus), self.v_plus - self.v_minus)
    }

    /// `sqrt(v_plus) sqrt(v_minus)`, which equals `v` in the Hermitian limit
    /// for either sign of `v`.
    pub fn intra_geometric(&self) -> C64 {
        self.v_plus.sqrt() * self.v_minus.sqrt()
    }

    /// `sqrt(w_left) sqrt(w_right)`.
    pub fn inter_geometric(&self) -> C64 {
        self.w_left.sqrt() * self.w_right.sqrt()
    }

    fn all_nonzero(&self) -> bool {
        [self.v_plus, self.v_minus, self.w_right, self.w_left]
            .iter()
            .all(|z| z.norm() > 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<C64>,
    pub right_eigenvectors: CMatrix,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonBlochPoint {
    pub k: f64,
    pub beta: C64,
}

fn tridiagonal_chain(l: usize, intra_ab: C64, intra_ba: C64, inter_ab: C64, inter_ba: C64) -> CMatrix {
    // inter_ab sits on (j+1 A, j B), inter_ba on (j B, j+1 A)
    let mut h = Mat::<C64>::zeros(2 * l, 2 * l);
    for j in 0..l {
        h[(2 * j, 2 * j + 1)] = intra_ab;
        h[(2 * j + 1, 2 * j)] = intra_ba;
        if j + 1 < l {
            h[(2 * (j + 1), 2 * j + 1)] = inter_ab;
            h[(2 * j + 1, 2 * (j + 1))] = inter_ba;
        }
    }
    h
}

pub fn build_obc_hamiltonian(p: &LatticeParams, d: &DressedHoppings) -> Result<CMatrix> {
    p.validate()?;
    Ok(tridiagonal_chain(p.l, d.v_plus, d.v_minus, -d.w_left, -d.w_right))
}

/// Full eigendecomposition with eigenvalues sorted by real then imaginary part.
pub fn spectrum(h: &CMatrix) -> Result<ComplexSpectrum> {
    let (eigenvalues, right_eigenvectors) = linalg::sorted_eigen(h)?;
    Ok(ComplexSpectrum { eigenvalues, right_eigenvectors })
}

/// Complex-symmetric partner of a dressed chain and the logarithm of the
/// diagonal gauge `S` with `H = S h S^-1`.
#[derive(Clone, Debug)]
pub struct SymmetricChain {
    pub h: CMatrix,
    pub log_gauge: Vec<C64>,
    /// `sqrt(v_plus v_minus)` as used on the symmetric intracell bond.
    pub intra: C64,
    /// `sqrt(w_left w_right)`; the symmetric intercell bond is `-inter`.
    pub inter: C64,
}

/// Builds the symmetric partner; `None` if any amplitude vanishes.
pub fn symmetric_chain(p: &LatticeParams, d: &DressedHoppings) -> Option<SymmetricChain> {
    if !d.all_nonzero() {
        return None;
    }
    let intra = (d.v_plus * d.v_minus).sqrt();
    let inter = (d.w_left * d.w_right).sqrt();
    if intra.norm() == 0.0 || inter.norm() == 0.0 {
        return None;
    }
    let h = tridiagonal_chain(p.l, intra, intra, -inter, -inter);
    // S_{jA} / S_{jB} = v_plus / intra,  S_{j+1,A} / S_{jB} = w_left / inter
    let mut log_gauge = vec![C64::new(0.0, 0.0); 2 * p.l];
    let step_ab = (d.v_plus / intra).ln();
    let step_ba = (d.w_left / inter).ln();
    for j in 0..p.l {
        if j > 0 {
            log_gauge[2 * j] = log_gauge[2 * j - 1] + step_ba;
        }
        log_gauge[2 * j + 1] = log_gauge[2 * j] - step_ab;
    }
    Some(SymmetricChain { h, log_gauge, intra, inter })
}

/// Maps eigenvectors `y` of the symmetric partner to unit-norm eigenvectors
/// `S y` of the original chain, working in log scale so that exponentially
/// skewed gauges neither overflow nor underflow.
pub fn gauge_back(log_gauge: &[C64], y: &CMatrix) -> CMatrix {
    let n = y.nrows();
    let mut out = Mat::<C64>::zeros(n, y.ncols());
    for c in 0..y.ncols() {
        let logs: Vec<Option<C64>> = (0..n)
            .map(|i| {
                let z = y[(i, c)];
                if z.norm() == 0.0 {
                    None
                } else {
                    Some(log_gauge[i] + z.ln())
                }
            })
            .collect();
        let peak = logs
            .iter()
            .flatten()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            continue;
        }
        let mut norm = 0.0;
        for (i, l) in logs.iter().enumerate() {
            if let Some(l) = l {
                let z = (l - peak).exp();
                out[(i, c)] = z;
                norm += z.norm_sqr();
            }
        }
        let inv = 1.0 / norm.sqrt();
        for i in 0..n {
            out[(i, c)] *= inv;
        }
    }
    out
}

/// Spectrum of the open chain, computed on the symmetric partner when the
/// gauge transformation exists and on the raw matrix otherwise.
pub fn obc_spectrum(p: &LatticeParams, d: &DressedHoppings) -> Result<ComplexSpectrum> {
    p.validate()?;
    match symmetric_chain(p, d) {
        Some(sym) => {
            let (eigenvalues, y) = linalg::sorted_eigen(&sym.h)?;
            let right_eigenvectors = gauge_back(&sym.log_gauge, &y);
            Ok(ComplexSpectrum { eigenvalues, right_eigenvectors })
        }
        None => spectrum(&build_obc_hamiltonian(p, d)?),
    }
}

/// Smallest eigenvalue modulus; near zero when edge modes are present.
pub fn zero_mode_gap(s: &ComplexSpectrum) -> f64 {
    s.eigenvalues.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
}

/// The bulk bands `(+eps, -eps)` of the dressed chain at Bloch momentum `k`:
/// `eps^2 = v'^2 - gamma'^2/4 + w'^2 - 2 w' cos k sqrt((v'+gamma'/2)(v'-gamma'/2))`.
pub fn bulk_dispersion(d: &DressedHoppings, k: f64) -> (C64, C64) {
    let vv = d.v_plus * d.v_minus;
    let wp = d.inter_geometric();
    let eps2 = vv + wp * wp - 2.0 * wp * k.cos() * d.intra_geometric();
    let eps = eps2.sqrt();
    (eps, -eps)
}

/// `beta = sqrt(v_minus / v_plus) e^{ik}`; requires a real positive ratio.
pub fn non_bloch_beta(d: &DressedHoppings, k: f64) -> Result<NonBlochPoint> {
    let ratio = d.v_minus / d.v_plus;
    let tol = 1e-12 * ratio.norm().max(1.0);
    if !ratio.re.is_finite() || ratio.im.abs() > tol || ratio.re <= 0.0 {
        return Err(Error::BetaDomain(ratio.re));
    }
    let beta = C64::from_polar(ratio.re.sqrt(), k);
    Ok(NonBlochPoint { k, beta })
}

/// Samples `R+ = v_plus - w_left / beta` and `R- = v_minus - w_right beta`
/// over `k` in `[0, 2 pi)`. The intercell amplitude carries the sign it has
/// in the Hamiltonian, so that `R+ R- = eps^2` at every `k`.
pub fn r_pm_trajectory(d: &DressedHoppings, k_samples: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    if k_samples < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 k samples, got {k_samples}"
        )));
    }
    let mut plus = Vec::with_capacity(k_samples);
    let mut minus = Vec::with_capacity(k_samples);
    for i in 0..k_samples {
        let k = 2.0 * PI * i as f64 / k_samples as f64;
        let b = non_bloch_beta(d, k)?.beta;
        plus.push(d.v_plus - d.w_left / b);
        minus.push(d.v_minus - d.w_right * b);
    }
    Ok((plus, minus))
}

/// Signed number of turns of a closed sampled curve around the origin.
pub fn winding_number(curve: &[C64]) -> Result<i32> {
    let closest = curve.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if closest < 1e-9 {
        return Err(Error::OriginOnCurve { distance: closest });
    }
    let n = curve.len();
    let total: f64 = (0..n).map(|i| (curve[(i + 1) % n] / curve[i]).arg()).sum();
    Ok((total / (2.0 * PI)).round() as i32)
}
