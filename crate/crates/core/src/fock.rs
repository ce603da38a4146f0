//! Truncated Fock space of the single cavity mode.
//!
//! Operators act on `span{|0>, ..., |n_max>}`. Exponentials of unbounded
//! generators are evaluated on the truncated matrix, so they are accurate only
//! on the lower part of the space; the tests assert unitarity on the lowest
//! `n_max / 2` block.

use faer::Mat;
use log::warn;

use crate::linalg::{self, expm};
use crate::{CMatrix, Error, Result, C64};

pub const DEFAULT_N_MAX: usize = 60;

/// A dense operator on the truncated Fock space.
#[derive(Clone, Debug)]
pub struct FockOperator {
    matrix: CMatrix,
}

impl FockOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock operator must be square with dim >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: linalg::adjoint(&self.matrix) }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self { matrix: &self.matrix * &rhs.matrix }
    }

    pub fn apply(&self, state: &PhotonState) -> Vec<C64> {
        linalg::matvec(&self.matrix, state.amplitudes())
    }

    /// `<state|self|state>`.
    pub fn expectation(&self, state: &PhotonState) -> C64 {
        linalg::expectation(&self.matrix, state.amplitudes())
    }

    /// `max |(U^dag U - 1)_{ij}|` restricted to the lowest `block` Fock states.
    pub fn unitarity_defect(&self, block: usize) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..block {
            for j in 0..block {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Normalized amplitude vector in the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonState {
    amps: Vec<C64>,
}

impl PhotonState {
    /// Normalizes `amps`. Fails on an empty or zero vector.
    pub fn from_amplitudes(mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidParameter("photon state needs at least two Fock levels".into()));
        }
        let norm = linalg::vec_norm(&amps);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("cannot normalize state with norm {norm}")));
        }
        amps.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amps })
    }

    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::InvalidParameter(format!("Fock level {n} exceeds cutoff {n_max}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n_max + 1];
        amps[n] = C64::new(1.0, 0.0);
        Self::from_amplitudes(amps)
    }

    pub fn vacuum(n_max: usize) -> Result<Self> {
        Self::fock(0, n_max)
    }

    /// Coherent state from its closed-form Fock expansion, renormalized after truncation.
    pub fn coherent(alpha: C64, n_max: usize) -> Result<Self> {
        Self::from_amplitudes(coherent_amplitudes(alpha, n_max))
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.amps)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Occupation of the highest Fock level kept.
    pub fn top_occupation(&self) -> f64 {
        self.amps.last().map(|z| z.norm_sqr()).unwrap_or(0.0)
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let f = C64::from_polar(1.0, phase);
        Self { amps: self.amps.iter().map(|z| z * f).collect() }
    }
}

/// Mode frequency, coupling and Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityParams {
    pub omega_c: f64,
    pub g_coupling: f64,
    pub n_max: usize,
}

impl CavityParams {
    pub fn new(omega_c: f64, g_coupling: f64, n_max: usize) -> Result<Self> {
        let p = Self { omega_c, g_coupling, n_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_c must be positive, got {}", self.omega_c)));
        }
        if !self.g_coupling.is_finite() {
            return Err(Error::InvalidParameter("g_coupling must be finite".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_coupling(&self, g_coupling: f64) -> Self {
        Self { g_coupling, ..*self }
    }
}

/// Squeeze, displacement and cat amplitude of a squeezed displaced cat state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdscParams {
    pub r: C64,
    pub lambda: C64,
    pub alpha: C64,
}

impl SdscParams {
    pub fn new(r: C64, lambda: C64, alpha: C64) -> Self {
        Self { r, lambda, alpha }
    }

    pub fn zero() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    Ok(())
}

/// Annihilation operator `a` with `<n-1|a|n> = sqrt(n)`.
pub fn ladder(n_max: usize) -> Result<FockOperator> {
    check_n_max(n_max)?;
    let dim = n_max + 1;
    let m = Mat::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    FockOperator::from_matrix(m)
}

/// Number operator `a^dag a` (exactly diagonal, no truncation artefact).
pub fn number(n_max: usize) -> Result<FockOperator> {
    check_n_max(n_max)?;
    let dim = n_max + 1;
    FockOperator::from_matrix(Mat::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `a + a^dag`.
pub fn quadrature_sum(n_max: usize) -> Result<FockOperator> {
    let a = ladder(n_max)?;
    let m = linalg::linear_combination(&[
        (C64::new(1.0, 0.0), a.matrix()),
        (C64::new(1.0, 0.0), &linalg::adjoint(a.matrix())),
    ]);
    FockOperator::from_matrix(m)
}

/// `D(lambda) = exp(lambda a^dag - lambda^* a)`.
pub fn displacement(lambda: C64, n_max: usize) -> Result<FockOperator> {
    let a = ladder(n_max)?;
    let gen = linalg::linear_combination(&[
        (lambda, &linalg::adjoint(a.matrix())),
        (-lambda.conj(), a.matrix()),
    ]);
    FockOperator::from_matrix(expm(&gen))
}

/// `S(r) = exp[(r a^dag^2 - r^* a^2) / 2]`.
pub fn squeeze(r: C64, n_max: usize) -> Result<FockOperator> {
    let a = ladder(n_max)?;
    let a2 = a.matrix() * a.matrix();
    let ad2 = linalg::adjoint(&a2);
    let gen = linalg::linear_combination(&[(r * 0.5, &ad2), (-r.conj() * 0.5, &a2)]);
    FockOperator::from_matrix(expm(&gen))
}

/// `exp(i theta (a + a^dag))`, the Peierls factor of every dressed hopping.
pub fn peierls_exponential(theta: f64, n_max: usize) -> Result<FockOperator> {
    let x = quadrature_sum(n_max)?;
    FockOperator::from_matrix(expm(&linalg::scale(x.matrix(), C64::new(0.0, theta))))
}

/// Truncated coherent-state amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)`, by recursion.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    out.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        out.push(c);
    }
    out
}

/// Even cat `(|alpha> + |-alpha>) / sqrt(2 + 2 e^{-2|alpha|^2})`.
pub fn cat_state(alpha: C64, n_max: usize) -> Result<PhotonState> {
    check_n_max(n_max)?;
    let norm = (2.0 + 2.0 * (-2.0 * alpha.norm_sqr()).exp()).sqrt();
    let plus = coherent_amplitudes(alpha, n_max);
    let minus = coherent_amplitudes(-alpha, n_max);
    let amps = plus.iter().zip(&minus).map(|(p, m)| (p + m) / norm).collect();
    PhotonState::from_amplitudes(amps)
}

/// Norm deficit above which [`sdsc_state`] warns about truncation.
pub const TRUNCATION_WARN: f64 = 1e-6;

/// `S(r) D(lambda) cat(alpha)`, renormalized after truncation.
pub fn sdsc_state(p: &SdscParams, n_max: usize) -> Result<PhotonState> {
    let cat = cat_state(p.alpha, n_max)?;
    let displaced = displacement(p.lambda, n_max)?.apply(&cat);
    let squeezed = linalg::matvec(squeeze(p.r, n_max)?.matrix(), &displaced);
    let norm = linalg::vec_norm(&squeezed);
    if (1.0 - norm).abs() > TRUNCATION_WARN {
        warn!("SDSc state loses {:.2e} of its norm at n_max = {n_max}", (1.0 - norm).abs());
    }
    PhotonState::from_amplitudes(squeezed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn ladder_entries() {
        let a = ladder(1).unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(a.matrix()[(1, 0)], c(0.0, 0.0));
        assert_eq!(a.matrix()[(0, 0)], c(0.0, 0.0));
        let a = ladder(2).unwrap();
        assert_abs_diff_eq!(a.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(ladder(0).is_err());
    }

    #[test]
    fn commutator_is_identity_except_corner() {
        let n_max = 7;
        let a = ladder(n_max).unwrap();
        let ad = a.adjoint();
        let aad = a.compose(&ad);
        let ada = ad.compose(&a);
        for i in 0..=n_max {
            for j in 0..=n_max {
                let comm = aad.matrix()[(i, j)] - ada.matrix()[(i, j)];
                let expect = if i != j {
                    0.0
                } else if i == n_max {
                    -(n_max as f64)
                } else {
                    1.0
                };
                assert_abs_diff_eq!(comm.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(comm.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_generators_give_identity() {
        let id = linalg::identity(11);
        for op in [
            displacement(c(0.0, 0.0), 10).unwrap(),
            squeeze(c(0.0, 0.0), 10).unwrap(),
            peierls_exponential(0.0, 10).unwrap(),
        ] {
            let d = linalg::linear_combination(&[(c(1.0, 0.0), op.matrix()), (c(-1.0, 0.0), &id)]);
            assert!(linalg::norm_max(&d) < 1e-15);
        }
    }

    #[test]
    fn displaced_vacuum_matches_coherent_expansion() {
        let alpha = c(1.0, 0.0);
        let vac = PhotonState::vacuum(60).unwrap();
        let out = displacement(alpha, 60).unwrap().apply(&vac);
        for n in 0..=60 {
            let expect = (-0.5f64).exp() / factorial(n).sqrt();
            assert!((out[n] - c(expect, 0.0)).norm() < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn displacement_inverse_composition() {
        for alpha in [c(4.0, 0.0), c(0.0, -4.0), c(2.5, 2.5), c(-1.0, 0.3)] {
            let d = displacement(alpha, 60).unwrap();
            let dm = displacement(-alpha, 60).unwrap();
            let prod = d.compose(&dm);
            let id = linalg::identity(61);
            let diff = linalg::linear_combination(&[(c(1.0, 0.0), prod.matrix()), (c(-1.0, 0.0), &id)]);
            // the full truncated product is only approximately the identity at the top
            // of the space; restrict to the physically resolved lower half
            let block = linalg::leading_block(&diff, 31);
            assert!(linalg::norm_fro(&block) < 1e-8, "alpha = {alpha}");
        }
    }

    #[test]
    fn displacement_composition_law() {
        let (al, be) = (c(1.2, -0.7), c(-0.4, 1.5));
        let lhs = displacement(al, 60).unwrap().compose(&displacement(be, 60).unwrap());
        let phase = C64::from_polar(1.0, (al * be.conj()).im);
        let rhs = linalg::scale(displacement(al + be, 60).unwrap().matrix(), phase);
        let diff = linalg::linear_combination(&[(c(1.0, 0.0), lhs.matrix()), (c(-1.0, 0.0), &rhs)]);
        assert!(linalg::norm_max(&linalg::leading_block(&diff, 30)) < 1e-7);
    }

    #[test]
    fn squeezed_vacuum_photon_number_and_parity() {
        let r = 0.54;
        let vac = PhotonState::vacuum(60).unwrap();
        let out = PhotonState::from_amplitudes(squeeze(c(r, 0.0), 60).unwrap().apply(&vac)).unwrap();
        assert_abs_diff_eq!(out.mean_photon_number(), r.sinh().powi(2), epsilon = 1e-6);
        for n in (1..=60).step_by(2) {
            assert!(out.amplitudes()[n].norm() < 1e-14);
        }
    }

    #[test]
    fn peierls_vacuum_moment() {
        let theta = 0.5;
        let e = peierls_exponential(theta, 60).unwrap();
        let vac = PhotonState::vacuum(60).unwrap();
        let val = e.expectation(&vac);
        assert_abs_diff_eq!(val.re, (-theta * theta / 2.0).exp(), epsilon = 1e-8);
        assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn peierls_equals_imaginary_displacement() {
        let theta = 0.83;
        let p = peierls_exponential(theta, 40).unwrap();
        let d = displacement(c(0.0, theta), 40).unwrap();
        let diff = linalg::linear_combination(&[(c(1.0, 0.0), p.matrix()), (c(-1.0, 0.0), d.matrix())]);
        assert!(linalg::norm_max(&diff) < 1e-12);
    }

    #[test]
    fn peierls_inverse_pair() {
        let theta = 0.73;
        let prod = peierls_exponential(theta, 60)
            .unwrap()
            .compose(&peierls_exponential(-theta, 60).unwrap());
        let id = linalg::identity(61);
        let diff = linalg::linear_combination(&[(c(1.0, 0.0), prod.matrix()), (c(-1.0, 0.0), &id)]);
        assert!(linalg::norm_max(&linalg::leading_block(&diff, 30)) < 1e-8);
    }

    #[test]
    fn cat_state_basics() {
        let vac = cat_state(c(0.0, 0.0), 20).unwrap();
        assert_abs_diff_eq!(vac.amplitudes()[0].re, 1.0, epsilon = 1e-14);
        let cat = cat_state(c(1.3, 0.8), 40).unwrap();
        for n in (1..=40).step_by(2) {
            assert!(cat.amplitudes()[n].norm() < 1e-15);
        }
        assert_abs_diff_eq!(cat.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cat_overlap_with_coherent() {
        let alpha = c(3.6, 0.0);
        let cat = cat_state(alpha, 60).unwrap();
        let coh = PhotonState::coherent(alpha, 60).unwrap();
        let e = (-2.0 * alpha.norm_sqr()).exp();
        let expect = (1.0 + e) / (2.0 + 2.0 * e).sqrt();
        assert_abs_diff_eq!(coh.overlap(&cat).norm(), expect, epsilon = 1e-8);
    }

    #[test]
    fn sdsc_limits() {
        let vac = sdsc_state(&SdscParams::zero(), 30).unwrap();
        assert_abs_diff_eq!(vac.amplitudes()[0].norm(), 1.0, epsilon = 1e-12);
        let disp = sdsc_state(&SdscParams::new(c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)), 60).unwrap();
        assert_abs_diff_eq!(disp.mean_photon_number(), 4.0, epsilon = 1e-8);
        let fig = sdsc_state(&SdscParams::new(c(0.54, 0.0), c(0.0, -1.0), c(3.6, 0.0)), 60).unwrap();
        assert_abs_diff_eq!(fig.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn builders_are_unitary_on_lower_block() {
        let ops = [
            displacement(c(4.0, 0.0), 60).unwrap(),
            displacement(c(0.0, 2.8), 60).unwrap(),
            squeeze(c(0.8, 0.0), 60).unwrap(),
            peierls_exponential(2.0, 60).unwrap(),
        ];
        for op in &ops {
            assert!(op.unitarity_defect(30) < 1e-8);
        }
    }
}
