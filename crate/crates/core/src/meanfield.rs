//! Self-consistent product-state decoupling of chain and cavity.
//!
//! The loop starts from the bare chain (no cavity), builds the photon
//! Hamiltonian from the resulting hopping correlators, takes its ground state,
//! dresses the chain with the photon expectation values of the four Peierls
//! exponentials, and repeats with damping until the correlators and the
//! renormalization factors stop moving.
//!
//! Two choices are left open by the model and are exposed in [`SolverConfig`]:
//!
//! * [`CorrelatorConvention`]: biorthogonal (left/right) ground-state
//!   correlators, or right-right correlators of the Slater determinant built
//!   from unit-norm right eigenvectors.
//! * [`ConjugateTerms`]: whether the `D†` coefficients of the photon
//!   Hamiltonian are complex conjugates of the forward sums or the
//!   independently computed reversed-bond sums.

use faer::{Mat, Side};
use log::{debug, warn};

use crate::fock::{self, CavityParams, FockOperator, PhotonState};
use crate::lattice::{self, ComplexSpectrum, DressedHoppings, LatticeParams};
use crate::linalg;
use crate::{CMatrix, Error, Result, C64};

/// Real-part gap at the Fermi level below which the filling is flagged ambiguous.
pub const FILLING_GAP_TOL: f64 = 1e-10;

/// Relative real-part window within which photon eigenvalues count as degenerate.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelatorConvention {
    Biorthogonal,
    RightRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConjugateTerms {
    ComplexConjugate,
    Reversed,
}

/// Summed bond correlators of the electronic ground state.
///
/// `d_intra = sum_j <c†_{jA} c_{jB}>`, `d_inter = sum_j <c†_{j+1,A} c_{jB}>`;
/// the `_rev` fields hold the reversed bonds `<c†_{jB} c_{jA}>` and
/// `<c†_{jB} c_{j+1,A}>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoppingExpectations {
    pub d_intra: C64,
    pub d_inter: C64,
    pub d_intra_rev: C64,
    pub d_inter_rev: C64,
}

impl HoppingExpectations {
    pub fn zero() -> Self {
        let z = C64::new(0.0, 0.0);
        HoppingExpectations { d_intra: z, d_inter: z, d_intra_rev: z, d_inter_rev: z }
    }

    fn as_array(&self) -> [C64; 4] {
        [self.d_intra, self.d_inter, self.d_intra_rev, self.d_inter_rev]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn mix(&self, old: &Self, weight: f64) -> Self {
        let f = |new: C64, old: C64| new * weight + old * (1.0 - weight);
        HoppingExpectations {
            d_intra: f(self.d_intra, old.d_intra),
            d_inter: f(self.d_inter, old.d_inter),
            d_intra_rev: f(self.d_intra_rev, old.d_intra_rev),
            d_inter_rev: f(self.d_inter_rev, old.d_inter_rev),
        }
    }

    /// Coefficients of `E+`, `E-`, `F+`, `F-` in the photon Hamiltonian:
    /// `(v+g/2) D`, `(v-g/2) D†`, `-w D_inter`, `-w D_inter†`.
    pub fn photon_coefficients(&self, lp: &LatticeParams, conj: ConjugateTerms) -> [C64; 4] {
        let (intra_back, inter_back) = match conj {
            ConjugateTerms::ComplexConjugate => (self.d_intra.conj(), self.d_inter.conj()),
            ConjugateTerms::Reversed => (self.d_intra_rev, self.d_inter_rev),
        };
        [
            self.d_intra * lp.t_plus(),
            intra_back * lp.t_minus(),
            -self.d_inter * lp.w,
            -inter_back * lp.w,
        ]
    }
}

/// Half-filled electronic ground state of a dressed chain.
#[derive(Clone, Debug)]
pub struct ElectronGround {
    pub spectrum: ComplexSpectrum,
    pub hoppings: HoppingExpectations,
    /// `Re E_L - Re E_{L-1}` (zero-based) across the Fermi level.
    pub filling_gap: f64,
    pub degenerate_filling: bool,
}

fn bond_sums(l: usize, p: impl Fn(usize, usize) -> C64) -> HoppingExpectations {
    // p(r, c) = projector entry P[r][c], with <c†_i c_j> = P[j][i]
    let mut out = HoppingExpectations::zero();
    for j in 0..l {
        let (a, b) = (2 * j, 2 * j + 1);
        out.d_intra += p(b, a);
        out.d_intra_rev += p(a, b);
        if j + 1 < l {
            let a_next = 2 * (j + 1);
            out.d_inter += p(b, a_next);
            out.d_inter_rev += p(a_next, b);
        }
    }
    out
}

fn lu_solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    use faer::linalg::solvers::Solve;
    let x = m.partial_piv_lu().solve(rhs);
    if (0..x.ncols()).any(|j| (0..x.nrows()).any(|i| !x[(i, j)].re.is_finite() || !x[(i, j)].im.is_finite())) {
        return Err(Error::InvalidParameter(
            "singular overlap matrix for the occupied states (exceptional point?)".into(),
        ));
    }
    Ok(x)
}

fn occupied_columns(v: &CMatrix, l: usize) -> CMatrix {
    Mat::from_fn(v.nrows(), l, |i, j| v[(i, j)])
}

fn filling_info(eigenvalues: &[C64], l: usize) -> (f64, bool) {
    let gap = eigenvalues[l].re - eigenvalues[l - 1].re;
    let degenerate = gap < FILLING_GAP_TOL;
    if degenerate {
        warn!("half filling is ambiguous: real-part gap {gap:.2e} at the Fermi level");
    }
    (gap, degenerate)
}

/// Biorthogonal correlators through the complex-symmetric partner `h` of the
/// chain: for `h = h^T` the left eigenvectors are transposes of the right
/// ones, so the occupied projector is `Y (Y^T Y)^-1 Y^T`, and the gauge maps
/// its bond entries back onto the original chain.
fn biorthogonal_symmetric(lp: &LatticeParams, d: &DressedHoppings, sym: &lattice::SymmetricChain) -> Result<ElectronGround> {
    let l = lp.l;
    let (vals, y) = linalg::sorted_eigen(&sym.h)?;
    let yo = occupied_columns(&y, l);
    let gram = yo.transpose() * &yo;
    let z = lu_solve(&gram, &yo.transpose().to_owned())?;
    let proj = |r: usize, c: usize| (0..l).map(|k| yo[(r, k)] * z[(k, c)]).sum::<C64>();
    let hs = bond_sums(l, proj);
    let hoppings = HoppingExpectations {
        d_intra: hs.d_intra * sym.intra / d.v_plus,
        d_intra_rev: hs.d_intra_rev * sym.intra / d.v_minus,
        d_inter: hs.d_inter * sym.inter / d.w_left,
        d_inter_rev: hs.d_inter_rev * sym.inter / d.w_right,
    };
    let (filling_gap, degenerate_filling) = filling_info(&vals, l);
    let spectrum = ComplexSpectrum {
        eigenvalues: vals,
        right_eigenvectors: lattice::gauge_back(&sym.log_gauge, &y),
    };
    Ok(ElectronGround { spectrum, hoppings, filling_gap, degenerate_filling })
}

/// Biorthogonal correlators from the raw chain, with left eigenvectors taken
/// as rows of `V^-1`. Only well conditioned away from the skin regime.
pub fn biorthogonal_direct(lp: &LatticeParams, d: &DressedHoppings) -> Result<ElectronGround> {
    let l = lp.l;
    let h = lattice::build_obc_hamiltonian(lp, d)?;
    let spectrum = lattice::spectrum(&h)?;
    let v = &spectrum.right_eigenvectors;
    let vinv = lu_solve(v, &linalg::identity(v.nrows()))?;
    let proj = |r: usize, c: usize| (0..l).map(|k| v[(r, k)] * vinv[(k, c)]).sum::<C64>();
    let hoppings = bond_sums(l, proj);
    let (filling_gap, degenerate_filling) = filling_info(&spectrum.eigenvalues, l);
    Ok(ElectronGround { spectrum, hoppings, filling_gap, degenerate_filling })
}

fn right_right(lp: &LatticeParams, d: &DressedHoppings) -> Result<ElectronGround> {
    let l = lp.l;
    let spectrum = lattice::obc_spectrum(lp, d)?;
    let u = occupied_columns(&spectrum.right_eigenvectors, l);
    let gram = u.adjoint() * &u;
    let z = lu_solve(&gram, &u.adjoint().to_owned())?;
    let proj = |r: usize, c: usize| (0..l).map(|k| u[(r, k)] * z[(k, c)]).sum::<C64>();
    let hoppings = bond_sums(l, proj);
    let (filling_gap, degenerate_filling) = filling_info(&spectrum.eigenvalues, l);
    Ok(ElectronGround { spectrum, hoppings, filling_gap, degenerate_filling })
}

/// Diagonalizes the dressed chain, fills the `L` states of lowest real part
/// and returns the summed bond correlators.
pub fn electron_ground_expectations(
    lp: &LatticeParams,
    d: &DressedHoppings,
    convention: CorrelatorConvention,
) -> Result<ElectronGround> {
    lp.validate()?;
    match convention {
        CorrelatorConvention::Biorthogonal => match lattice::symmetric_chain(lp, d) {
            Some(sym) => biorthogonal_symmetric(lp, d, &sym),
            None => biorthogonal_direct(lp, d),
        },
        CorrelatorConvention::RightRight => right_right(lp, d),
    }
}

/// Peierls angles `g b0 / sqrt(L)` and `g (a0 - b0) / sqrt(L)`.
pub fn peierls_angles(lp: &LatticeParams, cp: &CavityParams) -> (f64, f64) {
    let s = cp.g_coupling / (lp.l as f64).sqrt();
    (s * lp.b0, s * lp.inter_distance())
}

/// The four Peierls exponentials `E± = exp(±i theta_b X)`, `F± = exp(±i theta_w X)`.
#[derive(Clone, Debug)]
pub struct PeierlsOperators {
    pub e_plus: FockOperator,
    pub e_minus: FockOperator,
    pub f_plus: FockOperator,
    pub f_minus: FockOperator,
    pub n_max: usize,
}

impl PeierlsOperators {
    pub fn new(lp: &LatticeParams, cp: &CavityParams) -> Result<Self> {
        cp.validate()?;
        let (tb, tw) = peierls_angles(lp, cp);
        Ok(PeierlsOperators {
            e_plus: fock::peierls_exponential(tb, cp.n_max)?,
            e_minus: fock::peierls_exponential(-tb, cp.n_max)?,
            f_plus: fock::peierls_exponential(tw, cp.n_max)?,
            f_minus: fock::peierls_exponential(-tw, cp.n_max)?,
            n_max: cp.n_max,
        })
    }

    /// `c0 E+ + c1 E- + c2 F+ + c3 F- + omega_c (n + 1/2)`.
    pub fn hamiltonian(&self, coeffs: &[C64; 4], omega_c: f64) -> CMatrix {
        let mut h = linalg::linear_combination(&[
            (coeffs[0], self.e_plus.matrix()),
            (coeffs[1], self.e_minus.matrix()),
            (coeffs[2], self.f_plus.matrix()),
            (coeffs[3], self.f_minus.matrix()),
        ]);
        for n in 0..=self.n_max {
            h[(n, n)] += C64::new(omega_c * (n as f64 + 0.5), 0.0);
        }
        h
    }

    /// `[<E+>, <E->, <F+>, <F->]`.
    pub fn expectations(&self, phi: &PhotonState) -> [C64; 4] {
        [
            self.e_plus.expectation(phi),
            self.e_minus.expectation(phi),
            self.f_plus.expectation(phi),
            self.f_minus.expectation(phi),
        ]
    }
}

pub fn build_photon_hamiltonian(
    h: &HoppingExpectations,
    lp: &LatticeParams,
    cp: &CavityParams,
    conj: ConjugateTerms,
) -> Result<CMatrix> {
    let ops = PeierlsOperators::new(lp, cp)?;
    Ok(ops.hamiltonian(&h.photon_coefficients(lp, conj), cp.omega_c))
}

#[derive(Clone, Debug)]
pub struct PhotonGround {
    pub state: PhotonState,
    pub energy: C64,
    /// Number of eigenvalues sharing the lowest real part.
    pub multiplicity: usize,
}

pub fn photon_ground_state(h: &CMatrix) -> Result<PhotonGround> {
    photon_ground_state_with_tol(h, DEFAULT_DEGENERACY_TOL)
}

/// Eigenvector of the eigenvalue with lowest real part. When several
/// eigenvalues share that real part within `tol * max(1, |E0|)`, the
/// (orthonormalized) degenerate span is diagonalized against photon parity
/// `(-1)^n` and the most parity-even combination is returned, which makes the
/// choice independent of how the eigensolver happened to mix the doublet.
pub fn photon_ground_state_with_tol(h: &CMatrix, tol: f64) -> Result<PhotonGround> {
    let (vals, vecs) = linalg::sorted_eigen(h)?;
    let dim = vals.len();
    let e0 = vals[0];
    let window = tol * e0.norm().max(1.0);
    let k = vals.iter().take_while(|z| (z.re - e0.re).abs() < window).count().max(1);
    let amps: Vec<C64> = if k == 1 {
        (0..dim).map(|i| vecs[(i, 0)]).collect()
    } else {
        let q = orthonormal_columns(&vecs, k);
        let r = q.ncols();
        let pq = Mat::from_fn(dim, r, |i, j| if i % 2 == 0 { q[(i, j)] } else { -q[(i, j)] });
        let m = q.adjoint() * &pq;
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenNoConvergence(r))?;
        let u = evd.U();
        let top = r - 1;
        (0..dim).map(|i| (0..r).map(|j| q[(i, j)] * u[(j, top)]).sum()).collect()
    };
    Ok(PhotonGround { state: PhotonState::from_amplitudes(amps)?, energy: e0, multiplicity: k })
}

fn orthonormal_columns(v: &CMatrix, k: usize) -> CMatrix {
    let n = v.nrows();
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut x: Vec<C64> = (0..n).map(|i| v[(i, j)]).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj = linalg::inner(c, &x);
                x.iter_mut().zip(c).for_each(|(xi, ci)| *xi -= proj * ci);
            }
        }
        let norm = linalg::vec_norm(&x);
        if norm > 1e-8 {
            x.iter_mut().for_each(|z| *z /= norm);
            cols.push(x);
        }
    }
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// `xi = <phi| exp(-i g l (a + a†) / sqrt(L)) |phi>`.
pub fn renormalization_factor(phi: &PhotonState, g: f64, l: usize, dist: f64) -> Result<C64> {
    let theta = g * dist / (l as f64).sqrt();
    if theta == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(fock::peierls_exponential(-theta, phi.n_max())?.expectation(phi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub mixing: f64,
    /// Floor for the stall damping: every [`STALL_WINDOW`] iterations without
    /// the residual halving, the mixing is scaled by [`STALL_DAMPING`] down to
    /// this value. Set equal to `mixing` to disable.
    pub min_mixing: f64,
    pub convention: CorrelatorConvention,
    pub conjugate: ConjugateTerms,
    pub degeneracy_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 500,
            mixing: 0.5,
            min_mixing: 0.1,
            convention: CorrelatorConvention::Biorthogonal,
            conjugate: ConjugateTerms::ComplexConjugate,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::InvalidParameter(format!("mixing must lie in (0, 1], got {}", self.mixing)));
        }
        if !(self.min_mixing > 0.0 && self.min_mixing <= self.mixing) {
            return Err(Error::InvalidParameter(format!(
                "min_mixing must lie in (0, mixing], got {}",
                self.min_mixing
            )));
        }
        if !(self.degeneracy_tol >= 0.0) {
            return Err(Error::InvalidParameter("degeneracy_tol must be non-negative".into()));
        }
        Ok(())
    }
}

pub const STALL_WINDOW: usize = 20;
pub const STALL_DAMPING: f64 = 0.6;

/// Imaginary-part bound on the renormalization factors used by [`MeanFieldSolution::xi_real`].
pub const XI_REALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MeanFieldSolution {
    pub photon_ground: PhotonState,
    pub photon_energy: C64,
    pub photon_multiplicity: usize,
    pub electron_spectrum: ComplexSpectrum,
    pub hoppings: HoppingExpectations,
    pub dressed: DressedHoppings,
    /// `[<E+>, <E->, <F+>, <F->]` in the final photon state.
    pub peierls_expectations: [C64; 4],
    /// `<exp(-i theta_b X)>`.
    pub xi_intra: C64,
    /// `<exp(-i theta_w X)>`.
    pub xi_inter: C64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub degenerate_filling: bool,
}

impl MeanFieldSolution {
    /// Whether all four Peierls expectations are real within [`XI_REALITY_TOL`].
    pub fn xi_real(&self) -> bool {
        self.peierls_expectations.iter().all(|z| z.im.abs() < XI_REALITY_TOL)
    }
}

/// Runs the loop from the bare-chain correlators.
pub fn self_consistent_solve(lp: &LatticeParams, cp: &CavityParams, cfg: &SolverConfig) -> Result<MeanFieldSolution> {
    lp.validate()?;
    let bare = electron_ground_expectations(lp, &DressedHoppings::bare(lp), cfg.convention)?;
    solve_from(lp, cp, cfg, bare.hoppings)
}

/// Runs the loop from given correlators; an unconverged run is returned with
/// `converged = false` rather than as an error.
pub fn solve_from(
    lp: &LatticeParams,
    cp: &CavityParams,
    cfg: &SolverConfig,
    initial: HoppingExpectations,
) -> Result<MeanFieldSolution> {
    lp.validate()?;
    cfg.validate()?;
    let ops = PeierlsOperators::new(lp, cp)?;
    let mut d = initial;
    let mut xi_old: Option<[C64; 4]> = None;
    let mut history = Vec::new();
    let mut last = None;
    let mut mixing = cfg.mixing;
    for it in 1..=cfg.max_iter {
        let hp = ops.hamiltonian(&d.photon_coefficients(lp, cfg.conjugate), cp.omega_c);
        let pg = photon_ground_state_with_tol(&hp, cfg.degeneracy_tol)?;
        let xi = ops.expectations(&pg.state);
        let dressed = DressedHoppings::dressed(lp, xi[0], xi[1], xi[2], xi[3]);
        let eg = electron_ground_expectations(lp, &dressed, cfg.convention)?;
        let xi_change = xi_old.map_or(0.0, |old| xi.iter().zip(&old).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        let residual = eg.hoppings.max_abs_diff(&d).max(xi_change);
        history.push(residual);
        let converged = residual < cfg.tol;
        d = eg.hoppings.mix(&d, mixing);
        if it % STALL_WINDOW == 0 && residual > 0.5 * history[it - STALL_WINDOW] && mixing > cfg.min_mixing {
            mixing = (mixing * STALL_DAMPING).max(cfg.min_mixing);
            debug!("residual stalled at {residual:.2e}; mixing lowered to {mixing}");
        }
        xi_old = Some(xi);
        last = Some((pg, xi, dressed, eg, it, residual, converged));
        if converged {
            break;
        }
    }
    let (pg, xi, dressed, eg, iterations, residual, converged) =
        last.expect("max_iter >= 1 guarantees one iteration");
    if !converged {
        warn!("mean-field loop stopped after {iterations} iterations with residual {residual:.2e}");
    }
    Ok(MeanFieldSolution {
        photon_ground: pg.state,
        photon_energy: pg.energy,
        photon_multiplicity: pg.multiplicity,
        electron_spectrum: eg.spectrum,
        hoppings: eg.hoppings,
        dressed,
        peierls_expectations: xi,
        xi_intra: xi[1],
        xi_inter: xi[3],
        iterations,
        residual,
        residual_history: history,
        converged,
        degenerate_filling: eg.degenerate_filling,
    })
}
