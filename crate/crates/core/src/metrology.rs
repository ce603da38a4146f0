//! Two-arm phase estimation with the cavity state in both arms.
//!
//! The input is `|phi> (x) |phi>` and the generator is `(n1 - n2)/2`. Because the
//! two copies are uncorrelated the quantum Fisher information reduces to
//! `2 Var(n)` of a single copy, so only one-mode moments are ever formed.

use crate::fock::PhotonState;
use crate::C64;

/// Top-Fock occupation above which the number variance is not trusted.
pub const QFI_TRUNCATION_WARN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NonclassicalityVariant {
    /// `<a†a> - |<a>|^2 + |<a> - <a>^2|`, as usually printed.
    #[default]
    Literal,
    /// `<a†a> - |<a>|^2 + |<a^2> - <a>^2|`, which vanishes on coherent states.
    MomentCorrected,
}

/// Single-mode moments entering the metrology quantities.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub mean_n: f64,
    pub mean_n_sq: f64,
    pub mean_a: C64,
    pub mean_a_sq: C64,
}

pub fn moments(state: &PhotonState) -> Moments {
    let c = state.amplitudes();
    let dim = c.len();
    let mut mean_n = 0.0;
    let mut mean_n_sq = 0.0;
    let mut mean_a = C64::new(0.0, 0.0);
    let mut mean_a_sq = C64::new(0.0, 0.0);
    for k in 0..dim {
        let p = c[k].norm_sqr();
        let n = k as f64;
        mean_n += n * p;
        mean_n_sq += n * n * p;
        if k + 1 < dim {
            mean_a += c[k].conj() * c[k + 1] * (n + 1.0).sqrt();
        }
        if k + 2 < dim {
            mean_a_sq += c[k].conj() * c[k + 2] * ((n + 1.0) * (n + 2.0)).sqrt();
        }
    }
    Moments { mean_n, mean_n_sq, mean_a, mean_a_sq }
}

fn number_variance(m: &Moments) -> f64 {
    (m.mean_n_sq - m.mean_n * m.mean_n).max(0.0)
}

/// `F_Q = 4 Var((n1 - n2)/2) = 2 Var(n)` for two identical uncorrelated copies.
pub fn qfi_phase_estimation(state: &PhotonState) -> f64 {
    let top = state.top_occupation();
    if top >= QFI_TRUNCATION_WARN {
        log::warn!("top Fock occupation {top:.2e} >= {QFI_TRUNCATION_WARN:.0e}; number variance may be truncated");
    }
    2.0 * number_variance(&moments(state))
}

pub fn nonclassicality_ort(state: &PhotonState, variant: NonclassicalityVariant) -> f64 {
    nonclassicality_from(&moments(state), variant)
}

fn nonclassicality_from(m: &Moments, variant: NonclassicalityVariant) -> f64 {
    let base = m.mean_n - m.mean_a.norm_sqr();
    let third = match variant {
        NonclassicalityVariant::Literal => m.mean_a - m.mean_a * m.mean_a,
        NonclassicalityVariant::MomentCorrected => m.mean_a_sq - m.mean_a * m.mean_a,
    };
    base + third.norm()
}

/// Applies `exp(i phi n)` to one arm.
pub fn phase_encode(state: &PhotonState, phi: f64) -> PhotonState {
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, z)| z * C64::from_polar(1.0, phi * n as f64))
        .collect();
    PhotonState::from_amplitudes(amps).expect("phase rotation preserves the norm")
}

#[derive(Clone, Copy, Debug)]
pub struct MetrologyReport {
    pub qfi: f64,
    pub nonclassicality: f64,
    pub nonclassicality_corrected: f64,
    pub mean_n: f64,
    pub var_n: f64,
    pub mean_a: C64,
    pub mean_a_sq: C64,
}

impl MetrologyReport {
    pub fn new(state: &PhotonState) -> Self {
        let m = moments(state);
        let var_n = number_variance(&m);
        let top = state.top_occupation();
        if top >= QFI_TRUNCATION_WARN {
            log::warn!("top Fock occupation {top:.2e} >= {QFI_TRUNCATION_WARN:.0e}; number variance may be truncated");
        }
        MetrologyReport {
            qfi: 2.0 * var_n,
            nonclassicality: nonclassicality_from(&m, NonclassicalityVariant::Literal),
            nonclassicality_corrected: nonclassicality_from(&m, NonclassicalityVariant::MomentCorrected),
            mean_n: m.mean_n,
            var_n,
            mean_a: m.mean_a,
            mean_a_sq: m.mean_a_sq,
        }
    }
}
