use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("non-Bloch phase factor undefined: (v - gamma/2)/(v + gamma/2) = {0} is not positive")]
    BetaDomain(f64),

    #[error("curve passes within {distance:e} of the origin")]
    OriginOnCurve { distance: f64 },

    #[error("unstable quadratic photon model: 1 - 2 g^2 Lambda / (L omega_c) = {0}")]
    UnstableQuadraticModel(f64),

    #[error("complex-spectrum response is not defined in the PT-broken regime (Im eps = {0})")]
    PtBrokenResponse(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
