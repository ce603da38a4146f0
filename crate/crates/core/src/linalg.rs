//! Small dense-matrix toolkit on top of `faer`: matrix exponential, sorted
//! eigendecomposition and a handful of vector helpers.

use faer::Mat;

use crate::{CMatrix, Error, Result, C64};

pub fn identity(dim: usize) -> CMatrix {
    Mat::from_fn(dim, dim, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn scale(m: &CMatrix, s: C64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `sum_k coeffs[k] * mats[k]`.
pub fn linear_combination(terms: &[(C64, &CMatrix)]) -> CMatrix {
    let (r, c) = (terms[0].1.nrows(), terms[0].1.ncols());
    let mut out = Mat::<C64>::zeros(r, c);
    for (s, m) in terms {
        for j in 0..c {
            for i in 0..r {
                out[(i, j)] += *s * m[(i, j)];
            }
        }
    }
    out
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint().to_owned()
}

/// Frobenius norm.
pub fn norm_fro(m: &CMatrix) -> f64 {
    m.norm_l2()
}

/// Largest entry modulus.
pub fn norm_max(m: &CMatrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// Leading `k x k` block.
pub fn leading_block(m: &CMatrix, k: usize) -> CMatrix {
    Mat::from_fn(k, k, |i, j| m[(i, j)])
}

fn norm_one(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is below 1/4; a degree-20
/// Taylor polynomial then has a remainder far below double precision.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "expm needs a square matrix");
    let norm = norm_one(m);
    let mut squarings = 0u32;
    if norm > 0.25 {
        squarings = (norm / 0.25).log2().ceil() as u32;
    }
    let scaled = scale(m, C64::new(0.5f64.powi(squarings as i32), 0.0));

    // Horner evaluation of sum_{k=0}^{20} A^k / k!
    const DEGREE: usize = 20;
    let mut acc = identity(n);
    for k in (1..=DEGREE).rev() {
        let prod = &scaled * &acc;
        acc = scale(&prod, C64::new(1.0 / k as f64, 0.0));
        for i in 0..n {
            acc[(i, i)] += C64::new(1.0, 0.0);
        }
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}

/// Eigenvalues and right eigenvectors, sorted by ascending real part then
/// ascending imaginary part. Eigenvector columns have unit Euclidean norm.
pub fn sorted_eigen(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    let evd = m.eigen().map_err(|_| Error::EigenNoConvergence(n))?;
    let vals: Vec<C64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::EigenNoConvergence(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .re
            .total_cmp(&vals[b].re)
            .then(vals[a].im.total_cmp(&vals[b].im))
    });
    let u = evd.U();
    let mut vecs = Mat::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let norm = (0..n).map(|i| u[(i, src)].norm_sqr()).sum::<f64>().sqrt();
        let inv = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        for i in 0..n {
            vecs[(i, dst)] = u[(i, src)] * inv;
        }
    }
    Ok((order.iter().map(|&i| vals[i]).collect(), vecs))
}

pub fn matvec(m: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// `<a|b>` with the first argument conjugated.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<v|M|v>`.
pub fn expectation(m: &CMatrix, v: &[C64]) -> C64 {
    inner(v, &matvec(m, v))
}
