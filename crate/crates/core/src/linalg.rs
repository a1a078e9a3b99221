//! Dense complex matrix helpers on top of `faer`.

use faer::{Mat, MatRef, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

pub fn submatrix(m: MatRef<'_, c64>, rows: &[usize], cols: &[usize]) -> CMat {
    Mat::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entry modulus.
pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

/// `max |M - M†|`.
pub fn hermiticity_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i..n {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    best
}

/// `max |M² - M|`.
pub fn idempotency_defect(m: MatRef<'_, c64>) -> f64 {
    let sq = m * m;
    max_abs_diff(sq.as_ref(), m)
}

/// Largest imaginary part.
pub fn imaginary_defect(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].im.abs());
        }
    }
    best
}

/// Sum of singular values.
pub fn trace_norm(m: MatRef<'_, c64>) -> Result<f64> {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => Ok(0.0),
        (1, _) | (_, 1) => {
            let mut s = 0.0;
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    s += m[(i, j)].norm_sqr();
                }
            }
            Ok(s.sqrt())
        }
        _ => {
            let sv = m
                .singular_values()
                .map_err(|e| Error::Numerical(format!("singular values did not converge: {e:?}")))?;
            Ok(sv.iter().sum())
        }
    }
}

/// Operator norm (largest singular value).
pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular values did not converge: {e:?}")))?;
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

/// Eigenvalues ascending and matching unit eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver returned non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let u = evd.U();
    let vectors = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])]);
    Ok((order.iter().map(|k| values[*k]).collect(), vectors))
}

pub fn determinant(m: MatRef<'_, c64>) -> c64 {
    m.determinant()
}

/// `exp(i·θ·H)` for Hermitian `H` via its eigendecomposition.
pub fn hermitian_exp_i(h: MatRef<'_, c64>, theta: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let phases: Vec<c64> = vals.iter().map(|v| c64::cis(theta * v)).collect();
    let scaled = Mat::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * phases[j]);
    Ok(&scaled * vecs.adjoint())
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: MatRef<'_, c64>) -> CMat {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0i32;
    if norm1 > 0.5 {
        s = (norm1 / 0.5).log2().ceil() as i32;
    }
    let scale = 0.5f64.powi(s);
    let x = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = Mat::<c64>::identity(n, n);
    let mut term = Mat::<c64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &x;
        let inv = 1.0 / k as f64;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] * inv);
        result += &term;
        if max_abs(term.as_ref()) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    Mat::from_fn(rows, cols, |_, _| {
        c64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Haar-ish random unitary from the Q factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = random_complex(rng, n, n);
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    // Fix column phases so the distribution does not depend on the QR convention.
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64::new(1.0, 0.0) };
        q[(i, j)] * ph
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 7);
        let g = u.adjoint() * &u;
        assert!(max_abs_diff(g.as_ref(), Mat::<c64>::identity(7, 7).as_ref()) < 1e-12);
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { c64::new(-(i as f64) - 1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert!((trace_norm(m.as_ref()).unwrap() - 6.0).abs() < 1e-12);
        let row = Mat::from_fn(1, 2, |_, j| c64::new(3.0 * (1 - j) as f64, 4.0 * j as f64));
        assert!((trace_norm(row.as_ref()).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn expm_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_complex(&mut rng, 6, 6);
        let h = Mat::from_fn(6, 6, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5);
        let a = Mat::from_fn(6, 6, |i, j| h[(i, j)] * c64::new(0.0, 1.3));
        let lhs = expm(a.as_ref());
        let rhs = hermitian_exp_i(h.as_ref(), 1.3).unwrap();
        assert!(max_abs_diff(lhs.as_ref(), rhs.as_ref()) < 1e-11);
    }

    #[test]
    fn eigen_sorted() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_complex(&mut rng, 5, 5);
        let h = Mat::from_fn(5, 5, |i, j| g[(i, j)] + g[(j, i)].conj());
        let (vals, vecs) = hermitian_eigen(h.as_ref()).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let hv = &h * &vecs;
        let vl = Mat::from_fn(5, 5, |i, j| vecs[(i, j)] * vals[j]);
        assert!(max_abs_diff(hv.as_ref(), vl.as_ref()) < 1e-12);
    }
}
