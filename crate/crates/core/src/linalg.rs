//! Dense complex linear algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// `‖a − b‖_F / ‖b‖_F`, falling back to the absolute error when `b` is zero.
pub fn relative_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = frobenius_sq(&(a - b)).sqrt();
    let scale = frobenius_sq(b).sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `h^H x` without forming the adjoint.
pub fn inner(h: &CVector, x: &CVector) -> C64 {
    h.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `max(rows, cols) · ε · σ_max`.
pub fn numerical_rank(m: &CMatrix) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    s.iter().filter(|&&v| v > tol).count()
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
/// Returns `(eigenvalues, eigenvectors as columns)`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let sym = hermitian_part(m);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// PSD square root with negative eigenvalues clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, c)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Real embedding `[Re, −Im; Im, Re]` of a complex matrix.
pub fn real_embed(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`real_embed`] for a (possibly unstructured) symmetric real
/// matrix of size `2n`: averages the two copies of each block, which is the
/// orthogonal projection onto the structured subspace.
pub fn complex_from_embedding(y: &DMatrix<f64>) -> CMatrix {
    let n = y.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        C64::new(re, im)
    })
}

pub(crate) fn wrap_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = phi.rem_euclid(tau);
    // rem_euclid can return exactly tau for tiny negative inputs
    if w >= tau {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_roundtrip_and_trace_scaling() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.5, -1.0), C64::new(0.5, 1.0), C64::new(3.0, 0.0)],
        );
        let y = real_embed(&m);
        assert_eq!(complex_from_embedding(&y), m);
        let tr: f64 = (0..4).map(|i| y[(i, i)]).sum();
        assert_eq!(tr, 2.0 * 5.0);
    }

    #[test]
    fn rank_of_outer_product() {
        let v = CVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.3), C64::new(0.0, 1.0)]);
        let m = &v * v.adjoint();
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&CMatrix::zeros(3, 2)), 0);
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(-1e-300), 0.0);
        assert!((wrap_phase(-std::f64::consts::FRAC_PI_2) - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(wrap_phase(std::f64::consts::TAU), 0.0);
    }
}
