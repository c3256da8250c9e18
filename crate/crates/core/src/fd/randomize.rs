//! Gaussian randomization of relaxed solutions.
//!
//! A sample draws, for every group, `X_j^{1/2} u` with `u` a standard complex
//! Gaussian vector and normalizes it to unit norm. Samples are drawn in
//! order (sample outermost, then group) from ChaCha20 seeded with `seed`.
//! A zero matrix yields the first standard basis vector.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::channel::complex_gaussian;
use crate::linalg::{hermitian_eigen, psd_sqrt, CMatrix, CVector, C64};

fn unit_or_basis(v: CVector) -> CVector {
    let norm = v.norm();
    if norm > 0.0 && norm.is_finite() {
        v / C64::from(norm)
    } else {
        let mut e = CVector::zeros(v.len());
        e[0] = C64::from(1.0);
        e
    }
}

/// Principal eigenvector of each `X_j`, unit norm.
pub fn principal_directions(xs: &[CMatrix]) -> Vec<CVector> {
    xs.iter()
        .map(|x| {
            let (values, vectors) = hermitian_eigen(x);
            if values.first().is_some_and(|&v| v > 0.0) {
                unit_or_basis(vectors.column(0).into_owned())
            } else {
                unit_or_basis(CVector::zeros(x.nrows()))
            }
        })
        .collect()
}

/// `n_rand` samples, each a list of one unit direction per group.
pub fn gaussian_randomize(xs: &[CMatrix], n_rand: usize, seed: u64) -> Vec<Vec<CVector>> {
    let roots: Vec<CMatrix> = xs.iter().map(psd_sqrt).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n_rand)
        .map(|_| {
            roots
                .iter()
                .map(|r| {
                    let u = CVector::from_fn(r.nrows(), |_, _| complex_gaussian(&mut rng));
                    unit_or_basis(r * u)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;

    #[test]
    fn rank_one_samples_align_with_generator() {
        let v = CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 2.0), C64::new(0.0, -1.0)]);
        let x = &v * v.adjoint();
        let vn = &v / C64::from(v.norm());
        for sample in gaussian_randomize(&[x], 50, 4) {
            let overlap = inner(&vn, &sample[0]).norm();
            assert!((overlap - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_covariance_is_isotropic() {
        let n = 4;
        let x = CMatrix::identity(n, n);
        let samples = gaussian_randomize(&[x], 10_000, 99);
        let mean: f64 = samples.iter().map(|s| s[0][0].norm_sqr()).sum::<f64>() / samples.len() as f64;
        assert!((mean * n as f64 - 1.0).abs() < 0.05, "mean = {mean}");
    }

    #[test]
    fn deterministic_in_seed() {
        let x = CMatrix::identity(3, 3);
        assert_eq!(gaussian_randomize(&[x.clone()], 5, 1), gaussian_randomize(&[x.clone()], 5, 1));
        assert_ne!(gaussian_randomize(&[x.clone()], 5, 1), gaussian_randomize(&[x], 5, 2));
    }

    #[test]
    fn zero_matrix_gives_basis_vector() {
        let x = CMatrix::zeros(3, 3);
        let s = gaussian_randomize(&[x.clone()], 2, 0);
        assert_eq!(s[0][0][0], C64::from(1.0));
        assert_eq!(principal_directions(&[x])[0][0], C64::from(1.0));
    }
}
