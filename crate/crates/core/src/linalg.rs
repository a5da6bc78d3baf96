//! Small dense-matrix helpers shared by the estimators: symmetric
//! eigendecompositions, PSD cone projection, matrix square roots and
//! tolerance-aware inversion.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff below which a symmetric matrix is treated as
/// non-invertible (the bottom branch of the estimators).
pub const INVERTIBILITY_RTOL: f64 = 1e-8;

/// Eigenvalues within this relative distance of zero are clamped to zero
/// before invertibility checks, so numerical noise cannot flip the bottom
/// branch.
pub const EIGENVALUE_ZERO_RTOL: f64 = 1e-10;

/// Symmetrize in place: (M + Mᵀ)/2. Cheap guard against floating-point drift
/// after sandwich products.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix, returning `(eigenvalues, eigenvectors)`
/// with eigenvectors as columns.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = symmetrize(m).symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Rebuild `V diag(vals) Vᵀ`.
pub fn recompose(vals: &DVector<f64>, vecs: &DMatrix<f64>) -> DMatrix<f64> {
    let scaled = vecs * DMatrix::from_diagonal(vals);
    symmetrize(&(scaled * vecs.transpose()))
}

/// Metric projection of a symmetric matrix onto the PSD cone: negative
/// eigenvalues are clamped to zero.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (mut vals, vecs) = sym_eigen(m);
    let mut changed = false;
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            changed = true;
        }
    }
    if !changed {
        // Already PSD: return the symmetrized input unchanged rather than a
        // recomposition, so projection is exactly idempotent.
        return symmetrize(m);
    }
    recompose(&vals, &vecs)
}

/// Spectral norm (largest absolute eigenvalue) of a symmetric matrix.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(m);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest and smallest eigenvalues of a symmetric matrix.
pub fn sym_eigen_extrema(m: &DMatrix<f64>) -> (f64, f64) {
    let (vals, _) = sym_eigen(m);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Symmetric positive square root of a symmetric PSD matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let roots = vals.map(|v| v.max(0.0).sqrt());
    recompose(&roots, &vecs)
}

/// Inverse of the symmetric positive square root; eigenvalues must be
/// strictly positive up to the invertibility tolerance.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Err(Error::Singular("zero matrix has no inverse square root".into()));
    }
    let mut inv_roots = vals.clone();
    for v in inv_roots.iter_mut() {
        if *v < INVERTIBILITY_RTOL * max {
            return Err(Error::Singular("matrix is rank deficient".into()));
        }
        *v = 1.0 / v.sqrt();
    }
    Ok(recompose(&inv_roots, &vecs))
}

/// Tolerance-aware symmetric inverse. Eigenvalues within
/// `EIGENVALUE_ZERO_RTOL * λ_max` of zero are clamped to zero first; if the
/// smallest remaining eigenvalue is below `INVERTIBILITY_RTOL * λ_max` the
/// matrix is declared non-invertible and `None` is returned.
pub fn sym_inverse_checked(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let (mut vals, vecs) = sym_eigen(m);
    let max_abs = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return None;
    }
    for v in vals.iter_mut() {
        if v.abs() < EIGENVALUE_ZERO_RTOL * max_abs {
            *v = 0.0;
        }
    }
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < INVERTIBILITY_RTOL * max_abs {
        return None;
    }
    let inv_vals = vals.map(|v| 1.0 / v);
    let condition = max_abs / min;
    Some((recompose(&inv_vals, &vecs), condition))
}

pub fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_symmetric(d: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        symmetrize(&raw)
    }

    #[test]
    fn psd_projection_clamps_negative_eigenvalues() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 0.5]));
        let p = psd_project(&m);
        let (vals, _) = sym_eigen(&p);
        assert!(vals.iter().all(|v| *v >= 0.0));
        assert!((p[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(p[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn inverse_checked_rejects_rank_deficient() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
        assert!(sym_inverse_checked(&m).is_none());
    }

    #[test]
    fn sqrt_squares_back() {
        let m = random_symmetric(4, 7);
        let psd = psd_project(&m);
        let r = sym_sqrt(&psd);
        assert!(((&r * &r) - &psd).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn psd_projection_is_idempotent(seed in 0u64..500) {
            let m = random_symmetric(4, seed);
            let once = psd_project(&m);
            let twice = psd_project(&once);
            prop_assert!((&once - &twice).norm() < 1e-9 * (1.0 + once.norm()));
        }

        #[test]
        fn psd_input_is_fixed_point(seed in 0u64..500) {
            let m = random_symmetric(3, seed);
            let spd = &m * m.transpose();
            let proj = psd_project(&spd);
            prop_assert!((&proj - &spd).norm() < 1e-9 * (1.0 + spd.norm()));
        }
    }
}
