//! Dense symmetric linear algebra: eigendecomposition, SPD solves, matrix
//! powers, and idempotency/rank diagnostics.
//!
//! Everything here operates on `ndarray::Array2<f64>` and is deterministic:
//! the same input always produces the same output. The eigensolver is a
//! cyclic Jacobi iteration, which is plenty at the dense scales this crate
//! targets and needs no external LAPACK backend.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Maximum asymmetry tolerated before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are ascending; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]`. Columns are orthonormal but their signs are not
/// canonicalized, so consumers must compare `U f(Λ) Uᵀ` products rather
/// than raw vectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// U diag(λ) Uᵀ.
    pub fn reconstruct(&self) -> Array2<f64> {
        apply_spectral_function(self, |x| x)
    }

    /// Largest |λ|.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }
}

pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &x| acc.max(x.abs()))
}

/// ‖A − B‖_max. Panics on shape mismatch.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (&x, &y)| acc.max((x - y).abs()))
}

fn check_square(m: &Array2<f64>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(rows)
}

fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &Array2<f64>) -> Result<usize> {
    let n = check_square(m)?;
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(n)
}

/// Eigendecomposition of a symmetric matrix via cyclic Jacobi rotations.
///
/// Rejects input whose asymmetry exceeds [`SYMMETRY_TOL`]; smaller
/// asymmetry is folded away by symmetrizing before iterating.
pub fn eigh(m: &Array2<f64>) -> Result<Spectrum> {
    let n = check_symmetric(m)?;

    let mut a = 0.5 * (m + &m.t());
    let mut v: Array2<f64> = Array2::eye(n);

    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[[i, j]] * a[[i, j]];
                }
            }
            if off.sqrt() <= 1e-15 * scale {
                break;
            }

            for p in 0..n.saturating_sub(1) {
                for q in (p + 1)..n {
                    let apq = a[[p, q]];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[[p, p]];
                    let aqq = a[[q, q]];

                    // Classic stable rotation: t = sgn(τ) / (|τ| + √(1+τ²)).
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    for i in 0..n {
                        if i != p && i != q {
                            let aip = a[[i, p]];
                            let aiq = a[[i, q]];
                            a[[i, p]] = c * aip - s * aiq;
                            a[[p, i]] = a[[i, p]];
                            a[[i, q]] = s * aip + c * aiq;
                            a[[q, i]] = a[[i, q]];
                        }
                    }
                    a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                    a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                    a[[p, q]] = 0.0;
                    a[[q, p]] = 0.0;

                    for i in 0..n {
                        let vip = v[[i, p]];
                        let viq = v[[i, q]];
                        v[[i, p]] = c * vip - s * viq;
                        v[[i, q]] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));

    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&v.column(src));
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Solve M X = B for symmetric positive-definite M via Cholesky.
pub fn solve_spd(m: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = check_symmetric(m)?;
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_spd right-hand side",
            left: m.dim(),
            right: b.dim(),
        });
    }

    // Lower Cholesky factor, failing on the first non-positive pivot.
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for j in 0..n {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut sum = m[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = sum / ljj;
        }
    }

    let ncols = b.ncols();
    let mut x = b.clone();
    // Forward: L Y = B.
    for col in 0..ncols {
        for i in 0..n {
            let mut sum = x[[i, col]];
            for k in 0..i {
                sum -= l[[i, k]] * x[[k, col]];
            }
            x[[i, col]] = sum / l[[i, i]];
        }
    }
    // Backward: Lᵀ X = Y.
    for col in 0..ncols {
        for i in (0..n).rev() {
            let mut sum = x[[i, col]];
            for k in (i + 1)..n {
                sum -= l[[k, i]] * x[[k, col]];
            }
            x[[i, col]] = sum / l[[i, i]];
        }
    }
    Ok(x)
}

/// Mᵏ by repeated squaring; M⁰ = I.
pub fn matrix_power(m: &Array2<f64>, k: u32) -> Array2<f64> {
    let (rows, cols) = m.dim();
    assert_eq!(rows, cols, "matrix_power needs a square matrix");
    let mut result: Array2<f64> = Array2::eye(rows);
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.dot(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// ‖M² − M‖_max; zero (up to tolerance) exactly when M is idempotent.
pub fn idempotency_defect(m: &Array2<f64>) -> f64 {
    max_abs_diff(&m.dot(m), m)
}

pub fn trace(m: &Array2<f64>) -> f64 {
    m.diag().sum()
}

/// Default rank tolerance: scales with the dimension and the spectral
/// radius, so it stays meaningful for large graphs.
pub fn default_rank_tol(n: usize, spectral_radius: f64) -> f64 {
    1e-8 * n as f64 * spectral_radius
}

/// Number of eigenvalues with |λ| above the tolerance.
///
/// `tol = None` uses [`default_rank_tol`].
pub fn numeric_rank(m: &Array2<f64>, tol: Option<f64>) -> Result<usize> {
    let spectrum = eigh(m)?;
    let tol = tol.unwrap_or_else(|| default_rank_tol(spectrum.len(), spectrum.spectral_radius()));
    Ok(spectrum
        .eigenvalues
        .iter()
        .filter(|lambda| lambda.abs() > tol)
        .count())
}

/// Rank of the column space of a (possibly rectangular) matrix, computed
/// from the Gram matrix: singular values above `tol` are counted.
pub fn column_space_rank(m: &Array2<f64>, tol: f64) -> Result<usize> {
    let gram = if m.nrows() <= m.ncols() {
        m.dot(&m.t())
    } else {
        m.t().dot(m)
    };
    let spectrum = eigh(&gram)?;
    // Gram eigenvalues are σ²; compare against tol².
    Ok(spectrum
        .eigenvalues
        .iter()
        .filter(|&&lambda| lambda > tol * tol)
        .count())
}

/// U diag(f(λᵢ)) Uᵀ.
pub fn apply_spectral_function<F: Fn(f64) -> f64>(s: &Spectrum, f: F) -> Array2<f64> {
    let n = s.len();
    let mut scaled = s.eigenvectors.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let fk = f(s.eigenvalues[k]);
        col.mapv_inplace(|x| x * fk);
    }
    let mut out = scaled.dot(&s.eigenvectors.t());
    // The product is symmetric in exact arithmetic; fold away rounding.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (out[[i, j]] + out[[j, i]]);
            out[[i, j]] = avg;
            out[[j, i]] = avg;
        }
    }
    out
}

/// ‖M‖₂ for symmetric M (largest |eigenvalue|).
pub fn spectral_norm_sym(m: &Array2<f64>) -> Result<f64> {
    Ok(eigh(m)?.spectral_radius())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn orthonormality_defect(s: &Spectrum) -> f64 {
        let n = s.len();
        let gram = s.eigenvectors.t().dot(&s.eigenvectors);
        max_abs_diff(&gram, &Array2::eye(n))
    }

    #[test]
    fn eigh_identity() {
        let s = eigh(&Array2::eye(3)).unwrap();
        for &lambda in &s.eigenvalues {
            assert!((lambda - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigh_diagonal_sorted_ascending() {
        let m = Array2::from_diag(&array![3.0, 1.0, 2.0]);
        let s = eigh(&m).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((s.eigenvalues[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_two_node_path_laplacian() {
        // Characteristic polynomial of [[1/2,1/2],[1/2,1/2]] is λ² − λ,
        // so the eigenvalues are 0 and 1.
        let m = array![[0.5, 0.5], [0.5, 0.5]];
        let s = eigh(&m).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(&s.reconstruct(), &m) < 1e-12);
    }

    #[test]
    fn eigh_rejects_asymmetric_with_magnitude() {
        let m = array![[1.0, 2.0], [0.5, 1.0]];
        match eigh(&m) {
            Err(Error::NotSymmetric { max_asymmetry }) => {
                assert!((max_asymmetry - 1.5).abs() < 1e-12);
            }
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn eigh_single_element() {
        let s = eigh(&array![[4.0]]).unwrap();
        assert!((s.eigenvalues[0] - 4.0).abs() < 1e-15);
        assert!((s.eigenvectors[[0, 0]].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let b = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let x = solve_spd(&Array2::eye(3), &b).unwrap();
        assert!(max_abs_diff(&x, &b) < 1e-14);
    }

    #[test]
    fn solve_scaled_identity_halves_rhs() {
        let b = array![[2.0], [4.0]];
        let x = solve_spd(&(2.0 * Array2::<f64>::eye(2)), &b).unwrap();
        assert!(max_abs_diff(&x, &(0.5 * &b)) < 1e-14);
    }

    #[test]
    fn solve_poisson_system_residual() {
        // (r²+1)I − 2rL̂ for the 2-node path at r = 0.5.
        let lhat = array![[0.5, 0.5], [0.5, 0.5]];
        let m = 1.25 * Array2::<f64>::eye(2) - 1.0 * &lhat;
        let b = Array2::eye(2);
        let x = solve_spd(&m, &b).unwrap();
        let residual = max_abs_diff(&m.dot(&x), &b);
        assert!(residual <= 1e-8 * max_abs(&b), "residual {residual:e}");
    }

    #[test]
    fn solve_rejects_indefinite_with_pivot() {
        // Eigenvalues 3 and −1; the second pivot goes non-positive.
        let m = array![[1.0, 2.0], [2.0, 1.0]];
        match solve_spd(&m, &Array2::eye(2)) {
            Err(Error::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert!(value <= 0.0);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn power_zero_is_identity() {
        let m = array![[3.0, 1.0], [1.0, -2.0]];
        assert!(max_abs_diff(&matrix_power(&m, 0), &Array2::eye(2)) < 1e-15);
    }

    #[test]
    fn power_of_idempotent_is_fixed() {
        let m = array![[0.5, 0.5], [0.5, 0.5]];
        assert!(max_abs_diff(&matrix_power(&m, 2), &m) < 1e-15);
        assert!(max_abs_diff(&matrix_power(&m, 5), &m) < 1e-14);
    }

    #[test]
    fn power_of_diagonal() {
        let m = Array2::from_diag(&array![2.0, 3.0]);
        let expected = Array2::from_diag(&array![8.0, 27.0]);
        assert!(max_abs_diff(&matrix_power(&m, 3), &expected) < 1e-12);
    }

    #[test]
    fn idempotency_defect_examples() {
        assert!(idempotency_defect(&Array2::eye(4)) < 1e-15);
        let n = 5usize;
        let uniform = Array2::from_elem((n, n), 1.0 / n as f64);
        assert!(idempotency_defect(&uniform) < 1e-15);
        let twice = 2.0 * Array2::<f64>::eye(3);
        assert!((idempotency_defect(&twice) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rank_and_trace_examples() {
        let eye = Array2::<f64>::eye(6);
        assert_eq!(numeric_rank(&eye, None).unwrap(), 6);
        assert!((trace(&eye) - 6.0).abs() < 1e-15);
        let zero = Array2::<f64>::zeros((4, 4));
        assert_eq!(numeric_rank(&zero, Some(1e-12)).unwrap(), 0);
    }

    #[test]
    fn spectral_function_examples() {
        let m = array![[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        let s = eigh(&m).unwrap();
        assert!(max_abs_diff(&apply_spectral_function(&s, |x| x), &m) < 1e-10);
        assert!(max_abs_diff(&apply_spectral_function(&s, |_| 1.0), &Array2::eye(3)) < 1e-10);

        let cubed = apply_spectral_function(&s, |x| x.powi(3));
        let scale = max_abs(&cubed).max(1.0);
        assert!(max_abs_diff(&cubed, &matrix_power(&m, 3)) <= 1e-7 * scale);
    }

    #[test]
    fn column_space_rank_of_outer_product() {
        let v = array![[1.0], [2.0], [3.0]];
        let outer = v.dot(&v.t());
        assert_eq!(column_space_rank(&outer, 1e-8).unwrap(), 1);
        let tall = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert_eq!(column_space_rank(&tall, 1e-8).unwrap(), 2);
    }

    fn symmetric_from_seed(n: usize, entries: &[f64]) -> Array2<f64> {
        let mut m = Array2::zeros((n, n));
        let mut it = entries.iter().copied().cycle();
        for i in 0..n {
            for j in i..n {
                let x = it.next().unwrap();
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        m
    }

    proptest! {
        #[test]
        fn prop_eigh_reconstructs(
            n in 1usize..16,
            entries in prop::collection::vec(-5.0f64..5.0, 1..200),
        ) {
            let m = symmetric_from_seed(n, &entries);
            let s = eigh(&m).unwrap();
            let scale = max_abs(&m).max(1e-30);
            prop_assert!(max_abs_diff(&s.reconstruct(), &m) <= 1e-8 * scale);
            prop_assert!(orthonormality_defect(&s) <= 1e-8);
            for k in 1..n {
                prop_assert!(s.eigenvalues[k] >= s.eigenvalues[k - 1]);
            }
        }

        #[test]
        fn prop_solve_spd_residual(
            n in 1usize..10,
            entries in prop::collection::vec(-2.0f64..2.0, 1..100),
            rhs in prop::collection::vec(-3.0f64..3.0, 1..40),
        ) {
            // AᵀA + nI is safely positive definite.
            let a = symmetric_from_seed(n, &entries);
            let m = a.t().dot(&a) + n as f64 * Array2::<f64>::eye(n);
            let mut b = Array2::zeros((n, 2));
            let mut it = rhs.iter().copied().cycle();
            for i in 0..n {
                for j in 0..2 {
                    b[[i, j]] = it.next().unwrap();
                }
            }
            let x = solve_spd(&m, &b).unwrap();
            let scale = max_abs(&b).max(1e-30);
            prop_assert!(max_abs_diff(&m.dot(&x), &b) <= 1e-8 * scale);
        }

        #[test]
        fn prop_matrix_power_matches_spectral_map(
            n in 1usize..8,
            entries in prop::collection::vec(-1.0f64..1.0, 1..60),
            k in 0u32..8,
        ) {
            let m = symmetric_from_seed(n, &entries);
            let s = eigh(&m).unwrap();
            let via_spectrum = apply_spectral_function(&s, |x| x.powi(k as i32));
            let direct = matrix_power(&m, k);
            let scale = max_abs(&direct).max(1.0);
            prop_assert!(max_abs_diff(&via_spectrum, &direct) <= 1e-7 * scale);
        }
    }
}
