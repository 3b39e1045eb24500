//! Seeded random matrices and affine-subspace geometry.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// A `rows × cols` matrix with i.i.d. standard normal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMatrix(DMatrix<f64>);

impl GaussianMatrix {
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// A square matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `‖QᵀQ − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthonormality_defect(&self.0)
    }
}

/// `‖MᵀM − I‖_F` for a matrix with (supposedly) orthonormal columns.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    (gram - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

fn standard_normal_matrix(rng: &RngState, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut g = rng.generator();
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut g)).collect();
    DMatrix::from_vec(rows, cols, data)
}

/// Draws a `rows × cols` Gaussian matrix. Requires `1 ≤ cols ≤ rows`.
pub fn gen_gaussian(rng: &RngState, rows: usize, cols: usize) -> Result<GaussianMatrix> {
    if cols == 0 || cols > rows {
        return Err(Error::dim(format!(
            "gaussian matrix needs 1 <= d <= D, got D={rows}, d={cols}"
        )));
    }
    Ok(GaussianMatrix(standard_normal_matrix(rng, rows, cols)))
}

/// Gaussian matrix without the `cols ≤ rows` restriction; used where a wide
/// matrix is meaningful (e.g. projected `d_e × d` blocks with `d > d_e`).
pub fn gen_gaussian_any(rng: &RngState, rows: usize, cols: usize) -> Result<GaussianMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::dim(format!("empty gaussian matrix {rows}x{cols}")));
    }
    Ok(GaussianMatrix(standard_normal_matrix(rng, rows, cols)))
}

/// QR of a tall Gaussian matrix with the sign of each column flipped so
/// that `R` has a positive diagonal. The resulting `Q` factor is Haar.
fn sign_fixed_q(g: DMatrix<f64>) -> DMatrix<f64> {
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Haar-distributed `dim × dim` orthogonal matrix.
pub fn gen_haar_orthogonal(rng: &RngState, dim: usize) -> Result<OrthogonalMatrix> {
    if dim == 0 {
        return Err(Error::dim("orthogonal matrix needs D >= 1"));
    }
    let g = standard_normal_matrix(rng, dim, dim);
    Ok(OrthogonalMatrix(sign_fixed_q(g)))
}

/// `dim × k` matrix with orthonormal columns, distributed as the first `k`
/// columns of a Haar orthogonal matrix.
pub fn gen_haar_frame(rng: &RngState, dim: usize, k: usize) -> Result<DMatrix<f64>> {
    if k == 0 || k > dim {
        return Err(Error::dim(format!("frame needs 1 <= k <= D, got D={dim}, k={k}")));
    }
    let g = standard_normal_matrix(rng, dim, k);
    Ok(sign_fixed_q(g))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceDistance {
    pub distance: f64,
    pub argmin: Vec<f64>,
    /// Set when `A` was numerically rank deficient and the minimum-norm
    /// least-squares solution was used.
    pub rank_deficient: bool,
}

const RANK_TOL: f64 = 1e-12;

/// Distance from `q` to the affine subspace `p + range(A)`, together with
/// the minimizing coefficients `y`.
pub fn affine_subspace_distance(
    a: &DMatrix<f64>,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<SubspaceDistance> {
    let (rows, cols) = a.shape();
    if p.len() != rows || q.len() != rows {
        return Err(Error::dim(format!(
            "A is {rows}x{cols} but p, q have lengths {}, {}",
            p.len(),
            q.len()
        )));
    }
    if cols == 0 {
        return Err(Error::dim("A has no columns"));
    }
    let b = q - p;

    if cols <= rows {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let diag_min = r.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if diag_max > 0.0 && diag_min > RANK_TOL * diag_max {
            let qf = qr.q();
            let coeffs = qf.transpose() * &b;
            let residual = &b - &qf * &coeffs;
            let y = r
                .solve_upper_triangular(&coeffs)
                .ok_or_else(|| Error::Precondition("triangular solve failed".into()))?;
            return Ok(SubspaceDistance {
                distance: residual.norm(),
                argmin: y.as_slice().to_vec(),
                rank_deficient: false,
            });
        }
    }

    // Rank deficient (or wide): minimum-norm solution through the SVD.
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (RANK_TOL * smax).max(f64::MIN_POSITIVE);
    let y = svd
        .solve(&b, eps)
        .map_err(|e| Error::Precondition(format!("svd solve failed: {e}")))?;
    let residual = &b - a * &y;
    Ok(SubspaceDistance {
        distance: residual.norm(),
        argmin: y.as_slice().to_vec(),
        rank_deficient: cols > rows || svd.rank(eps) < cols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn gaussian_is_deterministic() {
        let s = RngState::new(42, 0);
        let a = gen_gaussian(&s, 30, 4).unwrap();
        let b = gen_gaussian(&s, 30, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_rejects_bad_dims() {
        let s = RngState::from_seed(0);
        assert!(matches!(gen_gaussian(&s, 3, 4), Err(Error::Dimension(_))));
        assert!(matches!(gen_gaussian(&s, 3, 0), Err(Error::Dimension(_))));
        assert!(gen_haar_orthogonal(&s, 0).is_err());
    }

    #[test]
    fn gaussian_sample_moments() {
        let a = gen_gaussian(&RngState::new(1, 1), 1000, 3).unwrap();
        let n = 3000.0;
        let mean = a.matrix().iter().sum::<f64>() / n;
        let var = a.matrix().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.15, "var {var}");
    }

    #[test]
    fn projected_gaussian_passes_ks() {
        // Entries of UᵀA for orthonormal U are again standard normal.
        let dim = 40;
        let u = gen_haar_frame(&RngState::new(5, 0), dim, 4).unwrap();
        let mut pooled = Vec::new();
        let mut t = 0;
        while pooled.len() < 10_000 {
            let a = gen_gaussian(&RngState::new(5, 100 + t), dim, 5).unwrap();
            pooled.extend((u.transpose() * a.matrix()).iter().copied());
            t += 1;
        }
        pooled.truncate(10_000);
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = pooled.len() as f64;
        let ks = pooled
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = normal.cdf(x);
                (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic two-sided critical value at level 0.01.
        assert!(ks < 1.628 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn haar_one_dim_takes_both_signs() {
        let mut plus = 0;
        let mut minus = 0;
        for i in 0..1000 {
            let q = gen_haar_orthogonal(&RngState::new(3, i), 1).unwrap();
            let x = q.matrix()[(0, 0)];
            assert_eq!(x.abs(), 1.0);
            if x > 0.0 {
                plus += 1
            } else {
                minus += 1
            }
        }
        assert!(plus > 0 && minus > 0);
    }

    #[test]
    fn haar_is_orthogonal() {
        for dim in [1, 2, 7, 50] {
            let q = gen_haar_orthogonal(&RngState::new(11, dim as u64), dim).unwrap();
            assert!(q.orthogonality_defect() <= 1e-12, "D={dim}");
        }
    }

    #[test]
    fn haar_first_column_is_centered() {
        let dim = 5;
        let draws = 10_000;
        let mean = (0..draws)
            .map(|i| gen_haar_orthogonal(&RngState::new(8, i), dim).unwrap().matrix()[(0, 0)])
            .sum::<f64>()
            / draws as f64;
        assert!(mean.abs() <= 4.0 / ((draws * dim as u64) as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn distance_examples() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let d = affine_subspace_distance(&a, &v(&[0.0, 0.0]), &v(&[0.0, 3.0])).unwrap();
        assert!((d.distance - 3.0).abs() < 1e-15);
        assert!(d.argmin[0].abs() < 1e-15);

        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let d = affine_subspace_distance(&a, &v(&[0.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((d.distance - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((d.argmin[0] - 0.5).abs() < 1e-12);

        let a = gen_gaussian(&RngState::from_seed(2), 4, 4).unwrap();
        let d = affine_subspace_distance(a.matrix(), &v(&[1.0, 2.0, 3.0, 4.0]), &v(&[-3.0, 0.5, 9.0, 1.0])).unwrap();
        assert!(d.distance < 1e-12);
    }

    #[test]
    fn rank_deficient_uses_min_norm() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let d = affine_subspace_distance(&a, &v(&[0.0; 3]), &v(&[1.0, 0.0, 2.0])).unwrap();
        assert!(d.rank_deficient);
        assert!((d.distance - 2.0).abs() < 1e-12);
        // minimum-norm split of x = 1 over columns (1,0,0) and (2,0,0)
        assert!((d.argmin[0] - 0.2).abs() < 1e-12 && (d.argmin[1] - 0.4).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distance_to_anchor_is_zero(seed in 0u64..1000, dim in 2usize..12, k in 1usize..4) {
            let k = k.min(dim);
            let a = gen_gaussian(&RngState::new(seed, 0), dim, k).unwrap();
            let p = gen_gaussian(&RngState::new(seed, 1), dim, 1).unwrap().into_inner().column(0).into_owned();
            let d = affine_subspace_distance(a.matrix(), &p, &p).unwrap();
            prop_assert!(d.distance <= 1e-12);
        }

        #[test]
        fn distance_invariant_under_reparametrization(seed in 0u64..1000, dim in 3usize..12, k in 1usize..3) {
            let a = gen_gaussian(&RngState::new(seed, 0), dim, k).unwrap().into_inner();
            let m = gen_gaussian(&RngState::new(seed, 1), k, k).unwrap().into_inner();
            prop_assume!(m.determinant().abs() > 1e-3);
            let p = DVector::from_column_slice(gen_gaussian(&RngState::new(seed, 2), dim, 1).unwrap().matrix().as_slice());
            let q = DVector::from_column_slice(gen_gaussian(&RngState::new(seed, 3), dim, 1).unwrap().matrix().as_slice());
            let d1 = affine_subspace_distance(&a, &p, &q).unwrap().distance;
            let d2 = affine_subspace_distance(&(&a * &m), &p, &q).unwrap().distance;
            prop_assert!((d1 - d2).abs() <= 1e-9 * d1.max(1.0));
        }

        #[test]
        fn distance_invariant_under_rotation(seed in 0u64..1000, dim in 2usize..12, k in 1usize..3) {
            let k = k.min(dim);
            let a = gen_gaussian(&RngState::new(seed, 0), dim, k).unwrap().into_inner();
            let rot = gen_haar_orthogonal(&RngState::new(seed, 9), dim).unwrap().into_inner();
            let p = DVector::from_column_slice(gen_gaussian(&RngState::new(seed, 2), dim, 1).unwrap().matrix().as_slice());
            let q = DVector::from_column_slice(gen_gaussian(&RngState::new(seed, 3), dim, 1).unwrap().matrix().as_slice());
            let d1 = affine_subspace_distance(&a, &p, &q).unwrap().distance;
            let d2 = affine_subspace_distance(&(&rot * &a), &(&rot * &p), &(&rot * &q)).unwrap().distance;
            prop_assert!((d1 - d2).abs() <= 1e-9 * d1.max(1.0));
        }

        #[test]
        fn interleaved_streams_do_not_interfere(seed in 0u64..1000) {
            let sa = RngState::new(seed, 1);
            let sq = RngState::new(seed, 2);
            let a1 = gen_gaussian(&sa, 6, 2).unwrap();
            let q1 = gen_haar_orthogonal(&sq, 4).unwrap();
            let q2 = gen_haar_orthogonal(&sq, 4).unwrap();
            let a2 = gen_gaussian(&sa, 6, 2).unwrap();
            prop_assert_eq!(a1, a2);
            prop_assert_eq!(q1, q2);
        }
    }
}
