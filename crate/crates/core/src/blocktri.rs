//! Symmetric block-tridiagonal matrices.
//!
//! Hessians of discrete actions with fixed ends have this shape: one n×n
//! diagonal block per interior point and one coupling block between
//! neighbours. Factorization and inertia counts run in `O(k n³)`.

use nalgebra::{DMatrix, DVector};

use crate::linalg;

#[derive(Clone, Debug)]
pub struct BlockTridiagonal {
    /// Diagonal blocks `H[i][i]`.
    pub diag: Vec<DMatrix<f64>>,
    /// Coupling blocks `H[i][i+1]`; `H[i+1][i]` is the transpose.
    pub upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<DMatrix<f64>>, upper: Vec<DMatrix<f64>>) -> Self {
        assert!(diag.is_empty() || upper.len() + 1 == diag.len());
        Self { diag, upper }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_size(&self) -> usize {
        self.diag.first().map_or(0, |d| d.nrows())
    }

    pub fn dim(&self) -> usize {
        self.blocks() * self.block_size()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block_size();
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, d) in self.diag.iter().enumerate() {
            m.view_mut((i * n, i * n), (n, n)).copy_from(d);
        }
        for (i, u) in self.upper.iter().enumerate() {
            m.view_mut((i * n, (i + 1) * n), (n, n)).copy_from(u);
            m.view_mut(((i + 1) * n, i * n), (n, n)).copy_from(&u.transpose());
        }
        m
    }

    /// Largest absolute entry, used as a scale for tolerances.
    pub fn scale(&self) -> f64 {
        self.diag
            .iter()
            .chain(self.upper.iter())
            .map(linalg::max_abs_entry)
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.block_size();
        let k = self.blocks();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in 0..k {
            for r in 0..n {
                let center = self.diag[b][(r, r)];
                let mut radius = 0.0;
                for c in 0..n {
                    if c != r {
                        radius += self.diag[b][(r, c)].abs();
                    }
                }
                if b + 1 < k {
                    radius += self.upper[b].row(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                if b > 0 {
                    radius += self.upper[b - 1].column(r).iter().map(|v| v.abs()).sum::<f64>();
                }
                lo = lo.min(center - radius);
                hi = hi.max(center + radius);
            }
        }
        (lo, hi)
    }

    /// Solve `(H + shift·I) x = rhs` by block Cholesky. `None` if the shifted
    /// matrix is not positive definite.
    pub fn solve_shifted(&self, shift: f64, rhs: &[DVector<f64>]) -> Option<Vec<DVector<f64>>> {
        let k = self.blocks();
        let n = self.block_size();
        let eye = DMatrix::<f64>::identity(n, n);
        let mut l_diag: Vec<DMatrix<f64>> = Vec::with_capacity(k);
        let mut l_sub: Vec<DMatrix<f64>> = Vec::with_capacity(k.saturating_sub(1));
        for i in 0..k {
            let mut a = &self.diag[i] + &eye * shift;
            if i > 0 {
                // L_{i,i-1} = U_{i-1}ᵀ L_{i-1,i-1}⁻ᵀ
                let lprev = &l_diag[i - 1];
                let ut = self.upper[i - 1].transpose();
                let sol = lprev.solve_lower_triangular(&ut.transpose())?;
                let sub = sol.transpose();
                a -= &sub * sub.transpose();
                l_sub.push(sub);
            }
            let chol = nalgebra::Cholesky::new(linalg::symmetrize(&a))?;
            l_diag.push(chol.l());
        }
        // Forward: L z = r.
        let mut z: Vec<DVector<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut r = rhs[i].clone();
            if i > 0 {
                r -= &l_sub[i - 1] * &z[i - 1];
            }
            z.push(l_diag[i].solve_lower_triangular(&r)?);
        }
        // Backward: Lᵀ x = z.
        let mut x = vec![DVector::zeros(n); k];
        for i in (0..k).rev() {
            let mut r = z[i].clone();
            if i + 1 < k {
                r -= l_sub[i].transpose() * &x[i + 1];
            }
            x[i] = l_diag[i].transpose().solve_upper_triangular(&r)?;
        }
        Some(x)
    }

    pub fn mul_vec(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let k = self.blocks();
        (0..k)
            .map(|i| {
                let mut y = &self.diag[i] * &x[i];
                if i + 1 < k {
                    y += &self.upper[i] * &x[i + 1];
                }
                if i > 0 {
                    y += self.upper[i - 1].transpose() * &x[i - 1];
                }
                y
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `lambda`, by Sylvester's law of
    /// inertia applied to the block LDLᵀ factorization of `H − λI`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let k = self.blocks();
        let n = self.block_size();
        let eye = DMatrix::<f64>::identity(n, n);
        let mut count = 0;
        // Inverse of the previous pivot. A zero pivot eigenvalue is replaced
        // by a tiny positive one, as in the scalar Sturm count.
        let mut prev_inv: Option<DMatrix<f64>> = None;
        let tiny = 1e-14 * (1.0 + self.scale() + lambda.abs());
        for i in 0..k {
            let mut t = &self.diag[i] - &eye * lambda;
            if let Some(inv) = &prev_inv {
                let u = &self.upper[i - 1];
                t -= u.transpose() * inv * u;
            }
            let e = linalg::SortedEigen::new(&t);
            let mut inv = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut v = e.values[j];
                if v.abs() < tiny {
                    v = tiny;
                }
                if v < 0.0 {
                    count += 1;
                }
                let c = e.vectors.column(j);
                inv += c * c.transpose() / v;
            }
            prev_inv = Some(inv);
        }
        count
    }

    /// Smallest eigenvalue by bisection on the inertia count.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.blocks() == 0 {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = self.gershgorin();
        let tol = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(k: usize) -> BlockTridiagonal {
        let d = vec![DMatrix::from_element(1, 1, 2.0); k];
        let u = vec![DMatrix::from_element(1, 1, -1.0); k - 1];
        BlockTridiagonal::new(d, u)
    }

    #[test]
    fn laplacian_min_eigenvalue() {
        // k interior points of a path with k+1 edges.
        for k in [1usize, 3, 9, 40] {
            let h = laplacian(k);
            let want = 2.0 - 2.0 * (std::f64::consts::PI / (k as f64 + 1.0)).cos();
            assert!((h.min_eigenvalue() - want).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn solve_matches_dense() {
        let d = vec![
            DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]),
            DMatrix::from_row_slice(2, 2, &[5.0, 0.5, 0.5, 4.0]),
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 3.0]),
        ];
        let u = vec![
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.1, -1.0]),
            DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.3, -1.0]),
        ];
        let h = BlockTridiagonal::new(d, u);
        let rhs: Vec<DVector<f64>> = (0..3)
            .map(|i| DVector::from_vec(vec![i as f64 + 1.0, -(i as f64)]))
            .collect();
        let x = h.solve_shifted(0.0, &rhs).unwrap();
        let back = h.mul_vec(&x);
        for i in 0..3 {
            assert!((&back[i] - &rhs[i]).norm() < 1e-12);
        }
        let dense_min = linalg::min_eigenvalue(&h.to_dense());
        assert!((h.min_eigenvalue() - dense_min).abs() < 1e-10);
    }

    #[test]
    fn indefinite_is_rejected() {
        let d = vec![DMatrix::from_element(1, 1, 1.0); 2];
        let u = vec![DMatrix::from_element(1, 1, -2.0)];
        let h = BlockTridiagonal::new(d, u);
        assert!(h.solve_shifted(0.0, &[DVector::zeros(1), DVector::zeros(1)]).is_none());
        assert!((h.min_eigenvalue() + 1.0).abs() < 1e-11);
    }
}
