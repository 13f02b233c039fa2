//! Small dense linear-algebra helpers shared by the rest of the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices. Dimensions in this
//! crate are tiny (2n ≤ 8 for the phase space) so clarity wins over speed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative slack used by every PSD / PD test in the crate.
pub const PSD_SLACK: f64 = 1e-9;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
#[derive(Clone, Debug)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let sym = symmetrize(m);
        let n = sym.nrows();
        if n == 0 {
            return Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(sym);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (j, &i) in idx.iter().enumerate() {
            vectors.set_column(j, &eig.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn sym_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SortedEigen::new(m).max_abs()
}

/// Spectral norm of an arbitrary matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |a, &s| a.max(s))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SortedEigen::new(m).min()
}

/// PSD test with slack `-PSD_SLACK * ‖m‖`.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    let e = SortedEigen::new(m);
    e.min() >= -PSD_SLACK * e.max_abs()
}

/// Strict positive definiteness: smallest eigenvalue above `PSD_SLACK * ‖m‖`
/// and strictly positive.
pub fn is_pd(m: &DMatrix<f64>) -> bool {
    let e = SortedEigen::new(m);
    e.min() > PSD_SLACK * e.max_abs() && e.min() > 0.0
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix with relative rank cutoff.
pub fn sym_pinv(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let e = SortedEigen::new(m);
    let cut = rel_cutoff * e.max_abs();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let l = e.values[i];
        if l.abs() > cut && l != 0.0 {
            let v = e.vectors.column(i);
            out += v * v.transpose() / l;
        }
    }
    out
}

/// Orthonormal basis (columns) of the column space of `m`, rank decided by a
/// relative singular-value cutoff.
pub fn orthonormal_basis(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd with u");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    let mut cols = Vec::new();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    for i in order {
        if svd.singular_values[i] > rel_cutoff * smax && svd.singular_values[i] > 0.0 {
            cols.push(u.column(i).into_owned());
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormalize the columns of a full-rank matrix (thin QR).
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    qr.q()
}

/// Sines of the principal angles between the column spans of `a` and `b`,
/// sorted ascending. Both inputs must have full column rank.
pub fn principal_angle_sines(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let proj = &qa * qa.transpose();
    let resid = &qb - &proj * &qb;
    let mut s: Vec<f64> = resid
        .svd(false, false)
        .singular_values
        .iter()
        .map(|v| v.min(1.0))
        .collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Smallest principal angle (as its sine) between two subspaces.
pub fn min_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    principal_angle_sines(a, b).first().copied().unwrap_or(1.0)
}

/// Symmetric positive semidefinite square root.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SortedEigen::new(m);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let v = e.vectors.column(i);
        out += v * v.transpose() * e.values[i].max(0.0).sqrt();
    }
    out
}

/// Inertia (positive, negative, zero) counts with an absolute zero threshold.
pub fn inertia(m: &DMatrix<f64>, zero_tol: f64) -> (usize, usize, usize) {
    let e = SortedEigen::new(m);
    let mut pos = 0;
    let mut neg = 0;
    let mut zero = 0;
    for &v in e.values.iter() {
        if v > zero_tol {
            pos += 1;
        } else if v < -zero_tol {
            neg += 1;
        } else {
            zero += 1;
        }
    }
    (pos, neg, zero)
}

pub fn max_abs_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Horizontal stacking of two blocks with equal row count.
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Vertical stacking of two blocks with equal column count.
pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    out
}

/// Assemble a 2×2 block matrix from n×n blocks.
pub fn block2(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    vstack(&hstack(a, b), &hstack(c, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_rank_one() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let m = &v * v.transpose();
        let p = sym_pinv(&m, 1e-10);
        // pinv(vvᵀ) = vvᵀ/‖v‖⁴
        let expect = &m / 25.0;
        assert!((p - expect).norm() < 1e-14);
    }

    #[test]
    fn principal_angles_of_axes() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        assert!((min_principal_sine(&a, &b) - 1.0).abs() < 1e-15);
        assert!(min_principal_sine(&a, &a) < 1e-15);
    }

    #[test]
    fn sorted_eigen_is_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let e = SortedEigen::new(&m);
        assert_eq!(e.values.as_slice(), &[-1.0, 2.0, 3.0]);
    }
}
