//! Linear symplectic algebra on ℝ²ⁿ.
//!
//! Coordinates are ordered `(q₁..qₙ, p₁..pₙ)` and the form is
//! `ω = Σ dqᵢ ∧ dpᵢ`, so `ω(v, w) = vᵀ J w` with `J = [[0, I], [-I, 0]]`.
//! The compatible complex structure is `-J`, which makes the induced metric
//! the Euclidean one; graph matrices throughout the crate are taken in this
//! fixed frame.
//!
//! The order on Lagrangian subspaces transverse to the vertical is the one
//! induced by the relative quadratic form `q(L₁, V; L₂)`: `L₁ < L₂` when the
//! form is positive definite, `L₁ ≤ L₂` when it is positive semidefinite.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, SortedEigen, PSD_SLACK};

/// Smallest principal angle (as a sine) below which two subspaces are
/// considered to intersect.
pub const TRANSVERSE_TOL: f64 = 1e-10;

/// Band-widening constant `√13/3 − 5/6`.
pub fn c0() -> f64 {
    13f64.sqrt() / 3.0 - 5.0 / 6.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("subspaces are not transverse (smallest principal sine {sine:e})")]
    NotTransverse { sine: f64 },
    #[error("Lagrangian frame is not transverse to the vertical (sine {sine:e})")]
    VerticalNotTransverse { sine: f64 },
    #[error("subspace is not coisotropic: |ω(R, E)| = {defect:e}")]
    NotCoisotropic { defect: f64 },
    #[error("matrices are not ordered: min eigenvalue of upper - lower is {min_eig:e}")]
    NotOrdered { min_eig: f64 },
    #[error("hypothesis {which} violated by {slack:e} at K = {k:?}")]
    HypothesisViolated { which: u8, k: Vec<f64>, slack: f64 },
    #[error("frame is not Lagrangian: {reason}")]
    NotLagrangian { reason: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, SymplecticError>;

/// The standard symplectic vector space ℝ²ⁿ.
#[derive(Clone, Debug)]
pub struct SymplecticSpace {
    n: usize,
    form: DMatrix<f64>,
    complex_structure: DMatrix<f64>,
}

impl SymplecticSpace {
    pub fn new(n: usize) -> Self {
        let form = standard_form(n);
        let complex_structure = -form.clone();
        Self {
            n,
            form,
            complex_structure,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn form_matrix(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn complex_structure(&self) -> &DMatrix<f64> {
        &self.complex_structure
    }

    pub fn omega(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (v.transpose() * &self.form * w)[(0, 0)]
    }

    /// Riemannian metric `(v, u) = ω(v, J u)`.
    pub fn metric(&self, v: &DVector<f64>, u: &DVector<f64>) -> f64 {
        self.omega(v, &(&self.complex_structure * u))
    }

    /// Matrix of the metric; the identity for the standard structure.
    pub fn metric_matrix(&self) -> DMatrix<f64> {
        &self.form * &self.complex_structure
    }

    pub fn is_symplectic(&self, m: &DMatrix<f64>, tol: f64) -> bool {
        symplectic_defect(m) <= tol
    }
}

/// `J = [[0, I], [-I, 0]]`.
pub fn standard_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `max |MᵀJM − J|`.
pub fn symplectic_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let j = standard_form(n);
    linalg::max_abs_entry(&(m.transpose() * &j * m - j))
}

/// Inverse of a symplectic matrix, `M⁻¹ = -J Mᵀ J`.
pub fn symplectic_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let j = standard_form(n);
    -(&j * m.transpose() * &j)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Frame,
    GraphOverHorizontal(DMatrix<f64>),
}

/// A Lagrangian subspace of ℝ²ⁿ given by a 2n×n spanning matrix.
#[derive(Clone, Debug)]
pub struct LagrangianFrame {
    columns: DMatrix<f64>,
    representation: Representation,
}

impl LagrangianFrame {
    /// Wrap a spanning matrix, checking rank and isotropy.
    pub fn from_frame(columns: DMatrix<f64>) -> Result<Self> {
        let rows = columns.nrows();
        let n = columns.ncols();
        if rows != 2 * n {
            return Err(SymplecticError::Dimension(format!(
                "frame is {rows}×{n}, expected 2n×n"
            )));
        }
        let sv = columns.clone().svd(false, false).singular_values;
        let smax = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
        let smin = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
        if n > 0 && (smax == 0.0 || smin <= TRANSVERSE_TOL * smax) {
            return Err(SymplecticError::NotLagrangian {
                reason: "frame is rank deficient".into(),
            });
        }
        let j = standard_form(n);
        let iso = linalg::max_abs_entry(&(columns.transpose() * j * &columns));
        if iso > 1e-12 * smax * smax.max(1.0) * 10.0 {
            return Err(SymplecticError::NotLagrangian {
                reason: format!("isotropy defect {iso:e}"),
            });
        }
        Ok(Self {
            columns,
            representation: Representation::Frame,
        })
    }

    /// Graph `{(v, W v)}` of a symmetric matrix.
    pub fn graph(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(SymplecticError::Dimension("graph matrix is not square".into()));
        }
        let asym = linalg::max_abs_entry(&(&w - w.transpose()));
        if asym > 1e-12 * (1.0 + linalg::max_abs_entry(&w)) {
            return Err(SymplecticError::NotLagrangian {
                reason: format!("graph matrix asymmetric by {asym:e}"),
            });
        }
        let w = linalg::symmetrize(&w);
        let columns = linalg::vstack(&DMatrix::identity(n, n), &w);
        Ok(Self {
            columns,
            representation: Representation::GraphOverHorizontal(w),
        })
    }

    pub fn horizontal(n: usize) -> Self {
        Self::graph(DMatrix::zeros(n, n)).expect("zero graph")
    }

    pub fn vertical(n: usize) -> Self {
        let columns = linalg::vstack(&DMatrix::zeros(n, n), &DMatrix::identity(n, n));
        Self {
            columns,
            representation: Representation::Frame,
        }
    }

    pub fn n(&self) -> usize {
        self.columns.ncols()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    /// Image under a linear map (no Lagrangian re-check; symplectic maps
    /// preserve the property).
    pub fn mapped(&self, m: &DMatrix<f64>) -> Self {
        Self {
            columns: m * &self.columns,
            representation: Representation::Frame,
        }
    }

    pub fn min_sine_to(&self, other: &LagrangianFrame) -> f64 {
        linalg::min_principal_sine(&self.columns, &other.columns)
    }

    pub fn is_transverse_to(&self, other: &LagrangianFrame) -> bool {
        self.min_sine_to(other) >= TRANSVERSE_TOL
    }

    /// Symmetric matrix `W` with `self = graph(W)`.
    pub fn graph_matrix(&self) -> Result<DMatrix<f64>> {
        if let Representation::GraphOverHorizontal(w) = &self.representation {
            return Ok(w.clone());
        }
        let n = self.n();
        let sine = self.min_sine_to(&Self::vertical(n));
        if sine < TRANSVERSE_TOL {
            return Err(SymplecticError::VerticalNotTransverse { sine });
        }
        let top = self.columns.rows(0, n).into_owned();
        let bottom = self.columns.rows(n, n).into_owned();
        let inv = top
            .try_inverse()
            .ok_or(SymplecticError::VerticalNotTransverse { sine })?;
        Ok(linalg::symmetrize(&(bottom * inv)))
    }

    /// Same subspace re-expressed as a graph over the horizontal.
    pub fn to_graph(&self) -> Result<Self> {
        Self::graph(self.graph_matrix()?)
    }

    pub fn isotropy_defect(&self) -> f64 {
        let j = standard_form(self.n());
        linalg::max_abs_entry(&(self.columns.transpose() * j * &self.columns))
    }
}

/// Matrix of `q(L₁, L₂; L)` in the basis given by the columns of `l1`.
///
/// `L` is the graph of a linear map `ℓ: L₁ → L₂`; the form is
/// `v ↦ ω(v, ℓ(v))`.
pub fn relative_form(l1: &LagrangianFrame, l2: &LagrangianFrame, l: &LagrangianFrame) -> Result<DMatrix<f64>> {
    let n = l1.n();
    if l2.n() != n || l.n() != n {
        return Err(SymplecticError::Dimension("frames of different size".into()));
    }
    let s12 = l1.min_sine_to(l2);
    if s12 < TRANSVERSE_TOL {
        return Err(SymplecticError::NotTransverse { sine: s12 });
    }
    let s2 = l.min_sine_to(l2);
    if s2 < TRANSVERSE_TOL {
        return Err(SymplecticError::NotTransverse { sine: s2 });
    }
    // Solve e_i + L2 c_i = F d_i, i.e. [F, -L2] [d; c] = e_i.
    let system = linalg::hstack(l.columns(), &(-l2.columns()));
    let lu = system.lu();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        let rhs = l1.columns().column(i).into_owned();
        let sol = lu.solve(&rhs).ok_or(SymplecticError::NotTransverse { sine: s2 })?;
        c.set_column(i, &sol.rows(n, n));
    }
    let ell = l2.columns() * c;
    let j = standard_form(n);
    let b = l1.columns().transpose() * j * ell;
    Ok(linalg::symmetrize(&b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ConeMembership {
    InPositiveCone,
    OtherComponent { positive: usize, negative: usize },
    Degenerate,
}

/// Which connected component of the Lagrangians transverse to `l1` and `l2`
/// contains `l`; `InPositiveCone` is membership in `P(L₁, L₂)`.
pub fn cone_membership(l1: &LagrangianFrame, l2: &LagrangianFrame, l: &LagrangianFrame) -> Result<ConeMembership> {
    let s12 = l1.min_sine_to(l2);
    if s12 < TRANSVERSE_TOL {
        return Err(SymplecticError::NotTransverse { sine: s12 });
    }
    // L not transverse to L2 means L sits on the boundary of every component.
    if l.min_sine_to(l2) < TRANSVERSE_TOL {
        return Ok(ConeMembership::Degenerate);
    }
    let q = relative_form(l1, l2, l)?;
    Ok(classify_form(&q))
}

fn classify_form(q: &DMatrix<f64>) -> ConeMembership {
    let e = SortedEigen::new(q);
    let largest = e.max_abs();
    let smallest = e.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if largest == 0.0 || smallest <= 1e-10 * largest {
        return ConeMembership::Degenerate;
    }
    let positive = e.values.iter().filter(|&&v| v > 0.0).count();
    let negative = e.values.len() - positive;
    if negative == 0 {
        ConeMembership::InPositiveCone
    } else {
        ConeMembership::OtherComponent { positive, negative }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    StrictlyUnder,
    Under,
    Incomparable,
}

#[derive(Clone, Debug)]
pub struct ComparisonResult {
    pub relation: Relation,
    /// Matrix of `q(L₁, V; L₂)` in the basis of `L₁`.
    pub witness_form: DMatrix<f64>,
}

/// Compare two Lagrangian subspaces transverse to the vertical.
pub fn compare_under_vertical(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<ComparisonResult> {
    let n = l1.n();
    let v = LagrangianFrame::vertical(n);
    for l in [l1, l2] {
        let sine = l.min_sine_to(&v);
        if sine < TRANSVERSE_TOL {
            return Err(SymplecticError::VerticalNotTransverse { sine });
        }
    }
    let witness_form = relative_form(l1, &v, l2)?;
    let e = SortedEigen::new(&witness_form);
    // Equal subspaces give a form of pure rounding noise, so the slack is
    // floored by the scale of the frames.
    let frame_scale = linalg::spectral_norm(l1.columns()) * linalg::spectral_norm(l2.columns());
    let tol = PSD_SLACK * e.max_abs().max(frame_scale);
    let relation = if e.min() > tol && e.min() > 0.0 {
        Relation::StrictlyUnder
    } else if e.min() >= -tol {
        Relation::Under
    } else {
        Relation::Incomparable
    };
    Ok(ComparisonResult { relation, witness_form })
}

/// Reduction `F = E / R` of a coisotropic subspace `E` by `R = E^ω`.
///
/// Vectors of `F` are represented in a Darboux basis, so the reduced form is
/// the standard `J` of dimension `2(n − p)`.
#[derive(Clone, Debug)]
pub struct ReducedSpace {
    ambient: SymplecticSpace,
    /// Orthonormal basis (2n × 2m) of the Euclidean complement of R in E.
    complement: DMatrix<f64>,
    /// Ω in the coordinates given by `complement`.
    reduced_form: DMatrix<f64>,
    /// Darboux basis of F expressed in `complement` coordinates (2m × 2m).
    darboux: DMatrix<f64>,
    darboux_inv: DMatrix<f64>,
    r_basis: DMatrix<f64>,
    e_basis: DMatrix<f64>,
}

impl ReducedSpace {
    pub fn ambient(&self) -> &SymplecticSpace {
        &self.ambient
    }

    /// Dimension of the reduced space, `2(n − p)`.
    pub fn reduced_dim(&self) -> usize {
        self.complement.ncols()
    }

    pub fn half_dim(&self) -> usize {
        self.reduced_dim() / 2
    }

    pub fn reduced_form(&self) -> &DMatrix<f64> {
        &self.reduced_form
    }

    /// Matrix of the projection `p: E → F` (Darboux coordinates), valid on E.
    pub fn projection(&self) -> DMatrix<f64> {
        &self.darboux_inv * self.complement.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.projection() * v
    }

    /// Lift of Darboux coordinates to a representative in E.
    pub fn lift(&self) -> DMatrix<f64> {
        &self.complement * &self.darboux
    }

    pub fn e_basis(&self) -> &DMatrix<f64> {
        &self.e_basis
    }

    pub fn r_basis(&self) -> &DMatrix<f64> {
        &self.r_basis
    }

    /// Distance of `v` from E (Euclidean), used to check invariance.
    pub fn distance_from_e(&self, v: &DVector<f64>) -> f64 {
        let proj = &self.e_basis * (self.e_basis.transpose() * v);
        (v - proj).norm()
    }

    /// Image `p(L ∩ E)` of a subspace, as an orthonormal frame in F.
    pub fn reduce_subspace(&self, l: &DMatrix<f64>) -> DMatrix<f64> {
        let inter = intersect_with(l, &self.e_basis);
        let img = self.projection() * inter;
        linalg::orthonormal_basis(&img, 1e-9)
    }

    /// Re-choose the Darboux basis so that the given Lagrangian subspace of
    /// F (frame in current Darboux coordinates) becomes the vertical.
    pub fn with_vertical(&self, lag: &DMatrix<f64>) -> Result<Self> {
        let m = self.half_dim();
        if lag.ncols() != m || lag.nrows() != 2 * m {
            return Err(SymplecticError::Dimension("vertical frame has wrong shape".into()));
        }
        let j = standard_form(m);
        let basis = darboux_with_vertical(&j, lag)?;
        // basis is expressed in current Darboux coords; compose.
        let darboux = &self.darboux * basis;
        let darboux_inv = darboux
            .clone()
            .try_inverse()
            .ok_or(SymplecticError::NotCoisotropic { defect: f64::NAN })?;
        Ok(Self {
            darboux,
            darboux_inv,
            ..self.clone()
        })
    }
}

/// Basis (columns) of the intersection of two subspaces.
pub fn intersect_with(a: &DMatrix<f64>, b_orthonormal: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = a.nrows();
    let resid = a - b_orthonormal * (b_orthonormal.transpose() * a);
    let scale = linalg::spectral_norm(a).max(1e-300);
    let svd = resid.svd(false, true);
    let vt = svd.v_t.expect("svd with v");
    let mut cols = Vec::new();
    for i in 0..vt.nrows() {
        if svd.singular_values[i] <= 1e-9 * scale {
            cols.push(a * vt.row(i).transpose());
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        linalg::orthonormal_basis(&DMatrix::from_columns(&cols), 1e-12)
    }
}

/// Darboux basis `[e | f]` with `Bᵀ Ω B = J` and `span f = span lag`.
fn darboux_with_vertical(omega: &DMatrix<f64>, lag: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = lag.ncols();
    let f = lag.clone();
    let g = omega * &f;
    let gram = g.transpose() * omega * &f;
    let gram_inv_t = gram
        .try_inverse()
        .ok_or(SymplecticError::NotLagrangian {
            reason: "vertical candidate is degenerate".into(),
        })?
        .transpose();
    let mut e = g * gram_inv_t;
    let ee = e.transpose() * omega * &e;
    let c = &ee * 0.5;
    e += &f * c.transpose();
    let basis = linalg::hstack(&e, &f);
    let check = basis.transpose() * omega * &basis - standard_form(m);
    if linalg::max_abs_entry(&check) > 1e-8 * (1.0 + linalg::max_abs_entry(&basis)).powi(2) {
        return Err(SymplecticError::NotLagrangian {
            reason: "candidate vertical is not Lagrangian in the reduced space".into(),
        });
    }
    Ok(basis)
}

/// Generic Darboux basis for a nondegenerate antisymmetric form.
fn darboux_basis(omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = omega.nrows();
    let m = dim / 2;
    if m == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // Symplectic Gram–Schmidt on the standard basis.
    let mut remaining: Vec<DVector<f64>> = (0..dim)
        .map(|i| {
            let mut v = DVector::zeros(dim);
            v[i] = 1.0;
            v
        })
        .collect();
    let mut es = Vec::with_capacity(m);
    let mut fs = Vec::with_capacity(m);
    let w = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * omega * b)[(0, 0)];
    while es.len() < m {
        let e = remaining.remove(0);
        // Pick partner with the largest pairing.
        let (idx, val) = remaining
            .iter()
            .enumerate()
            .map(|(i, v)| (i, w(&e, v)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .ok_or(SymplecticError::NotCoisotropic { defect: f64::NAN })?;
        if val.abs() < 1e-12 {
            return Err(SymplecticError::NotCoisotropic { defect: val });
        }
        let f = remaining.remove(idx) / val;
        let proj = |v: &DVector<f64>| -> DVector<f64> {
            // Remove the (e, f) components: v - ω(v, f) e + ω(v, e) f.
            v - &e * w(v, &f) + &f * w(v, &e)
        };
        remaining = remaining.iter().map(proj).collect();
        es.push(e.clone());
        fs.push(f);
    }
    let mut cols = es;
    cols.extend(fs);
    Ok(DMatrix::from_columns(&cols))
}

/// Symplectic reduction of the coisotropic subspace spanned by `e_frame` by
/// its ω-orthogonal spanned by `r_frame`.
pub fn symplectic_reduce(e_frame: &DMatrix<f64>, r_frame: &DMatrix<f64>) -> Result<ReducedSpace> {
    let dim = e_frame.nrows();
    if !dim.is_multiple_of(2) || r_frame.nrows() != dim {
        return Err(SymplecticError::Dimension("frames must live in ℝ²ⁿ".into()));
    }
    let n = dim / 2;
    let ambient = SymplecticSpace::new(n);
    let e_basis = linalg::orthonormal_basis(e_frame, 1e-10);
    let r_basis = linalg::orthonormal_basis(r_frame, 1e-10);
    let p = r_basis.ncols();
    if e_basis.ncols() + p != dim {
        return Err(SymplecticError::Dimension(format!(
            "dim E = {} and dim R = {} do not satisfy dim E + dim R = 2n",
            e_basis.ncols(),
            p
        )));
    }
    // R ⊆ E and ω(R, E) = 0.
    let outside = &r_basis - &e_basis * (e_basis.transpose() * &r_basis);
    let j = ambient.form_matrix();
    let defect = linalg::max_abs_entry(&(r_basis.transpose() * j * &e_basis)).max(linalg::max_abs_entry(&outside));
    if defect > 1e-10 {
        return Err(SymplecticError::NotCoisotropic { defect });
    }
    // Complement of R inside E.
    let resid = &e_basis - &r_basis * (r_basis.transpose() * &e_basis);
    let complement = linalg::orthonormal_basis(&resid, 1e-8);
    if complement.ncols() != dim - 2 * p {
        return Err(SymplecticError::NotCoisotropic { defect: f64::NAN });
    }
    let reduced_form = complement.transpose() * j * &complement;
    let darboux = darboux_basis(&reduced_form)?;
    let darboux_inv = if darboux.nrows() == 0 {
        darboux.clone()
    } else {
        darboux
            .clone()
            .try_inverse()
            .ok_or(SymplecticError::NotCoisotropic { defect: f64::NAN })?
    };
    Ok(ReducedSpace {
        ambient,
        complement,
        reduced_form,
        darboux,
        darboux_inv,
        r_basis,
        e_basis,
    })
}

/// Whether `v` lies in some Lagrangian graph `W` with `W₋ ⪯ W ⪯ W₊`.
///
/// Writing `v = (a, b)`, `u = b − W₋a` and `D = W₊ − W₋`, this holds iff `u`
/// lies in the range of `D` and `uᵀD⁺u ≤ u·a`; the rank-one graph
/// `W₋ + uuᵀ/(u·a)` is then a witness.
pub fn between_check(v: &DVector<f64>, l_minus: &LagrangianFrame, l_plus: &LagrangianFrame) -> Result<bool> {
    Ok(between_witness(v, l_minus, l_plus)?.is_some())
}

/// Like [`between_check`] but returns the witness graph matrix.
pub fn between_witness(
    v: &DVector<f64>,
    l_minus: &LagrangianFrame,
    l_plus: &LagrangianFrame,
) -> Result<Option<DMatrix<f64>>> {
    let wm = l_minus.graph_matrix()?;
    let wp = l_plus.graph_matrix()?;
    between_witness_graphs(v, &wm, &wp)
}

pub fn between_witness_graphs(v: &DVector<f64>, wm: &DMatrix<f64>, wp: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
    let n = wm.nrows();
    if v.len() != 2 * n {
        return Err(SymplecticError::Dimension("vector length must be 2n".into()));
    }
    let d = wp - wm;
    let min_eig = linalg::min_eigenvalue(&d);
    if min_eig < -1e-10 {
        return Err(SymplecticError::NotOrdered { min_eig });
    }
    let a = v.rows(0, n).into_owned();
    let b = v.rows(n, n).into_owned();
    if a.norm() == 0.0 {
        return Ok(if b.norm() == 0.0 { Some(wm.clone()) } else { None });
    }
    let u = b - wm * &a;
    let un = u.norm();
    if un == 0.0 {
        return Ok(Some(wm.clone()));
    }
    let dp = linalg::sym_pinv(&d, 1e-10);
    let in_range = &d * (&dp * &u);
    if (&u - in_range).norm() > 1e-9 * un {
        return Ok(None);
    }
    let quad = (u.transpose() * &dp * &u)[(0, 0)];
    let ua = u.dot(&a);
    if quad <= ua + 1e-9 && ua > 0.0 {
        Ok(Some(wm + &u * u.transpose() / ua))
    } else {
        Ok(None)
    }
}

/// Output of [`pbilin_construct`] with its self-certification numbers.
#[derive(Clone, Debug)]
pub struct PbilinResult {
    pub sigma: DMatrix<f64>,
    /// Smallest eigenvalue of `σ − (Q₋ − c₀ΔQ)`.
    pub lower_slack: f64,
    /// Smallest eigenvalue of `Q₊ + c₀ΔQ − σ`.
    pub upper_slack: f64,
    /// `‖σX − Y‖`.
    pub residual: f64,
}

/// Minimum over K of the slack of each hypothesis inequality, with the
/// minimizing K. `None` for the K when the slack is unbounded below.
#[derive(Clone, Debug)]
pub struct PbilinHypotheses {
    pub upper_slack: f64,
    pub upper_k: Vec<f64>,
    pub lower_slack: f64,
    pub lower_k: Vec<f64>,
}

fn range_split(dq: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let e = SortedEigen::new(dq);
    let cut = 1e-10 * e.max_abs().max(f64::MIN_POSITIVE);
    let idx: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > cut).collect();
    let n = dq.nrows();
    let mut u = DMatrix::zeros(n, idx.len());
    let mut l = DVector::zeros(idx.len());
    for (c, &i) in idx.iter().enumerate() {
        u.set_column(c, &e.vectors.column(i));
        l[c] = e.values[i];
    }
    (u, l)
}

/// Closed-form minimum over K of the two quadratic hypothesis slacks
///
/// `½ΔQ(X−K) − ΔY₊·K ≥ 0` and `ΔY₋·K + ½ΔQ(X−K) ≥ 0`.
pub fn pbilin_hypotheses(
    q_minus: &DMatrix<f64>,
    q_plus: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> PbilinHypotheses {
    let dq = linalg::symmetrize(&(q_plus - q_minus));
    let dy_plus = y - q_plus * x;
    let dy_minus = y - q_minus * x;
    let (u, l) = range_split(&dq);
    let mut pinv = DMatrix::zeros(dq.nrows(), dq.nrows());
    for i in 0..l.len() {
        let c = u.column(i);
        pinv += c * c.transpose() / l[i];
    }
    let proj = &u * u.transpose();
    let unbounded = |w: &DVector<f64>| {
        let off = w - &proj * w;
        if off.norm() > 1e-9 * (1.0 + w.norm()) {
            Some(off)
        } else {
            None
        }
    };
    let (upper_slack, upper_k) = match unbounded(&dy_plus) {
        // ΔY₊·K grows linearly along ker ΔQ.
        Some(off) => (f64::NEG_INFINITY, (&off / off.norm()).iter().copied().collect()),
        None => {
            let k = x + &pinv * &dy_plus;
            let s = -0.5 * dy_plus.dot(&(&pinv * &dy_plus)) - dy_plus.dot(x);
            (s, k.iter().copied().collect())
        }
    };
    let (lower_slack, lower_k) = match unbounded(&dy_minus) {
        Some(off) => (f64::NEG_INFINITY, (-&off / off.norm()).iter().copied().collect()),
        None => {
            let k = x - &pinv * &dy_minus;
            let s = dy_minus.dot(x) - 0.5 * dy_minus.dot(&(&pinv * &dy_minus));
            (s, k.iter().copied().collect())
        }
    };
    PbilinHypotheses {
        upper_slack,
        upper_k,
        lower_slack,
        lower_k,
    }
}

/// Build a symmetric `σ` with `σX = Y` inside the band
/// `Q₋ − c₀ΔQ ⪯ σ ⪯ Q₊ + c₀ΔQ`.
///
/// On `range(ΔQ)` the construction normalizes `ΔQ` to the identity, rotates
/// `x` onto the first axis and uses the arrow matrix with first row `y` and
/// diagonal tail `−½`; on `ker ΔQ` the band is a single point and `σ = Q₊`.
pub fn pbilin_construct(
    q_minus: &DMatrix<f64>,
    q_plus: &DMatrix<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<PbilinResult> {
    let n = q_minus.nrows();
    if q_plus.nrows() != n || x.len() != n || y.len() != n {
        return Err(SymplecticError::Dimension("pbilin inputs disagree in size".into()));
    }
    let q_minus = linalg::symmetrize(q_minus);
    let q_plus = linalg::symmetrize(q_plus);
    let dq = &q_plus - &q_minus;
    let e = SortedEigen::new(&dq);
    if e.min() < -PSD_SLACK * e.max_abs().max(1.0) {
        return Err(SymplecticError::NotOrdered { min_eig: e.min() });
    }
    let scale = 1.0_f64.max(e.max_abs() * x.norm_squared()).max(y.norm() * x.norm());
    let hyp = pbilin_hypotheses(&q_minus, &q_plus, x, y);
    if hyp.upper_slack < -1e-9 * scale {
        return Err(SymplecticError::HypothesisViolated {
            which: 1,
            k: hyp.upper_k,
            slack: hyp.upper_slack,
        });
    }
    if hyp.lower_slack < -1e-9 * scale {
        return Err(SymplecticError::HypothesisViolated {
            which: 2,
            k: hyp.lower_k,
            slack: hyp.lower_slack,
        });
    }

    let (u, lam) = range_split(&dq);
    let d = lam.len();
    let mut sigma = q_plus.clone();
    if d > 0 {
        let dy_plus = y - &q_plus * x;
        let sq = lam.map(f64::sqrt);
        let xr = u.transpose() * x;
        let yr = u.transpose() * &dy_plus;
        let xs = xr.component_mul(&sq);
        let ys = yr.component_div(&sq);
        let mu = xs.norm();
        let eta = if mu <= 1e-300 {
            DMatrix::zeros(d, d)
        } else {
            let h = householder_to_e1(&xs);
            let yt = &h * &ys / mu;
            let mut s = DMatrix::from_diagonal_element(d, d, -0.5);
            s[(0, 0)] = yt[0];
            for i in 1..d {
                s[(0, i)] = yt[i];
                s[(i, 0)] = yt[i];
            }
            h.transpose() * s * &h
        };
        let sig_r = DMatrix::from_diagonal(&sq) * eta * DMatrix::from_diagonal(&sq);
        sigma += &u * sig_r * u.transpose();
    }
    let sigma = linalg::symmetrize(&sigma);
    let c = c0();
    let lower = &q_minus - &dq * c;
    let upper = &q_plus + &dq * c;
    Ok(PbilinResult {
        lower_slack: linalg::min_eigenvalue(&(&sigma - lower)),
        upper_slack: linalg::min_eigenvalue(&(upper - &sigma)),
        residual: (&sigma * x - y).norm(),
        sigma,
    })
}

/// Orthogonal symmetric `H` with `H x = ‖x‖ e₁`.
fn householder_to_e1(x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let mu = x.norm();
    let mut w = x.clone();
    w[0] -= mu;
    let wn = w.norm_squared();
    if wn <= 1e-30 * mu * mu {
        return DMatrix::identity(d, d);
    }
    DMatrix::identity(d, d) - &w * w.transpose() * (2.0 / wn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, data.len() / rows, data)
    }

    #[test]
    fn c0_root_identity() {
        let c = c0();
        assert!((0.75 * c * c + 1.25 * c - 9.0 / 16.0).abs() <= 1e-15);
        assert!(c < 0.5);
    }

    #[test]
    fn relative_form_slope_n1() {
        let h = LagrangianFrame::horizontal(1);
        let v = LagrangianFrame::vertical(1);
        let l = LagrangianFrame::graph(m(1, &[0.7])).unwrap();
        let q = relative_form(&h, &v, &l).unwrap();
        assert!((q[(0, 0)] - 0.7).abs() < 1e-15);
        let z = relative_form(&h, &v, &h).unwrap();
        assert_eq!(z[(0, 0)], 0.0);
    }

    #[test]
    fn relative_form_rejects_non_transverse() {
        let h = LagrangianFrame::horizontal(2);
        let err = relative_form(&h, &h, &LagrangianFrame::vertical(2)).unwrap_err();
        assert!(matches!(err, SymplecticError::NotTransverse { .. }));
        let v = LagrangianFrame::vertical(2);
        let err = relative_form(&h, &v, &v).unwrap_err();
        assert!(matches!(err, SymplecticError::NotTransverse { .. }));
    }

    #[test]
    fn cone_membership_examples() {
        let l1 = LagrangianFrame::graph(m(1, &[-1.0])).unwrap();
        let v = LagrangianFrame::vertical(1);
        let l = LagrangianFrame::graph(m(1, &[0.0])).unwrap();
        assert_eq!(cone_membership(&l1, &v, &l).unwrap(), ConeMembership::InPositiveCone);
        assert_eq!(cone_membership(&l1, &v, &l1).unwrap(), ConeMembership::Degenerate);
        let h2 = LagrangianFrame::horizontal(2);
        let v2 = LagrangianFrame::vertical(2);
        let l2 = LagrangianFrame::graph(m(2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert_eq!(
            cone_membership(&h2, &v2, &l2).unwrap(),
            ConeMembership::OtherComponent {
                positive: 1,
                negative: 1
            }
        );
    }

    #[test]
    fn compare_examples() {
        let a = LagrangianFrame::graph(m(1, &[0.0])).unwrap();
        let b = LagrangianFrame::graph(m(1, &[1.0])).unwrap();
        let r = compare_under_vertical(&a, &b).unwrap();
        assert_eq!(r.relation, Relation::StrictlyUnder);
        assert!((r.witness_form[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(compare_under_vertical(&a, &a).unwrap().relation, Relation::Under);
        let z = LagrangianFrame::horizontal(2);
        let w = LagrangianFrame::graph(m(2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert_eq!(compare_under_vertical(&z, &w).unwrap().relation, Relation::Incomparable);
        let err = compare_under_vertical(&LagrangianFrame::vertical(1), &a).unwrap_err();
        assert!(matches!(err, SymplecticError::VerticalNotTransverse { .. }));
    }

    #[test]
    fn reduce_trivial_is_identity() {
        let e = DMatrix::identity(4, 4);
        let r = DMatrix::zeros(4, 0);
        let red = symplectic_reduce(&e, &r).unwrap();
        assert_eq!(red.reduced_dim(), 4);
        let p = red.projection();
        let j = standard_form(2);
        // Ω(p v, p w) = ω(v, w) for all v, w.
        let lhs = p.transpose() * &j * &p;
        assert!((lhs - &j).norm() < 1e-12);
    }

    #[test]
    fn reduce_coordinate_hyperplane() {
        // n = 2, E = {p₂ = 0}, R = span(∂q₂).
        let mut e = DMatrix::zeros(4, 3);
        e[(0, 0)] = 1.0;
        e[(1, 1)] = 1.0;
        e[(2, 2)] = 1.0;
        let mut r = DMatrix::zeros(4, 1);
        r[(1, 0)] = 1.0;
        let red = symplectic_reduce(&e, &r).unwrap();
        assert_eq!(red.reduced_dim(), 2);
        let p = red.projection();
        let omega = standard_form(2);
        let big = e.transpose() * &omega * &e;
        let small = (p.clone() * &e).transpose() * standard_form(1) * (p * &e);
        assert!((big - small).norm() < 1e-12);
    }

    #[test]
    fn reduce_rejects_non_coisotropic() {
        // E = {p₂ = 0} with R = ∂p₁ (not ω-orthogonal to E).
        let mut e = DMatrix::zeros(4, 3);
        e[(0, 0)] = 1.0;
        e[(1, 1)] = 1.0;
        e[(2, 2)] = 1.0;
        let mut r = DMatrix::zeros(4, 1);
        r[(2, 0)] = 1.0;
        assert!(matches!(
            symplectic_reduce(&e, &r),
            Err(SymplecticError::NotCoisotropic { .. })
        ));
    }

    #[test]
    fn between_examples() {
        let wm = LagrangianFrame::graph(m(1, &[0.0])).unwrap();
        let wp = LagrangianFrame::graph(m(1, &[1.0])).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.5]);
        assert!(between_check(&v, &wm, &wp).unwrap());
        let vert = DVector::from_vec(vec![0.0, 1.0]);
        assert!(!between_check(&vert, &wm, &wp).unwrap());
        let wm2 = LagrangianFrame::horizontal(2);
        let wp2 = LagrangianFrame::graph(m(2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let v2 = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.5]);
        assert!(!between_check(&v2, &wm2, &wp2).unwrap());
        assert!(matches!(
            between_check(&v, &wp, &wm),
            Err(SymplecticError::NotOrdered { .. })
        ));
    }

    #[test]
    fn pbilin_examples() {
        let r = pbilin_construct(
            &m(1, &[-1.0]),
            &m(1, &[1.0]),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![0.0]),
        )
        .unwrap();
        assert!(r.lower_slack >= -1e-9 && r.upper_slack >= -1e-9);
        assert!(r.residual <= 1e-10);

        let q = m(2, &[2.0, 0.5, 0.5, 1.0]);
        let x = DVector::from_vec(vec![0.3, -1.2]);
        let y = &q * &x;
        let r = pbilin_construct(&q, &q, &x, &y).unwrap();
        assert!((&r.sigma - &q).norm() < 1e-14);
    }

    #[test]
    fn pbilin_reports_violation() {
        // Y far outside what any σ in the band can produce.
        let err = pbilin_construct(
            &m(1, &[-1.0]),
            &m(1, &[1.0]),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![5.0]),
        )
        .unwrap_err();
        assert!(matches!(err, SymplecticError::HypothesisViolated { which: 1, .. }));
        let err = pbilin_construct(
            &m(1, &[1.0]),
            &m(1, &[-1.0]),
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![0.0]),
        )
        .unwrap_err();
        assert!(matches!(err, SymplecticError::NotOrdered { .. }));
    }
}
