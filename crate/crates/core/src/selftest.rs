//! Randomized self-checks of the Lagrangian order and the band construction.
//!
//! Instances are generated with known answers: positive cones are sampled
//! through symplectic charts that send the pair `(L₁, L₂)` to
//! `(horizontal, vertical)`, where `P(H, V)` is the set of graphs of
//! positive definite matrices. Every suite is a pure function of its seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg;
use crate::rng;
use crate::symplectic::{
    c0, compare_under_vertical, cone_membership, pbilin_construct, pbilin_hypotheses, relative_form, standard_form,
    ConeMembership, LagrangianFrame, Relation,
};

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * normal(rng))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    linalg::symmetrize(&random_matrix(rng, n, n, scale))
}

/// Random orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n, 1.0).qr().q()
}

/// Symmetric matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_spectrum<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let q = random_orthogonal(rng, n);
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(lo..=hi)));
    linalg::symmetrize(&(&q * d * q.transpose()))
}

/// Positive semidefinite matrix of the given rank, nonzero eigenvalues in
/// `[lo, hi]`.
pub fn random_psd_rank<R: Rng>(rng: &mut R, n: usize, rank: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let q = random_orthogonal(rng, n);
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
        if i < rank {
            rng.random_range(lo..=hi)
        } else {
            0.0
        }
    }));
    linalg::symmetrize(&(&q * d * q.transpose()))
}

/// Moderately conditioned random symplectic matrix: a product of shears
/// and a block-diagonal factor.
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let eye = DMatrix::<f64>::identity(n, n);
    let zero = DMatrix::<f64>::zeros(n, n);
    let upper = linalg::block2(&eye, &random_symmetric(rng, n, 0.5), &zero, &eye);
    let lower = linalg::block2(&eye, &zero, &random_symmetric(rng, n, 0.5), &eye);
    let a = &eye + random_matrix(rng, n, n, 0.3);
    let a_inv_t = a.clone().try_inverse().unwrap_or_else(|| eye.clone()).transpose();
    let a = if a_inv_t == eye { eye.clone() } else { a };
    let diag = linalg::block2(&a, &zero, &zero, &a_inv_t);
    upper * diag * lower
}

/// Symplectic `M` with `M(H) = A` and `M(V) = B` for transverse
/// Lagrangians `A`, `B`.
pub fn symplectic_from_pair(a: &LagrangianFrame, b: &LagrangianFrame) -> Option<DMatrix<f64>> {
    let n = a.n();
    let j = standard_form(n);
    let pairing = a.columns().transpose() * j * b.columns();
    let b_norm = b.columns() * pairing.try_inverse()?;
    Some(linalg::hstack(a.columns(), &b_norm))
}

/// The Lagrangian `M(graph W)`.
pub fn image_of_graph(m: &DMatrix<f64>, w: &DMatrix<f64>) -> LagrangianFrame {
    LagrangianFrame::graph(w.clone()).expect("symmetric").mapped(m)
}

/// Same subspace as `graph(W)`, presented through a random basis.
pub fn graph_in_random_basis<R: Rng>(rng: &mut R, w: &DMatrix<f64>) -> LagrangianFrame {
    let n = w.nrows();
    let g = DMatrix::<f64>::identity(n, n) + random_matrix(rng, n, n, 0.3);
    let cols = LagrangianFrame::graph(w.clone()).expect("symmetric").columns() * g;
    LagrangianFrame::from_frame(cols).unwrap_or_else(|_| LagrangianFrame::graph(w.clone()).expect("symmetric"))
}

/// Result of one property over many random instances.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Smallest normalized eigenvalue slack seen (negative means violated).
    pub worst_slack: f64,
    pub first_failure: Option<String>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Per-instance verdict: `Ok(slack)` or `Err(description)`.
type Check = Result<f64, String>;

fn normalized_min_eig(m: &DMatrix<f64>) -> f64 {
    let e = linalg::SortedEigen::new(m);
    e.min() / e.max_abs().max(f64::MIN_POSITIVE)
}

fn run_suite<F>(name: &str, seed: u64, stream_base: u64, instances: usize, dims: &[usize], f: F) -> SuiteOutcome
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, usize) -> Check + Sync,
{
    let results: Vec<Check> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, stream_base + i as u64);
            let n = dims[i % dims.len()];
            f(&mut r, n)
        })
        .collect();
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let mut first = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => worst = worst.min(s),
            Err(msg) => {
                failures += 1;
                if first.is_none() {
                    first = Some(format!("instance {i}: {msg}"));
                }
            }
        }
    }
    SuiteOutcome {
        name: name.to_string(),
        instances,
        failures,
        worst_slack: worst,
        first_failure: first,
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn pair<R: Rng>(r: &mut R, n: usize) -> (LagrangianFrame, LagrangianFrame, DMatrix<f64>) {
    let m0 = random_symplectic(r, n);
    let l1 = LagrangianFrame::horizontal(n).mapped(&m0);
    let l2 = LagrangianFrame::vertical(n).mapped(&m0);
    (l1, l2, m0)
}

fn expect_positive(l1: &LagrangianFrame, l2: &LagrangianFrame, l: &LagrangianFrame, slack: f64) -> Check {
    let q = relative_form(l1, l2, l).map_err(err)?;
    let s = normalized_min_eig(&q);
    match cone_membership(l1, l2, l).map_err(err)? {
        ConeMembership::InPositiveCone => Ok(s),
        _ if s >= -slack => Ok(s),
        other => Err(format!("expected positive cone, got {other:?} (slack {s:e})")),
    }
}

fn expect_relation(l1: &LagrangianFrame, l2: &LagrangianFrame, strict: bool, slack: f64) -> Check {
    let c = compare_under_vertical(l1, l2).map_err(err)?;
    let e = linalg::SortedEigen::new(&c.witness_form);
    let s = e.min() / e.max_abs().max(1.0);
    let ok = match c.relation {
        Relation::StrictlyUnder => true,
        Relation::Under => !strict,
        Relation::Incomparable => s >= -slack && !strict,
    };
    if ok {
        Ok(s)
    } else {
        Err(format!("relation {:?} (slack {s:e})", c.relation))
    }
}

/// Symplectic invariance of the positive cone: membership of `L` in
/// `P(L₁, L₂)` equals membership of `ML` in `P(ML₁, ML₂)`.
pub fn check_invariance<R: Rng>(r: &mut R, n: usize) -> Check {
    let (l1, l2, m0) = pair(r, n);
    // Relative form of M0(graph W) w.r.t. (L1, L2) is W; keep it away from 0.
    let signs = r.random_range(0..=n);
    let w = {
        let q = random_orthogonal(r, n);
        let d = DVector::from_fn(n, |i, _| {
            let v = r.random_range(0.2..=3.0);
            if i < signs {
                v
            } else {
                -v
            }
        });
        linalg::symmetrize(&(&q * DMatrix::from_diagonal(&d) * q.transpose()))
    };
    let l = image_of_graph(&m0, &w);
    let m = random_symplectic(r, n);
    let before = cone_membership(&l1, &l2, &l).map_err(err)?;
    let after = cone_membership(&l1.mapped(&m), &l2.mapped(&m), &l.mapped(&m)).map_err(err)?;
    let expected = if signs == n {
        ConeMembership::InPositiveCone
    } else {
        ConeMembership::OtherComponent {
            positive: signs,
            negative: n - signs,
        }
    };
    if before == expected && after == expected {
        Ok(normalized_min_eig(&relative_form(&l1.mapped(&m), &l2.mapped(&m), &l.mapped(&m)).map_err(err)?).abs())
    } else {
        Err(format!("expected {expected:?}, got {before:?} then {after:?}"))
    }
}

/// Absorption: for `L ∈ P(L₁, L₂)`, members of `P(L₁, L)` and `P(L, L₂)`
/// lie in `P(L₁, L₂)`.
pub fn check_absorption<R: Rng>(r: &mut R, n: usize, slack: f64) -> Check {
    let (l1, l2, m0) = pair(r, n);
    let l = image_of_graph(&m0, &random_spectrum(r, n, 0.2, 3.0));
    let mut worst = f64::INFINITY;
    for (a, b) in [(&l1, &l), (&l, &l2)] {
        let m = symplectic_from_pair(a, b).ok_or("pair not transverse")?;
        let inner = image_of_graph(&m, &random_spectrum(r, n, 0.2, 3.0));
        worst = worst.min(expect_positive(&l1, &l2, &inner, slack)?);
    }
    Ok(worst)
}

/// For graphs `L₁ < L₂` and `L₃ ∈ P(L₁, L₂)`: `L₁ < L₃ < L₂`.
pub fn check_interleaving<R: Rng>(r: &mut R, n: usize, slack: f64) -> Check {
    let w1 = random_symmetric(r, n, 1.0);
    let w2 = &w1 + random_spectrum(r, n, 0.2, 3.0);
    let l1 = graph_in_random_basis(r, &w1);
    let l2 = graph_in_random_basis(r, &w2);
    let m = symplectic_from_pair(&l1, &l2).ok_or("pair not transverse")?;
    let l3 = image_of_graph(&m, &random_spectrum(r, n, 0.2, 3.0));
    let a = expect_relation(&l1, &l3, true, slack)?;
    let b = expect_relation(&l3, &l2, true, slack)?;
    Ok(a.min(b))
}

/// For graphs `L₁ < L₃ < L₂`: `L₃ ∈ P(L₁, L₂)`.
pub fn check_converse<R: Rng>(r: &mut R, n: usize, slack: f64) -> Check {
    let w1 = random_symmetric(r, n, 1.0);
    let w3 = &w1 + random_spectrum(r, n, 0.1, 3.0);
    let w2 = &w3 + random_spectrum(r, n, 0.1, 3.0);
    let l1 = graph_in_random_basis(r, &w1);
    let l2 = graph_in_random_basis(r, &w2);
    let l3 = graph_in_random_basis(r, &w3);
    expect_positive(&l1, &l2, &l3, slack)
}

/// Transitivity of `<` (full-rank increments) and of `≤` (rank-deficient
/// increments).
pub fn check_transitivity<R: Rng>(r: &mut R, n: usize, slack: f64) -> Check {
    let strict = r.random_bool(0.5);
    let inc = |r: &mut R| {
        if strict {
            random_spectrum(r, n, 0.1, 3.0)
        } else {
            let rank = r.random_range(0..=n);
            random_psd_rank(r, n, rank, 0.1, 3.0)
        }
    };
    let w1 = random_symmetric(r, n, 1.0);
    let w2 = &w1 + inc(r);
    let w3 = &w2 + inc(r);
    let l1 = graph_in_random_basis(r, &w1);
    let l2 = graph_in_random_basis(r, &w2);
    let l3 = graph_in_random_basis(r, &w3);
    expect_relation(&l1, &l2, strict, slack)?;
    expect_relation(&l2, &l3, strict, slack)?;
    expect_relation(&l1, &l3, strict, slack)
}

/// All order-relation suites, `instances` each, dimensions cycling through
/// `dims`.
pub fn appendix_suite(seed: u64, instances: usize, dims: &[usize], slack: f64) -> Vec<SuiteOutcome> {
    let stride = 1u64 << 32;
    vec![
        run_suite("symplectic_invariance", seed, 0, instances, dims, |r, n| {
            check_invariance(r, n)
        }),
        run_suite("cone_absorption", seed, stride, instances, dims, |r, n| {
            check_absorption(r, n, slack)
        }),
        run_suite("interleaving", seed, 2 * stride, instances, dims, |r, n| {
            check_interleaving(r, n, slack)
        }),
        run_suite("converse", seed, 3 * stride, instances, dims, |r, n| {
            check_converse(r, n, slack)
        }),
        run_suite("transitivity", seed, 4 * stride, instances, dims, |r, n| {
            check_transitivity(r, n, slack)
        }),
    ]
}

/// Outcome of [`pbilin_suite`].
#[derive(Clone, Debug, Serialize)]
pub struct PbilinSuiteOutcome {
    pub instances: usize,
    pub failures: usize,
    /// Smallest band eigenvalue slack over all instances.
    pub min_band_slack: f64,
    /// Largest `‖σX − Y‖`.
    pub max_residual: f64,
    /// `¾c₀² + (5/4)c₀ − 9/16`.
    pub c0_identity: f64,
    pub first_failure: Option<String>,
}

impl PbilinSuiteOutcome {
    pub fn pass(&self, band_tol: f64, residual_tol: f64, identity_tol: f64) -> bool {
        self.failures == 0
            && self.min_band_slack >= -band_tol
            && self.max_residual <= residual_tol
            && self.c0_identity.abs() <= identity_tol
    }
}

/// One generated instance `(Q₋, Q₊, X, Y)` satisfying the hypotheses.
///
/// Even instances take `Y = σ₀X` with `Q₋ ⪯ σ₀ ⪯ Q₊`; odd ones draw `Y`
/// at random and keep it when the closed-form hypothesis slacks are
/// nonnegative, which reaches pairs no `σ₀` in the narrow band explains.
pub fn pbilin_instance<R: Rng>(
    r: &mut R,
    n: usize,
    index: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>) {
    loop {
        let q_minus = random_symmetric(r, n, 1.0);
        let rank = if r.random_bool(0.25) { r.random_range(0..=n) } else { n };
        // ΔQ = U D Uᵀ with its square root taken from the same factors, so
        // that rank-deficient instances stay exactly in range.
        let u = random_orthogonal(r, n);
        let d = DVector::from_fn(n, |i, _| if i < rank { r.random_range(0.1..=3.0) } else { 0.0 });
        let dq = linalg::symmetrize(&(&u * DMatrix::from_diagonal(&d) * u.transpose()));
        let root = &u * DMatrix::from_diagonal(&d.map(f64::sqrt)) * u.transpose();
        let q_plus = &q_minus + &dq;
        let x = random_vector(r, n);
        if index.is_multiple_of(2) {
            let t = random_spectrum(r, n, 0.0, 1.0);
            let sigma0 = &q_minus + &root * t * &root;
            let y = &sigma0 * &x;
            return (q_minus, q_plus, x, y);
        }
        for _ in 0..200 {
            let y = &q_plus * &x + &dq * random_vector(r, n) * 0.7;
            let h = pbilin_hypotheses(&q_minus, &q_plus, &x, &y);
            if h.upper_slack >= 0.0 && h.lower_slack >= 0.0 {
                return (q_minus, q_plus, x, y);
            }
        }
    }
}

/// Generate-and-verify run of the band construction.
pub fn pbilin_suite(seed: u64, instances: usize, dims: &[usize]) -> PbilinSuiteOutcome {
    let c = c0();
    let results: Vec<Result<(f64, f64), String>> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let n = dims[i % dims.len()];
            let (qm, qp, x, y) = pbilin_instance(&mut r, n, i);
            let res = pbilin_construct(&qm, &qp, &x, &y).map_err(err)?;
            // Independent re-check of the returned σ.
            let dq = &qp - &qm;
            let lower = normalized_band(&(&res.sigma - (&qm - &dq * c)));
            let upper = normalized_band(&((&qp + &dq * c) - &res.sigma));
            let residual = (&res.sigma * &x - &y).norm() / (1.0 + y.norm());
            Ok((lower.min(upper), residual))
        })
        .collect();
    let mut out = PbilinSuiteOutcome {
        instances,
        failures: 0,
        min_band_slack: f64::INFINITY,
        max_residual: 0.0,
        c0_identity: 0.75 * c * c + 1.25 * c - 9.0 / 16.0,
        first_failure: None,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((band, res)) => {
                out.min_band_slack = out.min_band_slack.min(band);
                out.max_residual = out.max_residual.max(res);
            }
            Err(e) => {
                out.failures += 1;
                if out.first_failure.is_none() {
                    out.first_failure = Some(format!("instance {i}: {e}"));
                }
            }
        }
    }
    out
}

/// Smallest eigenvalue relative to `max(1, ‖m‖)`.
fn normalized_band(m: &DMatrix<f64>) -> f64 {
    let e = linalg::SortedEigen::new(&linalg::symmetrize(m));
    e.min() / e.max_abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_sends_horizontal_and_vertical() {
        let mut r = rng::stream(3, 0);
        let (l1, l2, _) = pair(&mut r, 3);
        let m = symplectic_from_pair(&l1, &l2).unwrap();
        assert!(crate::symplectic::symplectic_defect(&m) < 1e-10);
        let h = LagrangianFrame::horizontal(3).mapped(&m);
        assert!(linalg::principal_angle_sines(h.columns(), l1.columns())
            .iter()
            .all(|&s| s < 1e-10));
    }

    #[test]
    fn small_suites_pass() {
        for o in appendix_suite(11, 60, &[1, 2, 3], 1e-9) {
            assert!(o.pass(), "{o:?}");
        }
        let p = pbilin_suite(11, 60, &[1, 2, 3, 4, 5, 6]);
        assert!(p.pass(1e-9, 1e-10, 1e-15), "{p:?}");
    }
}
