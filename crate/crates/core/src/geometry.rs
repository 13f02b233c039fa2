//! Tangent cones of sampled minimizing sets and their position relative to
//! the Green bundles.
//!
//! Cones are estimated from finite samples: for a radius schedule
//! `r_j = r₀·2^{−j}` the normalized differences to samples in the annuli
//! `[r_j/2, r_j]` are clustered by angle, and clusters supported by too few
//! pairs are dropped. Samples are finite approximations of the true
//! supports, so a passing check is evidence rather than proof.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::green::GreenData;
use crate::linalg;
use crate::symplectic::{self, c0, pbilin_construct, pbilin_hypotheses, SymplecticError, SymplecticSpace};
use crate::twist::{self, AnnulusPoint, GeneratingFunction, TwistError};
use crate::variational::{self, MultiStart, VariationalError};
use crate::weak_kam::WeakKamReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("base point {0} has no Green data")]
    MissingGreen(usize),
    #[error("finite difference failed: {0}")]
    FiniteDifference(String),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Parameters of the cone estimator.
#[derive(Clone, Debug, Serialize)]
pub struct ConeOptions {
    /// Largest radius `r₀`.
    pub r0: f64,
    /// Radii `r₀·2^{−j}` for `j = 0..=levels`.
    pub levels: usize,
    /// Clustering angle in degrees.
    pub cluster_degrees: f64,
    /// Clusters realized by fewer sample pairs are dropped.
    pub min_pairs: usize,
    /// Nearest samples whose cones enter the limit cone.
    pub neighbor_count: usize,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self {
            r0: 0.1,
            levels: 8,
            cluster_degrees: 5.0,
            min_pairs: 3,
            neighbor_count: 5,
        }
    }
}

impl ConeOptions {
    pub fn radii(&self) -> Vec<f64> {
        (0..=self.levels).map(|j| self.r0 * 0.5f64.powi(j as i32)).collect()
    }
}

/// Estimated cone at one base point.
#[derive(Clone, Debug, Serialize)]
pub struct ConeSample {
    pub base: AnnulusPoint,
    /// Unit cluster representatives in `(δq, δp)` coordinates.
    pub directions: Vec<DVector<f64>>,
    /// Number of sample pairs behind each direction.
    pub weights: Vec<usize>,
    pub radius_schedule: Vec<f64>,
}

/// `s − a` with the `q` part reduced to the nearest lift.
pub fn lifted_difference(s: &AnnulusPoint, a: &AnnulusPoint) -> DVector<f64> {
    let dq = (&s.q - &a.q).map(|v| v - v.round());
    let dp = &s.p - &a.p;
    let n = a.n();
    let mut d = DVector::zeros(2 * n);
    d.rows_mut(0, n).copy_from(&dq);
    d.rows_mut(n, n).copy_from(&dp);
    d
}

struct Cluster {
    sum: DVector<f64>,
    rep: DVector<f64>,
    weight: usize,
}

fn cluster(dirs: impl IntoIterator<Item = (DVector<f64>, usize)>, degrees: f64) -> Vec<Cluster> {
    let cos_max = degrees.to_radians().cos();
    let mut out: Vec<Cluster> = Vec::new();
    for (d, w) in dirs {
        match out.iter_mut().find(|c| c.rep.dot(&d) >= cos_max) {
            Some(c) => {
                c.sum += &d * w as f64;
                c.rep = c.sum.normalize();
                c.weight += w;
            }
            None => out.push(Cluster {
                sum: &d * w as f64,
                rep: d,
                weight: w,
            }),
        }
    }
    out
}

fn finish(base: &AnnulusPoint, clusters: Vec<Cluster>, opts: &ConeOptions) -> ConeSample {
    let kept: Vec<Cluster> = clusters.into_iter().filter(|c| c.weight >= opts.min_pairs).collect();
    ConeSample {
        base: base.clone(),
        directions: kept.iter().map(|c| c.rep.clone()).collect(),
        weights: kept.iter().map(|c| c.weight).collect(),
        radius_schedule: opts.radii(),
    }
}

fn raw_directions(samples: &[AnnulusPoint], a: &AnnulusPoint, opts: &ConeOptions) -> Vec<(DVector<f64>, usize)> {
    let radii = opts.radii();
    let mut out = Vec::new();
    for s in samples {
        let d = lifted_difference(s, a);
        let r = d.norm();
        if r == 0.0 {
            continue;
        }
        if radii.iter().any(|&rj| r >= rj / 2.0 && r <= rj) {
            out.push((d / r, 1));
        }
    }
    out
}

fn check_count(samples: &[AnnulusPoint]) -> Result<()> {
    if samples.len() < 2 {
        return Err(GeometryError::InsufficientSamples {
            needed: 2,
            have: samples.len(),
        });
    }
    Ok(())
}

/// Contingent cone of the sample set at `a`.
pub fn contingent_cone(samples: &[AnnulusPoint], a: &AnnulusPoint, opts: &ConeOptions) -> Result<ConeSample> {
    check_count(samples)?;
    let clusters = cluster(raw_directions(samples, a, opts), opts.cluster_degrees);
    Ok(finish(a, clusters, opts))
}

/// Union of the contingent cones at the `neighbor_count` samples nearest to
/// `a` (including `a` itself when sampled), re-clustered. A neighbor at
/// distance `δ` uses radii at most `δ/2`.
pub fn limit_contingent_cone(samples: &[AnnulusPoint], a: &AnnulusPoint, opts: &ConeOptions) -> Result<ConeSample> {
    check_count(samples)?;
    let mut by_distance: Vec<(f64, &AnnulusPoint)> =
        samples.iter().map(|s| (lifted_difference(s, a).norm(), s)).collect();
    by_distance.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut all = Vec::new();
    for &(dist, b) in by_distance.iter().take(opts.neighbor_count.max(1)) {
        // A neighbor's schedule stops at half its distance to `a`, so that
        // its cone reflects structure finer than the approach scale.
        let local = ConeOptions {
            r0: if dist > 0.0 { opts.r0.min(dist / 2.0) } else { opts.r0 },
            ..opts.clone()
        };
        let cone = cluster(raw_directions(samples, b, &local), opts.cluster_degrees);
        all.extend(cone.into_iter().map(|c| (c.rep, c.weight)));
    }
    Ok(finish(a, cluster(all, opts.cluster_degrees), opts))
}

/// Graphs of the modified Green bundles, `(s₋ − c₀ΔS, s₊ + c₀ΔS)`.
pub fn modified_green(g: &GreenData) -> (DMatrix<f64>, DMatrix<f64>) {
    let c = c0();
    (&g.s_minus - &g.delta_s * c, &g.s_plus + &g.delta_s * c)
}

/// One cone direction tested against the widened bundles.
#[derive(Clone, Debug, Serialize)]
pub struct ConeEntry {
    pub base_index: usize,
    /// Base point as `(q, p)`.
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    pub weight: usize,
    pub pass: bool,
    /// Extra widening beyond `tol` needed to pass (zero when passing).
    pub margin: f64,
}

/// Outcome of [`verify_cone_theorem`].
#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub tol: f64,
    pub options: ConeOptions,
    pub bases: usize,
    pub checked: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub worst_margin: f64,
    pub entries: Vec<ConeEntry>,
}

impl ConeReport {
    pub fn all_pass(&self) -> bool {
        self.passed == self.checked
    }
}

fn between_widened(v: &DVector<f64>, wm: &DMatrix<f64>, wp: &DMatrix<f64>, widen: f64) -> Result<bool> {
    let n = wm.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let lo = wm - &eye * widen;
    let hi = wp + &eye * widen;
    Ok(symplectic::between_witness_graphs(v, &lo, &hi)?.is_some())
}

/// For every base point with Green data and every limit-cone direction `v`
/// there, check `G̃₋ ≤ v ≤ G̃₊` with both graphs widened by `tol·I`.
pub fn verify_cone_theorem(
    samples: &[AnnulusPoint],
    greens: &[GreenData],
    opts: &ConeOptions,
    tol: f64,
) -> Result<ConeReport> {
    check_count(samples)?;
    let per_base: Vec<Vec<ConeEntry>> = greens
        .par_iter()
        .enumerate()
        .map(|(bi, g)| -> Result<Vec<ConeEntry>> {
            let cone = limit_contingent_cone(samples, &g.base, opts)?;
            let (wm, wp) = modified_green(g);
            let mut out = Vec::new();
            for (d, &w) in cone.directions.iter().zip(&cone.weights) {
                let pass = between_widened(d, &wm, &wp, tol)?;
                let margin = if pass {
                    0.0
                } else {
                    // Bisection on the extra widening.
                    let (mut lo, mut hi) = (tol, 1.0);
                    while !between_widened(d, &wm, &wp, hi)? && hi < 1e6 {
                        hi *= 10.0;
                    }
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if between_widened(d, &wm, &wp, mid)? {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi - tol
                };
                out.push(ConeEntry {
                    base_index: bi,
                    base: g.base.to_vector().iter().copied().collect(),
                    direction: d.iter().copied().collect(),
                    weight: w,
                    pass,
                    margin,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let entries: Vec<ConeEntry> = per_base.into_iter().flatten().collect();
    let checked = entries.len();
    let passed = entries.iter().filter(|e| e.pass).count();
    let worst_margin = entries.iter().map(|e| e.margin).fold(0.0, f64::max);
    Ok(ConeReport {
        tol,
        options: opts.clone(),
        bases: greens.len(),
        checked,
        passed,
        pass_rate: if checked == 0 {
            1.0
        } else {
            passed as f64 / checked as f64
        },
        worst_margin,
        entries,
    })
}

/// Result of [`c1_isotropic_check`].
#[derive(Clone, Debug, Serialize)]
pub struct IsotropyCheck {
    pub isotropic: bool,
    pub max_omega: f64,
    pub span_dim: usize,
}

/// Whether the cone directions fit in one Lagrangian subspace: pairwise
/// `|ω(u, v)| ≤ tol` and a span of dimension at most `n`.
pub fn c1_isotropic_check(cone: &ConeSample, space: &SymplecticSpace, tol: f64) -> IsotropyCheck {
    let dirs = &cone.directions;
    let mut max_omega: f64 = 0.0;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            max_omega = max_omega.max(space.omega(&dirs[i], &dirs[j]).abs());
        }
    }
    let span_dim = if dirs.is_empty() {
        0
    } else {
        linalg::orthonormal_basis(&DMatrix::from_columns(dirs), tol.max(1e-8)).ncols()
    };
    IsotropyCheck {
        isotropic: max_omega <= tol && span_dim <= space.n(),
        max_omega,
        span_dim,
    }
}

/// Parameters of [`palg_inequality_check`].
#[derive(Clone, Debug, Serialize)]
pub struct PalgOptions {
    /// Number of steps `m` in the potential `𝒜_m`.
    pub m: usize,
    /// Step of the finite-difference Hessians of `𝒜_m`.
    pub fd_step: f64,
    /// Sequences use nodes at offsets `1..=max_offset` along each direction.
    pub max_offset: usize,
    /// Nodes whose one-sided slopes differ by more than this count as
    /// non-differentiable and are skipped.
    pub jump_tol: f64,
    pub tol: f64,
}

impl Default for PalgOptions {
    fn default() -> Self {
        Self {
            m: 1,
            fd_step: 1e-3,
            max_offset: 8,
            jump_tol: 0.05,
            tol: 1e-6,
        }
    }
}

/// One empirical `(X, Y)` pair and its inequality slacks.
#[derive(Clone, Debug, Serialize)]
pub struct PalgPair {
    pub node: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Minimum over `k` of the upper inequality slack.
    pub upper_slack: f64,
    /// Minimum over `k` of the lower inequality slack.
    pub lower_slack: f64,
    pub pass: bool,
    /// For passing pairs: whether the band construction certified itself.
    pub sigma_ok: Option<bool>,
}

/// Outcome of [`palg_inequality_check`].
#[derive(Clone, Debug, Serialize)]
pub struct PalgReport {
    pub x: Vec<f64>,
    pub m: usize,
    /// `∂²𝒜_m/∂y²(x_{−m}, x)`.
    pub q_plus: DMatrix<f64>,
    /// `−∂²𝒜_m/∂x²(x, x_m)`.
    pub q_minus: DMatrix<f64>,
    pub pairs: Vec<PalgPair>,
    pub worst_violation: f64,
    pub all_sigma_ok: bool,
}

/// Hessian of `f` at `z` by central differences.
fn fd_hessian<F: Fn(&DVector<f64>) -> Result<f64>>(f: F, z: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = z.len();
    let f0 = f(z)?;
    let mut hess = DMatrix::zeros(n, n);
    let e = |i: usize| DVector::from_fn(n, |r, _| if r == i { h } else { 0.0 });
    for i in 0..n {
        let fp = f(&(z + e(i)))?;
        let fm = f(&(z - e(i)))?;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let fpp = f(&(z + e(i) + e(j)))?;
            let fpm = f(&(z + e(i) - e(j)))?;
            let fmp = f(&(z - e(i) + e(j)))?;
            let fmm = f(&(z - e(i) - e(j)))?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::FiniteDifference("non-finite Hessian entry".into()));
    }
    Ok(linalg::symmetrize(&hess))
}

/// Second derivatives of `𝒜_m` at the ends of the orbit of `(x, du₋(x))`.
pub fn potential_hessians(
    s: &GeneratingFunction,
    x: &DVector<f64>,
    p: &DVector<f64>,
    m: usize,
    lbar: f64,
    h: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let start = AnnulusPoint::new(x.clone(), p.clone());
    let mut back = start.clone();
    let mut fwd = start;
    for _ in 0..m {
        back = twist::backward(s, &back)?;
        fwd = twist::forward(s, &fwd)?;
    }
    let ms = MultiStart::default();
    let a =
        |y: &DVector<f64>| -> Result<f64> { Ok(variational::mane_potential_with(s, &back.q, y, m, lbar, &ms)?.value) };
    let b =
        |z: &DVector<f64>| -> Result<f64> { Ok(variational::mane_potential_with(s, z, &fwd.q, m, lbar, &ms)?.value) };
    let q_plus = fd_hessian(a, x, h)?;
    let q_minus = -fd_hessian(b, x, h)?;
    Ok((q_minus, q_plus))
}

/// Both quadratic inequalities relating `𝒜_m` Hessians to the difference
/// quotients `(X, Y)` of positions and `du₋` along nodes approaching `x`.
///
/// `x_node` should lie in the coincidence set. Nodes failing the one-sided
/// slope jump test stand in for points where `u₋` is not differentiable and
/// are skipped. Every passing pair is handed to the band construction.
pub fn palg_inequality_check(
    s: &GeneratingFunction,
    weakkam: &WeakKamReport,
    x_node: usize,
    opts: &PalgOptions,
) -> Result<PalgReport> {
    let u = &weakkam.u_minus;
    let n = u.n;
    let x = u.node(x_node);
    let du_x = u.gradient_at_node(x_node);
    let (q_minus, q_plus) = potential_hessians(s, &x, &du_x, opts.m, weakkam.lbar, opts.fd_step)?;
    let differentiable = |idx: usize| {
        (0..n).all(|d| {
            let (l, r) = u.one_sided_slopes(idx, d);
            (r - l).abs() <= opts.jump_tol
        })
    };
    let base: Vec<i64> = u.multi_index(x_node).into_iter().map(|v| v as i64).collect();
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    for d in 0..n {
        let mut e = vec![0i64; n];
        e[d] = 1;
        dirs.push(e.clone());
        dirs.push(e.iter().map(|v| -v).collect());
    }
    if n > 1 {
        dirs.push(vec![1; n]);
        dirs.push(vec![-1; n]);
    }
    let h = u.spacing();
    let mut pairs = Vec::new();
    for dir in &dirs {
        for j in 1..=opts.max_offset as i64 {
            let idx: Vec<i64> = base.iter().zip(dir).map(|(b, d)| b + j * d).collect();
            let node = u.flat_index(&idx);
            if !differentiable(node) {
                continue;
            }
            let offset = DVector::from_iterator(n, dir.iter().map(|&d| (j * d) as f64 * h));
            let lambda = offset.norm();
            let xv = &offset / lambda;
            let yv = (u.gradient_at_node(node) - &du_x) / lambda;
            let hyp = pbilin_hypotheses(&q_minus, &q_plus, &xv, &yv);
            let scale = 1.0 + linalg::max_abs_entry(&q_plus).max(linalg::max_abs_entry(&q_minus));
            let pass = hyp.upper_slack >= -opts.tol * scale && hyp.lower_slack >= -opts.tol * scale;
            let sigma_ok = if pass {
                Some(match pbilin_construct(&q_minus, &q_plus, &xv, &yv) {
                    Ok(r) => {
                        let band_scale = scale * (1.0 + yv.norm());
                        r.lower_slack >= -1e-9 * band_scale
                            && r.upper_slack >= -1e-9 * band_scale
                            && r.residual <= 1e-10 * band_scale
                    }
                    Err(_) => false,
                })
            } else {
                None
            };
            pairs.push(PalgPair {
                node,
                x: xv.iter().copied().collect(),
                y: yv.iter().copied().collect(),
                upper_slack: hyp.upper_slack,
                lower_slack: hyp.lower_slack,
                pass,
                sigma_ok,
            });
        }
    }
    let worst_violation = pairs
        .iter()
        .map(|p| (-p.upper_slack).max(-p.lower_slack).max(0.0))
        .fold(0.0, f64::max);
    let all_sigma_ok = pairs.iter().all(|p| p.sigma_ok != Some(false));
    Ok(PalgReport {
        x: x.iter().copied().collect(),
        m: opts.m,
        q_plus,
        q_minus,
        pairs,
        worst_violation,
        all_sigma_ok,
    })
}
