//! Discrete actions and their minimizers.
//!
//! A configuration `q₀, …, q_k` in the universal cover has action
//! `Σ S(q_{i−1}, q_i)`. Critical configurations with fixed ends are exactly
//! the projections of orbit segments; minimizers are found by Newton's
//! method on the block-tridiagonal Hessian.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::blocktri::BlockTridiagonal;
use crate::linalg;
use crate::rng;
use crate::twist::{self, AnnulusPoint, GeneratingFunction, TwistError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("Newton did not converge in {iterations} iterations (gradient {gradient:e})")]
    NotConverged { iterations: usize, gradient: f64 },
    #[error("converged to a saddle (min Hessian eigenvalue {min_eig:e})")]
    SaddleDetected { min_eig: f64 },
    #[error("configuration is not critical (gradient {gradient:e})")]
    NotCritical { gradient: f64 },
    #[error("configuration does not lift to an orbit (mismatch {residual:e} at step {index})")]
    OrbitMismatch { index: usize, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Twist(#[from] TwistError),
}

pub type Result<T> = std::result::Result<T, VariationalError>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Boundary {
    FixedEnds,
    /// `q_{i+N} = q_i + ρ`; only `q₀, …, q_{N−1}` are stored.
    Periodic {
        rho: Vec<i64>,
        period: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Configuration {
    pub points: Vec<DVector<f64>>,
    pub boundary: Boundary,
}

impl Configuration {
    pub fn fixed(points: Vec<DVector<f64>>) -> Self {
        Self {
            points,
            boundary: Boundary::FixedEnds,
        }
    }

    pub fn periodic(points: Vec<DVector<f64>>, rho: Vec<i64>) -> Self {
        let period = points.len();
        Self {
            points,
            boundary: Boundary::Periodic { rho, period },
        }
    }

    pub fn n(&self) -> usize {
        self.points[0].len()
    }

    /// Number of `S` terms in the action.
    pub fn transitions(&self) -> usize {
        match &self.boundary {
            Boundary::FixedEnds => self.points.len() - 1,
            Boundary::Periodic { period, .. } => *period,
        }
    }

    fn rho_vec(&self) -> Option<DVector<f64>> {
        match &self.boundary {
            Boundary::FixedEnds => None,
            Boundary::Periodic { rho, .. } => Some(DVector::from_iterator(rho.len(), rho.iter().map(|&r| r as f64))),
        }
    }

    /// `q_i` for any integer index (periodic) or `0 ≤ i ≤ k` (fixed ends).
    pub fn point(&self, i: i64) -> DVector<f64> {
        match &self.boundary {
            Boundary::FixedEnds => self.points[i as usize].clone(),
            Boundary::Periodic { period, .. } => {
                let n = *period as i64;
                let wraps = i.div_euclid(n);
                let idx = i.rem_euclid(n) as usize;
                &self.points[idx] + self.rho_vec().unwrap() * wraps as f64
            }
        }
    }

    /// The points `q₀ … q_k` spelled out (for periodic, `k = N`).
    pub fn unrolled(&self) -> Vec<DVector<f64>> {
        (0..=self.transitions() as i64).map(|i| self.point(i)).collect()
    }
}

/// `Σ S(q_{i−1}, q_i) − count · lbar`.
pub fn action(s: &GeneratingFunction, config: &Configuration, lbar: f64) -> f64 {
    let k = config.transitions();
    let mut total = 0.0;
    for i in 1..=k as i64 {
        total += s.eval(&config.point(i - 1), &config.point(i));
    }
    total - k as f64 * lbar
}

fn chain_action(s: &GeneratingFunction, pts: &[DVector<f64>]) -> f64 {
    pts.windows(2).map(|w| s.eval(&w[0], &w[1])).sum()
}

/// Gradient of the action with respect to the interior points of a chain.
fn chain_gradient(s: &GeneratingFunction, pts: &[DVector<f64>]) -> Vec<DVector<f64>> {
    (1..pts.len() - 1)
        .map(|i| s.grad_big_q(&pts[i - 1], &pts[i]) + s.grad_q(&pts[i], &pts[i + 1]))
        .collect()
}

/// Fixed-ends Hessian of a chain `q₀ … q_k` (blocks for `q₁ … q_{k−1}`).
fn chain_hessian(s: &GeneratingFunction, pts: &[DVector<f64>]) -> BlockTridiagonal {
    let k = pts.len() - 1;
    let diag = (1..k)
        .map(|i| s.hess_big_q_big_q(&pts[i - 1], &pts[i]) + s.hess_qq(&pts[i], &pts[i + 1]))
        .collect();
    let upper = (1..k.saturating_sub(1))
        .map(|i| s.hess_q_big_q(&pts[i], &pts[i + 1]))
        .collect();
    BlockTridiagonal::new(diag, upper)
}

fn norm_all(v: &[DVector<f64>]) -> f64 {
    v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

const MAX_NEWTON: usize = 200;
const GRAD_TOL: f64 = 1e-10;

/// Newton with Levenberg shift and backtracking on a fixed-ends chain.
fn newton_fixed_ends(s: &GeneratingFunction, mut pts: Vec<DVector<f64>>) -> Result<Vec<DVector<f64>>> {
    if pts.len() < 3 {
        return Ok(pts);
    }
    let mut f = chain_action(s, &pts);
    let mut g = chain_gradient(s, &pts);
    let mut gn = norm_all(&g);
    for _ in 0..MAX_NEWTON {
        if gn <= GRAD_TOL {
            return Ok(pts);
        }
        let h = chain_hessian(s, &pts);
        let rhs: Vec<DVector<f64>> = g.iter().map(|v| -v).collect();
        let scale = h.scale().max(1.0);
        let mut shift = 0.0;
        let step = loop {
            if let Some(x) = h.solve_shifted(shift, &rhs) {
                break x;
            }
            shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
        };
        let slope: f64 = g.iter().zip(&step).map(|(a, b)| a.dot(b)).sum();
        let mut t = 1.0;
        loop {
            let mut cand = pts.clone();
            for (i, d) in step.iter().enumerate() {
                cand[i + 1] += d * t;
            }
            let fc = chain_action(s, &cand);
            let gc = chain_gradient(s, &cand);
            let gcn = norm_all(&gc);
            let armijo = fc <= f + 1e-4 * t * slope;
            // Near the minimum the action decrease is below rounding; accept
            // steps that reduce the gradient without raising the action.
            let flat = gcn < gn && fc <= f + 1e-13 * (1.0 + f.abs());
            if armijo || flat || t < 1e-12 {
                pts = cand;
                f = fc;
                g = gc;
                gn = gcn;
                break;
            }
            t *= 0.5;
        }
    }
    if gn <= GRAD_TOL {
        Ok(pts)
    } else {
        Err(VariationalError::NotConverged {
            iterations: MAX_NEWTON,
            gradient: gn,
        })
    }
}

fn straight_line(a: &DVector<f64>, b: &DVector<f64>, k: usize) -> Vec<DVector<f64>> {
    (0..=k).map(|i| a + (b - a) * (i as f64 / k as f64)).collect()
}

/// Certificate attached to a fixed-ends Hessian.
#[derive(Clone, Debug, Serialize)]
pub struct HessianReport {
    pub min_eigenvalue: f64,
    pub scale: f64,
    /// Smallest singular value of the upper-right block of `DF^m`, i.e. of
    /// the horizontal part of the image of the vertical.
    pub vertical_image_sigma: f64,
    pub transverse: bool,
    #[serde(skip)]
    pub hessian: BlockTridiagonal,
}

/// Fixed-ends Hessian of a configuration, its smallest eigenvalue and the
/// transversality of `DF^m V(x₀)` to `V(x_m)`.
pub fn hessian_fixed_ends(s: &GeneratingFunction, config: &Configuration) -> Result<HessianReport> {
    let pts = config.unrolled();
    let hessian = chain_hessian(s, &pts);
    let n = s.n();
    let mut prod = DMatrix::identity(2 * n, 2 * n);
    for w in pts.windows(2) {
        prod = twist::tangent(s, &w[0], &w[1])? * prod;
    }
    let b = prod.view((0, n), (n, n)).into_owned();
    let sigma = b
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    let scale = hessian.scale().max(1.0);
    Ok(HessianReport {
        min_eigenvalue: hessian.min_eigenvalue(),
        scale,
        vertical_image_sigma: sigma,
        transverse: sigma > 1e-10 * linalg::spectral_norm(&prod).max(1.0),
        hessian,
    })
}

/// Minimize the action with fixed ends `q_start`, `q_end` over `k` steps.
///
/// Converging to a saddle triggers up to four retries from perturbed
/// starting configurations before `SaddleDetected` is returned.
pub fn minimize_fixed_ends(
    s: &GeneratingFunction,
    q_start: &DVector<f64>,
    q_end: &DVector<f64>,
    k: usize,
    init: Option<&Configuration>,
) -> Result<Configuration> {
    if k < 1 {
        return Err(VariationalError::InvalidInput("k must be at least 1".into()));
    }
    let base = match init {
        Some(c) => {
            let mut p = c.unrolled();
            if p.len() != k + 1 {
                return Err(VariationalError::InvalidInput("init has wrong length".into()));
            }
            p[0] = q_start.clone();
            p[k] = q_end.clone();
            p
        }
        None => straight_line(q_start, q_end, k),
    };
    let mut rng = rng::stream(k as u64, 0x5ad);
    let normal = Normal::new(0.0, 0.25).expect("valid normal");
    let mut last_err = None;
    for attempt in 0..5 {
        let mut start = base.clone();
        if attempt > 0 {
            for p in start.iter_mut().take(k).skip(1) {
                for v in p.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
        }
        let pts = match newton_fixed_ends(s, start) {
            Ok(p) => p,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let h = chain_hessian(s, &pts);
        if h.blocks() == 0 {
            return Ok(Configuration::fixed(pts));
        }
        let min_eig = h.min_eigenvalue();
        if min_eig >= -1e-8 * h.scale().max(1.0) {
            return Ok(Configuration::fixed(pts));
        }
        last_err = Some(VariationalError::SaddleDetected { min_eig });
    }
    Err(last_err.expect("at least one attempt"))
}

/// Finite piece of orbit in the universal cover.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSegment {
    pub points: Vec<AnnulusPoint>,
    /// For periodic orbits, `(ρ, N)` with `x_{i+N} = x_i + (ρ, 0)`.
    pub periodic: Option<(Vec<i64>, usize)>,
    /// Smallest fixed-ends Hessian eigenvalue of the generating configuration.
    pub min_hessian_eig: Option<f64>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n(&self) -> usize {
        self.points[0].n()
    }

    pub fn period(&self) -> Option<usize> {
        self.periodic.as_ref().map(|(_, p)| *p)
    }

    /// Point `x_i` for any integer `i` on a periodic orbit, or `0 ≤ i < len`.
    pub fn point(&self, i: i64) -> AnnulusPoint {
        match &self.periodic {
            None => self.points[i as usize].clone(),
            Some((rho, period)) => {
                let n = *period as i64;
                let w = i.div_euclid(n) as f64;
                let base = &self.points[i.rem_euclid(n) as usize];
                let shift = DVector::from_iterator(rho.len(), rho.iter().map(|&r| r as f64 * w));
                AnnulusPoint::new(&base.q + shift, base.p.clone())
            }
        }
    }

    /// Tangent map `DF(x_i)`, using the transition `(q_i, q_{i+1})`.
    pub fn tangent(&self, s: &GeneratingFunction, i: i64) -> Result<DMatrix<f64>> {
        let a = self.point(i);
        let b = self.point(i + 1);
        Ok(twist::tangent(s, &a.q, &b.q)?)
    }

    /// Number of distinct transitions available (period, or `len − 1`).
    pub fn distinct_transitions(&self) -> usize {
        self.period().unwrap_or(self.len().saturating_sub(1))
    }
}

/// Lift a critical configuration to the orbit it projects from.
pub fn config_to_orbit(s: &GeneratingFunction, config: &Configuration) -> Result<OrbitSegment> {
    let pts = config.unrolled();
    let k = pts.len() - 1;
    let grad = chain_gradient(s, &pts);
    let mut gmax = norm_all(&grad);
    if let Boundary::Periodic { .. } = config.boundary {
        // Criticality at q₀ ≡ q_N as well.
        let g0 = s.grad_big_q(&config.point(-1), &pts[0]) + s.grad_q(&pts[0], &pts[1]);
        gmax = gmax.max(g0.norm());
    }
    if gmax > 1e-8 {
        return Err(VariationalError::NotCritical { gradient: gmax });
    }
    let mut orbit = Vec::with_capacity(k + 1);
    orbit.push(AnnulusPoint::new(pts[0].clone(), -s.grad_q(&pts[0], &pts[1])));
    for i in 1..=k {
        orbit.push(AnnulusPoint::new(pts[i].clone(), s.grad_big_q(&pts[i - 1], &pts[i])));
    }
    for i in 0..k {
        let img = twist::forward(s, &orbit[i])?;
        let r = img.distance(&orbit[i + 1]);
        if r > 1e-9 * (1.0 + orbit[i + 1].to_vector().norm()) {
            return Err(VariationalError::OrbitMismatch { index: i, residual: r });
        }
    }
    let hess = if k >= 2 {
        Some(chain_hessian(s, &pts).min_eigenvalue())
    } else {
        None
    };
    let periodic = match &config.boundary {
        Boundary::FixedEnds => None,
        Boundary::Periodic { rho, period } => {
            orbit.truncate(*period);
            Some((rho.clone(), *period))
        }
    };
    Ok(OrbitSegment {
        points: orbit,
        periodic,
        min_hessian_eig: hess,
    })
}

/// Options for multi-start minimization.
#[derive(Clone, Debug)]
pub struct MultiStart {
    pub starts: usize,
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for MultiStart {
    fn default() -> Self {
        Self {
            starts: 8,
            perturbation: 0.25,
            seed: 0,
        }
    }
}

/// Result of [`minimize_periodic`].
#[derive(Clone, Debug)]
pub struct PeriodicMinimum {
    pub config: Configuration,
    pub mean_action: f64,
    pub min_hessian_eig: f64,
}

fn cyclic_gradient(s: &GeneratingFunction, q: &[DVector<f64>], rho: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = q.len();
    let at = |i: i64| -> DVector<f64> {
        let w = i.div_euclid(n as i64) as f64;
        &q[i.rem_euclid(n as i64) as usize] + rho * w
    };
    (0..n as i64)
        .map(|i| s.grad_big_q(&at(i - 1), &at(i)) + s.grad_q(&at(i), &at(i + 1)))
        .collect()
}

fn cyclic_hessian(s: &GeneratingFunction, q: &[DVector<f64>], rho: &DVector<f64>) -> DMatrix<f64> {
    let big_n = q.len();
    let n = q[0].len();
    let at = |i: i64| -> DVector<f64> {
        let w = i.div_euclid(big_n as i64) as f64;
        &q[i.rem_euclid(big_n as i64) as usize] + rho * w
    };
    let mut h = DMatrix::zeros(n * big_n, n * big_n);
    for i in 0..big_n as i64 {
        let iu = i as usize;
        let d = s.hess_big_q_big_q(&at(i - 1), &at(i)) + s.hess_qq(&at(i), &at(i + 1));
        let mut blk = h.view_mut((iu * n, iu * n), (n, n));
        blk += &d;
        let j = ((i + 1).rem_euclid(big_n as i64)) as usize;
        let c = s.hess_q_big_q(&at(i), &at(i + 1));
        // With N = 1 the coupling of q₀ to its own translate lands on the diagonal.
        let mut up = h.view_mut((iu * n, j * n), (n, n));
        up += &c;
        let mut lo = h.view_mut((j * n, iu * n), (n, n));
        lo += &c.transpose();
    }
    h
}

fn cyclic_action(s: &GeneratingFunction, q: &[DVector<f64>], rho: &DVector<f64>) -> f64 {
    let n = q.len();
    (0..n)
        .map(|i| {
            let next = if i + 1 == n { &q[0] + rho } else { q[i + 1].clone() };
            s.eval(&q[i], &next)
        })
        .sum()
}

fn newton_periodic(s: &GeneratingFunction, mut q: Vec<DVector<f64>>, rho: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let big_n = q.len();
    let n = q[0].len();
    let flat = |v: &[DVector<f64>]| DVector::from_iterator(big_n * n, v.iter().flat_map(|x| x.iter().copied()));
    let mut f = cyclic_action(s, &q, rho);
    let mut g = flat(&cyclic_gradient(s, &q, rho));
    for _ in 0..MAX_NEWTON {
        let gn = g.norm();
        if gn <= GRAD_TOL {
            return Ok(q);
        }
        let h = cyclic_hessian(s, &q, rho);
        let scale = linalg::max_abs_entry(&h).max(1.0);
        let eye = DMatrix::<f64>::identity(big_n * n, big_n * n);
        let mut shift = 0.0;
        let step = loop {
            if let Some(ch) = nalgebra::Cholesky::new(&h + &eye * shift) {
                break ch.solve(&(-&g));
            }
            shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
        };
        let slope = g.dot(&step);
        let mut t = 1.0;
        loop {
            let cand: Vec<DVector<f64>> = q.iter().enumerate().map(|(i, x)| x + step.rows(i * n, n) * t).collect();
            let fc = cyclic_action(s, &cand, rho);
            let gc = flat(&cyclic_gradient(s, &cand, rho));
            let armijo = fc <= f + 1e-4 * t * slope;
            let flat_ok = gc.norm() < gn && fc <= f + 1e-13 * (1.0 + f.abs());
            if armijo || flat_ok || t < 1e-12 {
                q = cand;
                f = fc;
                g = gc;
                break;
            }
            t *= 0.5;
        }
    }
    if g.norm() <= GRAD_TOL {
        Ok(q)
    } else {
        Err(VariationalError::NotConverged {
            iterations: MAX_NEWTON,
            gradient: g.norm(),
        })
    }
}

/// Minimize `Σ_{i=1..N} S(q_{i−1}, q_i)` over configurations with
/// `q_N = q₀ + ρ`, by multi-start Newton on the cyclic system.
pub fn minimize_periodic(
    s: &GeneratingFunction,
    rho: &[i64],
    period: usize,
    init: Option<&Configuration>,
    opts: &MultiStart,
) -> Result<PeriodicMinimum> {
    let n = s.n();
    if period < 1 || rho.len() != n {
        return Err(VariationalError::InvalidInput(
            "period must be ≥ 1 and ρ must have n entries".into(),
        ));
    }
    let rho_v = DVector::from_iterator(n, rho.iter().map(|&r| r as f64));
    let starts: Vec<Vec<DVector<f64>>> = (0..opts.starts.max(1))
        .map(|j| {
            if j == 0 {
                if let Some(c) = init {
                    return c.points.clone();
                }
            }
            // Straight lines with offsets spread over the torus diagonal,
            // half of them perturbed.
            let offset = j as f64 / opts.starts.max(1) as f64;
            let mut r = rng::stream(opts.seed, j as u64);
            let normal = Normal::new(0.0, opts.perturbation).expect("valid normal");
            (0..period)
                .map(|i| {
                    let base = DVector::from_element(n, offset) + &rho_v * (i as f64 / period as f64);
                    if j % 2 == 1 {
                        base.map(|v| v + normal.sample(&mut r))
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect();

    let results: Vec<Result<PeriodicMinimum>> = starts
        .into_par_iter()
        .map(|q0| {
            let q = newton_periodic(s, q0, &rho_v)?;
            let h = cyclic_hessian(s, &q, &rho_v);
            let min_eig = linalg::min_eigenvalue(&h);
            let mean_action = cyclic_action(s, &q, &rho_v) / period as f64;
            if min_eig < -1e-8 * linalg::max_abs_entry(&h).max(1.0) {
                return Err(VariationalError::SaddleDetected { min_eig });
            }
            Ok(PeriodicMinimum {
                config: Configuration::periodic(q, rho.to_vec()),
                mean_action,
                min_hessian_eig: min_eig,
            })
        })
        .collect();

    let mut best: Option<PeriodicMinimum> = None;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.mean_action < b.mean_action) {
                    best = Some(m);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

/// Outcome of a sampled strong-minimality test.
#[derive(Clone, Debug, Serialize)]
pub enum StrongMinCheck {
    Ok {
        competitors: usize,
    },
    Counterexample {
        segment: (i64, i64),
        segment_action: f64,
        competitor_action: f64,
        translates: (Vec<i64>, Vec<i64>),
        competitor_length: usize,
    },
}

impl StrongMinCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, StrongMinCheck::Ok { .. })
    }
}

/// Sample integer-translate competitors and compare reduced actions.
///
/// Segments of the configuration have length up to `k` (the number of
/// transitions; at least 8 for periodic configurations, which are
/// bi-infinite); competitor lengths range over `[1, 2·len]` and translates
/// over `‖k‖∞ ≤ 2`.
pub fn check_strong_min<R: Rng>(
    s: &GeneratingFunction,
    config: &Configuration,
    lbar: f64,
    competitors: usize,
    rng: &mut R,
) -> Result<StrongMinCheck> {
    let n = s.n();
    let total = config.transitions();
    let periodic = matches!(config.boundary, Boundary::Periodic { .. });
    let max_seg = if periodic { total.max(8) } else { total };
    for _ in 0..competitors {
        let len = rng.random_range(1..=max_seg) as i64;
        let m = if periodic {
            0
        } else {
            rng.random_range(0..=(total as i64 - len))
        };
        let l = m + len;
        let seg: Vec<DVector<f64>> = (m..=l).map(|i| config.point(i)).collect();
        let seg_action = chain_action(s, &seg) - len as f64 * lbar;
        let k1: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
        let k2: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
        let shift = |k: &[i64]| DVector::from_iterator(n, k.iter().map(|&v| v as f64));
        let a = &seg[0] + shift(&k1);
        let b = &seg[len as usize] + shift(&k2);
        let clen = rng.random_range(1..=(2 * len as usize));
        let comp = match minimize_fixed_ends(s, &a, &b, clen, None) {
            Ok(c) => c,
            // A failed competitor search proves nothing either way.
            Err(VariationalError::NotConverged { .. } | VariationalError::SaddleDetected { .. }) => continue,
            Err(e) => return Err(e),
        };
        let comp_action = chain_action(s, &comp.points) - clen as f64 * lbar;
        if seg_action > comp_action + 1e-8 {
            return Ok(StrongMinCheck::Counterexample {
                segment: (m, l),
                segment_action: seg_action,
                competitor_action: comp_action,
                translates: (k1, k2),
                competitor_length: clen,
            });
        }
    }
    Ok(StrongMinCheck::Ok { competitors })
}

/// Value and superdifferential of the action potential `𝒜_m(x, y)`.
#[derive(Clone, Debug, Serialize)]
pub struct ManeResult {
    pub value: f64,
    pub minimizer: Configuration,
    pub super_x: DVector<f64>,
    pub super_y: DVector<f64>,
}

/// `𝒜_m(x, y)`: minimal `Σ S̄` over `m`-step chains from `x` to `y`.
pub fn mane_potential(
    s: &GeneratingFunction,
    x: &DVector<f64>,
    y: &DVector<f64>,
    m: usize,
    lbar: f64,
) -> Result<ManeResult> {
    mane_potential_with(s, x, y, m, lbar, &MultiStart::default())
}

pub fn mane_potential_with(
    s: &GeneratingFunction,
    x: &DVector<f64>,
    y: &DVector<f64>,
    m: usize,
    lbar: f64,
    opts: &MultiStart,
) -> Result<ManeResult> {
    if m < 1 {
        return Err(VariationalError::InvalidInput("m must be at least 1".into()));
    }
    let base = straight_line(x, y, m);
    let candidates: Vec<Result<Vec<DVector<f64>>>> = (0..opts.starts.max(1))
        .into_par_iter()
        .map(|j| {
            let mut start = base.clone();
            if j > 0 && m > 1 {
                let mut r = rng::stream(opts.seed, j as u64);
                let normal = Normal::new(0.0, opts.perturbation).expect("valid normal");
                for p in start.iter_mut().take(m).skip(1) {
                    for v in p.iter_mut() {
                        *v += normal.sample(&mut r);
                    }
                }
            }
            newton_fixed_ends(s, start)
        })
        .collect();
    let mut best: Option<(f64, Vec<DVector<f64>>)> = None;
    let mut last_err = None;
    for c in candidates {
        match c {
            Ok(pts) => {
                let v = chain_action(s, &pts) - m as f64 * lbar;
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, pts));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (value, pts) = best.ok_or_else(|| last_err.expect("at least one start"))?;
    let super_x = s.grad_q(&pts[0], &pts[1]);
    let super_y = s.grad_big_q(&pts[m - 1], &pts[m]);
    Ok(ManeResult {
        value,
        minimizer: Configuration::fixed(pts),
        super_x,
        super_y,
    })
}
