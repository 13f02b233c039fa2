//! Discrete weak KAM: effective value and calibrated subactions on a grid.
//!
//! With `S̄ = S − 𝓛̄`, a backward calibrated subaction is a fixed point of
//! `T⁻u(y) = min_x u(x) + S̄(x, y)` and a forward one of
//! `T⁺u(x) = max_y u(y) − S̄(x, y)`. Both operators are computed on a uniform
//! grid over `[0, 1)ⁿ`; the infimum over `ℝⁿ` is restricted to the grid plus
//! integer translates `‖k‖∞ ≤ 1`.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::twist::GeneratingFunction;
use crate::variational::{self, Configuration, MultiStart, VariationalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakKamError {
    #[error("value iteration did not converge in {max_iters} sweeps (last increment {last:e})")]
    NoConvergence {
        max_iters: usize,
        last: f64,
        history: Vec<f64>,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}

pub type Result<T> = std::result::Result<T, WeakKamError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Backward,
    Forward,
}

/// Values of a `ℤⁿ`-periodic function on the grid `{i / N_g}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubactionGrid {
    pub n: usize,
    pub resolution: usize,
    pub kind: Kind,
    pub values: Vec<f64>,
    /// Sup-norm increment of the last sweep.
    pub residual: f64,
    /// `max |T u − u − c|` with the normalizing constant `c` of the last sweep.
    pub fixed_point_defect: f64,
    pub sweeps: usize,
}

impl SubactionGrid {
    pub fn zeros(n: usize, resolution: usize, kind: Kind) -> Self {
        Self {
            n,
            resolution,
            kind,
            values: vec![0.0; resolution.pow(n as u32)],
            residual: 0.0,
            fixed_point_defect: 0.0,
            sweeps: 0,
        }
    }

    pub fn from_fn<F: Fn(&DVector<f64>) -> f64>(n: usize, resolution: usize, kind: Kind, f: F) -> Self {
        let mut g = Self::zeros(n, resolution, kind);
        for i in 0..g.values.len() {
            g.values[i] = f(&g.node(i));
        }
        g
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Multi-index of a flat index (first coordinate varies slowest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for d in (0..self.n).rev() {
            out[d] = idx % self.resolution;
            idx /= self.resolution;
        }
        out
    }

    pub fn flat_index(&self, multi: &[i64]) -> usize {
        let r = self.resolution as i64;
        multi
            .iter()
            .fold(0usize, |acc, &i| acc * self.resolution + i.rem_euclid(r) as usize)
    }

    pub fn node(&self, idx: usize) -> DVector<f64> {
        let h = self.spacing();
        DVector::from_iterator(self.n, self.multi_index(idx).into_iter().map(|i| i as f64 * h))
    }

    /// Index of the grid cell containing `x` (mod 1), i.e. of its lower node.
    pub fn cell_of(&self, x: &DVector<f64>) -> usize {
        let m: Vec<i64> = x
            .iter()
            .map(|v| (v * self.resolution as f64 + 1e-9).floor() as i64)
            .collect();
        self.flat_index(&m)
    }

    /// Nearest grid node to `x` (mod 1).
    pub fn nearest_node(&self, x: &DVector<f64>) -> usize {
        let m: Vec<i64> = x.iter().map(|v| (v * self.resolution as f64).round() as i64).collect();
        self.flat_index(&m)
    }

    /// Periodic multilinear interpolation.
    pub fn value_at(&self, x: &DVector<f64>) -> f64 {
        let r = self.resolution as f64;
        let base: Vec<i64> = x.iter().map(|v| (v * r).floor() as i64).collect();
        let frac: Vec<f64> = x.iter().zip(&base).map(|(v, b)| v * r - *b as f64).collect();
        let mut total = 0.0;
        for corner in 0..(1usize << self.n) {
            let mut w = 1.0;
            let mut m = base.clone();
            for d in 0..self.n {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    m[d] += 1;
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                total += w * self.values[self.flat_index(&m)];
            }
        }
        total
    }

    /// Central-difference gradient at a node.
    pub fn gradient_at_node(&self, idx: usize) -> DVector<f64> {
        let m: Vec<i64> = self.multi_index(idx).into_iter().map(|v| v as i64).collect();
        let h = self.spacing();
        DVector::from_fn(self.n, |d, _| {
            let mut a = m.clone();
            let mut b = m.clone();
            a[d] += 1;
            b[d] -= 1;
            (self.values[self.flat_index(&a)] - self.values[self.flat_index(&b)]) / (2.0 * h)
        })
    }

    /// One-sided slopes at a node along coordinate `d`: (left, right).
    pub fn one_sided_slopes(&self, idx: usize, d: usize) -> (f64, f64) {
        let m: Vec<i64> = self.multi_index(idx).into_iter().map(|v| v as i64).collect();
        let h = self.spacing();
        let mut a = m.clone();
        let mut b = m;
        a[d] += 1;
        b[d] -= 1;
        let u = self.values[idx];
        (
            (u - self.values[self.flat_index(&b)]) / h,
            (self.values[self.flat_index(&a)] - u) / h,
        )
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn normalize_min(&mut self) -> f64 {
        let m = self.min();
        for v in &mut self.values {
            *v -= m;
        }
        m
    }
}

/// All translates `k ∈ {−1, 0, 1}ⁿ`.
fn translates(n: usize) -> Vec<DVector<f64>> {
    let count = 3usize.pow(n as u32);
    (0..count)
        .map(|mut c| {
            DVector::from_fn(n, |_, _| {
                let v = (c % 3) as f64 - 1.0;
                c /= 3;
                v
            })
        })
        .collect()
}

/// `K(x, y) = min_k S̄(x + k, y)` for grid nodes, with the minimizing `k`.
struct Kernel {
    size: usize,
    dense: Option<Vec<f64>>,
    nodes: Vec<DVector<f64>>,
    shifts: Vec<DVector<f64>>,
    lbar: f64,
}

const DENSE_KERNEL_LIMIT: usize = 1 << 22;

impl Kernel {
    fn new(s: &GeneratingFunction, grid: &SubactionGrid, lbar: f64) -> Self {
        let size = grid.len();
        let nodes: Vec<DVector<f64>> = (0..size).map(|i| grid.node(i)).collect();
        let shifts = translates(grid.n);
        let mut k = Self {
            size,
            dense: None,
            nodes,
            shifts,
            lbar,
        };
        if size * size <= DENSE_KERNEL_LIMIT {
            let table: Vec<f64> = (0..size * size)
                .into_par_iter()
                .map(|ij| k.eval(s, ij / size, ij % size).0)
                .collect();
            k.dense = Some(table);
        }
        k
    }

    /// `(min_k S̄(x_i + k, y_j), argmin k)`.
    fn eval(&self, s: &GeneratingFunction, i: usize, j: usize) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (t, k) in self.shifts.iter().enumerate() {
            let v = s.eval(&(&self.nodes[i] + k), &self.nodes[j]) - self.lbar;
            if v < best.0 {
                best = (v, t);
            }
        }
        best
    }

    fn get(&self, s: &GeneratingFunction, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(t) => t[i * self.size + j],
            None => self.eval(s, i, j).0,
        }
    }
}

/// `T⁻u` without normalization.
fn backward_raw(s: &GeneratingFunction, kernel: &Kernel, u: &[f64]) -> Vec<f64> {
    (0..kernel.size)
        .into_par_iter()
        .map(|j| {
            (0..kernel.size)
                .map(|i| u[i] + kernel.get(s, i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `T⁺u` without normalization: `max_y u(y) − S̄(x, y)`.
fn forward_raw(s: &GeneratingFunction, kernel: &Kernel, u: &[f64]) -> Vec<f64> {
    (0..kernel.size)
        .into_par_iter()
        .map(|i| {
            (0..kernel.size)
                .map(|j| u[j] - kernel.get(s, i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// One backward Lax–Oleinik step, renormalized to minimum 0.
pub fn lax_oleinik_backward(s: &GeneratingFunction, u: &SubactionGrid, lbar: f64) -> SubactionGrid {
    let kernel = Kernel::new(s, u, lbar);
    let mut out = u.clone();
    out.values = backward_raw(s, &kernel, &u.values);
    out.kind = Kind::Backward;
    out.normalize_min();
    out
}

/// One forward Lax–Oleinik step, renormalized to minimum 0.
pub fn lax_oleinik_forward(s: &GeneratingFunction, u: &SubactionGrid, lbar: f64) -> SubactionGrid {
    let kernel = Kernel::new(s, u, lbar);
    let mut out = u.clone();
    out.values = forward_raw(s, &kernel, &u.values);
    out.kind = Kind::Forward;
    out.normalize_min();
    out
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Estimate of `𝓛̄` with the periodic configuration attaining it.
#[derive(Clone, Debug)]
pub struct LbarEstimate {
    pub lbar: f64,
    pub config: Configuration,
}

/// Minimal mean action over periodic configurations of period `≤ max_period`
/// and rotation vectors `‖ρ‖∞ ≤ 1`.
pub fn estimate_lbar(s: &GeneratingFunction, max_period: usize) -> Result<LbarEstimate> {
    let n = s.n();
    let rhos: Vec<Vec<i64>> = translates(n)
        .into_iter()
        .map(|k| k.iter().map(|&v| v as i64).collect())
        .collect();
    let mut best: Option<LbarEstimate> = None;
    for period in 1..=max_period.max(1) {
        for rho in &rhos {
            let m = variational::minimize_periodic(s, rho, period, None, &MultiStart::default())?;
            if best.as_ref().is_none_or(|b| m.mean_action < b.lbar) {
                best = Some(LbarEstimate {
                    lbar: m.mean_action,
                    config: m.config,
                });
            }
        }
    }
    Ok(best.expect("at least one period"))
}

/// Iterate the Lax–Oleinik operator of the given kind from `u ≡ 0` until the
/// sup-norm increment is at most `tol`.
pub fn solve_calibrated(
    s: &GeneratingFunction,
    kind: Kind,
    lbar: f64,
    resolution: usize,
    tol: f64,
    max_iters: usize,
) -> Result<SubactionGrid> {
    let start = SubactionGrid::zeros(s.n(), resolution, kind);
    iterate_from(s, start, kind, lbar, tol, max_iters)
}

fn iterate_from(
    s: &GeneratingFunction,
    mut u: SubactionGrid,
    kind: Kind,
    lbar: f64,
    tol: f64,
    max_iters: usize,
) -> Result<SubactionGrid> {
    if u.resolution < 2 {
        return Err(WeakKamError::InvalidGrid("resolution must be at least 2".into()));
    }
    let kernel = Kernel::new(s, &u, lbar);
    u.kind = kind;
    let mut history = Vec::new();
    for sweep in 1..=max_iters {
        let raw = match kind {
            Kind::Backward => backward_raw(s, &kernel, &u.values),
            Kind::Forward => forward_raw(s, &kernel, &u.values),
        };
        let shift = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let next: Vec<f64> = raw.iter().map(|v| v - shift).collect();
        let inc = sup_diff(&next, &u.values);
        u.values = next;
        history.push(inc);
        if inc <= tol {
            u.residual = inc;
            u.fixed_point_defect = inc;
            u.sweeps = sweep;
            return Ok(u);
        }
    }
    Err(WeakKamError::NoConvergence {
        max_iters,
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Conjugate pair, coincidence set and contact pairs.
#[derive(Clone, Debug, Serialize)]
pub struct WeakKamReport {
    pub lbar: f64,
    pub u_minus: SubactionGrid,
    pub u_plus: SubactionGrid,
    /// Threshold used for the coincidence set.
    pub tol_coincidence: f64,
    /// Flat indices of the cells where `u₋ − u₊ ≤ tol_I`.
    pub coincidence: Vec<usize>,
    /// Calibrating pairs `(x, y)` of `u₋`, one per target node.
    pub contact_pairs: Vec<(DVector<f64>, DVector<f64>)>,
    /// `max(u₊ − u₋)` after normalization (zero by construction).
    pub order_defect: f64,
}

/// Floor on the coincidence threshold, for residuals at rounding level.
pub const COINCIDENCE_FLOOR: f64 = 1e-10;

/// Compute `u₊` by forward iteration from `u₋` and the sets tied to the pair.
pub fn conjugate_pair(
    s: &GeneratingFunction,
    u_minus: &SubactionGrid,
    lbar: f64,
    tol: f64,
    max_iters: usize,
) -> Result<WeakKamReport> {
    let mut u_plus = iterate_from(s, u_minus.clone(), Kind::Forward, lbar, tol, max_iters)?;
    // Calibrated pairs satisfy u₊ ≤ u₋ with equality on the Mather set; fix
    // the constant so that max(u₊ − u₋) = 0.
    let c = u_minus
        .values
        .iter()
        .zip(&u_plus.values)
        .map(|(a, b)| b - a)
        .fold(f64::NEG_INFINITY, f64::max);
    for v in &mut u_plus.values {
        *v -= c;
    }
    let order_defect = u_minus
        .values
        .iter()
        .zip(&u_plus.values)
        .map(|(a, b)| b - a)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol_coincidence = (4.0 * u_minus.residual.max(u_plus.residual)).max(COINCIDENCE_FLOOR);
    let coincidence = (0..u_minus.len())
        .filter(|&i| u_minus.values[i] - u_plus.values[i] <= tol_coincidence)
        .collect();
    let kernel = Kernel::new(s, u_minus, lbar);
    let contact_pairs = (0..u_minus.len())
        .into_par_iter()
        .map(|j| {
            let (mut bi, mut bv) = (0, f64::INFINITY);
            for i in 0..kernel.size {
                let v = u_minus.values[i] + kernel.get(s, i, j);
                if v < bv {
                    bv = v;
                    bi = i;
                }
            }
            let (_, kidx) = kernel.eval(s, bi, j);
            (&kernel.nodes[bi] + &kernel.shifts[kidx], kernel.nodes[j].clone())
        })
        .collect();
    Ok(WeakKamReport {
        lbar,
        u_minus: u_minus.clone(),
        u_plus,
        tol_coincidence,
        coincidence,
        contact_pairs,
        order_defect,
    })
}

/// Result of [`sigma_set`].
#[derive(Clone, Debug, Serialize)]
pub struct SigmaSet {
    pub minimizers: Vec<DVector<f64>>,
    pub values: Vec<f64>,
    /// `∂S/∂Q(x, y)` when the set is a singleton.
    pub superdifferential: Option<DVector<f64>>,
}

impl SigmaSet {
    pub fn is_singleton(&self) -> bool {
        self.minimizers.len() == 1
    }
}

/// Local minimizers of `x ↦ u₋(x) + S̄(x, y)` within `tol` of the global
/// minimum, refined by a parabolic fit through neighbouring nodes.
pub fn sigma_set(s: &GeneratingFunction, u_minus: &SubactionGrid, y: &DVector<f64>, lbar: f64, tol: f64) -> SigmaSet {
    let size = u_minus.len();
    let shifts = translates(u_minus.n);
    let h = u_minus.spacing();
    let lift = |i: usize| -> (f64, DVector<f64>) {
        let x = u_minus.node(i);
        let mut best = (f64::INFINITY, x.clone());
        for k in &shifts {
            let xk = &x + k;
            let v = u_minus.values[i] + s.eval(&xk, y) - lbar;
            if v < best.0 {
                best = (v, xk);
            }
        }
        best
    };
    let vals: Vec<(f64, DVector<f64>)> = (0..size).into_par_iter().map(lift).collect();
    let global = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let neighbours = |i: usize| -> Vec<usize> {
        let m: Vec<i64> = u_minus.multi_index(i).into_iter().map(|v| v as i64).collect();
        let mut out = Vec::with_capacity(2 * u_minus.n);
        for d in 0..u_minus.n {
            for delta in [-1i64, 1] {
                let mut a = m.clone();
                a[d] += delta;
                out.push(u_minus.flat_index(&a));
            }
        }
        out
    };
    let mut picked: Vec<usize> = Vec::new();
    for i in 0..size {
        if vals[i].0 > global + tol {
            continue;
        }
        let nb = neighbours(i);
        if nb.iter().all(|&j| vals[i].0 <= vals[j].0) {
            // Plateaus of equal values count once.
            if !nb.iter().any(|j| picked.contains(j)) {
                picked.push(i);
            }
        }
    }
    let mut minimizers = Vec::new();
    let mut values = Vec::new();
    for &i in &picked {
        let mut x = vals[i].1.clone();
        let m: Vec<i64> = u_minus.multi_index(i).into_iter().map(|v| v as i64).collect();
        for d in 0..u_minus.n {
            let mut a = m.clone();
            let mut b = m.clone();
            a[d] += 1;
            b[d] -= 1;
            let fp = vals[u_minus.flat_index(&a)].0;
            let fm = vals[u_minus.flat_index(&b)].0;
            let f0 = vals[i].0;
            let curv = fp + fm - 2.0 * f0;
            if curv > 0.0 {
                let off = 0.5 * (fm - fp) / curv;
                x[d] += off.clamp(-0.5, 0.5) * h;
            }
        }
        minimizers.push(x);
        values.push(vals[i].0);
    }
    let superdifferential = if minimizers.len() == 1 {
        Some(s.grad_big_q(&minimizers[0], y))
    } else {
        None
    };
    SigmaSet {
        minimizers,
        values,
        superdifferential,
    }
}

/// Worst violation of `u(y) − u(x) ≤ S̄(x + k, y)` over random node pairs and
/// translates `‖k‖∞ ≤ 1`. Non-positive means the inequality holds.
pub fn subaction_violation<R: Rng>(
    s: &GeneratingFunction,
    u: &SubactionGrid,
    lbar: f64,
    pairs: usize,
    rng: &mut R,
) -> f64 {
    let shifts = translates(u.n);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let i = rng.random_range(0..u.len());
        let j = rng.random_range(0..u.len());
        let k = &shifts[rng.random_range(0..shifts.len())];
        let x = u.node(i) + k;
        let y = u.node(j);
        let d = u.values[j] - u.values[i] - (s.eval(&x, &y) - lbar);
        worst = worst.max(d);
    }
    worst
}

/// Calibration defect `max_y |min_x(u(x) + S̄(x, y)) − u(y)|` up to the
/// normalizing constant.
pub fn calibration_defect(s: &GeneratingFunction, u: &SubactionGrid, lbar: f64) -> f64 {
    let kernel = Kernel::new(s, u, lbar);
    let raw = backward_raw(s, &kernel, &u.values);
    let c = raw.iter().copied().fold(f64::INFINITY, f64::min);
    raw.iter()
        .zip(&u.values)
        .fold(0.0, |m, (a, b)| m.max((a - c - b).abs()))
}

/// Largest second difference `u(x+h) + u(x−h) − 2u(x)` over random nodes and
/// coordinate directions, divided by `h²`.
pub fn semiconcavity_estimate<R: Rng>(u: &SubactionGrid, samples: usize, rng: &mut R) -> f64 {
    let h = u.spacing();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let i = rng.random_range(0..u.len());
        let d = rng.random_range(0..u.n);
        let m: Vec<i64> = u.multi_index(i).into_iter().map(|v| v as i64).collect();
        let mut a = m.clone();
        let mut b = m;
        a[d] += 1;
        b[d] -= 1;
        let second = u.values[u.flat_index(&a)] + u.values[u.flat_index(&b)] - 2.0 * u.values[i];
        worst = worst.max(second / (h * h));
    }
    worst
}

/// Defect of the contact relation `u(y) − u(x) − S̄(x, y) ≥ 0` along an orbit
/// configuration; values are interpolated off the grid.
pub fn contact_defect(s: &GeneratingFunction, u: &SubactionGrid, config: &Configuration, lbar: f64) -> f64 {
    let k = config.transitions() as i64;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        let x = config.point(i);
        let y = config.point(i + 1);
        let d = u.value_at(&y) - u.value_at(&x) - (s.eval(&x, &y) - lbar);
        worst = worst.max(-d);
    }
    worst
}

/// Empirical Lipschitz constant of the central-difference gradient of `u`
/// over node pairs drawn from `nodes`.
pub fn gradient_lipschitz(u: &SubactionGrid, nodes: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, &i) in nodes.iter().enumerate() {
        for &j in nodes.iter().skip(a + 1) {
            let xi = u.node(i);
            let xj = u.node(j);
            let mut d = &xi - &xj;
            d.apply(|v| *v -= v.round());
            let dist = d.norm();
            if dist > 0.0 {
                let g = (u.gradient_at_node(i) - u.gradient_at_node(j)).norm();
                worst = worst.max(g / dist);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrable_zero_is_fixed() {
        let s = GeneratingFunction::integrable(1);
        let u = SubactionGrid::zeros(1, 32, Kind::Backward);
        let t = lax_oleinik_backward(&s, &u, 0.0);
        assert!(t.values.iter().all(|&v| v == 0.0));
        let sol = solve_calibrated(&s, Kind::Backward, 0.0, 32, 1e-12, 10).unwrap();
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn operator_is_monotone() {
        let s = GeneratingFunction::standard(1.0);
        let u = SubactionGrid::from_fn(1, 40, Kind::Backward, |x| (2.0 * PI * x[0]).cos());
        let mut v = u.clone();
        for (i, x) in v.values.iter_mut().enumerate() {
            *x += 0.1 + 0.01 * (i % 3) as f64;
        }
        let kernel = Kernel::new(&s, &u, 0.0);
        let tu = backward_raw(&s, &kernel, &u.values);
        let tv = backward_raw(&s, &kernel, &v.values);
        assert!(tu.iter().zip(&tv).all(|(a, b)| a <= b));
    }

    #[test]
    fn lbar_of_standard_map() {
        let eps = 0.7;
        let s = GeneratingFunction::standard(eps);
        let est = estimate_lbar(&s, 2).unwrap();
        assert!((est.lbar + eps / (4.0 * PI * PI)).abs() < 1e-12);
        let est = estimate_lbar(&GeneratingFunction::integrable(1), 2).unwrap();
        assert!(est.lbar.abs() < 1e-12);
    }

    #[test]
    fn integrable_sigma_is_diagonal() {
        let s = GeneratingFunction::integrable(1);
        let u = SubactionGrid::zeros(1, 64, Kind::Backward);
        let y = DVector::from_vec(vec![0.25]);
        let sig = sigma_set(&s, &u, &y, 0.0, 1e-12);
        assert!(sig.is_singleton());
        assert!((sig.minimizers[0][0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn grid_indexing_round_trip() {
        let g = SubactionGrid::zeros(2, 5, Kind::Forward);
        for i in 0..g.len() {
            let m: Vec<i64> = g.multi_index(i).into_iter().map(|v| v as i64).collect();
            assert_eq!(g.flat_index(&m), i);
        }
        let x = DVector::from_vec(vec![0.4, 0.8]);
        assert_eq!(g.nearest_node(&x), g.flat_index(&[2, 4]));
    }
}
