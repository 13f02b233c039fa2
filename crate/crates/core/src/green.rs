//! Green bundles, Lyapunov spectra and the theorem harnesses built on them.
//!
//! Along a minimizing orbit the images `G_k(x) = Df^k V(f^{−k}x)` of the
//! vertical are graphs of symmetric matrices `s_k` that decrease to `s₊`,
//! while `G_{−k}` increase to `s₋`. The gap `ΔS = s₊ − s₋` controls the
//! Lyapunov exponents: its kernel dimension `p` counts pairs of zero
//! exponents, and its smallest positive eigenvalue bounds the smallest
//! positive exponent from below.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, SortedEigen};
use crate::symplectic::{self, compare_under_vertical, symplectic_inverse, LagrangianFrame, Relation, SymplecticError};
use crate::twist::{AnnulusPoint, GeneratingFunction, TwistError};
use crate::variational::{OrbitSegment, VariationalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("image of the vertical is not transverse to the vertical at index {index}, k = {k}")]
    ConjugatePoint { index: i64, k: usize },
    #[error("Green iterates are not monotone at k = {k} (eigenvalue {min_eig:e})")]
    MonotonicityViolation { k: usize, min_eig: f64 },
    #[error("Green iterates did not converge in {k_max} steps (last increment {last_increment:e})")]
    NotConverged { k_max: usize, last_increment: f64 },
    #[error("intersection dimension is ambiguous near the cutoff (eigenvalues {eigenvalues:?})")]
    ReductionIllConditioned { eigenvalues: Vec<f64> },
    #[error("all Lyapunov exponents are zero; nothing to bound")]
    SkippedAllZero,
    #[error("orbit too short: need {needed} points, have {have}")]
    OrbitTooShort { needed: usize, have: usize },
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

pub type Result<T> = std::result::Result<T, GreenError>;

/// Tangent maps along an orbit, indexed like the orbit.
struct Cocycle {
    tangents: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
    periodic: bool,
}

impl Cocycle {
    fn new(s: &GeneratingFunction, orbit: &OrbitSegment) -> Result<Self> {
        let count = orbit.distinct_transitions();
        if count == 0 {
            return Err(GreenError::OrbitTooShort {
                needed: 2,
                have: orbit.len(),
            });
        }
        let tangents: Vec<DMatrix<f64>> = (0..count as i64)
            .map(|i| orbit.tangent(s, i))
            .collect::<std::result::Result<_, _>>()?;
        let inverses = tangents.iter().map(symplectic_inverse).collect();
        Ok(Self {
            tangents,
            inverses,
            periodic: orbit.period().is_some(),
        })
    }

    fn len(&self) -> usize {
        self.tangents.len()
    }

    /// Number of orbit points the cocycle acts on.
    fn points(&self) -> usize {
        if self.periodic {
            self.len()
        } else {
            self.len() + 1
        }
    }

    fn wrap(&self, i: i64) -> Option<usize> {
        if self.periodic {
            Some(i.rem_euclid(self.len() as i64) as usize)
        } else if i >= 0 && (i as usize) < self.len() {
            Some(i as usize)
        } else {
            None
        }
    }

    /// `DF(x_i)`.
    fn df(&self, i: i64) -> Option<&DMatrix<f64>> {
        self.wrap(i).map(|j| &self.tangents[j])
    }

    /// `DF(x_i)⁻¹`, mapping the tangent space at `x_{i+1}` to that at `x_i`.
    fn df_inv(&self, i: i64) -> Option<&DMatrix<f64>> {
        self.wrap(i).map(|j| &self.inverses[j])
    }
}

fn blocks(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows() / 2;
    (
        m.view((0, 0), (n, n)).into_owned(),
        m.view((0, n), (n, n)).into_owned(),
        m.view((n, 0), (n, n)).into_owned(),
        m.view((n, n), (n, n)).into_owned(),
    )
}

/// Graph of the image of `graph(s)` (or of the vertical when `s` is `None`).
fn push_graph(m: &DMatrix<f64>, s: Option<&DMatrix<f64>>) -> Option<DMatrix<f64>> {
    let (a, b, c, d) = blocks(m);
    let (top, bottom) = match s {
        None => (b, d),
        Some(s) => (&a + &b * s, &c + &d * s),
    };
    frame_to_graph(&top, &bottom)
}

fn frame_to_graph(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let frame = linalg::vstack(top, bottom);
    let scale = linalg::spectral_norm(&frame);
    let smin = top
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if smin.is_nan() || smin <= 1e-12 * scale {
        return None;
    }
    let inv = top.clone().try_inverse()?;
    Some(linalg::symmetrize(&(bottom * inv)))
}

/// Vertical pushed through a product of maps with QR re-orthonormalization.
fn frame_product<'a, I: Iterator<Item = &'a DMatrix<f64>>>(n: usize, maps: I) -> Option<DMatrix<f64>> {
    let mut frame = linalg::vstack(&DMatrix::zeros(n, n), &DMatrix::identity(n, n));
    for m in maps {
        frame = linalg::orthonormalize(&(m * frame));
    }
    let top = frame.rows(0, n).into_owned();
    let bottom = frame.rows(n, n).into_owned();
    frame_to_graph(&top, &bottom)
}

/// Green iterates at one orbit point.
#[derive(Clone, Debug, Serialize)]
pub struct GreenIterates {
    pub index: i64,
    /// `s_1, …, s_{k_max}`: graphs of `G_k`.
    pub forward: Vec<DMatrix<f64>>,
    /// `s_{−1}, …, s_{−k_max}`: graphs of `G_{−k}`.
    pub backward: Vec<DMatrix<f64>>,
}

const MONOTONE_SLACK: f64 = 1e-10;

fn check_monotone(seq: &[DMatrix<f64>], decreasing: bool) -> Option<(usize, f64)> {
    for k in 1..seq.len() {
        let diff = if decreasing {
            &seq[k - 1] - &seq[k]
        } else {
            &seq[k] - &seq[k - 1]
        };
        let e = linalg::min_eigenvalue(&diff);
        let scale = 1.0 + linalg::max_abs_entry(&seq[k]);
        if e < -MONOTONE_SLACK * scale {
            return Some((k, e));
        }
    }
    None
}

/// Iterates `s_{±k}`, `k ≤ k_max`, at the given orbit indices (all points of
/// a periodic orbit when `targets` is `None`).
pub fn green_iterates(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    k_max: usize,
    targets: Option<&[i64]>,
) -> Result<Vec<GreenIterates>> {
    let cocycle = Cocycle::new(s, orbit)?;
    iterates_on(&cocycle, orbit.n(), k_max, targets)
}

fn iterates_on(cocycle: &Cocycle, n: usize, k_max: usize, targets: Option<&[i64]>) -> Result<Vec<GreenIterates>> {
    let points = cocycle.points();
    let targets: Vec<i64> = match targets {
        Some(t) => t.to_vec(),
        None => (0..points as i64).collect(),
    };
    if !cocycle.periodic {
        for &t in &targets {
            let lo = t - k_max as i64;
            let hi = t + k_max as i64;
            if lo < 0 || hi >= points as i64 {
                return Err(GreenError::OrbitTooShort {
                    needed: 2 * k_max + 1,
                    have: points,
                });
            }
        }
    }
    // Layered Riccati recursion over orbit indices.
    let mut fwd_levels: Vec<Option<DMatrix<f64>>> = vec![None; points];
    let mut bwd_levels: Vec<Option<DMatrix<f64>>> = vec![None; points];
    let mut out: Vec<GreenIterates> = targets
        .iter()
        .map(|&t| GreenIterates {
            index: t,
            forward: Vec::with_capacity(k_max),
            backward: Vec::with_capacity(k_max),
        })
        .collect();
    for k in 1..=k_max {
        let mut next_f: Vec<Option<DMatrix<f64>>> = vec![None; points];
        let mut next_b: Vec<Option<DMatrix<f64>>> = vec![None; points];
        for i in 0..points as i64 {
            // Forward: G_k(x_i) = DF(x_{i−1}) G_{k−1}(x_{i−1}).
            if let Some(df) = cocycle.df(i - 1) {
                let prev_idx = cocycle.wrap(i - 1).unwrap_or(0);
                let prev = if k == 1 { None } else { fwd_levels[prev_idx].as_ref() };
                if k == 1 || prev.is_some() {
                    next_f[i as usize] = push_graph(df, prev);
                    if next_f[i as usize].is_none() && targets.contains(&i) {
                        return Err(GreenError::ConjugatePoint { index: i, k });
                    }
                }
            }
            // Backward: G_{−k}(x_i) = DF(x_i)⁻¹ G_{−(k−1)}(x_{i+1}).
            if let Some(dfi) = cocycle.df_inv(i) {
                let nxt_idx = if cocycle.periodic {
                    cocycle.wrap(i + 1).unwrap_or(0)
                } else {
                    (i + 1) as usize
                };
                let prev = if k == 1 { None } else { bwd_levels[nxt_idx].as_ref() };
                if k == 1 || prev.is_some() {
                    next_b[i as usize] = push_graph(dfi, prev);
                    if next_b[i as usize].is_none() && targets.contains(&i) {
                        return Err(GreenError::ConjugatePoint { index: i, k });
                    }
                }
            }
        }
        fwd_levels = next_f;
        bwd_levels = next_b;
        for it in out.iter_mut() {
            let idx = if cocycle.periodic {
                cocycle.wrap(it.index).unwrap_or(0)
            } else {
                it.index as usize
            };
            let f = fwd_levels[idx]
                .clone()
                .ok_or(GreenError::ConjugatePoint { index: it.index, k })?;
            let b = bwd_levels[idx]
                .clone()
                .ok_or(GreenError::ConjugatePoint { index: it.index, k })?;
            it.forward.push(f);
            it.backward.push(b);
        }
    }
    // Monotonicity; on failure recompute the offending iterate with
    // orthonormalized frames once.
    for it in out.iter_mut() {
        if let Some((k, _)) = check_monotone(&it.forward, true) {
            let kk = k + 1;
            let maps: Vec<&DMatrix<f64>> = (1..=kk as i64)
                .rev()
                .map(|j| cocycle.df(it.index - j).expect("in range"))
                .collect();
            if let Some(g) = frame_product(n, maps.into_iter()) {
                it.forward[k] = g;
            }
            if let Some((k, e)) = check_monotone(&it.forward, true) {
                return Err(GreenError::MonotonicityViolation { k: k + 1, min_eig: e });
            }
        }
        if let Some((k, _)) = check_monotone(&it.backward, false) {
            let kk = k + 1;
            let maps: Vec<&DMatrix<f64>> = (0..kk as i64)
                .rev()
                .map(|j| cocycle.df_inv(it.index + j).expect("in range"))
                .collect();
            if let Some(g) = frame_product(n, maps.into_iter()) {
                it.backward[k] = g;
            }
            if let Some((k, e)) = check_monotone(&it.backward, false) {
                return Err(GreenError::MonotonicityViolation { k: k + 1, min_eig: e });
            }
        }
    }
    Ok(out)
}

/// Green bundles at one orbit point.
#[derive(Clone, Debug, Serialize)]
pub struct GreenData {
    pub base: AnnulusPoint,
    pub index: i64,
    pub s_minus: DMatrix<f64>,
    pub s_plus: DMatrix<f64>,
    pub delta_s: DMatrix<f64>,
    pub p_dim: usize,
    /// Smallest eigenvalue of `ΔS` above the rank cutoff.
    pub q_plus_val: Option<f64>,
    pub k_used: usize,
    /// Limits obtained by the two-term fit `s_k ≈ s_∞ + c/k`.
    pub extrapolated: bool,
    /// Tolerance actually achieved (increment, or extrapolation error).
    pub achieved_tol: f64,
    pub rank_cutoff: f64,
}

/// Options for [`green_bundles`].
#[derive(Clone, Debug)]
pub struct GreenOptions {
    pub tol: f64,
    pub k_max: usize,
    /// Accept Richardson-extrapolated limits when plain iteration stalls.
    pub richardson: bool,
}

impl Default for GreenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            k_max: 1000,
            richardson: true,
        }
    }
}

fn sup(m: &DMatrix<f64>) -> f64 {
    linalg::sym_norm(m)
}

/// First `k` with both increments at most `tol`, if any.
fn converged_at(it: &GreenIterates, tol: f64) -> Option<usize> {
    (1..it.forward.len()).find(|&k| {
        sup(&(&it.forward[k] - &it.forward[k - 1])) <= tol && sup(&(&it.backward[k] - &it.backward[k - 1])) <= tol
    })
}

fn richardson(seq: &[DMatrix<f64>]) -> (DMatrix<f64>, f64) {
    let k = seq.len();
    let fit = |hi: usize| -> DMatrix<f64> {
        // s_∞ ≈ 2 s_{hi} − s_{hi/2}, with s_j stored at j − 1.
        &seq[hi - 1] * 2.0 - &seq[hi / 2 - 1]
    };
    let a = fit(k - k % 2);
    let b = fit((k / 2) - (k / 2) % 2);
    let err = sup(&(&a - &b));
    (a, err)
}

#[allow(clippy::too_many_arguments)]
fn finish_green(
    base: AnnulusPoint,
    index: i64,
    s_minus: DMatrix<f64>,
    s_plus: DMatrix<f64>,
    k_used: usize,
    extrapolated: bool,
    achieved_tol: f64,
    tol: f64,
) -> GreenData {
    let delta_s = linalg::symmetrize(&(&s_plus - &s_minus));
    let e = SortedEigen::new(&delta_s);
    let rank_cutoff = (10.0 * tol.max(achieved_tol)).max(1e-8) * (1.0 + e.max_abs());
    let p_dim = e.values.iter().filter(|&&v| v <= rank_cutoff).count();
    let q_plus_val = e.values.iter().copied().find(|&v| v > rank_cutoff);
    GreenData {
        base,
        index,
        s_minus,
        s_plus,
        delta_s,
        p_dim,
        q_plus_val,
        k_used,
        extrapolated,
        achieved_tol,
        rank_cutoff,
    }
}

fn bundles_from_iterates(orbit: &OrbitSegment, it: &GreenIterates, opts: &GreenOptions) -> Result<GreenData> {
    let base = orbit.point(it.index);
    if let Some(k) = converged_at(it, opts.tol) {
        let inc = sup(&(&it.forward[k] - &it.forward[k - 1])).max(sup(&(&it.backward[k] - &it.backward[k - 1])));
        return Ok(finish_green(
            base,
            it.index,
            it.backward[k].clone(),
            it.forward[k].clone(),
            k + 1,
            false,
            inc,
            opts.tol,
        ));
    }
    let k = it.forward.len();
    let last = sup(&(&it.forward[k - 1] - &it.forward[k - 2])).max(sup(&(&it.backward[k - 1] - &it.backward[k - 2])));
    if !opts.richardson || k < 8 {
        return Err(GreenError::NotConverged {
            k_max: k,
            last_increment: last,
        });
    }
    let (sp, ep) = richardson(&it.forward);
    let (sm, em) = richardson(&it.backward);
    Ok(finish_green(base, it.index, sm, sp, k, true, ep.max(em), opts.tol))
}

/// Green bundles at one orbit index.
pub fn green_bundles(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    index: i64,
    opts: &GreenOptions,
) -> Result<GreenData> {
    let its = green_iterates(s, orbit, opts.k_max, Some(&[index]))?;
    bundles_from_iterates(orbit, &its[0], opts)
}

/// Green bundles at every point of a periodic orbit (or at every index of a
/// segment listed in `targets`).
pub fn green_bundles_along(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    targets: Option<&[i64]>,
    opts: &GreenOptions,
) -> Result<Vec<GreenData>> {
    let its = green_iterates(s, orbit, opts.k_max, targets)?;
    its.iter().map(|it| bundles_from_iterates(orbit, it, opts)).collect()
}

/// Outcome of [`dynamical_criterion_check`].
#[derive(Clone, Debug, Serialize)]
pub struct DynamicalCriterion {
    pub forward_max_ratio: f64,
    pub backward_max_ratio: f64,
    pub bounded_forward: bool,
    pub bounded_backward: bool,
    /// Sine of the angle between `v` and `G₋` (meaningful when bounded forward).
    pub distance_to_g_minus: f64,
    /// Sine of the angle between `v` and `G₊` (meaningful when bounded backward).
    pub distance_to_g_plus: f64,
}

/// Growth ratio above which `D(π∘f^k)v` counts as unbounded.
pub const UNBOUNDED_RATIO: f64 = 1e3;

/// Bounded horizontal growth of `v` under forward (backward) iteration
/// places it in `G₋` (`G₊`).
pub fn dynamical_criterion_check(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    green: &GreenData,
    v: &DVector<f64>,
    horizon: usize,
) -> Result<DynamicalCriterion> {
    let cocycle = Cocycle::new(s, orbit)?;
    let n = orbit.n();
    let vn = v.norm();
    let mut w = v.clone();
    let mut fwd: f64 = 0.0;
    for k in 0..horizon as i64 {
        let df = cocycle.df(green.index + k).ok_or(GreenError::OrbitTooShort {
            needed: horizon,
            have: orbit.len(),
        })?;
        w = df * w;
        fwd = fwd.max(w.rows(0, n).norm() / vn);
    }
    let mut w = v.clone();
    let mut bwd: f64 = 0.0;
    for k in 1..=horizon as i64 {
        let dfi = cocycle.df_inv(green.index - k).ok_or(GreenError::OrbitTooShort {
            needed: horizon,
            have: orbit.len(),
        })?;
        w = dfi * w;
        bwd = bwd.max(w.rows(0, n).norm() / vn);
    }
    let vm = DMatrix::from_column_slice(2 * n, 1, v.as_slice());
    let gm = LagrangianFrame::graph(green.s_minus.clone())?;
    let gp = LagrangianFrame::graph(green.s_plus.clone())?;
    Ok(DynamicalCriterion {
        forward_max_ratio: fwd,
        backward_max_ratio: bwd,
        bounded_forward: fwd <= UNBOUNDED_RATIO,
        bounded_backward: bwd <= UNBOUNDED_RATIO,
        distance_to_g_minus: linalg::min_principal_sine(&vm, gm.columns()),
        distance_to_g_plus: linalg::min_principal_sine(&vm, gp.columns()),
    })
}

/// Sorted Lyapunov exponents with their sign counts.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// Descending.
    pub exponents: Vec<f64>,
    pub tau: f64,
    pub zero_count: usize,
    pub pos_count: usize,
    pub neg_count: usize,
    pub pairing_defect: f64,
    pub iterations: usize,
    pub warmup: usize,
}

/// Options for [`lyapunov_spectrum`].
#[derive(Clone, Debug)]
pub struct SpectrumOptions {
    pub iterations: usize,
    /// Steps discarded before accumulation (periodic orbits only);
    /// `None` means `min(N/10, 1000)`.
    pub warmup: Option<usize>,
    /// Zero threshold; `None` means `max(10/N, 1e−3)·(1 + max|λ|)`.
    pub tau: Option<f64>,
}

impl SpectrumOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            warmup: None,
            tau: None,
        }
    }
}

/// Exponents of the tangent cocycle by repeated QR re-orthonormalization.
pub fn lyapunov_spectrum(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    opts: &SpectrumOptions,
) -> Result<SpectrumReport> {
    let cocycle = Cocycle::new(s, orbit)?;
    let n_iter = opts.iterations.max(1);
    let warmup = if cocycle.periodic {
        opts.warmup.unwrap_or((n_iter / 10).min(1000))
    } else {
        0
    };
    if !cocycle.periodic && cocycle.len() < n_iter {
        return Err(GreenError::OrbitTooShort {
            needed: n_iter + 1,
            have: orbit.len(),
        });
    }
    let dim = 2 * orbit.n();
    let mut q = DMatrix::<f64>::identity(dim, dim);
    let mut sums = vec![0.0; dim];
    // In the periodic case warm-up starts `warmup` steps before x₀ so that
    // the accumulated window always begins at the same phase.
    let start = -(warmup as i64);
    for step in 0..(warmup + n_iter) as i64 {
        let df = cocycle.df(start + step).expect("index in range");
        let qr = (df * &q).qr();
        let r = qr.r();
        let mut qm = qr.q();
        for j in 0..dim {
            let d = r[(j, j)];
            if d < 0.0 {
                let mut c = qm.column_mut(j);
                c *= -1.0;
            }
            if step >= warmup as i64 {
                sums[j] += d.abs().ln();
            }
        }
        q = qm;
    }
    let mut exponents: Vec<f64> = sums.iter().map(|v| v / n_iter as f64).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let max_abs = exponents.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let tau = opts.tau.unwrap_or((10.0 / n_iter as f64).max(1e-3) * (1.0 + max_abs));
    let zero_count = exponents.iter().filter(|v| v.abs() <= tau).count();
    let pos_count = exponents.iter().filter(|&&v| v > tau).count();
    let neg_count = exponents.iter().filter(|&&v| v < -tau).count();
    let pairing_defect = (0..dim / 2)
        .map(|i| (exponents[i] + exponents[dim - 1 - i]).abs())
        .fold(0.0, f64::max);
    Ok(SpectrumReport {
        exponents,
        tau,
        zero_count,
        pos_count,
        neg_count,
        pairing_defect,
        iterations: n_iter,
        warmup,
    })
}

/// `C = max ‖S₁ − S₋₁‖` over the orbit, with `S_{±1}` the graphs of
/// `Df^{±1}V` at each point.
pub fn c_constant(s: &GeneratingFunction, orbit: &OrbitSegment) -> Result<f64> {
    let cocycle = Cocycle::new(s, orbit)?;
    let mut c: f64 = 0.0;
    let (lo, hi) = if cocycle.periodic {
        (0, cocycle.len() as i64)
    } else {
        (1, cocycle.len() as i64)
    };
    for i in lo..hi {
        let s1 = push_graph(cocycle.df(i - 1).expect("in range"), None)
            .ok_or(GreenError::ConjugatePoint { index: i, k: 1 })?;
        let sm1 = push_graph(cocycle.df_inv(i).expect("in range"), None)
            .ok_or(GreenError::ConjugatePoint { index: i, k: 1 })?;
        c = c.max(linalg::spectral_norm(&(s1 - sm1)));
    }
    Ok(c)
}

/// Report of the zero-exponent count check.
#[derive(Clone, Debug, Serialize)]
pub struct Thm1Report {
    pub n: usize,
    pub p: usize,
    pub p_per_point: Vec<usize>,
    pub spectrum: SpectrumReport,
    pub pass: bool,
    pub greens: Vec<GreenData>,
}

fn modal(values: &[usize]) -> usize {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &v in values {
        counts[v] += 1;
    }
    // Ties resolve to the smaller value.
    (0..=max)
        .max_by_key(|&v| (counts[v], std::cmp::Reverse(v)))
        .unwrap_or(0)
}

/// Zero exponents come in `2p` with `p = dim(G₋ ∩ G₊)`; the rest split
/// evenly by sign.
pub fn verify_thm1(
    s: &GeneratingFunction,
    periodic_orbit: &OrbitSegment,
    spectrum: &SpectrumOptions,
    green: &GreenOptions,
) -> Result<Thm1Report> {
    let greens = green_bundles_along(s, periodic_orbit, None, green)?;
    let p_per_point: Vec<usize> = greens.iter().map(|g| g.p_dim).collect();
    let p = modal(&p_per_point);
    let spec = lyapunov_spectrum(s, periodic_orbit, spectrum)?;
    let n = periodic_orbit.n();
    let pass = spec.zero_count == 2 * p
        && spec.pos_count == n - p
        && spec.neg_count == n - p
        && spec.pairing_defect <= 5.0 * spec.tau;
    Ok(Thm1Report {
        n,
        p,
        p_per_point,
        spectrum: spec,
        pass,
        greens,
    })
}

/// Report of the exponent lower bound check.
#[derive(Clone, Debug, Serialize)]
pub struct Thm2Report {
    pub lambda: f64,
    pub c: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
    pub p: usize,
    pub q_plus: Vec<Option<f64>>,
    pub exponents: Vec<f64>,
}

/// `λ(μ) ≥ ½ ∫ log(1 + q₊(ΔS)/C) dμ`, with μ uniform on the orbit.
///
/// `λ(μ)` is the smallest of the `n − p` positive exponents, `p` the modal
/// intersection dimension. `C` is sampled on the orbit only, so it is a
/// lower estimate of the supremum in the statement.
pub fn verify_thm2(
    s: &GeneratingFunction,
    periodic_orbit: &OrbitSegment,
    spectrum: &SpectrumOptions,
    green: &GreenOptions,
    tol: f64,
) -> Result<Thm2Report> {
    let greens = green_bundles_along(s, periodic_orbit, None, green)?;
    let p = modal(&greens.iter().map(|g| g.p_dim).collect::<Vec<_>>());
    let n = periodic_orbit.n();
    if p >= n {
        return Err(GreenError::SkippedAllZero);
    }
    let spec = lyapunov_spectrum(s, periodic_orbit, spectrum)?;
    let lambda = spec.exponents[n - p - 1];
    if lambda <= 0.0 {
        return Err(GreenError::SkippedAllZero);
    }
    let c = c_constant(s, periodic_orbit)?;
    let q_plus: Vec<Option<f64>> = greens.iter().map(|g| g.q_plus_val).collect();
    let bound = q_plus
        .iter()
        .map(|q| 0.5 * (1.0 + q.unwrap_or(0.0) / c).ln())
        .sum::<f64>()
        / greens.len() as f64;
    let slack = lambda - bound;
    Ok(Thm2Report {
        lambda,
        c,
        bound,
        slack,
        pass: slack >= -tol,
        p,
        q_plus,
        exponents: spec.exponents,
    })
}

/// Reduced Green bundle checks at one base point.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedReport {
    pub p: usize,
    pub reduced_dim: usize,
    pub degenerate: bool,
    /// Max over k of the distance of `DF E(x)` from `E(f x)`.
    pub invariance_defect: f64,
    /// Smallest principal sine between `g_k(x)` and `v(x)` over computed k.
    pub min_transversality: f64,
    pub transverse: bool,
    pub chain_ok: bool,
    pub chain_failures: Vec<String>,
    pub limit_plus_error: f64,
    pub limit_minus_error: f64,
    pub limits_ok: bool,
    pub pass: bool,
}

/// Reduction data at one orbit point: `F = E / R` with the reduced
/// vertical as the vertical of the Darboux basis.
struct ReducedPoint {
    space: symplectic::ReducedSpace,
    g_minus: DMatrix<f64>,
    g_plus: DMatrix<f64>,
}

fn reduce_at(g: &GreenData) -> Result<ReducedPoint> {
    let n = g.s_minus.nrows();
    let e = SortedEigen::new(&g.delta_s);
    let cut = g.rank_cutoff;
    // Ambiguous when an eigenvalue sits within a factor 10 of the cutoff.
    if e.values.iter().any(|&v| v > cut / 10.0 && v < cut * 10.0) {
        return Err(GreenError::ReductionIllConditioned {
            eigenvalues: e.values.iter().copied().collect(),
        });
    }
    let ker: Vec<usize> = (0..n).filter(|&i| e.values[i] <= cut).collect();
    let ran: Vec<usize> = (0..n).filter(|&i| e.values[i] > cut).collect();
    let a = DMatrix::from_fn(n, ker.len(), |r, c| e.vectors[(r, ker[c])]);
    let r_frame = linalg::vstack(&a, &(&g.s_minus * &a));
    let range = DMatrix::from_fn(n, ran.len(), |r, c| e.vectors[(r, ran[c])]);
    let e_frame = linalg::hstack(
        &linalg::vstack(&DMatrix::identity(n, n), &g.s_minus),
        &linalg::vstack(&DMatrix::zeros(n, ran.len()), &range),
    );
    let space = symplectic::symplectic_reduce(&e_frame, &r_frame)?;
    let m = space.half_dim();
    if m > 0 {
        let vert = linalg::vstack(&DMatrix::zeros(n, ran.len()), &range);
        let v_red = space.reduce_subspace(&vert);
        let space = space.with_vertical(&v_red)?;
        let gm = LagrangianFrame::graph(g.s_minus.clone())?;
        let gp = LagrangianFrame::graph(g.s_plus.clone())?;
        let g_minus = space.reduce_subspace(gm.columns());
        let g_plus = space.reduce_subspace(gp.columns());
        Ok(ReducedPoint { space, g_minus, g_plus })
    } else {
        Ok(ReducedPoint {
            space,
            g_minus: DMatrix::zeros(0, 0),
            g_plus: DMatrix::zeros(0, 0),
        })
    }
}

fn reduced_graph(frame: &DMatrix<f64>) -> Result<LagrangianFrame> {
    Ok(LagrangianFrame::from_frame(linalg::orthonormalize(frame))?)
}

/// Symplectic reduction of `E = G₋ + G₊` by `R = G₋ ∩ G₊` along a periodic
/// orbit and the checks on the reduced Green iterates `g_{±k}` at `x₀`.
pub fn reduced_green_diagnostics(
    s: &GeneratingFunction,
    orbit: &OrbitSegment,
    greens: &[GreenData],
    tol: f64,
    k_chain: usize,
    k_limit: usize,
) -> Result<ReducedReport> {
    let cocycle = Cocycle::new(s, orbit)?;
    let base = &greens[0];
    let count = greens.len() as i64;
    let reduced: Vec<ReducedPoint> = greens.iter().map(reduce_at).collect::<Result<_>>()?;
    let red = |i: i64| -> &ReducedPoint { &reduced[i.rem_euclid(count) as usize] };
    let p = base.p_dim;
    let m = red(0).space.half_dim();
    if m == 0 || p == 0 {
        return Ok(ReducedReport {
            p,
            reduced_dim: 2 * m,
            degenerate: m == 0,
            invariance_defect: 0.0,
            min_transversality: 1.0,
            transverse: true,
            chain_ok: true,
            chain_failures: Vec::new(),
            limit_plus_error: 0.0,
            limit_minus_error: 0.0,
            limits_ok: true,
            pass: m == 0 || p == 0,
        });
    }

    // Reduced cocycle M_i : F(x_i) → F(x_{i+1}) and its inverse.
    let mut invariance_defect: f64 = 0.0;
    let mut reduced_maps = Vec::new();
    let mut reduced_inv = Vec::new();
    for i in 0..count {
        let df = cocycle.df(i).ok_or(GreenError::OrbitTooShort {
            needed: 2,
            have: orbit.len(),
        })?;
        let lift = red(i).space.lift();
        let img = df * &lift;
        for c in 0..img.ncols() {
            let col = img.column(c).into_owned();
            invariance_defect = invariance_defect.max(red(i + 1).space.distance_from_e(&col) / col.norm());
        }
        let mi = red(i + 1).space.projection() * img;
        reduced_inv.push(symplectic_inverse(&mi));
        reduced_maps.push(mi);
    }
    let vertical = linalg::vstack(&DMatrix::zeros(m, m), &DMatrix::identity(m, m));
    let v_frame = LagrangianFrame::vertical(m);

    // g_k(x₀) = M_{−1} ⋯ M_{−k} v(x_{−k});  g_{−k}(x₀) = M₀⁻¹ ⋯ M_{k−1}⁻¹ v(x_k).
    let kk = k_chain.max(k_limit);
    let mut g_fwd: Vec<LagrangianFrame> = Vec::with_capacity(kk);
    let mut g_bwd: Vec<LagrangianFrame> = Vec::with_capacity(kk);
    for k in 1..=kk as i64 {
        let mut f = vertical.clone();
        for j in (1..=k).rev() {
            f = linalg::orthonormalize(&(&reduced_maps[(-j).rem_euclid(count) as usize] * f));
        }
        g_fwd.push(reduced_graph(&f)?);
        let mut b = vertical.clone();
        for j in (0..k).rev() {
            b = linalg::orthonormalize(&(&reduced_inv[j.rem_euclid(count) as usize] * b));
        }
        g_bwd.push(reduced_graph(&b)?);
    }
    let min_transversality = g_fwd
        .iter()
        .chain(g_bwd.iter())
        .map(|g| g.min_sine_to(&v_frame))
        .fold(1.0, f64::min);
    let transverse = min_transversality >= symplectic::TRANSVERSE_TOL;

    let pg_minus = reduced_graph(&red(0).g_minus)?;
    let pg_plus = reduced_graph(&red(0).g_plus)?;
    let mut failures = Vec::new();
    let mut strict = |a: &LagrangianFrame, b: &LagrangianFrame, label: String| -> Result<()> {
        let r = compare_under_vertical(a, b)?;
        if r.relation != Relation::StrictlyUnder {
            failures.push(label);
        }
        Ok(())
    };
    for k in 2..=k_chain {
        for mm in 1..k {
            strict(&g_bwd[mm - 1], &g_bwd[k - 1], format!("g_-{mm} < g_-{k}"))?;
            strict(&g_fwd[k - 1], &g_fwd[mm - 1], format!("g_{k} < g_{mm}"))?;
        }
    }
    for mm in 1..=k_chain {
        strict(&g_bwd[mm - 1], &pg_minus, format!("g_-{mm} < p(G-)"))?;
        strict(&pg_plus, &g_fwd[mm - 1], format!("p(G+) < g_{mm}"))?;
    }
    strict(&pg_minus, &pg_plus, "p(G-) < p(G+)".into())?;
    let chain_ok = failures.is_empty();

    let gp = pg_plus.graph_matrix()?;
    let gm = pg_minus.graph_matrix()?;
    let limit_plus_error = sup(&(g_fwd[kk - 1].graph_matrix()? - gp));
    let limit_minus_error = sup(&(g_bwd[kk - 1].graph_matrix()? - gm));
    let limits_ok = limit_plus_error <= 10.0 * tol && limit_minus_error <= 10.0 * tol;
    Ok(ReducedReport {
        p,
        reduced_dim: 2 * m,
        degenerate: false,
        invariance_defect,
        min_transversality,
        transverse,
        chain_ok,
        chain_failures: failures,
        limit_plus_error,
        limit_minus_error,
        limits_ok,
        pass: transverse && chain_ok && limits_ok,
    })
}

/// Max distance between `DF·G_±(x_i)` and `G_±(x_{i+1})` along a periodic
/// orbit, measured as the largest principal sine.
pub fn invariance_defect(s: &GeneratingFunction, orbit: &OrbitSegment, greens: &[GreenData]) -> Result<f64> {
    let cocycle = Cocycle::new(s, orbit)?;
    let count = greens.len() as i64;
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let df = cocycle.df(greens[i as usize].index).expect("in range");
        let next = &greens[(i + 1).rem_euclid(count) as usize];
        for (here, there) in [
            (&greens[i as usize].s_minus, &next.s_minus),
            (&greens[i as usize].s_plus, &next.s_plus),
        ] {
            let img = LagrangianFrame::graph(here.clone())?.mapped(df);
            let tgt = LagrangianFrame::graph(there.clone())?;
            let sines = linalg::principal_angle_sines(img.columns(), tgt.columns());
            worst = worst.max(sines.last().copied().unwrap_or(0.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variational::{config_to_orbit, Configuration};

    fn fixed_orbit(s: &GeneratingFunction, q: &[f64]) -> OrbitSegment {
        let c = Configuration::periodic(vec![DVector::from_column_slice(q)], vec![0; q.len()]);
        config_to_orbit(s, &c).unwrap()
    }

    #[test]
    fn integrable_iterates_are_harmonic() {
        let s = GeneratingFunction::integrable(1);
        let o = fixed_orbit(&s, &[0.3]);
        let it = green_iterates(&s, &o, 50, None).unwrap();
        for k in 1..=50 {
            assert!((it[0].forward[k - 1][(0, 0)] - 1.0 / k as f64).abs() < 1e-14);
            assert!((it[0].backward[k - 1][(0, 0)] + 1.0 / k as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn hyperbolic_green_slopes() {
        let s = GeneratingFunction::standard(1.0);
        let o = fixed_orbit(&s, &[0.5]);
        let g = green_bundles(&s, &o, 0, &GreenOptions::default()).unwrap();
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((g.s_plus[(0, 0)] - golden).abs() < 1e-10);
        assert!((g.s_minus[(0, 0)] + 1.0 + golden).abs() < 1e-10);
        assert_eq!(g.p_dim, 0);
        assert!(!g.extrapolated);
        assert!((c_constant(&s, &o).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn integrable_c_is_two() {
        let s = GeneratingFunction::integrable(1);
        let o = fixed_orbit(&s, &[0.0]);
        assert!((c_constant(&s, &o).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shear_spectrum_is_zero() {
        let s = GeneratingFunction::integrable(1);
        let o = fixed_orbit(&s, &[0.0]);
        let r = lyapunov_spectrum(&s, &o, &SpectrumOptions::new(10_000)).unwrap();
        assert!(r.exponents.iter().all(|v| v.abs() <= 2e-3));
        assert_eq!(r.zero_count, 2);
    }

    #[test]
    fn product_map_splits() {
        let s = GeneratingFunction::product(1.0, 0.0);
        let o = fixed_orbit(&s, &[0.5, 0.3]);
        let mut sp = SpectrumOptions::new(100_000);
        sp.tau = Some(1e-4);
        let r = verify_thm1(&s, &o, &sp, &GreenOptions::default()).unwrap();
        assert_eq!(r.p, 1, "{:?}", r.greens[0].delta_s);
        assert!(r.pass, "{:?}", r.spectrum);
        let red = reduced_green_diagnostics(&s, &o, &r.greens, 1e-10, 10, 60).unwrap();
        assert!(red.pass, "{red:?}");
        assert_eq!(red.reduced_dim, 2);
    }

    #[test]
    fn hyperbolic_thm2_bound() {
        let s = GeneratingFunction::standard(1.0);
        let o = fixed_orbit(&s, &[0.5]);
        let r = verify_thm2(&s, &o, &SpectrumOptions::new(10_000), &GreenOptions::default(), 1e-6).unwrap();
        let want = 0.5 * (1.0 + 5f64.sqrt() / 3.0).ln();
        assert!((r.bound - want).abs() < 1e-8);
        assert!((r.lambda - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-6);
        assert!(r.pass);
    }

    #[test]
    fn modal_prefers_majority() {
        assert_eq!(modal(&[1, 1, 0]), 1);
        assert_eq!(modal(&[0, 1]), 0);
    }
}
