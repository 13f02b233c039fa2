#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use twist_green::selftest::{random_spectrum, random_symmetric, random_vector};
use twist_green::variational::{config_to_orbit, minimize_periodic, Configuration, MultiStart, OrbitSegment};
use twist_green::weak_kam::SubactionGrid;
use twist_green::{AnnulusPoint, GeneratingFunction};

pub fn fixed_orbit(s: &GeneratingFunction, q: &[f64]) -> OrbitSegment {
    let c = Configuration::periodic(vec![DVector::from_column_slice(q)], vec![0; q.len()]);
    config_to_orbit(s, &c).unwrap()
}

pub fn periodic_orbit(s: &GeneratingFunction, rho: &[i64], period: usize) -> OrbitSegment {
    let m = minimize_periodic(s, rho, period, None, &MultiStart::default()).unwrap();
    config_to_orbit(s, &m.config).unwrap()
}

// ---------------------------------------------------------------------------
// Betweenness by alternating projections.

fn psd_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let d = e.eigenvalues.map(|v| v.max(0.0));
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

/// Frobenius projection onto symmetric `W` with `Wa = b`.
fn project_secant(w: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let aa = a.dot(a);
    let r = b - w * a;
    let ra = r.dot(a);
    w + (&r * a.transpose() + a * r.transpose()) / aa - a * a.transpose() * (ra / (aa * aa))
}

fn violations(w: &DMatrix<f64>, wm: &DMatrix<f64>, wp: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let lo = (w - wm).symmetric_eigen().eigenvalues.min();
    let hi = (wp - w).symmetric_eigen().eigenvalues.min();
    (w * a - b).norm().max(-lo).max(-hi).max(0.0)
}

/// Decide whether `(a, b)` lies on a graph `W` with `W₋ ⪯ W ⪯ W₊` by
/// Dykstra's projections onto the three convex sets. `None` when the
/// residual lands between the feasible and infeasible thresholds.
pub fn between_oracle(v: &DVector<f64>, wm: &DMatrix<f64>, wp: &DMatrix<f64>) -> Option<bool> {
    let n = wm.nrows();
    let a = v.rows(0, n).into_owned();
    let b = v.rows(n, n).into_owned();
    if a.norm() < 1e-14 {
        return Some(b.norm() < 1e-14);
    }
    let na = a.norm();
    let (a, b) = (a / na, b / na);
    let scale = 1.0 + b.norm() + wm.norm() + wp.norm();
    let mut w = (wm + wp) * 0.5;
    let mut inc = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
    for _ in 0..20_000 {
        for (set, p) in inc.iter_mut().enumerate() {
            let y = &w + &*p;
            let next = match set {
                0 => project_secant(&y, &a, &b),
                1 => wm + psd_part(&(&y - wm)),
                _ => wp - psd_part(&(wp - &y)),
            };
            *p = y - &next;
            w = next;
        }
        if violations(&w, wm, wp, &a, &b) < 1e-11 * scale {
            return Some(true);
        }
    }
    let r = violations(&w, wm, wp, &a, &b);
    if r > 1e-4 * scale {
        Some(false)
    } else {
        None
    }
}

/// Random ordered pair of graphs and a test vector, sometimes on a graph
/// inside the band, sometimes on one poking out of it, sometimes arbitrary.
pub fn between_instance<R: Rng>(rng: &mut R, n: usize) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let wm = random_symmetric(rng, n, 1.0);
    let d = random_spectrum(rng, n, 0.2, 2.0);
    let wp = &wm + &d;
    let a = random_vector(rng, n);
    let b = match rng.random_range(0..3) {
        0 | 1 => {
            let lo = if rng.random_range(0..2) == 0 { 0.05 } else { -0.6 };
            let hi = if lo > 0.0 { 0.95 } else { 1.6 };
            let e = d.clone().symmetric_eigen();
            let root =
                &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(f64::sqrt)) * e.eigenvectors.transpose();
            let t = random_spectrum(rng, n, lo, hi);
            let w = &wm + &root * t * &root;
            &w * &a
        }
        _ => random_vector(rng, n) * 2.0,
    };
    let mut v = DVector::zeros(2 * n);
    v.rows_mut(0, n).copy_from(&a);
    v.rows_mut(n, n).copy_from(&b);
    (v, wm, wp)
}

// ---------------------------------------------------------------------------
// Lax–Oleinik by direct enumeration.

fn shifts(n: usize, radius: i64) -> Vec<DVector<f64>> {
    let side = (2 * radius + 1) as usize;
    (0..side.pow(n as u32))
        .map(|mut c| {
            DVector::from_fn(n, |_, _| {
                let v = (c % side) as i64 - radius;
                c /= side;
                v as f64
            })
        })
        .collect()
}

/// `min_{i,k} u_i + S(x_i + k, x_j) − lbar` with `‖k‖∞ ≤ 2`, shifted to
/// minimum zero.
pub fn naive_backward(s: &GeneratingFunction, u: &SubactionGrid, lbar: f64) -> Vec<f64> {
    let ks = shifts(u.n, 2);
    let raw: Vec<f64> = (0..u.len())
        .map(|j| {
            let y = u.node(j);
            let mut best = f64::INFINITY;
            for i in 0..u.len() {
                let x = u.node(i);
                for k in &ks {
                    best = best.min(u.values[i] + s.eval(&(&x + k), &y) - lbar);
                }
            }
            best
        })
        .collect();
    let m = raw.iter().copied().fold(f64::INFINITY, f64::min);
    raw.into_iter().map(|v| v - m).collect()
}

/// `max_{j,k} u_j − S(x_i + k, x_j) + lbar`, shifted to minimum zero.
pub fn naive_forward(s: &GeneratingFunction, u: &SubactionGrid, lbar: f64) -> Vec<f64> {
    let ks = shifts(u.n, 2);
    let raw: Vec<f64> = (0..u.len())
        .map(|i| {
            let x = u.node(i);
            let mut best = f64::NEG_INFINITY;
            for j in 0..u.len() {
                let y = u.node(j);
                for k in &ks {
                    best = best.max(u.values[j] - s.eval(&(&x + k), &y) + lbar);
                }
            }
            best
        })
        .collect();
    let m = raw.iter().copied().fold(f64::INFINITY, f64::min);
    raw.into_iter().map(|v| v - m).collect()
}

// ---------------------------------------------------------------------------
// Tangent maps and exponents without the library's cocycle machinery.

/// `DF` at `x` by central differences of the forward map.
pub fn fd_tangent(s: &GeneratingFunction, x: &AnnulusPoint, h: f64) -> DMatrix<f64> {
    let v = x.to_vector();
    let d = v.len();
    let mut m = DMatrix::zeros(d, d);
    for c in 0..d {
        let mut plus = v.clone();
        let mut minus = v.clone();
        plus[c] += h;
        minus[c] -= h;
        let fp = twist_green::twist::forward(s, &AnnulusPoint::from_vector(&plus))
            .unwrap()
            .to_vector();
        let fm = twist_green::twist::forward(s, &AnnulusPoint::from_vector(&minus))
            .unwrap()
            .to_vector();
        m.set_column(c, &((fp - fm) / (2.0 * h)));
    }
    m
}

/// Product of the tangents once around a periodic orbit.
pub fn monodromy(s: &GeneratingFunction, orbit: &OrbitSegment) -> DMatrix<f64> {
    let period = orbit.period().unwrap();
    let d = 2 * orbit.n();
    let mut m = DMatrix::identity(d, d);
    for i in 0..period as i64 {
        m = orbit.tangent(s, i).unwrap() * m;
    }
    m
}

/// `log|eig(monodromy)| / period`, descending.
pub fn monodromy_exponents(s: &GeneratingFunction, orbit: &OrbitSegment) -> Vec<f64> {
    let period = orbit.period().unwrap() as f64;
    let m = monodromy(s, orbit);
    let mut out: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm().ln() / period).collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    out
}

/// `s_k` at orbit index 0 from the explicit product `DF^k(x_{−k})` applied
/// to the vertical: `s_k = D B⁻¹` for `DF^k = [[A, B], [C, D]]`.
pub fn green_by_product(s: &GeneratingFunction, orbit: &OrbitSegment, k: usize) -> DMatrix<f64> {
    let n = orbit.n();
    let mut m = DMatrix::identity(2 * n, 2 * n);
    for i in (1..=k as i64).rev() {
        m = orbit.tangent(s, -i).unwrap() * m;
    }
    let b = m.view((0, n), (n, n)).into_owned();
    let d = m.view((n, n), (n, n)).into_owned();
    d * b.try_inverse().unwrap()
}

/// Closed-form golden slopes of the hyperbolic fixed point of the standard
/// map at `ε = 1`: eigenvectors of `[[2, 1], [1, 1]]` as `p = s·q`.
pub fn golden_slopes() -> (f64, f64) {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
    let e = m.symmetric_eigen();
    let mut slopes: Vec<(f64, f64)> = (0..2)
        .map(|i| {
            let c = e.eigenvectors.column(i);
            (e.eigenvalues[i], c[1] / c[0])
        })
        .collect();
    slopes.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    // (s₋, s₊) = (contracting, expanding).
    (slopes[1].1, slopes[0].1)
}
