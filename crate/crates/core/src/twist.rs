//! Globally positive twist maps defined by a generating function.
//!
//! A generating function `S(q, Q)` on ℝⁿ×ℝⁿ defines the lift `F(q, p) = (Q, P)`
//! implicitly through `p = −∂S/∂q(q, Q)` and `P = ∂S/∂Q(q, Q)`. Orbits are
//! kept in the universal cover; nothing is reduced mod 1 during computation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistError {
    #[error("Newton solve diverged after {iterations} steps (residual {residual:e})")]
    SolveDiverged { iterations: usize, residual: f64 },
    #[error("mixed derivative is singular at q = {q:?}, Q = {big_q:?}")]
    TwistViolated { q: Vec<f64>, big_q: Vec<f64> },
    #[error("invalid map parameters: {0}")]
    InvalidParameters(String),
}

pub type Result<T> = std::result::Result<T, TwistError>;

/// Built-in generating function families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapFamily {
    /// `½‖Q − q‖²` in dimension `n`.
    Integrable { n: usize },
    /// `½(Q − q)² + (ε/4π²) cos 2πq`.
    Standard { epsilon: f64 },
    /// Two standard maps coupled by `(μ/4π²) cos 2π(q₁ + q₂)`.
    Froeschle { epsilon1: f64, epsilon2: f64, mu: f64 },
    /// Product of two one-dimensional standard maps (ε = 0 is integrable).
    Product { epsilon1: f64, epsilon2: f64 },
}

/// Evaluator for `S(q, Q)` and its first and second derivatives.
///
/// All built-ins are of the form `½‖Q − q‖² + V(q)` with a periodic
/// potential `V`, so `∂²S/∂q∂Q = −I` and the twist constant is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratingFunction {
    family: MapFamily,
}

impl GeneratingFunction {
    pub fn new(family: MapFamily) -> Result<Self> {
        let ok = match &family {
            MapFamily::Integrable { n } => *n >= 1,
            MapFamily::Standard { epsilon } => epsilon.is_finite(),
            MapFamily::Froeschle { epsilon1, epsilon2, mu } => {
                epsilon1.is_finite() && epsilon2.is_finite() && mu.is_finite()
            }
            MapFamily::Product { epsilon1, epsilon2 } => epsilon1.is_finite() && epsilon2.is_finite(),
        };
        if !ok {
            return Err(TwistError::InvalidParameters(format!("{family:?}")));
        }
        Ok(Self { family })
    }

    pub fn integrable(n: usize) -> Self {
        Self::new(MapFamily::Integrable { n }).expect("valid")
    }

    pub fn standard(epsilon: f64) -> Self {
        Self::new(MapFamily::Standard { epsilon }).expect("valid")
    }

    pub fn froeschle(epsilon1: f64, epsilon2: f64, mu: f64) -> Self {
        Self::new(MapFamily::Froeschle { epsilon1, epsilon2, mu }).expect("valid")
    }

    pub fn product(epsilon1: f64, epsilon2: f64) -> Self {
        Self::new(MapFamily::Product { epsilon1, epsilon2 }).expect("valid")
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn n(&self) -> usize {
        match self.family {
            MapFamily::Integrable { n } => n,
            MapFamily::Standard { .. } => 1,
            MapFamily::Froeschle { .. } | MapFamily::Product { .. } => 2,
        }
    }

    pub fn alpha(&self) -> f64 {
        1.0
    }

    /// Periodic potential `V(q)`, its gradient and Hessian.
    fn potential(&self, q: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut v = 0.0;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        let tau = 2.0 * PI;
        let mut add_cos = |coef: f64, idx: &[usize]| {
            // coef/4π² · cos(2π Σ q_idx)
            let arg: f64 = idx.iter().map(|&i| q[i]).sum::<f64>() * tau;
            let c = coef / (tau * tau);
            v += c * arg.cos();
            let d1 = -coef / tau * arg.sin();
            let d2 = -coef * arg.cos();
            for &i in idx {
                g[i] += d1;
                for &j in idx {
                    h[(i, j)] += d2;
                }
            }
        };
        match self.family {
            MapFamily::Integrable { .. } => {}
            MapFamily::Standard { epsilon } => add_cos(epsilon, &[0]),
            MapFamily::Froeschle { epsilon1, epsilon2, mu } => {
                add_cos(epsilon1, &[0]);
                add_cos(epsilon2, &[1]);
                add_cos(mu, &[0, 1]);
            }
            MapFamily::Product { epsilon1, epsilon2 } => {
                add_cos(epsilon1, &[0]);
                add_cos(epsilon2, &[1]);
            }
        }
        (v, g, h)
    }

    pub fn eval(&self, q: &DVector<f64>, big_q: &DVector<f64>) -> f64 {
        let d = big_q - q;
        0.5 * d.norm_squared() + self.potential(q.as_slice()).0
    }

    pub fn grad_q(&self, q: &DVector<f64>, big_q: &DVector<f64>) -> DVector<f64> {
        -(big_q - q) + self.potential(q.as_slice()).1
    }

    pub fn grad_big_q(&self, q: &DVector<f64>, big_q: &DVector<f64>) -> DVector<f64> {
        big_q - q
    }

    pub fn hess_qq(&self, q: &DVector<f64>, _big_q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::identity(n, n) + self.potential(q.as_slice()).2
    }

    pub fn hess_q_big_q(&self, _q: &DVector<f64>, _big_q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        -DMatrix::identity(n, n)
    }

    pub fn hess_big_q_big_q(&self, _q: &DVector<f64>, _big_q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::identity(n, n)
    }

    /// Largest `Σ S_QQ` eigenvalue over the domain, a semiconcavity constant.
    pub fn max_hess_big_q_big_q(&self) -> f64 {
        1.0
    }

    /// Largest eigenvalue of `S_qq` over the domain.
    pub fn max_hess_qq(&self) -> f64 {
        let extra = match self.family {
            MapFamily::Integrable { .. } => 0.0,
            MapFamily::Standard { epsilon } => epsilon.abs(),
            MapFamily::Froeschle { epsilon1, epsilon2, mu } => epsilon1.abs().max(epsilon2.abs()) + 2.0 * mu.abs(),
            MapFamily::Product { epsilon1, epsilon2 } => epsilon1.abs().max(epsilon2.abs()),
        };
        1.0 + extra
    }
}

/// A point `(q, p)` of the annulus, with `q` in the universal cover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl AnnulusPoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Self {
        Self { q, p }
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Self {
        Self {
            q: DVector::from_column_slice(q),
            p: DVector::from_column_slice(p),
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// `q` reduced to `[0, 1)ⁿ`, for display.
    pub fn q_mod1(&self) -> DVector<f64> {
        self.q.map(|v| v - v.floor())
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.n();
        let mut v = DVector::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&self.q);
        v.rows_mut(n, n).copy_from(&self.p);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        Self {
            q: v.rows(0, n).into_owned(),
            p: v.rows(n, n).into_owned(),
        }
    }

    pub fn distance(&self, other: &AnnulusPoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

const NEWTON_MAX: usize = 100;

/// Damped Newton for `g(z) = 0` with Jacobian `jac`.
fn damped_newton<G, J>(mut z: DVector<f64>, target_tol: f64, g: G, jac: J) -> Result<DVector<f64>>
where
    G: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut r = g(&z);
    let mut rn = r.norm();
    for _ in 0..NEWTON_MAX {
        if rn <= target_tol {
            return Ok(z);
        }
        let step = jac(&z).lu().solve(&(-&r)).ok_or(TwistError::SolveDiverged {
            iterations: 0,
            residual: rn,
        })?;
        let mut t = 1.0;
        loop {
            let cand = &z + &step * t;
            let rc = g(&cand);
            let rcn = rc.norm();
            if rcn < rn || t < 1e-6 {
                z = cand;
                r = rc;
                rn = rcn;
                break;
            }
            t *= 0.5;
        }
    }
    if rn <= target_tol {
        Ok(z)
    } else {
        Err(TwistError::SolveDiverged {
            iterations: NEWTON_MAX,
            residual: rn,
        })
    }
}

/// Image `F(x)`.
pub fn forward(s: &GeneratingFunction, x: &AnnulusPoint) -> Result<AnnulusPoint> {
    let q = &x.q;
    let p = &x.p;
    let tol = 1e-12 * (1.0 + p.norm());
    let q0 = q + p / s.alpha();
    let big_q = damped_newton(q0, tol, |z| p + s.grad_q(q, z), |z| s.hess_q_big_q(q, z))?;
    let big_p = s.grad_big_q(q, &big_q);
    Ok(AnnulusPoint { q: big_q, p: big_p })
}

/// Preimage `F⁻¹(x)`.
pub fn backward(s: &GeneratingFunction, x: &AnnulusPoint) -> Result<AnnulusPoint> {
    let big_q = &x.q;
    let big_p = &x.p;
    let tol = 1e-12 * (1.0 + big_p.norm());
    let q0 = big_q - big_p / s.alpha();
    let q = damped_newton(
        q0,
        tol,
        |z| s.grad_big_q(z, big_q) - big_p,
        |z| s.hess_q_big_q(z, big_q).transpose(),
    )?;
    let p = -s.grad_q(&q, big_q);
    Ok(AnnulusPoint { q, p })
}

/// `DF` at the transition `(q, Q)`, acting on `(δq, δp)`.
pub fn tangent(s: &GeneratingFunction, q: &DVector<f64>, big_q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let a = s.hess_qq(q, big_q);
    let b = s.hess_q_big_q(q, big_q);
    let c = s.hess_big_q_big_q(q, big_q);
    let b_inv = b.clone().try_inverse().ok_or_else(|| TwistError::TwistViolated {
        q: q.iter().copied().collect(),
        big_q: big_q.iter().copied().collect(),
    })?;
    let tl = -(&b_inv * &a);
    let tr = -&b_inv;
    let bl = b.transpose() - &c * &b_inv * &a;
    let br = -(&c * &b_inv);
    Ok(linalg::block2(&tl, &tr, &bl, &br))
}

/// `DF` at the point `x` (solves for `Q` first).
pub fn tangent_at(s: &GeneratingFunction, x: &AnnulusPoint) -> Result<DMatrix<f64>> {
    let y = forward(s, x)?;
    tangent(s, &x.q, &y.q)
}

/// Outcome of [`check_twist`]: the empirical twist constant and where it is
/// attained.
#[derive(Clone, Debug, Serialize)]
pub struct TwistCheck {
    pub alpha_estimate: f64,
    pub violated: bool,
    pub worst_q: Vec<f64>,
    pub worst_big_q: Vec<f64>,
}

/// Empirical twist constant: minimum over sampled `(q, Q)` of the smallest
/// eigenvalue of `−½(S_qQ + S_qQᵀ)`.
pub fn check_twist<R: rand::Rng>(s: &GeneratingFunction, samples: usize, rng: &mut R) -> TwistCheck {
    let n = s.n();
    let mut best = f64::INFINITY;
    let mut worst_q = vec![0.0; n];
    let mut worst_big_q = vec![0.0; n];
    for _ in 0..samples.max(1) {
        let q = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let big_q = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let b = s.hess_q_big_q(&q, &big_q);
        let val = linalg::min_eigenvalue(&(-linalg::symmetrize(&b)));
        if val < best {
            best = val;
            worst_q = q.iter().copied().collect();
            worst_big_q = big_q.iter().copied().collect();
        }
    }
    TwistCheck {
        alpha_estimate: best,
        violated: best <= 0.0,
        worst_q,
        worst_big_q,
    }
}

/// Orbit of length `steps + 1` starting at `x`.
pub fn iterate(s: &GeneratingFunction, x: &AnnulusPoint, steps: usize) -> Result<Vec<AnnulusPoint>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x.clone());
    for i in 0..steps {
        let next = forward(s, &out[i])?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::symplectic_defect;
    use rand::SeedableRng;

    fn pt(q: f64, p: f64) -> AnnulusPoint {
        AnnulusPoint::from_slices(&[q], &[p])
    }

    #[test]
    fn integrable_forward_backward() {
        let s = GeneratingFunction::integrable(1);
        let y = forward(&s, &pt(0.3, 0.45)).unwrap();
        assert!((y.q[0] - 0.75).abs() < 1e-14 && (y.p[0] - 0.45).abs() < 1e-14);
        let x = backward(&s, &pt(0.75, 0.45)).unwrap();
        assert!((x.q[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn standard_origin_is_fixed() {
        let s = GeneratingFunction::standard(0.9);
        let y = forward(&s, &pt(0.0, 0.0)).unwrap();
        assert_eq!(y.q[0], 0.0);
        assert_eq!(y.p[0], 0.0);
        let z = backward(&s, &pt(0.0, 0.0)).unwrap();
        assert!(z.q[0].abs() < 1e-15);
    }

    #[test]
    fn standard_fixed_point_tangent() {
        let eps = 1.0;
        let s = GeneratingFunction::standard(eps);
        let h = DVector::from_vec(vec![0.5]);
        let df = tangent(&s, &h, &h).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0 + eps, 1.0, eps, 1.0]);
        assert!((df - want).norm() < 1e-14);
    }

    #[test]
    fn integrable_tangent_is_shear() {
        let s = GeneratingFunction::integrable(1);
        let z = DVector::from_vec(vec![0.1]);
        let df = tangent(&s, &z, &z).unwrap();
        assert_eq!(df, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn froeschle_tangent_symplectic() {
        let s = GeneratingFunction::froeschle(0.6, 0.8, 0.3);
        let q = DVector::from_vec(vec![0.17, -0.4]);
        let big_q = DVector::from_vec(vec![0.5, 0.2]);
        let df = tangent(&s, &q, &big_q).unwrap();
        assert!(symplectic_defect(&df) < 1e-12);
    }

    #[test]
    fn families_have_unit_twist() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for s in [
            GeneratingFunction::integrable(2),
            GeneratingFunction::standard(1.3),
            GeneratingFunction::froeschle(0.5, 0.5, 0.2),
            GeneratingFunction::product(1.0, 0.0),
        ] {
            let c = check_twist(&s, 50, &mut rng);
            assert_eq!(c.alpha_estimate, 1.0);
            assert!(!c.violated);
        }
    }

    #[test]
    fn periodicity_of_generating_function() {
        let s = GeneratingFunction::froeschle(0.7, 0.4, 0.25);
        let q = DVector::from_vec(vec![0.13, 0.71]);
        let big_q = DVector::from_vec(vec![0.4, -0.2]);
        let k = DVector::from_vec(vec![3.0, -2.0]);
        let d = s.eval(&(&q + &k), &(&big_q + &k)) - s.eval(&q, &big_q);
        assert!(d.abs() < 1e-12);
    }
}
