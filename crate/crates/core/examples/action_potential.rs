//! The m-step action potential, its closed form for the integrable map, and
//! the superdifferentials as endpoints of an orbit.
//!
//!     cargo run --release --example action_potential

use nalgebra::DVector;
use twist_green::twist::forward;
use twist_green::variational::mane_potential;
use twist_green::{AnnulusPoint, GeneratingFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let integ = GeneratingFunction::integrable(1);
    let (x, y) = (DVector::from_vec(vec![0.2]), DVector::from_vec(vec![1.7]));
    for m in [1, 2, 5, 10] {
        let r = mane_potential(&integ, &x, &y, m, 0.0)?;
        println!(
            "integrable m = {m:>2}: A = {:.12}, |y-x|²/2m = {:.12}",
            r.value,
            2.25 / (2.0 * m as f64)
        );
    }

    let s = GeneratingFunction::standard(1.0);
    let lbar = -1.0 / (4.0 * std::f64::consts::PI.powi(2));
    let m = 4;
    let r = mane_potential(&s, &x, &y, m, lbar)?;
    let mut z = AnnulusPoint::new(x.clone(), -&r.super_x);
    for _ in 0..m {
        z = forward(&s, &z)?;
    }
    println!("standard map: A_{m}(x, y) = {:.10}", r.value);
    println!(
        "F^{m}(x, -∂A/∂x) = ({:.10}, {:.10}), (y, ∂A/∂y) = ({:.10}, {:.10})",
        z.q[0], z.p[0], y[0], r.super_y[0]
    );
    Ok(())
}
