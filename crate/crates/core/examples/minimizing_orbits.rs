//! Minimizing periodic orbits of the standard map and a strong-minimality
//! spot check.
//!
//!     cargo run --release --example minimizing_orbits

use twist_green::rng::stream;
use twist_green::variational::{check_strong_min, config_to_orbit, minimize_periodic, MultiStart};
use twist_green::weak_kam::estimate_lbar;
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = GeneratingFunction::standard(1.0);
    let lbar = estimate_lbar(&s, 4)?.lbar;
    println!("effective value estimate: {lbar:.12}");

    for (rho, period) in [(0i64, 1usize), (1, 2), (1, 3), (2, 5)] {
        let m = minimize_periodic(&s, &[rho], period, None, &MultiStart::default())?;
        let orbit = config_to_orbit(&s, &m.config)?;
        let qs: Vec<String> = m.config.points.iter().map(|p| format!("{:.6}", p[0])).collect();
        println!(
            "rotation {rho}/{period}: mean action {:.10}, min Hessian eigenvalue {:.3e}, q = [{}], p0 = {:.6}",
            m.mean_action,
            m.min_hessian_eig,
            qs.join(", "),
            orbit.points[0].p[0]
        );
    }

    let fixed = minimize_periodic(&s, &[0], 1, None, &MultiStart::default())?;
    let mut rng = stream(1, 0);
    let check = check_strong_min(&s, &fixed.config, lbar, 500, &mut rng)?;
    println!(
        "fixed point strongly minimizing over 500 competitors: {}",
        check.is_ok()
    );
    Ok(())
}
