//! Tangent cones of minimizing supports sit between the widened Green
//! bundles. The support here is the hyperbolic fixed point of the standard
//! map together with minimizing orbits that accumulate on it.
//!
//!     cargo run --release --example tangent_cones

use std::fs::File;

use twist_green::geometry::{limit_contingent_cone, verify_cone_theorem, ConeOptions};
use twist_green::green::{green_bundles_along, GreenOptions};
use twist_green::io::write_cone_csv;
use twist_green::variational::{config_to_orbit, minimize_periodic, MultiStart};
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = GeneratingFunction::standard(1.0);
    let fixed = config_to_orbit(
        &s,
        &minimize_periodic(&s, &[0], 1, None, &MultiStart::default())?.config,
    )?;
    let mut samples = fixed.points.clone();
    for (rho, period) in [(1i64, 24usize), (-1, 24), (1, 32), (-1, 32)] {
        let m = minimize_periodic(&s, &[rho], period, None, &MultiStart::default())?;
        samples.extend(config_to_orbit(&s, &m.config)?.points);
    }
    let opts = ConeOptions::default();
    let cone = limit_contingent_cone(&samples, &fixed.points[0], &opts)?;
    for (d, w) in cone.directions.iter().zip(&cone.weights) {
        println!(
            "direction ({:+.6}, {:+.6}) slope {:+.6}, {w} pairs",
            d[0],
            d[1],
            d[1] / d[0]
        );
    }
    let greens = green_bundles_along(&s, &fixed, None, &GreenOptions::default())?;
    let report = verify_cone_theorem(&samples, &greens, &opts, 1e-6)?;
    println!(
        "{} of {} directions between the widened bundles",
        report.passed, report.checked
    );
    write_cone_csv(File::create("tangent_cones.csv")?, &report)?;
    println!("wrote tangent_cones.csv");
    Ok(())
}
