//! The smallest positive exponent against `½·avg log(1 + q₊(ΔS)/C)` on
//! minimizing periodic orbits of the standard map.
//!
//!     cargo run --release --example exponent_bound

use twist_green::green::{verify_thm2, GreenOptions, SpectrumOptions};
use twist_green::variational::{config_to_orbit, minimize_periodic, MultiStart};
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>6} {:>12} {:>12} {:>8}", "ε", "ρ/N", "exponent", "bound", "C");
    for eps in [0.3, 0.7, 1.2] {
        let s = GeneratingFunction::standard(eps);
        for (rho, period) in [(0i64, 1usize), (1, 2), (1, 3), (1, 4), (2, 5)] {
            let m = minimize_periodic(&s, &[rho], period, None, &MultiStart::default())?;
            let orbit = config_to_orbit(&s, &m.config)?;
            let r = verify_thm2(
                &s,
                &orbit,
                &SpectrumOptions::new(20_000),
                &GreenOptions::default(),
                1e-6,
            )?;
            println!(
                "{eps:>5} {:>6} {:>12.8} {:>12.8} {:>8.4}",
                format!("{rho}/{period}"),
                r.lambda,
                r.bound,
                r.c
            );
        }
    }
    Ok(())
}
