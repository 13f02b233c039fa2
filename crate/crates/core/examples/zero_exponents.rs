//! Zero Lyapunov exponents against the dimension of `G₋ ∩ G₊`: integrable,
//! hyperbolic, and their product, where the bundles meet in one dimension.
//!
//!     cargo run --release --example zero_exponents

use nalgebra::DVector;
use twist_green::green::{reduced_green_diagnostics, verify_thm1, GreenOptions, SpectrumOptions};
use twist_green::variational::{config_to_orbit, Configuration};
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [
        ("integrable", GeneratingFunction::integrable(1), vec![0.0]),
        ("standard ε=1", GeneratingFunction::standard(1.0), vec![0.5]),
        ("product", GeneratingFunction::product(1.0, 0.0), vec![0.5, 0.3]),
    ];
    for (name, s, q) in cases {
        let n = q.len();
        let orbit = config_to_orbit(&s, &Configuration::periodic(vec![DVector::from_vec(q)], vec![0; n]))?;
        let mut sp = SpectrumOptions::new(100_000);
        sp.tau = Some(1e-4);
        let r = verify_thm1(&s, &orbit, &sp, &GreenOptions::default())?;
        let e: Vec<String> = r.spectrum.exponents.iter().map(|v| format!("{v:+.6}")).collect();
        println!(
            "{name}: exponents [{}], zero count {}, dim(G- ∩ G+) = {}, consistent: {}",
            e.join(", "),
            r.spectrum.zero_count,
            r.p,
            r.pass
        );
        if r.p > 0 && r.p < r.n {
            let red = reduced_green_diagnostics(&s, &orbit, &r.greens, 1e-10, 10, 60)?;
            println!(
                "  reduced space of dimension {}: order chain {}, limits {}",
                red.reduced_dim, red.chain_ok, red.limits_ok
            );
        }
    }
    Ok(())
}
