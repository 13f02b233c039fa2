//! Green bundles at the hyperbolic fixed point of the standard map and
//! along a period-4 orbit; the slopes at the fixed point are the
//! eigendirections of its tangent map.
//!
//!     cargo run --release --example green_bundles

use nalgebra::DVector;
use twist_green::green::{green_bundles, green_bundles_along, green_iterates, invariance_defect, GreenOptions};
use twist_green::variational::{config_to_orbit, minimize_periodic, Configuration, MultiStart};
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = GeneratingFunction::standard(1.0);
    let fixed = config_to_orbit(
        &s,
        &Configuration::periodic(vec![DVector::from_vec(vec![0.5])], vec![0]),
    )?;

    let it = &green_iterates(&s, &fixed, 8, None)?[0];
    for k in 1..=8 {
        println!(
            "k = {k}: s_k = {:+.12}  s_-k = {:+.12}",
            it.forward[k - 1][(0, 0)],
            it.backward[k - 1][(0, 0)]
        );
    }

    let g = green_bundles(&s, &fixed, 0, &GreenOptions::default())?;
    println!(
        "G- slope {:+.12}, G+ slope {:+.12}, gap q+ = {:.6}, dim(G- ∩ G+) = {}",
        g.s_minus[(0, 0)],
        g.s_plus[(0, 0)],
        g.q_plus_val.unwrap_or(0.0),
        g.p_dim
    );
    println!(
        "golden ratio check: {:+.12} / {:+.12}",
        (5f64.sqrt() - 1.0) / 2.0,
        -(5f64.sqrt() + 1.0) / 2.0
    );

    let m = minimize_periodic(&s, &[1], 4, None, &MultiStart::default())?;
    let orbit = config_to_orbit(&s, &m.config)?;
    let greens = green_bundles_along(&s, &orbit, None, &GreenOptions::default())?;
    for g in &greens {
        println!(
            "x_{}: s- = {:+.8}, s+ = {:+.8}",
            g.index,
            g.s_minus[(0, 0)],
            g.s_plus[(0, 0)]
        );
    }
    println!(
        "invariance defect along the orbit: {:.2e}",
        invariance_defect(&s, &orbit, &greens)?
    );
    Ok(())
}
