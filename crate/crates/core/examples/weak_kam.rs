//! Calibrated subactions of the standard map on a grid, written to
//! `weak_kam_u.csv`; prints where the pair `u₋ ≥ u₊` coincides.
//!
//!     cargo run --release --example weak_kam

use std::fs::File;

use twist_green::io::write_grid_csv;
use twist_green::rng::stream;
use twist_green::weak_kam::{conjugate_pair, estimate_lbar, solve_calibrated, subaction_violation, Kind};
use twist_green::GeneratingFunction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = GeneratingFunction::standard(0.5);
    let lbar = estimate_lbar(&s, 5)?.lbar;
    let u = solve_calibrated(&s, Kind::Backward, lbar, 256, 1e-8, 10_000)?;
    println!(
        "lbar = {lbar:.12}, {} sweeps, last increment {:.1e}",
        u.sweeps, u.residual
    );

    let pair = conjugate_pair(&s, &u, lbar, 1e-8, 10_000)?;
    let first = pair.coincidence.first().map(|&i| u.node(i)[0]);
    let last = pair.coincidence.last().map(|&i| u.node(i)[0]);
    println!(
        "u- = u+ on {} nodes, from {first:?} to {last:?}",
        pair.coincidence.len()
    );

    let mut rng = stream(0, 0);
    println!(
        "worst subaction violation on 10^4 pairs: {:.2e}",
        subaction_violation(&s, &u, lbar, 10_000, &mut rng)
    );

    write_grid_csv(File::create("weak_kam_u.csv")?, &u)?;
    println!("wrote weak_kam_u.csv");
    Ok(())
}
