//! Order of Lagrangian graphs, betweenness of a vector, and the randomized
//! suites for the order relations and the band construction.
//!
//!     cargo run --release --example lagrangian_order

use nalgebra::{DMatrix, DVector};
use twist_green::selftest::{appendix_suite, pbilin_suite};
use twist_green::symplectic::{between_witness, c0, compare_under_vertical};
use twist_green::LagrangianFrame;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lo = LagrangianFrame::graph(DMatrix::from_row_slice(2, 2, &[-1.0, 0.2, 0.2, -0.5]))?;
    let hi = LagrangianFrame::graph(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.5]))?;
    println!("lower vs upper: {:?}", compare_under_vertical(&lo, &hi)?.relation);

    for v in [[1.0, 0.0, 0.3, 0.0], [1.0, 0.0, 2.0, 0.0], [0.0, 1.0, 0.0, -0.4]] {
        let v = DVector::from_row_slice(&v);
        match between_witness(&v, &lo, &hi)? {
            Some(w) => println!("{:?} lies on the graph of {:?}", v.as_slice(), w.as_slice()),
            None => println!("{:?} is not between", v.as_slice()),
        }
    }

    for o in appendix_suite(1, 1000, &[1, 2, 3], 1e-9) {
        println!(
            "{:<22} {} failures in {}, worst slack {:.2e}",
            o.name, o.failures, o.instances, o.worst_slack
        );
    }
    let p = pbilin_suite(1, 1000, &[1, 2, 3, 4, 5, 6]);
    println!(
        "band construction: {} failures, min slack {:.2e}, max residual {:.2e}, c0 = {:.15}",
        p.failures,
        p.min_band_slack,
        p.max_residual,
        c0()
    );
    Ok(())
}
