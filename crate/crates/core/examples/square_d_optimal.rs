//! D-optimal design for the full quadratic model on the square [-1, 1]^2.
//!
//! The density collapses onto the nine points of {-1, 0, 1}^2: weight
//! 0.1458 at the corners, 0.0802 at the edge midpoints, 0.0962 at the centre.
//!
//!     cargo run --release --example square_d_optimal

use optdes::{execute, preset, Criterion};

fn main() -> optdes::Result<()> {
    let cfg = preset("setting3", Criterion::D)?;
    let out = execute(&cfg)?;
    println!("{}", out.summary());

    println!("{:>8} {:>8} {:>10} {:>6}", "w1", "w2", "weight", "cells");
    for p in &out.support.points {
        println!(
            "{:>8.4} {:>8.4} {:>10.6} {:>6}",
            p.location[0], p.location[1], p.weight, p.n_cells
        );
    }
    println!("residual mass off the support: {:.2e}", out.support.residual_mass);
    Ok(())
}
