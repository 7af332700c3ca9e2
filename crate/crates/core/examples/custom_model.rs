//! A user-defined polynomial model: cubic regression on [-1, 1].
//!
//! D-optimal weights are 1/4 at -1, -1/sqrt(5), 1/sqrt(5), 1. The A-optimal
//! design uses the same kind of support with unequal weights.
//!
//!     cargo run --release --example custom_model

use optdes::{
    extract_support, grid_box_with, solve, BoxRule, Criterion, DesignProblem, GridLimits,
    ModelSpec, SolveOptions, DEFAULT_MASS_FLOOR,
};

fn main() -> optdes::Result<()> {
    let model = ModelSpec::from_exponents(1, vec![vec![0], vec![1], vec![2], vec![3]])?;
    let grid = grid_box_with(&[[-1.0, 1.0]], 401, BoxRule::Closed, GridLimits::default())?;
    let problem = DesignProblem::new(model, grid)?;

    for kind in [Criterion::D, Criterion::A] {
        let opts = SolveOptions::new(kind).cert_tol(1e-7).max_iters(200_000);
        let r = solve(&problem, &opts)?;
        let support = extract_support(problem.grid(), &r.final_density, DEFAULT_MASS_FLOOR)?;
        println!("{kind}-optimal after {} iterations (gap {:.1e}):", r.iterations, r.final_gap);
        let mut pts = support.points.clone();
        pts.sort_by(|a, b| a.location[0].total_cmp(&b.location[0]));
        for p in pts {
            println!("  w = {:>8.4}  weight {:.4}", p.location[0], p.weight);
        }
    }
    println!("1/sqrt(5) = {:.4}", 1.0 / 5.0f64.sqrt());
    Ok(())
}
