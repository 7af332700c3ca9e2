//! Multiplicative D-step against the vertex-direction baseline, which
//! moves a fraction of mass onto the node of largest sensitivity.
//!
//!     cargo run --release --example vdm_baseline

use optdes::{
    grid_box_with, solve, solve_vdm, BoxRule, Criterion, DesignProblem, GridLimits, ModelSpec,
    SolveOptions, StepRule,
};

fn main() -> optdes::Result<()> {
    let grid = grid_box_with(&[[-1.0, 1.0]], 201, BoxRule::Closed, GridLimits::default())?;
    let problem = DesignProblem::new(ModelSpec::full_quadratic(1)?, grid)?;
    let opts = SolveOptions::new(Criterion::D).cert_tol(1e-4).max_iters(200_000);

    let mult = solve(&problem, &opts)?;
    let line = solve_vdm(&problem, &opts, StepRule::LineSearch)?;
    let harm = solve_vdm(&problem, &opts.clone().max_iters(20_000), StepRule::Harmonic)?;

    println!("{:<16} {:>8} {:>12} {:>10} {:>10}", "method", "iters", "log det M", "gap", "ms");
    for (name, r) in [("multiplicative", &mult), ("vdm line search", &line), ("vdm harmonic", &harm)] {
        println!(
            "{:<16} {:>8} {:>12.8} {:>10.2e} {:>10.1}",
            name,
            r.iterations,
            r.final_log_det,
            r.final_gap,
            r.elapsed.as_secs_f64() * 1e3
        );
    }
    // optimum: weight 1/3 at -1, 0, 1 gives log det = log(4/27)
    println!("optimum          {:>21.8}", (4.0f64 / 27.0).ln());
    Ok(())
}
