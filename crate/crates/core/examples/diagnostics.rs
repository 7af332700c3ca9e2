//! Per-iteration monitoring: criterion value, L1 and KL step sizes, the
//! certificate gap, and the invariant counters kept by the solver.
//!
//!     cargo run --release --example diagnostics [OUT_DIR]

use std::path::PathBuf;

use optdes::{
    grid_disc, solve, write_history_csv, Criterion, DesignProblem, ModelSpec, SolveOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("optdes-diagnostics"));
    std::fs::create_dir_all(&dir)?;

    let grid = grid_disc([0.0, 0.0], 1.0, 30, 60)?;
    let problem = DesignProblem::new(ModelSpec::full_quadratic(2)?, grid)?;
    let r = solve(&problem, &SolveOptions::new(Criterion::A).cert_tol(1e-5).max_iters(50_000))?;

    println!("{:>6} {:>12} {:>10} {:>10} {:>10}", "iter", "tr M^-1", "l1", "kl", "gap");
    let n = r.history.len();
    for h in r.history.iter().step_by((n / 12).max(1)) {
        println!(
            "{:>6} {:>12.6} {:>10.2e} {:>10.2e} {:>10.2e}",
            h.iter, h.criterion_value, h.l1_step, h.kl_step, h.cert_gap
        );
    }

    let d = &r.diagnostics;
    println!("\nsteps {}, stopped by {:?}", d.steps, r.termination_reason);
    println!("trace increases {}, Pinsker violations {}", d.trace_increases, d.pinsker_violations);
    println!(
        "max |mass - 1| {:.1e}, min density {:.1e}",
        d.max_normalization_error, d.min_density
    );

    let path = dir.join("history.csv");
    write_history_csv(&path, &r.history)?;
    println!("history written to {}", path.display());
    Ok(())
}
