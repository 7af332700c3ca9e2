//! Checking a design against a finer grid than the one it was solved on.
//!
//! A density on a coarse grid only fixes an information matrix; the
//! sensitivity can then be scanned on any other grid of the same region.
//! Midpoint grids never reach the corners of the square, so their designs
//! fall short there; the shortfall shrinks as the grid is refined.
//!
//!     cargo run --release --example recertify

use optdes::{
    certify, certify_info, grid_box, solve, Criterion, DesignProblem, ModelSpec, SolveOptions,
};

fn main() -> optdes::Result<()> {
    let model = ModelSpec::full_quadratic(2)?;
    let square = [[-1.0, 1.0]; 2];
    for n in [10, 20, 40] {
        let coarse = DesignProblem::new(model.clone(), grid_box(&square, n)?)?;
        let r = solve(&coarse, &SolveOptions::new(Criterion::D).cert_tol(1e-6).max_iters(100_000))?;
        let on_grid = certify(&coarse, &r.final_density, Criterion::D)?;

        let info = coarse.info_matrix(&r.final_density)?;
        let fine = DesignProblem::new(model.clone(), grid_box(&square, 400)?)?;
        let off_grid = certify_info(&fine, &info, Criterion::D);
        println!(
            "midpoint grid {n:>2}x{n:<2}: gap on own grid {:.1e}, on 400x400 {:.3e} (max at ({:.3}, {:.3}))",
            on_grid.gap, off_grid.gap, off_grid.argmax_node[0], off_grid.argmax_node[1]
        );
    }
    Ok(())
}
