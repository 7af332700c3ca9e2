//! Designs on the unit disc.
//!
//! The linear model without intercept puts all mass on the rim. The full
//! quadratic model under D splits it between the centre and the rim, with
//! the rim loaded uniformly.
//!
//!     cargo run --release --example disc_ring

use optdes::{execute, preset, radial_band_masses, ring_uniformity, Criterion};

fn main() -> optdes::Result<()> {
    for name in ["setting1", "setting2"] {
        let mut cfg = preset(name, Criterion::D)?;
        // a coarser polar grid keeps the example quick
        cfg.region.set_resolution(40);
        let out = execute(&cfg)?;
        let grid = out.problem.grid();
        let f = &out.solve.final_density;

        println!("== {name}: {}", optdes::config::preset_description(name)?);
        println!(
            "{} iterations, gap {:.2e}, log det M = {:.6}",
            out.solve.iterations, out.certificate.gap, out.solve.final_log_det
        );
        let bands = radial_band_masses(grid, f)?;
        let n = bands.len();
        println!(
            "mass in innermost band {:.4}, outermost band {:.4}",
            bands[0],
            bands[n - 1]
        );
        println!(
            "rim uniformity over 8 sectors (max relative deviation): {:.2e}",
            ring_uniformity(grid, f, 8)?
        );
        println!();
    }
    Ok(())
}
