//! A run described by a TOML config, the same format the `optdes` binary
//! reads with `--config`. Writes report.toml, history.csv, density.csv and
//! support.csv.
//!
//!     cargo run --release --example config_run [OUT_DIR]

use std::path::{Path, PathBuf};

use optdes::{execute, write_outputs, RunConfig};

const CONFIG: &str = r#"
criterion = "D"
threads = 2

[model]
kind = "custom"
dimension = 2
terms = [[0, 0], [1, 0], [0, 1], [1, 1]]

[region]
kind = "box"
intervals = [[0.0, 1.0], [0.0, 2.0]]
n_per_dim = 31
rule = "closed"

[solver]
cert_tol = 1e-6
max_iters = 50000
"#;

fn main() -> optdes::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("optdes-config-run"));

    let cfg = RunConfig::from_toml_str(CONFIG, Path::new("<inline>"))?;
    let out = execute(&cfg)?;
    println!("{}", out.summary());
    for path in write_outputs(&out, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
