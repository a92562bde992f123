//! Drive the harness from a TOML string and write plot data next to the
//! report.

use foliated_flows::harness::{emit_plotdata, run, ExperimentConfig};
use foliated_flows::Result;

const CONFIG: &str = r#"
kind = "kernel-check"
seed = 1

[model]
name = "rotation-jump-cylinder"

[kernel]
sites = 8
steps = [1, 2, 4]
"#;

/// Paths of the plot data files written into `dir`.
pub fn run_example(dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    let config = ExperimentConfig::from_toml_str(CONFIG)?;
    let report = run(&config)?;
    let files = emit_plotdata(&report, dir)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(files)
}

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("foliated-flows-plot");
    run_example(&dir)?;
    Ok(())
}
