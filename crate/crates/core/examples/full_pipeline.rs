//! Runs every command against `data/pipeline.toml` and writes the reports
//! into a directory (default `target/pipeline`).

use std::fs;
use std::path::{Path, PathBuf};

use ergodesign::cli::{run_all, Format, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/pipeline.toml");
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| "target/pipeline".into(), PathBuf::from);

    let cfg = RunConfig::load(&cfg_path)?;
    fs::create_dir_all(&out)?;
    for (cmd, outcome) in run_all(&cfg, &[Format::Json, Format::Csv])? {
        println!("{:<9} exit {}  {}", cmd.name(), outcome.exit_code, outcome.summary);
        for (name, text) in &outcome.files {
            fs::write(out.join(name), text)?;
        }
    }
    println!("reports in {}", out.display());
    Ok(())
}
