//! Runs an experiment file and reports where the output went.
//!
//! ```text
//! cargo run --release --example run_config -- configs/ch_spinodal.cfg
//! ```

use chsh::config::parse_config;
use chsh::run::{run, RunOptions};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/ch_spinodal.cfg".into());
    let result = parse_config(path.as_ref()).and_then(|cfg| {
        let options = RunOptions {
            threads: RunOptions::threads_from_env(),
            quiet: false,
        };
        run(&cfg, &options)
    });
    match result {
        Ok(summary) => {
            println!("{} steps, {} files written", summary.steps, summary.files.len());
            for f in &summary.files {
                println!("  {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
