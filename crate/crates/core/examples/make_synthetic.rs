//! Writes the seeded synthetic benchmark to a directory.
//!
//! ```text
//! cargo run --release -p medsyn-core --example make_synthetic -- OUT_DIR [SEED] [POSITIVES]
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use medsyn::synth::{generate, SynthConfig};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first().map(PathBuf::from) else {
        eprintln!("usage: make_synthetic OUT_DIR [SEED] [POSITIVES]");
        return ExitCode::from(1);
    };
    let mut cfg = SynthConfig::default();
    let parse = |i: usize| args.get(i).map(|s| s.parse::<u64>());
    match (parse(1), parse(2)) {
        (Some(Err(_)), _) | (_, Some(Err(_))) => {
            eprintln!("SEED and POSITIVES must be non-negative integers");
            return ExitCode::from(1);
        }
        (seed, positives) => {
            if let Some(Ok(s)) = seed {
                cfg.seed = s;
            }
            if let Some(Ok(p)) = positives {
                cfg.positives = p as usize;
            }
        }
    }
    let result = generate(&cfg).and_then(|c| c.write_to_dir(&dir).map(|()| c));
    match result {
        Ok(c) => {
            println!(
                "wrote {} pairs to {}; feature 13 reads the label-independent corpus",
                c.dataset.len(),
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
