//! Driving the command-line pipeline programmatically: write a config,
//! invoke a subcommand, and inspect the artifacts it leaves behind. The
//! same flow works from a shell:
//!
//! ```bash
//! ergokit decay --config two_state.json --out results/
//! ```
//!
//! ```bash
//! cargo run --example cli_runs
//! ```

use ergokit::cli::{self, RunOptions, Subcommand};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ergokit_cli_example");
    std::fs::create_dir_all(&dir)?;
    let config_path = dir.join("two_state.json");
    std::fs::write(
        &config_path,
        r#"{
    "kind": "ctmc",
    "rates": [[-1.0, 1.0], [2.0, -2.0]],
    "f": [1.0, 1.0],
    "set_c": [0],
    "params": {
        "state": 0,
        "t_grid": [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
        "t_max": 12.0,
        "seed": 7
    }
}"#,
    )?;

    let out = dir.join("results");
    for sub in [
        Subcommand::Decay,
        Subcommand::Lyapunov,
        Subcommand::Equivalence,
        Subcommand::Theorem2,
    ] {
        let code = cli::run(
            sub,
            &RunOptions {
                config: config_path.clone(),
                out: out.clone(),
                seed: None,
                quiet: true,
            },
        );
        println!("{:<12} exit code {code}", sub.name());
    }

    println!("\nartifacts in {}:", out.display());
    let mut entries: Vec<_> = std::fs::read_dir(&out)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    entries.sort();
    for name in entries {
        println!("  {name}");
    }

    let curve = std::fs::read_to_string(out.join("decay_curve.csv"))?;
    println!("\nhead of decay_curve.csv:");
    for line in curve.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
