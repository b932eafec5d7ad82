use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use raplab::catalog::catalog;
use raplab_cli::config::Config;
use raplab_cli::{run, EXIT_CONFIG};
use serde_json::json;

/// Recurrence laboratory experiment runner.
#[derive(Parser)]
#[command(name = "raplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config; exit 0 if every expectation holds, 1 otherwise, 2 on config errors.
    Run { config: PathBuf },
    /// List built-in right-hand sides, forcings, maps, delay equations and polynomial paths.
    Catalog {
        #[arg(long)]
        json: bool,
    },
    /// Parse and check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => {
            let o = run(&config);
            for a in &o.assertions {
                println!(
                    "{} {} (expected {}, observed {})",
                    if a.pass { "PASS" } else { "FAIL" },
                    a.key,
                    a.expected,
                    a.observed
                );
            }
            if let Some(m) = &o.manifest {
                println!(
                    "{}: {} artifacts in {} ({:.2}s)",
                    m.name,
                    m.artifacts.len(),
                    o.dir.as_ref().map(|d| d.display().to_string()).unwrap_or_default(),
                    m.wall_time_s
                );
                if !m.passed {
                    let report = json!({ "status": "assertion_failed", "failed": m.failed_assertions });
                    eprintln!("{report}");
                }
            }
            if let Some(msg) = &o.message {
                let status = if o.code == EXIT_CONFIG { "config_error" } else { "error" };
                eprintln!("{}", json!({ "status": status, "message": msg }));
            }
            o.code
        }
        Command::Catalog { json } => {
            let mut text = String::new();
            if json {
                text = serde_json::to_string_pretty(catalog()).unwrap_or_default();
                text.push('\n');
            } else {
                for e in catalog() {
                    let kind = serde_json::to_value(e.kind)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default();
                    text.push_str(&format!("{:<22} {:<8} {}\n", e.id, kind, e.description));
                }
            }
            // A closed pipe (`raplab catalog | head`) is not an error.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            0
        }
        Command::Validate { config } => match Config::load(&config) {
            Ok((cfg, _)) => {
                println!("ok: {} ({})", cfg.name(), cfg.kind.name());
                0
            }
            Err(e) => {
                eprintln!("{}", json!({ "status": "config_error", "key": e.key, "message": e.message }));
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
