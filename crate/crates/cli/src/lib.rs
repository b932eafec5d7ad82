//! Experiment runner: TOML configs in, artifacts and a run manifest out.

pub mod config;
pub mod expect;
pub mod manifest;
pub mod runner;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use config::{Config, ConfigError};
use expect::Assertion;
use manifest::{digest_artifacts, versions, RunManifest, MANIFEST_NAME};
use runner::RunError;

/// Environment variable overriding the output root.
pub const OUT_ENV: &str = "RAPLAB_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Where a run writes: `$RAPLAB_OUT/<name>` if set, else `output`, else `runs/<name>`.
pub fn run_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(cfg.name()),
        _ => cfg.output.clone().unwrap_or_else(|| Path::new("runs").join(cfg.name())),
    }
}

/// Result of `run`: exit code, manifest when one was written, and a one-line summary per assertion.
pub struct RunOutcome {
    pub code: i32,
    pub dir: Option<PathBuf>,
    pub manifest: Option<RunManifest>,
    pub assertions: Vec<Assertion>,
    pub message: Option<String>,
}

fn config_failure(e: ConfigError) -> RunOutcome {
    RunOutcome {
        code: EXIT_CONFIG,
        dir: None,
        manifest: None,
        assertions: Vec::new(),
        message: Some(e.to_string()),
    }
}

/// A previous run directory is cleared so that stale artifacts cannot outlive it;
/// any other existing directory is left alone and written into.
fn prepare_dir(dir: &Path) -> std::io::Result<()> {
    if dir.join(MANIFEST_NAME).exists() {
        std::fs::remove_dir_all(dir)?;
    }
    std::fs::create_dir_all(dir)
}

fn write_json(dir: &Path, name: &str, v: &serde_json::Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).unwrap_or_default();
    text.push('\n');
    std::fs::write(dir.join(name), text)
}

pub fn run(config_path: &Path) -> RunOutcome {
    let started = Instant::now();
    let (cfg, bytes) = match Config::load(config_path) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    let dir = run_dir(&cfg);
    if let Err(e) = prepare_dir(&dir) {
        return config_failure(ConfigError::new("output", format!("{}: {e}", dir.display())));
    }
    let failed = |message: String| {
        let report = json!({ "status": "error", "message": message });
        let _ = write_json(&dir, "failure.json", &report);
        RunOutcome {
            code: EXIT_FAIL,
            dir: Some(dir.clone()),
            manifest: None,
            assertions: Vec::new(),
            message: Some(message),
        }
    };
    let mut out = match runner::execute(&cfg, &dir) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return config_failure(e),
        Err(e @ RunError::Failed(_)) => return failed(runner::describe(&e)),
    };
    let assertions = match expect::check(&cfg.expect, &out.observed) {
        Ok(a) => a,
        Err(e) => return config_failure(e),
    };
    let failures: Vec<String> = assertions.iter().filter(|a| !a.pass).map(|a| a.key.clone()).collect();
    let extra = [
        ("observed.json", serde_json::to_value(&out.observed).unwrap_or_default()),
        ("assertions.json", json!({ "passed": failures.is_empty(), "assertions": assertions })),
    ];
    for (name, v) in &extra {
        if let Err(e) = write_json(&dir, name, v) {
            return failed(format!("{name}: {e}"));
        }
        out.artifacts.push(PathBuf::from(name));
    }
    let artifacts = match digest_artifacts(&dir, &out.artifacts) {
        Ok(a) => a,
        Err(e) => return failed(format!("digest: {e}")),
    };
    let manifest = RunManifest {
        name: cfg.name().to_string(),
        kind: cfg.kind.name().to_string(),
        seed: cfg.seed,
        config_path: config_path.display().to_string(),
        config_sha256: manifest::sha256_hex(&bytes),
        artifacts,
        wall_time_s: started.elapsed().as_secs_f64(),
        versions: versions(),
        passed: failures.is_empty(),
        failed_assertions: failures.clone(),
    };
    if let Err(e) = write_json(&dir, MANIFEST_NAME, &serde_json::to_value(&manifest).unwrap_or_default()) {
        return failed(format!("{MANIFEST_NAME}: {e}"));
    }
    RunOutcome {
        code: if failures.is_empty() { EXIT_PASS } else { EXIT_FAIL },
        dir: Some(dir),
        manifest: Some(manifest),
        assertions,
        message: None,
    }
}
