use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use raplab_cli::manifest::{verify, RunManifest, MANIFEST_NAME};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_raplab"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_in(out_root: &Path, config: &Path) -> Output {
    bin().arg("run").arg(config).env("RAPLAB_OUT", out_root).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

#[test]
fn catalog_lists_the_flagship_entries() {
    let out = bin().arg("catalog").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(ids.contains(&"heq1") && ids.contains(&"heq1_forcing"), "{text}");
    let json = bin().args(["catalog", "--json"]).output().unwrap();
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), ids.len());
}

#[test]
fn missing_rhs_is_a_config_error_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "ode.toml", "schema = 1\nkind = \"ode\"\n[system]\nx0 = [0.0]\nt_span = [0.0, 1.0]\n");
    for sub in ["run", "validate"] {
        let out = bin().arg(sub).arg(&cfg).env("RAPLAB_OUT", tmp.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{sub}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("system.rhs"), "{sub}");
    }
    assert!(!tmp.path().join("ode").join(MANIFEST_NAME).exists());
}

#[test]
fn unknown_catalog_id_and_unknown_metric_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_id = write(tmp.path(), "a.toml", "schema = 1\nkind = \"ode\"\n[system]\nrhs = \"nope\"\nx0 = [0.0]\nt_span = [0.0, 1.0]\n");
    let out = run_in(tmp.path(), &bad_id);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.rhs"));
    let bad_key = write(
        tmp.path(),
        "b.toml",
        "schema = 1\nkind = \"ode\"\n[system]\nrhs = \"decay\"\nx0 = [1.0]\nt_span = [0.0, 1.0]\n[expect]\nrapp = true\n",
    );
    let out = run_in(tmp.path(), &bad_key);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expect.rapp"));
}

#[test]
fn classify_config_on_the_drifting_forcing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "forcing.toml",
        r#"schema = 1
kind = "classify"
write_signals = false
[signal]
catalog = "heq1_forcing"
t1 = 20000.0
dt = 0.05
[thresholds]
epsilon_grid = [0.1]
tau = { kind = "grid", start = 1.0, end = 700.0, step = 0.25 }
[expect]
rap = true
aap = false
"#,
    );
    let out = run_in(tmp.path(), &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("forcing");
    let m = manifest(&dir);
    assert!(m.passed && m.kind == "classify");
    verify(&dir, &m).unwrap();
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["flags"]["rap"], Value::Bool(true));
}

#[test]
fn roots_config_certifies_separation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "roots.toml",
        "schema = 1\nkind = \"roots\"\n[poly]\nid = \"sep_quadratic\"\nt_span = [0.0, 500.0]\ndt = 0.05\nseparation_alpha = 2.0\n[expect]\nseparation.holds = true\n",
    );
    let out = run_in(tmp.path(), &cfg);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(&tmp.path().join("roots"));
    assert!(m.artifacts.iter().any(|a| a.path == "branches/branch_1.csv"));
}

#[test]
fn failed_assertion_exits_one_with_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "decay.toml",
        "schema = 1\nkind = \"ode\"\n[system]\nrhs = \"decay\"\nx0 = [1.0]\nt_span = [0.0, 5.0]\n\
         [band]\ntarget = [0.0]\ntol = 0.01\nfrom = 1.0\n[expect]\nband.holds = true\n",
    );
    let out = run_in(tmp.path(), &cfg);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let report: Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(report["failed"][0], "band.holds");
    let dir = tmp.path().join("decay");
    let a: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("assertions.json")).unwrap()).unwrap();
    assert_eq!(a["passed"], Value::Bool(false));
    // e^{-1} = 0.37 > 0.01: the band is only entered near t = ln 100.
    assert_eq!(a["assertions"][0]["observed"], Value::Bool(false));
    assert!(!manifest(&dir).passed);
}

#[test]
fn identical_config_and_seed_give_identical_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/acceptance/c3_contraction.toml");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_in(&a, &cfg).status.code(), Some(0));
    assert_eq!(run_in(&b, &cfg).status.code(), Some(0));
    let (ma, mb) = (manifest(&a.join("c3_contraction")), manifest(&b.join("c3_contraction")));
    assert_eq!(ma.artifacts, mb.artifacts);
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert_eq!(ma.seed, 1);
    // A rerun into the same directory replaces the previous artifacts.
    assert_eq!(run_in(&a, &cfg).status.code(), Some(0));
    assert_eq!(manifest(&a.join("c3_contraction")).artifacts, ma.artifacts);
}

#[test]
fn output_key_is_used_without_the_environment_override() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("custom");
    let cfg = write(
        tmp.path(),
        "m.toml",
        &format!(
            "schema = 1\nkind = \"map\"\noutput = {:?}\n[system]\nmap = \"halving\"\nx0 = [1.0]\nn_steps = 10\n",
            target.display().to_string()
        ),
    );
    let out = bin().arg("run").arg(&cfg).env_remove("RAPLAB_OUT").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join(MANIFEST_NAME).exists() && target.join("orbit.csv").exists());
}

#[test]
fn every_catalog_entry_runs_without_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = repo().join("configs/smoke");
    let mut seen = 0;
    for e in raplab::catalog::catalog() {
        let cfg = dir.join(format!("{}.toml", e.id));
        assert!(cfg.exists(), "no smoke config for {}", e.id);
        let out = run_in(tmp.path(), &cfg);
        assert_eq!(out.status.code(), Some(0), "{}: {}", e.id, String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn shipped_acceptance_configs_reproduce_the_suite_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    // Criterion 1 (remote shifts 2πk with L ≤ 130) and 6a (band from t = 10) are
    // not met by the exact signals; their configs fail on exactly those assertions.
    let expected_failures: &[(&str, &[&str])] = &[
        ("c1_rap_detection", &["translation.all_accepted", "translation.max_gap", "translation.max_l"]),
        ("c6a_remote_stationary", &["band.holds"]),
    ];
    let mut entries: Vec<_> = std::fs::read_dir(repo().join("configs/acceptance"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    assert_eq!(entries.len(), 12);
    for cfg in entries {
        let name = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let out = run_in(tmp.path(), &cfg);
        let m = manifest(&tmp.path().join(&name));
        match expected_failures.iter().find(|(n, _)| *n == name) {
            Some((_, keys)) => {
                assert_eq!(out.status.code(), Some(1), "{name}");
                assert_eq!(m.failed_assertions, keys.iter().map(|k| k.to_string()).collect::<Vec<_>>(), "{name}");
            }
            None => assert_eq!(out.status.code(), Some(0), "{name}: {:?}", m.failed_assertions),
        }
    }
}
