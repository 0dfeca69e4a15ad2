use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command as Proc;

use nehari_cli::{run, Command, ExperimentConfig, Overrides};

const COARSE: &str = "domain.n = [99]\nweight.profile = \"plateau\"\n";

fn cfg(extra: &str, out: &Path) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("{COARSE}{extra}"))
        .unwrap()
        .with_overrides(&Overrides { out: Some(out.to_path_buf()), ..Overrides::default() })
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn spectrum_defaults_report_thresholds_and_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ExperimentConfig::default();
    for (lambda, regime) in [(20.0, "admissible"), (60.0, "mountain-pass-window"), (5.0, "subcritical"), (120.0, "supercritical")] {
        let c = base
            .clone()
            .with_overrides(&Overrides { out: Some(tmp.path().to_path_buf()), lambda: Some(lambda), ..Overrides::default() })
            .unwrap();
        let rep = run(Command::Spectrum, &c).unwrap();
        let th = &rep.manifest.thresholds;
        assert!((th.lambda1_omega - 9.87).abs() < 1e-2 * 9.87);
        assert!((th.lambda2_omega - 39.48).abs() < 1e-2 * 39.48);
        assert!((th.lambda1_omega0 - 109.66).abs() < 1e-2 * 109.66);
        assert_eq!(rep.manifest.regime, regime);
    }
    let m = json(&tmp.path().join("manifest_spectrum.json"));
    for a in m["artifacts"].as_array().unwrap() {
        assert!(tmp.path().join(a.as_str().unwrap()).is_file());
    }
    assert!(tmp.path().join("eigenfield_omega0_1.csv").is_file());
}

#[test]
fn stationary_and_evolve_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg("", tmp.path());
    run(Command::Stationary, &c).unwrap();
    let s = json(&tmp.path().join("stationary_summary.json"));
    assert_eq!(s["outcome"], "positive");
    assert!(s["phi"]["energy"].as_f64().unwrap() < 0.0);
    assert!(s["phi"]["min_value"].as_f64().unwrap() > 0.0);
    assert_eq!(s["phi"]["nehari"]["s_class"], "S+");
    run(Command::Evolve, &c).unwrap();
    let e = json(&tmp.path().join("evolve_summary.json"));
    assert_eq!(e["classification"], "converged(phi)");
    assert_eq!(e["lyapunov"]["monotone"], true);
    let c = cfg("evolve.initial = \"negative-eigen\"\n", tmp.path());
    run(Command::Evolve, &c).unwrap();
    assert_eq!(json(&tmp.path().join("evolve_summary.json"))["classification"], "converged(-phi)");
    let c = cfg("evolve.initial = \"zero\"\n", tmp.path());
    run(Command::Evolve, &c).unwrap();
    assert_eq!(json(&tmp.path().join("evolve_summary.json"))["classification"], "converged(0)");
}

#[test]
fn sweep_over_the_four_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg("problem.lambda = [5.0, 20.0, 60.0, 120.0]\n", tmp.path());
    let rep = run(Command::Sweep, &c).unwrap();
    assert_eq!(rep.lines.len(), 4);
    let text = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let outcomes: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(outcomes, ["trivial-only", "positive", "positive+sign-changing", "no-positive"]);
    assert!(tmp.path().join("lambda_02_60").join("mountain_pass_field.csv").is_file());
    assert!(matches!(run(Command::Stationary, &c), Err(nehari_cli::CliError::Config(_))));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let extra = "problem.lambda = 60.0\nevolve.initial = \"random\"\nevolve.battery = 3\nstepper.horizon = 0.5\n";
    for dir in [a.path(), b.path()] {
        let c = cfg(extra, dir);
        for cmd in [Command::Spectrum, Command::Stationary, Command::MountainPass, Command::Evolve, Command::Probe] {
            run(cmd, &c).unwrap();
        }
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.keys().filter(|k| k.ends_with(".csv")).count() >= 15);
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{k} differs");
    }
}

#[test]
fn seed_changes_random_outputs_only() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let extra = "evolve.initial = \"random\"\nstepper.horizon = 0.05\n";
    run(Command::Evolve, &cfg(extra, a.path())).unwrap();
    let c = cfg(extra, b.path()).with_overrides(&Overrides { seed: Some(99), ..Overrides::default() }).unwrap();
    run(Command::Evolve, &c).unwrap();
    let read = |d: &Path| std::fs::read(d.join("trajectory.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn run_index_is_append_only() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cfg("", tmp.path());
    run(Command::Spectrum, &c).unwrap();
    let first = std::fs::read_to_string(tmp.path().join("run_index.csv")).unwrap();
    run(Command::Stationary, &c).unwrap();
    run(Command::Spectrum, &c).unwrap();
    let all = std::fs::read_to_string(tmp.path().join("run_index.csv")).unwrap();
    assert!(all.starts_with(&first));
    let rows: Vec<&str> = all.lines().collect();
    assert_eq!(rows[0], "command,config_hash,lambda,regime,manifest");
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let manifest = r.rsplit(',').next().unwrap();
        assert!(tmp.path().join(manifest).is_file());
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_nehari");
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("c.toml");
    std::fs::write(&conf, COARSE).unwrap();
    let go = |args: &[&str]| {
        Proc::new(exe).args(args).arg("--config").arg(&conf).arg("--out").arg(tmp.path()).output().unwrap()
    };
    let ok = go(&["spectrum", "--lambda", "60"]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("mountain-pass-window"));
    assert_eq!(go(&["mountain-pass", "--lambda", "20"]).status.code(), Some(2));
    assert_eq!(go(&["probe", "--lambda", "20"]).status.code(), Some(2));
    assert_eq!(go(&["probe", "--lambda", "60"]).status.code(), Some(1));
    std::fs::write(&conf, "domain.bogus = 1\n").unwrap();
    let bad = go(&["spectrum"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bogus"));
}
