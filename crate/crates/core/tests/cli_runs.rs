use std::fs;
use std::path::Path;
use std::process::Command;

use maxreplace::cli::{run_experiment, ExperimentConfig, RunOptions};

const BIN: &str = env!("CARGO_BIN_EXE_maxreplace");

const MINIMAL: &str = r#"
n = 100
replications = 10
seed = 3
process.family = "gaussian"
selection.lambda = "point"
selection.p = 1.0
"#;

fn run_bin(args: &[&str], env_seed: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("MAXREPLACE_SEED");
    if let Some(s) = env_seed {
        cmd.env("MAXREPLACE_SEED", s);
    }
    cmd.output().unwrap()
}

fn read_csv_values(path: &Path) -> Vec<(f64, f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[1], f[2])
        })
        .collect()
}

#[test]
fn presets_listing() {
    let out = run_bin(&["presets"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["thm22-gaussian-replacing", "thm23-chi-d3", "contrast-missing-vs-replacing"] {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} missing"));
        assert!(line.len() > name.len() + 5, "no description for {name}");
    }
}

#[test]
fn minimal_config_diagonal_matches_marginals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("minimal.toml");
    fs::write(&cfg, MINIMAL).unwrap();
    let out_dir = tmp.path().join("out");
    let out = run_bin(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--workers", "2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["surface_empirical.csv", "surface_theory.csv", "marginals.csv", "report.json", "plot_surfaces.py"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    let surface = read_csv_values(&out_dir.join("surface_empirical.csv"));
    assert_eq!(surface.len(), 121);
    let marg = fs::read_to_string(out_dir.join("marginals.csv")).unwrap();
    let rows: Vec<Vec<&str>> = marg.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let lookup = |label: &str, t: f64| -> f64 {
        rows.iter()
            .find(|r| r[0] == label && r[1].parse::<f64>().unwrap() == t)
            .map(|r| r[2].parse().unwrap())
            .unwrap()
    };
    for (x, y, value) in surface.iter().filter(|(x, y, _)| x == y) {
        assert_eq!(*value, lookup("perturbed", *x));
        assert_eq!(*value, lookup("original", *y));
    }

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert!(report["sup_distance"].as_f64().unwrap() >= 0.0);
    assert!(report["norming"]["a_n"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_rho_exits_with_config_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, format!("{MINIMAL}process.covariance = \"ar1\"\nprocess.rho = 1.5\n")).unwrap();
    let out = run_bin(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("process.rho"));
}

#[test]
fn unknown_key_exits_with_config_status() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("typo.toml");
    fs::write(&cfg, format!("{MINIMAL}selection.pp = 0.5\n")).unwrap();
    let out = run_bin(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("selection.pp"));
}

#[test]
fn missing_config_is_an_io_failure() {
    let out = run_bin(&["run", "/nonexistent/config.toml"], None);
    assert_eq!(out.status.code(), Some(1));
}

fn seed_of(dir: &Path) -> u64 {
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    report["seed"].as_u64().unwrap()
}

#[test]
fn seed_precedence_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let no_seed = tmp.path().join("noseed.toml");
    fs::write(&no_seed, MINIMAL.replace("seed = 3\n", "")).unwrap();
    let with_seed = tmp.path().join("seed.toml");
    fs::write(&with_seed, MINIMAL).unwrap();
    let cases = [
        (&no_seed, None, Some("99"), 99),
        (&with_seed, None, Some("99"), 3),
        (&with_seed, Some("42"), Some("99"), 42),
    ];
    for (i, (cfg, flag, env, expected)) in cases.into_iter().enumerate() {
        let out_dir = tmp.path().join(format!("o{i}"));
        let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
        if let Some(f) = flag {
            args.extend(["--seed", f]);
        }
        let out = run_bin(&args, env);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(seed_of(&out_dir), expected, "case {i}");
    }
}

#[test]
fn rerun_is_byte_identical() {
    let text = r#"
        seed = 5
        n = 256
        replications = 500
        mode = "missing"
        process.family = "chi"
        process.d = 2
        process.covariance = "power"
        process.gamma = 2.0
        process.scale = 0.5
        selection.lambda = "discrete"
        selection.values = [0.2, 0.9]
        selection.probs = [0.5, 0.5]
        grid.xs = [-1.0, 0.0, 1.0]
        grid.ys = [-0.5, 0.5, 1.5, 2.5]
        dprime.ks = [4, 8]
        dprime.replications = 300
    "#;
    let config = ExperimentConfig::parse(text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut contents = Vec::new();
    for (i, workers) in [1usize, 3].into_iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let options = RunOptions {
            workers,
            out: Some(dir.clone()),
            ..RunOptions::default()
        };
        let summary = run_experiment(&config, &options).unwrap();
        assert!(summary.sup_distance.is_finite());
        let files: Vec<Vec<u8>> = ["surface_empirical.csv", "surface_theory.csv", "marginals.csv", "report.json"]
            .iter()
            .map(|f| fs::read(dir.join(f)).unwrap())
            .collect();
        contents.push(files);
    }
    assert_eq!(contents[0], contents[1]);
    let report: serde_json::Value = serde_json::from_slice(&contents[0][3]).unwrap();
    assert_eq!(report["dprime"].as_array().unwrap().len(), 2);
    assert_eq!(report["limit_law"], "missing-random");
}

#[test]
fn every_preset_runs_at_small_scale() {
    let tmp = tempfile::tempdir().unwrap();
    for preset in maxreplace::cli::list_presets() {
        let text = maxreplace::cli::preset_text(preset.name)
            .unwrap()
            .replace("replications = 40000", "replications = 50")
            .replace("replications = 20000", "replications = 50");
        let config = ExperimentConfig::parse(&text).unwrap();
        let options = RunOptions {
            workers: 1,
            out: Some(tmp.path().join(preset.name)),
            ..RunOptions::default()
        };
        let summary = run_experiment(&config, &options).unwrap();
        assert!(summary.sup_distance >= 0.0, "{}", preset.name);
    }
}
