use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ggl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggl"))
        .args(args)
        .env_remove("GGL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().to_string_lossy().into_owned();
        out.insert(name, fs::read(e.path()).unwrap());
    }
    out
}

/// Run twice into fresh directories and compare every CSV and JSON byte for byte.
fn assert_rerun_identical(args: &[&str], expect: &[&str]) {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", dir.to_str().unwrap()]);
        let o = ggl(&full);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (files(&a), files(&b));
    for name in expect {
        assert!(fa.contains_key(*name), "missing {name}");
    }
    let mut compared = 0;
    for (name, bytes) in &fa {
        if name.ends_with(".csv") || name.ends_with(".json") {
            if name == "timing.csv" {
                continue;
            }
            assert_eq!(Some(bytes), fb.get(name), "{name} differs between reruns");
            compared += 1;
        }
    }
    assert!(compared > 0);
}

fn assert_csv_header(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema: "), "{}", path.display());
    assert!(lines.next().unwrap().contains(','), "{}", path.display());
}

const SMALL_BENCH: &str = r#"
overlays = false
[manifest]
families = ["tripod"]
regimes = ["sparse", "incomplete"]
samplers = ["gg", "map"]
seeds = [0]
"#;

#[test]
fn reconstruct_is_deterministic() {
    assert_rerun_identical(
        &["reconstruct", "--seed", "4", "--sampler", "gg"],
        &["scan.csv", "trace.csv", "contour.csv", "metrics.json", "overlay.svg"],
    );
}

#[test]
fn bench_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bench.toml", SMALL_BENCH);
    assert_rerun_identical(
        &["bench", "--config", cfg.to_str().unwrap()],
        &["cells.csv", "summary.json", "timing.csv"],
    );
}

#[test]
fn toy1d_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "toy.toml",
        "analytic_only = true\n[toy]\nchains = 20\nsteps = 1000\n",
    );
    assert_rerun_identical(
        &["toy1d", "--config", cfg.to_str().unwrap()],
        &["summary.json", "density_quadratic.csv", "hist_analytic_gg_abs.csv", "figure.svg"],
    );
}

#[test]
fn train_score_is_deterministic_and_resumes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "train.toml", "[train]\nsteps = 300\nsamples = 2000\nlog_every = 100\n");
    let cfg = cfg.to_str().unwrap();
    assert_rerun_identical(&["train-score", "--config", cfg], &["model.txt", "loss.csv", "report.json"]);

    let first = tmp.path().join("first");
    let o = ggl(&["train-score", "--config", cfg, "--out", first.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("init loss"));
    let second = tmp.path().join("second");
    let model = first.join("model.txt");
    let o = ggl(&[
        "train-score",
        "--config",
        cfg,
        "--out",
        second.to_str().unwrap(),
        "--resume",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve = fs::read_to_string(second.join("loss.csv")).unwrap();
    let steps: Vec<usize> = curve
        .lines()
        .skip(2)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(steps, vec![400, 500, 600]);
}

#[test]
fn bench_summary_matches_cell_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bench.toml", SMALL_BENCH);
    let out = tmp.path().join("out");
    let o = ggl(&["bench", "--config", cfg.to_str().unwrap(), "--seeds", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["cells.csv", "timing.csv"] {
        assert_csv_header(&out.join(name));
    }

    // 1 family x 2 regimes x 2 samplers x 2 seeds
    let text = fs::read_to_string(out.join("cells.csv")).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 8);
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &rows {
        assert_eq!(r[4], "ok");
        groups.entry((r[1].clone(), r[2].clone())).or_default().push(r[5].parse().unwrap());
    }

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let listed = summary["groups"].as_array().unwrap();
    assert_eq!(listed.len(), groups.len());
    for g in listed {
        let key = (g["regime"].as_str().unwrap().to_string(), g["sampler"].as_str().unwrap().to_string());
        let cds = &groups[&key];
        let mean = cds.iter().sum::<f64>() / cds.len() as f64;
        let std = (cds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (cds.len() - 1) as f64).sqrt();
        assert!((g["cd_mean"].as_f64().unwrap() - mean).abs() <= 1e-12 * mean.max(1.0));
        assert!((g["cd_std"].as_f64().unwrap() - std).abs() <= 1e-12 * std.max(1.0));
    }
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    for (cmd, body) in [
        ("bench", "[manifest]\nfamilies = [\"tripod\"]\nspeed = 2\n"),
        ("reconstruct", "famly = \"tripod\"\n"),
        ("toy1d", "[toy]\nchain = 3\n"),
        ("train-score", "[prior]\nkind = \"bimodal\"\nmode = 1.0\nvariance = 0.04\nextra = 1\n"),
    ] {
        let cfg = write(tmp.path(), "bad.toml", body);
        let o = ggl(&[cmd, "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(code(&ggl(&["reconstruct", "--sampler", "nope", "--out", out])), 1);
    assert_eq!(code(&ggl(&["toy1d", "--sampler", "gg", "--out", out])), 1);
    assert_eq!(code(&ggl(&["reconstruct", "--config", "/no/such/file.toml", "--out", out])), 1);
}

#[test]
fn divergence_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "div.toml", "sampler = \"dps\"\n[dps]\neta = 1e300\n");
    let o = ggl(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("divergence"));
}

#[test]
fn partial_bench_failure_exits_three_and_still_writes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "bench.toml",
        "overlays = false\n[manifest]\nfamilies = [\"tripod\"]\nregimes = [\"sparse\"]\nsamplers = [\"gg\", \"dps\"]\nseeds = [0]\n[manifest.dps]\neta = 1e300\n",
    );
    let out = tmp.path().join("out");
    let o = ggl(&["bench", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert!(cells.contains(",gg,0,ok,"));
    assert!(cells.contains(",dps,0,failed: divergence"));
}

#[test]
fn env_var_overrides_config_out_but_not_flag() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("env");
    let flag_dir = tmp.path().join("flag");
    let run = |extra: &[&str]| {
        let mut args = vec!["reconstruct", "--seed", "1"];
        args.extend(extra);
        Command::new(env!("CARGO_BIN_EXE_ggl"))
            .args(&args)
            .env("GGL_OUT_DIR", &env_dir)
            .current_dir(tmp.path())
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&[])), 0);
    assert!(env_dir.join("metrics.json").exists());
    assert!(!tmp.path().join("out").exists());
    assert_eq!(code(&run(&["--out", flag_dir.to_str().unwrap()])), 0);
    assert!(flag_dir.join("metrics.json").exists());
}

#[test]
fn example_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (cmd, name) in [
        ("reconstruct", "reconstruct_sparse.toml"),
        ("reconstruct", "reconstruct_incomplete.toml"),
        ("bench", "bench.toml"),
        ("toy1d", "toy1d.toml"),
        ("train-score", "train_score.toml"),
        ("train-score", "train_score_family.toml"),
    ] {
        let o = ggl(&[cmd, "--config", root.join(name).to_str().unwrap(), "--dry-run"]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "[toy]
bins = 3
");
    assert_eq!(code(&ggl(&["toy1d", "--config", cfg.to_str().unwrap(), "--dry-run"])), 1);
}

#[test]
fn reconstruct_metrics_json_is_complete() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let o = ggl(&["reconstruct", "--sampler", "map", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["sampler"], "map");
    assert!(m["chamfer_distance"].as_f64().unwrap() >= 0.0);
    let ca = m["chamfer_angle"].as_f64().unwrap();
    assert!((0.0..=180.0).contains(&ca));
    assert_eq!(m["truth"].as_array().unwrap().len(), m["final_latent"].as_array().unwrap().len());
    for name in ["scan.csv", "trace.csv", "contour.csv"] {
        assert_csv_header(&out.join(name));
    }
}
