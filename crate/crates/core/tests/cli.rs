use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvflow::cli::sha256_hex;

const BIN: &str = env!("CARGO_BIN_EXE_curvflow");

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("curvflow-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&p);
        fs::create_dir_all(&p).unwrap();
        Self(p)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CURVFLOW_OUT")
        .output()
        .unwrap()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn region_violation_exits_two() {
    let d = TempDir::new("bad-params");
    let out = run(&["run", "invariance", "--lambda1", "0.5", "--lambda2", "0.9", "--out", d.0.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda2 <= lambda1"), "{err}");
}

#[test]
fn corner_invariance_run_passes_with_one_report() {
    let d = TempDir::new("corner");
    let out = run(&[
        "run", "invariance", "--n", "3", "--lambda1", "1", "--lambda2", "0", "--trials", "100", "--seed", "7",
        "--out", d.0.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = files_with_ext(&d.0, "report");
    assert_eq!(reports.len(), 1);
    let name = reports[0].file_name().unwrap().to_string_lossy().to_string();
    assert!(name.starts_with("invariance_n3_l1-0_s7_"), "{name}");
    assert!(fs::read_to_string(&reports[0]).unwrap().contains("verdict = pass"));
}

#[test]
fn all_writes_four_reports_and_a_manifest() {
    let d = TempDir::new("all");
    let out = run(&["run", "all", "--n", "3", "--seed", "1", "--out", d.0.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(files_with_ext(&d.0, "report").len(), 4);

    let manifest = fs::read_to_string(d.0.join("manifest.sha256")).unwrap();
    assert_eq!(manifest.lines().count(), 8);
    for line in manifest.lines() {
        let (hash, name) = line.split_once("  ").unwrap();
        assert_eq!(sha256_hex(&fs::read(d.0.join(name)).unwrap()), hash, "{name}");
    }
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let a = TempDir::new("jobs1");
    let b = TempDir::new("jobs8");
    let common = ["run", "invariance", "--n", "3,4", "--trials", "60", "--seed", "5"];
    for (dir, jobs) in [(&a, "1"), (&b, "8")] {
        let mut args = common.to_vec();
        args.extend(["--jobs", jobs, "--out", dir.0.to_str().unwrap()]);
        assert_eq!(run(&args).status.code(), Some(0));
    }
    let ra = files_with_ext(&a.0, "report");
    let rb = files_with_ext(&b.0, "report");
    assert_eq!(ra.len(), 1);
    assert_eq!(ra[0].file_name(), rb[0].file_name());
    assert_eq!(fs::read(&ra[0]).unwrap(), fs::read(&rb[0]).unwrap());
}

#[test]
fn unwritable_output_exits_two() {
    let d = TempDir::new("blocked");
    let blocker = d.0.join("file");
    fs::write(&blocker, "").unwrap();
    let out = run(&["run", "trace", "--samples", "5", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn environment_sets_output_directory() {
    let d = TempDir::new("env");
    let out = Command::new(BIN)
        .args(["run", "trace", "--n", "3", "--samples", "10"])
        .env("CURVFLOW_OUT", &d.0)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(files_with_ext(&d.0, "report").len(), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = TempDir::new("config");
    let cfg = d.0.join("run.cfg");
    fs::write(
        &cfg,
        "experiment = invariance\nn = 3\ntrials = 6\nseed = 2\n[invariance]\nlambda1 = 0.5\nlambda2 = 0.9\n",
    )
    .unwrap();
    let out_dir = d.0.join("out");
    let base = ["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    // the file alone names an inadmissible pair
    assert_eq!(run(&base).status.code(), Some(2));
    let mut args = base.to_vec();
    args.extend(["--lambda1", "0.8", "--lambda2", "0.4"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports = files_with_ext(&out_dir, "report");
    assert!(reports[0].to_string_lossy().contains("_n3_l0.8-0.4_s2_"));
}

#[test]
fn trajectories_are_written_on_request() {
    let d = TempDir::new("traj");
    let out = run(&[
        "run", "invariance", "--n", "3", "--trials", "3", "--format", "both", "--out", d.0.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dirs: Vec<PathBuf> = fs::read_dir(&d.0)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    assert_eq!(dirs.len(), 1);
    let tsv = files_with_ext(&dirs[0], "tsv");
    assert_eq!(tsv.len(), 3);
    let text = fs::read_to_string(&tsv[0]).unwrap();
    assert!(text.starts_with("# t mu1 mu2 mu3"));
    let manifest = fs::read_to_string(d.0.join("manifest.sha256")).unwrap();
    assert_eq!(manifest.lines().count(), 5);
}
