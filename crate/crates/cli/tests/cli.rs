use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "\
lambda = 500 nm
z_a = 20 mm
z_b = 20 mm
magnification = 0.8
pixel = 8 um
n_x = 64
n_u = 64
source = gaussian
source_sigma = 60 um
source_step = 3 um
object = double_slit
slit_width = 100 um
slit_separation = 250 um
object_step = 1.5 um
engine = mc
frames = 300
seed = 5
";

fn cpi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpi"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cpi(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p.to_string_lossy().into_owned()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reruns_with_equal_seed_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let (a, b, c) = (t.path().join("a"), t.path().join("b"), t.path().join("c"));
    ok(&["simulate", "--config", &cfg, "--out", s(&a)]);
    ok(&["simulate", "--config", &cfg, "--out", s(&b)]);
    ok(&["simulate", "--config", &cfg, "--out", s(&c), "--seed", "6"]);
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.iter().any(|(n, _)| n == Path::new("gamma.cpig")));
    assert!(fa.iter().any(|(n, _)| n == Path::new("gamma.cpig.meta")));
    assert_eq!(fa, fb);
    let gamma = |d: &Path| std::fs::read(d.join("gamma.cpig")).unwrap();
    assert_ne!(gamma(&a), gamma(&c));
}

#[test]
fn sidecar_records_hash_seed_and_version() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    ok(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        s(t.path()),
        "--frames",
        "20",
    ]);
    let meta = std::fs::read_to_string(t.path().join("focused.pgm.meta")).unwrap();
    assert!(meta.contains("seed=5\n"));
    assert!(meta.contains(&format!("tool_version={}\n", env!("CARGO_PKG_VERSION"))));
    let hash = meta.lines().find_map(|l| l.strip_prefix("config_hash=")).unwrap();
    assert_eq!(hash.len(), 64);
    assert!(meta.contains("raw_peak="));
}

#[test]
fn truncated_tensor_fails_cleanly() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let run = t.path().join("run");
    ok(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        s(&run),
        "--engine",
        "analytic",
    ]);
    let bytes = std::fs::read(run.join("gamma.cpig")).unwrap();
    let cut = t.path().join("cut.cpig");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    let out_dir = t.path().join("refocused");
    let out = cpi(&[
        "refocus",
        "--gamma",
        s(&cut),
        "--out",
        s(&out_dir),
        "--zb",
        "21mm",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("truncated"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn refocus_at_recorded_focus_reproduces_the_image() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let run = t.path().join("run");
    ok(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        s(&run),
        "--engine",
        "analytic",
    ]);
    let out_dir = t.path().join("re");
    ok(&[
        "refocus",
        "--gamma",
        s(&run.join("gamma.cpig")),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(
        std::fs::read(run.join("focused.pgm")).unwrap(),
        std::fs::read(out_dir.join("refocused.pgm")).unwrap()
    );
    let meta = std::fs::read_to_string(out_dir.join("refocused.pgm.meta")).unwrap();
    let run_meta = std::fs::read_to_string(run.join("gamma.cpig.meta")).unwrap();
    let hash = |m: &str| {
        m.lines()
            .find(|l| l.starts_with("config_hash="))
            .unwrap()
            .to_owned()
    };
    assert_eq!(hash(&meta), hash(&run_meta));
}

#[test]
fn analyze_reports_the_dof_gain() {
    let t = tempfile::tempdir().unwrap();
    ok(&["analyze", "--config", &example("fig3.cfg"), "--out", s(t.path())]);
    let csv = std::fs::read_to_string(t.path().join("analysis.csv")).unwrap();
    assert!(csv.starts_with("name,value,unit,formula_ref\n"));
    assert!(csv.lines().any(|l| l.starts_with("dof_gain,37.5,")), "{csv}");
    let again = t.path().join("again");
    ok(&["analyze", "--config", &example("fig3.cfg"), "--out", s(&again)]);
    assert_eq!(csv, std::fs::read_to_string(again.join("analysis.csv")).unwrap());
}

#[test]
fn defocused_example_writes_all_views() {
    let t = tempfile::tempdir().unwrap();
    ok(&[
        "simulate",
        "--config",
        &example("fig3_defocused.cfg"),
        "--out",
        s(t.path()),
    ]);
    for name in [
        "gamma.cpig",
        "defocused.pgm",
        "focused.pgm",
        "refocused_1.pgm",
        "metrics.csv",
    ] {
        assert!(t.path().join(name).exists(), "{name}");
    }
    let pgm = std::fs::read(t.path().join("focused.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n150 1\n65535\n"));
}

#[test]
fn psf_matches_the_predicted_width() {
    let t = tempfile::tempdir().unwrap();
    ok(&["psf", "--config", &example("fig3.cfg"), "--out", s(t.path())]);
    let csv = std::fs::read_to_string(t.path().join("psf.csv")).unwrap();
    let ratio: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("psf_sigma_ratio,"))
        .and_then(|l| l.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn bad_configuration_reports_line_numbers() {
    let t = tempfile::tempdir().unwrap();
    let p = t.path().join("bad.cfg");
    std::fs::write(&p, SMALL.replace("z_a = 20 mm", "z_a = -1 mm")).unwrap();
    let out = cpi(&["simulate", "--config", s(&p), "--out", s(&t.path().join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 2") && err.contains("positive length required"),
        "{err}"
    );
}

#[test]
fn thread_cap_does_not_change_results() {
    let t = tempfile::tempdir().unwrap();
    let cfg = small_config(t.path());
    let run = |threads: &str, dir: &str| {
        let d = t.path().join(dir);
        let out = Command::new(env!("CARGO_BIN_EXE_cpi"))
            .env("CPI_THREADS", threads)
            .args(["simulate", "--config", &cfg, "--out", s(&d)])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(d.join("gamma.cpig")).unwrap()
    };
    assert_eq!(run("1", "one"), run("3", "three"));
    let bad = Command::new(env!("CARGO_BIN_EXE_cpi"))
        .env("CPI_THREADS", "zero")
        .args(["analyze", "--config", &example("fig3.cfg"), "--out", s(t.path())])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}
