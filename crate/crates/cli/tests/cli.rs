use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kle(args: &[&str]) -> Output {
    kle_env(args, &[])
}

fn kle_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kle"));
    cmd.args(args).env_remove("KLE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("kle runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_ok(out: &Output) {
    assert_eq!(code(out), 0, "stdout:\n{}\nstderr:\n{}", stdout(out), stderr(out));
}

fn mesh(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets/meshes")
        .join(name);
    p.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

fn assert_same_csvs(a: &Path, b: &Path) {
    let fa = csv_files(a);
    let fb = csv_files(b);
    assert!(!fa.is_empty());
    assert_eq!(
        fa.iter().map(|p| p.file_name()).collect::<Vec<_>>(),
        fb.iter().map(|p| p.file_name()).collect::<Vec<_>>()
    );
    for (x, y) in fa.iter().zip(&fb) {
        assert!(
            fs::read(x).unwrap() == fs::read(y).unwrap(),
            "{} differs",
            x.display()
        );
    }
}

fn out_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn spectrum_1d_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let r = kle(&[
        "spectrum-1d",
        "--kernel",
        "exp",
        "--lc",
        "0.5",
        "--nx",
        "512",
        "--out",
        out_arg(&out),
    ]);
    assert_ok(&r);
    for f in [
        "grid.csv",
        "eigenvalues.csv",
        "eigenvectors.csv",
        "analytic_eigenvalues.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let err = manifest(&out)["diagnostics"]["max_rel_eigenvalue_error"]
        .as_f64()
        .unwrap();
    assert!(err < 0.01, "error {err}");
    let m = manifest(&out);
    assert_eq!(m["command"], "spectrum-1d");
    assert!(m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|o| o == "eigenvalues.csv"));
    let header = fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    assert!(header.starts_with("k,lambda,fraction\n"));
    assert_eq!(header.lines().count(), 31);
}

#[test]
fn spectrum_1d_gauss_hermite() {
    let tmp = TempDir::new().unwrap();
    let r = kle(&[
        "spectrum-1d",
        "--kernel",
        "sqexp",
        "--lc",
        "1",
        "--grid",
        "gh",
        "--nx",
        "64",
        "--modes",
        "10",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_ok(&r);
    let err = manifest(tmp.path())["diagnostics"]["max_rel_eigenvalue_error"]
        .as_f64()
        .unwrap();
    assert!(err < 1e-3, "error {err}");
}

#[test]
fn missing_required_flag_is_usage_error() {
    let r = kle(&["spectrum-1d", "--kernel", "exp"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("--lc"));
}

#[test]
fn invalid_values_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&kle(&["spectrum-1d", "--lc", "-1", "--out", out_arg(tmp.path())])),
        2
    );
    assert_eq!(
        code(&kle(&["svd-study", "--seeds", "0", "--out", out_arg(tmp.path())])),
        2
    );
    assert_eq!(code(&kle(&["torus3d", "--metric", "manhattan"])), 2);
    let r = kle_env(
        &["spectrum-1d", "--lc", "1", "--out", out_arg(tmp.path())],
        &[("KLE_THREADS", "many")],
    );
    assert_eq!(code(&r), 2);
}

#[test]
fn thread_count_is_honoured() {
    let tmp = TempDir::new().unwrap();
    let r = kle_env(
        &[
            "spectrum-1d",
            "--lc",
            "1",
            "--nx",
            "64",
            "--out",
            out_arg(tmp.path()),
        ],
        &[("KLE_THREADS", "1")],
    );
    assert_ok(&r);
    assert_eq!(manifest(tmp.path())["threads"], "1");
}

#[test]
fn bad_meshes_are_input_errors() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.json");
    let r = kle(&[
        "mesh2d",
        "--mesh",
        missing.to_str().unwrap(),
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&r), 4);

    let degenerate = tmp.path().join("flat.json");
    fs::write(
        &degenerate,
        r#"{"vertices": [[0,0],[1,0],[2,0]], "triangles": [[0,1,2]]}"#,
    )
    .unwrap();
    let r = kle(&[
        "mesh2d",
        "--mesh",
        degenerate.to_str().unwrap(),
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&r), 4, "{}", stderr(&r));

    let garbage = tmp.path().join("garbage.json");
    fs::write(&garbage, "not json").unwrap();
    let r = kle(&[
        "mesh2d",
        "--mesh",
        garbage.to_str().unwrap(),
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&r), 4);
}

#[test]
fn mesh2d_self_alignment_keeps_signs() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("a");
    let second = tmp.path().join("b");
    let coarse = mesh("wavy_coarse.json");
    assert_ok(&kle(&[
        "mesh2d",
        "--mesh",
        &coarse,
        "--lc",
        "2",
        "--modes",
        "20",
        "--out",
        out_arg(&first),
    ]));
    for f in [
        "grid.csv",
        "spectrum_lc2.csv",
        "eigenvectors_lc2.csv",
        "vertex_modes_lc2.csv",
    ] {
        assert!(first.join(f).is_file(), "missing {f}");
    }
    let n95 = manifest(&first)["diagnostics"]["lc2_modes_for_95"]
        .as_u64()
        .unwrap();
    assert!((10..=22).contains(&n95), "{n95} modes");

    let r = kle(&[
        "mesh2d",
        "--mesh",
        &coarse,
        "--lc",
        "2",
        "--modes",
        "20",
        "--align-to",
        out_arg(&first),
        "--out",
        out_arg(&second),
    ]);
    assert_ok(&r);
    let table = fs::read_to_string(second.join("alignment_lc2.csv")).unwrap();
    let mut rows = table.lines();
    assert_eq!(rows.next(), Some("mode,sign,alignable"));
    let rows: Vec<&str> = rows.collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], "1", "row {row}");
    }
    assert_eq!(
        fs::read(first.join("eigenvectors_lc2.csv")).unwrap(),
        fs::read(second.join("eigenvectors_lc2.csv")).unwrap()
    );
}

#[test]
fn runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let r = kle(&[
            "spectrum-1d",
            "--kernel",
            "sqexp",
            "--lc",
            "0.7",
            "--grid",
            "mc",
            "--nx",
            "200",
            "--seed",
            "5",
            "--out",
            out_arg(dir),
        ]);
        assert_ok(&r);
    }
    assert_same_csvs(&a, &b);

    let (c, d) = (tmp.path().join("c"), tmp.path().join("d"));
    for dir in [&c, &d] {
        let r = kle(&[
            "svd-study",
            "--nx",
            "128",
            "--nspls",
            "32,64",
            "--seeds",
            "2",
            "--modes",
            "4",
            "--generating-modes",
            "16",
            "--out",
            out_arg(dir),
        ]);
        assert_ok(&r);
    }
    assert_same_csvs(&c, &d);
    assert_eq!(manifest(&c)["seeds"], serde_json::json!([0, 1]));
}

#[test]
fn svd_study_outputs() {
    let tmp = TempDir::new().unwrap();
    let r = kle(&[
        "svd-study",
        "--nx",
        "128",
        "--nspls",
        "32,128",
        "--seeds",
        "2",
        "--modes",
        "4",
        "--generating-modes",
        "16",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_ok(&r);
    for f in [
        "fredholm_reference.csv",
        "reference_eigenvectors.csv",
        "svd_spectra.csv",
        "coefficients.csv",
        "svd_eigenvectors_n32.csv",
        "svd_eigenvectors_n128.csv",
        "kl_detail.csv",
        "kl_summary.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let spectra = fs::read_to_string(tmp.path().join("svd_spectra.csv")).unwrap();
    assert!(spectra.starts_with("n_samples,seed,k,lambda\n"));
    assert_eq!(spectra.lines().count(), 1 + 2 * 2 * 4);
    let means = manifest(tmp.path())["diagnostics"]["mean_d_kl"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(means.len(), 2);
}

#[test]
fn config_file_runs_experiment() {
    let tmp = TempDir::new().unwrap();
    let direct = tmp.path().join("direct");
    let via = tmp.path().join("via");
    assert_ok(&kle(&[
        "spectrum-1d",
        "--kernel",
        "exp",
        "--lc",
        "0.25",
        "--nx",
        "96",
        "--modes",
        "8",
        "--out",
        out_arg(&direct),
    ]));
    let cfg = tmp.path().join("run.json");
    let text = serde_json::json!({
        "experiment": "spectrum-1d",
        "kernel": "exp",
        "lc": 0.25,
        "nx": 96,
        "modes": 8,
        "out": via,
    });
    fs::write(&cfg, text.to_string()).unwrap();
    assert_ok(&kle(&["run", "--config", cfg.to_str().unwrap()]));
    assert_same_csvs(&direct, &via);

    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"experiment": "spectrum-1d", "lc": 1, "colour": "blue"}"#,
    )
    .unwrap();
    assert_eq!(code(&kle(&["run", "--config", bad.to_str().unwrap()])), 2);

    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&kle(&["run", "--config", missing.to_str().unwrap()])), 4);
}

#[test]
fn torus_sip_lengthens_distances() {
    let tmp = TempDir::new().unwrap();
    let r = kle(&[
        "torus3d",
        "--lc",
        "2",
        "--modes",
        "5",
        "--pairs",
        "20000",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_ok(&r);
    let m = manifest(tmp.path());
    let d = &m["diagnostics"];
    let euclid = d["euclid_mean_distance"].as_f64().unwrap();
    let sip = d["sip_mean_distance"].as_f64().unwrap();
    assert!(sip > euclid, "sip {sip} <= euclid {euclid}");
    let mode = d["euclid_distance_mode"].as_f64().unwrap();
    assert!((4.5..=6.5).contains(&mode), "euclid mode {mode}");
    let l_e = d["lc2_euclid_lambda_1"].as_f64().unwrap();
    let l_s = d["lc2_sip_lambda_1"].as_f64().unwrap();
    assert!(l_s < l_e, "lambda_1 sip {l_s} >= euclid {l_e}");
    for f in [
        "sip_distances.bin",
        "distance_histogram.csv",
        "spectrum_sip_lc2.csv",
        "slice_z0_euclid_lc2.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
    let bin = fs::read(tmp.path().join("sip_distances.bin")).unwrap();
    assert_eq!(&bin[..8], b"KLEDIST1");
}

#[test]
fn torus_disconnected_graph_is_numeric_error() {
    let tmp = TempDir::new().unwrap();
    let r = kle(&[
        "torus3d",
        "--knn",
        "1",
        "--metric",
        "sip",
        "--lc",
        "1",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&r), 3, "{}", stderr(&r));
    assert!(stderr(&r).contains("disconnected"));
}

#[test]
fn oversized_problem_is_resource_error() {
    let tmp = TempDir::new().unwrap();
    let r = kle(&[
        "torus3d",
        "--resolution",
        "full",
        "--metric",
        "sip",
        "--out",
        out_arg(tmp.path()),
    ]);
    assert_eq!(code(&r), 5, "{}", stderr(&r));
    assert!(stderr(&r).contains("--force"));
}
