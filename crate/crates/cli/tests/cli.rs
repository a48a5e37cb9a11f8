//! End-to-end runs of the `surfel-riemann` binary on the fixture files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surfel-riemann"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

const FLAT_PINS: &str = "0,0,1=0,0;6,6,1=6,6";

#[test]
fn extract_single_voxel() {
    let out = run(&["extract", "--voxels", &fixture("cube.txt")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "V=8 E=12 F=6 genus=0");
}

#[test]
fn error_fixtures_exit_with_2() {
    let out = run(&["extract", "--voxels", &fixture("empty.txt")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("EmptyInput"));

    let out = run(&["extract", "--voxels", &fixture("pair.txt")]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("NonManifoldEdge") && err.contains("(1,1,0)-(1,1,1)"), "{err}");

    let out = run(&[
        "ratios",
        "--voxels",
        &fixture("cube.txt"),
        "--normals",
        &fixture("inplane_normals.txt"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("DegenerateProjection") && err.contains("(0,0,0)+Z"), "{err}");
}

#[test]
fn missing_input_file_is_an_input_error() {
    let out = run(&["extract", "--voxels", "/nonexistent/voxels.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Io"));
}

#[test]
fn flat_ratios_are_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ratios", "--surfels", &fixture("flat.txt"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (re, im): (f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!((re - 1.0).abs() <= 1e-12 && im.abs() <= 1e-12, "{line}");
    }
    assert_eq!(read_json(dir.path().join("ratios.json"))["schema"], "surfel-riemann/1");
}

#[test]
fn standard_plane_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ratios", "--surfels", &fixture("plane.txt"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    let (lo, hi) = (1.0 / 3f64.sqrt(), 3f64.sqrt());
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let re: f64 = f[1].parse().unwrap();
        assert!((re - lo).abs() <= 1e-12 || (re - hi).abs() <= 1e-12, "{line}");
    }
}

#[test]
fn parametrize_flat_patch() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "parametrize",
        "--surfels",
        &fixture("flat.txt"),
        "--pins",
        FLAT_PINS,
        "--out",
        dir.path().to_str().unwrap(),
        "--emit",
        "json,csv,svg",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_json(dir.path().join("energy.json"));
    assert_eq!(report["schema"], "surfel-riemann/1");
    let conformal = report["energies"]["conformal"].as_f64().unwrap();
    let dirichlet = report["energies"]["dirichlet"].as_f64().unwrap();
    assert!(conformal <= 1e-16 * dirichlet, "{conformal} vs {dirichlet}");
    let svg = fs::read_to_string(dir.path().join("image.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polygon").count(), 36);
    // the identity map: every solution row has re = cx, im = cy
    let solution = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    for line in solution.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[3] - v[0]).abs() < 1e-10 && (v[4] - v[1]).abs() < 1e-10, "{line}");
    }
}

#[test]
fn parametrize_without_pins_is_underconstrained() {
    let out = run(&["parametrize", "--surfels", &fixture("flat.txt")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Underconstrained"));
}

#[test]
fn energy_of_constant_and_incomplete_functions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(&[
        "parametrize",
        "--surfels",
        &fixture("flat.txt"),
        "--pins",
        FLAT_PINS,
        "--out",
        d.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let function = fs::read_to_string(d.join("function.csv")).unwrap();

    let constant: String = function
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                format!("{},2.5,-1\n", l.split(',').next().unwrap())
            }
        })
        .collect();
    fs::write(d.join("constant.csv"), constant).unwrap();
    let out_dir = d.join("constant");
    let out = run(&[
        "energy",
        "--surfels",
        &fixture("flat.txt"),
        "--function",
        d.join("constant.csv").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_json(out_dir.join("energy.json"));
    for key in ["dirichlet", "conformal", "area", "identity_residual"] {
        assert_eq!(report[key].as_f64(), Some(0.0), "{key}");
    }

    let mut lines: Vec<&str> = function.lines().collect();
    let dropped = lines.remove(5).split(',').next().unwrap().to_string();
    fs::write(d.join("partial.csv"), lines.join("\n")).unwrap();
    let out = run(&[
        "energy",
        "--surfels",
        &fixture("flat.txt"),
        "--function",
        d.join("partial.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("MissingCell") && err.contains(&dropped), "{err}");
}

#[test]
fn flip_check_on_the_standard_plane() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["flip-check", "--surfels", &fixture("plane.txt"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = read_json(dir.path().join("flips.json"));
    assert!(report["flippable"].as_u64().unwrap() > 0);
    for key in ["max_product_residual", "max_round_trip", "max_double_flip"] {
        assert!(report[key].as_f64().unwrap() <= 1e-12, "{key}");
    }
}

/// Every subcommand with a representative input.
fn all_subcommands() -> Vec<Vec<String>> {
    let cases: [&[&str]; 8] = [
        &["extract", "--voxels", "slab.txt"],
        &["ratios", "--surfels", "plane.txt"],
        &["laplacian", "--voxels", "slab.txt", "--kind", "compositional"],
        &["laplacian", "--surfels", "plane.txt", "--kind", "real"],
        &["solve", "--surfels", "flat.txt", "--pins", "0,0,1=0,0;6,6,1=6,6;0,1,1=0,1"],
        &["parametrize", "--surfels", "plane.txt", "--pins", "1,0,0=0,0;8,8,-14=1,1"],
        &["energy", "--surfels", "flat.txt", "--function", "@function"],
        &["flip-check", "--surfels", "plane.txt"],
    ];
    cases
        .iter()
        .map(|c| {
            c.iter()
                .map(|a| if a.ends_with(".txt") { fixture(a) } else { a.to_string() })
                .collect()
        })
        .collect()
}

#[test]
fn every_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let function = dir.path().join("function.csv");
    let out = run(&[
        "parametrize",
        "--surfels",
        &fixture("flat.txt"),
        "--pins",
        FLAT_PINS,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for (k, case) in all_subcommands().into_iter().enumerate() {
        let args: Vec<String> = case
            .into_iter()
            .map(|a| if a == "@function" { function.to_string_lossy().into_owned() } else { a })
            .collect();
        let mut outputs = Vec::new();
        for round in 0..2 {
            let out_dir: PathBuf = dir.path().join(format!("case{k}-{round}"));
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            full.extend(["--out", out_dir.to_str().unwrap(), "--emit", "json,csv,svg"]);
            let out = run(&full);
            assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
            outputs.push((out.stdout, files(&out_dir)));
        }
        assert!(!outputs[0].1.is_empty(), "{args:?} wrote nothing");
        assert_eq!(outputs[0], outputs[1], "{args:?} is not deterministic");
    }
}
