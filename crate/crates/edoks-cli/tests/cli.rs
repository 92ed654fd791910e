//! End-to-end tests of the `edoks` binary: exit codes, output formats, and
//! determinism of the file-level contracts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::RgbImage;

fn edoks_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edoks"))
}

fn run(args: &[&str]) -> Output {
    edoks_bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn textured(side: u32) -> RgbImage {
    let mut im = RgbImage::new(side, side);
    for y in 0..side {
        for x in 0..side {
            let v = 0.5 + 0.5 * (std::f64::consts::TAU * 0.2 * x as f64).sin();
            let g = (v * 255.0).round() as u8;
            im.put_pixel(x, y, image::Rgb([g, (g / 2) + 30, 200 - g / 3]));
        }
    }
    im
}

fn save(dir: &Path, name: &str, img: &RgbImage) -> PathBuf {
    let path = dir.join(name);
    img.save(&path).unwrap();
    path
}

#[test]
fn compare_self_reports_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(48));
    let out = run(&[
        "compare",
        a.to_str().unwrap(),
        a.to_str().unwrap(),
        "--patch-size",
        "24",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["emd"], 0.0);
    assert_eq!(report["ok"], 0.0);
    assert_eq!(report["edoks"], 1e12);
    assert_eq!(report["p"], 24);
}

#[test]
fn compare_missing_file_exits_2() {
    let out = run(&["compare", "/nonexistent/a.png", "/nonexistent/b.png"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn compare_dimension_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(48));
    let b = save(dir.path(), "b.png", &textured(32));
    let out = run(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_invalid_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(32));
    for args in [
        vec![
            "compare",
            a.to_str().unwrap(),
            a.to_str().unwrap(),
            "--alpha",
            "1.5",
        ],
        vec![
            "compare",
            a.to_str().unwrap(),
            a.to_str().unwrap(),
            "--c",
            "0",
        ],
        vec![
            "compare",
            a.to_str().unwrap(),
            a.to_str().unwrap(),
            "--patch-size",
            "2",
        ],
        vec![
            "compare",
            a.to_str().unwrap(),
            a.to_str().unwrap(),
            "--scales",
            "-0.1",
        ],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(4), "args: {args:?}");
    }
}

// A color-only change on a flat-texture image: alpha 1 sees nothing,
// alpha 0 sees it all.
#[test]
fn alpha_extremes_separate_color_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(
        dir.path(),
        "a.png",
        &RgbImage::from_pixel(32, 32, image::Rgb([180, 60, 60])),
    );
    let b = save(
        dir.path(),
        "b.png",
        &RgbImage::from_pixel(32, 32, image::Rgb([60, 180, 60])),
    );

    let out1 = run(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--alpha",
        "1",
        "--patch-size",
        "16",
    ]);
    let r1: serde_json::Value = serde_json::from_str(stdout(&out1).trim()).unwrap();
    assert!(r1["edok"].as_f64().unwrap() < 1e-9);

    let out0 = run(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--alpha",
        "0",
        "--patch-size",
        "16",
    ]);
    let r0: serde_json::Value = serde_json::from_str(stdout(&out0).trim()).unwrap();
    assert!(r0["edok"].as_f64().unwrap() > 0.05);
    assert_eq!(r0["edok"], r0["ok"]);
}

#[test]
fn compare_emits_maps() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(48));
    let blurred = image::imageops::blur(&textured(48), 2.0);
    let b = save(dir.path(), "b.png", &blurred);
    let maps_dir = dir.path().join("maps");

    let out = run(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--patch-size",
        "24",
        "--emit-maps",
        maps_dir.to_str().unwrap(),
        "--heat",
        "--raw-maps",
    ]);
    assert!(out.status.success());
    for name in ["texture_diff", "color_diff", "overlay"] {
        assert!(
            maps_dir.join(format!("{name}.png")).exists(),
            "{name}.png missing"
        );
        assert!(maps_dir.join(format!("{name}_heat.png")).exists());
        assert!(maps_dir.join(format!("{name}.raw")).exists());
    }
    // raw overlay is a valid dump with values in [0, 1]
    let file = std::fs::File::open(maps_dir.join("overlay.raw")).unwrap();
    let map = edoks::render::read_raw_map(std::io::BufReader::new(file)).unwrap();
    assert_eq!((map.width(), map.height()), (48, 48));
    assert!(map.max_value() <= 1.0 + 1e-12);
}

#[test]
fn batch_is_deterministic_and_flags_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(32));
    let blurred = image::imageops::blur(&textured(32), 1.0);
    let b = save(dir.path(), "b.png", &blurred);

    let manifest = dir.path().join("pairs.csv");
    let mut f = std::fs::File::create(&manifest).unwrap();
    writeln!(f, "path_a,path_b").unwrap();
    writeln!(f, "a.png,a.png").unwrap();
    writeln!(f, "a.png,b.png").unwrap();
    drop(f);

    let args = ["batch", manifest.to_str().unwrap(), "--patch-size", "16"];
    let first = run(&args);
    assert!(first.status.success());
    let second = run(&args);
    assert_eq!(
        first.stdout, second.stdout,
        "batch output not byte-identical"
    );

    let text = stdout(&first);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "path_a,path_b,status,emd,ok,edok,edoks,alpha,p,c,error"
    );
    assert!(lines.next().unwrap().starts_with("a.png,a.png,ok,0,0,0,"));
    assert!(lines.next().unwrap().contains(",ok,"));

    // add a broken path and a malformed row: both become error records,
    // the good rows still score, and the exit turns nonzero
    let mut f = std::fs::File::options()
        .append(true)
        .open(&manifest)
        .unwrap();
    writeln!(f, "a.png,missing.png").unwrap();
    writeln!(f, "only_one_field").unwrap();
    drop(f);
    let out = edoks_bin()
        .args(args)
        .env("EDOKS_JOBS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(3).unwrap().contains("error"));
    assert!(text.lines().nth(4).unwrap().contains("error"));
    let _ = (a, b);
}

#[test]
fn eval_2afc_unanimous_fixture_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let base = textured(48);
    save(dir.path(), "ref.png", &base);
    save(dir.path(), "p0.png", &image::imageops::blur(&base, 3.0));
    save(dir.path(), "p1.png", &image::imageops::blur(&base, 0.5));

    let manifest = dir.path().join("2afc.csv");
    let mut f = std::fs::File::create(&manifest).unwrap();
    writeln!(f, "ref_path,p0_path,p1_path,judge").unwrap();
    writeln!(f, "ref.png,p0.png,p1.png,1.0").unwrap();
    writeln!(f, "ref.png,p1.png,p0.png,0.0").unwrap();
    drop(f);

    let out_dir = dir.path().join("out");
    let out = run(&[
        "eval-2afc",
        manifest.to_str().unwrap(),
        "--patch-size",
        "24",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["samples"], 2);
    assert_eq!(summary["accuracy"], 1.0);
    assert!(out_dir.join("2afc_per_sample.csv").exists());
}

#[test]
fn eval_jnd_separates_groups() {
    let dir = tempfile::tempdir().unwrap();
    let base = textured(48);
    save(dir.path(), "ref.png", &base);
    save(dir.path(), "tiny1.png", &image::imageops::blur(&base, 0.3));
    save(dir.path(), "tiny2.png", &image::imageops::blur(&base, 0.5));
    save(dir.path(), "big1.png", &image::imageops::blur(&base, 5.0));
    save(dir.path(), "big2.png", &image::imageops::blur(&base, 7.0));
    save(dir.path(), "mid.png", &image::imageops::blur(&base, 2.0));

    let manifest = dir.path().join("jnd.csv");
    let mut f = std::fs::File::create(&manifest).unwrap();
    writeln!(f, "ref_path,dist_path,votes_same,judges").unwrap();
    writeln!(f, "ref.png,tiny1.png,3,3").unwrap();
    writeln!(f, "ref.png,tiny2.png,3,3").unwrap();
    writeln!(f, "ref.png,big1.png,0,3").unwrap();
    writeln!(f, "ref.png,big2.png,0,3").unwrap();
    writeln!(f, "ref.png,mid.png,2,3").unwrap();
    drop(f);

    let out = run(&["eval-jnd", manifest.to_str().unwrap(), "--patch-size", "24"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["samples"], 5);
    assert_eq!(summary["unanimous_same"], 2);
    assert_eq!(summary["unanimous_not_same"], 2);
    let mean_same = summary["mean_same"].as_f64().unwrap();
    let mean_not_same = summary["mean_not_same"].as_f64().unwrap();
    assert!(mean_same > mean_not_same);
    assert!(summary["srocc"].as_f64().is_some());
    assert_eq!(summary["config"]["patch_size"], 24);
}

#[test]
fn alpha_sweep_writes_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let base = textured(48);
    save(dir.path(), "ref.png", &base);
    save(dir.path(), "d1.png", &image::imageops::blur(&base, 0.5));
    save(dir.path(), "d2.png", &image::imageops::blur(&base, 2.0));
    save(dir.path(), "d3.png", &image::imageops::blur(&base, 5.0));

    let manifest = dir.path().join("jnd.csv");
    let mut f = std::fs::File::create(&manifest).unwrap();
    writeln!(f, "ref_path,dist_path,votes_same,judges").unwrap();
    writeln!(f, "ref.png,d1.png,3,3").unwrap();
    writeln!(f, "ref.png,d2.png,1,3").unwrap();
    writeln!(f, "ref.png,d3.png,0,3").unwrap();
    drop(f);

    let out = run(&[
        "alpha-sweep",
        manifest.to_str().unwrap(),
        "--patch-size",
        "24",
        "--step",
        "0.01",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,srocc");
    assert_eq!(lines.len(), 1 + 101, "expected 101 grid rows");
    assert!(lines[1].starts_with("0,"));
    assert!(lines.last().unwrap().starts_with("1,"));
}

#[test]
fn bench_reports_timings() {
    let dir = tempfile::tempdir().unwrap();
    let a = save(dir.path(), "a.png", &textured(32));
    let blurred = image::imageops::blur(&textured(32), 1.0);
    let b = save(dir.path(), "b.png", &blurred);
    let out = run(&[
        "bench",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--patch-size",
        "16",
        "--repeats",
        "2",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["width"], 32);
    assert_eq!(report["repeats"], 2);
    let mean = report["seconds_mean"].as_f64().unwrap();
    let min = report["seconds_min"].as_f64().unwrap();
    let max = report["seconds_max"].as_f64().unwrap();
    assert!(min > 0.0 && min <= mean && mean <= max);
}

/// Minimal npy v1.0 writer for a single f32.
fn write_npy_scalar(path: &Path, value: f32) {
    let header_body = "{'descr': '<f4', 'fortran_order': False, 'shape': (1,), }";
    let mut header = header_body.to_string();
    let total = 10 + header.len() + 1;
    let pad = (64 - total % 64) % 64;
    header.push_str(&" ".repeat(pad));
    header.push('\n');
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"\x93NUMPY\x01\x00");
    bytes.extend_from_slice(&(header.len() as u16).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());
    bytes.extend_from_slice(&value.to_le_bytes());
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn bapps_manifest_conversion_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("bapps");
    let base = textured(48);

    // miniature 2afc tree with one subset and two samples
    let subset = root.join("2afc/val/traditional");
    for sub in ["ref", "p0", "p1", "judge"] {
        std::fs::create_dir_all(subset.join(sub)).unwrap();
    }
    for (i, judge) in [(0, 1.0f32), (1, 0.4f32)] {
        let id = format!("{i:06}");
        base.save(subset.join("ref").join(format!("{id}.png")))
            .unwrap();
        image::imageops::blur(&base, 3.0)
            .save(subset.join("p0").join(format!("{id}.png")))
            .unwrap();
        image::imageops::blur(&base, 0.5)
            .save(subset.join("p1").join(format!("{id}.png")))
            .unwrap();
        write_npy_scalar(&subset.join("judge").join(format!("{id}.npy")), judge);
    }

    // miniature jnd tree
    let jnd = root.join("jnd/val/cnn");
    for sub in ["p0", "p1", "same"] {
        std::fs::create_dir_all(jnd.join(sub)).unwrap();
    }
    for (i, frac) in [(0, 1.0f32), (1, 0.0f32), (2, 2.0f32 / 3.0)] {
        let id = format!("{i:06}");
        base.save(jnd.join("p0").join(format!("{id}.png"))).unwrap();
        image::imageops::blur(&base, 1.0 + i as f32 * 2.0)
            .save(jnd.join("p1").join(format!("{id}.png")))
            .unwrap();
        write_npy_scalar(&jnd.join("same").join(format!("{id}.npy")), frac);
    }

    let out_dir = dir.path().join("manifests");
    let out = run(&[
        "bapps-manifest",
        root.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["twoafc_rows"], 2);
    assert_eq!(summary["jnd_rows"], 3);

    let manifest = out_dir.join("2afc_val.csv");
    assert!(manifest.exists());
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("000000.png"));
    assert!(text.contains("0.4"));

    // converted manifest feeds eval-2afc; both samples prefer p1 so the
    // first sample earns its full judge fraction
    let out = run(&[
        "eval-2afc",
        manifest.to_str().unwrap(),
        "--patch-size",
        "24",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(summary["samples"], 2);
    // credits: 1.0 and 0.4
    assert!((summary["accuracy"].as_f64().unwrap() - 0.7).abs() < 1e-6);

    let jnd_manifest = out_dir.join("jnd_val.csv");
    let text = std::fs::read_to_string(&jnd_manifest).unwrap();
    assert!(text.contains(",3,3"));
    assert!(text.contains(",0,3"));
    assert!(text.contains(",2,3"));
}
