//! Subcommand implementations. Each returns the process exit code.

use std::io::Write;
use std::path::Path;

use edoks::eval::manifest::{
    load_jnd, load_triplet, read_jnd_manifest, read_twoafc_manifest, resolve,
};
use edoks::eval::{alpha_sweep, correlations, fit_logistic, twoafc_credit, TermPair};
use edoks::metric::{edoks, edoks_with_maps, reciprocal, terms, MapSet, MetricConfig};
use edoks::render::{to_gray_image, to_heat_image, write_raw_map};
use edoks::{Error, Result};
use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rows scored per parallel batch while streaming manifests.
const CHUNK: usize = 64;

pub fn load_image(path: &Path) -> Result<RgbImage> {
    let dynamic = image::open(path)?;
    if dynamic.color().has_alpha() {
        eprintln!(
            "warning: {} has an alpha channel; it is ignored",
            path.display()
        );
    }
    Ok(dynamic.into_rgb8())
}

fn normalized_for_display(map: &edoks::raster::Raster) -> edoks::raster::Raster {
    let max = map.max_value();
    if max <= 1e-12 {
        return map.clone();
    }
    let data = map.as_slice().iter().map(|v| v / max).collect();
    edoks::raster::Raster::from_vec(map.width(), map.height(), data).expect("same size")
}

fn write_maps(dir: &Path, maps: &MapSet, heat: bool, raw: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let color_display = normalized_for_display(maps.color.as_raster());
    let named = [
        ("texture_diff", &maps.texture, maps.texture.clone()),
        ("color_diff", maps.color.as_raster(), color_display),
        ("overlay", &maps.overlay, maps.overlay.clone()),
    ];
    for (name, raw_map, display_map) in named {
        to_gray_image(&display_map).save(dir.join(format!("{name}.png")))?;
        if heat {
            to_heat_image(&display_map).save(dir.join(format!("{name}_heat.png")))?;
        }
        if raw {
            let file = std::fs::File::create(dir.join(format!("{name}.raw")))?;
            write_raw_map(raw_map, std::io::BufWriter::new(file))?;
        }
    }
    Ok(())
}

pub fn compare(
    path_a: &Path,
    path_b: &Path,
    cfg: &MetricConfig,
    emit_maps: Option<&Path>,
    heat: bool,
    raw_maps: bool,
) -> Result<i32> {
    cfg.validate()?;
    let a = load_image(path_a)?;
    let b = load_image(path_b)?;
    let report = if emit_maps.is_some() {
        edoks_with_maps(&a, &b, cfg)?
    } else {
        edoks(&a, &b, cfg)?
    };
    if let (Some(dir), Some(maps)) = (emit_maps, report.maps.as_ref()) {
        write_maps(dir, maps, heat, raw_maps)?;
    }
    println!("{}", serde_json::to_string(&report)?);
    Ok(0)
}

pub fn maps(
    path_a: &Path,
    path_b: &Path,
    cfg: &MetricConfig,
    out_dir: &Path,
    heat: bool,
    raw_maps: bool,
) -> Result<i32> {
    compare(path_a, path_b, cfg, Some(out_dir), heat, raw_maps)
}

#[derive(Serialize)]
struct BenchReport<'a> {
    width: u32,
    height: u32,
    repeats: u32,
    seconds_mean: f64,
    seconds_min: f64,
    seconds_max: f64,
    config: &'a MetricConfig,
}

/// Informational timing of one comparison at its native resolution. Not a
/// gated benchmark; numbers are hardware-dependent.
pub fn bench(path_a: &Path, path_b: &Path, cfg: &MetricConfig, repeats: u32) -> Result<i32> {
    cfg.validate()?;
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let a = load_image(path_a)?;
    let b = load_image(path_b)?;
    // warm-up run so lazy initialization does not skew the first sample
    edoks(&a, &b, cfg)?;
    let mut samples = Vec::with_capacity(repeats as usize);
    for _ in 0..repeats {
        let start = std::time::Instant::now();
        edoks(&a, &b, cfg)?;
        samples.push(start.elapsed().as_secs_f64());
    }
    let report = BenchReport {
        width: a.width(),
        height: a.height(),
        repeats,
        seconds_mean: samples.iter().sum::<f64>() / samples.len() as f64,
        seconds_min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        seconds_max: samples.iter().copied().fold(0.0, f64::max),
        config: cfg,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRow {
    path_a: String,
    path_b: String,
}

#[derive(Serialize)]
struct BatchRecord {
    path_a: String,
    path_b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<edoks::MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn batch(manifest: &Path, cfg: &MetricConfig, format: OutputFormat) -> Result<i32> {
    cfg.validate()?;
    let mut reader = csv::Reader::from_path(manifest)
        .map_err(|e| Error::Manifest(format!("cannot open {}: {e}", manifest.display())))?;
    // a malformed row becomes an error record, not a run failure
    let rows: Vec<std::result::Result<PairRow, String>> = reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| format!("row {}: {e}", i + 1)))
        .collect();

    let mut records: Vec<BatchRecord> = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(CHUNK) {
        let scored: Vec<BatchRecord> = chunk
            .par_iter()
            .map(|parsed| {
                let row = match parsed {
                    Ok(row) => row,
                    Err(e) => {
                        return BatchRecord {
                            path_a: String::new(),
                            path_b: String::new(),
                            report: None,
                            error: Some(e.clone()),
                        }
                    }
                };
                let run = || -> Result<edoks::MetricReport> {
                    let a = load_image(&resolve(manifest, &row.path_a))?;
                    let b = load_image(&resolve(manifest, &row.path_b))?;
                    edoks(&a, &b, cfg)
                };
                match run() {
                    Ok(report) => BatchRecord {
                        path_a: row.path_a.clone(),
                        path_b: row.path_b.clone(),
                        report: Some(report),
                        error: None,
                    },
                    Err(e) => BatchRecord {
                        path_a: row.path_a.clone(),
                        path_b: row.path_b.clone(),
                        report: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        records.extend(scored);
    }

    let failed = records.iter().any(|r| r.error.is_some());
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        OutputFormat::Json => {
            writeln!(out, "{}", serde_json::to_string(&records)?)?;
        }
        OutputFormat::Csv => {
            writeln!(
                out,
                "path_a,path_b,status,emd,ok,edok,edoks,alpha,p,c,error"
            )?;
            for r in &records {
                match (&r.report, &r.error) {
                    (Some(rep), _) => writeln!(
                        out,
                        "{},{},ok,{},{},{},{},{},{},{},",
                        r.path_a,
                        r.path_b,
                        rep.emd,
                        rep.ok,
                        rep.edok,
                        rep.edoks,
                        rep.alpha,
                        rep.p,
                        rep.c
                    )?,
                    (None, Some(err)) => writeln!(
                        out,
                        "{},{},error,,,,,,,,\"{}\"",
                        r.path_a,
                        r.path_b,
                        err.replace('"', "'")
                    )?,
                    (None, None) => unreachable!("record without report or error"),
                }
            }
        }
    }
    Ok(if failed { 1 } else { 0 })
}

#[derive(Serialize)]
struct TwoAfcSummary<'a> {
    samples: usize,
    accuracy: f64,
    config: &'a MetricConfig,
}

pub fn eval_2afc(manifest: &Path, cfg: &MetricConfig, out_dir: Option<&Path>) -> Result<i32> {
    cfg.validate()?;
    let rows = read_twoafc_manifest(manifest)?;
    if rows.is_empty() {
        return Err(Error::Manifest("empty 2AFC manifest".into()));
    }

    let mut per_sample: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(CHUNK) {
        let scored: Vec<(f64, f64, f64)> = chunk
            .par_iter()
            .map(|row| {
                let s = load_triplet(manifest, row)?;
                let sim0 = edoks(&s.reference, &s.p0, cfg)?.edoks;
                let sim1 = edoks(&s.reference, &s.p1, cfg)?.edoks;
                Ok((sim0, sim1, twoafc_credit(sim0, sim1, s.human_choice)))
            })
            .collect::<Result<Vec<_>>>()?;
        per_sample.extend(scored);
    }

    let accuracy = per_sample.iter().map(|(_, _, c)| c).sum::<f64>() / per_sample.len() as f64;

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("2afc_per_sample.csv"))?;
        w.write_record([
            "ref_path", "p0_path", "p1_path", "judge", "sim_p0", "sim_p1", "credit",
        ])?;
        for (row, (s0, s1, credit)) in rows.iter().zip(&per_sample) {
            w.write_record([
                row.ref_path.as_str(),
                row.p0_path.as_str(),
                row.p1_path.as_str(),
                &row.judge.to_string(),
                &s0.to_string(),
                &s1.to_string(),
                &credit.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let summary = TwoAfcSummary {
        samples: per_sample.len(),
        accuracy,
        config: cfg,
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(0)
}

#[derive(Serialize)]
struct JndSummary<'a> {
    samples: usize,
    unanimous_same: usize,
    unanimous_not_same: usize,
    mean_same: Option<f64>,
    mean_not_same: Option<f64>,
    ratio: Option<f64>,
    srocc: Option<f64>,
    krocc: Option<f64>,
    plcc: Option<f64>,
    logistic_beta: Option<[f64; 5]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    config: &'a MetricConfig,
}

struct JndScored {
    terms: TermPair,
    mos: f64,
    votes_same: u32,
    judges: u32,
}

fn score_jnd_manifest(manifest: &Path, cfg: &MetricConfig) -> Result<Vec<JndScored>> {
    let rows = read_jnd_manifest(manifest)?;
    if rows.is_empty() {
        return Err(Error::Manifest("empty JND manifest".into()));
    }
    let mut scored = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(CHUNK) {
        let batch: Vec<JndScored> = chunk
            .par_iter()
            .map(|row| {
                let s = load_jnd(manifest, row)?;
                let (emd_t, ok_t) = terms(&s.reference, &s.distorted, cfg)?;
                Ok(JndScored {
                    terms: TermPair {
                        emd: emd_t,
                        ok: ok_t,
                    },
                    mos: s.mos(),
                    votes_same: s.votes_same,
                    judges: s.judges,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        scored.extend(batch);
    }
    Ok(scored)
}

pub fn eval_jnd(manifest: &Path, cfg: &MetricConfig, out_dir: Option<&Path>) -> Result<i32> {
    cfg.validate()?;
    let scored = score_jnd_manifest(manifest, cfg)?;
    let rows = read_jnd_manifest(manifest)?;

    let scores: Vec<f64> = scored
        .iter()
        .map(|s| {
            reciprocal(
                cfg.alpha * s.terms.emd + (1.0 - cfg.alpha) * s.terms.ok,
                cfg.c,
            )
        })
        .collect();
    let mos: Vec<f64> = scored.iter().map(|s| s.mos).collect();

    let mut same = Vec::new();
    let mut not_same = Vec::new();
    for (score, s) in scores.iter().zip(&scored) {
        if s.votes_same == s.judges {
            same.push(*score);
        } else if s.votes_same == 0 {
            not_same.push(*score);
        }
    }
    let mean_same = (!same.is_empty()).then(|| same.iter().sum::<f64>() / same.len() as f64);
    let mean_not_same =
        (!not_same.is_empty()).then(|| not_same.iter().sum::<f64>() / not_same.len() as f64);
    let ratio = match (mean_same, mean_not_same) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    };

    let mut note = None;
    let (srocc, krocc, plcc) = match correlations(&scores, &mos) {
        Ok(c) => (Some(c.srocc), Some(c.krocc), Some(c.plcc)),
        Err(e) => {
            note = Some(format!("correlations undefined: {e}"));
            (None, None, None)
        }
    };
    let logistic_beta = fit_logistic(&scores, &mos).ok().map(|f| f.beta);

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("jnd_per_sample.csv"))?;
        w.write_record([
            "ref_path",
            "dist_path",
            "votes_same",
            "judges",
            "mos",
            "emd",
            "ok",
            "edok",
            "edoks",
        ])?;
        for ((row, s), score) in rows.iter().zip(&scored).zip(&scores) {
            let edok_v = cfg.alpha * s.terms.emd + (1.0 - cfg.alpha) * s.terms.ok;
            w.write_record([
                row.ref_path.as_str(),
                row.dist_path.as_str(),
                &s.votes_same.to_string(),
                &s.judges.to_string(),
                &s.mos.to_string(),
                &s.terms.emd.to_string(),
                &s.terms.ok.to_string(),
                &edok_v.to_string(),
                &score.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let summary = JndSummary {
        samples: scored.len(),
        unanimous_same: same.len(),
        unanimous_not_same: not_same.len(),
        mean_same,
        mean_not_same,
        ratio,
        srocc,
        krocc,
        plcc,
        logistic_beta,
        note,
        config: cfg,
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(0)
}

pub fn alpha_sweep_cmd(
    manifest: &Path,
    cfg: &MetricConfig,
    step: f64,
    out: Option<&Path>,
) -> Result<i32> {
    cfg.validate()?;
    if step.is_nan() || step <= 0.0 || step > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "step must be in (0, 1], got {step}"
        )));
    }
    let scored = score_jnd_manifest(manifest, cfg)?;
    let term_pairs: Vec<TermPair> = scored.iter().map(|s| s.terms).collect();
    let mos: Vec<f64> = scored.iter().map(|s| s.mos).collect();

    let mut alphas = Vec::new();
    let mut i = 0u64;
    loop {
        let a = (i as f64 * step).min(1.0);
        alphas.push(a);
        if a >= 1.0 {
            break;
        }
        i += 1;
        if (i as f64 * step) > 1.0 + 1e-9 {
            break;
        }
    }
    let curve = alpha_sweep(&term_pairs, &mos, &alphas, cfg.c)?;

    let mut text = String::from("alpha,srocc\n");
    for point in &curve {
        text.push_str(&format!("{},{}\n", point.alpha, point.srocc));
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

pub fn bapps_manifest(root: &Path, out_dir: &Path, split: &str) -> Result<i32> {
    let (n2afc, njnd) = crate::bapps::convert(root, out_dir, split)?;
    println!(
        "{}",
        serde_json::json!({
            "twoafc_rows": n2afc,
            "jnd_rows": njnd,
            "out_dir": out_dir.display().to_string(),
            "split": split,
        })
    );
    Ok(0)
}

/// Exit code for an error, per the documented contract: decode/io 2,
/// dimension mismatch 3, invalid configuration 4, anything else 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Image(_) | Error::Io(_) => 2,
        Error::DimensionMismatch(..) => 3,
        Error::InvalidParameter(_) => 4,
        _ => 1,
    }
}
