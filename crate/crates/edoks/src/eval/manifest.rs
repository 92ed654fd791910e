//! Manifest CSV ingestion for the evaluation harness.
//!
//! Two formats, both UTF-8 with a header row and paths relative to the
//! manifest file:
//!
//! * 2AFC: `ref_path,p0_path,p1_path,judge` where `judge` is the fraction of
//!   judges preferring p1.
//! * JND: `ref_path,dist_path,votes_same,judges`.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{JndSample, TripletSample};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TwoAfcRow {
    pub ref_path: String,
    pub p0_path: String,
    pub p1_path: String,
    pub judge: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JndRow {
    pub ref_path: String,
    pub dist_path: String,
    pub votes_same: u32,
    pub judges: u32,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Manifest(format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, record) in reader.deserialize().enumerate() {
        let row: T = record.map_err(|e| Error::Manifest(format!("row {}: {e}", idx + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_twoafc_manifest(path: &Path) -> Result<Vec<TwoAfcRow>> {
    let rows: Vec<TwoAfcRow> = read_rows(path)?;
    for (idx, row) in rows.iter().enumerate() {
        if !(0.0..=1.0).contains(&row.judge) {
            return Err(Error::Manifest(format!(
                "row {}: judge fraction {} outside [0, 1]",
                idx + 1,
                row.judge
            )));
        }
    }
    Ok(rows)
}

pub fn read_jnd_manifest(path: &Path) -> Result<Vec<JndRow>> {
    let rows: Vec<JndRow> = read_rows(path)?;
    for (idx, row) in rows.iter().enumerate() {
        if row.judges == 0 || row.votes_same > row.judges {
            return Err(Error::Manifest(format!(
                "row {}: votes_same {} / judges {} is invalid",
                idx + 1,
                row.votes_same,
                row.judges
            )));
        }
    }
    Ok(rows)
}

pub fn write_twoafc_manifest(path: &Path, rows: &[TwoAfcRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_jnd_manifest(path: &Path, rows: &[JndRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Resolve a manifest-relative path against the manifest's directory.
pub fn resolve(manifest: &Path, rel: &str) -> PathBuf {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    base.join(rel)
}

fn open_rgb(path: &Path) -> Result<image::RgbImage> {
    Ok(image::open(path)?.into_rgb8())
}

/// Load the three images of a 2AFC row.
pub fn load_triplet(manifest: &Path, row: &TwoAfcRow) -> Result<TripletSample> {
    Ok(TripletSample {
        reference: open_rgb(&resolve(manifest, &row.ref_path))?,
        p0: open_rgb(&resolve(manifest, &row.p0_path))?,
        p1: open_rgb(&resolve(manifest, &row.p1_path))?,
        human_choice: row.judge,
    })
}

/// Load the image pair of a JND row.
pub fn load_jnd(manifest: &Path, row: &JndRow) -> Result<JndSample> {
    Ok(JndSample {
        reference: open_rgb(&resolve(manifest, &row.ref_path))?,
        distorted: open_rgb(&resolve(manifest, &row.dist_path))?,
        votes_same: row.votes_same,
        judges: row.judges,
    })
}
