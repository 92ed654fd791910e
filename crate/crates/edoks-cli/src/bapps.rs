//! Converter from the public BAPPS directory layout to the manifest CSVs the
//! evaluation commands consume.
//!
//! Expected layout (as the dataset extracts):
//!
//! ```text
//! <root>/2afc/<split>/<subset>/{ref,p0,p1}/NNNNNN.png
//! <root>/2afc/<split>/<subset>/judge/NNNNNN.npy   fraction preferring p1
//! <root>/jnd/<split>/<subset>/{p0,p1}/NNNNNN.png
//! <root>/jnd/<split>/<subset>/same/NNNNNN.npy     fraction voting "same"
//! ```
//!
//! JND juries have three members, so votes_same = round(3 * fraction).

use std::path::{Path, PathBuf};

use edoks::eval::manifest::{write_jnd_manifest, write_twoafc_manifest, JndRow, TwoAfcRow};
use edoks::{Error, Result};

use crate::npy;

const JND_JUDGES: u32 = 3;

/// Path as stored in a manifest at `out_dir`: relative when the target sits
/// under it, absolute otherwise.
fn manifest_path(out_dir: &Path, target: &Path) -> Result<String> {
    let canon_out = out_dir.canonicalize()?;
    let canon_target = target.canonicalize()?;
    let s = match canon_target.strip_prefix(&canon_out) {
        Ok(rel) => rel.to_string_lossy().into_owned(),
        Err(_) => canon_target.to_string_lossy().into_owned(),
    };
    Ok(s)
}

fn sorted_npy_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "npy") {
            if let Some(stem) = path.file_stem() {
                stems.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

fn subset_dirs(section: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(section)? {
        let path = entry?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Convert one split (e.g. `val`) of a BAPPS tree into manifests named
/// `2afc_<split>.csv` / `jnd_<split>.csv` in `out_dir`. Returns row counts.
pub fn convert(root: &Path, out_dir: &Path, split: &str) -> Result<(usize, usize)> {
    std::fs::create_dir_all(out_dir)?;

    let mut twoafc_rows: Vec<TwoAfcRow> = Vec::new();
    let twoafc_split = root.join("2afc").join(split);
    if twoafc_split.is_dir() {
        for subset in subset_dirs(&twoafc_split)? {
            let judge_dir = subset.join("judge");
            if !judge_dir.is_dir() {
                continue;
            }
            for stem in sorted_npy_stems(&judge_dir)? {
                let judge = npy::read_scalar(&judge_dir.join(format!("{stem}.npy")))?;
                twoafc_rows.push(TwoAfcRow {
                    ref_path: manifest_path(
                        out_dir,
                        &subset.join("ref").join(format!("{stem}.png")),
                    )?,
                    p0_path: manifest_path(
                        out_dir,
                        &subset.join("p0").join(format!("{stem}.png")),
                    )?,
                    p1_path: manifest_path(
                        out_dir,
                        &subset.join("p1").join(format!("{stem}.png")),
                    )?,
                    judge,
                });
            }
        }
    }

    let mut jnd_rows: Vec<JndRow> = Vec::new();
    let jnd_split = root.join("jnd").join(split);
    if jnd_split.is_dir() {
        for subset in subset_dirs(&jnd_split)? {
            let same_dir = subset.join("same");
            if !same_dir.is_dir() {
                continue;
            }
            for stem in sorted_npy_stems(&same_dir)? {
                let fraction = npy::read_scalar(&same_dir.join(format!("{stem}.npy")))?;
                let votes = (fraction * JND_JUDGES as f64).round() as i64;
                if !(0..=JND_JUDGES as i64).contains(&votes) {
                    return Err(Error::Manifest(format!(
                        "{}: same-fraction {fraction} out of range",
                        same_dir.display()
                    )));
                }
                jnd_rows.push(JndRow {
                    ref_path: manifest_path(
                        out_dir,
                        &subset.join("p0").join(format!("{stem}.png")),
                    )?,
                    dist_path: manifest_path(
                        out_dir,
                        &subset.join("p1").join(format!("{stem}.png")),
                    )?,
                    votes_same: votes as u32,
                    judges: JND_JUDGES,
                });
            }
        }
    }

    if twoafc_rows.is_empty() && jnd_rows.is_empty() {
        return Err(Error::Manifest(format!(
            "no 2afc/{split} or jnd/{split} data found under {}",
            root.display()
        )));
    }
    if !twoafc_rows.is_empty() {
        write_twoafc_manifest(&out_dir.join(format!("2afc_{split}.csv")), &twoafc_rows)?;
    }
    if !jnd_rows.is_empty() {
        write_jnd_manifest(&out_dir.join(format!("jnd_{split}.csv")), &jnd_rows)?;
    }
    Ok((twoafc_rows.len(), jnd_rows.len()))
}
