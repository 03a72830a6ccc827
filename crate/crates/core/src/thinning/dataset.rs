//! Paired (original, skeleton) images for training an external skeletonizer.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{binarize, load_png, BinarizeMethod};
use crate::thinning::thin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatus {
    Ok,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    /// File names relative to the output directory. For skipped inputs,
    /// `original` is the input's file name.
    pub original: String,
    pub skeleton: Option<String>,
    pub status: PairStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Entries in file-name order. Serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairManifest {
    pub entries: Vec<PairEntry>,
}

impl PairManifest {
    pub fn ok_count(&self) -> usize {
        self.entries.iter().filter(|e| e.status == PairStatus::Ok).count()
    }

    pub fn skipped_count(&self) -> usize {
        self.entries.len() - self.ok_count()
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn png_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let read = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in read {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Thins every PNG in `input_dir` and writes `<stem>.original.png` (the
/// luminance image) and `<stem>.skeleton.png` into `output_dir`, plus
/// `manifest.json`. Undecodable inputs are recorded as skipped; failing to
/// write output is an error.
pub fn generate_training_pairs(
    input_dir: &Path,
    output_dir: &Path,
    method: BinarizeMethod,
) -> Result<PairManifest> {
    let inputs = png_inputs(input_dir)?;
    std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;

    let entries = inputs
        .par_iter()
        .map(|input| process(input, output_dir, method))
        .collect::<Result<Vec<_>>>()?;
    let manifest = PairManifest { entries };

    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = output_dir.join(MANIFEST_NAME);
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn process(input: &Path, output_dir: &Path, method: BinarizeMethod) -> Result<PairEntry> {
    let gray = std::fs::read(input)
        .map_err(|e| Error::io(input, e))
        .and_then(|bytes| load_png(&bytes));
    let gray = match gray {
        Ok(g) => g,
        Err(e) => {
            return Ok(PairEntry {
                original: file_name(input),
                skeleton: None,
                status: PairStatus::Skipped,
                error: Some(e.to_string()),
            })
        }
    };
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
    let original = output_dir.join(format!("{stem}.original.png"));
    let skeleton = output_dir.join(format!("{stem}.skeleton.png"));
    gray.save_png(&original)?;
    thin(&binarize(&gray, method)).save_png(&skeleton)?;
    Ok(PairEntry {
        original: file_name(&original),
        skeleton: Some(file_name(&skeleton)),
        status: PairStatus::Ok,
        error: None,
    })
}
