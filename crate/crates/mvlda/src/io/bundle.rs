//! On-disk epoch container: a JSON manifest next to a flat binary payload of
//! little-endian f64 trials, trial-major and row-major within each trial
//! (each trial stored as its `vec_t`). A long-format CSV
//! (`trial,row,col,value,label`) is accepted as an import source wherever a
//! bundle is expected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covariance::{EpochSet, Label};
use crate::error::{Error, Result};
use crate::io::json;
use crate::metric::{vec_t, Mat};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Structured-text half of an epoch bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleManifest {
    pub version: u32,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub labels: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_info: Option<serde_json::Value>,
    /// Payload file name, resolved relative to the manifest's directory.
    pub payload: String,
}

/// The manifest path for a bundle base path (appends `.json` unless the path
/// already is a manifest).
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.to_path_buf()
    } else {
        let mut s = path.as_os_str().to_os_string();
        s.push(".json");
        PathBuf::from(s)
    }
}

fn payload_name_for(manifest: &Path) -> String {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "epochs".to_string());
    format!("{stem}.f64")
}

/// Writes manifest + payload for an epoch set.
pub fn save_epochs(
    epochs: &EpochSet,
    path: &Path,
    sample_rate_hz: Option<f64>,
    generator_info: Option<serde_json::Value>,
) -> Result<()> {
    let manifest_file = manifest_path(path);
    let payload_name = payload_name_for(&manifest_file);
    let payload_file = manifest_file
        .parent()
        .map(|d| d.join(&payload_name))
        .unwrap_or_else(|| PathBuf::from(&payload_name));

    let mut bytes = Vec::with_capacity(epochs.len() * epochs.k() * epochs.j() * 8);
    for trial in epochs.trials() {
        for v in vec_t(trial) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(&payload_file, &bytes).map_err(|source| Error::Io {
        path: payload_file.clone(),
        source,
    })?;

    let manifest = BundleManifest {
        version: BUNDLE_FORMAT_VERSION,
        n: epochs.len(),
        k: epochs.k(),
        j: epochs.j(),
        labels: epochs.labels().iter().map(|l| l.as_u8()).collect(),
        channel_names: epochs.channel_names().map(|s| s.to_vec()),
        row_names: epochs.row_names().map(|s| s.to_vec()),
        sample_rate_hz,
        generator_info,
        payload: payload_name,
    };
    json::write_json_file(&manifest_file, &manifest)
}

/// Loads a bundle, validating manifest/payload agreement.
pub fn load_bundle(path: &Path) -> Result<(EpochSet, BundleManifest)> {
    let manifest_file = manifest_path(path);
    let manifest: BundleManifest = json::read_json_file(&manifest_file)?;
    if manifest.version != BUNDLE_FORMAT_VERSION {
        return Err(Error::Malformed {
            path: manifest_file,
            detail: format!(
                "unsupported bundle version {} (expected {BUNDLE_FORMAT_VERSION})",
                manifest.version
            ),
        });
    }
    if manifest.labels.len() != manifest.n {
        return Err(Error::Malformed {
            path: manifest_file,
            detail: format!(
                "{} labels for n = {} trials",
                manifest.labels.len(),
                manifest.n
            ),
        });
    }
    let mut labels = Vec::with_capacity(manifest.n);
    for (trial, &raw) in manifest.labels.iter().enumerate() {
        labels.push(Label::from_u8(raw, trial)?);
    }

    let payload_file = manifest_file
        .parent()
        .map(|d| d.join(&manifest.payload))
        .unwrap_or_else(|| PathBuf::from(&manifest.payload));
    let bytes = std::fs::read(&payload_file).map_err(|source| Error::Io {
        path: payload_file.clone(),
        source,
    })?;
    let expected = (manifest.n * manifest.k * manifest.j * 8) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }

    let per_trial = manifest.k * manifest.j;
    let mut trials = Vec::with_capacity(manifest.n);
    let mut values = Vec::with_capacity(per_trial);
    for (trial, chunk) in bytes.chunks_exact(per_trial * 8).enumerate() {
        values.clear();
        for (pos, raw) in chunk.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(raw.try_into().expect("chunk of 8"));
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    trial,
                    row: pos / manifest.j,
                    col: pos % manifest.j,
                });
            }
            values.push(v);
        }
        trials.push(Mat::from_rows(manifest.k, manifest.j, &values)?);
    }

    let epochs = EpochSet::new(trials, labels)?
        .with_names(manifest.channel_names.clone(), manifest.row_names.clone())?;
    Ok((epochs, manifest))
}

/// Loads epochs from a bundle or, when the path ends in `.csv`, from a
/// long-format CSV converted in memory to the same representation.
pub fn load_epochs(path: &Path) -> Result<EpochSet> {
    if path.extension().is_some_and(|e| e == "csv") {
        import_csv(path)
    } else {
        load_bundle(path).map(|(epochs, _)| epochs)
    }
}

fn csv_malformed(path: &Path, detail: String) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        detail,
    }
}

/// Long-format import: columns `trial,row,col,value,label`, zero-based
/// indices, one record per cell, labels consistent within each trial.
pub fn import_csv(path: &Path) -> Result<EpochSet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_malformed(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_malformed(path, e.to_string()))?
        .clone();
    let col_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_malformed(path, format!("missing column '{name}'")))
    };
    let c_trial = col_of("trial")?;
    let c_row = col_of("row")?;
    let c_col = col_of("col")?;
    let c_value = col_of("value")?;
    let c_label = col_of("label")?;

    struct Cell {
        trial: usize,
        row: usize,
        col: usize,
        value: f64,
        label: u8,
    }
    let mut cells = Vec::new();
    let mut n = 0usize;
    let mut k = 0usize;
    let mut j = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_malformed(path, e.to_string()))?;
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| csv_malformed(path, format!("record {line} is too short")))
        };
        let parse_usize = |idx: usize, name: &str| -> Result<usize> {
            field(idx)?.trim().parse().map_err(|_| {
                csv_malformed(path, format!("record {line}: bad {name} '{}'", &record[idx]))
            })
        };
        let trial = parse_usize(c_trial, "trial")?;
        let row = parse_usize(c_row, "row")?;
        let col = parse_usize(c_col, "col")?;
        let value: f64 = field(c_value)?.trim().parse().map_err(|_| {
            csv_malformed(path, format!("record {line}: bad value '{}'", &record[c_value]))
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite { trial, row, col });
        }
        let label_raw: u64 = field(c_label)?.trim().parse().map_err(|_| {
            csv_malformed(path, format!("record {line}: bad label '{}'", &record[c_label]))
        })?;
        if label_raw != 1 && label_raw != 2 {
            return Err(Error::InvalidLabel {
                label: label_raw,
                trial,
            });
        }
        n = n.max(trial + 1);
        k = k.max(row + 1);
        j = j.max(col + 1);
        cells.push(Cell {
            trial,
            row,
            col,
            value,
            label: label_raw as u8,
        });
    }
    if cells.is_empty() {
        return Err(csv_malformed(path, "no data records".into()));
    }

    let per_trial = k * j;
    let mut data = vec![0.0f64; n * per_trial];
    let mut seen = vec![false; n * per_trial];
    let mut labels_raw: Vec<Option<u8>> = vec![None; n];
    for cell in &cells {
        let flat = cell.trial * per_trial + cell.row * j + cell.col;
        if seen[flat] {
            return Err(csv_malformed(
                path,
                format!(
                    "duplicate cell trial={} row={} col={}",
                    cell.trial, cell.row, cell.col
                ),
            ));
        }
        seen[flat] = true;
        data[flat] = cell.value;
        match labels_raw[cell.trial] {
            None => labels_raw[cell.trial] = Some(cell.label),
            Some(existing) if existing != cell.label => {
                return Err(csv_malformed(
                    path,
                    format!("trial {} has conflicting labels", cell.trial),
                ));
            }
            _ => {}
        }
    }
    if let Some(flat) = seen.iter().position(|&s| !s) {
        let trial = flat / per_trial;
        let rest = flat % per_trial;
        return Err(csv_malformed(
            path,
            format!("missing cell trial={trial} row={} col={}", rest / j, rest % j),
        ));
    }

    let mut trials = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for trial in 0..n {
        trials.push(Mat::from_rows(k, j, &data[trial * per_trial..(trial + 1) * per_trial])?);
        let raw = labels_raw[trial].expect("coverage check guarantees a label");
        labels.push(Label::from_u8(raw, trial)?);
    }
    EpochSet::new(trials, labels)
}

/// Plain numeric grid (comma-separated, no header), used for covariance
/// factor files.
pub fn load_matrix_csv(path: &Path) -> Result<Mat> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| csv_malformed(path, format!("line {line_no}: bad number '{f}'")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(csv_malformed(
                    path,
                    format!("line {line_no}: ragged row of {} fields", row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_malformed(path, "empty matrix".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Mat::from_rows(rows.len(), rows[0].len(), &flat)
}
