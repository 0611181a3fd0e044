//! Fitted-model persistence.
//!
//! The file stores everything needed to reuse a model without the training
//! data: dimensions, eigenvalues, bases, class means, the covariance factor
//! matrices with their estimation settings and diagnostics, optional wavelet
//! metadata, and the label names. Numbers carry 17 significant digits, so
//! loading reproduces every stored field bit for bit; the cached SPD
//! factorizations are rebuilt deterministically from the stored factors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covariance::{FlipFlopConfig, SeparableCovariance};
use crate::discriminant::DiscriminantModel;
use crate::error::{Error, Result};
use crate::io::json;
use crate::metric::{spd_factorize, Mat};
use crate::wavelet::{CoefficientMask, WaveletConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlipFlopDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub fixed_point_residual: f64,
}

/// Wavelet front-end settings and the selection mask used during fitting;
/// required for time-domain component synthesis and for pushing raw bundles
/// through the same preprocessing at projection time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveletMetadata {
    pub config: WaveletConfig,
    pub mask: CoefficientMask,
    /// Leading samples averaged and subtracted per channel before the DWT;
    /// 0 disables baseline correction.
    #[serde(default)]
    pub baseline_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    pub lambda: Vec<f64>,
    pub u: Mat,
    pub v: Mat,
    pub mean1: Mat,
    pub mean2: Mat,
    pub s_w_l: Mat,
    pub s_w_r: Mat,
    pub n1: usize,
    pub n2: usize,
    pub flip_flop: FlipFlopConfig,
    pub diagnostics: FlipFlopDiagnostics,
    pub rank_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelet: Option<WaveletMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_names: Option<Vec<String>>,
}

impl ModelFile {
    #[allow(clippy::too_many_arguments)]
    pub fn from_fit(
        model: &DiscriminantModel,
        cov: &SeparableCovariance,
        flip_flop: &FlipFlopConfig,
        rank_tol: f64,
        wavelet: Option<WaveletMetadata>,
        channel_names: Option<Vec<String>>,
        row_names: Option<Vec<String>>,
    ) -> ModelFile {
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            k: model.k(),
            j: model.j(),
            q: model.q(),
            lambda: model.lambda().to_vec(),
            u: model.u().clone(),
            v: model.v().clone(),
            mean1: model.mean1().clone(),
            mean2: model.mean2().clone(),
            s_w_l: cov.s_l().matrix().clone(),
            s_w_r: cov.s_r().matrix().clone(),
            n1: model.n1(),
            n2: model.n2(),
            flip_flop: flip_flop.clone(),
            diagnostics: FlipFlopDiagnostics {
                iterations: cov.iterations(),
                converged: cov.converged(),
                fixed_point_residual: cov.fixed_point_residual(),
            },
            rank_tol,
            wavelet,
            channel_names,
            row_names,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        json::write_json_file(path, self)
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        let file: ModelFile = json::read_json_file(path)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                detail: format!(
                    "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                    file.version
                ),
            });
        }
        if file.q != file.lambda.len() {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                detail: format!("Q = {} but {} eigenvalues stored", file.q, file.lambda.len()),
            });
        }
        Ok(file)
    }

    /// Reassembles the in-memory model and covariance. The stored bases and
    /// eigenvalues are used as-is; the SPD caches are refactorized from the
    /// stored factor matrices, which is deterministic.
    pub fn to_model(&self) -> Result<(DiscriminantModel, SeparableCovariance)> {
        let s_l = spd_factorize(&self.s_w_l, self.flip_flop.floor_ratio)?;
        let s_r = spd_factorize(&self.s_w_r, self.flip_flop.floor_ratio)?;
        let cov = SeparableCovariance::from_parts(
            s_l,
            s_r,
            self.diagnostics.iterations,
            self.diagnostics.converged,
            self.diagnostics.fixed_point_residual,
        );
        let model = DiscriminantModel::from_parts(
            self.mean1.clone(),
            self.mean2.clone(),
            cov.s_r().invert(),
            cov.s_l().invert(),
            self.u.clone(),
            self.v.clone(),
            self.lambda.clone(),
            self.n1,
            self.n2,
        )?;
        Ok((model, cov))
    }
}
