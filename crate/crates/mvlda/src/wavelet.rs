//! Orthogonal discrete wavelet front-end.
//!
//! Signals are padded to a power-of-two length, analyzed by a Daubechies
//! filter bank with circular convolution (an orthogonal transform, so perfect
//! reconstruction and Parseval hold exactly), and reduced to the coefficient
//! rows whose mean absolute value across trials exceeds the grand mean of
//! those statistics. Discriminant components are synthesized back to the time
//! domain by scattering row coordinates into the kept positions and applying
//! the inverse transform.
//!
//! Coefficient layout: coarsest approximation block first, then detail
//! blocks coarse-to-fine.

use serde::{Deserialize, Serialize};

use crate::discriminant::{row_coordinates, DiscriminantModel};
use crate::error::{Error, Result};

/// Daubechies scaling (lowpass) filters, extremal phase, 2..=20 taps.
/// Each satisfies sum h = sqrt(2), sum h^2 = 1 and vanishing even-lag
/// autocorrelation; values computed by spectral factorization at 60-digit
/// precision and rounded to f64.
#[allow(clippy::excessive_precision)]
const DAUBECHIES: [&[f64]; 10] = [
    &[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    &[
        0.48296291314453414,
        0.83651630373780791,
        0.22414386804201338,
        -0.12940952255126038,
    ],
    &[
        0.33267055295008262,
        0.80689150931109258,
        0.45987750211849157,
        -0.13501102001025459,
        -0.085441273882026662,
        0.035226291885709537,
    ],
    &[
        0.23037781330889650,
        0.71484657055291565,
        0.63088076792985891,
        -0.027983769416859854,
        -0.18703481171909308,
        0.030841381835560764,
        0.032883011666885200,
        -0.010597401785069032,
    ],
    &[
        0.16010239797419291,
        0.60382926979718967,
        0.72430852843777293,
        0.13842814590132073,
        -0.24229488706638203,
        -0.032244869584638375,
        0.077571493840045714,
        -0.0062414902127982743,
        -0.012580751999081999,
        0.0033357252854737713,
    ],
    &[
        0.11154074335010946,
        0.49462389039845309,
        0.75113390802109535,
        0.31525035170919763,
        -0.22626469396543982,
        -0.12976686756726194,
        0.097501605587323049,
        0.027522865530305729,
        -0.031582039317486030,
        0.00055384220116149614,
        0.0047772575109455106,
        -0.0010773010853084796,
    ],
    &[
        0.077852054085009179,
        0.39653931948191731,
        0.72913209084623512,
        0.46978228740519312,
        -0.14390600392856498,
        -0.22403618499387498,
        0.071309219266830265,
        0.080612609151083072,
        -0.038029936935014414,
        -0.016574541630666881,
        0.012550998556099841,
        0.00042957797292136652,
        -0.0018016407040474909,
        0.00035371379997452025,
    ],
    &[
        0.054415842243104010,
        0.31287159091429997,
        0.67563073629728981,
        0.58535468365420671,
        -0.015829105256349306,
        -0.28401554296154693,
        0.00047248457391328277,
        0.12874742662047846,
        -0.017369301001807546,
        -0.044088253930794752,
        0.013981027917398282,
        0.0087460940474057767,
        -0.0048703529934515743,
        -0.00039174037337694705,
        0.00067544940645056937,
        -0.00011747678412476953,
    ],
    &[
        0.038077947363878347,
        0.24383467461259035,
        0.60482312369011111,
        0.65728807805130054,
        0.13319738582500758,
        -0.29327378327917491,
        -0.096840783222976461,
        0.14854074933810638,
        0.030725681479333379,
        -0.067632829061329974,
        0.00025094711483145196,
        0.022361662123679097,
        -0.0047232047577513973,
        -0.0042815036824634298,
        0.0018476468830562265,
        0.00023038576352319597,
        -0.00025196318894271014,
        0.000039347320316271599,
    ],
    &[
        0.026670057900555554,
        0.18817680007769149,
        0.52720118893172559,
        0.68845903945360357,
        0.28117234366057746,
        -0.24984642432731538,
        -0.19594627437737704,
        0.12736934033579326,
        0.093057364603572351,
        -0.071394147166397087,
        -0.029457536821875813,
        0.033212674059341002,
        0.0036065535669561697,
        -0.010733175483330575,
        0.0013953517470529012,
        0.0019924052951850561,
        -0.00068585669495971163,
        -0.00011646685512928545,
        0.000093588670320069591,
        -0.000013264202894521245,
    ],
];

/// Lowpass analysis filter for a supported even tap count.
pub fn daubechies_lowpass(taps: usize) -> Result<&'static [f64]> {
    if taps == 0 || !taps.is_multiple_of(2) || taps / 2 > DAUBECHIES.len() {
        return Err(Error::InvalidArgument {
            context: format!(
                "filter_taps must be an even number in 2..={}, got {taps}",
                2 * DAUBECHIES.len()
            ),
        });
    }
    Ok(DAUBECHIES[taps / 2 - 1])
}

/// How a signal shorter than `padded_length` is extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Append zeros.
    #[serde(rename = "zero-pad")]
    ZeroPad,
    /// Repeat the signal cyclically.
    #[serde(rename = "periodic")]
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::ZeroPad => write!(f, "zero-pad"),
            Boundary::Periodic => write!(f, "periodic"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-pad" => Ok(Boundary::ZeroPad),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument {
                context: format!("unknown boundary policy '{other}' (zero-pad | periodic)"),
            }),
        }
    }
}

/// Orthogonal DWT configuration.
#[derive(Debug, Clone)]
pub struct WaveletConfig {
    filter_taps: usize,
    levels: usize,
    boundary: Boundary,
    padded_length: usize,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletConfig {
    /// Validates and builds a configuration. `padded_length` must be a power
    /// of two divisible by `2^levels`.
    pub fn new(
        filter_taps: usize,
        levels: usize,
        boundary: Boundary,
        padded_length: usize,
    ) -> Result<Self> {
        let lowpass = daubechies_lowpass(filter_taps)?.to_vec();
        if levels == 0 {
            return Err(Error::InvalidArgument {
                context: "levels must be at least 1".into(),
            });
        }
        if !padded_length.is_power_of_two() {
            return Err(Error::InvalidArgument {
                context: format!("padded_length must be a power of two, got {padded_length}"),
            });
        }
        if levels >= usize::BITS as usize || !padded_length.is_multiple_of(1usize << levels) {
            return Err(Error::InvalidArgument {
                context: format!(
                    "padded_length {padded_length} is not divisible by 2^levels = {}",
                    1u128 << levels
                ),
            });
        }
        // quadrature mirror: g[m] = (-1)^m h[taps-1-m]
        let highpass: Vec<f64> = (0..filter_taps)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[filter_taps - 1 - m]
            })
            .collect();
        let sum: f64 = lowpass.iter().sum();
        let energy: f64 = lowpass.iter().map(|h| h * h).sum();
        debug_assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12);
        debug_assert!((energy - 1.0).abs() < 1e-12);
        Ok(WaveletConfig {
            filter_taps,
            levels,
            boundary,
            padded_length,
            lowpass,
            highpass,
        })
    }

    pub fn filter_taps(&self) -> usize {
        self.filter_taps
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn padded_length(&self) -> usize {
        self.padded_length
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

impl Default for WaveletConfig {
    /// 8-tap Daubechies filter, 5 decomposition levels, zero padding to 1024.
    fn default() -> Self {
        WaveletConfig::new(8, 5, Boundary::ZeroPad, 1024).expect("default config is valid")
    }
}

#[derive(Serialize, Deserialize)]
struct WaveletConfigRepr {
    filter_taps: usize,
    levels: usize,
    boundary: Boundary,
    padded_length: usize,
}

impl Serialize for WaveletConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        WaveletConfigRepr {
            filter_taps: self.filter_taps,
            levels: self.levels,
            boundary: self.boundary,
            padded_length: self.padded_length,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WaveletConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = WaveletConfigRepr::deserialize(deserializer)?;
        WaveletConfig::new(repr.filter_taps, repr.levels, repr.boundary, repr.padded_length)
            .map_err(serde::de::Error::custom)
    }
}

fn pad(signal: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    let n = config.padded_length;
    if signal.len() > n {
        return Err(Error::InvalidArgument {
            context: format!(
                "signal length {} exceeds padded_length {n}",
                signal.len()
            ),
        });
    }
    if signal.len() == n {
        return Ok(signal.to_vec());
    }
    let mut out = vec![0.0; n];
    if signal.is_empty() {
        return Ok(out);
    }
    match config.boundary {
        Boundary::ZeroPad => out[..signal.len()].copy_from_slice(signal),
        Boundary::Periodic => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = signal[i % signal.len()];
            }
        }
    }
    Ok(out)
}

/// One analysis stage on `buf[..n]`: approximation into the first half,
/// detail into the second. Circular convolution keeps the stage orthogonal.
fn analysis_stage(buf: &mut [f64], n: usize, h: &[f64], g: &[f64]) {
    let half = n / 2;
    let mut out = vec![0.0; n];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (m, (&hm, &gm)) in h.iter().zip(g.iter()).enumerate() {
            let x = buf[(2 * k + m) % n];
            a += hm * x;
            d += gm * x;
        }
        out[k] = a;
        out[half + k] = d;
    }
    buf[..n].copy_from_slice(&out);
}

/// Adjoint of [`analysis_stage`]; exact inverse by orthogonality.
fn synthesis_stage(buf: &mut [f64], n: usize, h: &[f64], g: &[f64]) {
    let half = n / 2;
    let mut out = vec![0.0; n];
    for k in 0..half {
        let a = buf[k];
        let d = buf[half + k];
        for (m, (&hm, &gm)) in h.iter().zip(g.iter()).enumerate() {
            out[(2 * k + m) % n] += hm * a + gm * d;
        }
    }
    buf[..n].copy_from_slice(&out);
}

/// Multi-level forward transform of a (padded) signal. Output:
/// `[approx_L | detail_L | detail_{L-1} | ... | detail_1]`.
pub fn dwt_forward(signal: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    let mut buf = pad(signal, config)?;
    let mut n = config.padded_length;
    for _ in 0..config.levels {
        analysis_stage(&mut buf, n, &config.lowpass, &config.highpass);
        n /= 2;
    }
    Ok(buf)
}

/// Exact inverse of [`dwt_forward`]; returns the padded-length time signal.
pub fn dwt_inverse(coeffs: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    if coeffs.len() != config.padded_length {
        return Err(Error::DimensionMismatch {
            context: format!(
                "coefficient vector has length {}, expected padded_length {}",
                coeffs.len(),
                config.padded_length
            ),
        });
    }
    let mut buf = coeffs.to_vec();
    let mut n = config.padded_length >> config.levels;
    for _ in 0..config.levels {
        n *= 2;
        synthesis_stage(&mut buf, n, &config.lowpass, &config.highpass);
    }
    Ok(buf)
}

/// Data-driven coefficient selection: which indices carry signal.
///
/// `statistic[i]` is the mean absolute value of coefficient i across the
/// supplied vectors; `threshold` is the grand mean of the statistics; kept
/// are the indices with statistic strictly above the threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientMask {
    total_len: usize,
    kept_indices: Vec<usize>,
    statistic: Vec<f64>,
    threshold: f64,
}

impl CoefficientMask {
    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn kept_indices(&self) -> &[usize] {
        &self.kept_indices
    }

    pub fn statistic(&self) -> &[f64] {
        &self.statistic
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Number of kept coefficients; the K of the downstream epoch set.
    pub fn k(&self) -> usize {
        self.kept_indices.len()
    }

    /// A mask keeping every index; useful when no selection is wanted.
    pub fn all_pass(total_len: usize) -> CoefficientMask {
        CoefficientMask {
            total_len,
            kept_indices: (0..total_len).collect(),
            statistic: vec![1.0; total_len],
            threshold: 0.0,
        }
    }

    /// Extracts the kept coefficients from a full-length vector.
    pub fn gather(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.total_len {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "vector has length {}, mask covers {}",
                    full.len(),
                    self.total_len
                ),
            });
        }
        Ok(self.kept_indices.iter().map(|&i| full[i]).collect())
    }

    /// Places kept-coefficient values back into a full-length vector,
    /// zeros elsewhere.
    pub fn scatter(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.kept_indices.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{} values for {} kept indices",
                    values.len(),
                    self.kept_indices.len()
                ),
            });
        }
        let mut full = vec![0.0; self.total_len];
        for (&idx, &v) in self.kept_indices.iter().zip(values) {
            full[idx] = v;
        }
        Ok(full)
    }
}

/// Builds a [`CoefficientMask`] from transformed trials: per-index mean
/// absolute value, thresholded by the grand mean, strict inequality.
pub fn select_coefficients(transformed_trials: &[Vec<f64>]) -> Result<CoefficientMask> {
    let first = transformed_trials.first().ok_or(Error::InvalidArgument {
        context: "no transformed trials supplied".into(),
    })?;
    let len = first.len();
    if len == 0 {
        return Err(Error::InvalidArgument {
            context: "transformed trials are empty vectors".into(),
        });
    }
    for (i, t) in transformed_trials.iter().enumerate() {
        if t.len() != len {
            return Err(Error::DimensionMismatch {
                context: format!("trial {i} has length {}, expected {len}", t.len()),
            });
        }
    }
    let n = transformed_trials.len() as f64;
    let mut statistic = vec![0.0; len];
    for t in transformed_trials {
        for (s, &c) in statistic.iter_mut().zip(t) {
            *s += c.abs();
        }
    }
    for s in statistic.iter_mut() {
        *s /= n;
    }
    let threshold = statistic.iter().sum::<f64>() / len as f64;
    let kept_indices: Vec<usize> = (0..len).filter(|&i| statistic[i] > threshold).collect();
    Ok(CoefficientMask {
        total_len: len,
        kept_indices,
        statistic,
        threshold,
    })
}

/// Time-domain discriminant component q (1-based): column q of the row
/// coordinates of the mean difference, scattered through the mask and
/// synthesized by the inverse transform.
pub fn component_waveform(
    model: &DiscriminantModel,
    q: usize,
    mask: &CoefficientMask,
    config: &WaveletConfig,
) -> Result<Vec<f64>> {
    if q == 0 || q > model.q() {
        return Err(Error::AxisOutOfRange {
            axis: q,
            q: model.q(),
        });
    }
    if mask.k() != model.k() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "mask keeps {} coefficients but the model has K = {}",
                mask.k(),
                model.k()
            ),
        });
    }
    if mask.total_len() != config.padded_length() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "mask covers {} coefficients but padded_length is {}",
                mask.total_len(),
                config.padded_length()
            ),
        });
    }
    let coords = row_coordinates(&model.delta(), model)?;
    let full = mask.scatter(&coords.col(q - 1))?;
    dwt_inverse(&full, config)
}
