//! The five CLI verbs: simulate, fit, scree, project, components.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mvlda::covariance::{class_means, flip_flop, EpochSet, FlipFlopConfig};
use mvlda::discriminant::{col_coordinates, fit, row_coordinates, scores_vec};
use mvlda::error::{Error, Result};
use mvlda::io::{
    load_epochs, load_matrix_csv, manifest_path, save_epochs, ModelFile, WaveletMetadata,
};
use mvlda::metric::{default_rank_tol, Mat};
use mvlda::synth::{
    canonical_factor_pair, metric_orthonormal_directions, random_spd, sample_matrix_normal,
    MatrixNormalSpec, GENERATOR_ID,
};
use mvlda::wavelet::{
    component_waveform, dwt_forward, select_coefficients, Boundary, CoefficientMask,
    WaveletConfig,
};

use crate::svg::{self, ScatterPoint};

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `<base>.csv` / `<base>.svg` beside the given output base path.
fn output_pair(base: &Path) -> (PathBuf, PathBuf) {
    let mut csv = base.as_os_str().to_os_string();
    csv.push(".csv");
    let mut svg = base.as_os_str().to_os_string();
    svg.push(".svg");
    (PathBuf::from(csv), PathBuf::from(svg))
}

pub struct SimulateArgs {
    pub k: usize,
    pub j: usize,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
    pub lambda: Option<Vec<f64>>,
    pub sigma_l_file: Option<PathBuf>,
    pub sigma_r_file: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    if args.k == 0 || args.j == 0 {
        return Err(Error::InvalidArgument {
            context: "k and j must be at least 1".into(),
        });
    }
    // construction draws (factors, directions, means) use a derived seed so
    // they do not share the sampling stream
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x9E37_79B9_7F4A_7C15);

    let sigma_l = match &args.sigma_l_file {
        Some(path) => load_matrix_csv(path)?,
        None => random_spd(args.k, 0.5, 2.0, &mut rng)?,
    };
    let sigma_r = match &args.sigma_r_file {
        Some(path) => load_matrix_csv(path)?,
        None => random_spd(args.j, 0.5, 2.0, &mut rng)?,
    };
    let (l_canon, r_canon) = canonical_factor_pair(&sigma_l, &sigma_r)?;

    let (mu1, mu2) = match &args.lambda {
        Some(raw) => {
            let mut lambda = raw.clone();
            if lambda.iter().any(|&l| !l.is_finite() || l <= 0.0) {
                return Err(Error::InvalidArgument {
                    context: "planted eigenvalues must be positive".into(),
                });
            }
            lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
            if lambda.len() > args.k.min(args.j) {
                return Err(Error::InvalidArgument {
                    context: format!(
                        "{} planted eigenvalues exceed min(K, J) = {}",
                        lambda.len(),
                        args.k.min(args.j)
                    ),
                });
            }
            let u = metric_orthonormal_directions(args.k, lambda.len(), &l_canon.invert(), &mut rng)?;
            let v = metric_orthonormal_directions(args.j, lambda.len(), &r_canon.invert(), &mut rng)?;
            let mut delta = Mat::zeros(args.k, args.j);
            for (q, &l) in lambda.iter().enumerate() {
                let s = l.sqrt();
                delta = &delta
                    + &Mat::from_fn(args.k, args.j, |r, c| s * u.get(r, q) * v.get(c, q));
            }
            (delta.scaled(0.5), delta.scaled(-0.5))
        }
        None => {
            // full-rank mean difference almost surely
            let dirs = metric_orthonormal_directions(
                args.k * args.j,
                1,
                &mvlda::metric::SpdFactor::identity(args.k * args.j),
                &mut rng,
            )?;
            let scale = (args.k * args.j) as f64;
            let mu1 = Mat::from_fn(args.k, args.j, |r, c| {
                dirs.get(r * args.j + c, 0) * scale.sqrt()
            });
            (mu1, Mat::zeros(args.k, args.j))
        }
    };

    let spec = MatrixNormalSpec::new(mu1, mu2, l_canon, r_canon, args.n1, args.n2, args.seed)?;
    let epochs = sample_matrix_normal(&spec);

    let generator_info = serde_json::json!({
        "generator": GENERATOR_ID,
        "seed": args.seed,
        "construction_seed": "seed xor 0x9E3779B97F4A7C15",
        "K": args.k,
        "J": args.j,
        "n1": args.n1,
        "n2": args.n2,
        "planted_lambda": args.lambda,
        "sigma_l": args.sigma_l_file.as_ref().map(|p| p.display().to_string()),
        "sigma_r": args.sigma_r_file.as_ref().map(|p| p.display().to_string()),
    });
    save_epochs(&epochs, &args.out, None, Some(generator_info))?;
    println!("bundle={}", manifest_path(&args.out).display());
    println!("n={}", epochs.len());
    Ok(())
}

pub struct FitArgs {
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub tol: f64,
    pub max_iter: usize,
    pub ridge: f64,
    pub floor_ratio: f64,
    pub rank_tol: Option<f64>,
    pub wavelet: bool,
    pub filter_taps: usize,
    pub levels: usize,
    pub boundary: Boundary,
    pub padded_length: usize,
    pub baseline_samples: usize,
}

/// Applies the wavelet front-end: per trial and electrode, optional baseline
/// subtraction and forward DWT; selection statistics are computed over all
/// (trial, electrode) coefficient vectors, label-free.
fn wavelet_front_end(
    epochs: &EpochSet,
    config: &WaveletConfig,
    baseline_samples: usize,
) -> Result<(Vec<Vec<Vec<f64>>>, CoefficientMask)> {
    let mut transformed: Vec<Vec<Vec<f64>>> = Vec::with_capacity(epochs.len());
    for trial in epochs.trials() {
        let mut columns = Vec::with_capacity(epochs.j());
        for c in 0..epochs.j() {
            let mut column = trial.col(c);
            if baseline_samples > 0 {
                let window = baseline_samples.min(column.len());
                let baseline: f64 = column[..window].iter().sum::<f64>() / window as f64;
                for v in column.iter_mut() {
                    *v -= baseline;
                }
            }
            columns.push(dwt_forward(&column, config)?);
        }
        transformed.push(columns);
    }
    let flat: Vec<Vec<f64>> = transformed.iter().flatten().cloned().collect();
    let mask = select_coefficients(&flat)?;
    Ok((transformed, mask))
}

fn reduce_with_mask(
    epochs: &EpochSet,
    transformed: &[Vec<Vec<f64>>],
    mask: &CoefficientMask,
) -> Result<EpochSet> {
    if mask.k() == 0 {
        return Err(Error::DegenerateInput);
    }
    let mut trials = Vec::with_capacity(transformed.len());
    for columns in transformed {
        let gathered: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| mask.gather(c))
            .collect::<Result<_>>()?;
        trials.push(Mat::from_fn(mask.k(), epochs.j(), |r, c| gathered[c][r]));
    }
    let row_names = mask
        .kept_indices()
        .iter()
        .map(|i| format!("c{i}"))
        .collect();
    EpochSet::new(trials, epochs.labels().to_vec())?
        .with_names(epochs.channel_names().map(|n| n.to_vec()), Some(row_names))
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let raw = load_epochs(&args.bundle)?;
    let (epochs, wavelet_meta) = if args.wavelet {
        let config = WaveletConfig::new(
            args.filter_taps,
            args.levels,
            args.boundary,
            args.padded_length,
        )?;
        let (transformed, mask) = wavelet_front_end(&raw, &config, args.baseline_samples)?;
        let reduced = reduce_with_mask(&raw, &transformed, &mask)?;
        (
            reduced,
            Some(WaveletMetadata {
                config,
                mask,
                baseline_samples: args.baseline_samples,
            }),
        )
    } else {
        (raw, None)
    };

    let flip_config = FlipFlopConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        ridge: args.ridge,
        floor_ratio: args.floor_ratio,
    };
    let cov = flip_flop(&epochs, &flip_config)?;
    let rank_tol = args
        .rank_tol
        .unwrap_or_else(|| default_rank_tol(epochs.k(), epochs.j()));
    let model = fit(&epochs, &cov, rank_tol)?;

    let file = ModelFile::from_fit(
        &model,
        &cov,
        &flip_config,
        rank_tol,
        wavelet_meta,
        epochs.channel_names().map(|n| n.to_vec()),
        epochs.row_names().map(|n| n.to_vec()),
    );
    file.save(&args.out)?;

    println!("iterations={}", cov.iterations());
    println!("converged={}", cov.converged());
    println!("fixed_point_residual={}", fmt_f64(cov.fixed_point_residual()));
    println!("q={}", model.q());
    Ok(())
}

/// Advisory retained dimension from the scree: the interior point with the
/// largest vertical gap below the chord joining (1, lambda_1) to
/// (Q, lambda_Q) is the elbow; r is that index minus one. If no interior
/// point lies strictly below the chord, r = Q.
pub fn elbow_r(lambda: &[f64]) -> usize {
    let q = lambda.len();
    if q <= 2 {
        return q;
    }
    let x1 = 1.0;
    let xq = q as f64;
    let slope = (lambda[q - 1] - lambda[0]) / (xq - x1);
    let mut best: Option<(usize, f64)> = None;
    for (idx, &l) in lambda.iter().enumerate().take(q - 1).skip(1) {
        let pos = (idx + 1) as f64;
        let gap = lambda[0] + slope * (pos - x1) - l;
        if gap > 0.0 && best.is_none_or(|(_, g)| gap > g) {
            best = Some((idx + 1, gap));
        }
    }
    match best {
        Some((elbow_index, _)) => elbow_index - 1,
        None => q,
    }
}

pub struct ScreeArgs {
    pub model: PathBuf,
    pub out: PathBuf,
}

pub fn cmd_scree(args: &ScreeArgs) -> Result<()> {
    let file = ModelFile::load(&args.model)?;
    let lambda = &file.lambda;
    let total: f64 = lambda.iter().sum();
    let r = elbow_r(lambda);

    let mut csv = String::from("q,lambda,cumulative_fraction,elbow\n");
    let mut cumulative = 0.0;
    for (idx, &l) in lambda.iter().enumerate() {
        cumulative += l;
        let marker = if idx + 1 == r { 1 } else { 0 };
        csv.push_str(&format!(
            "{},{},{},{marker}\n",
            idx + 1,
            fmt_f64(l),
            fmt_f64(cumulative / total)
        ));
    }
    if lambda.is_empty() {
        eprintln!("warning: model has no discriminant directions; scree is empty");
    }
    let (csv_path, svg_path) = output_pair(&args.out);
    write_text(&csv_path, &csv)?;
    let chart = svg::bar_chart(
        "Eigenvalue scree",
        "q",
        "lambda",
        lambda,
        if r >= 1 { Some(r - 1) } else { None },
    );
    write_text(&svg_path, &chart)?;
    println!("csv={}", csv_path.display());
    println!("svg={}", svg_path.display());
    println!("elbow_r={r}");
    Ok(())
}

/// When the model was fitted behind the wavelet front-end and the bundle
/// still holds raw time courses, push it through the stored configuration
/// and mask; re-selection never happens at projection time.
fn align_epochs_to_model(epochs: EpochSet, file: &ModelFile) -> Result<EpochSet> {
    if epochs.k() == file.k {
        return Ok(epochs);
    }
    if let Some(meta) = &file.wavelet {
        let (transformed, _) = wavelet_front_end(&epochs, &meta.config, meta.baseline_samples)?;
        return reduce_with_mask(&epochs, &transformed, &meta.mask);
    }
    Err(Error::DimensionMismatch {
        context: format!(
            "bundle trials are {}x{} but the model is {}x{}",
            epochs.k(),
            epochs.j(),
            file.k,
            file.j
        ),
    })
}

fn validate_axes(axes: &Option<Vec<usize>>, q: usize, default_count: usize) -> Result<Vec<usize>> {
    match axes {
        Some(list) => {
            if list.is_empty() {
                return Err(Error::InvalidArgument {
                    context: "axis list is empty".into(),
                });
            }
            for &axis in list {
                if axis == 0 || axis > q {
                    return Err(Error::AxisOutOfRange { axis, q });
                }
            }
            Ok(list.clone())
        }
        None => {
            if q == 0 {
                return Err(Error::AxisOutOfRange { axis: 1, q });
            }
            Ok((1..=q.min(default_count)).collect())
        }
    }
}

pub struct ProjectArgs {
    pub model: PathBuf,
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub axes: Option<Vec<usize>>,
}

pub fn cmd_project(args: &ProjectArgs) -> Result<()> {
    let file = ModelFile::load(&args.model)?;
    let (model, _cov) = file.to_model()?;
    let epochs = align_epochs_to_model(load_epochs(&args.bundle)?, &file)?;
    if epochs.j() != model.j() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "bundle has {} columns but the model has {}",
                epochs.j(),
                model.j()
            ),
        });
    }
    let axes = validate_axes(&args.axes, model.q(), 2)?;

    let mut csv = String::from("trial,label");
    for a in &axes {
        csv.push_str(&format!(",score_{a}"));
    }
    csv.push('\n');
    let mut all_scores: Vec<Vec<f64>> = Vec::with_capacity(epochs.len());
    for (idx, (trial, label)) in epochs.trials().iter().zip(epochs.labels()).enumerate() {
        let scores = scores_vec(trial, &model)?;
        csv.push_str(&format!("{idx},{}", label.as_u8()));
        for &a in &axes {
            csv.push_str(&format!(",{}", fmt_f64(scores[a - 1])));
        }
        csv.push('\n');
        all_scores.push(scores);
    }

    // class means of the projected data, marked on the plot
    let (mean1, mean2, _, _) = class_means(&epochs);
    let mean_scores = [
        (scores_vec(&mean1, &model)?, 1u8),
        (scores_vec(&mean2, &model)?, 2u8),
    ];

    let (csv_path, svg_path) = output_pair(&args.out);
    write_text(&csv_path, &csv)?;

    let chart = if axes.len() >= 2 {
        let (ax, ay) = (axes[0], axes[1]);
        let points: Vec<ScatterPoint> = all_scores
            .iter()
            .zip(epochs.labels())
            .map(|(s, l)| ScatterPoint {
                x: s[ax - 1],
                y: s[ay - 1],
                class: l.as_u8(),
                label: None,
            })
            .collect();
        let means: Vec<(f64, f64, u8)> = mean_scores
            .iter()
            .map(|(s, c)| (s[ax - 1], s[ay - 1], *c))
            .collect();
        svg::scatter(
            "Observations in the factorial plane",
            &format!("axis {ax}"),
            &format!("axis {ay}"),
            &points,
            &means,
        )
    } else {
        let ax = axes[0];
        let points: Vec<ScatterPoint> = all_scores
            .iter()
            .zip(epochs.labels())
            .enumerate()
            .map(|(i, (s, l))| ScatterPoint {
                x: i as f64,
                y: s[ax - 1],
                class: l.as_u8(),
                label: None,
            })
            .collect();
        svg::scatter(
            "Scores by trial",
            "trial",
            &format!("axis {ax}"),
            &points,
            &[],
        )
    };
    write_text(&svg_path, &chart)?;
    println!("csv={}", csv_path.display());
    println!("svg={}", svg_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentDomain {
    Row,
    Col,
    Time,
}

pub struct ComponentsArgs {
    pub model: PathBuf,
    pub out: PathBuf,
    pub components: Option<Vec<usize>>,
    pub domain: ComponentDomain,
}

pub fn cmd_components(args: &ComponentsArgs) -> Result<()> {
    let file = ModelFile::load(&args.model)?;
    let (model, _cov) = file.to_model()?;
    let q_list = validate_axes(&args.components, model.q(), 3)?;
    let delta = model.delta();

    let (csv_path, svg_path) = output_pair(&args.out);
    match args.domain {
        ComponentDomain::Row | ComponentDomain::Col => {
            let (coords, index_name, names) = match args.domain {
                ComponentDomain::Row => (
                    row_coordinates(&delta, &model)?,
                    "row",
                    file.row_names.clone(),
                ),
                ComponentDomain::Col => (
                    col_coordinates(&delta, &model)?,
                    "channel",
                    file.channel_names.clone(),
                ),
                ComponentDomain::Time => unreachable!(),
            };
            let count = coords.rows();
            let name_of = |i: usize| -> String {
                names
                    .as_ref()
                    .and_then(|n| n.get(i).cloned())
                    .unwrap_or_else(|| format!("{index_name}{i}"))
            };

            let mut csv = format!("{index_name},name");
            for q in &q_list {
                csv.push_str(&format!(",component_{q}"));
            }
            csv.push('\n');
            for i in 0..count {
                csv.push_str(&format!("{i},{}", name_of(i)));
                for &q in &q_list {
                    csv.push_str(&format!(",{}", fmt_f64(coords.get(i, q - 1))));
                }
                csv.push('\n');
            }
            write_text(&csv_path, &csv)?;

            let chart = if q_list.len() == 2 {
                let points: Vec<ScatterPoint> = (0..count)
                    .map(|i| ScatterPoint {
                        x: coords.get(i, q_list[0] - 1),
                        y: coords.get(i, q_list[1] - 1),
                        class: 2,
                        label: Some(name_of(i)),
                    })
                    .collect();
                svg::scatter(
                    &format!("Discriminant components ({index_name} space)"),
                    &format!("component {}", q_list[0]),
                    &format!("component {}", q_list[1]),
                    &points,
                    &[],
                )
            } else {
                let series: Vec<(String, Vec<f64>)> = q_list
                    .iter()
                    .map(|&q| {
                        (
                            format!("component {q}"),
                            (0..count).map(|i| coords.get(i, q - 1)).collect(),
                        )
                    })
                    .collect();
                svg::multi_line(
                    &format!("Discriminant components ({index_name} space)"),
                    index_name,
                    "coordinate",
                    &series,
                )
            };
            write_text(&svg_path, &chart)?;
        }
        ComponentDomain::Time => {
            let meta = file.wavelet.as_ref().ok_or(Error::MissingWaveletMetadata)?;
            let mut series = Vec::with_capacity(q_list.len());
            for &q in &q_list {
                let waveform = component_waveform(&model, q, &meta.mask, &meta.config)?;
                series.push((format!("component {q}"), waveform));
            }
            let len = series.first().map(|(_, w)| w.len()).unwrap_or(0);
            let mut csv = String::from("sample");
            for q in &q_list {
                csv.push_str(&format!(",component_{q}"));
            }
            csv.push('\n');
            for t in 0..len {
                csv.push_str(&t.to_string());
                for (_, w) in &series {
                    csv.push_str(&format!(",{}", fmt_f64(w[t])));
                }
                csv.push('\n');
            }
            write_text(&csv_path, &csv)?;
            let chart = svg::multi_line(
                "Discriminant components (time domain)",
                "sample",
                "amplitude",
                &series,
            );
            write_text(&svg_path, &chart)?;
        }
    }
    println!("csv={}", csv_path.display());
    println!("svg={}", svg_path.display());
    Ok(())
}
