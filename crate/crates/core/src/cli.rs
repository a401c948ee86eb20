//! Command-line front end: `fit`, `cv`, `simulate`, `variogram` and `presets`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 divergence or a fit that
//! stopped at the iteration limit.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::Serialize;
use serde_json::json;

use crate::config::{CvProtocol, EstimatorChoice, InputKind, RunConfig};
use crate::error::Error;
use crate::extremes::{estimate_variogram, sample_hr_pareto, SampleBlock, VariogramEstimator, VariogramMatrix};
use crate::io::{
    ensure_dir, read_matrix_csv, read_samples_csv, to_json_string, write_json, write_matrix_csv,
    write_samples_csv,
};
use crate::lap_admm::latent_laplacian_objective;
use crate::matcore::{ones_complement_basis, psd_project, sym_eig, BasisFlavor, SymMatrix};
use crate::penalty::{compile_penalty, PenaltySpec};
use crate::select::{estimate_rank, fit_statistic, holdout_cv, kfold_cv, CvMode, GridScale, Statistic};
use crate::simgen::{derive_seed, latent_cycle_hr, sample_gaussian, two_cycle_gaussian, LatentModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "latent-golazo", version, about = "Latent graphical models with Golazo penalties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model at a single trace penalty.
    Fit(RunArgs),
    /// Cross-validate penalty specs over a λ grid.
    Cv(RunArgs),
    /// Generate a simulation design and samples.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Estimate a variogram from samples.
    Variogram(VariogramArgs),
    /// Print the bounds a penalty spec compiles to.
    Presets(PresetArgs),
}

/// Flags overriding fields of the run configuration.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML configuration file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// gaussian, hr or lcggm.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// samples, covariance or variogram.
    #[arg(long)]
    pub input_kind: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Penalty preset tag (lasso, mtp2, sparse_positive, zero_pattern:<base>, ...).
    #[arg(long)]
    pub penalty: Option<String>,
    /// Comma-separated penalty tags compared by `cv`.
    #[arg(long, value_delimiter = ',')]
    pub specs: Option<Vec<String>>,
    /// Pairs pinned to zero, e.g. `0-1,2-5`.
    #[arg(long, value_delimiter = ',')]
    pub zero_edges: Option<Vec<String>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Trace penalty for `fit`.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub grid_count: Option<usize>,
    /// log or linear.
    #[arg(long)]
    pub grid_scale: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Validation sample file; switches `cv` to the holdout protocol.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    /// rank or pareto.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Quantile level `a` of the rank variogram estimator.
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Exceedance threshold of the Pareto-scale estimator.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Sets both stopping tolerances.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub augmentation: Option<f64>,
    /// helmert or householder.
    #[arg(long)]
    pub basis: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Gaussian model with two observed cycles and one hidden node.
    TwoCycle(TwoCycleArgs),
    /// Hüsler–Reiss model with an observed cycle and hidden nodes.
    HrCycle(HrCycleArgs),
}

#[derive(Debug, Args)]
pub struct TwoCycleArgs {
    #[arg(long, default_value_t = 25)]
    pub p_per_cycle: usize,
    #[arg(long, default_value_t = 5.0)]
    pub k_diag: f64,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    pub k_edge: f64,
    /// Defaults to `k_diag / (2·p_per_cycle)`.
    #[arg(long)]
    pub k_hidden: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Size of an independent validation sample (0 = none).
    #[arg(long, default_value_t = 0)]
    pub validation_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct HrCycleArgs {
    #[arg(long, default_value_t = 30)]
    pub p: usize,
    #[arg(long, default_value_t = 3)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub validation_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct VariogramArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// rank or pareto.
    #[arg(long, default_value = "rank")]
    pub estimator: String,
    #[arg(long, default_value_t = 0.95)]
    pub quantile: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub threshold: f64,
    /// Output CSV; a manifest is written next to it.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// List the accepted preset tags and exit.
    #[arg(long)]
    pub list: bool,
    #[arg(long, default_value = "lasso")]
    pub penalty: String,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_delimiter = ',')]
    pub zero_edges: Option<Vec<String>>,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        let code = if e.is_divergence() {
            EXIT_DIVERGENCE
        } else {
            match e {
                Error::InvalidParams(_)
                | Error::InvalidPenalty(_)
                | Error::InvalidBounds(_)
                | Error::InvalidArgument(_)
                | Error::InvalidStep(_)
                | Error::InvalidModel(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            }
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliFailure>;

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> CliResult<T> {
    s.parse::<T>().map_err(CliFailure::from)
}

fn parse_edges(items: &[String]) -> CliResult<Vec<(usize, usize)>> {
    items
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once('-')
                .ok_or_else(|| CliFailure::config(format!("edge '{s}' is not of the form i-j")))?;
            let p = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| CliFailure::config(format!("edge '{s}' has a non-integer endpoint")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(args: &RunArgs) -> CliResult<RunConfig> {
    let mut c = match &args.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliFailure::config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(m) = &args.mode {
        c.mode = parse_with(m)?;
    }
    if let Some(path) = &args.input {
        let kind = c.input.as_ref().map_or(InputKind::Samples, |i| i.kind);
        c.input = Some(crate::config::InputSection { path: path.clone(), kind });
    }
    if let Some(k) = &args.input_kind {
        let kind: InputKind = parse_with(k)?;
        match c.input.as_mut() {
            Some(i) => i.kind = kind,
            None => return Err(CliFailure::config("--input-kind needs an input path")),
        }
    }
    if let Some(o) = &args.output {
        c.output = o.clone();
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(p) = &args.penalty {
        c.penalty.kind = p.clone();
    }
    if let Some(s) = &args.specs {
        c.cv.specs = s.clone();
    }
    if let Some(e) = &args.zero_edges {
        c.penalty.zero_edges = parse_edges(e)?;
    }
    if let Some(g) = args.gamma {
        c.penalty.gamma = g;
        c.grid.gamma = g;
    }
    if let Some(l) = args.lambda {
        c.penalty.lambda = l;
    }
    if let Some(v) = args.lambda_min {
        c.grid.lambda_min = v;
    }
    if let Some(v) = args.lambda_max {
        c.grid.lambda_max = v;
    }
    if let Some(v) = args.grid_count {
        c.grid.count = v;
    }
    if let Some(s) = &args.grid_scale {
        c.grid.scale = match s.to_ascii_lowercase().as_str() {
            "log" => GridScale::Log,
            "linear" => GridScale::Linear,
            other => return Err(CliFailure::config(format!("unknown grid scale '{other}'"))),
        };
    }
    if let Some(f) = args.folds {
        c.cv.folds = f;
        c.cv.protocol = CvProtocol::Kfold;
    }
    if let Some(h) = &args.holdout {
        c.cv.validation = Some(h.clone());
        c.cv.protocol = CvProtocol::Holdout;
    }
    if let Some(e) = &args.estimator {
        c.extremes.estimator = parse_estimator(e)?;
    }
    if let Some(q) = args.quantile {
        c.extremes.quantile = q;
    }
    if let Some(t) = args.threshold {
        c.extremes.threshold = t;
    }
    if let Some(n) = args.max_iter {
        c.admm.max_iter = n;
    }
    if let Some(t) = args.tol {
        c.admm.tol_rel_change = t;
        c.admm.tol_infeasibility = t;
    }
    if let Some(s) = args.augmentation {
        c.admm.augmentation = s;
    }
    if let Some(b) = &args.basis {
        c.basis = parse_with::<BasisFlavor>(b)?;
    }
    c.validate().map_err(|e| CliFailure::config(e.to_string()))?;
    Ok(c)
}

fn parse_estimator(s: &str) -> CliResult<EstimatorChoice> {
    match s.to_ascii_lowercase().as_str() {
        "rank" | "ranked" => Ok(EstimatorChoice::Rank),
        "pareto" | "pareto_scale" => Ok(EstimatorChoice::Pareto),
        other => Err(CliFailure::config(format!("unknown estimator '{other}'"))),
    }
}

/// Statistic read from the configured input, with repair and diagnostic notes.
struct LoadedInput {
    stat: Statistic,
    notes: serde_json::Value,
}

fn load_samples(path: &Path) -> CliResult<(SampleBlock, Option<Vec<String>>)> {
    Ok(read_samples_csv(path)?)
}

fn load_statistic(c: &RunConfig, path: &Path, kind: InputKind) -> CliResult<LoadedInput> {
    match kind {
        InputKind::Samples => {
            let (x, header) = load_samples(path)?;
            let stat = Statistic::of(&x, &c.cv_config()?)?;
            let mut notes = json!({"rows": x.n_rows(), "columns": x.n_cols(), "header": header});
            if let Statistic::Variogram(g) = &stat {
                notes["estimator"] = serde_json::to_value(c.extremes.rule().estimator_for(x.n_rows())?)
                    .unwrap_or_default();
                notes["variogram_cnd"] = json!(g.is_cnd());
                if !g.is_cnd() {
                    warn!("empirical variogram is not conditionally negative definite; passing it through");
                }
            }
            Ok(LoadedInput { stat, notes })
        }
        InputKind::Covariance => {
            let s = SymMatrix::new(read_matrix_csv(path)?)?;
            let min = sym_eig(&s)?.min();
            let repaired = min < -1e-10 * s.max_abs().max(1.0);
            let s = if repaired {
                warn!("covariance input has min eigenvalue {min:e}; using its nearest PSD matrix");
                psd_project(&s)?
            } else {
                s
            };
            Ok(LoadedInput {
                stat: Statistic::Covariance(s),
                notes: json!({"min_eigenvalue": min, "repaired_to_psd": repaired}),
            })
        }
        InputKind::Variogram => {
            let g = VariogramMatrix::new(SymMatrix::new(read_matrix_csv(path)?)?)?;
            let cnd = g.is_cnd();
            if !cnd {
                warn!("variogram input is not conditionally negative definite; passing it through");
            }
            let stat = match c.mode {
                CvMode::Hr => Statistic::Variogram(g),
                // Since Θ1 = 0, tr(Θ·(−Γ/2)) equals tr(ΘS) for the matching Laplacian covariance.
                _ => Statistic::Covariance(g.halved_negative()),
            };
            Ok(LoadedInput {
                stat,
                notes: json!({"variogram_cnd": cnd}),
            })
        }
    }
}

fn input_of(c: &RunConfig) -> CliResult<(PathBuf, InputKind)> {
    let i = c
        .input
        .as_ref()
        .ok_or_else(|| CliFailure::config("no input given (use --input or [input] path)"))?;
    Ok((i.path.clone(), i.kind))
}

#[derive(Serialize)]
struct EdgeRecord {
    i: usize,
    j: usize,
    weight: f64,
}

fn edge_list(a: &SymMatrix, tol: f64) -> Vec<EdgeRecord> {
    let thr = tol * a.max_abs().max(1.0);
    let d = a.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            if a.get(i, j).abs() > thr {
                out.push(EdgeRecord { i, j, weight: a.get(i, j) });
            }
        }
    }
    out
}

fn sign_counts(a: &SymMatrix) -> (usize, usize) {
    let d = a.dim();
    let (mut pos, mut neg) = (0, 0);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = a.get(i, j);
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            }
        }
    }
    (pos, neg)
}

fn score_label(mode: CvMode) -> &'static str {
    match mode {
        CvMode::Gaussian => "gaussian log-likelihood",
        CvMode::Hr => "surrogate Husler-Reiss log-likelihood",
        CvMode::Lcggm => "Laplacian-constrained Gaussian log-likelihood",
    }
}

fn crate_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Runs `fit`; returns the exit code (0 or 4 when the iteration limit was reached).
pub fn cmd_fit(c: &RunConfig) -> CliResult<i32> {
    let (path, kind) = input_of(c)?;
    let spec = c.penalty_spec()?;
    let loaded = load_statistic(c, &path, kind)?;
    let d = loaded.stat.dim();
    let fit = fit_statistic(c.mode, &loaded.stat, &spec, c.penalty.lambda, c.penalty.gamma, &c.admm, c.basis)?;
    let bounds = compile_penalty(&spec, d, c.penalty.lambda, c.penalty.gamma)?;
    let input = loaded.stat.solver_input();
    let penalized_objective = match c.mode {
        CvMode::Gaussian => crate::gauss_admm::latent_gaussian_objective(
            &input,
            &fit.sparse,
            &fit.low_rank,
            &bounds,
            c.penalty.lambda,
        )
        .ok(),
        _ => latent_laplacian_objective(
            &input,
            &fit.precision,
            &fit.sparse,
            &fit.low_rank,
            &bounds,
            c.penalty.lambda,
            &ones_complement_basis(d, c.basis)?,
        )
        .ok(),
    };
    let training_score = crate::select::validation_score(c.mode, &fit, &loaded.stat).ok();

    ensure_dir(&c.output)?;
    let precision_name = if c.mode == CvMode::Gaussian { "precision.csv" } else { "theta.csv" };
    write_matrix_csv(c.output.join("sparse.csv"), fit.sparse.as_matrix())?;
    write_matrix_csv(c.output.join("low_rank.csv"), fit.low_rank.as_matrix())?;
    write_matrix_csv(c.output.join(precision_name), fit.precision.as_matrix())?;
    let edges = edge_list(&fit.sparse, c.diagnostics.edge_tol);
    write_json(c.output.join("edges.json"), &edges)?;
    let (pos, neg) = sign_counts(&fit.sparse);
    let manifest = json!({
        "command": "fit",
        "version": crate_version(),
        "config": c,
        "penalty_spec": spec,
        "input": {"path": path, "kind": kind, "details": loaded.notes},
        "dimension": d,
        "result": {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "final_rel_chg": fit.final_rel_chg,
            "final_ier": fit.final_ier,
            "augmented_objective": fit.objective,
            "penalized_objective": penalized_objective,
            "training_score": training_score,
            "score_label": score_label(c.mode),
            "edges": edges.len(),
            "rank": estimate_rank(&fit.low_rank, c.diagnostics.rank_tol)?,
            "positive_offdiagonals": pos,
            "negative_offdiagonals": neg,
        },
        "files": ["sparse.csv", "low_rank.csv", precision_name, "edges.json", "manifest.json"],
    });
    write_json(c.output.join("manifest.json"), &manifest)?;
    if fit.converged {
        Ok(EXIT_OK)
    } else {
        warn!("stopped at the iteration limit ({}) without meeting the tolerances", fit.iterations);
        Ok(EXIT_DIVERGENCE)
    }
}

pub fn cmd_cv(c: &RunConfig) -> CliResult<i32> {
    let (path, kind) = input_of(c)?;
    if kind != InputKind::Samples {
        return Err(CliFailure::config("cv needs raw samples as input"));
    }
    let cv = c.cv_config()?;
    let (x, _) = load_samples(&path)?;
    let report = match c.cv.protocol {
        CvProtocol::Kfold => kfold_cv(&x, c.cv.folds, &cv, c.seed)?,
        CvProtocol::Holdout => {
            let vpath = c.cv.validation.as_ref().expect("validated");
            let (v, _) = load_samples(vpath)?;
            holdout_cv(&x, &v, &cv)?
        }
    };
    ensure_dir(&c.output)?;
    let mut cells = Vec::new();
    report.write_cells_csv(&mut cells)?;
    crate::io::write_bytes(c.output.join("cv_cells.csv"), &cells)?;
    let mut summary = Vec::new();
    report.write_summary_csv(&mut summary)?;
    crate::io::write_bytes(c.output.join("cv_summary.csv"), &summary)?;
    write_json(c.output.join("cv_summary.json"), &report.summary)?;
    let best: Vec<serde_json::Value> = (0..report.specs.len())
        .map(|s| {
            let idx = report.best_lambda_index(s);
            json!({
                "spec": report.specs[s],
                "best_lambda_index": idx,
                "best_lambda": idx.map(|i| report.lambdas[i]),
                "mean_score": idx.and_then(|i| report.summary_for(s)[i].mean_score),
            })
        })
        .collect();
    let failed = report.cells.iter().filter(|c| !c.converged || c.score.is_none()).count();
    let manifest = json!({
        "command": "cv",
        "version": crate_version(),
        "config": c,
        "input": {"path": path, "rows": x.n_rows(), "columns": x.n_cols()},
        "score_label": score_label(c.mode),
        "lambdas": report.lambdas,
        "splits": report.n_splits,
        "cells": report.cells.len(),
        "cells_without_converged_score": failed,
        "best": best,
        "files": ["cv_cells.csv", "cv_summary.csv", "cv_summary.json", "manifest.json"],
    });
    write_json(c.output.join("manifest.json"), &manifest)?;
    Ok(EXIT_OK)
}

fn write_model(dir: &Path, m: &LatentModel) -> CliResult<()> {
    write_matrix_csv(dir.join("full.csv"), m.full.as_matrix())?;
    write_matrix_csv(dir.join("sparse_true.csv"), m.sparse_true.as_matrix())?;
    write_matrix_csv(dir.join("low_rank_true.csv"), m.low_rank_true.as_matrix())?;
    write_json(
        dir.join("model.json"),
        &json!({
            "family": m.family,
            "observed": m.observed,
            "hidden": m.hidden,
            "edges_true": m.edges_true,
        }),
    )?;
    if let Some(g) = &m.variogram {
        write_matrix_csv(dir.join("variogram.csv"), g.as_sym().as_matrix())?;
    }
    Ok(())
}

pub fn cmd_simulate(cmd: &SimulateCommand) -> CliResult<i32> {
    match cmd {
        SimulateCommand::TwoCycle(a) => {
            let k_hidden = a.k_hidden.unwrap_or(a.k_diag / (2 * a.p_per_cycle) as f64);
            let m = two_cycle_gaussian(a.p_per_cycle, a.k_diag, a.k_edge, k_hidden)?;
            ensure_dir(&a.output)?;
            write_model(&a.output, &m)?;
            let mut files = vec!["full.csv", "sparse_true.csv", "low_rank_true.csv", "model.json", "samples.csv"];
            let draw = |n: usize, stream: u64| -> CliResult<SampleBlock> {
                let x = sample_gaussian(&m.full, n, derive_seed(a.seed, stream))?;
                Ok(x.select_columns(&m.observed)?)
            };
            write_samples_csv(a.output.join("samples.csv"), &draw(a.n, 1)?, None)?;
            if a.validation_n > 0 {
                write_samples_csv(a.output.join("validation.csv"), &draw(a.validation_n, 2)?, None)?;
                files.push("validation.csv");
            }
            files.push("manifest.json");
            let manifest = json!({
                "command": "simulate two-cycle",
                "version": crate_version(),
                "p_per_cycle": a.p_per_cycle,
                "k_diag": a.k_diag,
                "k_edge": a.k_edge,
                "k_hidden": k_hidden,
                "n": a.n,
                "validation_n": a.validation_n,
                "seed": a.seed,
                "sample_seed": derive_seed(a.seed, 1),
                "validation_seed": (a.validation_n > 0).then(|| derive_seed(a.seed, 2)),
                "dimension": m.full.dim(),
                "observed": m.observed.len(),
                "files": files,
            });
            write_json(a.output.join("manifest.json"), &manifest)?;
        }
        SimulateCommand::HrCycle(a) => {
            let m = latent_cycle_hr(a.p, a.hidden, derive_seed(a.seed, 0))?;
            ensure_dir(&a.output)?;
            write_model(&a.output, &m)?;
            let gamma = m.variogram.as_ref().expect("Husler-Reiss models carry a variogram");
            let mut files = vec![
                "full.csv",
                "sparse_true.csv",
                "low_rank_true.csv",
                "model.json",
                "variogram.csv",
                "samples.csv",
            ];
            write_samples_csv(a.output.join("samples.csv"), &sample_hr_pareto(gamma, a.n, derive_seed(a.seed, 1))?, None)?;
            if a.validation_n > 0 {
                let v = sample_hr_pareto(gamma, a.validation_n, derive_seed(a.seed, 2))?;
                write_samples_csv(a.output.join("validation.csv"), &v, None)?;
                files.push("validation.csv");
            }
            files.push("manifest.json");
            let manifest = json!({
                "command": "simulate hr-cycle",
                "version": crate_version(),
                "p": a.p,
                "hidden": a.hidden,
                "n": a.n,
                "validation_n": a.validation_n,
                "seed": a.seed,
                "model_seed": derive_seed(a.seed, 0),
                "sample_seed": derive_seed(a.seed, 1),
                "validation_seed": (a.validation_n > 0).then(|| derive_seed(a.seed, 2)),
                "scale": "multivariate Pareto, exponential margins",
                "files": files,
            });
            write_json(a.output.join("manifest.json"), &manifest)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_variogram(a: &VariogramArgs) -> CliResult<i32> {
    let (x, _) = load_samples(&a.input)?;
    let estimator = match parse_estimator(&a.estimator)? {
        EstimatorChoice::Rank => {
            crate::select::ExceedanceRule::Quantile { a: a.quantile }.estimator_for(x.n_rows())?
        }
        EstimatorChoice::Pareto => VariogramEstimator::ParetoScale { threshold: a.threshold },
    };
    let g = estimate_variogram(&x, &estimator)?;
    let cnd = g.is_cnd();
    if !cnd {
        warn!("estimated variogram is not conditionally negative definite");
    }
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_matrix_csv(&a.output, g.as_sym().as_matrix())?;
    let manifest_path = a.output.with_extension("manifest.json");
    write_json(
        &manifest_path,
        &json!({
            "command": "variogram",
            "version": crate_version(),
            "input": a.input,
            "rows": x.n_rows(),
            "columns": x.n_cols(),
            "estimator": estimator,
            "conditionally_negative_definite": cnd,
            "output": a.output,
        }),
    )?;
    Ok(EXIT_OK)
}

const PRESET_TAGS: &[(&str, &str)] = &[
    ("lasso", "L = -lambda*gamma, U = lambda*gamma"),
    ("asymmetric", "lasso scaled entrywise by a weight matrix"),
    ("positive_lasso", "L = 0, U = lambda*gamma"),
    ("mtp2", "L = 0, U = inf (aliases: emtp2, laplacian)"),
    ("sparse_positive", "L = -lambda*gamma, U = inf (aliases: lasso_mtp2, lasso_emtp2)"),
    ("zero_pattern:<base>", "base preset with listed pairs pinned to zero"),
    ("custom", "explicit lower/upper CSV matrices (config file only)"),
];

/// Renders the compiled bounds of a preset; returns the text written to stdout.
pub fn cmd_presets(a: &PresetArgs) -> CliResult<String> {
    if a.list {
        return Ok(PRESET_TAGS
            .iter()
            .map(|(t, d)| format!("{t:<22}{d}\n"))
            .collect());
    }
    let kind = parse_with(&a.penalty)?;
    let mut spec = PenaltySpec::new(kind);
    if let Some(e) = &a.zero_edges {
        spec.zero_edges = parse_edges(e)?;
    }
    spec.validate()?;
    let b = compile_penalty(&spec, a.dim, a.lambda, a.gamma)?;
    match a.format.as_str() {
        "csv" => Ok(format!(
            "# lower\n{}# upper\n{}",
            crate::io::matrix_to_csv(b.lower()),
            crate::io::matrix_to_csv(b.upper())
        )),
        "json" => {
            let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<serde_json::Value>> {
                m.row_iter()
                    .map(|r| {
                        r.iter()
                            .map(|&v| if v.is_finite() { json!(v) } else { json!(format!("{v}")) })
                            .collect()
                    })
                    .collect()
            };
            Ok(to_json_string(&json!({
                "penalty": spec.kind.tag(),
                "dim": a.dim,
                "lambda": a.lambda,
                "gamma": a.gamma,
                "lower": rows(b.lower()),
                "upper": rows(b.upper()),
            }))?)
        }
        other => Err(CliFailure::config(format!("unknown format '{other}'"))),
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Fit(a) => resolve_config(a).and_then(|c| cmd_fit(&c)),
        Command::Cv(a) => resolve_config(a).and_then(|c| cmd_cv(&c)),
        Command::Simulate(s) => cmd_simulate(s),
        Command::Variogram(a) => cmd_variogram(a),
        Command::Presets(a) => cmd_presets(a).map(|text| {
            print!("{text}");
            EXIT_OK
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
