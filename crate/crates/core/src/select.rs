//! Model selection: λ grids, cross-validation and structure read-outs.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremes::{estimate_variogram, SampleBlock, VariogramEstimator, VariogramMatrix};
use crate::gauss_admm::{gaussian_loglik, solve_latent_gaussian, AdmmParams, TRACE_PENALTY_FLOOR};
use crate::lap_admm::{lcggm_loglik, solve_latent_laplacian, surrogate_loglik};
use crate::matcore::{ones_complement_basis, sym_eig, BasisFlavor, SymMatrix};
use crate::penalty::{compile_penalty, PenaltySpec};
use crate::simgen::gram_cov;

/// Relative threshold for reading edges off `Â`.
pub const DEFAULT_EDGE_TOL: f64 = 1e-4;
/// Relative threshold for reading the rank off `B̂`.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Log,
    Linear,
}

/// Trace-penalty grid plus the fixed Golazo scale `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: GridScale,
    pub gamma: f64,
}

impl GridSpec {
    pub fn log(lambda_min: f64, lambda_max: f64, count: usize, gamma: f64) -> Self {
        Self {
            lambda_min,
            lambda_max,
            count,
            scale: GridScale::Log,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.lambda_min > 0.0) || !self.lambda_max.is_finite() || self.lambda_min > self.lambda_max {
            return bad(format!(
                "grid needs 0 < lambda_min <= lambda_max, got [{}, {}]",
                self.lambda_min, self.lambda_max
            ));
        }
        if self.count == 0 {
            return bad("grid count must be positive".into());
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be a nonnegative number, got {}", self.gamma));
        }
        Ok(())
    }
}

pub fn lambda_grid(spec: &GridSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (lo, hi, n) = (spec.lambda_min, spec.lambda_max, spec.count);
    if n == 1 {
        return Ok(vec![lo.max(TRACE_PENALTY_FLOOR)]);
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    let grid = (0..n).map(|i| {
        let v = if i == 0 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            match spec.scale {
                GridScale::Log => (lo.ln() + step(i) * (hi.ln() - lo.ln())).exp(),
                GridScale::Linear => lo + step(i) * (hi - lo),
            }
        };
        v.max(TRACE_PENALTY_FLOOR)
    });
    Ok(grid.collect())
}

/// `#{i < j : |A_ij| > tol·max(1, max|A|)}`.
pub fn count_edges(a: &SymMatrix, tol: f64) -> usize {
    let thr = tol * a.max_abs().max(1.0);
    let d = a.dim();
    (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .filter(|&(i, j)| a.get(i, j).abs() > thr)
        .count()
}

/// Number of eigenvalues of `B` above `tol·max(1, ‖B‖₂)`.
pub fn estimate_rank(b: &SymMatrix, tol: f64) -> Result<usize> {
    let e = sym_eig(b)?;
    let norm = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = tol * norm.max(1.0);
    Ok(e.values.iter().filter(|&&v| v > thr).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvMode {
    /// Latent Gaussian model on sample covariances.
    Gaussian,
    /// Hüsler–Reiss surrogate on empirical variograms.
    Hr,
    /// Laplacian-constrained Gaussian model on sample covariances.
    Lcggm,
}

impl std::str::FromStr for CvMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "ggm" => Ok(Self::Gaussian),
            "hr" | "husler-reiss" | "huslerreiss" => Ok(Self::Hr),
            "lcggm" => Ok(Self::Lcggm),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}'"))),
        }
    }
}

/// Rule for the exceedance set used by the variogram estimate of each data block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExceedanceRule {
    /// Rank-based estimator with `k = ⌈(1 − a)·n⌉`.
    Quantile { a: f64 },
    /// Data already on the Pareto scale.
    ParetoScale { threshold: f64 },
}

impl Default for ExceedanceRule {
    fn default() -> Self {
        Self::Quantile { a: 0.95 }
    }
}

impl ExceedanceRule {
    pub fn estimator_for(&self, n: usize) -> Result<VariogramEstimator> {
        match *self {
            Self::Quantile { a } => {
                if !(0.0..1.0).contains(&a) {
                    return Err(Error::InvalidArgument(format!("quantile level must lie in [0, 1), got {a}")));
                }
                let k = ((1.0 - a) * n as f64 - 1e-9).ceil().max(0.0) as usize;
                Ok(VariogramEstimator::Ranked { k: k.min(n) })
            }
            Self::ParetoScale { threshold } => Ok(VariogramEstimator::ParetoScale { threshold }),
        }
    }

    pub fn estimate(&self, x: &SampleBlock) -> Result<VariogramMatrix> {
        estimate_variogram(x, &self.estimator_for(x.n_rows())?)
    }
}

/// Everything a CV sweep needs except the data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvConfig {
    pub mode: CvMode,
    pub specs: Vec<PenaltySpec>,
    pub grid: GridSpec,
    pub params: AdmmParams,
    #[serde(default)]
    pub exceedance: ExceedanceRule,
    #[serde(default)]
    pub basis: BasisFlavor,
    pub edge_tol: f64,
    pub rank_tol: f64,
}

impl CvConfig {
    pub fn new(mode: CvMode, specs: Vec<PenaltySpec>, grid: GridSpec, params: AdmmParams) -> Self {
        Self {
            mode,
            specs,
            grid,
            params,
            exceedance: ExceedanceRule::default(),
            basis: BasisFlavor::default(),
            edge_tol: DEFAULT_EDGE_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Summary statistic of one data block: a covariance or a variogram.
#[derive(Clone, Debug)]
pub enum Statistic {
    Covariance(SymMatrix),
    Variogram(VariogramMatrix),
}

impl Statistic {
    pub fn of(x: &SampleBlock, config: &CvConfig) -> Result<Self> {
        match config.mode {
            CvMode::Gaussian | CvMode::Lcggm => Ok(Self::Covariance(gram_cov(x)?)),
            CvMode::Hr => Ok(Self::Variogram(config.exceedance.estimate(x)?)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Covariance(s) => s.dim(),
            Self::Variogram(g) => g.dim(),
        }
    }

    /// Matrix handed to the solver: `S` or `−Γ/2`.
    pub fn solver_input(&self) -> SymMatrix {
        match self {
            Self::Covariance(s) => s.clone(),
            Self::Variogram(g) => g.halved_negative(),
        }
    }
}

/// Fit of one (spec, λ) pair on one training statistic.
#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    /// `M̂` (Gaussian) or `Θ̂` (Laplacian modes).
    pub precision: SymMatrix,
    pub sparse: SymMatrix,
    pub low_rank: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_chg: f64,
    pub final_ier: f64,
    pub objective: f64,
}

/// Runs the solver matching `mode` on a training statistic.
pub fn fit_statistic(
    mode: CvMode,
    stat: &Statistic,
    spec: &PenaltySpec,
    lambda: f64,
    gamma: f64,
    params: &AdmmParams,
    basis: BasisFlavor,
) -> Result<FitSummary> {
    let d = stat.dim();
    let bounds = compile_penalty(spec, d, lambda, gamma)?;
    let params = params.clone().with_trace_penalty(lambda);
    let input = stat.solver_input();
    match mode {
        CvMode::Gaussian => {
            let r = solve_latent_gaussian(&input, &bounds, &params)?;
            Ok(FitSummary {
                objective: r.objective_trace.last().copied().unwrap_or(f64::NAN),
                final_rel_chg: r.final_rel_chg(),
                final_ier: r.final_ier(),
                precision: r.precision,
                sparse: r.sparse,
                low_rank: r.low_rank,
                iterations: r.iterations,
                converged: r.converged,
            })
        }
        CvMode::Hr | CvMode::Lcggm => {
            let basis = ones_complement_basis(d, basis)?;
            let r = solve_latent_laplacian(&input, &bounds, &params, &basis)?;
            Ok(FitSummary {
                objective: r.objective_trace.last().copied().unwrap_or(f64::NAN),
                final_rel_chg: r.final_rel_chg(),
                final_ier: r.final_ier(),
                precision: r.theta,
                sparse: r.sparse,
                low_rank: r.low_rank,
                iterations: r.iterations,
                converged: r.converged,
            })
        }
    }
}

/// Validation score of a fit on a held-out statistic.
pub fn validation_score(mode: CvMode, fit: &FitSummary, val: &Statistic) -> Result<f64> {
    match (mode, val) {
        (CvMode::Gaussian, Statistic::Covariance(s)) => gaussian_loglik(&(&fit.sparse - &fit.low_rank), s),
        (CvMode::Lcggm, Statistic::Covariance(s)) => lcggm_loglik(&fit.precision, s),
        (CvMode::Hr, Statistic::Variogram(g)) => surrogate_loglik(&fit.precision, g),
        _ => Err(Error::InvalidArgument("statistic does not match mode".into())),
    }
}

/// One (spec, λ, split) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub spec_index: usize,
    pub spec: String,
    pub lambda_index: usize,
    pub lambda: f64,
    pub split: usize,
    pub score: Option<f64>,
    pub edges: Option<usize>,
    pub rank: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Per-(spec, λ) means over converged cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSummaryRow {
    pub spec_index: usize,
    pub spec: String,
    pub lambda_index: usize,
    pub lambda: f64,
    pub mean_score: Option<f64>,
    pub mean_edges: Option<f64>,
    pub mean_rank: Option<f64>,
    pub n_converged: usize,
    pub n_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvReport {
    pub mode: CvMode,
    pub lambdas: Vec<f64>,
    pub specs: Vec<String>,
    pub n_splits: usize,
    pub cells: Vec<CvCell>,
    pub summary: Vec<CvSummaryRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl CvReport {
    fn from_cells(mode: CvMode, lambdas: Vec<f64>, specs: Vec<String>, n_splits: usize, cells: Vec<CvCell>) -> Self {
        let mut summary = Vec::with_capacity(specs.len() * lambdas.len());
        for (si, name) in specs.iter().enumerate() {
            for (li, &lambda) in lambdas.iter().enumerate() {
                let group: Vec<&CvCell> = cells
                    .iter()
                    .filter(|c| c.spec_index == si && c.lambda_index == li)
                    .collect();
                let ok: Vec<&&CvCell> = group.iter().filter(|c| c.converged && c.score.is_some()).collect();
                summary.push(CvSummaryRow {
                    spec_index: si,
                    spec: name.clone(),
                    lambda_index: li,
                    lambda,
                    mean_score: mean(ok.iter().filter_map(|c| c.score)),
                    mean_edges: mean(ok.iter().filter_map(|c| c.edges.map(|e| e as f64))),
                    mean_rank: mean(ok.iter().filter_map(|c| c.rank.map(|r| r as f64))),
                    n_converged: ok.len(),
                    n_cells: group.len(),
                });
            }
        }
        Self {
            mode,
            lambdas,
            specs,
            n_splits,
            cells,
            summary,
        }
    }

    /// Concatenates reports over repeated trials; splits are renumbered consecutively.
    pub fn combine(reports: &[CvReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InvalidArgument("no reports to combine".into()))?;
        let mut cells = Vec::new();
        let mut offset = 0;
        for r in reports {
            if r.mode != first.mode || r.lambdas != first.lambdas || r.specs != first.specs {
                return Err(Error::InvalidArgument("reports cover different sweeps".into()));
            }
            cells.extend(r.cells.iter().cloned().map(|mut c| {
                c.split += offset;
                c
            }));
            offset += r.n_splits;
        }
        Ok(Self::from_cells(first.mode, first.lambdas.clone(), first.specs.clone(), offset, cells))
    }

    pub fn summary_for(&self, spec_index: usize) -> Vec<&CvSummaryRow> {
        self.summary.iter().filter(|r| r.spec_index == spec_index).collect()
    }

    /// Grid index with the largest mean validation score for a spec.
    pub fn best_lambda_index(&self, spec_index: usize) -> Option<usize> {
        self.summary_for(spec_index)
            .into_iter()
            .filter_map(|r| r.mean_score.map(|s| (r.lambda_index, s)))
            .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((i, s)),
            })
            .map(|(i, _)| i)
    }

    pub fn write_cells_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(w, &self.cells)
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        write_csv(w, &self.summary)
    }
}

fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let to_err = |e: csv::Error| Error::Parse {
        path: "<csv output>".into(),
        message: e.to_string(),
    };
    for r in rows {
        wr.serialize(r).map_err(to_err)?;
    }
    wr.flush().map_err(|e| Error::Io {
        path: "<csv output>".into(),
        source: e,
    })
}

/// Seeded partition of `0..n` into `folds` nearly equal groups.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!("{n} rows cannot fill {folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, idx) in order.into_iter().enumerate() {
        out[pos * folds / n].push(idx);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn run_splits(splits: Vec<(std::result::Result<Statistic, String>, std::result::Result<Statistic, String>)>, config: &CvConfig) -> Result<CvReport> {
    config.grid.validate()?;
    config.params.validate()?;
    if config.specs.is_empty() {
        return Err(Error::InvalidArgument("no penalty specs given".into()));
    }
    for s in &config.specs {
        s.validate()?;
    }
    let lambdas = lambda_grid(&config.grid)?;
    let names: Vec<String> = config.specs.iter().map(|s| s.kind.tag()).collect();
    let n_splits = splits.len();
    let n_lambda = lambdas.len();
    let jobs: Vec<(usize, usize, usize)> = (0..n_splits)
        .flat_map(|f| (0..config.specs.len()).flat_map(move |s| (0..n_lambda).map(move |l| (s, l, f))))
        .collect();
    let cells: Vec<CvCell> = jobs
        .par_iter()
        .map(|&(si, li, f)| {
            let lambda = lambdas[li];
            let mut cell = CvCell {
                spec_index: si,
                spec: names[si].clone(),
                lambda_index: li,
                lambda,
                split: f,
                score: None,
                edges: None,
                rank: None,
                iterations: 0,
                converged: false,
                error: None,
            };
            let (train, val) = &splits[f];
            let (train, val) = match (train, val) {
                (Ok(t), Ok(v)) => (t, v),
                (Err(e), _) | (_, Err(e)) => {
                    cell.error = Some(e.clone());
                    return cell;
                }
            };
            let fit = fit_statistic(
                config.mode,
                train,
                &config.specs[si],
                lambda,
                config.grid.gamma,
                &config.params,
                config.basis,
            );
            match fit {
                Err(e) => cell.error = Some(e.to_string()),
                Ok(fit) => {
                    cell.iterations = fit.iterations;
                    cell.converged = fit.converged;
                    cell.edges = Some(count_edges(&fit.sparse, config.edge_tol));
                    cell.rank = estimate_rank(&fit.low_rank, config.rank_tol).ok();
                    match validation_score(config.mode, &fit, val) {
                        Ok(s) if s.is_finite() => cell.score = Some(s),
                        Ok(s) => cell.error = Some(format!("non-finite validation score {s}")),
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                }
            }
            cell
        })
        .collect();
    let mut cells = cells;
    cells.sort_by_key(|c| (c.spec_index, c.lambda_index, c.split));
    Ok(CvReport::from_cells(config.mode, lambdas, names, n_splits, cells))
}

fn statistic_or_message(x: std::result::Result<SampleBlock, Error>, config: &CvConfig) -> std::result::Result<Statistic, String> {
    x.and_then(|b| Statistic::of(&b, config)).map_err(|e| e.to_string())
}

/// `folds`-fold cross-validation; statistics are recomputed from the raw rows of every fold.
pub fn kfold_cv(data: &SampleBlock, folds: usize, config: &CvConfig, seed: u64) -> Result<CvReport> {
    let parts = fold_assignment(data.n_rows(), folds, seed)?;
    let splits = (0..folds)
        .map(|f| {
            let train_rows: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            let mut train_rows = train_rows;
            train_rows.sort_unstable();
            (
                statistic_or_message(data.select_rows(&train_rows), config),
                statistic_or_message(data.select_rows(&parts[f]), config),
            )
        })
        .collect();
    run_splits(splits, config)
}

/// Single train/validation split.
pub fn holdout_cv(train: &SampleBlock, validation: &SampleBlock, config: &CvConfig) -> Result<CvReport> {
    if train.n_cols() != validation.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: train.n_cols(),
            got: validation.n_cols(),
        });
    }
    run_splits(
        vec![(
            statistic_or_message(Ok(train.clone()), config),
            statistic_or_message(Ok(validation.clone()), config),
        )],
        config,
    )
}
