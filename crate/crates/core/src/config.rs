//! Run configuration for the command-line tool.
//!
//! A TOML file with sections `[input]`, `[penalty]`, `[grid]`, `[admm]`, `[cv]` and
//! `[extremes]`. Every field has a default so a config may be built from flags alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_admm::AdmmParams;
use crate::io::read_matrix_csv;
use crate::matcore::BasisFlavor;
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::select::{CvConfig, CvMode, ExceedanceRule, GridSpec, DEFAULT_EDGE_TOL, DEFAULT_RANK_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Samples,
    Covariance,
    Variogram,
}

impl std::str::FromStr for InputKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "samples" => Ok(Self::Samples),
            "covariance" | "cov" => Ok(Self::Covariance),
            "variogram" => Ok(Self::Variogram),
            other => Err(Error::InvalidArgument(format!("unknown input kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
    #[serde(default = "default_input_kind")]
    pub kind: InputKind,
}

fn default_input_kind() -> InputKind {
    InputKind::Samples
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySection {
    /// Preset tag, e.g. `lasso`, `mtp2`, `zero_pattern:lasso`, or `custom`.
    pub kind: String,
    pub gamma: f64,
    /// Trace penalty used by `fit`.
    pub lambda: f64,
    pub zero_edges: Vec<(usize, usize)>,
    /// CSV of nonnegative weights for `asymmetric`.
    pub weights: Option<PathBuf>,
    /// CSV bound matrices for `custom`.
    pub lower: Option<PathBuf>,
    pub upper: Option<PathBuf>,
}

impl Default for PenaltySection {
    fn default() -> Self {
        Self {
            kind: "lasso".into(),
            gamma: 0.5,
            lambda: 0.1,
            zero_edges: Vec::new(),
            weights: None,
            lower: None,
            upper: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvProtocol {
    Kfold,
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub protocol: CvProtocol,
    pub folds: usize,
    /// Validation sample file for the holdout protocol.
    pub validation: Option<PathBuf>,
    /// Penalty tags compared in one sweep; defaults to the `[penalty]` kind.
    pub specs: Vec<String>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            protocol: CvProtocol::Kfold,
            folds: 5,
            validation: None,
            specs: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    /// Rank transform with `k = ⌈(1−a)n⌉`.
    Rank,
    /// Rows already on the Pareto scale.
    Pareto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtremesSection {
    pub estimator: EstimatorChoice,
    /// Quantile level `a` of the rank estimator.
    pub quantile: f64,
    /// Exceedance threshold of the Pareto-scale estimator.
    pub threshold: f64,
}

impl Default for ExtremesSection {
    fn default() -> Self {
        Self {
            estimator: EstimatorChoice::Rank,
            quantile: 0.95,
            threshold: 0.0,
        }
    }
}

impl ExtremesSection {
    pub fn rule(&self) -> ExceedanceRule {
        match self.estimator {
            EstimatorChoice::Rank => ExceedanceRule::Quantile { a: self.quantile },
            EstimatorChoice::Pareto => ExceedanceRule::ParetoScale {
                threshold: self.threshold,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub edge_tol: f64,
    pub rank_tol: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            edge_tol: DEFAULT_EDGE_TOL,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: CvMode,
    pub seed: u64,
    pub output: PathBuf,
    pub basis: BasisFlavor,
    pub input: Option<InputSection>,
    pub penalty: PenaltySection,
    pub grid: GridSpec,
    pub admm: AdmmParams,
    pub cv: CvSection,
    pub extremes: ExtremesSection,
    pub diagnostics: DiagnosticsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: CvMode::Gaussian,
            seed: 0,
            output: PathBuf::from("out"),
            basis: BasisFlavor::default(),
            input: None,
            penalty: PenaltySection::default(),
            grid: GridSpec::log(1e-8, 1.0, 20, 0.5),
            admm: AdmmParams::default(),
            cv: CvSection::default(),
            extremes: ExtremesSection::default(),
            diagnostics: DiagnosticsSection::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Checks mode/input consistency and the numeric sections.
    pub fn validate(&self) -> Result<()> {
        if let Some(input) = &self.input {
            match (self.mode, input.kind) {
                (CvMode::Gaussian, InputKind::Variogram) => {
                    return Err(config_err("variogram input requires mode hr or lcggm"))
                }
                (CvMode::Hr, InputKind::Covariance) => {
                    return Err(config_err("covariance input requires mode gaussian or lcggm"))
                }
                _ => {}
            }
        }
        self.admm.validate()?;
        self.grid.validate()?;
        if !(self.penalty.lambda >= 0.0) || !self.penalty.lambda.is_finite() {
            return Err(config_err(format!("penalty.lambda must be >= 0, got {}", self.penalty.lambda)));
        }
        if !(self.penalty.gamma >= 0.0) || !self.penalty.gamma.is_finite() {
            return Err(config_err(format!("penalty.gamma must be >= 0, got {}", self.penalty.gamma)));
        }
        if !(0.0..1.0).contains(&self.extremes.quantile) {
            return Err(config_err(format!(
                "extremes.quantile must lie in [0, 1), got {}",
                self.extremes.quantile
            )));
        }
        if self.cv.protocol == CvProtocol::Holdout && self.cv.validation.is_none() {
            return Err(config_err("holdout protocol needs cv.validation"));
        }
        Ok(())
    }

    /// Resolves a penalty tag against the `[penalty]` section (edges, weights, bound files).
    pub fn penalty_spec_for(&self, tag: &str) -> Result<PenaltySpec> {
        let sec = &self.penalty;
        let kind = if tag.trim().eq_ignore_ascii_case("custom") {
            let (lo, up) = match (&sec.lower, &sec.upper) {
                (Some(l), Some(u)) => (l, u),
                _ => return Err(config_err("custom penalty needs penalty.lower and penalty.upper")),
            };
            let rows = |p: &Path| -> Result<Vec<Vec<f64>>> {
                let m = read_matrix_csv(p)?;
                Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
            };
            PenaltyKind::Custom {
                lower: rows(lo)?,
                upper: rows(up)?,
            }
        } else {
            tag.parse()?
        };
        let zero_edges = match kind {
            PenaltyKind::ZeroPattern(_) | PenaltyKind::Custom { .. } => sec.zero_edges.clone(),
            _ => Vec::new(),
        };
        let weights = match (&kind, &sec.weights) {
            (PenaltyKind::Asymmetric, Some(p)) => {
                let m = read_matrix_csv(p)?;
                Some(m.row_iter().map(|r| r.iter().copied().collect()).collect())
            }
            _ => None,
        };
        let spec = PenaltySpec {
            kind,
            zero_edges,
            weights,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn penalty_spec(&self) -> Result<PenaltySpec> {
        self.penalty_spec_for(&self.penalty.kind)
    }

    /// Specs compared by `cv`, in declaration order.
    pub fn cv_specs(&self) -> Result<Vec<PenaltySpec>> {
        if self.cv.specs.is_empty() {
            return Ok(vec![self.penalty_spec()?]);
        }
        self.cv.specs.iter().map(|t| self.penalty_spec_for(t)).collect()
    }

    pub fn cv_config(&self) -> Result<CvConfig> {
        let mut c = CvConfig::new(self.mode, self.cv_specs()?, self.grid.clone(), self.admm.clone());
        c.exceedance = self.extremes.rule();
        c.basis = self.basis;
        c.edge_tol = self.diagnostics.edge_tol;
        c.rank_tol = self.diagnostics.rank_tol;
        Ok(c)
    }
}
