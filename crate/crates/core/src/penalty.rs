//! The Golazo penalty `‖K‖_LU = Σ_ij max{L_ij K_ij, U_ij K_ij}` with `L ≤ 0 ≤ U`.
//!
//! Bounds may be infinite. An infinite upper bound forbids positive entries,
//! an infinite lower bound forbids negative ones, and both together pin the
//! entry to zero. Infinities are stored as IEEE infinities so the proximal
//! clamp is exact.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SymMatrix;

/// Lower and upper bound matrices of a Golazo penalty.
#[derive(Clone, Debug, PartialEq)]
pub struct GolazoBounds {
    lower: DMatrix<f64>,
    upper: DMatrix<f64>,
}

impl GolazoBounds {
    pub fn new(lower: DMatrix<f64>, upper: DMatrix<f64>) -> Result<Self> {
        let d = lower.nrows();
        if !lower.is_square() || upper.shape() != lower.shape() || d == 0 {
            return Err(Error::InvalidBounds(format!(
                "bound matrices must be square and of equal size, got {:?} and {:?}",
                lower.shape(),
                upper.shape()
            )));
        }
        for i in 0..d {
            for j in 0..d {
                let (l, u) = (lower[(i, j)], upper[(i, j)]);
                if l.is_nan() || u.is_nan() || !(l <= 0.0) || !(u >= 0.0) {
                    return Err(Error::InvalidBounds(format!(
                        "need L <= 0 <= U, got L[{i},{j}] = {l}, U[{i},{j}] = {u}"
                    )));
                }
                if l != lower[(j, i)] || u != upper[(j, i)] {
                    return Err(Error::InvalidBounds(format!(
                        "bounds are not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { lower, upper })
    }

    /// Off-diagonal bounds `(l, u)` everywhere, diagonal unpenalized.
    pub fn uniform(dim: usize, l: f64, u: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0 } else { l }),
            DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0 } else { u }),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DMatrix<f64> {
        &self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        (self.lower[(i, j)], self.upper[(i, j)])
    }

    /// Replaces the diagonal bounds; the default leaves the diagonal unpenalized.
    pub fn with_diagonal(mut self, l: f64, u: f64) -> Result<Self> {
        for i in 0..self.dim() {
            self.lower[(i, i)] = l;
            self.upper[(i, i)] = u;
        }
        Self::new(self.lower, self.upper)
    }

    /// Pins the listed entries (and their mirrors) to zero.
    pub fn with_zero_edges(mut self, edges: &[(usize, usize)]) -> Result<Self> {
        let d = self.dim();
        for &(i, j) in edges {
            if i >= d || j >= d {
                return Err(Error::InvalidPenalty(format!(
                    "edge ({i},{j}) out of range for dimension {d}"
                )));
            }
            for (a, b) in [(i, j), (j, i)] {
                self.lower[(a, b)] = f64::NEG_INFINITY;
                self.upper[(a, b)] = f64::INFINITY;
            }
        }
        Ok(self)
    }
}

/// Contribution of one entry, `max{l·k, u·k}` with `0·(±∞) = 0`.
pub fn golazo_term(k: f64, l: f64, u: f64) -> f64 {
    if k > 0.0 {
        u * k
    } else if k < 0.0 {
        l * k
    } else {
        0.0
    }
}

/// `‖K‖_LU` summed over all ordered pairs, including the diagonal. Returns `+∞` when `K`
/// violates an infinite bound.
pub fn golazo_value(k: &SymMatrix, bounds: &GolazoBounds) -> Result<f64> {
    check_dim(k.dim(), bounds.dim())?;
    let d = k.dim();
    let mut total = 0.0;
    for j in 0..d {
        for i in 0..d {
            let (l, u) = bounds.get(i, j);
            total += golazo_term(k.get(i, j), l, u);
        }
    }
    Ok(total)
}

/// Scalar proximal map `argmin_x t·max{l x, u x} + ½(x − z)²`.
#[inline]
pub fn golazo_prox_scalar(z: f64, l: f64, u: f64, t: f64) -> f64 {
    let below = if l == f64::NEG_INFINITY {
        0.0
    } else {
        (z - t * l).min(0.0)
    };
    let above = if u == f64::INFINITY {
        0.0
    } else {
        (z - t * u).max(0.0)
    };
    below + above
}

/// Entrywise proximal operator of `t·‖·‖_LU`.
pub fn golazo_prox(z: &SymMatrix, bounds: &GolazoBounds, t: f64) -> Result<SymMatrix> {
    check_dim(z.dim(), bounds.dim())?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidStep(t));
    }
    let d = z.dim();
    let m = DMatrix::from_fn(d, d, |i, j| {
        let (l, u) = bounds.get(i, j);
        golazo_prox_scalar(z.get(i, j), l, u, t)
    });
    // Z, L and U are symmetric, so the entrywise map is too.
    Ok(SymMatrix::symmetrized(m))
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Constraint presets from which bound matrices are compiled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PenaltyKind {
    /// `L = −λγ`, `U = λγ`.
    Lasso,
    /// Adaptive lasso: `L = −λγ·w`, `U = λγ·w`.
    Asymmetric,
    /// Penalize positive entries only: `L = 0`, `U = λγ`.
    PositiveLasso,
    /// Nonpositive off-diagonals: `L = 0`, `U = +∞` (MTP₂ / EMTP₂).
    Mtp2,
    /// Nonpositive off-diagonals plus sparsity: `L = −λγ`, `U = +∞`.
    SparsePositive,
    /// A base preset with selected entries pinned to zero.
    ZeroPattern(Box<PenaltyKind>),
    /// Explicit bound matrices, used as given.
    Custom { lower: Vec<Vec<f64>>, upper: Vec<Vec<f64>> },
}

impl PenaltyKind {
    pub fn tag(&self) -> String {
        match self {
            PenaltyKind::Lasso => "lasso".into(),
            PenaltyKind::Asymmetric => "asymmetric".into(),
            PenaltyKind::PositiveLasso => "positive_lasso".into(),
            PenaltyKind::Mtp2 => "mtp2".into(),
            PenaltyKind::SparsePositive => "sparse_positive".into(),
            PenaltyKind::ZeroPattern(base) => format!("zero_pattern:{}", base.tag()),
            PenaltyKind::Custom { .. } => "custom".into(),
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    /// Parses tags such as `lasso`, `emtp2`, or `zero_pattern:mtp2`. `custom` needs bound
    /// matrices and cannot be parsed from a tag alone.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(base) = s.strip_prefix("zero_pattern") {
            let base = base.strip_prefix(':').unwrap_or("lasso");
            let base = if base.is_empty() { "lasso" } else { base };
            let base: PenaltyKind = base.parse()?;
            if matches!(base, PenaltyKind::ZeroPattern(_)) {
                return Err(Error::InvalidPenalty("nested zero_pattern".into()));
            }
            return Ok(PenaltyKind::ZeroPattern(Box::new(base)));
        }
        match s.as_str() {
            "lasso" | "l1" => Ok(PenaltyKind::Lasso),
            "asymmetric" | "adaptive" => Ok(PenaltyKind::Asymmetric),
            "positive_lasso" => Ok(PenaltyKind::PositiveLasso),
            "mtp2" | "emtp2" | "laplacian" => Ok(PenaltyKind::Mtp2),
            "sparse_positive" | "lasso_mtp2" | "lasso_emtp2" => Ok(PenaltyKind::SparsePositive),
            "custom" => Err(Error::InvalidPenalty(
                "custom penalties need explicit lower/upper matrices".into(),
            )),
            other => Err(Error::InvalidPenalty(format!("unknown penalty kind `{other}`"))),
        }
    }
}

/// Declarative description of a penalty, compiled into bounds for a given `(λ, γ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    #[serde(default)]
    pub zero_edges: Vec<(usize, usize)>,
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind) -> Self {
        Self {
            kind,
            zero_edges: Vec::new(),
            weights: None,
        }
    }

    pub fn zero_pattern(base: PenaltyKind, edges: Vec<(usize, usize)>) -> Self {
        Self {
            kind: PenaltyKind::ZeroPattern(Box::new(base)),
            zero_edges: edges,
            weights: None,
        }
    }

    pub fn asymmetric(weights: Vec<Vec<f64>>) -> Self {
        Self {
            kind: PenaltyKind::Asymmetric,
            zero_edges: Vec::new(),
            weights: Some(weights),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let allows_edges = matches!(
            self.kind,
            PenaltyKind::ZeroPattern(_) | PenaltyKind::Custom { .. }
        );
        if !self.zero_edges.is_empty() && !allows_edges {
            return Err(Error::InvalidPenalty(format!(
                "zero_edges are only valid with zero_pattern or custom, not {}",
                self.kind
            )));
        }
        if self.weights.is_some() && self.kind != PenaltyKind::Asymmetric {
            return Err(Error::InvalidPenalty(format!(
                "weights are only valid with asymmetric, not {}",
                self.kind
            )));
        }
        Ok(())
    }
}

/// All pairs `(i, j)`, `i < j`, whose endpoints lie in different groups.
pub fn cross_group_edges(groups: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for (a, ga) in groups.iter().enumerate() {
        for gb in &groups[a + 1..] {
            for &i in ga {
                for &j in gb {
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Builds the bound matrices for `spec` at penalty level `λ·γ`. The diagonal is left at zero.
pub fn compile_penalty(spec: &PenaltySpec, dim: usize, lambda: f64, gamma: f64) -> Result<GolazoBounds> {
    spec.validate()?;
    if !(lambda >= 0.0) || !(gamma >= 0.0) || !lambda.is_finite() || !gamma.is_finite() {
        return Err(Error::InvalidPenalty(format!(
            "lambda and gamma must be finite and nonnegative, got {lambda}, {gamma}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidDimension("penalty dimension must be positive".into()));
    }
    let bounds = compile_kind(&spec.kind, spec.weights.as_deref(), dim, lambda * gamma)?;
    if spec.zero_edges.is_empty() {
        Ok(bounds)
    } else {
        bounds.with_zero_edges(&spec.zero_edges)
    }
}

fn compile_kind(
    kind: &PenaltyKind,
    weights: Option<&[Vec<f64>]>,
    dim: usize,
    level: f64,
) -> Result<GolazoBounds> {
    match kind {
        PenaltyKind::Lasso => GolazoBounds::uniform(dim, -level, level),
        PenaltyKind::PositiveLasso => GolazoBounds::uniform(dim, 0.0, level),
        PenaltyKind::Mtp2 => GolazoBounds::uniform(dim, 0.0, f64::INFINITY),
        PenaltyKind::SparsePositive => GolazoBounds::uniform(dim, -level, f64::INFINITY),
        PenaltyKind::Asymmetric => {
            let w = match weights {
                Some(w) => {
                    if w.len() != dim || w.iter().any(|r| r.len() != dim) {
                        return Err(Error::InvalidPenalty(format!(
                            "weights must be {dim}x{dim}"
                        )));
                    }
                    DMatrix::from_fn(dim, dim, |i, j| w[i][j])
                }
                None => DMatrix::from_element(dim, dim, 1.0),
            };
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidPenalty("weights must be finite and nonnegative".into()));
            }
            if w != w.transpose() {
                return Err(Error::InvalidPenalty("weights must be symmetric".into()));
            }
            GolazoBounds::new(
                DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0 } else { -level * w[(i, j)] }),
                DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.0 } else { level * w[(i, j)] }),
            )
        }
        PenaltyKind::ZeroPattern(base) => compile_kind(base, weights, dim, level),
        PenaltyKind::Custom { lower, upper } => {
            let to_mat = |rows: &Vec<Vec<f64>>| -> Result<DMatrix<f64>> {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidPenalty(format!(
                        "custom bounds must be {dim}x{dim}"
                    )));
                }
                Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
            };
            GolazoBounds::new(to_mat(lower)?, to_mat(upper)?)
        }
    }
}
