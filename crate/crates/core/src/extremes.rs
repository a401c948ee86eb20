//! Extreme-value pipeline: variograms, the variogram/precision correspondence and a
//! Hüsler–Reiss Pareto sampler.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{laplacian_complement_eig, ones_complement_basis, sym_eig, BasisFlavor, SymMatrix};

/// Symmetric, zero-diagonal, nonnegative matrix `Γ_ij = Var(W_i − W_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VariogramMatrix(SymMatrix);

impl VariogramMatrix {
    /// Validates shape and sign. Diagonal entries and negative entries up to `1e-12·max|Γ|`
    /// are treated as round-off and reset to zero.
    pub fn new(g: SymMatrix) -> Result<Self> {
        let d = g.dim();
        if d < 2 {
            return Err(Error::InvalidVariogram(format!("dimension must be at least 2, got {d}")));
        }
        let slack = 1e-12 * g.max_abs().max(1.0);
        let mut m = g.into_matrix();
        for i in 0..d {
            if m[(i, i)].abs() > slack {
                return Err(Error::InvalidVariogram(format!(
                    "diagonal entry ({i},{i}) is {}",
                    m[(i, i)]
                )));
            }
            m[(i, i)] = 0.0;
            for j in 0..d {
                if m[(i, j)] < -slack {
                    return Err(Error::InvalidVariogram(format!(
                        "negative entry ({i},{j}) = {}",
                        m[(i, j)]
                    )));
                }
                m[(i, j)] = m[(i, j)].max(0.0);
            }
        }
        Ok(Self(SymMatrix::new(m)?))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SymMatrix::from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    /// Largest eigenvalue of `PᵀΓP`; negative iff `Γ` is strictly conditionally negative definite.
    pub fn cnd_margin(&self) -> Result<f64> {
        let basis = ones_complement_basis(self.dim(), BasisFlavor::Helmert)?;
        Ok(sym_eig(&basis.compress(&self.0))?.max())
    }

    /// Diagnostic flag; empirical estimates may fail it at small sample sizes.
    pub fn is_cnd(&self) -> bool {
        self.cnd_margin().map(|m| m < 0.0).unwrap_or(false)
    }

    /// Solver input `−Γ/2`.
    pub fn halved_negative(&self) -> SymMatrix {
        self.0.scale(-0.5)
    }

    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.0.submatrix(idx))
    }
}

impl Serialize for VariogramMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VariogramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = SymMatrix::deserialize(d)?;
        VariogramMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// `n × d` block of observations (rows) over variables (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBlock(DMatrix<f64>);

impl SampleBlock {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidSamples(format!(
                "empty block ({} x {})",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidSamples(format!("non-finite value at row {r}, column {c}")));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidSamples("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.0
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.0.select_rows(rows))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        Self::new(self.0.select_columns(cols))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// How exceedances are turned into a variogram estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariogramEstimator {
    /// Rank transform to exponential margins, rows with `F̃_m ≥ 1 − k/n` per anchor `m`.
    Ranked { k: usize },
    /// Data already on the multivariate Pareto scale: rows with `Y_m > threshold` per anchor.
    ParetoScale { threshold: f64 },
}

pub fn estimate_variogram(x: &SampleBlock, estimator: &VariogramEstimator) -> Result<VariogramMatrix> {
    match *estimator {
        VariogramEstimator::Ranked { k } => empirical_variogram(x, k),
        VariogramEstimator::ParetoScale { threshold } => pareto_variogram(x, threshold),
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && col[order[end]] == col[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Averages over anchors `m` the unbiased variance of `t_i − t_j` on the rows selected for `m`.
fn anchored_variogram(t: &DMatrix<f64>, selected: impl Fn(usize) -> Vec<usize>) -> Result<VariogramMatrix> {
    let d = t.ncols();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for m in 0..d {
        let rows = selected(m);
        if rows.len() < 2 {
            return Err(Error::InsufficientExceedances(m));
        }
        let cnt = rows.len() as f64;
        for i in 0..d {
            for j in (i + 1)..d {
                let mean = rows.iter().map(|&r| t[(r, i)] - t[(r, j)]).sum::<f64>() / cnt;
                let ss = rows
                    .iter()
                    .map(|&r| {
                        let e = t[(r, i)] - t[(r, j)] - mean;
                        e * e
                    })
                    .sum::<f64>();
                acc[(i, j)] += ss / (cnt - 1.0);
            }
        }
    }
    let out = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => acc[(i, j)] / d as f64,
        std::cmp::Ordering::Greater => acc[(j, i)] / d as f64,
        std::cmp::Ordering::Equal => 0.0,
    });
    VariogramMatrix::new(SymMatrix::new(out)?)
}

fn check_variogram_input(x: &SampleBlock) -> Result<()> {
    if x.n_cols() < 2 {
        return Err(Error::InvalidSamples(format!(
            "variogram estimation needs at least 2 columns, got {}",
            x.n_cols()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::InvalidSamples(format!(
            "variogram estimation needs at least 2 rows, got {}",
            x.n_rows()
        )));
    }
    Ok(())
}

/// Rank-based empirical variogram with effective sample size `k`.
///
/// Margins are mapped to `−log(1 − F̃)` with `F̃ = rank/(n+1)` (average ranks for ties).
pub fn empirical_variogram(x: &SampleBlock, k: usize) -> Result<VariogramMatrix> {
    check_variogram_input(x)?;
    let (n, d) = (x.n_rows(), x.n_cols());
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("k must lie in [2, {n}], got {k}")));
    }
    let mut cdf = DMatrix::<f64>::zeros(n, d);
    for j in 0..d {
        let col: Vec<f64> = x.values().column(j).iter().copied().collect();
        for (i, r) in average_ranks(&col).into_iter().enumerate() {
            cdf[(i, j)] = r / (n as f64 + 1.0);
        }
    }
    let t = cdf.map(|f| -(1.0 - f).ln());
    let level = 1.0 - k as f64 / n as f64;
    anchored_variogram(&t, |m| (0..n).filter(|&r| cdf[(r, m)] >= level).collect())
}

/// Variogram estimate for data on the Pareto scale (exponential margins above zero).
pub fn pareto_variogram(x: &SampleBlock, threshold: f64) -> Result<VariogramMatrix> {
    check_variogram_input(x)?;
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold must be finite, got {threshold}")));
    }
    let y = x.values();
    anchored_variogram(y, |m| (0..y.nrows()).filter(|&r| y[(r, m)] > threshold).collect())
}

/// Blocks of the bordered inverse `[[−Γ/2, 1], [1ᵀ, 0]]⁻¹ = [[Θ, p], [pᵀ, s]]`.
#[derive(Clone, Debug)]
pub struct BorderedInverse {
    pub theta: SymMatrix,
    pub border: Vec<f64>,
    pub corner: f64,
}

/// Full bordered inverse of a strictly conditionally negative definite variogram.
pub fn fiedler_bapat(gamma: &VariogramMatrix) -> Result<BorderedInverse> {
    let margin = gamma.cnd_margin()?;
    if !(margin < 0.0) {
        return Err(Error::InvalidVariogram(format!(
            "not strictly conditionally negative definite (max eigenvalue on 1-complement {margin:e})"
        )));
    }
    let d = gamma.dim();
    let bordered = DMatrix::from_fn(d + 1, d + 1, |i, j| match (i < d, j < d) {
        (true, true) => -0.5 * gamma.get(i, j),
        (false, false) => 0.0,
        _ => 1.0,
    });
    let inv = bordered
        .try_inverse()
        .ok_or_else(|| Error::InvalidVariogram("bordered matrix is singular".into()))?;
    let theta = SymMatrix::new(inv.view((0, 0), (d, d)).into_owned())?;
    let border = (0..d).map(|i| 0.5 * (inv[(i, d)] + inv[(d, i)])).collect();
    Ok(BorderedInverse {
        theta,
        border,
        corner: inv[(d, d)],
    })
}

/// Laplacian precision `Θ` of a variogram.
pub fn gamma_to_theta(gamma: &VariogramMatrix) -> Result<SymMatrix> {
    Ok(fiedler_bapat(gamma)?.theta)
}

/// Variogram of a rank `d−1` PSD Laplacian: `Γ_ij = Θ⁺_ii + Θ⁺_jj − 2Θ⁺_ij`.
pub fn theta_to_gamma(theta: &SymMatrix) -> Result<VariogramMatrix> {
    let basis = ones_complement_basis(theta.dim(), BasisFlavor::Helmert)?;
    let inv = laplacian_complement_eig(theta, &basis)?.reconstruct_with(|v| 1.0 / v);
    let pinv = basis.expand(&inv);
    let d = theta.dim();
    let g = DMatrix::from_fn(d, d, |i, j| pinv.get(i, i) + pinv.get(j, j) - 2.0 * pinv.get(i, j));
    VariogramMatrix::new(SymMatrix::new(g)?)
}

struct AnchorLaw {
    others: Vec<usize>,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

fn anchor_laws(gamma: &VariogramMatrix) -> Result<Vec<AnchorLaw>> {
    let d = gamma.dim();
    (0..d)
        .map(|m| {
            let others: Vec<usize> = (0..d).filter(|&i| i != m).collect();
            let mean = DVector::from_iterator(d - 1, others.iter().map(|&i| -0.5 * gamma.get(i, m)));
            let cov = DMatrix::from_fn(d - 1, d - 1, |a, b| {
                let (i, j) = (others[a], others[b]);
                0.5 * (gamma.get(i, m) + gamma.get(j, m) - gamma.get(i, j))
            });
            let chol = cov.cholesky().ok_or_else(|| {
                Error::InvalidVariogram(format!("increment covariance for anchor {m} is not positive definite"))
            })?;
            Ok(AnchorLaw {
                others,
                mean,
                chol: chol.unpack(),
            })
        })
        .collect()
}

/// Draws `n` rows from the Hüsler–Reiss Pareto distribution with variogram `Γ`.
pub fn sample_hr_pareto(gamma: &VariogramMatrix, n: usize, seed: u64) -> Result<SampleBlock> {
    sample_hr_pareto_with(gamma, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Generator-explicit form of [`sample_hr_pareto`].
///
/// Draws an anchor `m`, the Gaussian increment `G` with `G_m = 0`, the ℓ₁-normalized spectral
/// vector `G − log Σ exp(G)` and an exponential radius, then keeps rows with positive maximum.
pub fn sample_hr_pareto_with<R: Rng + ?Sized>(
    gamma: &VariogramMatrix,
    n: usize,
    rng: &mut R,
) -> Result<SampleBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let d = gamma.dim();
    let laws = anchor_laws(gamma)?;
    let mut out = DMatrix::<f64>::zeros(n, d);
    let mut g = vec![0.0; d];
    let mut z = DVector::<f64>::zeros(d - 1);
    let mut filled = 0;
    while filled < n {
        let m = rng.random_range(0..d);
        let law = &laws[m];
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let inc = &law.mean + &law.chol * &z;
        g[m] = 0.0;
        for (a, &i) in law.others.iter().enumerate() {
            g[i] = inc[a];
        }
        let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + g.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
        let e: f64 = rng.sample(Exp1);
        if e + top - lse > 0.0 {
            for j in 0..d {
                out[(filled, j)] = e + g[j] - lse;
            }
            filled += 1;
        }
    }
    SampleBlock::new(out)
}
