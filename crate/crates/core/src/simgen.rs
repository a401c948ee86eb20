//! Generators for the simulation designs and Gaussian sampling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremes::{theta_to_gamma, SampleBlock, VariogramMatrix};
use crate::matcore::{sym_eig, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Gaussian,
    HuslerReiss,
}

/// Joint model over observed and hidden variables together with its latent decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct LatentModel {
    pub family: ModelFamily,
    /// `K` (Gaussian) or the signed Laplacian `Θ` (Hüsler–Reiss) over all variables.
    pub full: SymMatrix,
    pub observed: Vec<usize>,
    pub hidden: Vec<usize>,
    /// Observed block of `full`.
    pub sparse_true: SymMatrix,
    /// `full_OH (full_HH)⁻¹ full_HO`.
    pub low_rank_true: SymMatrix,
    /// Observed pairs `(i, j)`, `i < j`, with nonzero coupling, in observed-index positions.
    pub edges_true: Vec<(usize, usize)>,
    /// Marginal variogram on the observed variables (Hüsler–Reiss only).
    pub variogram: Option<VariogramMatrix>,
}

impl LatentModel {
    /// Observed-margin precision `A − B`.
    pub fn observed_precision(&self) -> SymMatrix {
        &self.sparse_true - &self.low_rank_true
    }

    fn build(
        family: ModelFamily,
        full: SymMatrix,
        observed: Vec<usize>,
        hidden: Vec<usize>,
    ) -> Result<Self> {
        let sparse_true = full.submatrix(&observed);
        let k_oh = DMatrix::from_fn(observed.len(), hidden.len(), |i, j| {
            full.get(observed[i], hidden[j])
        });
        let k_hh = full.submatrix(&hidden).into_matrix();
        let chol = k_hh.cholesky().ok_or_else(|| {
            Error::InvalidModel("hidden block is not positive definite".into())
        })?;
        let solved = chol.solve(&k_oh.transpose());
        let low_rank_true = SymMatrix::new(&k_oh * solved)?;
        let n_obs = observed.len();
        let edges_true = (0..n_obs)
            .flat_map(|i| ((i + 1)..n_obs).map(move |j| (i, j)))
            .filter(|&(i, j)| sparse_true.get(i, j) != 0.0)
            .collect();
        let variogram = match family {
            ModelFamily::Gaussian => None,
            ModelFamily::HuslerReiss => Some(theta_to_gamma(&full)?.submatrix(&observed)?),
        };
        Ok(Self {
            family,
            full,
            observed,
            hidden,
            sparse_true,
            low_rank_true,
            edges_true,
            variogram,
        })
    }
}

/// Two disjoint cycles of `p_per_cycle` observed nodes each and one hidden node joined to all.
///
/// The hidden node is the last index.
pub fn two_cycle_gaussian(
    p_per_cycle: usize,
    k_diag: f64,
    k_edge: f64,
    k_hidden: f64,
) -> Result<LatentModel> {
    if p_per_cycle < 3 {
        return Err(Error::InvalidModel(format!(
            "cycles need at least 3 nodes, got {p_per_cycle}"
        )));
    }
    let p = p_per_cycle;
    let d = 2 * p + 1;
    let mut k = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        k[(i, i)] = k_diag;
    }
    for c in 0..2 {
        for i in 0..p {
            let (a, b) = (c * p + i, c * p + (i + 1) % p);
            k[(a, b)] = k_edge;
            k[(b, a)] = k_edge;
        }
    }
    for i in 0..2 * p {
        k[(i, d - 1)] = k_hidden;
        k[(d - 1, i)] = k_hidden;
    }
    let full = SymMatrix::new(k)?;
    let min = sym_eig(&full)?.min();
    if min <= 0.0 {
        return Err(Error::InvalidModel(format!(
            "concentration matrix is not positive definite (min eigenvalue {min:e})"
        )));
    }
    LatentModel::build(ModelFamily::Gaussian, full, (0..2 * p).collect(), vec![d - 1])
}

/// Two-cycle design at the reference values: `K_ii = 5`, cycle couplings `−2`, hidden
/// couplings `5/(2·p_per_cycle)`.
pub fn two_cycle_default(p_per_cycle: usize) -> Result<LatentModel> {
    two_cycle_gaussian(p_per_cycle, 5.0, -2.0, 5.0 / (2 * p_per_cycle) as f64)
}

/// Interval of hidden edge weights, `[50, 75]/√(p/h)`.
pub fn hidden_weight_range(p: usize, h: usize) -> (f64, f64) {
    let s = (p as f64 / h as f64).sqrt();
    (50.0 / s, 75.0 / s)
}

/// Hüsler–Reiss model whose observed graph is a `p`-cycle with weight 2, with observed node `i`
/// joined to hidden node `p + (i mod h)`.
pub fn latent_cycle_hr(p: usize, h: usize, seed: u64) -> Result<LatentModel> {
    if p < 3 {
        return Err(Error::InvalidModel(format!("cycle needs at least 3 nodes, got {p}")));
    }
    if h == 0 || h >= p {
        return Err(Error::InvalidModel(format!("hidden count must lie in [1, {p}), got {h}")));
    }
    let d = p + h;
    let mut w = DMatrix::<f64>::zeros(d, d);
    for i in 0..p {
        let j = (i + 1) % p;
        w[(i, j)] = 2.0;
        w[(j, i)] = 2.0;
    }
    let (lo, hi) = hidden_weight_range(p, h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..p {
        let hn = p + i % h;
        let v = rng.random_range(lo..=hi);
        w[(i, hn)] = v;
        w[(hn, i)] = v;
    }
    let full = SymMatrix::from_fn(d, |i, j| if i == j { w.row(i).sum() } else { -w[(i, j)] })?;
    LatentModel::build(ModelFamily::HuslerReiss, full, (0..p).collect(), (p..d).collect())
}

/// `n` draws from `N(0, K⁻¹)`.
pub fn sample_gaussian(k: &SymMatrix, n: usize, seed: u64) -> Result<SampleBlock> {
    sample_gaussian_with(k, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_gaussian_with<R: Rng + ?Sized>(k: &SymMatrix, n: usize, rng: &mut R) -> Result<SampleBlock> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let not_pd = || Error::NotPositiveDefinite {
        what: "concentration matrix".into(),
        min_eigenvalue: sym_eig(k).map(|e| e.min()).unwrap_or(f64::NAN),
    };
    let cov = k.as_matrix().clone().cholesky().ok_or_else(not_pd)?.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    let l = cov.cholesky().ok_or_else(not_pd)?.unpack();
    let d = k.dim();
    let mut out = DMatrix::<f64>::zeros(n, d);
    let mut z = DVector::<f64>::zeros(d);
    for r in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let x = &l * &z;
        out.row_mut(r).copy_from(&x.transpose());
    }
    SampleBlock::new(out)
}

/// `(1/n) Σ x_O x_Oᵀ` without mean subtraction.
pub fn observed_cov(x: &SampleBlock, observed: &[usize]) -> Result<SymMatrix> {
    if let Some(&bad) = observed.iter().find(|&&i| i >= x.n_cols()) {
        return Err(Error::InvalidIndexSet(format!(
            "column {bad} out of range for {} columns",
            x.n_cols()
        )));
    }
    if observed.is_empty() {
        return Err(Error::InvalidIndexSet("observed set is empty".into()));
    }
    let xo = x.values().select_columns(observed);
    SymMatrix::new(xo.transpose() * &xo / x.n_rows() as f64)
}

/// Covariance of all columns, same normalization as [`observed_cov`].
pub fn gram_cov(x: &SampleBlock) -> Result<SymMatrix> {
    observed_cov(x, &(0..x.n_cols()).collect::<Vec<_>>())
}

/// Per-stream seed derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
