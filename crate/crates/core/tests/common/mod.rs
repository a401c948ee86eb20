#![allow(dead_code)]

pub mod oracle;

use latent_golazo::{GolazoBounds, SymMatrix};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sample covariance of `2d` standard normal draws mixed through a random matrix, plus a ridge.
pub fn random_covariance(d: usize, rng: &mut impl Rng) -> SymMatrix {
    let mix = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let n = 2 * d + 2;
    let z = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0)) * mix;
    let s = z.transpose() * &z / n as f64 + DMatrix::identity(d, d) * 0.05;
    SymMatrix::new((&s + s.transpose()) * 0.5).unwrap()
}

/// Squared Euclidean distances between random points: a conditionally negative definite variogram.
pub fn random_variogram(d: usize, rng: &mut impl Rng) -> SymMatrix {
    let pts = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::from_fn(d, |i, j| (pts.row(i) - pts.row(j)).norm_squared()).unwrap()
}

/// Finite off-diagonal bounds with `L ∈ [−hi, −lo]`, `U ∈ [lo, hi]` and a free diagonal.
pub fn random_finite_bounds(d: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> GolazoBounds {
    let mut l = DMatrix::zeros(d, d);
    let mut u = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let (a, b) = (rng.random_range(lo..hi), rng.random_range(lo..hi));
            l[(i, j)] = -a;
            l[(j, i)] = -a;
            u[(i, j)] = b;
            u[(j, i)] = b;
        }
    }
    GolazoBounds::new(l, u).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// `|a − b| / max(1, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
