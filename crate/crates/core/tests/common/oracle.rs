//! Reference solver for the latent objectives: a log-barrier interior-point method with damped
//! Newton centering. Golazo terms enter through epigraph variables `t ≥ L·a`, `t ≥ U·a`, so
//! nothing here is shared with the ADMM code path.

use nalgebra::{DMatrix, DVector};

/// `x ↦ base + Σ_k x_k·terms[k]`.
struct AffineMatrix {
    base: DMatrix<f64>,
    terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineMatrix {
    fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.base.clone();
        for (k, e) in &self.terms {
            m += e * x[*k];
        }
        m
    }
}

/// Minimize `cᵀx − Σ log det(F_i(x))` subject to `G_j(x) ≻ 0` and `h_jᵀx + h0_j > 0`.
struct BarrierProblem {
    n: usize,
    linear: DVector<f64>,
    objective_logdet: Vec<AffineMatrix>,
    cone_logdet: Vec<AffineMatrix>,
    halfspaces: Vec<(DVector<f64>, f64)>,
}

struct Derivs {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

fn logdet_pd(m: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let chol = m.clone().cholesky()?;
    let ld = 2.0 * chol.l_dirty().diagonal().iter().take(m.nrows()).map(|v| v.ln()).sum::<f64>();
    Some((ld, chol.inverse()))
}

impl BarrierProblem {
    fn degree(&self) -> f64 {
        (self.cone_logdet.iter().map(|c| c.base.nrows()).sum::<usize>() + self.halfspaces.len()) as f64
    }

    fn objective(&self, x: &DVector<f64>) -> Option<f64> {
        let mut f = self.linear.dot(x);
        for a in &self.objective_logdet {
            f -= logdet_pd(&a.eval(x))?.0;
        }
        Some(f)
    }

    fn value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let mut phi = 0.0;
        for a in &self.cone_logdet {
            phi -= logdet_pd(&a.eval(x))?.0;
        }
        for (h, h0) in &self.halfspaces {
            let g = h.dot(x) + h0;
            if !(g > 0.0) {
                return None;
            }
            phi -= g.ln();
        }
        Some(t * self.objective(x)? + phi)
    }

    fn add_logdet(a: &AffineMatrix, x: &DVector<f64>, scale: f64, d: &mut Derivs) -> Option<()> {
        let (ld, w) = logdet_pd(&a.eval(x))?;
        d.value -= scale * ld;
        let we: Vec<(usize, DMatrix<f64>)> = a.terms.iter().map(|(k, e)| (*k, &w * e)).collect();
        for (k, wk) in &we {
            d.grad[*k] -= scale * wk.trace();
        }
        for (k, wk) in &we {
            for (l, wl) in &we {
                // tr(W E_k W E_l)
                d.hess[(*k, *l)] += scale * wk.component_mul(&wl.transpose()).sum();
            }
        }
        Some(())
    }

    fn derivs(&self, x: &DVector<f64>, t: f64) -> Option<Derivs> {
        let mut d = Derivs {
            value: t * self.linear.dot(x),
            grad: &self.linear * t,
            hess: DMatrix::zeros(self.n, self.n),
        };
        for a in &self.objective_logdet {
            Self::add_logdet(a, x, t, &mut d)?;
        }
        for a in &self.cone_logdet {
            Self::add_logdet(a, x, 1.0, &mut d)?;
        }
        for (h, h0) in &self.halfspaces {
            let g = h.dot(x) + h0;
            if !(g > 0.0) {
                return None;
            }
            d.value -= g.ln();
            d.grad -= h / g;
            d.hess += h * h.transpose() / (g * g);
        }
        Some(d)
    }

    fn center(&self, mut x: DVector<f64>, t: f64) -> DVector<f64> {
        for _ in 0..500 {
            let d = self.derivs(&x, t).expect("iterate left the domain");
            let step = match d.hess.clone().cholesky() {
                Some(c) => c.solve(&(-&d.grad)),
                None => d.hess.clone().lu().solve(&(-&d.grad)).expect("singular Newton system"),
            };
            let decrement = -d.grad.dot(&step);
            if decrement < 1e-14 {
                break;
            }
            let mut s = 1.0;
            let accepted = loop {
                let trial = &x + &step * s;
                if let Some(v) = self.value(&trial, t) {
                    if v <= d.value - 0.25 * s * decrement {
                        break Some(trial);
                    }
                }
                s *= 0.5;
                if s < 1e-16 {
                    break None;
                }
            };
            match accepted {
                Some(next) => x = next,
                None => break,
            }
        }
        x
    }

    /// Barrier path until the duality-gap bound `m/t` is below `gap`.
    fn solve(&self, x0: DVector<f64>, gap: f64) -> DVector<f64> {
        assert!(self.value(&x0, 1.0).is_some(), "start point is not strictly feasible");
        let m = self.degree();
        let mut t = 1.0;
        let mut x = self.center(x0, t);
        while m / t > gap {
            t *= 8.0;
            x = self.center(x, t);
        }
        x
    }
}

fn unit_sym(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(d, d);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

fn upper_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect()
}

fn sym_from(d: usize, x: &DVector<f64>, offset: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for (k, (i, j)) in upper_pairs(d).into_iter().enumerate() {
        m[(i, j)] = x[offset + k];
        m[(j, i)] = x[offset + k];
    }
    m
}

/// `Σ_ij max(L_ij a_ij, U_ij a_ij)` with `0·(±∞) = 0`.
pub fn golazo(a: &DMatrix<f64>, lower: &DMatrix<f64>, upper: &DMatrix<f64>) -> f64 {
    let mut total = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            total += if v > 0.0 {
                upper[(i, j)] * v
            } else if v < 0.0 {
                lower[(i, j)] * v
            } else {
                0.0
            };
        }
    }
    total
}

pub struct OracleSolution {
    pub sparse: DMatrix<f64>,
    pub low_rank: DMatrix<f64>,
    pub objective: f64,
}

/// Orthonormal basis of `1^⊥` by Gram–Schmidt on `e_i − e_{d−1}`.
pub fn complement_basis(d: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..d - 1 {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v[d - 1] = -1.0;
        for c in &cols {
            v -= c * c.dot(&v);
        }
        cols.push(v.normalize());
    }
    DMatrix::from_columns(&cols)
}

/// Sign-constraint and epigraph bookkeeping for one sparse entry `a(x) = coefᵀx`.
fn add_entry_penalty(
    coef: DVector<f64>,
    weight: f64,
    l: f64,
    u: f64,
    next_var: &mut usize,
    linear: &mut Vec<f64>,
    halfspaces: &mut Vec<(DVector<f64>, f64)>,
    epigraph: &mut Vec<(usize, DVector<f64>, f64, f64)>,
) {
    assert!(l > f64::NEG_INFINITY, "oracle needs finite lower bounds");
    if l == 0.0 && u == 0.0 {
        return;
    }
    if u == f64::INFINITY {
        // a < 0
        halfspaces.push((-coef.clone(), 0.0));
        if l == 0.0 {
            return;
        }
    }
    let t = *next_var;
    *next_var += 1;
    linear.push(weight);
    epigraph.push((t, coef, l, u));
}

fn finish_halfspaces(
    n: usize,
    halfspaces: Vec<(DVector<f64>, f64)>,
    epigraph: &[(usize, DVector<f64>, f64, f64)],
) -> Vec<(DVector<f64>, f64)> {
    let mut out: Vec<(DVector<f64>, f64)> = halfspaces
        .into_iter()
        .map(|(h, h0)| {
            let mut full = DVector::zeros(n);
            full.rows_mut(0, h.len()).copy_from(&h);
            (full, h0)
        })
        .collect();
    for (t, coef, l, u) in epigraph {
        for bound in [*l, *u] {
            if bound.is_finite() {
                // t − bound·a > 0
                let mut h = DVector::zeros(n);
                h.rows_mut(0, coef.len()).copy_from(&(-coef * bound));
                h[*t] = 1.0;
                out.push((h, 0.0));
            }
        }
    }
    out
}

fn start_epigraph(x: &mut DVector<f64>, epigraph: &[(usize, DVector<f64>, f64, f64)]) {
    for (t, coef, l, u) in epigraph {
        let a = coef.dot(&x.rows(0, coef.len()));
        let lo = [*l, *u]
            .iter()
            .filter(|b| b.is_finite())
            .map(|b| b * a)
            .fold(f64::NEG_INFINITY, f64::max);
        x[*t] = lo.max(0.0) + 1.0;
    }
}

/// `min −log det(A − B) + tr((A − B)S) + ‖A‖_LU + λ tr(B)` over `B ⪰ 0`.
pub fn solve_gaussian(
    s: &DMatrix<f64>,
    lower: &DMatrix<f64>,
    upper: &DMatrix<f64>,
    lambda: f64,
    gap: f64,
) -> OracleSolution {
    let d = s.nrows();
    let pairs = upper_pairs(d);
    let q = pairs.len();
    let mut linear = Vec::new();
    let mut x_terms = Vec::new();
    let mut b_terms = Vec::new();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let e = unit_sym(d, i, j);
        linear.push(e.dot(s));
        x_terms.push((k, e.clone()));
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let e = unit_sym(d, i, j);
        linear.push(-e.dot(s) + if i == j { lambda } else { 0.0 });
        x_terms.push((q + k, -e.clone()));
        b_terms.push((q + k, e));
    }
    let mut next = 2 * q;
    let mut halfspaces = Vec::new();
    let mut epigraph = Vec::new();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let mut coef = DVector::zeros(2 * q);
        coef[k] = 1.0;
        let w = if i == j { 1.0 } else { 2.0 };
        add_entry_penalty(coef, w, lower[(i, j)], upper[(i, j)], &mut next, &mut linear, &mut halfspaces, &mut epigraph);
    }
    let n = next;
    let problem = BarrierProblem {
        n,
        linear: DVector::from_vec(linear),
        objective_logdet: vec![AffineMatrix { base: DMatrix::zeros(d, d), terms: x_terms }],
        cone_logdet: vec![AffineMatrix { base: DMatrix::zeros(d, d), terms: b_terms }],
        halfspaces: finish_halfspaces(n, halfspaces, &epigraph),
    };
    let delta = 0.1;
    let mut x0 = DVector::zeros(n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        x0[k] = if i == j { 1.0 + d as f64 * delta } else { -delta };
        x0[q + k] = if i == j { 0.1 } else { 0.0 };
    }
    start_epigraph(&mut x0, &epigraph);
    let x = problem.solve(x0, gap);
    let a = sym_from(d, &x, 0);
    let b = sym_from(d, &x, q);
    let m = &a - &b;
    let ld = logdet_pd(&m).expect("oracle solution is not positive definite").0;
    let objective = -ld + m.dot(s) + golazo(&a, lower, upper) + lambda * b.trace();
    OracleSolution { sparse: a, low_rank: b, objective }
}

/// `min −log det(PᵀΘP) + tr(ΘS_in) + ‖A‖_LU + λ tr(B)` with `Θ = A − B` a signed Laplacian
/// and `B ⪰ 0`, parameterized through `Θ = PΞPᵀ`.
pub fn solve_laplacian(
    s_in: &DMatrix<f64>,
    lower: &DMatrix<f64>,
    upper: &DMatrix<f64>,
    lambda: f64,
    gap: f64,
) -> OracleSolution {
    let d = s_in.nrows();
    let p = complement_basis(d);
    let compressed = p.transpose() * s_in * &p;
    let xi_pairs = upper_pairs(d - 1);
    let qx = xi_pairs.len();
    let pairs = upper_pairs(d);
    let qb = pairs.len();
    let mut linear = Vec::new();
    let mut xi_terms = Vec::new();
    let mut b_terms = Vec::new();
    let mut a_maps: Vec<DMatrix<f64>> = Vec::new();
    for (k, &(i, j)) in xi_pairs.iter().enumerate() {
        let e = unit_sym(d - 1, i, j);
        linear.push(e.dot(&compressed));
        a_maps.push(&p * &e * p.transpose());
        xi_terms.push((k, e));
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let e = unit_sym(d, i, j);
        linear.push(if i == j { lambda } else { 0.0 });
        a_maps.push(e.clone());
        b_terms.push((qx + k, e));
    }
    let nv = qx + qb;
    let mut next = nv;
    let mut halfspaces = Vec::new();
    let mut epigraph = Vec::new();
    for &(i, j) in &pairs {
        let coef = DVector::from_iterator(nv, a_maps.iter().map(|m| m[(i, j)]));
        let w = if i == j { 1.0 } else { 2.0 };
        add_entry_penalty(coef, w, lower[(i, j)], upper[(i, j)], &mut next, &mut linear, &mut halfspaces, &mut epigraph);
    }
    let n = next;
    let problem = BarrierProblem {
        n,
        linear: DVector::from_vec(linear),
        objective_logdet: vec![AffineMatrix { base: DMatrix::zeros(d - 1, d - 1), terms: xi_terms }],
        cone_logdet: vec![AffineMatrix { base: DMatrix::zeros(d, d), terms: b_terms }],
        halfspaces: finish_halfspaces(n, halfspaces, &epigraph),
    };
    let mut x0 = DVector::zeros(n);
    for (k, &(i, j)) in xi_pairs.iter().enumerate() {
        x0[k] = if i == j { 1.0 } else { 0.0 };
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        x0[qx + k] = if i == j { 0.1 } else { 0.0 };
    }
    start_epigraph(&mut x0, &epigraph);
    let x = problem.solve(x0, gap);
    let xi = sym_from(d - 1, &x, 0);
    let b = sym_from(d, &x, qx);
    let theta = &p * &xi * p.transpose();
    let a = &theta + &b;
    let ld = logdet_pd(&xi).expect("oracle solution is not positive definite").0;
    let objective = -ld + theta.dot(s_in) + golazo(&a, lower, upper) + lambda * b.trace();
    OracleSolution { sparse: a, low_rank: b, objective }
}
