//! Local cost functions and the aggregate / cumulative views over them.
//!
//! The aggregate cost evaluates every local cost at one common point,
//! `f(x) = Σ_i f_i(x)`. The cumulative cost evaluates each local cost at its
//! own agent's block of a stacked vector, `F(x) = Σ_i f_i(x_i)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data_io::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{sorted_eigenvalues, symmetry_defect};

/// Minimum of `sin(u)/u` over `u ≠ 0`, attained near `u ≈ 4.4934`.
const SINC_MIN: f64 = -0.217_233_628_211_221_7;

/// A continuously differentiable local cost `f_i : R^d → R`.
pub trait CostFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out` (length `dim`).
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }

    /// Symmetric Hessian, when the family offers one.
    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn known_minimizer(&self) -> Option<Vec<f64>> {
        None
    }
}

/// `½ xᵀA x − bᵀx + c` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct QuadraticCost {
    a: DMatrix<f64>,
    b: DVector<f64>,
    constant: f64,
}

impl QuadraticCost {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if symmetry_defect(&a) > 1e-10 {
            return Err(Error::InvalidParameter("quadratic term is not symmetric".into()));
        }
        let min = sorted_eigenvalues(&a)[0];
        if min < -1e-10 * a.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic term is indefinite (eigenvalue {min:e})"
            )));
        }
        Ok(QuadraticCost { a, b, constant: 0.0 })
    }

    /// `½ Σ_k (x_k − a_k)²`.
    pub fn centered(center: &[f64]) -> Self {
        let d = center.len();
        QuadraticCost {
            a: DMatrix::identity(d, d),
            b: DVector::from_column_slice(center),
            constant: 0.5 * center.iter().map(|c| c * c).sum::<f64>(),
        }
    }

    pub fn hessian_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.b
    }
}

impl CostFunction for QuadraticCost {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        0.5 * x.dot(&(&self.a * &x)) - self.b.dot(&x) + self.constant
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (r, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = -self.b[r];
            for (c, xc) in x.iter().enumerate() {
                acc += self.a[(r, c)] * xc;
            }
            *o = acc;
        }
    }

    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.a.clone())
    }

    fn known_minimizer(&self) -> Option<Vec<f64>> {
        self.a
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&self.b).as_slice().to_vec())
    }
}

/// Nonconvex scalar family `(t)² + c·sin²(t)` with `t = x_k − a_k`, summed over
/// coordinates.
///
/// For `c > 1` the second derivative `2 + 2c·cos(2t)` turns negative near
/// `t = π/2`, yet `f'(t)·t ≥ (2 + 2c·min sinc) t² > 0` for `c < 2`, so the
/// family satisfies the restricted secant inequality around `a`.
#[derive(Debug, Clone)]
pub struct RsiNonconvexCost {
    shift: Vec<f64>,
    c: f64,
}

impl RsiNonconvexCost {
    pub fn new(shift: Vec<f64>, c: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&c) {
            return Err(Error::InvalidParameter(format!(
                "nonconvexity weight c must lie in [0, 2), got {c}"
            )));
        }
        if shift.is_empty() {
            return Err(Error::InvalidParameter("empty shift vector".into()));
        }
        Ok(RsiNonconvexCost { shift, c })
    }

    pub fn weight(&self) -> f64 {
        self.c
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Analytic RSI constant of one local cost about its own minimizer.
    pub fn rsi_constant(c: f64) -> f64 {
        2.0 + 2.0 * c * SINC_MIN
    }

    /// Largest absolute second derivative, `2 + 2c`.
    pub fn lipschitz_constant(c: f64) -> f64 {
        2.0 + 2.0 * c
    }

    fn scalar_grad(c: f64, t: f64) -> f64 {
        2.0 * t + c * (2.0 * t).sin()
    }
}

impl CostFunction for RsiNonconvexCost {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.shift)
            .map(|(xk, ak)| {
                let t = xk - ak;
                t * t + self.c * t.sin().powi(2)
            })
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xk), ak) in out.iter_mut().zip(x).zip(&self.shift) {
            *o = Self::scalar_grad(self.c, xk - ak);
        }
    }

    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let diag: Vec<f64> = x
            .iter()
            .zip(&self.shift)
            .map(|(xk, ak)| 2.0 + 2.0 * self.c * (2.0 * (xk - ak)).cos())
            .collect();
        Some(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }

    fn known_minimizer(&self) -> Option<Vec<f64>> {
        Some(self.shift.clone())
    }
}

/// Cross-entropy of a logistic model on one agent's samples:
/// `Σ_j [log(1 + exp(wᵀx_j)) − y_j wᵀx_j]`.
#[derive(Debug, Clone)]
pub struct LogisticCost {
    features: DMatrix<f64>,
    labels: Vec<f64>,
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticCost {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Dataset("empty shard".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::Dataset(format!("non-binary label {bad}")));
        }
        Ok(LogisticCost { features, labels })
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    fn margins(&self, w: &[f64]) -> Vec<f64> {
        let n = self.features.nrows();
        let mut t = vec![0.0; n];
        // Column-major storage: accumulate column by column.
        for (k, wk) in w.iter().enumerate() {
            if *wk == 0.0 {
                continue;
            }
            for (tj, xjk) in t.iter_mut().zip(self.features.column(k).iter()) {
                *tj += xjk * wk;
            }
        }
        t
    }
}

impl CostFunction for LogisticCost {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.margins(w)
            .iter()
            .zip(&self.labels)
            .map(|(t, y)| softplus(*t) - y * t)
            .sum()
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        let residual: Vec<f64> = self
            .margins(w)
            .iter()
            .zip(&self.labels)
            .map(|(t, y)| sigmoid(*t) - y)
            .collect();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self
                .features
                .column(k)
                .iter()
                .zip(&residual)
                .map(|(x, r)| x * r)
                .sum();
        }
    }

    fn hessian(&self, w: &[f64]) -> Option<DMatrix<f64>> {
        let weights: Vec<f64> = self
            .margins(w)
            .iter()
            .map(|t| {
                let s = sigmoid(*t);
                s * (1.0 - s)
            })
            .collect();
        let mut scaled = self.features.clone();
        for (mut row, wt) in scaled.row_iter_mut().zip(&weights) {
            row *= *wt;
        }
        let h = self.features.transpose() * scaled;
        Some((&h + h.transpose()) * 0.5)
    }
}

/// The `m` local costs of a distributed problem plus whatever is known about it.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    costs: Vec<Arc<dyn CostFunction>>,
    d: usize,
    x_star: Option<Vec<f64>>,
    /// RSI constant of the cumulative cost, when known analytically.
    pub mu: Option<f64>,
    /// Lipschitz constant of the cumulative gradient, when known analytically.
    pub lipschitz: Option<f64>,
}

impl ProblemInstance {
    pub fn new(costs: Vec<Arc<dyn CostFunction>>) -> Result<Self> {
        let d = costs
            .first()
            .ok_or_else(|| Error::InvalidParameter("problem needs at least one agent".into()))?
            .dim();
        if let Some(bad) = costs.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.dim(),
            });
        }
        Ok(ProblemInstance {
            costs,
            d,
            x_star: None,
            mu: None,
            lipschitz: None,
        })
    }

    /// Attaches a global minimizer after checking `‖Σ_i ∇f_i(x_*)‖ ≤ 1e-8`.
    pub fn with_minimizer(mut self, x_star: Vec<f64>) -> Result<Self> {
        let (_, grad) = self.aggregate_value_and_gradient(&x_star)?;
        let norm = l2(&grad);
        if norm > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "claimed minimizer has aggregate gradient norm {norm:e}"
            )));
        }
        self.x_star = Some(x_star);
        Ok(self)
    }

    pub fn with_constants(mut self, mu: Option<f64>, lipschitz: Option<f64>) -> Self {
        self.mu = mu;
        self.lipschitz = lipschitz;
        self
    }

    pub fn agents(&self) -> usize {
        self.costs.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn stacked_len(&self) -> usize {
        self.agents() * self.d
    }

    pub fn local(&self, agent: usize) -> &dyn CostFunction {
        self.costs[agent].as_ref()
    }

    pub fn minimizer(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    /// `X_* = 1 ⊗ x_*`.
    pub fn stacked_minimizer(&self) -> Option<Vec<f64>> {
        self.x_star.as_ref().map(|x| x.repeat(self.agents()))
    }

    /// `(f(x), ∇f(x))` with every local cost evaluated at the same `x`.
    pub fn aggregate_value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(x.len(), self.d)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; self.d];
        let mut buf = vec![0.0; self.d];
        for cost in &self.costs {
            value += cost.value(x);
            cost.gradient_into(x, &mut buf);
            for (g, b) in grad.iter_mut().zip(&buf) {
                *g += b;
            }
        }
        Ok((value, grad))
    }

    pub fn cumulative_value(&self, x_stacked: &[f64]) -> Result<f64> {
        self.check_len(x_stacked.len(), self.stacked_len())?;
        Ok(self
            .costs
            .iter()
            .zip(x_stacked.chunks(self.d))
            .map(|(c, xi)| c.value(xi))
            .sum())
    }

    /// `∇F(x)`: block `i` is `∇f_i(x_i)`.
    pub fn cumulative_gradient(&self, x_stacked: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x_stacked.len(), self.stacked_len())?;
        let mut out = vec![0.0; x_stacked.len()];
        self.cumulative_gradient_into(x_stacked, &mut out);
        Ok(out)
    }

    pub(crate) fn cumulative_gradient_into(&self, x_stacked: &[f64], out: &mut [f64]) {
        for ((cost, xi), gi) in self
            .costs
            .iter()
            .zip(x_stacked.chunks(self.d))
            .zip(out.chunks_mut(self.d))
        {
            cost.gradient_into(xi, gi);
        }
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Builds `m` agents with [`RsiNonconvexCost`] locals.
///
/// `offsets` holds one shift per agent (applied to every coordinate) or one
/// per stacked entry (`m·d` values). The aggregate minimizer is located
/// coordinate-wise by safeguarded Newton iteration; the builder fails if a
/// coordinate of the aggregate has more than one stationary point.
pub fn build_rsi_suite(m: usize, d: usize, offsets: &[f64], c: f64) -> Result<ProblemInstance> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("m and d must be at least 1".into()));
    }
    let shifts: Vec<Vec<f64>> = if offsets.len() == m {
        offsets.iter().map(|&a| vec![a; d]).collect()
    } else if offsets.len() == m * d {
        offsets.chunks(d).map(<[f64]>::to_vec).collect()
    } else {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: offsets.len(),
        });
    };
    let costs = shifts
        .iter()
        .map(|s| RsiNonconvexCost::new(s.clone(), c).map(|f| Arc::new(f) as Arc<dyn CostFunction>))
        .collect::<Result<Vec<_>>>()?;

    let mut x_star = Vec::with_capacity(d);
    for k in 0..d {
        let column: Vec<f64> = shifts.iter().map(|s| s[k]).collect();
        x_star.push(aggregate_root_1d(&column, c)?);
    }

    Ok(ProblemInstance::new(costs)?
        .with_minimizer(x_star)?
        .with_constants(
            Some(RsiNonconvexCost::rsi_constant(c)),
            Some(RsiNonconvexCost::lipschitz_constant(c)),
        ))
}

/// Unique root of `g(t) = Σ_i 2(t−a_i) + c·sin(2(t−a_i))`.
fn aggregate_root_1d(shifts: &[f64], c: f64) -> Result<f64> {
    let g = |t: f64| -> f64 {
        shifts
            .iter()
            .map(|a| RsiNonconvexCost::scalar_grad(c, t - a))
            .sum()
    };
    let dg = |t: f64| -> f64 {
        shifts
            .iter()
            .map(|a| 2.0 + 2.0 * c * (2.0 * (t - a)).cos())
            .sum()
    };
    let lo0 = shifts.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let hi0 = shifts.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    // Outside [min a, max a] every term has the sign of t − a_i, so all roots lie inside.
    let samples = 4096;
    let mut sign_changes = 0;
    let mut prev = g(lo0);
    for s in 1..=samples {
        let t = lo0 + (hi0 - lo0) * s as f64 / samples as f64;
        let cur = g(t);
        if (cur > 0.0) != (prev > 0.0) {
            sign_changes += 1;
        }
        prev = cur;
    }
    if sign_changes != 1 {
        return Err(Error::InvalidParameter(format!(
            "aggregate cost has {sign_changes} stationary-point brackets; offsets too spread for c={c}"
        )));
    }

    let (mut lo, mut hi) = (lo0, hi0);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let value = g(t);
        if value == 0.0 {
            return Ok(t);
        }
        if value > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let slope = dg(t);
        let newton = t - value / slope;
        t = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + t.abs()) || value.abs() < 1e-14 {
            break;
        }
    }
    Ok(t)
}

/// Strongly convex quadratic agents `½xᵀA_i x − b_iᵀx` whose Hessians all have
/// eigenvalues log-spaced on `[1, condition_number]`.
///
/// With `shared_basis` every agent uses the same eigenvectors, so the
/// aggregate Hessian inherits the full condition number. Otherwise each agent
/// draws its own rotation.
pub fn build_quadratic_suite(
    m: usize,
    d: usize,
    condition_number: f64,
    shared_basis: bool,
    seed: u64,
) -> Result<ProblemInstance> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidParameter("m and d must be at least 1".into()));
    }
    if !(condition_number >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be ≥ 1, got {condition_number}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectrum: Vec<f64> = (0..d)
        .map(|k| {
            if d == 1 {
                1.0
            } else {
                condition_number.powf(k as f64 / (d - 1) as f64)
            }
        })
        .collect();
    let shared = random_rotation(d, &mut rng);
    let mut costs: Vec<Arc<dyn CostFunction>> = Vec::with_capacity(m);
    let mut a_sum = DMatrix::zeros(d, d);
    let mut b_sum = DVector::zeros(d);
    for _ in 0..m {
        let q = if shared_basis {
            shared.clone()
        } else {
            random_rotation(d, &mut rng)
        };
        let a = &q * DMatrix::from_diagonal(&DVector::from_column_slice(&spectrum)) * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        a_sum += &a;
        b_sum += &b;
        costs.push(Arc::new(QuadraticCost::new(a, b)?));
    }
    let x_star = a_sum
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotSpd("aggregate quadratic".into()))?
        .solve(&b_sum);
    let l_max = spectrum.iter().copied().fold(0.0, f64::max);
    let l_min = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let problem = ProblemInstance::new(costs)?.with_constants(Some(l_min), Some(l_max));
    // Round-off in the solve can exceed the absolute 1e-8 check for large condition numbers.
    let x_star = polish_quadratic_minimizer(&problem, x_star.as_slice().to_vec(), &a_sum);
    problem.with_minimizer(x_star)
}

fn polish_quadratic_minimizer(problem: &ProblemInstance, mut x: Vec<f64>, a_sum: &DMatrix<f64>) -> Vec<f64> {
    let Some(chol) = a_sum.clone().cholesky() else {
        return x;
    };
    for _ in 0..3 {
        let (_, g) = problem
            .aggregate_value_and_gradient(&x)
            .expect("dimension checked by construction");
        let step = chol.solve(&DVector::from_vec(g));
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
    }
    x
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut *rng));
    g.qr().q()
}

/// One logistic agent per data shard. No minimizer is attached: the
/// cross-entropy on separable or rank-deficient data need not have a unique
/// (or any finite) minimizer.
pub fn build_logistic(shards: &[Dataset]) -> Result<ProblemInstance> {
    if shards.is_empty() {
        return Err(Error::Dataset("no shards".into()));
    }
    let costs = shards
        .iter()
        .map(|s| {
            LogisticCost::new(s.features().clone(), s.labels().to_vec())
                .map(|c| Arc::new(c) as Arc<dyn CostFunction>)
        })
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(costs)
}
