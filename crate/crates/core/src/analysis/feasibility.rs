use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance of the equality `βc₁ − βc₂ + c₃ = 0`.
const EQUALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityInputs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub lipschitz: f64,
    /// Smallest nonzero Laplacian eigenvalue.
    pub lambda_min: f64,
    pub m: usize,
}

/// Which term attains the minimum in `μ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityCase {
    /// `μ₁ = (μ / 2m) α c₁`.
    I,
    /// `μ₁ = (c₁ − βc₃)λ − (2mL² + μαc₁L)/(μαc₁)`.
    II,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub inputs: FeasibilityInputs,
    pub mu1: f64,
    pub case: FeasibilityCase,
    /// `c₁c₂ > c₃²`.
    pub positive_definite: bool,
    /// `c₁ > βc₃`.
    pub integral_dominance: bool,
    /// `α²L²c₃ < βμ₁λ`.
    pub gain_bound: bool,
    /// `βc₁ − βc₂ + c₃ = 0`.
    pub balance: bool,
    /// Admissible interval `(αL²c₃/μ₁, βλ/α)` for the auxiliary weight `p`.
    pub p_interval: (f64, f64),
    pub feasible: bool,
}

impl FeasibilityReport {
    /// The three conditions that do not involve the problem constants.
    pub fn structural(&self) -> bool {
        self.positive_definite && self.integral_dominance && self.balance
    }
}

/// Evaluates the sufficient conditions of the Lyapunov argument.
///
/// An infeasible tuple is a valid report; only non-positive inputs are errors.
pub fn check_feasibility(inputs: FeasibilityInputs) -> Result<FeasibilityReport> {
    let FeasibilityInputs {
        c1,
        c2,
        c3,
        alpha,
        beta,
        mu,
        lipschitz: l,
        lambda_min: lambda,
        m,
    } = inputs;
    for (name, value) in [
        ("c1", c1),
        ("c2", c2),
        ("c3", c3),
        ("alpha", alpha),
        ("beta", beta),
        ("mu", mu),
        ("L_f", l),
        ("lambda_min", lambda),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mf = m as f64;
    let first = mu / (2.0 * mf) * alpha * c1;
    let second = (c1 - beta * c3) * lambda - (2.0 * mf * l * l + mu * alpha * c1 * l) / (mu * alpha * c1);
    let (mu1, case) = if first <= second {
        (first, FeasibilityCase::I)
    } else {
        (second, FeasibilityCase::II)
    };

    let positive_definite = c1 * c2 > c3 * c3;
    let integral_dominance = c1 > beta * c3;
    let gain_bound = alpha * alpha * l * l * c3 < beta * mu1 * lambda;
    let residual = beta * c1 - beta * c2 + c3;
    let scale = (beta * c1).abs().max((beta * c2).abs()).max(c3.abs());
    let balance = residual.abs() <= EQUALITY_TOL * scale;
    let lo = if mu1 > 0.0 {
        alpha * l * l * c3 / mu1
    } else {
        f64::INFINITY
    };
    let hi = beta * lambda / alpha;
    let feasible = positive_definite && integral_dominance && gain_bound && balance && lo < hi;
    Ok(FeasibilityReport {
        inputs,
        mu1,
        case,
        positive_definite,
        integral_dominance,
        gain_bound,
        balance,
        p_interval: (lo, hi),
        feasible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestedParameters {
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub report: FeasibilityReport,
}

const MAX_HALVINGS: usize = 60;
/// `c₁` runs over `2, 4, …, 2^MAX_C1_DOUBLINGS`; badly conditioned inputs need large `c₁`.
const MAX_C1_DOUBLINGS: i32 = 40;

/// Constructive search for a feasible tuple: `β = 1`, `c₃ = 1`,
/// `c₂ = c₁ + c₃/β`, with `α` halved from `1/L_f` and, for each `α`,
/// `c₁` doubled from 2 until the checker accepts.
pub fn suggest_parameters(mu: f64, lipschitz: f64, lambda_min: f64, m: usize) -> Result<SuggestedParameters> {
    for (name, value) in [("mu", mu), ("L_f", lipschitz), ("lambda_min", lambda_min)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    let (beta, c3) = (1.0, 1.0);
    let mut alpha = 1.0 / lipschitz;
    let mut best_mu1 = f64::NEG_INFINITY;
    for _ in 0..=MAX_HALVINGS {
        for c1 in (1..=MAX_C1_DOUBLINGS).map(|e| 2f64.powi(e)) {
            let c2 = c1 + c3 / beta;
            let report = check_feasibility(FeasibilityInputs {
                c1,
                c2,
                c3,
                alpha,
                beta,
                mu,
                lipschitz,
                lambda_min,
                m,
            })?;
            best_mu1 = best_mu1.max(report.mu1);
            if report.feasible {
                return Ok(SuggestedParameters {
                    alpha,
                    beta,
                    c1,
                    c2,
                    c3,
                    report,
                });
            }
        }
        alpha *= 0.5;
    }
    Err(Error::Search(format!(
        "no feasible tuple after {MAX_HALVINGS} halvings of alpha (mu={mu}, L_f={lipschitz}, lambda_min={lambda_min}, m={m}, best mu1={best_mu1:e})"
    )))
}

/// Conservative Euler stepsize for the PI-consensus iteration:
/// half the reciprocal of a bound on the spectral radius of the linearized
/// vector field, `‖K‖((1+β)λ_max + αL_f)`.
pub fn suggest_stepsize(alpha: f64, beta: f64, lipschitz: f64, lambda_max: f64, k_norm: f64) -> f64 {
    0.5 / (k_norm * ((1.0 + beta) * lambda_max + alpha * lipschitz))
}
