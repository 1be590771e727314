use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algorithms::{AlgorithmConfig, Method, Monitor, MonitorReading, NetworkState, Preconditioner};
use crate::costs::{l2, ProblemInstance};
use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;

/// `‖L̃y‖` below which the monitor falls back to `V₂`.
pub const DISAGREEMENT_SWITCH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl LyapunovWeights {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        if !(c1 * c2 > c3 * c3) || c1 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "V is not positive definite: c1={c1}, c2={c2}, c3={c3} (need c1 c2 > c3²)"
            )));
        }
        Ok(LyapunovWeights { c1, c2, c3 })
    }
}

fn k_inner(k: &Preconditioner, a: &[f64], b: &[f64]) -> f64 {
    let kb = k.apply_inverse(b);
    a.iter().zip(&kb).map(|(x, y)| x * y).sum()
}

/// `V = (c₁/2) zᵀK⁻¹z + (c₂/2) yᵀK⁻¹y − c₃ zᵀK⁻¹y`.
pub fn lyapunov_value(z: &[f64], y: &[f64], k: &Preconditioner, c1: f64, c2: f64, c3: f64) -> Result<f64> {
    let w = LyapunovWeights::new(c1, c2, c3)?;
    let n = k.agents() * k.block_dim();
    if z.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.len().max(y.len()),
        });
    }
    Ok(value_with(&w, z, y, k))
}

fn value_with(w: &LyapunovWeights, z: &[f64], y: &[f64], k: &Preconditioner) -> f64 {
    let kz = k.apply_inverse(z);
    let ky = k.apply_inverse(y);
    let zz: f64 = z.iter().zip(&kz).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().zip(&ky).map(|(a, b)| a * b).sum();
    let zy: f64 = z.iter().zip(&ky).map(|(a, b)| a * b).sum();
    0.5 * w.c1 * zz + 0.5 * w.c2 * yy - w.c3 * zy
}

/// `V₂ = ½ zᵀK⁻¹z`.
pub fn lyapunov_v2(z: &[f64], k: &Preconditioner) -> Result<f64> {
    let n = k.agents() * k.block_dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.len(),
        });
    }
    Ok(0.5 * k_inner(k, z, z))
}

/// The integral state that PI consensus converges to from `v0`.
///
/// At the equilibrium `x = 1⊗x_*` the `x`-equation forces
/// `β L̃ v = α ∇F(1⊗x_*)`, which fixes `v` up to `1⊗c`. The quantity
/// `Σ_i K_i⁻¹ v_i` is invariant under the iteration (its increment is
/// `−hβ Σ_i (L̃x)_i = 0`), which pins `c`.
pub fn integral_limit(
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
    v0: &[f64],
) -> Result<Vec<f64>> {
    if config.method != Method::PiConsensus {
        return Err(Error::InvalidParameter(format!(
            "the integral limit is derived for pi_consensus, not {}",
            config.method
        )));
    }
    let x_star = problem
        .stacked_minimizer()
        .ok_or_else(|| Error::InvalidParameter("Lyapunov monitoring needs a known minimizer".into()))?;
    let (m, d) = (problem.agents(), problem.dim());
    if v0.len() != m * d {
        return Err(Error::DimensionMismatch {
            expected: m * d,
            got: v0.len(),
        });
    }
    let k = &config.preconditioner;
    let grad = problem.cumulative_gradient(&x_star)?;
    let pinv = lap.pseudo_inverse();
    let scale = config.alpha / config.beta;
    let mut particular = vec![0.0; m * d];
    for i in 0..m {
        for j in 0..m {
            let w = pinv[(i, j)] * scale;
            if w == 0.0 {
                continue;
            }
            for r in 0..d {
                particular[i * d + r] += w * grad[j * d + r];
            }
        }
    }
    let offset: Vec<f64> = v0.iter().zip(&particular).map(|(a, b)| a - b).collect();
    let weighted = k.apply_inverse(&offset);
    let mut rhs = DVector::zeros(d);
    for block in weighted.chunks(d) {
        for r in 0..d {
            rhs[r] += block[r];
        }
    }
    let total: DMatrix<f64> = k.inverse_sum();
    let shift = total
        .cholesky()
        .ok_or_else(|| Error::NotSpd("Σ K_i⁻¹ is not positive definite".into()))?
        .solve(&rhs);
    Ok(particular
        .iter()
        .enumerate()
        .map(|(idx, p)| p + shift[idx % d])
        .collect())
}

/// Which function the decrease ratio at a sample refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    V,
    V2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSample {
    pub k: usize,
    pub v: f64,
    pub v2: f64,
    /// `‖L̃y‖`.
    pub disagreement: f64,
    pub active: Certificate,
}

/// Evaluates `V` and `V₂` in the error coordinates `z = x − 1⊗x_*`,
/// `y = v − v_∞` at every observed state.
#[derive(Debug, Clone)]
pub struct LyapunovMonitor {
    weights: LyapunovWeights,
    preconditioner: Arc<Preconditioner>,
    laplacian: LaplacianOperator,
    x_star: Vec<f64>,
    v_limit: Vec<f64>,
    samples: Vec<LyapunovSample>,
}

impl LyapunovMonitor {
    pub fn new(
        problem: &ProblemInstance,
        lap: &LaplacianOperator,
        config: &AlgorithmConfig,
        v0: &[f64],
        weights: LyapunovWeights,
    ) -> Result<Self> {
        let v_limit = integral_limit(problem, lap, config, v0)?;
        Ok(LyapunovMonitor {
            weights,
            preconditioner: config.preconditioner.clone(),
            laplacian: lap.clone(),
            x_star: problem.stacked_minimizer().expect("checked by integral_limit"),
            v_limit,
            samples: Vec::new(),
        })
    }

    pub fn v_limit(&self) -> &[f64] {
        &self.v_limit
    }

    pub fn samples(&self) -> &[LyapunovSample] {
        &self.samples
    }

    /// `V(k+1)/V(k)` (or the `V₂` ratio where `V₂` is active at `k`) for consecutive samples.
    pub fn ratios(&self) -> Vec<f64> {
        self.samples
            .windows(2)
            .map(|w| match w[0].active {
                Certificate::V => w[1].v / w[0].v,
                Certificate::V2 => w[1].v2 / w[0].v2,
            })
            .collect()
    }

    /// Largest decrease ratio over pairs whose later value stays above
    /// `rel_floor · V(0)`; `None` when no pair qualifies.
    pub fn max_ratio_above(&self, rel_floor: f64) -> Option<f64> {
        let first = self.samples.first()?;
        let ratios = self.ratios();
        self.samples
            .windows(2)
            .zip(ratios)
            .filter(|(w, _)| match w[0].active {
                Certificate::V => w[1].v > rel_floor * first.v,
                Certificate::V2 => w[1].v2 > rel_floor * first.v2,
            })
            .map(|(_, r)| r)
            .reduce(f64::max)
    }
}

impl Monitor for LyapunovMonitor {
    fn observe(&mut self, state: &NetworkState) -> MonitorReading {
        let z: Vec<f64> = state.x.iter().zip(&self.x_star).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = state.v.iter().zip(&self.v_limit).map(|(a, b)| a - b).collect();
        let v = value_with(&self.weights, &z, &y, &self.preconditioner);
        let v2 = 0.5 * k_inner(&self.preconditioner, &z, &z);
        let disagreement = l2(&self.laplacian.apply(&y));
        let active = if disagreement < DISAGREEMENT_SWITCH {
            Certificate::V2
        } else {
            Certificate::V
        };
        self.samples.push(LyapunovSample {
            k: state.k,
            v,
            v2,
            disagreement,
            active,
        });
        MonitorReading {
            v: Some(v),
            v2: Some(v2),
        }
    }
}
