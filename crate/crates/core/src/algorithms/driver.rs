use serde::Serialize;

use crate::analysis::{agent_mean, consensus_error};
use crate::costs::{l2, ProblemInstance};
use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;

use super::{step, AlgorithmConfig, Method, NetworkState};

/// Per-iteration observer attached to [`run`].
pub trait Monitor {
    fn observe(&mut self, state: &NetworkState) -> MonitorReading;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MonitorReading {
    pub v: Option<f64>,
    pub v2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x̄)` at the agent mean.
    pub aggregate_cost: f64,
    /// `‖∇f(x̄)‖`.
    pub grad_norm: f64,
    pub consensus_err: f64,
    /// `‖x − 1⊗x_*‖` when the minimizer is known.
    pub dist_to_opt: Option<f64>,
    pub lyapunov_v: Option<f64>,
    pub lyapunov_v2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Budget,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub method: Method,
    pub records: Vec<TraceRecord>,
    /// Rounds executed.
    pub iterations: usize,
    /// First iteration at which both stop tolerances held.
    pub converged_at: Option<usize>,
    pub stop: StopReason,
    pub final_state: NetworkState,
    pub scalars_per_round: usize,
}

impl Trace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    pub fn scalars_communicated(&self) -> usize {
        self.iterations * self.scalars_per_round
    }

    /// Column of `dist_to_opt` values, when every record has one.
    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.dist_to_opt).collect()
    }
}

fn record(
    state: &NetworkState,
    problem: &ProblemInstance,
    x_star: Option<&[f64]>,
    reading: MonitorReading,
) -> Result<TraceRecord> {
    let (m, d) = (problem.agents(), problem.dim());
    let mean = agent_mean(&state.x, m, d);
    let (aggregate_cost, grad) = problem.aggregate_value_and_gradient(&mean)?;
    let dist_to_opt = x_star.map(|xs| {
        state
            .x
            .iter()
            .zip(xs.iter().cycle())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    });
    Ok(TraceRecord {
        k: state.k,
        aggregate_cost,
        grad_norm: l2(&grad),
        consensus_err: consensus_error(&state.x, m, d),
        dist_to_opt,
        lyapunov_v: reading.v,
        lyapunov_v2: reading.v2,
    })
}

/// Iterates the configured method from `initial` until both stop tolerances
/// hold or `max_iters` rounds have run.
///
/// A non-finite iterate aborts with [`Error::Diverged`] carrying the last
/// finite state.
pub fn run(
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
    initial: NetworkState,
    mut monitor: Option<&mut dyn Monitor>,
) -> Result<Trace> {
    config.validate()?;
    let n = problem.stacked_len();
    if initial.x.len() != n || initial.v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.x.len(),
        });
    }
    if lap.agents() != problem.agents() || lap.block_dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lap.stacked_len(),
        });
    }
    if config.method == Method::Pi && initial.v.iter().any(|&v| v != 0.0) {
        log::warn!("PI algorithm started with a nonzero integral state; it converges to a non-minimizer unless Σ_i v_i(0) = 0");
    }
    let x_star = problem.minimizer();
    let converged = |r: &TraceRecord| r.grad_norm < config.grad_tol && r.consensus_err < config.consensus_tol;

    let mut state = initial;
    let reading = monitor.as_deref_mut().map(|m| m.observe(&state)).unwrap_or_default();
    let first = record(&state, problem, x_star, reading)?;
    let start_k = state.k;
    let mut converged_at = converged(&first).then_some(state.k);
    let mut records = vec![first];

    while converged_at.is_none() && state.k - start_k < config.max_iters {
        state = step(&state, problem, lap, config)?;
        let reading = monitor.as_deref_mut().map(|m| m.observe(&state)).unwrap_or_default();
        let rec = record(&state, problem, x_star, reading)?;
        let done = converged(&rec);
        let last = state.k - start_k == config.max_iters;
        if done {
            converged_at = Some(state.k);
        }
        if done || last || (state.k - start_k).is_multiple_of(config.record_stride) {
            records.push(rec);
        }
    }

    Ok(Trace {
        method: config.method,
        records,
        iterations: state.k - start_k,
        converged_at,
        stop: if converged_at.is_some() {
            StopReason::Converged
        } else {
            StopReason::Budget
        },
        scalars_per_round: config.method.scalars_per_round(problem.dim(), lap.edge_count()),
        final_state: state,
    })
}
