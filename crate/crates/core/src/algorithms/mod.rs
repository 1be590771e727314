//! Distributed optimization methods as one-round state transitions plus a
//! driver loop.
//!
//! Every round is synchronous: each agent reads its neighbors' round-`k`
//! values and all agents commit round-`k+1` values together.

mod driver;
mod preconditioner;
mod rk4;
mod steps;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use driver::{run, Monitor, MonitorReading, StopReason, Trace, TraceRecord};
pub use preconditioner::{build_preconditioner, Preconditioner, HESSIAN_FLOOR};
pub use rk4::{integrate_network, rk4_integrate, rk4_step};
pub use steps::{
    baseline_step, continuous_rhs, equilibrium_residual, pi_consensus_step, pi_step, step,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PiConsensus,
    Pi,
    Dgd,
    Extra,
    Diging,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::PiConsensus,
        Method::Pi,
        Method::Dgd,
        Method::Extra,
        Method::Diging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PiConsensus => "pi_consensus",
            Method::Pi => "pi",
            Method::Dgd => "dgd",
            Method::Extra => "extra",
            Method::Diging => "diging",
        }
    }

    /// Methods built on the PI control flow (continuous right-hand side available).
    pub fn is_pi_family(self) -> bool {
        matches!(self, Method::PiConsensus | Method::Pi)
    }

    /// Scalars crossing the network per round, counting both directions of every edge.
    ///
    /// PI consensus shares `x_i` and `v_i`; PI, DGD and EXTRA share `x_i`;
    /// DIGing shares `x_i` and its tracker `y_i`.
    pub fn scalars_per_round(self, d: usize, edges: usize) -> usize {
        let vectors = match self {
            Method::PiConsensus | Method::Diging => 2,
            Method::Pi | Method::Dgd | Method::Extra => 1,
        };
        vectors * d * edges * 2
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Per-method auxiliary state of the baselines.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Auxiliary {
    #[default]
    None,
    /// EXTRA keeps the previous iterate and its gradient. Empty before the first step.
    Extra { prev_x: Vec<f64>, prev_grad: Vec<f64> },
    /// DIGing keeps the gradient tracker `y` and `∇F` at the current iterate.
    Diging { y: Vec<f64>, grad: Vec<f64> },
}

/// Stacked agent estimates `x` and integral states `v`, both of length `m d`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub k: usize,
    pub t: f64,
    pub aux: Auxiliary,
}

impl NetworkState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        Ok(NetworkState {
            x,
            v,
            k: 0,
            t: 0.0,
            aux: Auxiliary::None,
        })
    }

    pub fn with_zero_integral(x: Vec<f64>) -> Self {
        let v = vec![0.0; x.len()];
        NetworkState {
            x,
            v,
            k: 0,
            t: 0.0,
            aux: Auxiliary::None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|e| e.is_finite())
            && match &self.aux {
                Auxiliary::None => true,
                Auxiliary::Extra { prev_x, prev_grad } => {
                    prev_x.iter().chain(prev_grad).all(|e| e.is_finite())
                }
                Auxiliary::Diging { y, grad } => y.iter().chain(grad).all(|e| e.is_finite()),
            }
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub method: Method,
    /// Gradient weight (the stepsize for DGD, EXTRA and DIGing).
    pub alpha: f64,
    /// Integral weight; unused by the baselines.
    pub beta: f64,
    /// Euler stepsize for the PI family; mixing weight of `W = I − hL̃` for the baselines.
    pub h: f64,
    pub preconditioner: Arc<Preconditioner>,
    pub max_iters: usize,
    /// Stop once the aggregate gradient norm at the agent mean drops below this…
    pub grad_tol: f64,
    /// …and the consensus error drops below this.
    pub consensus_tol: f64,
    /// Record every `record_stride`-th iteration (the last one is always recorded).
    pub record_stride: usize,
}

impl AlgorithmConfig {
    pub fn new(method: Method, alpha: f64, beta: f64, h: f64, preconditioner: Preconditioner) -> Self {
        AlgorithmConfig {
            method,
            alpha,
            beta,
            h,
            preconditioner: Arc::new(preconditioner),
            max_iters: 10_000,
            grad_tol: 1e-8,
            consensus_tol: 1e-8,
            record_stride: 1,
        }
    }

    pub fn with_budget(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tolerances(mut self, grad_tol: f64, consensus_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self.consensus_tol = consensus_tol;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("alpha", self.alpha), ("beta", self.beta), ("h", self.h)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record stride must be at least 1".into()));
        }
        Ok(())
    }
}
