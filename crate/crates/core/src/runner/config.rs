use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::Method;
use crate::error::{Error, Result};
use crate::graph::Topology;

/// Method tags accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodLabel {
    PiConsensusPrecond,
    PiConsensus,
    Pi,
    Dgd,
    Extra,
    Diging,
}

impl MethodLabel {
    pub const ALL: [MethodLabel; 6] = [
        MethodLabel::PiConsensusPrecond,
        MethodLabel::PiConsensus,
        MethodLabel::Pi,
        MethodLabel::Dgd,
        MethodLabel::Extra,
        MethodLabel::Diging,
    ];

    pub fn method(self) -> Method {
        match self {
            MethodLabel::PiConsensusPrecond | MethodLabel::PiConsensus => Method::PiConsensus,
            MethodLabel::Pi => Method::Pi,
            MethodLabel::Dgd => Method::Dgd,
            MethodLabel::Extra => Method::Extra,
            MethodLabel::Diging => Method::Diging,
        }
    }

    pub fn preconditioned(self) -> bool {
        self == MethodLabel::PiConsensusPrecond
    }

    /// Whether `β` enters the iteration.
    pub fn uses_beta(self) -> bool {
        self.method().is_pi_family()
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodLabel::PiConsensusPrecond => "pi_consensus_precond",
            MethodLabel::PiConsensus => "pi_consensus",
            MethodLabel::Pi => "pi",
            MethodLabel::Dgd => "dgd",
            MethodLabel::Extra => "extra",
            MethodLabel::Diging => "diging",
        }
    }
}

impl fmt::Display for MethodLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single value or a tuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    One(f64),
    Many(Vec<f64>),
}

impl Param {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Param::One(v) => vec![*v],
            Param::Many(vs) => vs.clone(),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Param::Many(vs) if vs.len() > 1)
    }
}

fn unit_param() -> Param {
    Param::One(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: MethodLabel,
    pub alpha: Param,
    #[serde(default = "unit_param")]
    pub beta: Param,
    pub h: Param,
    /// Preconditioner shift; only read by `pi_consensus_precond`.
    #[serde(default = "unit_param")]
    pub gamma: Param,
}

impl MethodSpec {
    pub fn is_grid(&self) -> bool {
        [&self.alpha, &self.beta, &self.h, &self.gamma]
            .iter()
            .any(|p| p.is_grid())
    }
}

fn default_agents() -> usize {
    5
}
fn default_rsi_dim() -> usize {
    1
}
fn default_rsi_c() -> f64 {
    1.5
}
fn default_quadratic_dim() -> usize {
    4
}
fn default_condition_number() -> f64 {
    10.0
}
fn default_samples() -> usize {
    200
}
fn default_separation() -> f64 {
    1.0
}
fn default_digits() -> [u8; 2] {
    [0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    RsiSuite {
        #[serde(default = "default_agents")]
        agents: usize,
        #[serde(default = "default_rsi_dim")]
        dim: usize,
        #[serde(default = "default_rsi_c")]
        c: f64,
        /// Per-agent shifts, `agents` or `agents·dim` values; evenly spaced in `[−2, 2]` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offsets: Option<Vec<f64>>,
    },
    Quadratic {
        #[serde(default = "default_agents")]
        agents: usize,
        #[serde(default = "default_quadratic_dim")]
        dim: usize,
        #[serde(default = "default_condition_number")]
        condition_number: f64,
        #[serde(default)]
        shared_basis: bool,
    },
    LogisticSynthetic {
        #[serde(default = "default_agents")]
        agents: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_quadratic_dim")]
        dim: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        /// Per-column multipliers, bias column included (`dim + 1` entries).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        feature_scales: Option<Vec<f64>>,
    },
    LogisticIdx {
        #[serde(default = "default_agents")]
        agents: usize,
        images: PathBuf,
        labels: PathBuf,
        #[serde(default = "default_digits")]
        digits: [u8; 2],
        /// Keep at most this many samples after filtering.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_samples: Option<usize>,
    },
}

impl ProblemSpec {
    pub fn agents(&self) -> usize {
        match self {
            ProblemSpec::RsiSuite { agents, .. }
            | ProblemSpec::Quadratic { agents, .. }
            | ProblemSpec::LogisticSynthetic { agents, .. }
            | ProblemSpec::LogisticIdx { agents, .. } => *agents,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovSpec {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

fn default_max_iters() -> usize {
    10_000
}
fn default_stride() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-8
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_init_std() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_tol")]
    pub consensus_tol: f64,
    /// Standard deviation of the random initial estimates (and integral states).
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// `kind:m` (ring, path, complete, star) or the path of an edge-list file.
    pub topology: String,
    pub problem: ProblemSpec,
    /// Weights of the Lyapunov monitor attached to PI-consensus runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovSpec>,
    pub methods: Vec<MethodSpec>,
}

/// Parses and validates a TOML experiment description, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn topology(&self) -> Result<Topology> {
        resolve_topology(&self.topology)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::Config(format!("{name}: {msg}"));
        if self.methods.is_empty() {
            return Err(field("methods", "at least one method is required".into()));
        }
        let mut seen = HashSet::new();
        for (i, spec) in self.methods.iter().enumerate() {
            if !seen.insert(spec.method) {
                return Err(field(
                    &format!("methods[{i}].method"),
                    format!("{} listed twice", spec.method),
                ));
            }
            for (name, param) in [
                ("alpha", &spec.alpha),
                ("beta", &spec.beta),
                ("h", &spec.h),
                ("gamma", &spec.gamma),
            ] {
                let values = param.values();
                if values.is_empty() {
                    return Err(field(&format!("methods[{i}].{name}"), "empty grid".into()));
                }
                if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                    return Err(field(
                        &format!("methods[{i}].{name}"),
                        format!("values must be positive and finite, got {bad}"),
                    ));
                }
            }
        }
        if self.record_stride == 0 {
            return Err(field("record_stride", "must be at least 1".into()));
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("consensus_tol", self.consensus_tol)] {
            if !(v > 0.0) {
                return Err(field(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.init_std >= 0.0) || !self.init_std.is_finite() {
            return Err(field("init_std", format!("must be non-negative, got {}", self.init_std)));
        }
        let agents = self.problem.agents();
        if agents < 2 {
            return Err(field("problem.agents", format!("need at least 2 agents, got {agents}")));
        }
        match &self.problem {
            ProblemSpec::RsiSuite { dim, c, offsets, .. } => {
                if *dim == 0 {
                    return Err(field("problem.dim", "must be at least 1".into()));
                }
                if !(0.0..2.0).contains(c) {
                    return Err(field("problem.c", format!("must lie in [0, 2), got {c}")));
                }
                if let Some(o) = offsets {
                    if o.len() != agents && o.len() != agents * dim {
                        return Err(field(
                            "problem.offsets",
                            format!("expected {agents} or {} values, got {}", agents * dim, o.len()),
                        ));
                    }
                }
            }
            ProblemSpec::Quadratic {
                dim, condition_number, ..
            } => {
                if *dim == 0 {
                    return Err(field("problem.dim", "must be at least 1".into()));
                }
                if !(*condition_number >= 1.0) {
                    return Err(field(
                        "problem.condition_number",
                        format!("must be at least 1, got {condition_number}"),
                    ));
                }
            }
            ProblemSpec::LogisticSynthetic {
                samples,
                dim,
                feature_scales,
                ..
            } => {
                if *samples < agents {
                    return Err(field("problem.samples", format!("fewer samples than agents ({samples})")));
                }
                if *dim == 0 {
                    return Err(field("problem.dim", "must be at least 1".into()));
                }
                if let Some(scales) = feature_scales {
                    if scales.len() != dim + 1 {
                        return Err(field(
                            "problem.feature_scales",
                            format!("needs dim + 1 = {} entries, got {}", dim + 1, scales.len()),
                        ));
                    }
                    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                        return Err(field("problem.feature_scales", "entries must be positive".into()));
                    }
                }
            }
            ProblemSpec::LogisticIdx {
                images, labels, digits, ..
            } => {
                for (name, path) in [("problem.images", images), ("problem.labels", labels)] {
                    if !path.is_file() {
                        return Err(field(name, format!("{} does not exist", path.display())));
                    }
                }
                if digits[0] == digits[1] || digits.iter().any(|d| *d > 9) {
                    return Err(field("problem.digits", format!("need two distinct digits, got {digits:?}")));
                }
            }
        }
        let topology = self.topology().map_err(|e| field("topology", e.to_string()))?;
        if topology.agents() != agents {
            return Err(field(
                "topology",
                format!("{} agents, but the problem has {agents}", topology.agents()),
            ));
        }
        Ok(())
    }
}

/// `kind:m`, or an edge-list file when `spec` names an existing file.
pub fn resolve_topology(spec: &str) -> Result<Topology> {
    let path = Path::new(spec);
    if path.is_file() {
        Topology::from_edge_list(&std::fs::read_to_string(path)?)
    } else {
        Topology::from_spec(spec)
    }
}
