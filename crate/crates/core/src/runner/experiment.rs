use std::collections::hash_map::DefaultHasher;
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::algorithms::{run, AlgorithmConfig, Method, Monitor, NetworkState, StopReason, Trace};
use crate::analysis::{estimate_rate_sampled, LyapunovMonitor, LyapunovWeights};
use crate::costs::{build_logistic, build_quadratic_suite, build_rsi_suite, ProblemInstance};
use crate::data_io::{filter_binary, partition, read_idx_file, synthetic_logistic, Dataset};
use crate::error::{Error, Result};
use crate::graph::{effective_connectivity, laplacian, spectral_interval, LaplacianOperator};

use super::config::{ExperimentConfig, MethodLabel, MethodSpec, ProblemSpec};
use super::plotdata::emit_plotdata;
use super::tune::{preconditioner_for, tune_grid, GridCell, RunSettings, TuneGrid, TuneResult};

/// Largest stacked dimension for which the effective connectivity is computed densely.
const DENSE_SPECTRUM_LIMIT: usize = 1500;

// Independent streams derived from the experiment seed.
const X0_STREAM: u64 = 0x5851_f42d_4c95_7f2d;
const V0_STREAM: u64 = 0x1405_7b7e_f767_814f;
const PARTITION_STREAM: u64 = 0x2545_f491_4f6c_dd1d;

pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<ProblemInstance> {
    match spec {
        ProblemSpec::RsiSuite {
            agents,
            dim,
            c,
            offsets,
        } => {
            let offsets = offsets.clone().unwrap_or_else(|| {
                (0..*agents)
                    .map(|i| -2.0 + 4.0 * i as f64 / (*agents as f64 - 1.0))
                    .collect()
            });
            build_rsi_suite(*agents, *dim, &offsets, *c)
        }
        ProblemSpec::Quadratic {
            agents,
            dim,
            condition_number,
            shared_basis,
        } => build_quadratic_suite(*agents, *dim, *condition_number, *shared_basis, seed),
        ProblemSpec::LogisticSynthetic {
            agents,
            samples,
            dim,
            separation,
            feature_scales,
        } => {
            let mut data = synthetic_logistic(*samples, *dim, *separation, seed)?;
            if let Some(scales) = feature_scales {
                data.scale_columns(scales)?;
            }
            build_logistic(&partition(&data, *agents, seed ^ PARTITION_STREAM)?)
        }
        ProblemSpec::LogisticIdx {
            agents,
            images,
            labels,
            digits,
            max_samples,
        } => {
            let data = filter_binary(&read_idx_file(images)?, &read_idx_file(labels)?, digits[0], digits[1])?;
            let data = match max_samples {
                Some(n) if *n < data.len() => {
                    Dataset::new(data.features().rows(0, *n).into_owned(), data.labels()[..*n].to_vec())?
                }
                _ => data,
            };
            build_logistic(&partition(&data, *agents, seed ^ PARTITION_STREAM)?)
        }
    }
}

fn normal_vector(n: usize, std: f64, seed: u64) -> Vec<f64> {
    if std == 0.0 {
        return vec![0.0; n];
    }
    let normal = Normal::new(0.0, std).expect("std validated non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Initial estimates shared by every method: i.i.d. `N(0, std²)` entries.
pub fn initial_estimates(n: usize, std: f64, seed: u64) -> Vec<f64> {
    normal_vector(n, std, seed ^ X0_STREAM)
}

/// Random integral state for PI consensus; the PI algorithm always starts from zero.
pub fn initial_integral(label: MethodLabel, n: usize, std: f64, seed: u64) -> Vec<f64> {
    match label.method() {
        Method::PiConsensus => normal_vector(n, std, seed ^ V0_STREAM),
        _ => vec![0.0; n],
    }
}

/// Hash of the exact bit patterns of `x`, used to assert identical starts.
pub fn fingerprint(x: &[f64]) -> String {
    let mut hasher = DefaultHasher::new();
    for v in x {
        v.to_bits().hash(&mut hasher);
    }
    format!("{:016x}", hasher.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub gamma: f64,
    pub tuned: bool,
    pub status: String,
    pub error: Option<String>,
    pub iterations_to_tol: Option<usize>,
    pub iterations: usize,
    pub final_cost: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub final_consensus_err: Option<f64>,
    pub final_dist_to_opt: Option<f64>,
    pub rho: Option<f64>,
    pub rho_r_squared: Option<f64>,
    /// Smallest nonzero eigenvalue of `hβK L̃` divided by that of `L`.
    pub effective_connectivity_ratio: Option<f64>,
    pub scalars_communicated: usize,
    pub bytes_communicated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    /// Fingerprint of the shared initial estimates.
    pub x0_fingerprint: String,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub methods: Vec<MethodSummary>,
    pub tuning: Vec<(String, TuneResult)>,
}

impl ComparisonReport {
    pub fn method(&self, label: MethodLabel) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == label.name())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ComparisonReport,
    pub traces: Vec<(MethodLabel, Trace)>,
}

/// Everything needed to run one method from the shared start.
pub struct Setup {
    pub problem: ProblemInstance,
    pub laplacian: LaplacianOperator,
    pub x0: Vec<f64>,
}

impl Setup {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let problem = build_problem(&config.problem, config.seed)?;
        let topology = config.topology()?;
        let lap = laplacian(&topology, problem.dim())?;
        let x0 = initial_estimates(problem.stacked_len(), config.init_std, config.seed);
        Ok(Setup {
            problem,
            laplacian: lap,
            x0,
        })
    }

    pub fn initial_state(&self, label: MethodLabel, config: &ExperimentConfig) -> NetworkState {
        let v0 = initial_integral(label, self.x0.len(), config.init_std, config.seed);
        NetworkState::new(self.x0.clone(), v0).expect("lengths agree")
    }

    fn settings(config: &ExperimentConfig, prune: bool) -> RunSettings {
        RunSettings {
            budget: config.max_iters,
            grad_tol: config.grad_tol,
            consensus_tol: config.consensus_tol,
            prune,
        }
    }

    pub fn tune(&self, spec: &MethodSpec, config: &ExperimentConfig) -> Result<TuneResult> {
        let initial = self.initial_state(spec.method, config);
        tune_grid(
            &self.problem,
            &self.laplacian,
            spec.method,
            &TuneGrid::from_spec(spec),
            Self::settings(config, true),
            &initial,
        )
    }

    /// Runs `label` at `cell`, attaching a Lyapunov monitor when requested and possible.
    pub fn run_cell(
        &self,
        label: MethodLabel,
        cell: GridCell,
        config: &ExperimentConfig,
    ) -> Result<(Trace, Option<f64>)> {
        let initial = self.initial_state(label, config);
        let k = preconditioner_for(label, &self.problem, &self.x0, cell.gamma)?;
        let algo = AlgorithmConfig::new(label.method(), cell.alpha, cell.beta, cell.h, k)
            .with_budget(config.max_iters)
            .with_tolerances(config.grad_tol, config.consensus_tol)
            .with_stride(config.record_stride);
        let mut monitor = match (&config.lyapunov, label.method(), self.problem.minimizer()) {
            (Some(w), Method::PiConsensus, Some(_)) => Some(LyapunovMonitor::new(
                &self.problem,
                &self.laplacian,
                &algo,
                &initial.v,
                LyapunovWeights::new(w.c1, w.c2, w.c3)?,
            )?),
            _ => None,
        };
        let trace = run(
            &self.problem,
            &self.laplacian,
            &algo,
            initial,
            monitor.as_mut().map(|m| m as &mut dyn Monitor),
        )?;
        let ratio = if label.method().is_pi_family() && self.problem.stacked_len() <= DENSE_SPECTRUM_LIMIT {
            let (lambda_min, _) = spectral_interval(&self.laplacian)?;
            Some(effective_connectivity(cell.h, cell.beta, &algo.preconditioner, &self.laplacian)? / lambda_min)
        } else {
            None
        };
        Ok((trace, ratio))
    }
}

fn summarize(label: MethodLabel, cell: GridCell, tuned: bool, trace: &Trace, ratio: Option<f64>) -> MethodSummary {
    let last = trace.last();
    let (ks, series): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .map(|r| (r.k as f64, r.dist_to_opt.unwrap_or(r.grad_norm)))
        .filter(|(_, v)| *v > 0.0)
        .unzip();
    let rate = estimate_rate_sampled(&ks, &series, None).ok();
    let scalars = trace.scalars_communicated();
    MethodSummary {
        method: label.name().into(),
        alpha: cell.alpha,
        beta: cell.beta,
        h: cell.h,
        gamma: cell.gamma,
        tuned,
        status: match trace.stop {
            StopReason::Converged => "converged".into(),
            StopReason::Budget => "budget".into(),
        },
        error: None,
        iterations_to_tol: trace.converged_at,
        iterations: trace.iterations,
        final_cost: Some(last.aggregate_cost),
        final_grad_norm: Some(last.grad_norm),
        final_consensus_err: Some(last.consensus_err),
        final_dist_to_opt: last.dist_to_opt,
        rho: rate.map(|r| r.rho),
        rho_r_squared: rate.map(|r| r.r_squared),
        effective_connectivity_ratio: ratio,
        scalars_communicated: scalars,
        bytes_communicated: scalars * std::mem::size_of::<f64>(),
    }
}

fn failed(label: MethodLabel, cell: Option<GridCell>, tuned: bool, err: &Error) -> MethodSummary {
    let cell = cell.unwrap_or(GridCell {
        alpha: f64::NAN,
        beta: f64::NAN,
        h: f64::NAN,
        gamma: f64::NAN,
    });
    MethodSummary {
        method: label.name().into(),
        alpha: cell.alpha,
        beta: cell.beta,
        h: cell.h,
        gamma: cell.gamma,
        tuned,
        status: "failed".into(),
        error: Some(err.to_string()),
        iterations_to_tol: None,
        iterations: match err {
            Error::Diverged { iteration, .. } => *iteration,
            _ => 0,
        },
        final_cost: None,
        final_grad_norm: None,
        final_consensus_err: None,
        final_dist_to_opt: None,
        rho: None,
        rho_r_squared: None,
        effective_connectivity_ratio: None,
        scalars_communicated: 0,
        bytes_communicated: 0,
    }
}

fn single_cell(spec: &MethodSpec) -> GridCell {
    GridCell {
        alpha: spec.alpha.values()[0],
        beta: spec.beta.values()[0],
        h: spec.h.values()[0],
        gamma: spec.gamma.values()[0],
    }
}

/// Runs every configured method from the same initial estimates; methods
/// given as grids are tuned first. Per-method failures are recorded in the
/// report rather than aborting the experiment.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let setup = Setup::from_config(config)?;
    let x0_fingerprint = fingerprint(&setup.x0);
    let (lambda_min, lambda_max) = spectral_interval(&setup.laplacian)?;
    let mut methods = Vec::new();
    let mut traces = Vec::new();
    let mut tuning = Vec::new();
    for spec in &config.methods {
        let label = spec.method;
        let tuned = spec.is_grid();
        let cell = if tuned {
            match setup.tune(spec, config) {
                Ok(result) => {
                    let best = result.best;
                    tuning.push((label.name().to_string(), result));
                    best
                }
                Err(e) => {
                    let text = e.to_string();
                    log::warn!("{label}: tuning failed: {}", text.lines().next().unwrap_or_default());
                    log::debug!("{label}: {text}");
                    methods.push(failed(label, None, tuned, &e));
                    continue;
                }
            }
        } else {
            single_cell(spec)
        };
        assert_eq!(
            fingerprint(&setup.initial_state(label, config).x),
            x0_fingerprint,
            "every method starts from the shared estimates"
        );
        match setup.run_cell(label, cell, config) {
            Ok((trace, ratio)) => {
                methods.push(summarize(label, cell, tuned, &trace, ratio));
                traces.push((label, trace));
            }
            Err(e) => {
                log::warn!("{label}: run failed: {e}");
                methods.push(failed(label, Some(cell), tuned, &e));
            }
        }
    }
    Ok(ExperimentOutcome {
        report: ComparisonReport {
            seed: config.seed,
            x0_fingerprint,
            lambda_min,
            lambda_max,
            methods,
            tuning,
        },
        traces,
    })
}

/// Writes one trace CSV per method with columns
/// `k,f,grad_norm,consensus_err` plus `dist_to_opt`, `V`, `V2` when recorded.
pub fn write_trace_csv<W: Write>(trace: &Trace, writer: W) -> Result<()> {
    let has = |f: &dyn Fn(&crate::algorithms::TraceRecord) -> Option<f64>| trace.records.iter().any(|r| f(r).is_some());
    let dist = has(&|r| r.dist_to_opt);
    let v = has(&|r| r.lyapunov_v);
    let v2 = has(&|r| r.lyapunov_v2);
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["k", "f", "grad_norm", "consensus_err"];
    for (flag, name) in [(dist, "dist_to_opt"), (v, "V"), (v2, "V2")] {
        if flag {
            header.push(name);
        }
    }
    out.write_record(&header)?;
    let cell = |x: Option<f64>| x.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            format!("{:e}", r.aggregate_cost),
            format!("{:e}", r.grad_norm),
            format!("{:e}", r.consensus_err),
        ];
        for (flag, value) in [(dist, r.dist_to_opt), (v, r.lyapunov_v), (v2, r.lyapunov_v2)] {
            if flag {
                row.push(cell(value));
            }
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `<method>.csv`, `summary.csv`, `plotdata.csv` and `report.json` into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (label, trace) in &outcome.traces {
        write_trace_csv(trace, fs::File::create(dir.join(format!("{label}.csv")))?)?;
    }
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    for row in &outcome.report.methods {
        summary.serialize(row)?;
    }
    summary.flush()?;
    let named: Vec<(&str, &Trace)> = outcome.traces.iter().map(|(l, t)| (l.name(), t)).collect();
    emit_plotdata(&named, fs::File::create(dir.join("plotdata.csv"))?)?;
    let json = serde_json::to_string_pretty(&outcome.report)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    Ok(())
}

/// [`execute`] followed by [`write_outputs`] into `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ComparisonReport> {
    let outcome = execute(config)?;
    write_outputs(&outcome, &config.out)?;
    Ok(outcome.report)
}
