use std::fmt;

use serde::Serialize;

use crate::algorithms::{build_preconditioner, run, AlgorithmConfig, NetworkState, Preconditioner, StopReason};
use crate::costs::ProblemInstance;
use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;

use super::config::{MethodLabel, MethodSpec};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub gamma: f64,
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alpha={} beta={} h={} gamma={}", self.alpha, self.beta, self.h, self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub h: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl TuneGrid {
    pub fn from_spec(spec: &MethodSpec) -> Self {
        TuneGrid {
            alpha: spec.alpha.values(),
            beta: spec.beta.values(),
            h: spec.h.values(),
            gamma: spec.gamma.values(),
        }
    }

    /// Cells in lexicographic `(α, β, h, γ)` order. Axes a method ignores
    /// collapse to their smallest value.
    pub fn cells(&self, label: MethodLabel) -> Vec<GridCell> {
        let sorted = |v: &[f64], used: bool| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            if !used {
                v.truncate(1);
            }
            v
        };
        let alphas = sorted(&self.alpha, true);
        let betas = sorted(&self.beta, label.uses_beta());
        let hs = sorted(&self.h, true);
        let gammas = sorted(&self.gamma, label.preconditioned());
        let mut cells = Vec::new();
        for &alpha in &alphas {
            for &beta in &betas {
                for &h in &hs {
                    for &gamma in &gammas {
                        cells.push(GridCell { alpha, beta, h, gamma });
                    }
                }
            }
        }
        cells
    }
}

/// Iteration budget and stop tolerances shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub budget: usize,
    pub grad_tol: f64,
    pub consensus_tol: f64,
    /// Cap each cell's budget at the best score so far. Cells cut short are
    /// reported as [`CellOutcome::Pruned`]; the selected cell is unchanged.
    pub prune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Converged,
    Budget,
    Pruned,
    Diverged,
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellScore {
    pub cell: GridCell,
    /// Iterations to tolerance; `None` stands for an infinite score.
    pub iterations: Option<usize>,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub best: GridCell,
    pub best_iterations: usize,
    pub table: Vec<CellScore>,
}

/// Preconditioner for `label` at shift `gamma`.
pub fn preconditioner_for(
    label: MethodLabel,
    problem: &ProblemInstance,
    x0: &[f64],
    gamma: f64,
) -> Result<Preconditioner> {
    if label.preconditioned() {
        build_preconditioner(problem, x0, gamma)
    } else {
        Ok(Preconditioner::identity(problem.agents(), problem.dim()))
    }
}

/// Runs every cell from `initial` and keeps the one reaching tolerance in the
/// fewest iterations; ties go to the lexicographically smallest cell.
pub fn tune_grid(
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    label: MethodLabel,
    grid: &TuneGrid,
    settings: RunSettings,
    initial: &NetworkState,
) -> Result<TuneResult> {
    let cells = grid.cells(label);
    if cells.is_empty() {
        return Err(Error::Search("empty tuning grid".into()));
    }
    let mut table = Vec::with_capacity(cells.len());
    let mut best: Option<(GridCell, usize)> = None;
    let mut cached: Option<(f64, Preconditioner)> = None;
    for cell in cells {
        let budget = match (settings.prune, best) {
            (true, Some((_, b))) => b.saturating_sub(1).min(settings.budget),
            _ => settings.budget,
        };
        let preconditioner = match &cached {
            Some((g, k)) if *g == cell.gamma => k.clone(),
            _ => {
                let k = preconditioner_for(label, problem, &initial.x, cell.gamma)?;
                cached = Some((cell.gamma, k.clone()));
                k
            }
        };
        let config = AlgorithmConfig::new(label.method(), cell.alpha, cell.beta, cell.h, preconditioner)
            .with_budget(budget)
            .with_tolerances(settings.grad_tol, settings.consensus_tol)
            .with_stride(budget.max(1));
        let (iterations, outcome) = match run(problem, lap, &config, initial.clone(), None) {
            Ok(trace) => match trace.stop {
                StopReason::Converged => (trace.converged_at, CellOutcome::Converged),
                StopReason::Budget if budget < settings.budget => (None, CellOutcome::Pruned),
                StopReason::Budget => (None, CellOutcome::Budget),
            },
            Err(Error::Diverged { .. }) => (None, CellOutcome::Diverged),
            Err(Error::InvalidParameter(msg)) => (None, CellOutcome::Rejected(msg)),
            Err(e) => return Err(e),
        };
        if let Some(it) = iterations {
            if best.is_none_or(|(_, b)| it < b) {
                best = Some((cell, it));
            }
        }
        table.push(CellScore {
            cell,
            iterations,
            outcome,
        });
    }
    match best {
        Some((best, best_iterations)) => Ok(TuneResult {
            best,
            best_iterations,
            table,
        }),
        None => Err(Error::Search(format!(
            "no cell of the {label} grid reached tolerance:\n{}",
            table
                .iter()
                .map(|s| format!("  {} -> {:?}", s.cell, s.outcome))
                .collect::<Vec<_>>()
                .join("\n")
        ))),
    }
}
