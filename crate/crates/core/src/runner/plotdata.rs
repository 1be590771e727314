use std::io::Write;

use serde::Serialize;

use crate::algorithms::Trace;
use crate::error::Result;

/// Metric names of the long-format plot data.
pub const METRICS: [&str; 4] = ["aggregate_cost", "grad_norm", "consensus_err", "dist_to_opt"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub method: String,
    pub k: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// One row per (method, recorded iteration, metric); `dist_to_opt` only where known.
pub fn plot_rows(traces: &[(&str, &Trace)]) -> Vec<PlotRow> {
    let mut rows = Vec::new();
    for (method, trace) in traces {
        for r in &trace.records {
            let values = [
                Some(r.aggregate_cost),
                Some(r.grad_norm),
                Some(r.consensus_err),
                r.dist_to_opt,
            ];
            for (metric, value) in METRICS.iter().zip(values) {
                if let Some(value) = value {
                    rows.push(PlotRow {
                        method: method.to_string(),
                        k: r.k,
                        metric,
                        value,
                    });
                }
            }
        }
    }
    rows
}

/// Writes `method,k,metric,value` rows.
pub fn emit_plotdata<W: Write>(traces: &[(&str, &Trace)], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["method", "k", "metric", "value"])?;
    for row in plot_rows(traces) {
        out.write_record([row.method, row.k.to_string(), row.metric.to_string(), format!("{:e}", row.value)])?;
    }
    out.flush()?;
    Ok(())
}
