//! Executable counterparts of the convergence analysis: RSI and Lipschitz
//! estimation, parameter feasibility, Lyapunov monitoring, rate fitting and
//! consensus metrics.

mod estimates;
mod feasibility;
mod lyapunov;
mod rate;

pub use estimates::{gradient_check, hessian_check, lipschitz_estimate, rsi_estimate, SampleBox};
pub use feasibility::{
    check_feasibility, suggest_parameters, suggest_stepsize, FeasibilityCase, FeasibilityInputs,
    FeasibilityReport, SuggestedParameters,
};
pub use lyapunov::{
    integral_limit, lyapunov_v2, lyapunov_value, Certificate, LyapunovMonitor, LyapunovSample,
    LyapunovWeights,
};
pub use rate::{estimate_rate, estimate_rate_sampled, RateEstimate};

/// Mean of the `m` agent blocks of a stacked vector.
pub fn agent_mean(x: &[f64], m: usize, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for block in x.chunks(d).take(m) {
        for (acc, v) in mean.iter_mut().zip(block) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    mean
}

/// `max_i ‖x_i − x̄‖`.
pub fn consensus_error(x: &[f64], m: usize, d: usize) -> f64 {
    assert_eq!(x.len(), m * d, "stacked vector length");
    let mean = agent_mean(x, m, d);
    x.chunks(d)
        .map(|block| {
            block
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
