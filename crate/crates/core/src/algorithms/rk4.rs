use crate::costs::ProblemInstance;
use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;

use super::steps::rhs_into;
use super::{AlgorithmConfig, NetworkState};

/// One classical fourth-order Runge–Kutta step of `ẏ = f(y)`.
pub fn rk4_step<F>(y: &[f64], rhs: &mut F, h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(a, k)| a + s * k).collect()
    };
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, &k1, 0.5 * h));
    let k3 = rhs(&axpy(y, &k2, 0.5 * h));
    let k4 = rhs(&axpy(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 trajectory `[y(0), y(h), …, y(steps·h)]`.
pub fn rk4_integrate<F>(y0: &[f64], mut rhs: F, h: f64, steps: usize) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("RK4 step must be positive, got {h}")));
    }
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y0.to_vec());
    for s in 0..steps {
        let next = rk4_step(out.last().expect("nonempty"), &mut rhs, h);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: s + 1,
                last_finite: Box::new(
                    split(out.last().expect("nonempty"), s, s as f64 * h),
                ),
            });
        }
        out.push(next);
    }
    Ok(out)
}

fn split(y: &[f64], k: usize, t: f64) -> NetworkState {
    let n = y.len() / 2;
    let mut state = NetworkState::with_zero_integral(y[..n].to_vec());
    state.v = y[n..].to_vec();
    state.k = k;
    state.t = t;
    state
}

/// Integrates the continuous PI-family flow with RK4, returning the state
/// every `record_every` steps (plus the final one).
pub fn integrate_network(
    initial: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
    h: f64,
    steps: usize,
    record_every: usize,
) -> Result<Vec<NetworkState>> {
    if !config.method.is_pi_family() {
        return Err(Error::InvalidParameter(format!(
            "{} has no continuous-time form",
            config.method
        )));
    }
    if !(h > 0.0) || record_every == 0 {
        return Err(Error::InvalidParameter("RK4 needs h > 0 and record_every ≥ 1".into()));
    }
    let n = problem.stacked_len();
    if initial.x.len() != n || initial.v.len() != n || lap.stacked_len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: initial.x.len(),
        });
    }
    let mut rhs = |y: &[f64]| {
        let mut out = vec![0.0; 2 * n];
        let (dx, dv) = out.split_at_mut(n);
        rhs_into(&y[..n], &y[n..], problem, lap, config, dx, dv);
        out
    };
    let mut y: Vec<f64> = initial.x.iter().chain(&initial.v).copied().collect();
    let mut records = vec![split(&y, 0, initial.t)];
    for s in 1..=steps {
        let next = rk4_step(&y, &mut rhs, h);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                iteration: s,
                last_finite: Box::new(split(&y, s - 1, initial.t + (s - 1) as f64 * h)),
            });
        }
        y = next;
        if s % record_every == 0 || s == steps {
            records.push(split(&y, s, initial.t + s as f64 * h));
        }
    }
    Ok(records)
}
