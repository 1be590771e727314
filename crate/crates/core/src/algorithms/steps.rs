use crate::costs::{l2, ProblemInstance};
use crate::error::{Error, Result};
use crate::graph::LaplacianOperator;

use super::{AlgorithmConfig, Auxiliary, Method, NetworkState};

fn check_dims(state: &NetworkState, problem: &ProblemInstance, lap: &LaplacianOperator) -> Result<()> {
    let n = problem.stacked_len();
    if lap.agents() != problem.agents() || lap.block_dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: lap.stacked_len(),
        });
    }
    for len in [state.x.len(), state.v.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    Ok(())
}

fn require(config: &AlgorithmConfig, allowed: &[Method], op: &str) -> Result<()> {
    if allowed.contains(&config.method) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{op} does not apply to method {}",
            config.method
        )))
    }
}

fn finite_or_diverged(next: NetworkState, prev: &NetworkState) -> Result<NetworkState> {
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::Diverged {
            iteration: next.k,
            last_finite: Box::new(prev.clone()),
        })
    }
}

/// Vector field of the continuous-time PI-family flow.
///
/// PI consensus (pre-conditioned): `ẋ_i = K_i(Σ_j (x_j − x_i) − β Σ_j (v_j − v_i) − α∇f_i(x_i))`,
/// `v̇_i = K_i β Σ_j (x_j − x_i)`.
///
/// PI: `ẋ_i = Σ_j (x_j − x_i) − β v_i − α∇f_i(x_i)`, `v̇_i = −β Σ_j (x_j − x_i)`.
pub fn continuous_rhs(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    require(config, &[Method::PiConsensus, Method::Pi], "continuous_rhs")?;
    check_dims(state, problem, lap)?;
    let n = state.x.len();
    let mut dx = vec![0.0; n];
    let mut dv = vec![0.0; n];
    rhs_into(&state.x, &state.v, problem, lap, config, &mut dx, &mut dv);
    Ok((dx, dv))
}

pub(crate) fn rhs_into(
    x: &[f64],
    v: &[f64],
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
    dx: &mut [f64],
    dv: &mut [f64],
) {
    let d = problem.dim();
    let (alpha, beta) = (config.alpha, config.beta);
    let mut cx = vec![0.0; d];
    let mut cv = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut inner = vec![0.0; d];
    for i in 0..problem.agents() {
        let span = i * d..(i + 1) * d;
        lap.neighbor_disagreement_into(x, i, &mut cx);
        problem.local(i).gradient_into(&x[span.clone()], &mut grad);
        match config.method {
            Method::PiConsensus => {
                lap.neighbor_disagreement_into(v, i, &mut cv);
                for k in 0..d {
                    inner[k] = cx[k] - beta * cv[k] - alpha * grad[k];
                }
                config
                    .preconditioner
                    .apply_block_into(i, &inner, &mut dx[span.clone()]);
                for k in 0..d {
                    inner[k] = beta * cx[k];
                }
                config.preconditioner.apply_block_into(i, &inner, &mut dv[span]);
            }
            Method::Pi => {
                let vi = &v[span.clone()];
                for k in 0..d {
                    dx[i * d + k] = cx[k] - beta * vi[k] - alpha * grad[k];
                    dv[i * d + k] = -beta * cx[k];
                }
            }
            _ => unreachable!("checked by caller"),
        }
    }
}

fn euler(state: &NetworkState, dx: &[f64], dv: &[f64], h: f64) -> NetworkState {
    NetworkState {
        x: state.x.iter().zip(dx).map(|(x, d)| x + h * d).collect(),
        v: state.v.iter().zip(dv).map(|(v, d)| v + h * d).collect(),
        k: state.k + 1,
        t: state.t + h,
        aux: Auxiliary::None,
    }
}

/// One explicit Euler round of pre-conditioned PI consensus: `state + h · rhs(state)`.
pub fn pi_consensus_step(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<NetworkState> {
    require(config, &[Method::PiConsensus], "pi_consensus_step")?;
    let (dx, dv) = continuous_rhs(state, problem, lap, config)?;
    finite_or_diverged(euler(state, &dx, &dv, config.h), state)
}

/// One explicit Euler round of the PI algorithm. The preconditioner is not used.
pub fn pi_step(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<NetworkState> {
    require(config, &[Method::Pi], "pi_step")?;
    let (dx, dv) = continuous_rhs(state, problem, lap, config)?;
    finite_or_diverged(euler(state, &dx, &dv, config.h), state)
}

/// `W x` with `W = I − h L̃`.
fn mix(x: &[f64], lap: &LaplacianOperator, h: f64) -> Vec<f64> {
    let d = lap.block_dim();
    let mut out = x.to_vec();
    let mut c = vec![0.0; d];
    for i in 0..lap.agents() {
        lap.neighbor_disagreement_into(x, i, &mut c);
        for k in 0..d {
            out[i * d + k] += h * c[k];
        }
    }
    out
}

/// One round of DGD, EXTRA or DIGing with mixing matrix `W = I − hL̃`.
///
/// Auxiliary conventions: EXTRA starts with `x¹ = W x⁰ − α∇F(x⁰)` and then
/// `x^{k+2} = (I+W)x^{k+1} − W̃x^k − α(∇F(x^{k+1}) − ∇F(x^k))`, `W̃ = (I+W)/2`.
/// DIGing starts its tracker at `y⁰ = ∇F(x⁰)` and iterates
/// `x⁺ = Wx − αy`, `y⁺ = Wy + ∇F(x⁺) − ∇F(x)`. A state without auxiliary
/// data is treated as iteration zero.
pub fn baseline_step(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<NetworkState> {
    require(config, &[Method::Dgd, Method::Extra, Method::Diging], "baseline_step")?;
    check_dims(state, problem, lap)?;
    let h = config.h;
    if h * lap.max_degree() as f64 >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "mixing weight h={h} leaves a non-positive diagonal in W (max degree {})",
            lap.max_degree()
        )));
    }
    let alpha = config.alpha;
    let grad = |x: &[f64]| {
        let mut g = vec![0.0; x.len()];
        problem.cumulative_gradient_into(x, &mut g);
        g
    };

    let (x, aux) = match config.method {
        Method::Dgd => {
            let g = grad(&state.x);
            let wx = mix(&state.x, lap, h);
            let x = wx.iter().zip(&g).map(|(w, g)| w - alpha * g).collect();
            (x, Auxiliary::None)
        }
        Method::Extra => match &state.aux {
            Auxiliary::Extra { prev_x, prev_grad } if !prev_x.is_empty() => {
                let g = grad(&state.x);
                let wx = mix(&state.x, lap, h);
                let wp = mix(prev_x, lap, h);
                let x = (0..state.x.len())
                    .map(|r| {
                        state.x[r] + wx[r] - 0.5 * (prev_x[r] + wp[r]) - alpha * (g[r] - prev_grad[r])
                    })
                    .collect();
                (
                    x,
                    Auxiliary::Extra {
                        prev_x: state.x.clone(),
                        prev_grad: g,
                    },
                )
            }
            _ => {
                let g = grad(&state.x);
                let wx = mix(&state.x, lap, h);
                let x = wx.iter().zip(&g).map(|(w, g)| w - alpha * g).collect();
                (
                    x,
                    Auxiliary::Extra {
                        prev_x: state.x.clone(),
                        prev_grad: g,
                    },
                )
            }
        },
        Method::Diging => {
            let (y, g) = match &state.aux {
                Auxiliary::Diging { y, grad } => (y.clone(), grad.clone()),
                _ => {
                    let g = grad(&state.x);
                    (g.clone(), g)
                }
            };
            let wx = mix(&state.x, lap, h);
            let x: Vec<f64> = wx.iter().zip(&y).map(|(w, y)| w - alpha * y).collect();
            let g_next = grad(&x);
            let wy = mix(&y, lap, h);
            let y_next = (0..x.len()).map(|r| wy[r] + g_next[r] - g[r]).collect();
            (
                x,
                Auxiliary::Diging {
                    y: y_next,
                    grad: g_next,
                },
            )
        }
        _ => unreachable!("checked above"),
    };
    let next = NetworkState {
        x,
        v: state.v.clone(),
        k: state.k + 1,
        t: state.t + h,
        aux,
    };
    finite_or_diverged(next, state)
}

/// Dispatches on `config.method`.
pub fn step(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<NetworkState> {
    match config.method {
        Method::PiConsensus => pi_consensus_step(state, problem, lap, config),
        Method::Pi => pi_step(state, problem, lap, config),
        Method::Dgd | Method::Extra | Method::Diging => baseline_step(state, problem, lap, config),
    }
}

/// Size of one round's displacement divided by `h`.
///
/// For the PI family this is `‖(ẋ, v̇)‖`, which vanishes exactly at
/// equilibria of the flow.
pub fn equilibrium_residual(
    state: &NetworkState,
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    config: &AlgorithmConfig,
) -> Result<f64> {
    if config.method.is_pi_family() {
        let (dx, dv) = continuous_rhs(state, problem, lap, config)?;
        return Ok((l2(&dx).powi(2) + l2(&dv).powi(2)).sqrt());
    }
    let next = baseline_step(state, problem, lap, config)?;
    let moved: Vec<f64> = next.x.iter().zip(&state.x).map(|(a, b)| a - b).collect();
    Ok(l2(&moved) / config.h)
}
