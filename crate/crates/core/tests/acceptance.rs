//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use pic_core::algorithms::{
    build_preconditioner, continuous_rhs, integrate_network, pi_consensus_step, pi_step, run, step,
    AlgorithmConfig, Auxiliary, Method, NetworkState, Preconditioner,
};
use pic_core::analysis::{
    check_feasibility, estimate_rate_sampled, gradient_check, suggest_parameters, suggest_stepsize,
    FeasibilityInputs, LyapunovMonitor, LyapunovWeights,
};
use pic_core::costs::{
    build_logistic, build_quadratic_suite, build_rsi_suite, CostFunction, LogisticCost, ProblemInstance,
    QuadraticCost, RsiNonconvexCost,
};
use pic_core::data_io::{partition, synthetic_logistic};
use pic_core::graph::{effective_connectivity, laplacian, spectral_interval, LaplacianOperator, Topology};
use pic_core::runner::{preconditioner_for, tune_grid, MethodLabel, RunSettings, TuneGrid, TuneResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, std).unwrap();
    (0..n).map(|_| normal.sample(rng)).collect()
}

fn max_block_distance(x: &[f64], target: &[f64]) -> f64 {
    let d = target.len();
    x.chunks(d)
        .map(|b| b.iter().zip(target).map(|(a, t)| (a - t).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

struct RsiSetup {
    problem: ProblemInstance,
    lap: LaplacianOperator,
    config: AlgorithmConfig,
    initial: NetworkState,
}

fn rsi_setup() -> Result<RsiSetup, String> {
    let m = 5;
    let offsets: Vec<f64> = (0..m).map(|i| -2.0 + i as f64).collect();
    let problem = build_rsi_suite(m, 1, &offsets, 1.5).map_err(|e| e.to_string())?;
    let lap = laplacian(&Topology::from_spec("ring:5").unwrap(), 1).map_err(|e| e.to_string())?;
    let (lambda_min, lambda_max) = spectral_interval(&lap).map_err(|e| e.to_string())?;
    let (mu, lf) = (problem.mu.unwrap(), problem.lipschitz.unwrap());
    let s = suggest_parameters(mu, lf, lambda_min, m).map_err(|e| e.to_string())?;
    let h = suggest_stepsize(s.alpha, s.beta, lf, lambda_max, 1.0);
    let config = AlgorithmConfig::new(Method::PiConsensus, s.alpha, s.beta, h, Preconditioner::identity(m, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x0: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let v0 = normal_vec(&mut rng, m, 0.1);
    Ok(RsiSetup {
        problem,
        lap,
        config,
        initial: NetworkState::new(x0, v0).unwrap(),
    })
}

/// Linear convergence of the discrete iteration on the nonconvex RSI suite.
fn criterion_1() -> Outcome {
    let started = Instant::now();
    let s = rsi_setup()?;
    let witness = (0..5).all(|i| {
        let shift = s.problem.local(i).known_minimizer().unwrap_or_else(|| vec![-2.0 + i as f64]);
        let t = shift[0] + std::f64::consts::FRAC_PI_2;
        s.problem.local(i).hessian(&[t]).unwrap()[(0, 0)] < 0.0
    });
    let cfg = s.config.clone().with_budget(20_000).with_tolerances(1e-300, 1e-300);
    let trace = run(&s.problem, &s.lap, &cfg, s.initial.clone(), None).map_err(|e| e.to_string())?;
    let (ks, r): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .map(|rec| (rec.k as f64, rec.dist_to_opt.unwrap()))
        .unzip();
    let fit = estimate_rate_sampled(&ks, &r, None).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    check(
        witness && fit.rho < 1.0 && fit.r_squared > 0.99 && elapsed < 10.0,
        format!(
            "nonconvex={witness} alpha={:.4} beta={} h={:.4} rho={:.6} R2={:.6} points={} time={elapsed:.2}s",
            cfg.alpha, cfg.beta, cfg.h, fit.rho, fit.r_squared, fit.points
        ),
    )
}

/// Exponential decay of the continuous flow integrated with RK4 over [0, 50].
fn criterion_2() -> Outcome {
    let s = rsi_setup()?;
    let dt = 0.01;
    let steps = 5000;
    let states =
        integrate_network(&s.initial, &s.problem, &s.lap, &s.config, dt, steps, 10).map_err(|e| e.to_string())?;
    let x_star = s.problem.minimizer().unwrap().to_vec();
    let (ts, r): (Vec<f64>, Vec<f64>) = states
        .iter()
        .map(|st| {
            let dist = st.x.iter().map(|x| (x - x_star[0]).powi(2)).sum::<f64>().sqrt();
            (st.t, dist)
        })
        .unzip();
    let fit = estimate_rate_sampled(&ts, &r, None).map_err(|e| e.to_string())?;
    check(
        fit.rho < 1.0 && fit.r_squared > 0.99 && ts.last().copied() == Some(50.0),
        format!(
            "decay rate {:.6}/unit time R2={:.6} over t in [{:.0}, {:.0}], final error {:.3e}",
            -fit.rho.ln(),
            fit.r_squared,
            ts[fit.burn_in],
            ts[fit.burn_in + fit.points - 1],
            r.last().unwrap()
        ),
    )
}

/// Geometric decrease of the monitored Lyapunov function under feasible parameters.
fn criterion_3() -> Outcome {
    let (m, d) = (5, 2);
    let problem = build_quadratic_suite(m, d, 10.0, false, 3).map_err(|e| e.to_string())?;
    let lap = laplacian(&Topology::from_spec("ring:5").unwrap(), d).map_err(|e| e.to_string())?;
    let (lambda_min, lambda_max) = spectral_interval(&lap).map_err(|e| e.to_string())?;
    let (mu, lf) = (problem.mu.unwrap(), problem.lipschitz.unwrap());
    let s = suggest_parameters(mu, lf, lambda_min, m).map_err(|e| e.to_string())?;
    let report = check_feasibility(s.report.inputs).map_err(|e| e.to_string())?;
    let h = suggest_stepsize(s.alpha, s.beta, lf, lambda_max, 1.0);
    let cfg = AlgorithmConfig::new(Method::PiConsensus, s.alpha, s.beta, h, Preconditioner::identity(m, d))
        .with_budget(20_000)
        .with_tolerances(1e-300, 1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let initial = NetworkState::new(normal_vec(&mut rng, m * d, 1.0), normal_vec(&mut rng, m * d, 1.0)).unwrap();
    let weights = LyapunovWeights::new(s.c1, s.c2, s.c3).map_err(|e| e.to_string())?;
    let mut monitor = LyapunovMonitor::new(&problem, &lap, &cfg, &initial.v, weights).map_err(|e| e.to_string())?;
    run(&problem, &lap, &cfg, initial, Some(&mut monitor)).map_err(|e| e.to_string())?;
    let samples = monitor.samples();
    let floor = 100.0 * f64::EPSILON * samples[0].v;
    let reached = samples.iter().position(|smp| smp.v <= floor);
    let max_ratio = monitor
        .max_ratio_above(100.0 * f64::EPSILON)
        .ok_or("no Lyapunov samples above the floor")?;
    let delta = 1.0 - max_ratio;
    check(
        report.feasible && delta > 0.0 && reached.is_some(),
        format!(
            "feasible={} (c1,c2,c3,beta,alpha,h)=({},{},{},{},{:.4},{:.4}) delta={delta:.3e} floor reached at k={}",
            report.feasible,
            s.c1,
            s.c2,
            s.c3,
            s.beta,
            s.alpha,
            h,
            reached.map_or("never".into(), |k| k.to_string())
        ),
    )
}

/// Robustness to the integral initialization, contrasted with the PI algorithm.
fn criterion_4() -> Outcome {
    let (m, d) = (5, 3);
    let problem = build_quadratic_suite(m, d, 10.0, false, 5).map_err(|e| e.to_string())?;
    let lap = laplacian(&Topology::from_spec("ring:5").unwrap(), d).map_err(|e| e.to_string())?;
    let x_star = problem.minimizer().unwrap().to_vec();
    let (alpha, beta, h) = (0.1, 1.0, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let x0 = normal_vec(&mut rng, m * d, 0.1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v0 = normal_vec(&mut rng, m * d, 1.0);
        let cfg = AlgorithmConfig::new(Method::PiConsensus, alpha, beta, h, Preconditioner::identity(m, d))
            .with_budget(200_000)
            .with_tolerances(1e-10, 1e-10);
        let trace = run(&problem, &lap, &cfg, NetworkState::new(x0.clone(), v0).unwrap(), None)
            .map_err(|e| e.to_string())?;
        worst = worst.max(max_block_distance(&trace.final_state.x, &x_star));
    }

    let v0 = normal_vec(&mut rng, m * d, 1.0);
    let s: Vec<f64> = (0..d).map(|c| v0.iter().skip(c).step_by(d).sum()).collect();
    let cfg = AlgorithmConfig::new(Method::Pi, alpha, beta, h, Preconditioner::identity(m, d))
        .with_budget(200_000)
        .with_tolerances(f64::INFINITY, 1e-12);
    // Stop on consensus alone: the PI limit is not stationary for f.
    let mut state = NetworkState::new(x0, v0).unwrap();
    for _ in 0..200_000 {
        state = step(&state, &problem, &lap, &cfg).map_err(|e| e.to_string())?;
    }
    let mean: Vec<f64> = (0..d).map(|c| state.x.iter().skip(c).step_by(d).sum::<f64>() / m as f64).collect();
    let (_, grad) = problem.aggregate_value_and_gradient(&mean).map_err(|e| e.to_string())?;
    let identity: f64 = (0..d).map(|c| (alpha * grad[c] + beta * s[c]).powi(2)).sum::<f64>().sqrt();
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let settled = max_block_distance(&state.x, &mean);
    check(
        worst < 1e-6 && identity < 1e-6 && grad_norm > 1e-3 && settled < 1e-9,
        format!(
            "pi_consensus worst distance over 20 draws {worst:.3e}; pi: |alpha grad f(xbar) + beta s| = {identity:.3e}, |grad f(xbar)| = {grad_norm:.3e}"
        ),
    )
}

fn grid(alpha: &[f64], beta: &[f64], h: &[f64], gamma: &[f64]) -> TuneGrid {
    TuneGrid {
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        h: h.to_vec(),
        gamma: gamma.to_vec(),
    }
}

fn tuned(
    problem: &ProblemInstance,
    lap: &LaplacianOperator,
    label: MethodLabel,
    g: &TuneGrid,
    budget: usize,
    initial: &NetworkState,
) -> Result<TuneResult, String> {
    let settings = RunSettings {
        budget,
        grad_tol: 1e-8,
        consensus_tol: 1e-8,
        prune: true,
    };
    tune_grid(problem, lap, label, g, settings, initial).map_err(|e| format!("{label}: {e}"))
}

struct IllConditioned {
    precond: TuneResult,
    plain: TuneResult,
    ratio_precond: f64,
    ratio_plain: f64,
}

fn ill_conditioned() -> Result<IllConditioned, String> {
    let (m, d) = (5, 2);
    let problem = build_quadratic_suite(m, d, 1e4, true, 11).map_err(|e| e.to_string())?;
    let lap = laplacian(&Topology::from_spec("ring:5").unwrap(), d).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let initial = NetworkState::new(normal_vec(&mut rng, m * d, 0.1), normal_vec(&mut rng, m * d, 0.1)).unwrap();
    let g = grid(
        &[1e-3, 1e-2, 1e-1, 1.0],
        &[0.5, 1.0, 2.0],
        &[1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0],
        &[1.0, 10.0, 100.0, 1000.0],
    );
    let budget = 250_000;
    let precond = tuned(&problem, &lap, MethodLabel::PiConsensusPrecond, &g, budget, &initial)?;
    let plain = tuned(&problem, &lap, MethodLabel::PiConsensus, &g, budget, &initial)?;
    let (lambda_min, _) = spectral_interval(&lap).map_err(|e| e.to_string())?;
    let ratio = |label: MethodLabel, r: &TuneResult| -> Result<f64, String> {
        let k = preconditioner_for(label, &problem, &initial.x, r.best.gamma).map_err(|e| e.to_string())?;
        Ok(effective_connectivity(r.best.h, r.best.beta, &k, &lap).map_err(|e| e.to_string())? / lambda_min)
    };
    Ok(IllConditioned {
        ratio_precond: ratio(MethodLabel::PiConsensusPrecond, &precond)?,
        ratio_plain: ratio(MethodLabel::PiConsensus, &plain)?,
        precond,
        plain,
    })
}

/// Logistic regression on unstandardized features: the columns of the
/// synthetic clouds are rescaled so their magnitudes differ by a factor of 30,
/// as raw measurements typically do.
fn logistic_ordering() -> Outcome {
    let m = 5;
    let scales = [1.0, 0.1, 3.0, 0.3, 1.0];
    let mut data = synthetic_logistic(250, scales.len() - 1, 1.0, 21).map_err(|e| e.to_string())?;
    data.scale_columns(&scales).map_err(|e| e.to_string())?;
    let problem = build_logistic(&partition(&data, m, 21).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let d = problem.dim();
    let lap = laplacian(&Topology::from_spec("ring:5").unwrap(), d).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let x0 = normal_vec(&mut rng, m * d, 0.1);
    let v0 = normal_vec(&mut rng, m * d, 0.1);
    let budget = 25_000;
    let pi_alphas = [0.03, 0.1, 0.3, 1.0, 3.0];
    let pi_h: Vec<f64> = (0..13).map(|i| 1e-3 * 3f64.powi(i)).collect();
    // The baselines' alpha is their stepsize, so they get a finer axis.
    let mix_alphas: Vec<f64> = (0..12).map(|i| 1e-3 * 1.5f64.powi(i)).collect();
    let mix_h = [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.45];
    let mut scores = Vec::new();
    for label in MethodLabel::ALL {
        let (g, v) = match label {
            MethodLabel::PiConsensusPrecond => (grid(&pi_alphas, &[1.0], &pi_h, &[1.0, 10.0, 100.0, 1000.0]), v0.clone()),
            MethodLabel::PiConsensus => (grid(&pi_alphas, &[1.0], &pi_h, &[1.0]), v0.clone()),
            MethodLabel::Pi => (grid(&pi_alphas, &[1.0], &pi_h, &[1.0]), vec![0.0; m * d]),
            _ => (grid(&mix_alphas, &[1.0], &mix_h, &[1.0]), vec![0.0; m * d]),
        };
        let initial = NetworkState::new(x0.clone(), v).unwrap();
        let iterations = match tuned(&problem, &lap, label, &g, budget, &initial) {
            Ok(r) => Some((r.best_iterations, r.best)),
            Err(_) => None,
        };
        scores.push((label, iterations));
    }
    let precond = scores[0].1.map(|(k, _)| k);
    let others_slower = scores[1..]
        .iter()
        .all(|(_, s)| match (precond, s) {
            (Some(p), Some((k, _))) => p < *k,
            (Some(_), None) => true,
            (None, _) => false,
        });
    let detail = scores
        .iter()
        .map(|(l, s)| match s {
            Some((k, _)) => format!("{l}={k}"),
            None => format!("{l}=not within {budget}"),
        })
        .collect::<Vec<_>>()
        .join(" ");
    check(others_slower, detail)
}

/// Tuned preconditioning halves the iteration count on an ill-conditioned
/// quadratic and leads the logistic comparison.
fn criterion_5(ill: &Result<IllConditioned, String>) -> Outcome {
    let ill = ill.as_ref().map_err(Clone::clone)?;
    let (p, u) = (ill.precond.best_iterations, ill.plain.best_iterations);
    let quadratic = format!(
        "quadratic kappa=1e4: precond {p} its at ({}) vs plain {u} its at ({})",
        ill.precond.best, ill.plain.best
    );
    let logistic = logistic_ordering();
    let ok = 2 * p <= u && logistic.is_ok();
    let logistic_detail = match logistic {
        Ok(s) | Err(s) => s,
    };
    check(ok, format!("{quadratic}; logistic iterations: {logistic_detail}"))
}

/// Effective connectivity of the tuned runs on the ill-conditioned quadratic.
fn criterion_6(ill: &Result<IllConditioned, String>) -> Outcome {
    let ill = ill.as_ref().map_err(Clone::clone)?;
    check(
        ill.ratio_precond > ill.ratio_plain,
        format!(
            "lambda(h beta K L)/lambda(L): preconditioned {:.4e} vs unpreconditioned {:.4e}",
            ill.ratio_precond, ill.ratio_plain
        ),
    )
}

/// Closed-form and dense-matrix oracles.
fn criterion_7() -> Outcome {
    let mut failures = Vec::new();

    // Two-agent path, one round.
    let p = ProblemInstance::new(vec![
        Arc::new(QuadraticCost::centered(&[0.0])) as Arc<dyn CostFunction>,
        Arc::new(QuadraticCost::centered(&[2.0])),
    ])
    .unwrap();
    let path = laplacian(&Topology::from_spec("path:2").unwrap(), 1).unwrap();
    let state = NetworkState::new(vec![0.0, 2.0], vec![0.0, 0.0]).unwrap();
    let cfg = |method| AlgorithmConfig::new(method, 0.1, 1.0, 0.1, Preconditioner::identity(2, 1));
    let near = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    let pic = pi_consensus_step(&state, &p, &path, &cfg(Method::PiConsensus)).unwrap();
    let pi = pi_step(&state, &p, &path, &cfg(Method::Pi)).unwrap();
    if !(near(&pic.x, &[0.2, 1.8]) && near(&pic.v, &[0.2, -0.2]) && near(&pi.x, &[0.2, 1.8]) && near(&pi.v, &[-0.2, 0.2])) {
        failures.push("one-step hand values");
    }

    // Euler consistency, bitwise.
    let q = build_quadratic_suite(4, 3, 100.0, false, 2).unwrap();
    let ring = laplacian(&Topology::from_spec("ring:4").unwrap(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let st = NetworkState::new(normal_vec(&mut rng, 12, 1.0), normal_vec(&mut rng, 12, 1.0)).unwrap();
    let k = build_preconditioner(&q, &st.x, 1.0).unwrap();
    for c in [
        AlgorithmConfig::new(Method::PiConsensus, 0.1, 0.7, 0.03, k),
        AlgorithmConfig::new(Method::Pi, 0.1, 0.7, 0.03, Preconditioner::identity(4, 3)),
    ] {
        let (dx, dv) = continuous_rhs(&st, &q, &ring, &c).unwrap();
        let next = step(&st, &q, &ring, &c).unwrap();
        let exact = (0..12).all(|r| {
            next.x[r].to_bits() == (st.x[r] + c.h * dx[r]).to_bits()
                && next.v[r].to_bits() == (st.v[r] + c.h * dv[r]).to_bits()
        });
        if !exact {
            failures.push("Euler consistency");
        }
    }

    // Laplacian and spectrum against dense oracles.
    for spec in ["ring:7", "path:6", "star:5", "complete:4"] {
        let topo = Topology::from_spec(spec).unwrap();
        let m = topo.agents();
        let mut dense = DMatrix::zeros(m, m);
        for &(i, j) in topo.edges() {
            dense[(i, j)] -= 1.0;
            dense[(j, i)] -= 1.0;
            dense[(i, i)] += 1.0;
            dense[(j, j)] += 1.0;
        }
        let lap = laplacian(&topo, 2).unwrap();
        let mut oracle: Vec<f64> = SymmetricEigen::new(dense.clone()).eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let spectrum_ok = lap.eigenvalues().iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-10);
        let kron = dense.kronecker(&DMatrix::<f64>::identity(2, 2));
        let x = normal_vec(&mut rng, 2 * m, 1.0);
        let applied = lap.apply(&x);
        let dense_applied = &kron * DMatrix::from_column_slice(2 * m, 1, &x);
        let apply_ok = (0..2 * m).all(|r| (applied[r] - dense_applied[r]).abs() < 1e-10);
        if lap.matrix() != &dense || !spectrum_ok || !apply_ok {
            failures.push("Laplacian oracle");
        }
    }

    // Gradient checks across every cost family.
    let features = DMatrix::from_fn(10, 3, |_, _| rng.gen_range(-2.0..2.0));
    let families: Vec<Arc<dyn CostFunction>> = vec![
        Arc::new(QuadraticCost::new(q.local(0).hessian(&[0.0; 3]).unwrap(), nalgebra::DVector::from_vec(vec![0.5, -1.0, 2.0])).unwrap()),
        Arc::new(RsiNonconvexCost::new(vec![0.1, -0.4, 1.0], 1.5).unwrap()),
        Arc::new(LogisticCost::new(features, (0..10).map(|i| (i % 2) as f64).collect()).unwrap()),
    ];
    let mut worst_grad = 0.0f64;
    for f in &families {
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            worst_grad = worst_grad.max(gradient_check(f.as_ref(), &x, 1e-5));
        }
    }
    if worst_grad >= 1e-6 {
        failures.push("gradient checks");
    }

    // DIGing tracker conservation.
    let dq = build_quadratic_suite(6, 3, 50.0, false, 7).unwrap();
    let dring = laplacian(&Topology::from_spec("ring:6").unwrap(), 3).unwrap();
    let dcfg = AlgorithmConfig::new(Method::Diging, 0.005, 1.0, 0.3, Preconditioner::identity(6, 3));
    let mut ds = NetworkState::with_zero_integral(normal_vec(&mut rng, 18, 1.0));
    let mut worst_track = 0.0f64;
    for _ in 0..1000 {
        ds = match step(&ds, &dq, &dring, &dcfg) {
            Ok(next) => next,
            Err(_) => {
                worst_track = f64::INFINITY;
                break;
            }
        };
        if let Auxiliary::Diging { y, .. } = &ds.aux {
            let g = dq.cumulative_gradient(&ds.x).unwrap();
            for c in 0..3 {
                let sy: f64 = y.iter().skip(c).step_by(3).sum();
                let sg: f64 = g.iter().skip(c).step_by(3).sum();
                worst_track = worst_track.max((sy - sg).abs());
            }
        }
    }
    if worst_track >= 1e-10 {
        failures.push("DIGing conservation");
    }

    check(
        failures.is_empty(),
        format!(
            "worst gradient-check error {worst_grad:.2e}, worst tracker drift {worst_track:.2e}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failed: {}", failures.join(", "))
            }
        ),
    )
}

/// Structural conditions and the suggest/check round trip.
fn criterion_8() -> Outcome {
    let structural = check_feasibility(FeasibilityInputs {
        c1: 2.0,
        c2: 3.0,
        c3: 1.0,
        alpha: 0.01,
        beta: 1.0,
        mu: 1.0,
        lipschitz: 1.0,
        lambda_min: 1.0,
        m: 5,
    })
    .map_err(|e| e.to_string())?
    .structural();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut passed = 0;
    let mut failures = Vec::new();
    for _ in 0..50 {
        let lf = 10f64.powf(rng.gen_range(-1.0..3.0));
        let mu = lf * 10f64.powf(rng.gen_range(-4.0..0.0));
        let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
        let m = rng.gen_range(2..50);
        match suggest_parameters(mu, lf, lambda, m).and_then(|s| check_feasibility(s.report.inputs)) {
            Ok(r) if r.feasible => passed += 1,
            other => failures.push(format!("(mu={mu:.3e}, L={lf:.3e}, lambda={lambda:.3e}, m={m}): {other:?}")),
        }
    }
    check(
        structural && passed == 50,
        format!(
            "(2,3,1,1) structural={structural}; round trip feasible for {passed}/50 random tuples{}",
            failures.first().map(|f| format!("; first failure {f}")).unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let ill = ill_conditioned();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("linear convergence under RSI without convexity", Box::new(criterion_1)),
        ("continuous-time exponential decay (RK4 over [0, 50])", Box::new(criterion_2)),
        ("Lyapunov certificate V(k+1) <= (1 - delta) V(k)", Box::new(criterion_3)),
        ("initialization robustness vs the PI algorithm", Box::new(criterion_4)),
        ("preconditioning acceleration", Box::new(|| criterion_5(&ill))),
        ("effective connectivity ordering", Box::new(|| criterion_6(&ill))),
        ("oracle equivalences", Box::new(criterion_7)),
        ("feasibility machinery", Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
