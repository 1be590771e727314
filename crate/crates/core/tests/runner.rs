use pic_core::algorithms::{run, AlgorithmConfig, Method, NetworkState, Preconditioner};
use pic_core::costs::build_quadratic_suite;
use pic_core::graph::{laplacian, Topology};
use pic_core::runner::{
    emit_plotdata, execute, parse_config, plot_rows, run_experiment, tune_grid, CellOutcome, MethodLabel, Param,
    ProblemSpec, RunSettings, TuneGrid, METRICS,
};
use pic_core::Error;

const RSI: &str = r#"
seed = 3
max_iters = 3000
topology = "ring:5"

[problem]
kind = "rsi_suite"
agents = 5
c = 1.5

[lyapunov]
c1 = 32.0
c2 = 33.0
c3 = 1.0

[[methods]]
method = "pi_consensus_precond"
alpha = 0.2
h = [0.06, 0.3]

[[methods]]
method = "pi_consensus"
alpha = 0.2
h = 0.06

[[methods]]
method = "dgd"
alpha = 0.05
h = 0.9
"#;

fn with_out(text: &str, dir: &std::path::Path) -> String {
    format!("out = {:?}\n{text}", dir.display().to_string())
}

#[test]
fn config_round_trips_for_every_problem_kind() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images.idx");
    let labels = dir.path().join("labels.idx");
    std::fs::write(&images, [0u8, 0, 8, 3, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1]).unwrap();
    std::fs::write(&labels, [0u8, 0, 8, 1, 0, 0, 0, 0]).unwrap();
    let problems = [
        "kind = \"rsi_suite\"\noffsets = [-1.0, 0.0, 1.0]".to_string(),
        "kind = \"quadratic\"\ndim = 2\ncondition_number = 100.0\nshared_basis = true".to_string(),
        "kind = \"logistic_synthetic\"\nsamples = 30\nfeature_scales = [1.0, 0.1, 3.0, 0.3, 1.0]".to_string(),
        format!("kind = \"logistic_idx\"\nimages = {:?}\nlabels = {:?}\ndigits = [3, 8]", images, labels),
    ];
    for problem in problems {
        let text = format!(
            "topology = \"path:3\"\n[problem]\nagents = 3\n{problem}\n[[methods]]\nmethod = \"extra\"\nalpha = [0.1, 0.2]\nh = 0.2\n"
        );
        let config = parse_config(&text).unwrap_or_else(|e| panic!("{problem}: {e}"));
        assert_eq!(config.methods[0].alpha, Param::Many(vec![0.1, 0.2]));
        let again = parse_config(&config.to_toml().unwrap()).unwrap();
        assert_eq!(again, config);
    }
}

#[test]
fn config_errors_name_the_field() {
    let base = "topology = \"ring:5\"\n[problem]\nkind = \"quadratic\"\n[[methods]]\nmethod = \"pi\"\nalpha = 0.1\nh = 0.1\n";
    assert!(parse_config(base).is_ok());
    let cases = [
        (base.replace("alpha = 0.1", "alpha = -0.1"), "alpha"),
        (base.replace("ring:5", "ring:4"), "topology"),
        (base.replace("ring:5", "hexagon:5"), "topology"),
        (base.replace("kind = \"quadratic\"", "kind = \"quadratic\"\ncondition_number = 0.5"), "condition_number"),
        (base.replace("h = 0.1", "h = []"), "h"),
        (format!("{base}[[methods]]\nmethod = \"pi\"\nalpha = 0.1\nh = 0.1\n"), "method"),
        (base.replace("kind = \"quadratic\"", "kind = \"logistic_idx\"\nimages = \"/nonexistent\"\nlabels = \"/nonexistent\""), "images"),
        (base.replace("kind = \"quadratic\"", "kind = \"logistic_synthetic\"\nfeature_scales = [1.0, 2.0]"), "feature_scales"),
    ];
    for (text, field) in cases {
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains(field), "{field}: {err}");
    }
}

fn tuning_setup() -> (pic_core::costs::ProblemInstance, pic_core::graph::LaplacianOperator, NetworkState) {
    let p = build_quadratic_suite(4, 2, 10.0, false, 2).unwrap();
    let lap = laplacian(&Topology::from_spec("ring:4").unwrap(), 2).unwrap();
    let initial = NetworkState::with_zero_integral(vec![0.1, -0.1, 0.2, 0.0, -0.3, 0.1, 0.05, 0.2]);
    (p, lap, initial)
}

fn settings(budget: usize, prune: bool) -> RunSettings {
    RunSettings {
        budget,
        grad_tol: 1e-8,
        consensus_tol: 1e-8,
        prune,
    }
}

#[test]
fn tuning_single_cell_and_known_feasible_grid() {
    let (p, lap, initial) = tuning_setup();
    let one = TuneGrid {
        alpha: vec![0.05],
        beta: vec![1.0],
        h: vec![0.05],
        gamma: vec![1.0],
    };
    let r = tune_grid(&p, &lap, MethodLabel::PiConsensus, &one, settings(100_000, false), &initial).unwrap();
    assert_eq!((r.best.alpha, r.best.h), (0.05, 0.05));
    assert_eq!(r.table.len(), 1);

    // The known-converging cell plus a divergent one: the tuner must not pick the divergent cell.
    let grid = TuneGrid {
        h: vec![0.05, 5.0],
        ..one.clone()
    };
    let r = tune_grid(&p, &lap, MethodLabel::PiConsensus, &grid, settings(100_000, false), &initial).unwrap();
    assert_eq!(r.best.h, 0.05);
    assert!(r.table.iter().any(|s| s.outcome == CellOutcome::Diverged && s.iterations.is_none()));

    // Baselines ignore β and γ, so those axes collapse.
    let wide = TuneGrid {
        alpha: vec![0.01],
        beta: vec![1.0, 2.0, 3.0],
        h: vec![0.2],
        gamma: vec![1.0, 2.0],
    };
    let r = tune_grid(&p, &lap, MethodLabel::Diging, &wide, settings(100_000, false), &initial).unwrap();
    assert_eq!(r.table.len(), 1);
}

#[test]
fn ties_go_to_the_lexicographically_smallest_cell() {
    let (p, lap, _) = tuning_setup();
    // Starting at the minimizer every cell converges at iteration 0.
    let at_optimum = NetworkState::with_zero_integral(p.stacked_minimizer().unwrap());
    let grid = TuneGrid {
        alpha: vec![0.3, 0.1, 0.2],
        beta: vec![2.0, 1.0],
        h: vec![0.05, 0.01],
        gamma: vec![1.0],
    };
    let r = tune_grid(&p, &lap, MethodLabel::PiConsensus, &grid, settings(100, false), &at_optimum).unwrap();
    assert!(r.table.iter().all(|s| s.iterations == Some(0)));
    assert_eq!((r.best.alpha, r.best.beta, r.best.h), (0.1, 1.0, 0.01));
    assert!(r.table.windows(2).all(|w| w[0].cell < w[1].cell));

    // With distinct scores the first minimal cell in table order wins.
    let (p, lap, initial) = tuning_setup();
    let grid = TuneGrid {
        alpha: vec![0.04, 0.03],
        beta: vec![1.0],
        h: vec![0.2, 0.1],
        gamma: vec![1.0],
    };
    let r = tune_grid(&p, &lap, MethodLabel::Extra, &grid, settings(200_000, false), &initial).unwrap();
    let first_best = r.table.iter().find(|s| s.iterations == Some(r.best_iterations)).unwrap();
    assert_eq!(first_best.cell, r.best);
}

#[test]
fn pruning_keeps_the_winner() {
    let (p, lap, initial) = tuning_setup();
    let grid = TuneGrid {
        alpha: vec![0.02, 0.05, 0.1],
        beta: vec![0.5, 1.0],
        h: vec![0.02, 0.05],
        gamma: vec![1.0],
    };
    let full = tune_grid(&p, &lap, MethodLabel::PiConsensus, &grid, settings(100_000, false), &initial).unwrap();
    let pruned = tune_grid(&p, &lap, MethodLabel::PiConsensus, &grid, settings(100_000, true), &initial).unwrap();
    assert_eq!(full.best, pruned.best);
    assert_eq!(full.best_iterations, pruned.best_iterations);
}

#[test]
fn all_divergent_grid_is_an_error() {
    let (p, lap, initial) = tuning_setup();
    let grid = TuneGrid {
        alpha: vec![1.0],
        beta: vec![1.0],
        h: vec![10.0, 20.0],
        gamma: vec![1.0],
    };
    match tune_grid(&p, &lap, MethodLabel::Pi, &grid, settings(10_000, false), &initial) {
        Err(Error::Search(msg)) => assert!(msg.contains("h=10")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn experiments_are_deterministic_and_fair() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let config = parse_config(&with_out(RSI, out)).unwrap();
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.methods.len(), 3);
    }
    for file in ["pi_consensus_precond.csv", "pi_consensus.csv", "summary.csv", "plotdata.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let header = std::fs::read_to_string(a.join("pi_consensus.csv")).unwrap();
    assert!(header.starts_with("k,f,grad_norm,consensus_err,dist_to_opt,V,V2\n"));
    let dgd = std::fs::read_to_string(a.join("dgd.csv"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    let methods = report["methods"].as_array().unwrap();
    // h = 0.9 with max degree 2 is not a valid mixing matrix: recorded, not fatal.
    assert_eq!(methods[2]["status"], "failed");
    assert!(dgd.is_err());
    assert_eq!(methods[0]["tuned"], true);
}

#[test]
fn every_method_starts_from_the_same_estimates() {
    let config = parse_config(RSI).unwrap();
    let outcome = execute(&config).unwrap();
    let firsts: Vec<_> = outcome.traces.iter().map(|(_, t)| t.records[0].clone()).collect();
    for r in &firsts[1..] {
        assert_eq!(r.aggregate_cost, firsts[0].aggregate_cost);
        assert_eq!(r.consensus_err, firsts[0].consensus_err);
    }
    let pic = outcome.report.method(MethodLabel::PiConsensus).unwrap();
    assert_eq!(pic.scalars_communicated, pic.iterations * 2 * 5 * 2);
    assert!(pic.effective_connectivity_ratio.is_some());
}

#[test]
fn zero_budget_reports_initial_metrics() {
    let mut config = parse_config(RSI).unwrap();
    config.max_iters = 0;
    config.methods.truncate(2);
    config.methods[0].h = Param::One(0.06);
    let outcome = execute(&config).unwrap();
    for (_, trace) in &outcome.traces {
        assert_eq!(trace.records.len(), 1);
    }
    assert!(outcome.report.methods.iter().all(|m| m.iterations == 0 && m.status == "budget"));
}

#[test]
fn plot_data_schema() {
    let (p, lap, initial) = tuning_setup();
    let cfg = AlgorithmConfig::new(Method::Pi, 0.05, 1.0, 0.05, Preconditioner::identity(4, 2)).with_budget(2);
    let trace = run(&p, &lap, &cfg, initial.clone(), None).unwrap();
    assert_eq!(trace.records.len(), 3);
    let rows = plot_rows(&[("pi", &trace)]);
    assert_eq!(rows.len(), 12);
    let other = run(&p, &lap, &cfg.clone().with_budget(1), initial, None).unwrap();
    let rows = plot_rows(&[("pi", &trace), ("other", &other)]);
    assert!(rows.iter().all(|r| METRICS.contains(&r.metric)));
    assert_eq!(rows.iter().filter(|r| r.method == "other").count(), 8);
    let mut buf = Vec::new();
    emit_plotdata(&[("pi", &trace)], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("method,k,metric,value\n"));
    assert_eq!(text.lines().count(), 13);

    let logistic = parse_config(
        "topology = \"ring:3\"\n[problem]\nkind = \"logistic_synthetic\"\nagents = 3\nsamples = 30\n[[methods]]\nmethod = \"pi\"\nalpha = 0.01\nh = 0.05\n",
    )
    .unwrap();
    assert!(matches!(logistic.problem, ProblemSpec::LogisticSynthetic { .. }));
    let mut logistic = logistic;
    logistic.max_iters = 3;
    let outcome = execute(&logistic).unwrap();
    let rows = plot_rows(&[("pi", &outcome.traces[0].1)]);
    assert!(rows.iter().all(|r| r.metric != "dist_to_opt"));
    assert_eq!(rows.len(), 4 * 3);
}
