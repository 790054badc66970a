//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to stdout
//! (uncaptured) and then asserts.

use std::io::Write;
use std::time::Instant;

use coeffinv::analytic::{CoefficientId, SolutionId};
use coeffinv::experiment::{
    check_gradients, run_experiment, run_suite, suite_configs, ExperimentConfig, PriorKind,
    RegularizationConfig, RunOptions, SuiteOptions,
};
use coeffinv::fem::{error_norm, solve_forward, Assembler, DofField};
use coeffinv::mesh::{build_interval_mesh, build_unit_square_mesh, Mesh};
use coeffinv::problem::make_synthetic_data;
use coeffinv::regcal;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{}] criterion {n:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    let _ = out.flush();
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn run(cfg: &ExperimentConfig) -> coeffinv::experiment::ExperimentOutcome {
    run_experiment(cfg, RunOptions::timed()).unwrap_or_else(|e| panic!("{}: {e}", cfg.id))
}

#[test]
fn c01_gradient_exactness() {
    let start = Instant::now();
    let checks = check_gradients(20, 1).unwrap();
    let worst = checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("{} cases x 20 vectors, max rel err {worst:.2e} (<= 1e-4), {secs:.1}s (< 60s)", checks.len());
    report(1, "gradient exactness", worst <= 1e-4 && secs < 60.0 && checks.len() == 8, detail);
}

fn forward_l2_error(mesh: &Mesh, solution: SolutionId) -> f64 {
    let syn = make_synthetic_data(mesh, CoefficientId::Linear, solution, 0.0, 0).unwrap();
    let q = coeffinv::fem::interpolate(|x| CoefficientId::Linear.value(x), mesh).unwrap();
    let g = DofField::constant(mesh, 0.0);
    let sys = Assembler::new(mesh).assemble_with_load(mesh, &q, &syn.load, &g).unwrap();
    let u = solve_forward(&sys).unwrap().u;
    error_norm(mesh, &u, |x| solution.value(x), 5).unwrap()
}

#[test]
fn c02_forward_solver_order() {
    let e1: Vec<f64> = [25, 50, 100, 200]
        .iter()
        .map(|&n| forward_l2_error(&build_interval_mesh(n, 1.0).unwrap(), SolutionId::Sin2))
        .collect();
    let e2: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| forward_l2_error(&build_unit_square_mesh(n, n).unwrap(), SolutionId::SinSin))
        .collect();
    let rates = |e: &[f64]| e.windows(2).map(|w| (w[0] / w[1]).log2()).collect::<Vec<_>>();
    let (r1, r2) = (rates(&e1), rates(&e2));
    let pass = r1.iter().chain(&r2).all(|r| (r - 2.0).abs() <= 0.2);
    report(2, "forward solver order", pass, format!("1D rates {r1:.3?}, 2D rates {r2:.3?} (2.0 +- 0.2)"));
}

#[test]
fn c03_table1_noiseless_network() {
    let bounds = [1e-2, 1e-2, 3e-2, 5e-2];
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, bound) in CoefficientId::SMOOTH.into_iter().zip(bounds) {
        let o = run(&ExperimentConfig::new(format!("c3_{}", q.name()), 1, q, PriorKind::Network));
        let err = o.row.q_err_l2.unwrap();
        let ok = err <= bound && o.result.iterations <= 2000 && o.result.wall_time <= 60.0;
        pass &= ok;
        parts.push(format!("{} {err:.2e}/{bound:.0e} in {} it", q.name(), o.result.iterations));
    }
    report(3, "noiseless network recovery", pass, parts.join(", "));
}

#[test]
fn c04_table1_noisy_contrast() {
    let mut net_ok = true;
    let mut fem_unstable = 0;
    let mut parts = Vec::new();
    for q in CoefficientId::SMOOTH {
        let mut cfg = ExperimentConfig::new(format!("c4_{}_net", q.name()), 1, q, PriorKind::Network);
        cfg.noise.delta = 0.05;
        let net = run(&cfg).row.q_err_l2.unwrap();
        cfg.id = format!("c4_{}_fem", q.name());
        cfg.prior.kind = PriorKind::Fem;
        let fem = run(&cfg).row.q_err_l2.unwrap();
        net_ok &= net <= 1e-1;
        if fem >= 1.0 {
            fem_unstable += 1;
        }
        parts.push(format!("{} net {net:.2e} fem {fem:.2e}", q.name()));
    }
    let detail = format!("{} (network <= 1e-1, fem >= 1 in {fem_unstable}/4, need 3)", parts.join(", "));
    report(4, "noisy network vs fem", net_ok && fem_unstable >= 3, detail);
}

#[test]
fn c05_table2_scaled() {
    let mut cfg = ExperimentConfig::new("c5", 2, CoefficientId::Const, PriorKind::Network);
    cfg.mesh.nx = Some(51);
    cfg.mesh.ny = Some(51);
    let o = run(&cfg);
    let err = o.row.q_err_l2.unwrap();
    let pass = err <= 1e-2 && o.result.iterations <= 500 && o.result.wall_time <= 600.0;
    let detail = format!(
        "51x51 (2,10,1): |q - q_exact| {err:.2e} (<= 1e-2), {} it (<= 500), {:.1}s (<= 600s)",
        o.result.iterations, o.result.wall_time
    );
    report(5, "2D network recovery", pass, detail);
}

#[test]
fn c06_mesh_independence() {
    let rows: Vec<_> = suite_configs("graded_mesh", None).unwrap().iter().map(|c| run(c).row).collect();
    let its: Vec<f64> = rows.iter().map(|r| r.iterations.unwrap() as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.q_err_l2.unwrap()).collect();
    let mut tail = its[its.len() - 4..].to_vec();
    tail.sort_by(f64::total_cmp);
    let plateau = 0.5 * (tail[1] + tail[2]);
    let its_ok = its.iter().all(|&i| (i - plateau).abs() <= 0.25 * plateau);
    let last = &errs[errs.len() - 4..];
    let (lo, hi) = last.iter().fold((f64::MAX, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    let err_ok = hi <= 1.05 * lo;
    let detail = format!("iterations {its:?} (plateau {plateau}, +-25%), last-four error spread {:.2}% (<= 5%)", 100.0 * (hi / lo - 1.0));
    report(6, "mesh independence", its_ok && err_ok, detail);
}

#[test]
fn c07_discontinuous() {
    let mut cfg = ExperimentConfig::new("c7_clean", 1, CoefficientId::Step, PriorKind::Network);
    let clean = run(&cfg).row.q_err_l2.unwrap();
    cfg.id = "c7_noisy".into();
    cfg.noise.delta = 0.05;
    let noisy = run(&cfg).row.q_err_l2.unwrap();
    let detail = format!("noiseless {clean:.2e} (<= 5e-2), noisy {noisy:.2e} (<= 3e-1)");
    report(7, "discontinuous coefficient", clean <= 5e-2 && noisy <= 3e-1, detail);
}

#[test]
fn c08_incomplete_data() {
    let mut cfg = ExperimentConfig::new("c8", 1, CoefficientId::Const, PriorKind::Network);
    cfg.mask_distance = Some(0.1);
    let o = run(&cfg);
    // P1 field against a constant: the vertex maximum is the sup over the domain
    let linf = o.q.values.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
    report(8, "incomplete data", linf <= 5e-2, format!("d = 0.1, sup |q - 1| = {linf:.2e} (<= 5e-2)"));
}

#[test]
fn c09_morozov() {
    let mut cfg = ExperimentConfig::new("c9", 1, CoefficientId::Const, PriorKind::Network);
    cfg.noise.delta = 0.05;
    let unregularized = run(&cfg).row.q_err_l2.unwrap();

    cfg.regularization = Some(RegularizationConfig::Morozov {
        bracket: [1e-4, 1e4],
        tol: 0.05,
    });
    let outcome = run_experiment(&cfg, RunOptions { timing: false });
    let detail = match outcome {
        Ok(o) => {
            let c = o.curve.expect("curve");
            let monotone = c.is_monotone();
            let alpha = c.root.unwrap();
            let reg = o.row.q_err_l2.unwrap();
            let ok = monotone && (0.1..=1.0).contains(&alpha) && reg <= 2.0 * unregularized;
            (
                ok,
                format!(
                    "monotone {monotone} over {} samples, f from {:.2e} to {:.2e}; alpha {alpha:.3} (in [0.1, 1]), \
                     regularized {reg:.2e} vs unregularized {unregularized:.2e} (<= 2x)",
                    c.samples.len(),
                    c.samples[0].f,
                    c.samples[c.samples.len() - 1].f
                ),
            )
        }
        Err(e) => (false, format!("no root: {e}")),
    };
    report(9, "discrepancy principle", detail.0, detail.1);
}

#[test]
fn c10_illposedness() {
    let rows = regcal::illposedness_table(&[1, 10, 100]).unwrap();
    let q_ok = rows.iter().all(|r| (r.q_err_inf - 0.5).abs() <= 1e-6);
    let decreasing = rows.windows(2).all(|w| w[1].u_err_inf < w[0].u_err_inf);
    let factors: Vec<f64> = rows.windows(2).map(|w| w[0].u_err_inf / w[1].u_err_inf).collect();
    let decade_ok = factors.iter().all(|f| (f - 10.0).abs() <= 2.0);
    let detail = format!(
        "q errors {:?} (0.5 +- 1e-6), u errors {:?}, per-decade factors {factors:.3?} (10 +- 2)",
        rows.iter().map(|r| r.q_err_inf).collect::<Vec<_>>(),
        rows.iter().map(|r| r.u_err_inf).collect::<Vec<_>>()
    );
    report(10, "ill-posedness table", q_ok && decreasing && decade_ok, detail);
}

fn read_tree(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn c11_determinism() {
    let opts = SuiteOptions {
        workers: 2,
        ..SuiteOptions::default()
    };
    let mut trees = Vec::new();
    for suite in ["table1", "illposed"] {
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                run_suite(suite, dir.path(), opts).unwrap();
                read_tree(dir.path())
            })
            .collect();
        trees.push((suite, runs[0] == runs[1], runs[0].len()));
    }
    let pass = trees.iter().all(|t| t.1);
    let detail = trees
        .iter()
        .map(|(s, same, n)| format!("{s}: {n} files {}", if *same { "identical" } else { "differ" }))
        .collect::<Vec<_>>()
        .join(", ");
    report(11, "determinism", pass, detail);
}
