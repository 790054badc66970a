//! Regularization calibration by the discrepancy principle, and the classic
//! ill-posedness example.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::optim::{bfgs_minimize, BfgsOptions};
use crate::par;
use crate::problem::{InverseProblem, Regularization};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancySample {
    pub alpha: f64,
    /// `int_w |u - d|^2` at the inner minimizer.
    pub misfit: f64,
    /// `misfit - noise_measure`
    pub f: f64,
    /// Regularized objective at the inner minimizer.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct DiscrepancyCurve {
    /// Sorted by `alpha`.
    pub samples: Vec<DiscrepancySample>,
    pub root: Option<f64>,
    /// Final bracket.
    pub bracket: (f64, f64),
    /// Minimizer found at `root`.
    pub params_at_root: Vec<f64>,
}

impl DiscrepancyCurve {
    /// `true` when `f` is non-decreasing in `alpha` up to 1e-8.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].f >= w[0].f - 1e-8)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "alpha,misfit,f")?;
        for s in &self.samples {
            writeln!(out, "{:e},{:e},{:e}", s.alpha, s.misfit, s.f)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Expected value of `int_w |noise|^2` for i.i.d. `N(0, level^2)` noise on the
/// interior vertices: `level^2 * sum_i (M_w)_ii`.
pub fn noise_measure(problem: &InverseProblem, level: f64) -> f64 {
    let mesh = problem.mesh();
    let mass = masked_mass(problem);
    let trace: f64 = (0..mesh.n_vertices())
        .filter(|&i| !mesh.is_boundary(i))
        .map(|i| mass.get(i, i))
        .sum();
    level * level * trace
}

fn masked_mass(problem: &InverseProblem) -> CsrMatrix {
    let mesh: &Mesh = problem.mesh();
    crate::fem::Assembler::new(mesh).mass(mesh, Some(problem.mask()))
}

fn q_star_of(problem: &InverseProblem) -> Result<Vec<f64>> {
    match problem.regularization() {
        Regularization::Generalized { q_star, .. } => Ok(q_star.clone()),
        _ => Err(Error::InvalidArgument(
            "discrepancy needs generalized Tikhonov regularization with a reference coefficient".into(),
        )),
    }
}

/// Solves the regularized inverse problem at `alpha` from `x0` and returns the
/// discrepancy sample together with the minimizer.
pub fn discrepancy(
    problem: &InverseProblem,
    alpha: f64,
    noise_measure: f64,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<(DiscrepancySample, Vec<f64>)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let q_star = q_star_of(problem)?;
    let p = problem
        .clone()
        .with_regularization(Regularization::Generalized { alpha, q_star })?;
    let res = bfgs_minimize(
        |x| p.objective_and_gradient(x).map(|r| (r.j, r.grad)),
        x0,
        opts,
    )?;
    if !res.converged {
        log::warn!("inner solve at alpha={alpha:e} stopped with {:?}", res.status);
    }
    let (_, u) = p.solve_state(&res.params_final)?;
    let misfit = 2.0 * p.misfit_of(&u);
    Ok((
        DiscrepancySample {
            alpha,
            misfit,
            f: misfit - noise_measure,
            objective: res.f_final,
            iterations: res.iterations,
            converged: res.converged,
        },
        res.params_final,
    ))
}

/// Discrepancy samples at ascending `alphas`, each inner solve warm-started
/// from the previous minimizer.
pub fn sample_curve(
    problem: &InverseProblem,
    alphas: &[f64],
    noise_measure: f64,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<Vec<DiscrepancySample>> {
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(sorted.len());
    for a in sorted {
        let (s, next) = discrepancy(problem, a, noise_measure, &x, opts)?;
        out.push(s);
        x = next;
    }
    Ok(out)
}

/// Bisection on `log alpha` for the root of the discrepancy function.
pub fn find_optimal_alpha(
    problem: &InverseProblem,
    noise_measure: f64,
    bracket: (f64, f64),
    tol: f64,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<DiscrepancyCurve> {
    bisect_log_alpha(
        |a, warm| discrepancy(problem, a, noise_measure, warm, opts),
        bracket,
        tol,
        x0,
    )
}

type Solved = (DiscrepancySample, Vec<f64>);

/// Evaluates at `alpha` from each warm start and keeps the lowest objective.
fn best_of<E>(eval: &E, alpha: f64, warm: &[&[f64]]) -> Result<Solved>
where
    E: Fn(f64, &[f64]) -> Result<Solved> + Sync + Send,
{
    let mut best: Option<Solved> = None;
    for x in warm {
        let cand = eval(alpha, x)?;
        if best.as_ref().is_none_or(|b| cand.0.objective < b.0.objective) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one warm start"))
}

/// Root finder behind [`find_optimal_alpha`] for any warm-startable
/// discrepancy evaluator.
///
/// The bracket is sampled on a log grid (two points per decade). Grid points
/// are re-solved from their neighbours' minimizers in alternating ascending
/// and descending sweeps until no objective improves, so each sample sits at
/// the best minimizer found along the path. The first sign change is then
/// refined by bisection on `log alpha`, each midpoint started from both
/// endpoint minimizers.
pub fn bisect_log_alpha<E>(eval: E, bracket: (f64, f64), tol: f64, x0: &[f64]) -> Result<DiscrepancyCurve>
where
    E: Fn(f64, &[f64]) -> Result<Solved> + Sync + Send,
{
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("invalid bracket ({lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let decades = (hi / lo).log10();
    let n = ((2.0 * decades).ceil() as usize).max(2) + 1;
    let mut alphas: Vec<f64> = (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect();
    let mut grid: Vec<Solved> = par::map_tasks(&alphas, |&a| eval(a, x0))
        .into_iter()
        .collect::<Result<_>>()?;

    let sweep = |grid: &mut Vec<Solved>, alphas: &[f64]| -> Result<bool> {
        let mut changed = false;
        let order: Vec<(usize, usize)> = (1..grid.len())
            .map(|i| (i, i - 1))
            .chain((0..grid.len() - 1).rev().map(|i| (i, i + 1)))
            .collect();
        for (i, from) in order {
            let cand = eval(alphas[i], &grid[from].1)?;
            if cand.0.objective < grid[i].0.objective * (1.0 - 1e-12) {
                grid[i] = cand;
                changed = true;
            }
        }
        Ok(changed)
    };
    for _ in 0..4 {
        if !sweep(&mut grid, &alphas)? {
            break;
        }
    }

    let mut expansions = 0;
    loop {
        let first = &grid[0].0;
        let last = &grid[grid.len() - 1].0;
        if first.f < 0.0 && last.f > 0.0 {
            break;
        }
        if expansions == 6 {
            return Err(Error::BracketFailure {
                lo: alphas[0],
                hi: alphas[alphas.len() - 1],
                f_lo: first.f,
                f_hi: last.f,
            });
        }
        expansions += 1;
        if first.f >= 0.0 {
            let a = alphas[0] / 2.0;
            let s = best_of(&eval, a, &[&grid[0].1])?;
            alphas.insert(0, a);
            grid.insert(0, s);
        }
        if grid[grid.len() - 1].0.f <= 0.0 {
            let a = alphas[alphas.len() - 1] * 2.0;
            let s = best_of(&eval, a, &[&grid[grid.len() - 1].1])?;
            alphas.push(a);
            grid.push(s);
        }
    }

    let k = (0..grid.len() - 1)
        .find(|&i| grid[i].0.f < 0.0 && grid[i + 1].0.f >= 0.0)
        .expect("sign change");
    let mut samples: Vec<DiscrepancySample> = grid.iter().map(|g| g.0).collect();
    let (mut a_lo, mut a_hi) = (alphas[k], alphas[k + 1]);
    let (mut s_lo, mut s_hi) = (grid[k].clone(), grid[k + 1].clone());
    while (a_hi - a_lo) / (a_hi * a_lo).sqrt() > tol {
        let mid = (a_lo * a_hi).sqrt();
        let s = best_of(&eval, mid, &[&s_lo.1, &s_hi.1])?;
        samples.push(s.0);
        if s.0.f < 0.0 {
            (a_lo, s_lo) = (mid, s);
        } else {
            (a_hi, s_hi) = (mid, s);
        }
    }
    samples.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let (root, params_at_root) = if s_lo.0.f.abs() <= s_hi.0.f.abs() {
        (a_lo, s_lo.1)
    } else {
        (a_hi, s_hi.1)
    };
    Ok(DiscrepancyCurve {
        samples,
        root: Some(root),
        bracket: (a_lo, a_hi),
        params_at_root,
    })
}

/// One row of the ill-posedness table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IllposedRow {
    pub n: u32,
    pub u_err_inf: f64,
    pub q_err_inf: f64,
}

/// Maximum of `g` over `[a, b]`: dense grid of `samples` intervals, then
/// golden-section refinement around the best grid point.
pub fn dense_max(g: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let h = (b - a) / samples as f64;
    let (best, mut vmax) = (0..=samples)
        .map(|i| (i, g(a + i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut lo = (a + (best as f64 - 1.0) * h).max(a);
    let mut hi = (a + (best as f64 + 1.0) * h).min(b);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..100 {
        if g1 > g2 {
            hi = x2;
            (x2, g2) = (x1, g1);
            x1 = hi - r * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            (x1, g1) = (x2, g2);
            x2 = lo + r * (hi - lo);
            g2 = g(x2);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    vmax = vmax.max(g1).max(g2);
    vmax
}

/// `|u_N - u|` and `|q_N - q|` sup-norms on `(0, pi)` for `u = x^2`, `q = 1/2`,
/// `u_N = u + (x/N) sin(Nx) + cos(Nx)/N^2` and `q_N = 1/(2 + cos(Nx))`.
pub fn illposedness_table(ns: &[u32]) -> Result<Vec<IllposedRow>> {
    if let Some(n) = ns.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidArgument(format!("N must be >= 1, got {n}")));
    }
    Ok(par::map_tasks(ns, |&n| {
        let nf = n as f64;
        let samples = (20_000usize).max(200 * n as usize);
        let du = |x: f64| ((x / nf) * (nf * x).sin() + (nf * x).cos() / (nf * nf)).abs();
        let dq = |x: f64| (1.0 / (2.0 + (nf * x).cos()) - 0.5).abs();
        IllposedRow {
            n,
            u_err_inf: dense_max(du, 0.0, PI, samples),
            q_err_inf: dense_max(dq, 0.0, PI, samples),
        }
    }))
}

pub fn write_illposedness_csv(rows: &[IllposedRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "N,u_err_inf,q_err_inf")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e}", r.n, r.u_err_inf, r.q_err_inf)?;
    }
    out.flush()?;
    Ok(())
}
