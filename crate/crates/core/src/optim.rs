//! Dense BFGS with a strong-Wolfe line search.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub gtol: f64,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    /// Trial steps per line search (bracketing plus zoom).
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gtol: 1e-6,
            max_iter: 5000,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchFailure => "line_search_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub j: f64,
    pub gnorm: f64,
    pub step: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub params_final: Vec<f64>,
    pub iterations: usize,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub converged: bool,
    pub status: Status,
    pub evaluations: usize,
    /// Iteration 0 is the starting point.
    pub trace: Vec<TraceEntry>,
    pub wall_time: f64,
}

impl OptimizationResult {
    /// Writes `iter,J,gnorm,step,seconds`; time is left blank when `timing` is off.
    pub fn write_trace_csv(&self, path: &Path, timing: bool) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "iter,J,gnorm,step,seconds")?;
        for t in &self.trace {
            let secs = if timing { format!("{:.6}", t.seconds) } else { String::new() };
            writeln!(out, "{},{:e},{:e},{:e},{}", t.iteration, t.j, t.gnorm, t.step, secs)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Point {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Evaluation wrapper: failures and non-finite values become `f = +inf`.
struct Probe<'a, F> {
    eval: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    count: usize,
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Probe<'_, F> {
    fn at(&mut self, alpha: f64) -> Point {
        self.count += 1;
        let x: Vec<f64> = self.x.iter().zip(self.d).map(|(xi, di)| xi + alpha * di).collect();
        match (self.eval)(&x) {
            Ok((f, g)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => {
                let dphi = dot(&g, self.d);
                Point { alpha, f, g, dphi }
            }
            Ok(_) | Err(_) => {
                log::debug!("line search: evaluation failed at step {alpha:e}");
                Point {
                    alpha,
                    f: f64::INFINITY,
                    g: Vec::new(),
                    dphi: f64::NAN,
                }
            }
        }
    }
}

/// Minimizer of the cubic through two points with slopes, if it lies safely
/// inside the interval.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    if !(a.f.is_finite() && b.f.is_finite() && a.dphi.is_finite() && b.dphi.is_finite()) {
        return None;
    }
    let d1 = a.dphi + b.dphi - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let denom = b.dphi - a.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / denom;
    let (lo, hi) = (a.alpha.min(b.alpha), a.alpha.max(b.alpha));
    let margin = 0.1 * (hi - lo);
    (x.is_finite() && x > lo + margin && x < hi - margin).then_some(x)
}

/// Strong-Wolfe line search along `d`; `None` when no acceptable step is found.
fn line_search<F>(probe: &mut Probe<'_, F>, f0: f64, dphi0: f64, alpha0: f64, opts: &BfgsOptions) -> Option<Point>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let armijo = |p: &Point| p.f <= f0 + opts.c1 * p.alpha * dphi0;
    let curvature = |p: &Point| p.dphi.abs() <= -opts.c2 * dphi0;
    let mut prev = Point {
        alpha: 0.0,
        f: f0,
        g: Vec::new(),
        dphi: dphi0,
    };
    let mut alpha = alpha0;
    let mut budget = opts.max_line_search;
    let (mut lo, mut hi);
    let mut first = true;
    loop {
        if budget == 0 {
            return None;
        }
        budget -= 1;
        let cur = probe.at(alpha);
        if !armijo(&cur) || (!first && cur.f >= prev.f) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Some(cur);
        }
        if cur.dphi >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        first = false;
        alpha = 2.0 * cur.alpha;
        prev = cur;
    }
    // zoom: lo satisfies sufficient decrease and has the lowest f so far
    while budget > 0 {
        budget -= 1;
        let trial = cubic_min(&lo, &hi).unwrap_or(0.5 * (lo.alpha + hi.alpha));
        if (hi.alpha - lo.alpha).abs() <= 1e-16 * trial.abs().max(1e-300) {
            break;
        }
        let cur = probe.at(trial);
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Some(cur);
            }
            if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = std::mem::replace(&mut lo, cur);
            } else {
                lo = cur;
            }
        }
    }
    // accept a point with sufficient decrease even without the curvature condition
    (lo.alpha > 0.0 && lo.f < f0).then_some(lo)
}

/// Minimizes `eval` from `x0`. `eval` returns the objective and its gradient.
pub fn bfgs_minimize<F>(mut eval: F, x0: &[f64], opts: &BfgsOptions) -> Result<OptimizationResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(opts.gtol > 0.0) {
        return Err(Error::InvalidArgument(format!("gtol must be > 0, got {}", opts.gtol)));
    }
    let start = Instant::now();
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = eval(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective or gradient at the starting point".into()));
    }
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gradient",
            expected: n,
            found: g.len(),
        });
    }
    let mut evaluations = 1;
    let mut gnorm = norm_inf(&g);
    let h0 = (1.0 / gnorm).clamp(1e-8, 1e8);
    let identity = |scale: f64| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut h = identity(h0);
    let mut trace = vec![TraceEntry {
        iteration: 0,
        j: f,
        gnorm,
        step: 0.0,
        seconds: start.elapsed().as_secs_f64(),
    }];
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut just_reset = false;

    while iterations < opts.max_iter {
        if gnorm <= opts.gtol {
            status = Status::Converged;
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut dphi0 = dot(&g, &d);
        if !(dphi0 < 0.0) {
            h = identity(h0);
            d = g.iter().map(|v| -h0 * v).collect();
            dphi0 = dot(&g, &d);
        }
        let mut probe = Probe {
            eval: &mut eval,
            x: &x,
            d: &d,
            count: 0,
        };
        let found = line_search(&mut probe, f, dphi0, 1.0, opts);
        evaluations += probe.count;
        let Some(p) = found else {
            if just_reset {
                status = Status::LineSearchFailure;
                break;
            }
            log::debug!("line search failed at iteration {iterations}; resetting inverse Hessian");
            h = identity(h0);
            just_reset = true;
            continue;
        };
        just_reset = false;
        iterations += 1;

        let s: Vec<f64> = d.iter().map(|v| p.alpha * v).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        f = p.f;
        g = p.g;
        gnorm = norm_inf(&g);

        let ys = dot(&y, &s);
        let ny = dot(&y, &y).sqrt();
        let ns = dot(&s, &s).sqrt();
        if ys > 1e-10 * ny * ns {
            let rho = 1.0 / ys;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let c = rho * rho * yhy + rho;
            for i in 0..n {
                let row = &mut h[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        trace.push(TraceEntry {
            iteration: iterations,
            j: f,
            gnorm,
            step: p.alpha,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    if status == Status::MaxIterations && gnorm <= opts.gtol {
        status = Status::Converged;
    }
    Ok(OptimizationResult {
        params_final: x,
        iterations,
        f_final: f,
        gnorm_final: gnorm,
        converged: status == Status::Converged,
        status,
        evaluations,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
