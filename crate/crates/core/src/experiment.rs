//! Declarative experiment configs, single runs and the predefined suites.
//!
//! Every run writes plain CSV. Wall-clock columns can be left blank so that
//! repeated runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{CoefficientId, SolutionId};
use crate::error::{Error, Result};
use crate::fem::{self, eval_1d, interpolate, DofField};
use crate::mesh::{build_interval_mesh, build_unit_square_mesh, cells_for_max_size, Mesh};
use crate::net::{self, Network};
use crate::optim::{bfgs_minimize, BfgsOptions, OptimizationResult};
use crate::par;
use crate::problem::{add_noise, boundary_mask, make_synthetic_data, InverseProblem, NoiseSpec, Prior, Regularization};
use crate::regcal::{self, DiscrepancyCurve};

pub const DEFAULT_NOISE_SEED: u64 = 2;
pub const DEFAULT_WEIGHT_SEED: u64 = 2;
pub const DEFAULT_CELLS_1D: usize = 101;
pub const DEFAULT_CELLS_2D: usize = 101;
/// Forcing of the discontinuous-coefficient case.
pub const STEP_FORCING: f64 = 10.0;
/// Refinement factor of the reference mesh for the discontinuous case.
pub const REFERENCE_REFINEMENT: usize = 4;

fn default_seed() -> u64 {
    DEFAULT_NOISE_SEED
}

fn default_weight_seed() -> u64 {
    DEFAULT_WEIGHT_SEED
}

fn default_ratio() -> f64 {
    1.0
}

fn default_gtol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    5000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// 1D cell count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// 1D `h_max / h_min`.
    #[serde(default = "default_ratio")]
    pub grading_ratio: f64,
    /// 2D element grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec {
            cells: None,
            grading_ratio: 1.0,
            nx: None,
            ny: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            delta: 0.0,
            seed: DEFAULT_NOISE_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Network,
    Fem,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Network => "network",
            PriorKind::Fem => "fem",
        }
    }
}

/// `layers` defaults to `[1, 3, 1]` in 1D and `[2, 10, 1]` in 2D. The FEM-space
/// prior starts from the seeded initial network sampled at the vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default = "default_weight_seed")]
    pub seed: u64,
}

/// `generalized` and `morozov` use the exact coefficient as reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizationConfig {
    Tikhonov {
        alpha: f64,
    },
    Generalized {
        alpha: f64,
    },
    Morozov {
        #[serde(default = "default_bracket")]
        bracket: [f64; 2],
        #[serde(default = "default_bisection_tol")]
        tol: f64,
    },
}

fn default_bracket() -> [f64; 2] {
    [1e-4, 1e4]
}

fn default_bisection_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub dim: usize,
    #[serde(default)]
    pub mesh: MeshSpec,
    pub coefficient: CoefficientId,
    /// Defaults to the built-in solution for `dim`; must be absent for `step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionId>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<RegularizationConfig>,
    #[serde(default = "default_gtol")]
    pub gtol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// A 1D or 2D config with defaults for everything but the essentials.
    pub fn new(id: impl Into<String>, dim: usize, coefficient: CoefficientId, prior: PriorKind) -> Self {
        ExperimentConfig {
            id: id.into(),
            dim,
            mesh: MeshSpec::default(),
            coefficient,
            solution: None,
            noise: NoiseConfig::default(),
            prior: PriorConfig {
                kind: prior,
                layers: None,
                seed: DEFAULT_WEIGHT_SEED,
            },
            mask_distance: None,
            regularization: None,
            gtol: default_gtol(),
            max_iter: default_max_iter(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn layers(&self) -> Vec<usize> {
        self.prior
            .layers
            .clone()
            .unwrap_or_else(|| if self.dim == 1 { vec![1, 3, 1] } else { vec![2, 10, 1] })
    }

    pub fn solution_id(&self) -> SolutionId {
        self.solution.unwrap_or(SolutionId::for_dim(self.dim))
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(config_err("id", "must not be empty"));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(config_err("dim", format!("must be 1 or 2, got {}", self.dim)));
        }
        if !self.coefficient.supports_dim(self.dim) {
            return Err(config_err("coefficient", format!("{} is not defined in {}D", self.coefficient.name(), self.dim)));
        }
        if self.coefficient == CoefficientId::Step && self.solution.is_some() {
            return Err(config_err("solution", "must be absent for the step coefficient"));
        }
        if let Some(s) = self.solution {
            if s.dim() != self.dim {
                return Err(config_err("solution", format!("{s:?} is not defined in {}D", self.dim)));
            }
        }
        if self.dim == 1 {
            if self.mesh.nx.is_some() || self.mesh.ny.is_some() {
                return Err(config_err("mesh.nx", "only valid in 2D"));
            }
            if self.mesh.cells.is_some_and(|n| n < 2) {
                return Err(config_err("mesh.cells", "must be >= 2"));
            }
            if !(self.mesh.grading_ratio >= 1.0 && self.mesh.grading_ratio.is_finite()) {
                return Err(config_err("mesh.grading_ratio", "must be a finite number >= 1"));
            }
        } else {
            if self.mesh.cells.is_some() || self.mesh.grading_ratio != 1.0 {
                return Err(config_err("mesh.cells", "only valid in 1D"));
            }
            for (name, v) in [("mesh.nx", self.mesh.nx), ("mesh.ny", self.mesh.ny)] {
                if v == Some(0) {
                    return Err(config_err(name, "must be >= 1"));
                }
            }
        }
        if !(self.noise.delta >= 0.0 && self.noise.delta.is_finite()) {
            return Err(config_err("noise.delta", format!("must be >= 0, got {}", self.noise.delta)));
        }
        let layers = self.layers();
        if layers.len() < 2 || layers.contains(&0) {
            return Err(config_err("prior.layers", format!("invalid architecture {layers:?}")));
        }
        if layers[0] != self.dim || layers[layers.len() - 1] != 1 {
            return Err(config_err("prior.layers", format!("must map R^{} -> R, got {layers:?}", self.dim)));
        }
        if let Some(d) = self.mask_distance {
            if !(d > 0.0 && d <= 0.5) {
                return Err(config_err("mask_distance", format!("must be in (0, 0.5], got {d}")));
            }
        }
        match &self.regularization {
            Some(RegularizationConfig::Tikhonov { alpha }) | Some(RegularizationConfig::Generalized { alpha }) => {
                if !(*alpha >= 0.0 && alpha.is_finite()) {
                    return Err(config_err("regularization.alpha", "must be a finite number >= 0"));
                }
            }
            Some(RegularizationConfig::Morozov { bracket, tol }) => {
                if !(bracket[0] > 0.0 && bracket[1] > bracket[0]) {
                    return Err(config_err("regularization.bracket", "must satisfy 0 < lo < hi"));
                }
                if !(*tol > 0.0) {
                    return Err(config_err("regularization.tol", "must be > 0"));
                }
                if self.noise.delta == 0.0 {
                    return Err(config_err("noise.delta", "the discrepancy principle needs delta > 0"));
                }
            }
            None => {}
        }
        if !(self.gtol > 0.0) {
            return Err(config_err("gtol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(config_err("max_iter", "must be >= 1"));
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        if self.dim == 1 {
            build_interval_mesh(self.mesh.cells.unwrap_or(DEFAULT_CELLS_1D), self.mesh.grading_ratio)
        } else {
            build_unit_square_mesh(
                self.mesh.nx.unwrap_or(DEFAULT_CELLS_2D),
                self.mesh.ny.unwrap_or(DEFAULT_CELLS_2D),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Fill wall-clock columns; off gives byte-reproducible output.
    pub timing: bool,
}

impl RunOptions {
    pub fn timed() -> Self {
        RunOptions { timing: true }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub id: String,
    pub prior: String,
    pub dim: usize,
    pub coefficient: String,
    pub delta: f64,
    pub noise_seed: u64,
    pub weight_seed: u64,
    pub alpha: Option<f64>,
    pub iterations: Option<usize>,
    pub status: String,
    pub j: Option<f64>,
    pub gnorm: Option<f64>,
    pub wall_seconds: Option<f64>,
    pub u_err_l2: Option<f64>,
    pub q_err_l2: Option<f64>,
    pub q_err_linf: Option<f64>,
}

impl ResultRow {
    pub const HEADER: &'static str =
        "id,prior,dim,coefficient,delta,noise_seed,weight_seed,alpha,iterations,status,J,gnorm,wall_seconds,u_err_l2,q_err_l2,q_err_linf";

    fn failed(cfg: &ExperimentConfig, err: &Error) -> Self {
        let msg = err.to_string().replace([',', '\n', '"'], " ");
        ResultRow {
            id: cfg.id.clone(),
            prior: cfg.prior.kind.name().into(),
            dim: cfg.dim,
            coefficient: cfg.coefficient.name().into(),
            delta: cfg.noise.delta,
            noise_seed: cfg.noise.seed,
            weight_seed: cfg.prior.seed,
            alpha: None,
            iterations: None,
            status: format!("error: {msg}"),
            j: None,
            gnorm: None,
            wall_seconds: None,
            u_err_l2: None,
            q_err_l2: None,
            q_err_linf: None,
        }
    }

    pub fn to_csv(&self) -> String {
        let e = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.id,
            self.prior,
            self.dim,
            self.coefficient,
            self.delta,
            self.noise_seed,
            self.weight_seed,
            e(self.alpha),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            self.status,
            e(self.j),
            e(self.gnorm),
            self.wall_seconds.map(|s| format!("{s:.3}")).unwrap_or_default(),
            e(self.u_err_l2),
            e(self.q_err_l2),
            e(self.q_err_linf),
        )
    }

    /// `true` unless the row could not be computed at all.
    pub fn completed(&self) -> bool {
        !self.status.starts_with("error")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub row: ResultRow,
    pub result: OptimizationResult,
    pub mesh: Mesh,
    pub q: DofField,
    pub u: DofField,
    pub curve: Option<DiscrepancyCurve>,
}

/// Problem, exact fields and starting point built from a config.
pub struct Setup {
    pub problem: InverseProblem,
    pub x0: Vec<f64>,
    pub q_exact: DofField,
    /// Noise-free reference solution at the vertices.
    pub u_exact: DofField,
    /// Evaluates the reference solution anywhere (for error norms).
    reference: Reference,
}

enum Reference {
    Analytic(SolutionId),
    Fine { mesh: Mesh, u: Vec<f64> },
}

impl Reference {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Reference::Analytic(s) => s.value(x),
            Reference::Fine { mesh, u } => eval_1d(mesh, u, x[0]),
        }
    }
}

impl Setup {
    pub fn reference_value(&self, x: &[f64]) -> f64 {
        self.reference.eval(x)
    }
}

/// Reference solution of the step case on a mesh `REFERENCE_REFINEMENT` times
/// finer, sampled at the vertices of `mesh`.
fn step_reference(mesh: &Mesh) -> Result<(Mesh, Vec<f64>, DofField)> {
    let ratio = mesh.h_max() / mesh.h_min();
    let fine = build_interval_mesh(mesh.n_cells() * REFERENCE_REFINEMENT, ratio)?;
    let q = interpolate(|x| CoefficientId::Step.value(x), &fine)?;
    let f = DofField::constant(&fine, STEP_FORCING);
    let g = DofField::constant(&fine, 0.0);
    let u = fem::solve_forward(&fem::assemble_system(&fine, &q, &f, &g)?)?.u.values;
    let sampled = DofField::new(mesh, (0..mesh.n_vertices()).map(|i| eval_1d(&fine, &u, mesh.vertex(i)[0])).collect())?;
    Ok((fine, u, sampled))
}

pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let mesh = cfg.build_mesh()?;
    let g = DofField::constant(&mesh, 0.0);
    let q_exact = interpolate(|x| cfg.coefficient.value(x), &mesh)?;
    let (forcing, load, data, u_exact, reference) = if cfg.coefficient == CoefficientId::Step {
        let (fine, fine_u, sampled) = step_reference(&mesh)?;
        let f = DofField::constant(&mesh, STEP_FORCING);
        let load = fem::load_vector(&mesh, |_| STEP_FORCING, 2)?;
        let data = DofField {
            values: add_noise(&mesh, &sampled.values, cfg.noise.delta, cfg.noise.seed)?,
        };
        (f, load, data, sampled, Reference::Fine { mesh: fine, u: fine_u })
    } else {
        let s = cfg.solution_id();
        let syn = make_synthetic_data(&mesh, cfg.coefficient, s, cfg.noise.delta, cfg.noise.seed)?;
        (syn.forcing, syn.load, syn.data, syn.exact, Reference::Analytic(s))
    };

    let layers = cfg.layers();
    let init = Network::init(&layers, cfg.prior.seed)?;
    let (prior, x0) = match cfg.prior.kind {
        PriorKind::Network => (Prior::Network { layer_sizes: layers }, init.params()),
        PriorKind::Fem => (
            Prior::FemSpace,
            (0..mesh.n_vertices()).map(|k| init.forward(mesh.vertex(k))).collect(),
        ),
    };
    let mut problem = InverseProblem::new(mesh, forcing, g, data)?
        .with_load(load)?
        .with_prior(prior)?
        .with_noise(NoiseSpec {
            level: cfg.noise.delta,
            seed: cfg.noise.seed,
        });
    if let Some(d) = cfg.mask_distance {
        let mask = boundary_mask(problem.mesh(), d)?;
        problem = problem.with_mask(mask)?;
    }
    problem = match &cfg.regularization {
        None => problem,
        Some(RegularizationConfig::Tikhonov { alpha }) => {
            problem.with_regularization(Regularization::Tikhonov { alpha: *alpha })?
        }
        Some(RegularizationConfig::Generalized { alpha }) => problem.with_regularization(Regularization::Generalized {
            alpha: *alpha,
            q_star: q_exact.values.clone(),
        })?,
        // the weight is replaced once the discrepancy root is known
        Some(RegularizationConfig::Morozov { .. }) => problem.with_regularization(Regularization::Generalized {
            alpha: 1.0,
            q_star: q_exact.values.clone(),
        })?,
    };
    Ok(Setup {
        problem,
        x0,
        q_exact,
        u_exact,
        reference,
    })
}

/// Builds the problem, optimizes, and writes the per-run files when the
/// config names an output directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentOutcome> {
    let setup = build_setup(cfg)?;
    let bfgs = BfgsOptions {
        gtol: cfg.gtol,
        max_iter: cfg.max_iter,
        ..BfgsOptions::default()
    };
    let mut problem = setup.problem.clone();
    let mut curve = None;
    if let Some(RegularizationConfig::Morozov { bracket, tol }) = &cfg.regularization {
        let nm = regcal::noise_measure(&problem, cfg.noise.delta);
        let c = regcal::find_optimal_alpha(&problem, nm, (bracket[0], bracket[1]), *tol, &setup.x0, &bfgs)?;
        let alpha = c.root.unwrap_or(bracket[0]);
        problem = problem.with_regularization(Regularization::Generalized {
            alpha,
            q_star: setup.q_exact.values.clone(),
        })?;
        curve = Some(c);
    }
    let alpha = match problem.regularization() {
        Regularization::None => None,
        Regularization::Tikhonov { alpha } | Regularization::Generalized { alpha, .. } => Some(*alpha),
    };

    let start = match &curve {
        Some(c) if c.root.is_some() => c.params_at_root.clone(),
        _ => setup.x0.clone(),
    };
    let result = bfgs_minimize(
        |x| problem.objective_and_gradient(x).map(|r| (r.j, r.grad)),
        &start,
        &bfgs,
    )?;
    let (q, u) = problem.solve_state(&result.params_final)?;
    let mesh = problem.mesh().clone();
    let u_err = fem::error_norm(&mesh, &u, |x| setup.reference_value(x), 5)?;
    let q_err = fem::error_norm(&mesh, &q, |x| cfg.coefficient.value(x), 5)?;
    let q_err_inf = fem::nodal_max_error(&mesh, &q, |x| cfg.coefficient.value(x));
    log::info!(
        "{}: {} after {} iterations, |q - q_exact| = {q_err:.3e}",
        cfg.id,
        result.status.name(),
        result.iterations
    );
    let row = ResultRow {
        id: cfg.id.clone(),
        prior: cfg.prior.kind.name().into(),
        dim: cfg.dim,
        coefficient: cfg.coefficient.name().into(),
        delta: cfg.noise.delta,
        noise_seed: cfg.noise.seed,
        weight_seed: cfg.prior.seed,
        alpha,
        iterations: Some(result.iterations),
        status: result.status.name().into(),
        j: Some(result.f_final),
        gnorm: Some(result.gnorm_final),
        wall_seconds: opts.timing.then_some(result.wall_time),
        u_err_l2: Some(u_err),
        q_err_l2: Some(q_err),
        q_err_linf: Some(q_err_inf),
    };
    let outcome = ExperimentOutcome {
        row,
        result,
        mesh,
        q,
        u,
        curve,
    };
    if let Some(dir) = &cfg.output_dir {
        write_outputs(dir, cfg, &setup, &outcome, opts)?;
    }
    Ok(outcome)
}

fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, setup: &Setup, out: &ExperimentOutcome, opts: RunOptions) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("results.csv"), &format!("{}\n{}\n", ResultRow::HEADER, out.row.to_csv()))?;
    let data = &setup.problem.data().values;
    fem::write_fields_csv(
        &dir.join("solution.csv"),
        &out.mesh,
        &[("u", &out.u.values), ("u_exact", &setup.u_exact.values), ("data", data)],
    )?;
    fem::write_fields_csv(
        &dir.join("coefficient.csv"),
        &out.mesh,
        &[("q", &out.q.values), ("q_exact", &setup.q_exact.values)],
    )?;
    out.result.write_trace_csv(&dir.join("trace.csv"), opts.timing)?;
    if cfg.prior.kind == PriorKind::Network {
        Network::from_params(&cfg.layers(), &out.result.params_final)?.save(&dir.join("network.json"))?;
    }
    if let Some(c) = &out.curve {
        c.write_csv(&dir.join("discrepancy.csv"))?;
    }
    Ok(())
}

pub const SUITES: [&str; 7] = ["table1", "table2", "graded_mesh", "discontinuous", "incomplete", "morozov", "illposed"];

/// Rows of a suite; `out` is used as the parent of each row's directory.
pub fn suite_configs(id: &str, out: Option<&Path>) -> Result<Vec<ExperimentConfig>> {
    let priors = [PriorKind::Network, PriorKind::Fem];
    let deltas = [0.0, 0.05];
    let tag = |d: f64| if d == 0.0 { "d0".to_string() } else { format!("d{d}") };
    let mut rows = Vec::new();
    match id {
        "table1" => {
            for q in CoefficientId::SMOOTH {
                for p in priors {
                    for d in deltas {
                        let mut c = ExperimentConfig::new(format!("table1_{}_{}_{}", q.name(), p.name(), tag(d)), 1, q, p);
                        c.noise.delta = d;
                        rows.push(c);
                    }
                }
            }
        }
        "table2" => {
            for q in CoefficientId::SMOOTH {
                for d in deltas {
                    let mut c = ExperimentConfig::new(format!("table2_{}_{}", q.name(), tag(d)), 2, q, PriorKind::Network);
                    c.noise.delta = d;
                    c.gtol = 1e-7;
                    rows.push(c);
                }
            }
        }
        "graded_mesh" => {
            for k in 0..8 {
                let ratio = f64::from(1u32 << k);
                let mut c = ExperimentConfig::new(format!("graded_r{}", 1u32 << k), 1, CoefficientId::Const, PriorKind::Network);
                c.mesh.grading_ratio = ratio;
                c.mesh.cells = Some(cells_for_max_size(ratio, 1.0 / DEFAULT_CELLS_1D as f64));
                rows.push(c);
            }
        }
        "discontinuous" => {
            for p in priors {
                for d in deltas {
                    let mut c = ExperimentConfig::new(format!("step_{}_{}", p.name(), tag(d)), 1, CoefficientId::Step, p);
                    c.noise.delta = d;
                    rows.push(c);
                }
            }
        }
        "incomplete" => {
            for dist in [0.4, 0.2, 0.1] {
                for p in priors {
                    for d in deltas {
                        let mut c =
                            ExperimentConfig::new(format!("mask{dist}_{}_{}", p.name(), tag(d)), 1, CoefficientId::Const, p);
                        c.noise.delta = d;
                        c.mask_distance = Some(dist);
                        rows.push(c);
                    }
                }
            }
        }
        "morozov" => {
            for q in CoefficientId::SMOOTH {
                for p in [PriorKind::Fem, PriorKind::Network] {
                    let mut c = ExperimentConfig::new(format!("morozov_{}_{}", q.name(), p.name()), 1, q, p);
                    c.noise.delta = 0.05;
                    c.regularization = Some(RegularizationConfig::Morozov {
                        bracket: default_bracket(),
                        tol: default_bisection_tol(),
                    });
                    rows.push(c);
                }
            }
        }
        "illposed" => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    if let Some(out) = out {
        for c in &mut rows {
            c.output_dir = Some(out.join(&c.id));
        }
    }
    Ok(rows)
}

/// N values of the ill-posedness table.
pub const ILLPOSED_N: [u32; 4] = [1, 10, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub workers: usize,
    pub run: RunOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            workers: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            run: RunOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub id: String,
    pub rows: Vec<ResultRow>,
    /// Path of the aggregate CSV.
    pub table: PathBuf,
}

impl SuiteReport {
    pub fn all_completed(&self) -> bool {
        self.rows.iter().all(ResultRow::completed)
    }
}

/// Runs every row of a suite (in parallel up to `workers`) and writes
/// `<out>/<id>.csv` plus one directory per row.
pub fn run_suite(id: &str, out: &Path, opts: SuiteOptions) -> Result<SuiteReport> {
    fs::create_dir_all(out)?;
    let table = out.join(format!("{id}.csv"));
    if id == "illposed" {
        let rows = regcal::illposedness_table(&ILLPOSED_N)?;
        regcal::write_illposedness_csv(&rows, &table)?;
        return Ok(SuiteReport {
            id: id.into(),
            rows: Vec::new(),
            table,
        });
    }
    let configs = suite_configs(id, Some(out))?;
    let rows = par::with_workers(opts.workers, || {
        par::map_tasks(&configs, |cfg| match run_experiment(cfg, opts.run) {
            Ok(o) => o.row,
            Err(e) => {
                log::error!("{}: {e}", cfg.id);
                ResultRow::failed(cfg, &e)
            }
        })
    });
    let mut text = String::new();
    writeln!(text, "{}", ResultRow::HEADER).unwrap();
    for r in &rows {
        writeln!(text, "{}", r.to_csv()).unwrap();
    }
    write_atomic(&table, &text)?;
    Ok(SuiteReport {
        id: id.into(),
        rows,
        table,
    })
}

/// Maximum relative gradient error (against central differences) for one
/// problem at one parameter vector: `max_i |g_i - fd_i| / max_i |fd_i|`.
pub fn gradient_check(problem: &InverseProblem, params: &[f64], step: f64) -> Result<f64> {
    let report = problem.objective_and_gradient(params)?;
    let fd = par::map_tasks(&(0..params.len()).collect::<Vec<_>>(), |&k| -> Result<f64> {
        let mut a = params.to_vec();
        let mut b = params.to_vec();
        a[k] += step;
        b[k] -= step;
        Ok((problem.objective(&a)? - problem.objective(&b)?) / (2.0 * step))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    Ok(report
        .grad
        .iter()
        .zip(&fd)
        .map(|(g, f)| (g - f).abs())
        .fold(0.0, f64::max)
        / scale)
}

/// One case of the gradient check suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub case: String,
    pub max_rel_err: f64,
}

/// Finite-difference check of the full pipeline for both priors, 1D and 2D,
/// masked and unmasked, at `samples` random parameter vectors each.
pub fn check_gradients(samples: usize, seed: u64) -> Result<Vec<GradientCheck>> {
    use rand::{Rng, SeedableRng};
    let mut cases = Vec::new();
    for dim in [1usize, 2] {
        for prior in [PriorKind::Network, PriorKind::Fem] {
            for masked in [false, true] {
                let mut cfg = ExperimentConfig::new("grad", dim, CoefficientId::Linear, prior);
                if dim == 1 {
                    cfg.mesh.cells = Some(24);
                    cfg.mesh.grading_ratio = 2.0;
                } else {
                    cfg.mesh.nx = Some(6);
                    cfg.mesh.ny = Some(5);
                }
                cfg.noise.delta = 0.05;
                if masked {
                    cfg.mask_distance = Some(0.2);
                }
                let name = format!("{dim}d_{}_{}", prior.name(), if masked { "masked" } else { "full" });
                cases.push((name, cfg));
            }
        }
    }
    let results = par::map_tasks(&cases, |(name, cfg)| -> Result<GradientCheck> {
        let setup = build_setup(cfg)?;
        let n = setup.problem.n_params();
        let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let params: Vec<f64> = match cfg.prior.kind {
                PriorKind::Fem => (0..n).map(|_| rng.random_range(0.5..1.5)).collect(),
                PriorKind::Network => {
                    // weights in [0, 1) and biases in [0, 0.5) keep q positive
                    let layers = cfg.layers();
                    let mut p = Vec::with_capacity(n);
                    for l in 0..layers.len() - 1 {
                        p.extend((0..layers[l] * layers[l + 1]).map(|_| rng.random::<f64>()));
                        p.extend((0..layers[l + 1]).map(|_| 0.5 * rng.random::<f64>()));
                    }
                    debug_assert_eq!(p.len(), net::parameter_count(&layers));
                    p
                }
            };
            worst = worst.max(gradient_check(&setup.problem, &params, 1e-6)?);
        }
        Ok(GradientCheck {
            case: name.clone(),
            max_rel_err: worst,
        })
    });
    results.into_iter().collect()
}
