//! The inverse problem: synthetic data, masked misfit, regularization and the
//! total gradient with respect to the optimization parameters.

use std::time::Instant;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::adjoint;
use crate::analytic::{forcing, CoefficientId, SolutionId};
use crate::error::{Error, Result};
use crate::fem::{interpolate, load_vector, solve_forward, Assembler, DofField};
use crate::mesh::Mesh;
use crate::net::{self, Network};
use crate::par;
use crate::sparse::CsrMatrix;

/// Representation of the unknown coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// One parameter per vertex: the P1 coefficient values.
    FemSpace,
    /// Network parameters; q is sampled at the vertices.
    Network { layer_sizes: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Regularization {
    #[default]
    None,
    /// `alpha / 2 * int q^2`
    Tikhonov { alpha: f64 },
    /// `alpha / 2 * int (q - q_star)^2` with `q_star` given at the vertices.
    Generalized { alpha: f64, q_star: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Result of one objective evaluation.
#[derive(Debug, Clone)]
pub struct EvalReport {
    /// Total objective (misfit plus regularization).
    pub j: f64,
    /// `1/2 int_w (u - d)^2` alone.
    pub misfit: f64,
    pub grad: Vec<f64>,
    pub forward_solves: usize,
    pub wall_time: f64,
}

/// Synthetic forcing and (possibly noisy) data for a manufactured case.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub forcing: DofField,
    /// `int f phi_i` from the analytic forcing.
    pub load: Vec<f64>,
    pub data: DofField,
    /// Noise-free vertex samples of the exact solution.
    pub exact: DofField,
}

/// Adds `level * r`, `r ~ N(0, 1)`, to every interior vertex value, drawing
/// from a PCG64 stream seeded with `seed` in vertex order. Boundary values are
/// left exact.
pub fn add_noise(mesh: &Mesh, values: &[f64], level: f64, seed: u64) -> Result<Vec<f64>> {
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {level}")));
    }
    let mut out = values.to_vec();
    if level == 0.0 {
        return Ok(out);
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    for (i, v) in out.iter_mut().enumerate() {
        if !mesh.is_boundary(i) {
            let r: f64 = StandardNormal.sample(&mut rng);
            *v += level * r;
        }
    }
    Ok(out)
}

/// Forcing `f = -div(q grad u)` and noisy vertex data for a built-in pair.
pub fn make_synthetic_data(
    mesh: &Mesh,
    coefficient: CoefficientId,
    solution: SolutionId,
    level: f64,
    seed: u64,
) -> Result<SyntheticData> {
    if !(level >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {level}")));
    }
    if solution.dim() != mesh.dim() || !coefficient.supports_dim(mesh.dim()) {
        return Err(Error::InvalidArgument(format!(
            "{coefficient:?}/{solution:?} not defined in {}D",
            mesh.dim()
        )));
    }
    if coefficient.gradient(mesh.vertex(0)).is_none() {
        return Err(Error::InvalidArgument(format!(
            "{coefficient:?} has no classical forcing; use a FEM reference"
        )));
    }
    let forcing_fn = |x: &[f64]| forcing(coefficient, solution, x).unwrap();
    let load = load_vector(mesh, forcing_fn, 6)?;
    let forcing = interpolate(forcing_fn, mesh)?;
    let exact = interpolate(|x| solution.value(x), mesh)?;
    let data = DofField {
        values: add_noise(mesh, &exact.values, level, seed)?,
    };
    Ok(SyntheticData {
        forcing,
        load,
        data,
        exact,
    })
}

/// Per-cell observation weights for data within distance `d` of the
/// boundary. Cells straddling the cut get their covered fraction (exact in
/// 1D, estimated from 64 sub-triangle centroids in 2D).
pub fn boundary_mask(mesh: &Mesh, d: f64) -> Result<Vec<f64>> {
    if !(d > 0.0 && d <= 0.5) {
        return Err(Error::InvalidArgument(format!("mask distance must be in (0, 0.5], got {d}")));
    }
    let weights = (0..mesh.n_cells())
        .map(|c| {
            if mesh.dim() == 1 {
                let cell = mesh.cell(c);
                let (a, b) = (mesh.vertex(cell[0])[0], mesh.vertex(cell[1])[0]);
                let overlap = |lo: f64, hi: f64| (b.min(hi) - a.max(lo)).max(0.0);
                let covered = if d >= 0.5 { b - a } else { overlap(0.0, d) + overlap(1.0 - d, 1.0) };
                (covered / (b - a)).clamp(0.0, 1.0)
            } else {
                let k = 8;
                let mut inside = 0;
                for i in 0..k {
                    for j in 0..k - i {
                        // upward and downward sub-triangles of the k x k split
                        let mut cents = vec![[(i as f64 + 1.0 / 3.0) / k as f64, (j as f64 + 1.0 / 3.0) / k as f64]];
                        if i + j + 1 < k {
                            cents.push([(i as f64 + 2.0 / 3.0) / k as f64, (j as f64 + 2.0 / 3.0) / k as f64]);
                        }
                        for [s, t] in cents {
                            let p = mesh.map_point(c, &[1.0 - s - t, s, t]);
                            let dist = p[0].min(p[1]).min(1.0 - p[0]).min(1.0 - p[1]);
                            if dist <= d {
                                inside += 1;
                            }
                        }
                    }
                }
                inside as f64 / (k * k) as f64
            }
        })
        .collect();
    Ok(weights)
}

/// `1/2 (u - d)^T M_w (u - d)`: the exact mask-weighted L2 misfit of the P1 fields.
pub fn misfit(mesh: &Mesh, u: &DofField, data: &DofField, mask: &[f64]) -> Result<f64> {
    if mask.len() != mesh.n_cells() {
        return Err(Error::DimensionMismatch {
            what: "mask",
            expected: mesh.n_cells(),
            found: mask.len(),
        });
    }
    let mass = Assembler::new(mesh).mass(mesh, Some(mask));
    Ok(weighted_misfit(&mass, &u.values, &data.values))
}

fn weighted_misfit(mass: &CsrMatrix, u: &[f64], d: &[f64]) -> f64 {
    let e: Vec<f64> = u.iter().zip(d).map(|(a, b)| a - b).collect();
    0.5 * mass.bilinear(&e, &e)
}

/// Coefficient realized from a parameter vector, with the network Jacobian
/// `dq_k / dp` when applicable.
struct Realized {
    q: DofField,
    jacobian: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct InverseProblem {
    mesh: Mesh,
    assembler: Assembler,
    mass: CsrMatrix,
    masked_mass: CsrMatrix,
    load: Vec<f64>,
    boundary: DofField,
    data: DofField,
    mask: Vec<f64>,
    prior: Prior,
    regularization: Regularization,
    noise: NoiseSpec,
}

impl InverseProblem {
    /// Full observation mask, FEM-space prior and no regularization. The load
    /// is `M f`; see [`InverseProblem::with_load`] for an exact one.
    pub fn new(mesh: Mesh, forcing: DofField, boundary: DofField, data: DofField) -> Result<Self> {
        let n = mesh.n_vertices();
        for (what, f) in [("forcing", &forcing), ("boundary", &boundary), ("data", &data)] {
            if f.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: f.len(),
                });
            }
        }
        let assembler = Assembler::new(&mesh);
        let mass = assembler.mass(&mesh, None);
        let mask = vec![1.0; mesh.n_cells()];
        let load = mass.mul_vec(&forcing.values);
        Ok(InverseProblem {
            masked_mass: mass.clone(),
            mass,
            assembler,
            mesh,
            load,
            boundary,
            data,
            mask,
            prior: Prior::FemSpace,
            regularization: Regularization::None,
            noise: NoiseSpec::default(),
        })
    }

    pub fn with_load(mut self, load: Vec<f64>) -> Result<Self> {
        if load.len() != self.mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "load",
                expected: self.mesh.n_vertices(),
                found: load.len(),
            });
        }
        self.load = load;
        Ok(self)
    }

    pub fn with_mask(mut self, mask: Vec<f64>) -> Result<Self> {
        if mask.len() != self.mesh.n_cells() {
            return Err(Error::DimensionMismatch {
                what: "mask",
                expected: self.mesh.n_cells(),
                found: mask.len(),
            });
        }
        if let Some(w) = mask.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidArgument(format!("mask weight {w} outside [0, 1]")));
        }
        self.masked_mass = self.assembler.mass(&self.mesh, Some(&mask));
        self.mask = mask;
        Ok(self)
    }

    pub fn with_prior(mut self, prior: Prior) -> Result<Self> {
        if let Prior::Network { layer_sizes } = &prior {
            if layer_sizes.first() != Some(&self.mesh.dim()) || layer_sizes.last() != Some(&1) {
                return Err(Error::InvalidArgument(format!(
                    "network {layer_sizes:?} does not map R^{} -> R",
                    self.mesh.dim()
                )));
            }
        }
        self.prior = prior;
        Ok(self)
    }

    pub fn with_regularization(mut self, regularization: Regularization) -> Result<Self> {
        match &regularization {
            Regularization::None => {}
            Regularization::Tikhonov { alpha } | Regularization::Generalized { alpha, .. } if !(*alpha >= 0.0) => {
                return Err(Error::InvalidArgument(format!("regularization weight must be >= 0, got {alpha}")));
            }
            Regularization::Generalized { q_star, .. } if q_star.len() != self.mesh.n_vertices() => {
                return Err(Error::DimensionMismatch {
                    what: "q_star",
                    expected: self.mesh.n_vertices(),
                    found: q_star.len(),
                });
            }
            _ => {}
        }
        self.regularization = regularization;
        Ok(self)
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn data(&self) -> &DofField {
        &self.data
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn regularization(&self) -> &Regularization {
        &self.regularization
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Number of optimization parameters for the current prior.
    pub fn n_params(&self) -> usize {
        match &self.prior {
            Prior::FemSpace => self.mesh.n_vertices(),
            Prior::Network { layer_sizes } => net::parameter_count(layer_sizes),
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                what: "parameters",
                expected: self.n_params(),
                found: params.len(),
            });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i}")));
        }
        Ok(())
    }

    fn realize(&self, params: &[f64], with_jacobian: bool) -> Result<Realized> {
        match &self.prior {
            Prior::FemSpace => Ok(Realized {
                q: DofField { values: params.to_vec() },
                jacobian: None,
            }),
            Prior::Network { layer_sizes } => {
                let net = Network::from_params(layer_sizes, params)?;
                let mesh = &self.mesh;
                if with_jacobian {
                    let rows = par::map_range(mesh.n_vertices(), |k| net.forward_and_gradient(mesh.vertex(k)));
                    let (q, jac): (Vec<f64>, Vec<Vec<f64>>) = rows.into_iter().unzip();
                    Ok(Realized {
                        q: DofField { values: q },
                        jacobian: Some(jac),
                    })
                } else {
                    let q = par::map_range(mesh.n_vertices(), |k| net.forward(mesh.vertex(k)));
                    Ok(Realized {
                        q: DofField { values: q },
                        jacobian: None,
                    })
                }
            }
        }
    }

    /// Vertex values of the coefficient represented by `params`.
    pub fn coefficient(&self, params: &[f64]) -> Result<DofField> {
        self.check_params(params)?;
        Ok(self.realize(params, false)?.q)
    }

    /// Forward solution for the coefficient represented by `params`.
    pub fn solve_state(&self, params: &[f64]) -> Result<(DofField, DofField)> {
        let q = self.coefficient(params)?;
        let sys = self.assembler.assemble_with_load(&self.mesh, &q, &self.load, &self.boundary)?;
        let u = solve_forward(&sys)?.u;
        Ok((q, u))
    }

    /// Misfit `1/2 int_w (u - d)^2` of a state.
    pub fn misfit_of(&self, u: &DofField) -> f64 {
        weighted_misfit(&self.masked_mass, &u.values, &self.data.values)
    }

    /// Objective and its gradient with respect to `params`.
    pub fn objective_and_gradient(&self, params: &[f64]) -> Result<EvalReport> {
        let start = Instant::now();
        self.check_params(params)?;
        let realized = self.realize(params, true)?;
        let q = &realized.q;
        let wrap = |e: Error| Error::Evaluation {
            source: Box::new(e),
            q_snapshot: q.values.clone(),
        };

        let system = self
            .assembler
            .assemble_with_load(&self.mesh, q, &self.load, &self.boundary)
            .map_err(wrap)?;
        let fwd = solve_forward(&system).map_err(wrap)?;
        let misfit = self.misfit_of(&fwd.u);
        let lambda =
            adjoint::solve_adjoint(&system, &fwd.factor, &self.masked_mass, &fwd.u, &self.data).map_err(wrap)?;
        let mut grad_q = adjoint::gradient_with(&self.assembler, &self.mesh, &fwd.u, &lambda).map_err(wrap)?;

        let mut j = misfit;
        let reg = match &self.regularization {
            Regularization::None => None,
            Regularization::Tikhonov { alpha } => Some((*alpha, q.values.clone())),
            Regularization::Generalized { alpha, q_star } => {
                Some((*alpha, q.values.iter().zip(q_star).map(|(a, b)| a - b).collect()))
            }
        };
        if let Some((alpha, dev)) = reg {
            let m_dev = self.mass.mul_vec(&dev);
            j += 0.5 * alpha * dev.iter().zip(&m_dev).map(|(a, b)| a * b).sum::<f64>();
            for (g, md) in grad_q.iter_mut().zip(&m_dev) {
                *g += alpha * md;
            }
        }

        let grad = match realized.jacobian {
            None => grad_q,
            Some(jac) => {
                let mut grad = vec![0.0; self.n_params()];
                for (gq, row) in grad_q.iter().zip(&jac) {
                    for (g, dq) in grad.iter_mut().zip(row) {
                        *g += gq * dq;
                    }
                }
                grad
            }
        };
        Ok(EvalReport {
            j,
            misfit,
            grad,
            forward_solves: 1,
            wall_time: start.elapsed().as_secs_f64(),
        })
    }

    /// Objective value only (one forward solve).
    pub fn objective(&self, params: &[f64]) -> Result<f64> {
        let (q, u) = self.solve_state(params)?;
        let mut j = self.misfit_of(&u);
        let dev: Option<(f64, Vec<f64>)> = match &self.regularization {
            Regularization::None => None,
            Regularization::Tikhonov { alpha } => Some((*alpha, q.values.clone())),
            Regularization::Generalized { alpha, q_star } => {
                Some((*alpha, q.values.iter().zip(q_star).map(|(a, b)| a - b).collect()))
            }
        };
        if let Some((alpha, dev)) = dev {
            j += 0.5 * alpha * self.mass.bilinear(&dev, &dev);
        }
        Ok(j)
    }
}
