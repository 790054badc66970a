//! Discrete adjoint of the P1 Poisson system.
//!
//! For `F(u, q) = A(q) u - b = 0` on the interior rows and the misfit
//! `J = 1/2 (u - d)^T M_w (u - d)`, the adjoint `lambda` solves
//! `A lambda = -M_w (u - d)` with homogeneous Dirichlet rows, and
//! `dJ/dq_k = lambda^T (dA/dq_k) u`. The stiffness depends linearly on the
//! vertex values of `q` through the cell means, so `dA/dq_k` collects
//! `|T| / (d + 1) * grad phi_i . grad phi_j` over the cells touching `k`.
//! The boundary columns are kept in the derivative: the eliminated right-hand
//! side `b - A_IB g` depends on `q` too.

use crate::error::{Error, Result};
use crate::fem::{Assembler, DofField, SparseSystem};
use crate::mesh::Mesh;
use crate::par;
use crate::sparse::{Cholesky, CsrMatrix};

/// Adjoint variable and coefficient gradient from one adjoint solve.
#[derive(Debug, Clone)]
pub struct AdjointState {
    pub lambda: DofField,
    pub grad_q: Vec<f64>,
}

/// Solves `A lambda = -M_w (u - data)` reusing the forward factorization.
pub fn solve_adjoint(
    system: &SparseSystem,
    factor: &Cholesky,
    masked_mass: &CsrMatrix,
    u: &DofField,
    data: &DofField,
) -> Result<DofField> {
    let n = system.rhs.len();
    for (what, len) in [("u", u.len()), ("data", data.len()), ("mass", masked_mass.n())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    let residual: Vec<f64> = u.values.iter().zip(&data.values).map(|(a, b)| a - b).collect();
    let mut rhs: Vec<f64> = masked_mass.mul_vec(&residual).into_iter().map(|v| -v).collect();
    for &b in &system.constrained_rows {
        rhs[b] = 0.0;
    }
    factor.solve_in_place(&mut rhs);
    for &b in &system.constrained_rows {
        rhs[b] = 0.0;
    }
    Ok(DofField { values: rhs })
}

/// Convenience form that builds the mask-weighted mass matrix.
pub fn solve_adjoint_masked(
    mesh: &Mesh,
    system: &SparseSystem,
    factor: &Cholesky,
    u: &DofField,
    data: &DofField,
    mask: &[f64],
) -> Result<DofField> {
    if mask.len() != mesh.n_cells() {
        return Err(Error::DimensionMismatch {
            what: "mask",
            expected: mesh.n_cells(),
            found: mask.len(),
        });
    }
    let mass = Assembler::new(mesh).mass(mesh, Some(mask));
    solve_adjoint(system, factor, &mass, u, data)
}

/// `grad_q[k] = lambda^T (dA/dq_k) u` using cached cell gradient products.
pub fn gradient_with(assembler: &Assembler, mesh: &Mesh, u: &DofField, lambda: &DofField) -> Result<Vec<f64>> {
    let n = mesh.n_vertices();
    if u.len() != n || lambda.len() != n {
        return Err(Error::DimensionMismatch {
            what: "gradient fields",
            expected: n,
            found: if u.len() != n { u.len() } else { lambda.len() },
        });
    }
    let npc = mesh.nodes_per_cell();
    let per_cell = par::map_range(mesh.n_cells(), |c| {
        let cell = mesh.cell(c);
        let g = assembler.grad_products(c);
        let mut s = 0.0;
        for i in 0..npc {
            let li = lambda.values[cell[i]];
            if li == 0.0 {
                continue;
            }
            for j in 0..npc {
                s += li * g[i][j] * u.values[cell[j]];
            }
        }
        s / npc as f64
    });
    let mut grad = vec![0.0; n];
    for (c, s) in per_cell.into_iter().enumerate() {
        for &v in mesh.cell(c) {
            grad[v] += s;
        }
    }
    Ok(grad)
}

/// `grad_q[k] = lambda^T (dA/dq_k) u` for every vertex `k`.
pub fn gradient_wrt_coefficient(mesh: &Mesh, u: &DofField, lambda: &DofField) -> Result<Vec<f64>> {
    gradient_with(&Assembler::new(mesh), mesh, u, lambda)
}
