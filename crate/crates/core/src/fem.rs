//! P1 finite elements for `-div(q grad u) = f` with Dirichlet data.
//!
//! The coefficient `q`, the forcing `f` and the solution all live in the
//! vertex (P1) space. Element stiffness uses the exact integral of the
//! interpolated `q` (mean of the vertex values times the constant gradient
//! product); the load vector is `M f` with the consistent mass matrix.
//! Dirichlet rows and columns are eliminated symmetrically.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::par;
use crate::quadrature::simplex_rule;
use crate::sparse::{Cholesky, CsrMatrix};

/// Values of a P1 field, one per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DofField {
    pub values: Vec<f64>,
}

impl DofField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "dof field",
                expected: mesh.n_vertices(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("dof field value at vertex {i}")));
        }
        Ok(DofField { values })
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        DofField {
            values: vec![value; mesh.n_vertices()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples `func` at every vertex.
pub fn interpolate<F: Fn(&[f64]) -> f64>(func: F, mesh: &Mesh) -> Result<DofField> {
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for i in 0..mesh.n_vertices() {
        let v = func(mesh.vertex(i));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "interpolation at vertex {i} ({:?}) gave {v}",
                mesh.vertex(i)
            )));
        }
        values.push(v);
    }
    Ok(DofField { values })
}

/// Assembled linear system after symmetric Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained_rows: Vec<usize>,
}

/// Forward solution together with the factorization that produced it, so
/// the adjoint solve can reuse it.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub u: DofField,
    pub factor: Cholesky,
}

/// Local matrix entry (i, j) of `grad phi_i . grad phi_j` times the cell measure.
fn gradient_products(mesh: &Mesh, c: usize) -> [[f64; 3]; 3] {
    let g = mesh.basis_gradients(c);
    let m = mesh.cell_measure(c);
    let n = mesh.nodes_per_cell();
    let mut out = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = m * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    out
}

/// Consistent P1 mass matrix entry for a cell of the given measure.
fn local_mass(dim: usize, measure: f64, i: usize, j: usize) -> f64 {
    let denom = ((dim + 1) * (dim + 2)) as f64;
    measure * if i == j { 2.0 } else { 1.0 } / denom
}

/// Cached sparsity pattern and local-to-global offsets for one mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    pattern: CsrMatrix,
    /// For every cell, offsets of its `n x n` local entries in the value array.
    offsets: Vec<usize>,
    /// Per-cell `measure * grad phi_i . grad phi_j`.
    grad_products: Vec<[[f64; 3]; 3]>,
    nodes_per_cell: usize,
}

impl Assembler {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.nodes_per_cell();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
        for c in 0..mesh.n_cells() {
            for &a in mesh.cell(c) {
                rows[a].extend_from_slice(mesh.cell(c));
            }
        }
        let pattern = CsrMatrix::from_pattern(rows);
        let mut offsets = Vec::with_capacity(mesh.n_cells() * n * n);
        for c in 0..mesh.n_cells() {
            let cell = mesh.cell(c);
            for &a in cell {
                for &b in cell {
                    offsets.push(pattern.position(a, b).expect("cell entry in pattern"));
                }
            }
        }
        let grad_products = par::map_range(mesh.n_cells(), |c| gradient_products(mesh, c));
        Assembler {
            pattern,
            offsets,
            grad_products,
            nodes_per_cell: n,
        }
    }

    pub fn grad_products(&self, c: usize) -> &[[f64; 3]; 3] {
        &self.grad_products[c]
    }

    fn scatter(&self, matrix: &mut CsrMatrix, locals: impl Iterator<Item = [[f64; 3]; 3]>) {
        let n = self.nodes_per_cell;
        let values = matrix.values_mut();
        for (c, local) in locals.enumerate() {
            let off = &self.offsets[c * n * n..(c + 1) * n * n];
            for i in 0..n {
                for j in 0..n {
                    values[off[i * n + j]] += local[i][j];
                }
            }
        }
    }

    /// Stiffness matrix without boundary conditions.
    pub fn stiffness(&self, mesh: &Mesh, q: &[f64]) -> CsrMatrix {
        let n = self.nodes_per_cell;
        let locals = par::map_range(mesh.n_cells(), |c| {
            let cell = mesh.cell(c);
            let q_mean = cell.iter().map(|&v| q[v]).sum::<f64>() / n as f64;
            let mut local = self.grad_products[c];
            for row in local.iter_mut().take(n) {
                for e in row.iter_mut().take(n) {
                    *e *= q_mean;
                }
            }
            local
        });
        let mut k = self.pattern.clone();
        self.scatter(&mut k, locals.into_iter());
        k
    }

    /// Consistent mass matrix, each cell scaled by `cell_weights[c]` when given.
    pub fn mass(&self, mesh: &Mesh, cell_weights: Option<&[f64]>) -> CsrMatrix {
        let n = self.nodes_per_cell;
        let dim = mesh.dim();
        let locals = (0..mesh.n_cells()).map(|c| {
            let w = cell_weights.map_or(1.0, |cw| cw[c]);
            let m = mesh.cell_measure(c) * w;
            let mut local = [[0.0; 3]; 3];
            for (i, row) in local.iter_mut().enumerate().take(n) {
                for (j, e) in row.iter_mut().enumerate().take(n) {
                    *e = local_mass(dim, m, i, j);
                }
            }
            local
        });
        let mut m = self.pattern.clone();
        self.scatter(&mut m, locals);
        m
    }

    /// Assembles and applies Dirichlet conditions; `g` is read at boundary
    /// vertices only.
    pub fn assemble(&self, mesh: &Mesh, q: &DofField, f: &DofField, g: &DofField) -> Result<SparseSystem> {
        for (what, field) in [("q", q), ("f", f), ("g", g)] {
            if field.len() != mesh.n_vertices() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: mesh.n_vertices(),
                    found: field.len(),
                });
            }
        }
        let load = self.mass(mesh, None).mul_vec(&f.values);
        self.assemble_with_load(mesh, q, &load, g)
    }

    /// Like [`Assembler::assemble`] with a precomputed load vector `b_i = int f phi_i`.
    pub fn assemble_with_load(&self, mesh: &Mesh, q: &DofField, load: &[f64], g: &DofField) -> Result<SparseSystem> {
        for (what, n) in [("q", q.len()), ("load", load.len()), ("g", g.len())] {
            if n != mesh.n_vertices() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: mesh.n_vertices(),
                    found: n,
                });
            }
        }
        if let Some(i) = q.values.iter().position(|&v| v <= 0.0) {
            log::debug!("coefficient is non-positive at vertex {i} (q = {})", q.values[i]);
        }
        let mut a = self.stiffness(mesh, &q.values);
        let mut rhs = load.to_vec();
        apply_dirichlet(mesh, &mut a, &mut rhs, &g.values);
        Ok(SparseSystem {
            matrix: a,
            rhs,
            constrained_rows: mesh.boundary_vertices().to_vec(),
        })
    }
}

/// Symmetric elimination: rhs is corrected by the boundary columns, then
/// boundary rows and columns are zeroed with a unit diagonal.
fn apply_dirichlet(mesh: &Mesh, a: &mut CsrMatrix, rhs: &mut [f64], g: &[f64]) {
    let n = a.n();
    let mut bc = vec![0.0; n];
    for &b in mesh.boundary_vertices() {
        bc[b] = g[b];
    }
    let correction = a.mul_vec(&bc);
    for i in 0..n {
        if !mesh.is_boundary(i) {
            rhs[i] -= correction[i];
        }
    }
    a.for_each_entry_mut(|i, j, v| {
        if mesh.is_boundary(i) || mesh.is_boundary(j) {
            *v = if i == j { 1.0 } else { 0.0 };
        }
    });
    for &b in mesh.boundary_vertices() {
        rhs[b] = g[b];
    }
}

/// Assembles `-div(q grad u) = f`, `u = g` on the boundary.
pub fn assemble_system(mesh: &Mesh, q: &DofField, f: &DofField, g: &DofField) -> Result<SparseSystem> {
    Assembler::new(mesh).assemble(mesh, q, f, g)
}

/// Factorizes and solves the assembled system.
pub fn solve_forward(system: &SparseSystem) -> Result<ForwardSolution> {
    let factor = system.matrix.cholesky()?;
    let u = factor.solve(&system.rhs);
    Ok(ForwardSolution {
        u: DofField { values: u },
        factor,
    })
}

/// Load vector `b_i = int f phi_i` for an analytic `f`, by per-cell
/// quadrature of the given degree.
pub fn load_vector<F: Fn(&[f64]) -> f64 + Sync>(mesh: &Mesh, f: F, degree: usize) -> Result<Vec<f64>> {
    let rule = simplex_rule(mesh.dim(), degree);
    let npc = mesh.nodes_per_cell();
    let locals = par::map_range(mesh.n_cells(), |c| {
        let measure = mesh.cell_measure(c);
        let mut local = [0.0; 3];
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(c, bary);
            let fx = f(&x[..mesh.dim()]);
            for (l, b) in local.iter_mut().zip(bary).take(npc) {
                *l += w * measure * fx * b;
            }
        }
        local
    });
    let mut b = vec![0.0; mesh.n_vertices()];
    for (c, local) in locals.iter().enumerate() {
        for (k, &v) in mesh.cell(c).iter().enumerate() {
            b[v] += local[k];
        }
    }
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("load vector entry {i}")));
    }
    Ok(b)
}

/// L2 norm of `u_h - exact` by cell-wise quadrature exact to `order`.
pub fn error_norm<F: Fn(&[f64]) -> f64>(mesh: &Mesh, u: &DofField, exact: F, order: usize) -> Result<f64> {
    if order < 4 {
        return Err(Error::InvalidArgument(format!("quadrature order must be >= 4, got {order}")));
    }
    if u.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "error_norm field",
            expected: mesh.n_vertices(),
            found: u.len(),
        });
    }
    let rule = simplex_rule(mesh.dim(), order);
    let mut total = 0.0;
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        let mut local = 0.0;
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let bary = &bary[..cell.len()];
            let uh: f64 = cell.iter().zip(bary).map(|(&v, b)| b * u.values[v]).sum();
            let p = mesh.map_point(c, bary);
            let e = uh - exact(&p[..mesh.dim()]);
            local += w * e * e;
        }
        total += local * mesh.cell_measure(c);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("error norm integrand".into()));
    }
    Ok(total.sqrt())
}

/// L-infinity norm of the nodal difference.
pub fn nodal_max_error<F: Fn(&[f64]) -> f64>(mesh: &Mesh, u: &DofField, exact: F) -> f64 {
    (0..mesh.n_vertices())
        .map(|i| (u.values[i] - exact(mesh.vertex(i))).abs())
        .fold(0.0, f64::max)
}

/// Evaluates a P1 field of a 1D mesh at `x` (clamped to the mesh).
pub fn eval_1d(mesh: &Mesh, values: &[f64], x: f64) -> f64 {
    let n = mesh.n_vertices();
    let xs = |i: usize| mesh.vertex(i)[0];
    if x <= xs(0) {
        return values[0];
    }
    if x >= xs(n - 1) {
        return values[n - 1];
    }
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (x - xs(lo)) / (xs(hi) - xs(lo));
    (1.0 - t) * values[lo] + t * values[hi]
}

/// Writes vertex coordinates followed by the named value columns.
pub fn write_fields_csv(path: &Path, mesh: &Mesh, columns: &[(&str, &[f64])]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = String::new();
    out.push_str(if mesh.dim() == 1 { "index,x" } else { "index,x,y" });
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..mesh.n_vertices() {
        out.push_str(&i.to_string());
        for x in mesh.vertex(i) {
            out.push_str(&format!(",{x:e}"));
        }
        for (_, col) in columns {
            out.push_str(&format!(",{:e}", col[i]));
        }
        out.push('\n');
    }
    fs::File::create(path)?.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_unit_square_mesh};
    use std::f64::consts::PI;

    fn solve(mesh: &Mesh, q: &DofField, f: &DofField, g: &DofField) -> DofField {
        let sys = assemble_system(mesh, q, f, g).unwrap();
        solve_forward(&sys).unwrap().u
    }

    #[test]
    fn parabola_1d() {
        let mesh = build_interval_mesh(16, 1.0).unwrap();
        let q = DofField::constant(&mesh, 1.0);
        let f = DofField::constant(&mesh, 2.0);
        let g = DofField::constant(&mesh, 0.0);
        let u = solve(&mesh, &q, &f, &g);
        let h = mesh.h_max();
        let err = nodal_max_error(&mesh, &u, |x| x[0] * (1.0 - x[0]));
        assert!(err <= h * h, "{err}");
    }

    /// Manufactured case q = 1 + x, u = sin^2(2 pi x). The forcing is
    /// checked against a central difference of the flux q u'.
    #[test]
    fn manufactured_variable_coefficient() {
        let u_exact = |x: f64| (2.0 * PI * x).sin().powi(2);
        let f_exact = |x: f64| {
            // -(q u')' = -(u' + (1 + x) u''), u' = 2 pi sin 4 pi x, u'' = 8 pi^2 cos 4 pi x
            -(2.0 * PI * (4.0 * PI * x).sin() + (1.0 + x) * 8.0 * PI * PI * (4.0 * PI * x).cos())
        };
        let flux = |x: f64| {
            let h = 1e-5;
            (1.0 + x) * (u_exact(x + h) - u_exact(x - h)) / (2.0 * h)
        };
        for &x in &[0.1, 0.37, 0.8] {
            let h = 1e-4;
            let fd = -(flux(x + h) - flux(x - h)) / (2.0 * h);
            assert!((fd - f_exact(x)).abs() < 1e-3 * f_exact(x).abs().max(1.0));
        }
        let mut errs = Vec::new();
        let mut errs_interp = Vec::new();
        for n in [101, 202] {
            let mesh = build_interval_mesh(n, 1.0).unwrap();
            let q = interpolate(|x| 1.0 + x[0], &mesh).unwrap();
            let g = DofField::constant(&mesh, 0.0);
            let load = load_vector(&mesh, |x| f_exact(x[0]), 6).unwrap();
            let sys = Assembler::new(&mesh).assemble_with_load(&mesh, &q, &load, &g).unwrap();
            let u = solve_forward(&sys).unwrap().u;
            errs.push(error_norm(&mesh, &u, |x| u_exact(x[0]), 5).unwrap());

            let f = interpolate(|x| f_exact(x[0]), &mesh).unwrap();
            let u = solve(&mesh, &q, &f, &g);
            errs_interp.push(error_norm(&mesh, &u, |x| u_exact(x[0]), 5).unwrap());
        }
        assert!(errs[0] < 1e-3, "{errs:?}");
        for e in [&errs, &errs_interp] {
            let ratio = e[0] / e[1];
            assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        }
        // the interpolated load adds an O(h^2) nodal error of the same size
        assert!(errs_interp[0] < 2.5 * errs[0], "{errs_interp:?}");
    }

    #[test]
    fn sin2_convergence_q1() {
        let u_exact = |x: f64| (2.0 * PI * x).sin().powi(2);
        let mut errs = Vec::new();
        for n in [101, 202] {
            let mesh = build_interval_mesh(n, 1.0).unwrap();
            let q = DofField::constant(&mesh, 1.0);
            let load = load_vector(&mesh, |x| -8.0 * PI * PI * (4.0 * PI * x[0]).cos(), 6).unwrap();
            let g = DofField::constant(&mesh, 0.0);
            let sys = Assembler::new(&mesh).assemble_with_load(&mesh, &q, &load, &g).unwrap();
            let u = solve_forward(&sys).unwrap().u;
            // nodally exact in 1D for constant q and exact load
            assert!(nodal_max_error(&mesh, &u, |x| u_exact(x[0])) < 1e-10);
            let r = sys.matrix.mul_vec(&u.values);
            let bmax = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let res = r.iter().zip(&sys.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(res <= 1e-10 * bmax);
            errs.push(error_norm(&mesh, &u, |x| u_exact(x[0]), 5).unwrap());
        }
        assert!(errs[0] <= 1e-3);
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn degenerate_coefficient_is_singular() {
        let mesh = build_interval_mesh(10, 1.0).unwrap();
        let q = interpolate(|x| if (0.3..=0.6).contains(&x[0]) { 0.0 } else { 1.0 }, &mesh).unwrap();
        let f = DofField::constant(&mesh, 1.0);
        let g = DofField::constant(&mesh, 0.0);
        let sys = assemble_system(&mesh, &q, &f, &g).unwrap();
        assert!(matches!(solve_forward(&sys), Err(Error::SingularSystem { .. })));

        let q = interpolate(|x| if (0.3..=0.6).contains(&x[0]) { -1.0 } else { 1.0 }, &mesh).unwrap();
        let sys = assemble_system(&mesh, &q, &f, &g).unwrap();
        assert!(matches!(solve_forward(&sys), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn patch_test() {
        for mesh in [build_interval_mesh(7, 3.0).unwrap(), build_unit_square_mesh(5, 4).unwrap()] {
            let lin = |x: &[f64]| 0.3 + 1.7 * x[0] - if x.len() > 1 { 0.6 * x[1] } else { 0.0 };
            let q = DofField::constant(&mesh, 2.5);
            let f = DofField::constant(&mesh, 0.0);
            let g = interpolate(lin, &mesh).unwrap();
            let u = solve(&mesh, &q, &f, &g);
            assert!(nodal_max_error(&mesh, &u, lin) <= 1e-12);
        }
    }

    #[test]
    fn stiffness_symmetric_and_spd() {
        let mesh = build_unit_square_mesh(6, 5).unwrap();
        let q = interpolate(|x| 1.0 + x[0] * x[1], &mesh).unwrap();
        let f = DofField::constant(&mesh, 1.0);
        let g = interpolate(|x| x[0], &mesh).unwrap();
        let sys = assemble_system(&mesh, &q, &f, &g).unwrap();
        assert!(sys.matrix.asymmetry() <= 1e-12);
        assert!(sys.matrix.cholesky().is_ok());
        let v: Vec<f64> = (0..mesh.n_vertices()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        assert!(sys.matrix.bilinear(&v, &v) > 0.0);
    }

    #[test]
    fn mass_row_sums() {
        for mesh in [build_interval_mesh(9, 5.0).unwrap(), build_unit_square_mesh(4, 7).unwrap()] {
            let m = Assembler::new(&mesh).mass(&mesh, None);
            let ones = vec![1.0; mesh.n_vertices()];
            let rows = m.mul_vec(&ones);
            let mut patch = vec![0.0; mesh.n_vertices()];
            for c in 0..mesh.n_cells() {
                for &v in mesh.cell(c) {
                    patch[v] += mesh.cell_measure(c) / mesh.nodes_per_cell() as f64;
                }
            }
            for (r, p) in rows.iter().zip(&patch) {
                assert!((r - p).abs() < 1e-14);
            }
            assert!((rows.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn convergence_2d() {
        let u_exact = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let mut errs = Vec::new();
        for n in [8, 16, 32, 64] {
            let mesh = build_unit_square_mesh(n, n).unwrap();
            let q = DofField::constant(&mesh, 1.0);
            let f = interpolate(|x| 2.0 * PI * PI * u_exact(x), &mesh).unwrap();
            let g = DofField::constant(&mesh, 0.0);
            let u = solve(&mesh, &q, &f, &g);
            errs.push(error_norm(&mesh, &u, u_exact, 5).unwrap());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() <= 0.2, "{errs:?}");
        }
    }

    #[test]
    fn error_norm_cases() {
        let mesh = build_interval_mesh(13, 2.0).unwrap();
        let lin = interpolate(|x| 2.0 * x[0] - 1.0, &mesh).unwrap();
        assert!(error_norm(&mesh, &lin, |x| 2.0 * x[0] - 1.0, 5).unwrap() < 1e-14);
        let zero = DofField::constant(&mesh, 0.0);
        assert!((error_norm(&mesh, &zero, |_| 1.0, 5).unwrap() - 1.0).abs() < 1e-14);
        let fine = build_interval_mesh(50, 1.0).unwrap();
        let zero = DofField::constant(&fine, 0.0);
        let e = error_norm(&fine, &zero, |x| (PI * x[0]).sin(), 5).unwrap();
        assert!((e - 0.5f64.sqrt()).abs() < 1e-6);
        assert!(error_norm(&fine, &zero, |_| 1.0, 3).is_err());
    }

    #[test]
    fn interpolation_cases() {
        let mesh = build_interval_mesh(4, 1.0).unwrap();
        assert!(interpolate(|_| 1.0, &mesh).unwrap().values.iter().all(|&v| v == 1.0));
        let xs = interpolate(|x| x[0], &mesh).unwrap();
        assert_eq!(xs.values, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = interpolate(|x| (2.0 * PI * x[0]).sin().powi(2), &mesh).unwrap();
        assert_eq!(s.values[1], 1.0);
        let err = interpolate(|x| 1.0 / (x[0] - 0.5), &mesh).unwrap_err();
        assert!(err.to_string().contains("vertex 2"));
    }

    #[test]
    fn eval_1d_piecewise_linear() {
        let mesh = build_interval_mesh(5, 4.0).unwrap();
        let vals: Vec<f64> = (0..6).map(|i| mesh.vertex(i)[0] * 3.0 + 1.0).collect();
        for &x in &[0.0, 0.013, 0.4, 0.99, 1.0] {
            assert!((eval_1d(&mesh, &vals, x) - (3.0 * x + 1.0)).abs() < 1e-14);
        }
    }
}
