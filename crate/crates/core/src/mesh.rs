//! Simplicial meshes: graded 1D interval meshes and structured triangulations
//! of the unit square.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{MeshError, Result};

/// Tolerance used to classify a vertex as lying on the domain boundary.
const BOUNDARY_TOL: f64 = 1e-12;

/// An immutable simplicial mesh of (0, 1) or [0, 1]².
///
/// Vertex coordinates are stored flat with stride `dim`; cells are stored
/// flat with stride `dim + 1`. Cells of a 2D mesh are oriented
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<usize>,
    is_boundary: Vec<bool>,
    h_max: f64,
    h_min: f64,
}

impl Mesh {
    fn from_parts(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let n_vertices = coords.len() / dim;
        let per_cell = dim + 1;
        if cells.iter().any(|&v| v >= n_vertices) {
            return Err(MeshError::InvalidCell("vertex index out of range".into()).into());
        }
        let is_boundary: Vec<bool> = (0..n_vertices)
            .map(|i| {
                coords[i * dim..(i + 1) * dim]
                    .iter()
                    .any(|&c| c.abs() <= BOUNDARY_TOL || (c - 1.0).abs() <= BOUNDARY_TOL)
            })
            .collect();
        let boundary = (0..n_vertices).filter(|&i| is_boundary[i]).collect();
        let mut mesh = Mesh {
            dim,
            coords,
            cells,
            boundary,
            is_boundary,
            h_max: 0.0,
            h_min: f64::INFINITY,
        };
        for c in 0..mesh.cells.len() / per_cell {
            let measure = mesh.cell_measure(c);
            if !(measure > 0.0) {
                return Err(MeshError::InvalidCell(format!("cell {c} has measure {measure}")).into());
            }
            let d = mesh.cell_diameter(c);
            mesh.h_max = mesh.h_max.max(d);
            mesh.h_min = mesh.h_min.min(d);
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    /// Number of vertices per cell (`dim + 1`).
    pub fn nodes_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    /// Length (1D) or area (2D) of cell `c`.
    pub fn cell_measure(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        match self.dim {
            1 => self.vertex(cell[1])[0] - self.vertex(cell[0])[0],
            _ => {
                let (a, b, p) = (self.vertex(cell[0]), self.vertex(cell[1]), self.vertex(cell[2]));
                0.5 * ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    /// Largest vertex-to-vertex distance within cell `c`.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let cell = self.cell(c);
        let mut d: f64 = 0.0;
        for i in 0..cell.len() {
            for j in i + 1..cell.len() {
                let (a, b) = (self.vertex(cell[i]), self.vertex(cell[j]));
                let dist = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                d = d.max(dist);
            }
        }
        d
    }

    /// Gradients of the P1 basis functions of cell `c`, one `[dx, dy]` per
    /// local vertex (`dy` is zero in 1D).
    pub fn basis_gradients(&self, c: usize) -> [[f64; 2]; 3] {
        let cell = self.cell(c);
        match self.dim {
            1 => {
                let h = self.cell_measure(c);
                [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
            }
            _ => {
                let (a, b, p) = (self.vertex(cell[0]), self.vertex(cell[1]), self.vertex(cell[2]));
                let two_area = 2.0 * self.cell_measure(c);
                [
                    [(b[1] - p[1]) / two_area, (p[0] - b[0]) / two_area],
                    [(p[1] - a[1]) / two_area, (a[0] - p[0]) / two_area],
                    [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
                ]
            }
        }
    }

    /// Sum of all cell measures.
    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_measure(c)).sum()
    }

    /// Maps a reference-cell point (barycentric weights) to physical coordinates.
    pub fn map_point(&self, c: usize, bary: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (w, &v) in bary.iter().zip(self.cell(c)) {
            for (o, x) in out.iter_mut().zip(self.vertex(v)) {
                *o += w * x;
            }
        }
        out
    }

    /// Writes `vertices.csv` and `cells.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut v = fs::File::create(dir.join("vertices.csv"))?;
        writeln!(v, "{}", if self.dim == 1 { "index,x" } else { "index,x,y" })?;
        for i in 0..self.n_vertices() {
            let p = self.vertex(i);
            if self.dim == 1 {
                writeln!(v, "{i},{}", p[0])?;
            } else {
                writeln!(v, "{i},{},{}", p[0], p[1])?;
            }
        }
        let mut c = fs::File::create(dir.join("cells.csv"))?;
        writeln!(c, "{}", if self.dim == 1 { "cell,v0,v1" } else { "cell,v0,v1,v2" })?;
        for k in 0..self.n_cells() {
            let ids: Vec<String> = self.cell(k).iter().map(|v| v.to_string()).collect();
            writeln!(c, "{k},{}", ids.join(","))?;
        }
        Ok(())
    }
}

/// Builds a mesh of (0, 1) with `n_cells` cells whose sizes form a geometric
/// progression with `h_max / h_min == grading_ratio`. The smallest cell sits
/// at x = 0; a ratio of 1 gives a uniform mesh.
pub fn build_interval_mesh(n_cells: usize, grading_ratio: f64) -> Result<Mesh> {
    if n_cells < 2 {
        return Err(MeshError::InvalidArgument(format!("n_cells must be >= 2, got {n_cells}")).into());
    }
    if !grading_ratio.is_finite() || grading_ratio < 1.0 {
        return Err(MeshError::InvalidArgument(format!(
            "grading_ratio must be finite and >= 1, got {grading_ratio}"
        ))
        .into());
    }
    let growth = grading_ratio.powf(1.0 / (n_cells - 1) as f64);
    let sizes: Vec<f64> = (0..n_cells).map(|i| growth.powi(i as i32)).collect();
    let total: f64 = sizes.iter().sum();
    let mut coords = Vec::with_capacity(n_cells + 1);
    coords.push(0.0);
    let mut acc = 0.0;
    for s in &sizes[..n_cells - 1] {
        acc += s;
        coords.push(acc / total);
    }
    coords.push(1.0);
    let cells = (0..n_cells).flat_map(|i| [i, i + 1]).collect();
    Mesh::from_parts(1, coords, cells)
}

/// Smallest cell count for which a graded interval mesh with the given ratio
/// has `h_max <= target_h_max`.
pub fn cells_for_max_size(grading_ratio: f64, target_h_max: f64) -> usize {
    let h_max_of = |n: usize| {
        let growth = grading_ratio.powf(1.0 / (n - 1) as f64);
        let total: f64 = (0..n).map(|i| growth.powi(i as i32)).sum();
        growth.powi(n as i32 - 1) / total
    };
    let mut n = 2;
    while h_max_of(n) > target_h_max * (1.0 + 1e-12) {
        n += 1;
    }
    n
}

/// Structured right-diagonal triangulation of the unit square with
/// `nx * ny` squares, each split along its lower-left to upper-right diagonal.
pub fn build_unit_square_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!("nx, ny must be >= 1, got ({nx}, {ny})")).into());
    }
    let mut coords = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Exact endpoints keep the boundary test exact.
            let x = if i == nx { 1.0 } else { i as f64 / nx as f64 };
            let y = if j == ny { 1.0 } else { j as f64 / ny as f64 };
            coords.push(x);
            coords.push(y);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
        }
    }
    Mesh::from_parts(2, coords, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bisection() {
        let m = build_interval_mesh(2, 1.0).unwrap();
        let xs: Vec<f64> = (0..3).map(|i| m.vertex(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(m.boundary_vertices(), &[0, 2]);
    }

    #[test]
    fn uniform_101_cells() {
        let m = build_interval_mesh(101, 1.0).unwrap();
        assert!((m.h_max() - 1.0 / 101.0).abs() < 1e-14);
        assert!((m.h_min() - 1.0 / 101.0).abs() < 1e-14);
        assert_eq!(m.boundary_vertices(), &[0, 101]);
    }

    /// Independent route: solve sum_{i<n} h0 r^i = 1 for h0 by bisection,
    /// with r fixed by the requested ratio.
    fn bisection_h0(n: usize, ratio: f64) -> f64 {
        let r = ratio.powf(1.0 / (n - 1) as f64);
        let total = |h0: f64| (0..n).fold((0.0, h0), |(s, h), _| (s + h, h * r)).0 - 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn graded_ratio_128() {
        let m = build_interval_mesh(8, 128.0).unwrap();
        assert!((m.h_max() / m.h_min() - 128.0).abs() < 1e-10 * 128.0);
        let h0 = bisection_h0(8, 128.0);
        assert!((m.h_min() - h0).abs() < 1e-12);
        assert!((m.vertex(1)[0] - h0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_interval_args() {
        assert!(build_interval_mesh(1, 1.0).is_err());
        assert!(build_interval_mesh(4, 0.5).is_err());
        assert!(build_interval_mesh(4, f64::NAN).is_err());
        assert!(build_interval_mesh(4, f64::INFINITY).is_err());
    }

    #[test]
    fn square_single_cell() {
        let m = build_unit_square_mesh(1, 1).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert!((m.total_measure() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_vertices().len(), 4);
    }

    #[test]
    fn square_101() {
        let m = build_unit_square_mesh(101, 101).unwrap();
        assert_eq!(m.n_vertices(), 102 * 102);
        assert_eq!(m.n_cells(), 2 * 101 * 101);
        assert_eq!(m.boundary_vertices().len(), 4 * 101);
    }

    #[test]
    fn square_3_by_2_area() {
        let m = build_unit_square_mesh(3, 2).unwrap();
        let mut sum = 0.0;
        for c in 0..m.n_cells() {
            let v: Vec<&[f64]> = m.cell(c).iter().map(|&i| m.vertex(i)).collect();
            // shoelace
            sum += 0.5
                * ((v[0][0] * v[1][1] - v[1][0] * v[0][1])
                    + (v[1][0] * v[2][1] - v[2][0] * v[1][1])
                    + (v[2][0] * v[0][1] - v[0][0] * v[2][1]));
        }
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(build_unit_square_mesh(0, 3).is_err());
        assert!(build_unit_square_mesh(3, 0).is_err());
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = build_unit_square_mesh(3, 2).unwrap();
        for c in 0..m.n_cells() {
            let g = m.basis_gradients(c);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn max_size_helper() {
        assert_eq!(cells_for_max_size(1.0, 1.0 / 101.0), 101);
        for ratio in [2.0, 16.0, 128.0] {
            let n = cells_for_max_size(ratio, 0.01);
            let m = build_interval_mesh(n, ratio).unwrap();
            assert!(m.h_max() <= 0.01 * (1.0 + 1e-9));
            let coarser = build_interval_mesh(n - 1, ratio).unwrap();
            assert!(coarser.h_max() > 0.01);
        }
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        build_unit_square_mesh(1, 1).unwrap().write_csv(dir.path()).unwrap();
        let v = std::fs::read_to_string(dir.path().join("vertices.csv")).unwrap();
        assert_eq!(v.lines().count(), 5);
        let c = std::fs::read_to_string(dir.path().join("cells.csv")).unwrap();
        assert_eq!(c.lines().nth(1).unwrap(), "0,0,1,3");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn graded_measure_and_ratio(n in 2usize..300, ratio in 1.0f64..500.0) {
                let m = build_interval_mesh(n, ratio).unwrap();
                prop_assert!((m.total_measure() - 1.0).abs() < 1e-12);
                prop_assert!((m.h_max() / m.h_min() - ratio).abs() <= 1e-8 * ratio);
                // every interior vertex belongs to exactly two cells
                let mut count = vec![0usize; m.n_vertices()];
                for c in 0..m.n_cells() {
                    for &v in m.cell(c) { count[v] += 1; }
                }
                for v in 0..m.n_vertices() {
                    prop_assert_eq!(count[v], if m.is_boundary(v) { 1 } else { 2 });
                }
            }

            #[test]
            fn square_measure(nx in 1usize..30, ny in 1usize..30) {
                let m = build_unit_square_mesh(nx, ny).unwrap();
                prop_assert!((m.total_measure() - 1.0).abs() < 1e-12);
                prop_assert_eq!(m.boundary_vertices().len(), 2 * (nx + ny));
            }
        }
    }
}
