//! Gauss quadrature on the unit interval and the reference triangle.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points mapped to [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p1 = P_n(x), p0 = P_{n-1}(x)
            let (mut p0, mut p1) = (0.0, 1.0);
            for k in 1..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Quadrature rule over a reference simplex, as barycentric points with
/// weights summing to one (multiply by the cell measure).
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Rule on the reference interval exact for polynomials of degree `degree`.
pub fn interval_rule(degree: usize) -> SimplexRule {
    let (x, w) = gauss_legendre(degree / 2 + 1);
    SimplexRule {
        points: x.iter().map(|&t| [1.0 - t, t, 0.0]).collect(),
        weights: w,
    }
}

/// Collapsed (Duffy) Gauss product rule on the reference triangle, exact for
/// polynomials of degree `degree`.
pub fn triangle_rule(degree: usize) -> SimplexRule {
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            let (s, t) = (u, v * (1.0 - u));
            points.push([1.0 - s - t, s, t]);
            // Jacobian (1 - u) over the reference area 1/2
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    SimplexRule { points, weights }
}

pub fn simplex_rule(dim: usize, degree: usize) -> SimplexRule {
    if dim == 1 {
        interval_rule(degree)
    } else {
        triangle_rule(degree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness_1d() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_exactness() {
        // integral of s^a t^b over the reference triangle = a! b! / (a+b+2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        for degree in 1..8 {
            let rule = triangle_rule(degree);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| 0.5 * w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((q - exact).abs() < 1e-14, "deg {degree} a {a} b {b}");
                }
            }
        }
    }
}
