//! Built-in exact coefficients and solutions, and the forcing they imply.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Exact coefficients used by the experiments. In 2D the smooth cases are the
/// natural extensions (`1 + x + y`, `1 + x^2 + y^2`,
/// `1 + 0.5 sin(2 pi x) sin(2 pi y)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientId {
    /// q = 1
    Const,
    /// q = 1 + x
    Linear,
    /// q = 1 + x^2
    Quadratic,
    /// q = 1 + 0.5 sin(2 pi x)
    Sine,
    /// q = 0.5 on [0, 0.5), 1.5 on [0.5, 1]; 1D only.
    Step,
}

impl CoefficientId {
    pub const SMOOTH: [CoefficientId; 4] = [Self::Const, Self::Linear, Self::Quadratic, Self::Sine];

    pub fn supports_dim(self, dim: usize) -> bool {
        match self {
            Self::Step => dim == 1,
            _ => dim == 1 || dim == 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Const => "const",
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
            Self::Sine => "sine",
            Self::Step => "step",
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        let two_d = x.len() > 1;
        match self {
            Self::Const => 1.0,
            Self::Linear => 1.0 + x.iter().sum::<f64>(),
            Self::Quadratic => 1.0 + x.iter().map(|c| c * c).sum::<f64>(),
            Self::Sine => {
                if two_d {
                    1.0 + 0.5 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin()
                } else {
                    1.0 + 0.5 * (2.0 * PI * x[0]).sin()
                }
            }
            Self::Step => {
                if x[0] < 0.5 {
                    0.5
                } else {
                    1.5
                }
            }
        }
    }

    /// Gradient of the coefficient; `None` for the discontinuous case.
    pub fn gradient(self, x: &[f64]) -> Option<[f64; 2]> {
        let two_d = x.len() > 1;
        Some(match self {
            Self::Const => [0.0, 0.0],
            Self::Linear => [1.0, if two_d { 1.0 } else { 0.0 }],
            Self::Quadratic => [2.0 * x[0], if two_d { 2.0 * x[1] } else { 0.0 }],
            Self::Sine => {
                if two_d {
                    let (sx, sy) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[1]).sin());
                    let (cx, cy) = ((2.0 * PI * x[0]).cos(), (2.0 * PI * x[1]).cos());
                    [PI * cx * sy, PI * sx * cy]
                } else {
                    [PI * (2.0 * PI * x[0]).cos(), 0.0]
                }
            }
            Self::Step => return None,
        })
    }
}

/// Exact solutions: `sin^2(2 pi x)` in 1D and `sin(pi x) sin(pi y)` in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionId {
    Sin2,
    SinSin,
}

impl SolutionId {
    pub fn dim(self) -> usize {
        match self {
            Self::Sin2 => 1,
            Self::SinSin => 2,
        }
    }

    pub fn for_dim(dim: usize) -> Self {
        if dim == 1 {
            Self::Sin2
        } else {
            Self::SinSin
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Self::Sin2 => (2.0 * PI * x[0]).sin().powi(2),
            Self::SinSin => (PI * x[0]).sin() * (PI * x[1]).sin(),
        }
    }

    pub fn gradient(self, x: &[f64]) -> [f64; 2] {
        match self {
            Self::Sin2 => [2.0 * PI * (4.0 * PI * x[0]).sin(), 0.0],
            Self::SinSin => [
                PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ],
        }
    }

    pub fn laplacian(self, x: &[f64]) -> f64 {
        match self {
            Self::Sin2 => 8.0 * PI * PI * (4.0 * PI * x[0]).cos(),
            Self::SinSin => -2.0 * PI * PI * self.value(x),
        }
    }
}

/// `f = -div(q grad u) = -(grad q . grad u + q lap u)`; `None` for a
/// coefficient without a classical derivative.
pub fn forcing(q: CoefficientId, u: SolutionId, x: &[f64]) -> Option<f64> {
    let gq = q.gradient(x)?;
    let gu = u.gradient(x);
    Some(-(gq[0] * gu[0] + gq[1] * gu[1] + q.value(x) * u.laplacian(x)))
}
