//! Small feedforward networks `R^N -> R` with sigmoid hidden layers and a
//! linear output, plus exact parameter gradients by backpropagation.
//!
//! Parameters are flattened layer by layer: the row-major weight matrix of a
//! layer followed by its bias vector.
//!
//! Weights are initialised i.i.d. from U[0, 1) drawn from a PCG64
//! (`Lcg128Xsl64`) stream seeded with `seed_from_u64(seed)`; biases start at
//! zero. The same seed always produces a bit-identical network.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logistic sigmoid, evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layer_sizes: Vec<usize>,
    /// `weights[l]` is `layer_sizes[l+1] x layer_sizes[l]`, row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    seed: Option<u64>,
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!("invalid layer sizes {sizes:?}")));
    }
    if *sizes.last().unwrap() != 1 {
        return Err(Error::InvalidArgument(format!("output layer must have size 1, got {sizes:?}")));
    }
    Ok(())
}

/// Number of weights and biases for the given architecture.
pub fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Network {
    /// Seeded network with U[0, 1) weights and zero biases.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = Pcg64::seed_from_u64(seed);
        let weights = layer_sizes
            .windows(2)
            .map(|w| (0..w[0] * w[1]).map(|_| rng.random::<f64>()).collect())
            .collect();
        let biases = layer_sizes.windows(2).map(|w| vec![0.0; w[1]]).collect();
        Ok(Network {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            seed: Some(seed),
        })
    }

    /// Network with the given architecture and flattened parameters.
    pub fn from_params(layer_sizes: &[usize], params: &[f64]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut net = Network {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: layer_sizes.windows(2).map(|w| vec![0.0; w[1]]).collect(),
            seed: None,
        };
        net.set_params(params)?;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn parameter_count(&self) -> usize {
        parameter_count(&self.layer_sizes)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                what: "network parameters",
                expected: self.parameter_count(),
                found: params.len(),
            });
        }
        let mut k = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&params[k..k + nw]);
            b.copy_from_slice(&params[k + nw..k + nw + nb]);
            k += nw + nb;
        }
        Ok(())
    }

    /// Post-activation values of every layer (input first, output last).
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(x.len(), self.input_dim());
        let n_layers = self.weights.len();
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for l in 0..n_layers {
            let (rows, cols) = (self.layer_sizes[l + 1], self.layer_sizes[l]);
            let prev = &acts[l];
            let w = &self.weights[l];
            let z: Vec<f64> = (0..rows)
                .map(|i| {
                    let row = &w[i * cols..(i + 1) * cols];
                    self.biases[l][i] + row.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let a = if l + 1 == n_layers { z } else { z.into_iter().map(sigmoid).collect() };
            acts.push(a);
        }
        acts
    }

    /// Network output q(x).
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.activations(x).last().unwrap()[0]
    }

    /// q(x) and its gradient with respect to the flattened parameters.
    pub fn forward_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let acts = self.activations(x);
        let n_layers = self.weights.len();
        let mut grad = vec![0.0; self.parameter_count()];
        let offsets: Vec<usize> = self
            .weights
            .iter()
            .zip(&self.biases)
            .scan(0, |k, (w, b)| {
                let off = *k;
                *k += w.len() + b.len();
                Some(off)
            })
            .collect();

        // delta = dq/dz for the current layer; the output layer is linear
        let mut delta = vec![1.0];
        for l in (0..n_layers).rev() {
            let (rows, cols) = (self.layer_sizes[l + 1], self.layer_sizes[l]);
            let prev = &acts[l];
            let off = offsets[l];
            for i in 0..rows {
                for j in 0..cols {
                    grad[off + i * cols + j] = delta[i] * prev[j];
                }
                grad[off + rows * cols + i] = delta[i];
            }
            if l > 0 {
                let w = &self.weights[l];
                delta = (0..cols)
                    .map(|j| {
                        let back: f64 = (0..rows).map(|i| w[i * cols + j] * delta[i]).sum();
                        // prev holds sigmoid outputs of hidden layer l
                        back * prev[j] * (1.0 - prev[j])
                    })
                    .collect();
            }
        }
        (acts[n_layers][0], grad)
    }

    /// Gradient of q(x) with respect to the flattened parameters.
    pub fn backprop_params(&self, x: &[f64]) -> Vec<f64> {
        self.forward_and_gradient(x).1
    }

    pub fn to_json(&self) -> Result<String> {
        let file = NetworkFile {
            layer_sizes: self.layer_sizes.clone(),
            weights: self
                .weights
                .iter()
                .enumerate()
                .map(|(l, w)| w.chunks(self.layer_sizes[l]).map(|r| r.to_vec()).collect())
                .collect(),
            biases: self.biases.clone(),
            seed: self.seed,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(s)?;
        validate_sizes(&file.layer_sizes)?;
        let sizes = &file.layer_sizes;
        if file.weights.len() != sizes.len() - 1 || file.biases.len() != sizes.len() - 1 {
            return Err(Error::InvalidArgument("layer count does not match layer_sizes".into()));
        }
        let mut weights = Vec::new();
        for (l, rows) in file.weights.iter().enumerate() {
            if rows.len() != sizes[l + 1] || rows.iter().any(|r| r.len() != sizes[l]) {
                return Err(Error::InvalidArgument(format!("weight matrix {l} has the wrong shape")));
            }
            if file.biases[l].len() != sizes[l + 1] {
                return Err(Error::InvalidArgument(format!("bias vector {l} has the wrong length")));
            }
            weights.push(rows.concat());
        }
        Ok(Network {
            layer_sizes: file.layer_sizes,
            weights,
            biases: file.biases,
            seed: file.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    layer_sizes: Vec<usize>,
    /// `weights[l][i][j]` connects unit `j` of layer `l` to unit `i` of layer `l + 1`.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
    /// Seed the initial weights were drawn with, if any.
    seed: Option<u64>,
}
