use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, structure, Result};

/// Draws `n` values uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub(crate) fn uniform_init(rng: &mut ChaCha8Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
}

/// Fixed per-joint identity vectors, `n_max x dim`, drawn from a seeded RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTable {
    pub n_max: usize,
    pub dim: usize,
    pub seed: u64,
    pub entries: Vec<f64>,
}

impl IdentityTable {
    pub fn new(n_max: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // a lookup row has fan-in 1
        let entries = uniform_init(&mut rng, n_max * dim, 1);
        Self { n_max, dim, seed, entries }
    }

    pub fn row(&self, index: usize) -> Result<&[f64]> {
        if index >= self.n_max {
            return Err(structure(format!("joint index {index} outside identity table of {}", self.n_max)));
        }
        Ok(&self.entries[index * self.dim..(index + 1) * self.dim])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Silu,
    /// Linear passthrough; used to check wiring.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Silu => x / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }
}

/// Two-layer perceptron `W2 act(W1 x + b1) + b2`, row-major weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpProjector {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub activation: Activation,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub seed: u64,
}

impl MlpProjector {
    pub fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = uniform_init(&mut rng, hidden * input, input);
        let b1 = uniform_init(&mut rng, hidden, input);
        let w2 = uniform_init(&mut rng, output * hidden, hidden);
        let b2 = uniform_init(&mut rng, output, hidden);
        Self { input, hidden, output, activation: Activation::Silu, w1, b1, w2, b2, seed }
    }

    /// Identity weights, zero biases, linear activation.
    pub fn identity(dim: usize) -> Self {
        let eye: Vec<f64> = (0..dim * dim).map(|k| if k / dim == k % dim { 1.0 } else { 0.0 }).collect();
        Self {
            input: dim,
            hidden: dim,
            output: dim,
            activation: Activation::Identity,
            w1: eye.clone(),
            b1: vec![0.0; dim],
            w2: eye,
            b2: vec![0.0; dim],
            seed: 0,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input {
            return Err(shape(format!("mlp expects {} inputs, got {}", self.input, x.len())));
        }
        let h: Vec<f64> = (0..self.hidden)
            .map(|r| {
                let row = &self.w1[r * self.input..(r + 1) * self.input];
                let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[r];
                self.activation.apply(z)
            })
            .collect();
        Ok((0..self.output)
            .map(|r| {
                let row = &self.w2[r * self.hidden..(r + 1) * self.hidden];
                row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + self.b2[r]
            })
            .collect())
    }
}

/// `z = mlp([encoding ; identity_row])`.
pub fn joint_embedding(
    encoding: &[f64],
    id_index: usize,
    table: &IdentityTable,
    mlp: &MlpProjector,
) -> Result<Vec<f64>> {
    let id = table.row(id_index)?;
    let mut input = Vec::with_capacity(encoding.len() + id.len());
    input.extend_from_slice(encoding);
    input.extend_from_slice(id);
    mlp.forward(&input)
}
