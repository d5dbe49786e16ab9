//! The deterministic minimal reservoir computer.
//!
//! Inputs enter through all non-empty subset sums of the coordinates, each
//! copied into a block of `b` nodes with weights `w_k = √((b-1-k)/(b-1))`.
//! The reservoir is `(ρ*/b)·blockdiag(J, …, J)` with `J` the all-ones block,
//! states evolve linearly, and the only nonlinearity is the readout's view of
//! `|r|^η` for each configured exponent.
//!
//! Feature subsets are ordered by size, then lexicographically: for three
//! coordinates `{1}, {2}, {3}, {1,2}, {1,3}, {2,3}, {1,2,3}`.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FracExponent, Trajectory};
use crate::error::{Error, Result};
use crate::readout::{self, Prediction, Readout, ReservoirModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinRcConfig {
    pub input_dim: usize,
    pub block_size: usize,
    pub spectral_radius: f64,
    pub ridge: f64,
    /// Readout exponents beyond the linear block. One entry is the reduced
    /// setup; `2, 3, …, η_max` is the classic one; empty is purely linear.
    pub exponents: Vec<FracExponent>,
}

impl MinRcConfig {
    /// Linear state plus a single `|r|^η` block.
    pub fn reduced(input_dim: usize, block_size: usize, spectral_radius: f64, ridge: f64, eta: FracExponent) -> Self {
        MinRcConfig {
            input_dim,
            block_size,
            spectral_radius,
            ridge,
            exponents: vec![eta],
        }
    }

    /// Integer powers `2..=eta_max` (none for `eta_max <= 1`).
    pub fn classic(input_dim: usize, block_size: usize, spectral_radius: f64, ridge: f64, eta_max: u32) -> Result<Self> {
        let exponents = (2..=eta_max).map(FracExponent::integer).collect::<Result<_>>()?;
        Ok(MinRcConfig {
            input_dim,
            block_size,
            spectral_radius,
            ridge,
            exponents,
        })
    }

    pub fn with_exponents(&self, exponents: Vec<FracExponent>) -> Self {
        MinRcConfig {
            exponents,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.input_dim > 16 {
            return Err(Error::config(format!(
                "input_dim must be in 1..=16 (2^D - 1 feature blocks), got {}",
                self.input_dim
            )));
        }
        if self.block_size < 2 {
            return Err(Error::config(format!("block_size must be at least 2, got {}", self.block_size)));
        }
        if !(self.spectral_radius >= 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::config(format!("spectral radius must be >= 0, got {}", self.spectral_radius)));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::config(format!("ridge must be > 0, got {}", self.ridge)));
        }
        Ok(())
    }
}

/// Non-empty coordinate subsets in canonical order.
pub fn feature_subsets(input_dim: usize) -> Vec<Vec<usize>> {
    (1..=input_dim)
        .flat_map(|k| (0..input_dim).combinations(k))
        .collect()
}

/// `(1, √((b-2)/(b-1)), …, √(1/(b-1)), 0)`.
pub fn weight_vector(block_size: usize) -> Vec<f64> {
    let denom = (block_size - 1) as f64;
    (0..block_size)
        .map(|k| (((block_size - 1 - k) as f64) / denom).sqrt())
        .collect()
}

/// Subset-sum input layer, stored as the weight vector and the subset list.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMatrix {
    weights: Vec<f64>,
    subsets: Vec<Vec<usize>>,
    input_dim: usize,
}

impl InputMatrix {
    pub fn new(input_dim: usize, block_size: usize) -> Self {
        InputMatrix {
            weights: weight_vector(block_size),
            subsets: feature_subsets(input_dim),
            input_dim,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn feature_subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn rows(&self) -> usize {
        self.subsets.len() * self.weights.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let b = self.weights.len();
        let mut m = DMatrix::zeros(self.rows(), self.input_dim);
        for (f, subset) in self.subsets.iter().enumerate() {
            for &j in subset {
                for (k, w) in self.weights.iter().enumerate() {
                    m[(f * b + k, j)] = *w;
                }
            }
        }
        m
    }
}

/// `(ρ*/b)·blockdiag(J, …, J)`, never materialized on the hot path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockReservoir {
    block_count: usize,
    block_size: usize,
    scale: f64,
}

impl BlockReservoir {
    pub fn new(block_count: usize, block_size: usize, spectral_radius: f64) -> Self {
        BlockReservoir {
            block_count,
            block_size,
            scale: spectral_radius / block_size as f64,
        }
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `scale · b`, the Perron root of each scaled all-ones block.
    pub fn spectral_radius(&self) -> f64 {
        self.scale * self.block_size as f64
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block_count * self.block_size;
        DMatrix::from_fn(n, n, |i, j| {
            if i / self.block_size == j / self.block_size {
                self.scale
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedState(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct MinRc {
    config: MinRcConfig,
    input: InputMatrix,
    reservoir: BlockReservoir,
}

impl MinRc {
    pub fn build(config: MinRcConfig) -> Result<Self> {
        config.validate()?;
        let input = InputMatrix::new(config.input_dim, config.block_size);
        let reservoir = BlockReservoir::new(input.subsets.len(), config.block_size, config.spectral_radius);
        Ok(MinRc {
            config,
            input,
            reservoir,
        })
    }

    pub fn config(&self) -> &MinRcConfig {
        &self.config
    }

    pub fn input_matrix(&self) -> &InputMatrix {
        &self.input
    }

    pub fn reservoir(&self) -> &BlockReservoir {
        &self.reservoir
    }

    pub fn zero_state(&self) -> ReservoirState {
        ReservoirState(vec![0.0; self.state_dim()])
    }

    /// `r(t+1) = A r(t) + W_in x(t)`.
    pub fn step(&self, state: &ReservoirState, input: &[f64]) -> ReservoirState {
        let mut next = state.0.clone();
        let mut scratch = vec![0.0; next.len()];
        self.advance(&mut next, &mut scratch, input);
        ReservoirState(next)
    }

    /// `[r, |r|^η₁, …]`, element-wise.
    pub fn generalize(state: &ReservoirState, exponents: &[FracExponent]) -> GeneralizedState {
        let mut out = vec![0.0; state.0.len() * (1 + exponents.len())];
        write_generalized(&state.0, exponents, &mut out);
        GeneralizedState(out)
    }

    pub fn train(&self, traj: &Trajectory, sync_len: usize) -> Result<Readout> {
        readout::train(self, traj, sync_len)
    }

    pub fn predict(&self, readout: &Readout, warmup: &Trajectory, n_steps: usize) -> Result<Prediction> {
        readout::predict(self, readout, warmup, n_steps)
    }
}

fn write_generalized(r: &[f64], exponents: &[FracExponent], out: &mut [f64]) {
    let n = r.len();
    out[..n].copy_from_slice(r);
    for (k, e) in exponents.iter().enumerate() {
        let block = &mut out[(k + 1) * n..(k + 2) * n];
        for (o, v) in block.iter_mut().zip(r) {
            *o = e.apply(*v);
        }
    }
}

impl ReservoirModel for MinRc {
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn state_dim(&self) -> usize {
        self.input.rows()
    }

    fn feature_dim(&self) -> usize {
        self.state_dim() * (1 + self.config.exponents.len())
    }

    fn ridge(&self) -> f64 {
        self.config.ridge
    }

    fn advance(&self, state: &mut [f64], _scratch: &mut [f64], input: &[f64]) {
        let b = self.reservoir.block_size;
        let scale = self.reservoir.scale;
        for (block, subset) in state.chunks_exact_mut(b).zip(&self.input.subsets) {
            let echo = scale * block.iter().sum::<f64>();
            let drive: f64 = subset.iter().map(|&j| input[j]).sum();
            for (r, w) in block.iter_mut().zip(&self.input.weights) {
                *r = echo + w * drive;
            }
        }
    }

    fn features_into(&self, state: &[f64], out: &mut [f64]) {
        write_generalized(state, &self.config.exponents, out);
    }
}
