//! Classical echo-state reservoir: directed Erdős–Rényi network with uniform
//! weights, tanh nodes, and an optional fractional readout library.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FracExponent, Trajectory, DEFAULT_DENOMINATOR};
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::readout::{self, Prediction, Readout, ReservoirModel};
use crate::rng::{derive_seed, stream, stream_rng};

const MAX_RESAMPLES: u64 = 5;

/// Ordered readout exponents. The first is always 1, which passes the signed
/// state through; every other entry contributes `|r|^e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FracExponent>", into = "Vec<FracExponent>")]
pub struct FractionalLibrary(Vec<FracExponent>);

impl TryFrom<Vec<FracExponent>> for FractionalLibrary {
    type Error = Error;

    fn try_from(v: Vec<FracExponent>) -> Result<Self> {
        FractionalLibrary::new(v)
    }
}

impl From<FractionalLibrary> for Vec<FracExponent> {
    fn from(l: FractionalLibrary) -> Self {
        l.0
    }
}

impl FractionalLibrary {
    pub fn new(exponents: Vec<FracExponent>) -> Result<Self> {
        match exponents.first() {
            Some(first) if first.is_one() || *first == FracExponent::integer(1)? => {}
            _ => return Err(Error::config("library must start with the exponent 1")),
        }
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("library exponents must be strictly increasing"));
        }
        Ok(FractionalLibrary(exponents))
    }

    /// The plain reservoir state only.
    pub fn linear() -> Self {
        FractionalLibrary(vec![FracExponent::integer(1).expect("50/50 is valid")])
    }

    /// Integer powers `1..=max_power` with four interior fractions in each unit
    /// gap at offsets 4/50, 16/50, 28/50 and 40/50; shared integers appear
    /// once. For `max_power = 3` this is 11 exponents.
    pub fn spaced(max_power: u32) -> Result<Self> {
        const INTERIOR: [u32; 4] = [4, 16, 28, 40];
        if max_power == 0 {
            return Err(Error::config("max_power must be at least 1"));
        }
        let mut v = vec![FracExponent::integer(1)?];
        for k in 1..max_power {
            let base = k * DEFAULT_DENOMINATOR;
            for off in INTERIOR {
                v.push(FracExponent::with_default_denominator(base + off)?);
            }
            v.push(FracExponent::integer(k + 1)?);
        }
        Self::new(v)
    }

    pub fn exponents(&self) -> &[FracExponent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FractionalLibrary {
    fn default() -> Self {
        Self::linear()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicRcConfig {
    pub input_dim: usize,
    pub reservoir_dim: usize,
    pub spectral_radius: f64,
    pub ridge: f64,
    pub edge_probability: f64,
    /// `W_in` entries are uniform on `[-input_scale, input_scale]`.
    pub input_scale: f64,
    #[serde(default)]
    pub library: FractionalLibrary,
    pub seed: u64,
}

impl ClassicRcConfig {
    /// Lorenz comparison settings: ρ* = 0.2, β = 1e-4, p = 0.1, inputs on ±0.5.
    pub fn lorenz_defaults(reservoir_dim: usize, library: FractionalLibrary, seed: u64) -> Self {
        ClassicRcConfig {
            input_dim: 3,
            reservoir_dim,
            spectral_radius: 0.2,
            ridge: 1e-4,
            edge_probability: 0.1,
            input_scale: 0.5,
            library,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.reservoir_dim == 0 {
            return Err(Error::config("input and reservoir dimensions must be positive"));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::config("spectral radius must be > 0"));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::config("ridge must be > 0"));
        }
        if !(self.edge_probability > 0.0 && self.edge_probability <= 1.0) {
            return Err(Error::config("edge probability must be in (0, 1]"));
        }
        if !(self.input_scale >= 0.0 && self.input_scale.is_finite()) {
            return Err(Error::config("input scale must be >= 0"));
        }
        Ok(())
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    #[inline]
    fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *o = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&j, v)| v * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicRc {
    config: ClassicRcConfig,
    adjacency: Csr,
    /// Row-major `reservoir_dim × input_dim`.
    input_weights: Vec<f64>,
    seed_used: u64,
}

impl ClassicRc {
    /// Samples the network and input layer from `config.seed`, rescaling the
    /// adjacency to the target spectral radius. A nilpotent draw is resampled
    /// with a derived seed, at most five times.
    pub fn build(config: ClassicRcConfig) -> Result<Self> {
        config.validate()?;
        let n = config.reservoir_dim;
        for attempt in 0..=MAX_RESAMPLES {
            let seed = if attempt == 0 { config.seed } else { derive_seed(config.seed, attempt) };
            let raw = sample_network(n, config.edge_probability, seed);
            let radius = spectral_radius(&raw.to_dense())?;
            if radius < 1e-12 {
                log::debug!("network draw {attempt} is nilpotent, resampling");
                continue;
            }
            let mut adjacency = raw;
            let factor = config.spectral_radius / radius;
            adjacency.vals.iter_mut().for_each(|v| *v *= factor);

            let mut rng = stream_rng(seed, stream::INPUT_WEIGHTS);
            let s = config.input_scale;
            let input_weights = (0..n * config.input_dim)
                .map(|_| if s == 0.0 { 0.0 } else { rng.random_range(-s..=s) })
                .collect();
            return Ok(ClassicRc {
                config,
                adjacency,
                input_weights,
                seed_used: seed,
            });
        }
        Err(Error::SpectralRadius(format!(
            "network has zero spectral radius after {MAX_RESAMPLES} resamples"
        )))
    }

    pub fn config(&self) -> &ClassicRcConfig {
        &self.config
    }

    /// The seed of the accepted draw (differs from `config.seed` after a resample).
    pub fn seed_used(&self) -> u64 {
        self.seed_used
    }

    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        self.adjacency.to_dense()
    }

    pub fn input_weights_dense(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.config.reservoir_dim, self.config.input_dim, &self.input_weights)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.vals.len()
    }

    /// `r(t+1) = tanh(A r(t) + W_in x(t))`.
    pub fn step(&self, state: &[f64], input: &[f64]) -> Vec<f64> {
        let mut next = state.to_vec();
        let mut scratch = vec![0.0; next.len()];
        self.advance(&mut next, &mut scratch, input);
        next
    }

    pub fn generalize(state: &[f64], library: &FractionalLibrary) -> Vec<f64> {
        let mut out = vec![0.0; state.len() * library.len()];
        write_library(state, library, &mut out);
        out
    }

    pub fn train(&self, traj: &Trajectory, sync_len: usize) -> Result<Readout> {
        readout::train(self, traj, sync_len)
    }

    pub fn predict(&self, readout: &Readout, warmup: &Trajectory, n_steps: usize) -> Result<Prediction> {
        readout::predict(self, readout, warmup, n_steps)
    }
}

fn sample_network(n: usize, p: f64, seed: u64) -> Csr {
    let mut rng = stream_rng(seed, stream::NETWORK);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for _ in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < p {
                cols.push(j);
                vals.push(rng.random_range(-1.0..=1.0));
            }
        }
        row_ptr.push(cols.len());
    }
    Csr { n, row_ptr, cols, vals }
}

fn write_library(r: &[f64], library: &FractionalLibrary, out: &mut [f64]) {
    let n = r.len();
    for (k, e) in library.0.iter().enumerate() {
        let block = &mut out[k * n..(k + 1) * n];
        if e.is_one() || e.value() == 1.0 {
            block.copy_from_slice(r);
        } else {
            for (o, v) in block.iter_mut().zip(r) {
                *o = e.apply(*v);
            }
        }
    }
}

impl ReservoirModel for ClassicRc {
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn state_dim(&self) -> usize {
        self.config.reservoir_dim
    }

    fn feature_dim(&self) -> usize {
        self.config.reservoir_dim * self.config.library.len()
    }

    fn ridge(&self) -> f64 {
        self.config.ridge
    }

    fn advance(&self, state: &mut [f64], scratch: &mut [f64], input: &[f64]) {
        self.adjacency.mul_into(state, scratch);
        let d = self.config.input_dim;
        for (i, (r, a)) in state.iter_mut().zip(scratch.iter()).enumerate() {
            let drive: f64 = self.input_weights[i * d..(i + 1) * d].iter().zip(input).map(|(w, x)| w * x).sum();
            *r = (a + drive).tanh();
        }
    }

    fn features_into(&self, state: &[f64], out: &mut [f64]) {
        write_library(state, &self.config.library, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn e(n: u32) -> FracExponent {
        FracExponent::with_default_denominator(n).unwrap()
    }

    fn small(seed: u64) -> ClassicRcConfig {
        ClassicRcConfig::lorenz_defaults(100, FractionalLibrary::linear(), seed)
    }

    #[test]
    fn default_library_layout() {
        let lib = FractionalLibrary::spaced(3).unwrap();
        let nums: Vec<u32> = lib.exponents().iter().map(|e| e.numerator()).collect();
        assert_eq!(nums, vec![50, 54, 66, 78, 90, 100, 104, 116, 128, 140, 150]);
        assert_eq!(lib.len(), 11);
        assert_eq!(FractionalLibrary::spaced(1).unwrap(), FractionalLibrary::linear());
    }

    #[test]
    fn library_validation() {
        assert!(FractionalLibrary::new(vec![e(100)]).is_err());
        assert!(FractionalLibrary::new(vec![e(50), e(100), e(100)]).is_err());
        assert!(FractionalLibrary::new(vec![FracExponent::new(2, 2).unwrap(), e(100)]).is_ok());
    }

    #[test]
    fn library_generalization() {
        let lib = FractionalLibrary::new(vec![e(50), e(100)]).unwrap();
        assert_eq!(ClassicRc::generalize(&[-0.5], &lib), vec![-0.5, 0.25]);
        assert_eq!(ClassicRc::generalize(&[-0.5, 0.2], &FractionalLibrary::linear()), vec![-0.5, 0.2]);
    }

    #[test]
    fn same_seed_same_machine() {
        assert_eq!(ClassicRc::build(small(3)).unwrap(), ClassicRc::build(small(3)).unwrap());
        assert_ne!(ClassicRc::build(small(3)).unwrap(), ClassicRc::build(small(4)).unwrap());
    }

    #[test]
    fn radius_matches_target_by_eigenvalues() {
        let m = ClassicRc::build(small(11)).unwrap();
        let eig = m.adjacency_dense().complex_eigenvalues();
        let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((rho - 0.2).abs() < 1e-6, "{rho}");
    }

    #[test]
    fn complete_graph_is_rank_one() {
        let cfg = ClassicRcConfig {
            edge_probability: 1.0,
            reservoir_dim: 20,
            ..small(1)
        };
        let m = ClassicRc::build(cfg).unwrap();
        assert_eq!(m.edge_count(), 400);
        let eig = m.adjacency_dense().complex_eigenvalues();
        let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((rho - 0.2).abs() < 1e-8);
    }

    #[test]
    fn tiny_acyclic_draws_are_resampled() {
        // a single node has a self loop with probability p only
        let cfg = ClassicRcConfig {
            reservoir_dim: 1,
            edge_probability: 0.5,
            ..small(0)
        };
        match ClassicRc::build(cfg) {
            Ok(m) => assert!((m.adjacency_dense()[(0, 0)].abs() - 0.2).abs() < 1e-12),
            Err(err) => assert!(matches!(err, Error::SpectralRadius(_))),
        }
    }

    #[test]
    fn step_matches_dense_oracle_and_stays_bounded() {
        let m = ClassicRc::build(small(5)).unwrap();
        let a = m.adjacency_dense();
        let w = m.input_weights_dense();
        let mut r = vec![0.0; 100];
        assert_eq!(m.step(&r, &[0.0; 3]), r);
        for t in 0..50 {
            let x = [(t as f64).sin() * 20.0, 15.0, -30.0];
            let next = m.step(&r, &x);
            let dense = (&a * DVector::from_vec(r.clone()) + &w * DVector::from_row_slice(&x)).map(f64::tanh);
            for (p, q) in next.iter().zip(dense.iter()) {
                assert!((p - q).abs() < 1e-14);
            }
            assert!(next.iter().all(|v| v.abs() <= 1.0));
            r = next;
        }
    }

    #[test]
    fn config_json_carries_seed_and_library() {
        let c = ClassicRcConfig::lorenz_defaults(100, FractionalLibrary::spaced(2).unwrap(), 42);
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["library"][1]["numerator"], 54);
        let back: ClassicRcConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
