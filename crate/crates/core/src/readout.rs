//! Ridge-regression readout training and closed-loop prediction, shared by
//! every reservoir that implements [`ReservoirModel`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::ridge_solve;

/// A reservoir with a fixed state update and a fixed readout feature map.
pub trait ReservoirModel {
    fn input_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Length of the generalized state seen by the readout.
    fn feature_dim(&self) -> usize;
    fn ridge(&self) -> f64;

    /// `state <- update(state, input)`; `scratch` has `state_dim` entries.
    fn advance(&self, state: &mut [f64], scratch: &mut [f64], input: &[f64]);

    /// Writes the generalized state of `state` into `out`.
    fn features_into(&self, state: &[f64], out: &mut [f64]);
}

/// Trained output matrix, `output_dim × feature_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReadoutRepr", into = "ReadoutRepr")]
pub struct Readout {
    weights: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReadoutRepr {
    output_dim: usize,
    feature_dim: usize,
    weights: Vec<Vec<f64>>,
}

impl From<Readout> for ReadoutRepr {
    fn from(r: Readout) -> Self {
        ReadoutRepr {
            output_dim: r.weights.nrows(),
            feature_dim: r.weights.ncols(),
            weights: r.weights.row_iter().map(|row| row.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<ReadoutRepr> for Readout {
    type Error = Error;

    fn try_from(r: ReadoutRepr) -> Result<Self> {
        if r.weights.len() != r.output_dim || r.weights.iter().any(|row| row.len() != r.feature_dim) {
            return Err(Error::config("readout weights do not match the declared shape"));
        }
        let flat: Vec<f64> = r.weights.into_iter().flatten().collect();
        Readout::new(DMatrix::from_row_slice(r.output_dim, r.feature_dim, &flat))
    }
}

impl Readout {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("readout weights".into()));
        }
        Ok(Readout { weights })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.ncols()
    }

    #[inline]
    pub fn apply_into(&self, features: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.weights.row(i).iter().zip(features).map(|(w, f)| w * f).sum();
        }
    }
}

/// Generalized training states `R` (features × samples) and targets `X`
/// (outputs × samples).
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub states: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl TrainingSet {
    pub fn gram(&self) -> DMatrix<f64> {
        &self.states * self.states.transpose()
    }

    pub fn cross(&self) -> DMatrix<f64> {
        &self.states * self.targets.transpose()
    }
}

/// Drives `model` open-loop over `traj`, discarding the states produced while
/// feeding the first `sync_len` inputs, and pairs each later `r̃(t+1)` with
/// `x(t+1)`.
pub fn collect_training_set<M: ReservoirModel + ?Sized>(model: &M, traj: &Trajectory, sync_len: usize) -> Result<TrainingSet> {
    if traj.dim() != model.input_dim() {
        return Err(Error::config(format!(
            "trajectory has {} coordinates, model expects {}",
            traj.dim(),
            model.input_dim()
        )));
    }
    if traj.len() < sync_len + 2 {
        return Err(Error::InsufficientData(format!(
            "training needs at least sync_len + 2 = {} steps, got {}",
            sync_len + 2,
            traj.len()
        )));
    }
    let samples = traj.len() - 1 - sync_len;
    let mut states = DMatrix::zeros(model.feature_dim(), samples);
    let mut targets = DMatrix::zeros(model.input_dim(), samples);
    let mut r = vec![0.0; model.state_dim()];
    let mut scratch = vec![0.0; model.state_dim()];
    for t in 0..traj.len() - 1 {
        model.advance(&mut r, &mut scratch, traj.row(t));
        if t >= sync_len {
            let col = t - sync_len;
            let mut c = states.column_mut(col);
            let out = c.as_mut_slice();
            model.features_into(&r, out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { step: t + 1 });
            }
            targets.column_mut(col).copy_from_slice(traj.row(t + 1));
        }
    }
    Ok(TrainingSet { states, targets })
}

/// Ridge readout `W = X Rᵀ (R Rᵀ + β·1)⁻¹`.
pub fn train<M: ReservoirModel + ?Sized>(model: &M, traj: &Trajectory, sync_len: usize) -> Result<Readout> {
    let set = collect_training_set(model, traj, sync_len)?;
    Readout::new(ridge_solve(&set.gram(), &set.cross(), model.ridge())?)
}

/// Closed-loop output. Shorter than requested when the loop produced a
/// non-finite value, in which case `diverged_at` is the failing step.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    requested: usize,
    diverged_at: Option<usize>,
}

impl Prediction {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn requested(&self) -> usize {
        self.requested
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    /// The finite prefix as a trajectory; fails when it is empty.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.data.clone(), self.dim, self.dt)
    }

    pub fn into_trajectory(self) -> Result<Trajectory> {
        Trajectory::new(self.data, self.dim, self.dt)
    }
}

/// Synchronizes on every row of `warmup`, then feeds each output back as the
/// next input for `n_steps` steps.
pub fn predict<M: ReservoirModel + ?Sized>(model: &M, readout: &Readout, warmup: &Trajectory, n_steps: usize) -> Result<Prediction> {
    if warmup.dim() != model.input_dim() || readout.output_dim() != model.input_dim() {
        return Err(Error::config("warm-up, model and readout dimensions disagree"));
    }
    if readout.feature_dim() != model.feature_dim() {
        return Err(Error::config(format!(
            "readout expects {} features, model produces {}",
            readout.feature_dim(),
            model.feature_dim()
        )));
    }
    let dim = model.input_dim();
    let mut r = vec![0.0; model.state_dim()];
    let mut scratch = vec![0.0; model.state_dim()];
    for x in warmup.rows() {
        model.advance(&mut r, &mut scratch, x);
    }
    let mut feats = vec![0.0; model.feature_dim()];
    let mut y = vec![0.0; dim];
    let mut data = Vec::with_capacity(n_steps * dim);
    let mut diverged_at = None;
    for k in 0..n_steps {
        model.features_into(&r, &mut feats);
        readout.apply_into(&feats, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(k);
            break;
        }
        data.extend_from_slice(&y);
        model.advance(&mut r, &mut scratch, &y);
    }
    Ok(Prediction {
        data,
        dim,
        dt: warmup.dt(),
        requested: n_steps,
        diverged_at,
    })
}
