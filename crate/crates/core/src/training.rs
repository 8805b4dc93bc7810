//! Cost function, gradients and optimizers for the staircase classifier.
//!
//! The training objective is the mean squared difference between the
//! classifier score and the binary label, `J(θ) = (1/D) Σ_d (m_d − y_d)²`,
//! which lives in `[0, 1]` because both `m` and `y` do. Gradients default
//! to the parameter-shift rule, exact for RY-generated parameters with a
//! shift of π/2: `∂m/∂θ_k = [m(θ_k + π/2) − m(θ_k − π/2)] / 2`. A central
//! finite-difference mode is kept as an independent cross-check.
//!
//! Two optimizers are provided: conjugate gradient (Polak–Ribière+ with
//! Armijo backtracking, restarting to steepest descent whenever the
//! conjugate direction stops descending) and mini-batch SGD. Both draw all
//! randomness — restart initializations in `[−π, π)` and batch shuffles —
//! from a single seeded generator, so a run is reproducible bit for bit.

use crate::ansatz::{AnsatzError, Backend, StaircaseCircuit};
use crate::encoding::EncodedSample;
use crate::sim::StateVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Shift used by the parameter-shift rule (exact for RY half-angle gates).
pub const PARAM_SHIFT: f64 = std::f64::consts::FRAC_PI_2;

const ARMIJO_C: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const ARMIJO_INITIAL_STEP: f64 = 1.0;
const ARMIJO_MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset must not be empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("cost became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize },
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Cg,
    Sgd,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(OptimizerKind::Cg),
            "sgd" => Ok(OptimizerKind::Sgd),
            other => Err(format!("unknown optimizer '{other}' (expected cg or sgd)")),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Cg => "cg",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

/// How `∂J/∂θ` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Exact parameter-shift rule (default).
    ParameterShift,
    /// Central differences of the cost with step `h`.
    FiniteDifference { h: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    /// CG iterations, or epochs for SGD.
    pub max_iters: usize,
    /// Stop once `‖∇J‖_∞` drops below this.
    pub grad_tol: f64,
    /// SGD step size.
    pub learning_rate: f64,
    /// SGD mini-batch size.
    pub batch_size: usize,
    pub gradient_mode: GradientMode,
    pub seed: u64,
    /// Independent random initializations; the best final cost wins.
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Cg,
            max_iters: 200,
            grad_tol: 1e-5,
            learning_rate: 0.5,
            batch_size: 8,
            gradient_mode: GradientMode::ParameterShift,
            seed: 0,
            restarts: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_iters == 0 {
            return Err(TrainError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return Err(TrainError::InvalidConfig("grad_tol must be > 0".into()));
        }
        if self.restarts == 0 {
            return Err(TrainError::InvalidConfig("restarts must be >= 1".into()));
        }
        if self.optimizer == OptimizerKind::Sgd {
            if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
                return Err(TrainError::InvalidConfig(
                    "learning_rate must be > 0 for sgd".into(),
                ));
            }
            if self.batch_size == 0 {
                return Err(TrainError::InvalidConfig(
                    "batch_size must be >= 1 for sgd".into(),
                ));
            }
        }
        if let GradientMode::FiniteDifference { h } = self.gradient_mode {
            if !h.is_finite() || h <= 0.0 {
                return Err(TrainError::InvalidConfig(
                    "finite-difference step must be > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Mean squared difference between scores and labels over the dataset.
pub fn cost(
    circuit: &StaircaseCircuit,
    theta: &[f64],
    data: &[EncodedSample],
) -> Result<f64, TrainError> {
    Objective::new(circuit, data)?.cost(theta)
}

/// `∂J/∂θ`, one entry per parameter (empty for a block-less circuit).
pub fn gradient(
    circuit: &StaircaseCircuit,
    theta: &[f64],
    data: &[EncodedSample],
    mode: GradientMode,
) -> Result<Vec<f64>, TrainError> {
    let obj = Objective::new(circuit, data)?;
    let all: Vec<usize> = (0..obj.len()).collect();
    obj.gradient(theta, &all, mode)
}

/// Result of one `train` call: the winning restart's parameters, its cost
/// trajectory (entry 0 is the cost at initialization) and final cost.
#[derive(Clone, Debug)]
pub struct TrainRun {
    pub theta: Vec<f64>,
    pub history: Vec<f64>,
    pub final_cost: f64,
    /// Index of the restart that produced this result.
    pub restart: usize,
}

/// Minimizes the cost over θ. Initialization is uniform in `[−π, π)` per
/// restart, all draws coming from `config.seed`; the restart with the best
/// final training cost is returned. The final cost never exceeds the
/// initial one: CG only accepts decreasing steps, and SGD returns the
/// best parameters seen at any epoch end (including initialization).
pub fn train(
    circuit: &StaircaseCircuit,
    data: &[EncodedSample],
    config: &TrainConfig,
) -> Result<TrainRun, TrainError> {
    config.validate()?;
    let obj = Objective::new(circuit, data)?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<TrainRun> = None;
    for restart in 0..config.restarts {
        let theta0: Vec<f64> = (0..circuit.param_count())
            .map(|_| master.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let shuffle_seed = master.gen::<u64>();
        let (theta, history) = match config.optimizer {
            OptimizerKind::Cg => run_cg(&obj, theta0, config)?,
            OptimizerKind::Sgd => {
                let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
                run_sgd(&obj, theta0, config, &mut rng)?
            }
        };
        let final_cost = obj.cost(&theta)?;
        if best.as_ref().is_none_or(|b| final_cost < b.final_cost) {
            best = Some(TrainRun {
                theta,
                history,
                final_cost,
                restart,
            });
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// Dataset prepared for repeated evaluation: inputs are encoded once and
/// reused for every cost/gradient call. Accumulation always runs in sample
/// order, so results do not depend on scheduling.
struct Objective<'c> {
    circuit: &'c StaircaseCircuit,
    inputs: Vec<StateVector>,
    labels: Vec<f64>,
}

impl<'c> Objective<'c> {
    fn new(circuit: &'c StaircaseCircuit, data: &[EncodedSample]) -> Result<Self, TrainError> {
        if data.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        let mut inputs = Vec::with_capacity(data.len());
        let mut labels = Vec::with_capacity(data.len());
        for sample in data {
            let encoded = sample.state().map_err(AnsatzError::from)?;
            // ancilla tensored in once; scoring reuses the prepared state
            inputs.push(circuit.prepare_input(&encoded)?);
            labels.push(f64::from(sample.label));
        }
        Ok(Self {
            circuit,
            inputs,
            labels,
        })
    }

    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn score(&self, theta: &[f64], sample: usize) -> Result<f64, TrainError> {
        Ok(self
            .circuit
            .evaluate_prepared(theta, &self.inputs[sample], Backend::Dense)?)
    }

    fn cost_over(&self, theta: &[f64], samples: &[usize]) -> Result<f64, TrainError> {
        let mut sum = 0.0;
        for &d in samples {
            let r = self.score(theta, d)? - self.labels[d];
            sum += r * r;
        }
        Ok(sum / samples.len() as f64)
    }

    fn cost(&self, theta: &[f64]) -> Result<f64, TrainError> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.cost_over(theta, &all)
    }

    fn gradient(
        &self,
        theta: &[f64],
        samples: &[usize],
        mode: GradientMode,
    ) -> Result<Vec<f64>, TrainError> {
        match mode {
            GradientMode::ParameterShift => self.gradient_shift(theta, samples),
            GradientMode::FiniteDifference { h } => self.gradient_fd(theta, samples, h),
        }
    }

    /// Chain rule through Eq. J = mean(r²):
    /// `∂J/∂θ_k = (2/D) Σ_d r_d · [m_d(θ_k+π/2) − m_d(θ_k−π/2)] / 2`.
    fn gradient_shift(&self, theta: &[f64], samples: &[usize]) -> Result<Vec<f64>, TrainError> {
        let residuals: Vec<f64> = samples
            .iter()
            .map(|&d| Ok(self.score(theta, d)? - self.labels[d]))
            .collect::<Result<_, TrainError>>()?;
        let mut grad = vec![0.0; theta.len()];
        let mut shifted = theta.to_vec();
        for k in 0..theta.len() {
            let original = theta[k];
            let mut acc = 0.0;
            for (i, &d) in samples.iter().enumerate() {
                shifted[k] = original + PARAM_SHIFT;
                let plus = self.score(&shifted, d)?;
                shifted[k] = original - PARAM_SHIFT;
                let minus = self.score(&shifted, d)?;
                acc += residuals[i] * (plus - minus) / 2.0;
            }
            shifted[k] = original;
            grad[k] = 2.0 * acc / samples.len() as f64;
        }
        Ok(grad)
    }

    fn gradient_fd(&self, theta: &[f64], samples: &[usize], h: f64) -> Result<Vec<f64>, TrainError> {
        let mut grad = vec![0.0; theta.len()];
        let mut shifted = theta.to_vec();
        for k in 0..theta.len() {
            let original = theta[k];
            shifted[k] = original + h;
            let plus = self.cost_over(&shifted, samples)?;
            shifted[k] = original - h;
            let minus = self.cost_over(&shifted, samples)?;
            shifted[k] = original;
            grad[k] = (plus - minus) / (2.0 * h);
        }
        Ok(grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ensure_finite(value: f64, iteration: usize) -> Result<f64, TrainError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(TrainError::NonFiniteCost { iteration })
    }
}

/// Backtracking line search with the Armijo sufficient-decrease rule.
/// Returns `None` when no acceptable step exists along `dir`.
fn armijo(
    obj: &Objective,
    theta: &[f64],
    dir: &[f64],
    slope: f64,
    j0: f64,
) -> Result<Option<(Vec<f64>, f64)>, TrainError> {
    let mut alpha = ARMIJO_INITIAL_STEP;
    for _ in 0..ARMIJO_MAX_BACKTRACKS {
        let candidate: Vec<f64> = theta
            .iter()
            .zip(dir)
            .map(|(t, d)| t + alpha * d)
            .collect();
        let j = obj.cost(&candidate)?;
        if j <= j0 + ARMIJO_C * alpha * slope {
            return Ok(Some((candidate, j)));
        }
        alpha *= ARMIJO_SHRINK;
    }
    Ok(None)
}

fn run_cg(
    obj: &Objective,
    theta0: Vec<f64>,
    config: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>), TrainError> {
    let mode = config.gradient_mode;
    let mut theta = theta0;
    let mut j = ensure_finite(obj.cost(&theta)?, 0)?;
    let mut history = vec![j];
    let all: Vec<usize> = (0..obj.len()).collect();
    let mut grad = obj.gradient(&theta, &all, mode)?;
    let mut prev_grad: Vec<f64> = Vec::new();
    let mut prev_dir: Vec<f64> = Vec::new();

    for iteration in 1..=config.max_iters {
        if inf_norm(&grad) < config.grad_tol {
            break;
        }
        // Polak–Ribière+ coefficient; zero restarts to steepest descent
        let beta = if prev_grad.is_empty() {
            0.0
        } else {
            let denom = dot(&prev_grad, &prev_grad);
            if denom > 0.0 {
                ((dot(&grad, &grad) - dot(&grad, &prev_grad)) / denom).max(0.0)
            } else {
                0.0
            }
        };
        let mut dir: Vec<f64> = grad
            .iter()
            .enumerate()
            .map(|(k, g)| -g + beta * prev_dir.get(k).copied().unwrap_or(0.0))
            .collect();
        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        match armijo(obj, &theta, &dir, slope, j)? {
            Some((next_theta, next_j)) => {
                theta = next_theta;
                j = ensure_finite(next_j, iteration)?;
                history.push(j);
                prev_grad = std::mem::take(&mut grad);
                prev_dir = dir;
                grad = obj.gradient(&theta, &all, mode)?;
            }
            // no acceptable step left: the search has stalled
            None => break,
        }
    }
    Ok((theta, history))
}

fn run_sgd(
    obj: &Objective,
    theta0: Vec<f64>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>), TrainError> {
    let mode = config.gradient_mode;
    let mut theta = theta0;
    let j0 = ensure_finite(obj.cost(&theta)?, 0)?;
    let mut history = vec![j0];
    let mut best = (j0, theta.clone());
    let all: Vec<usize> = (0..obj.len()).collect();
    let mut order = all.clone();

    for epoch in 1..=config.max_iters {
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size) {
            let grad = obj.gradient(&theta, batch, mode)?;
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= config.learning_rate * g;
            }
        }
        let j = ensure_finite(obj.cost(&theta)?, epoch)?;
        history.push(j);
        if j < best.0 {
            best = (j, theta.clone());
        }
        let grad = obj.gradient(&theta, &all, mode)?;
        if inf_norm(&grad) < config.grad_tol {
            break;
        }
    }
    // best-seen parameters, so the result never regresses past the start
    Ok((best.1, history))
}
