//! Staircase classifier circuit and the trained-model artifact.
//!
//! The circuit places an optional ancilla wire (fixed to `|0⟩`) ahead of
//! the `N` data wires and walks a chain of two-qubit blocks up the wires:
//! block `i` applies `RY(θ_{2i})` to wire `i`, `RY(θ_{2i+1})` to wire
//! `i+1`, then `CNOT(control = i, target = i+1)`. Wire `i` is never
//! touched again — each block discards its lower wire — so after
//! `n_wires − 1` blocks only the last wire survives and is read out with
//! Pauli-Z. The classifier score is `m = (1 − ⟨Z⟩)/2 = P(|1⟩)`, and a
//! sample is labeled 1 when `m ≥ 0.5` (ties go to 1).

use crate::encoding::{encode_sample, EncodingError, NormalizationBounds};
use crate::mps::{MpsError, MpsState};
use crate::sim::{Gate, SimError, StateVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("feature count {0} outside supported range 1..=23")]
    BadFeatureCount(usize),
    #[error("parameter vector has length {got}, circuit needs {expected}")]
    ThetaLength { got: usize, expected: usize },
    #[error("input state has {got} qubit(s), circuit encodes {expected} feature(s)")]
    InputDimension { got: usize, expected: usize },
    #[error("feature row has length {got}, model expects {expected}")]
    RowLength { got: usize, expected: usize },
    #[error("model parameters must be finite")]
    NonFiniteTheta,
    #[error("training history must not be empty")]
    EmptyHistory,
    #[error("bounds cover {got} feature(s), circuit encodes {expected}")]
    BoundsMismatch { got: usize, expected: usize },
    #[error("invalid model file: {0}")]
    ModelFormat(#[from] serde_json::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// Which circuit engine evaluates the ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Mps,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Backend::Dense),
            "mps" => Ok(Backend::Mps),
            other => Err(format!("unknown backend '{other}' (expected dense or mps)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Dense => "dense",
            Backend::Mps => "mps",
        })
    }
}

/// Circuit topology: wire count, block order and parameter layout are all
/// derived from the feature count and the ancilla flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaircaseCircuit {
    n_data: usize,
    use_ancilla: bool,
}

impl StaircaseCircuit {
    pub fn new(n_data: usize, use_ancilla: bool) -> Result<Self, AnsatzError> {
        if n_data == 0 || n_data > 23 {
            return Err(AnsatzError::BadFeatureCount(n_data));
        }
        Ok(Self {
            n_data,
            use_ancilla,
        })
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn use_ancilla(&self) -> bool {
        self.use_ancilla
    }

    pub fn n_wires(&self) -> usize {
        self.n_data + usize::from(self.use_ancilla)
    }

    pub fn n_blocks(&self) -> usize {
        self.n_wires() - 1
    }

    pub fn param_count(&self) -> usize {
        2 * self.n_blocks()
    }

    pub fn output_wire(&self) -> usize {
        self.n_wires() - 1
    }

    /// Ordered `(wire_low, wire_high)` pairs, ascending the chain.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize)> {
        (0..self.n_blocks()).map(|i| (i, i + 1))
    }

    /// Expands the block sequence into a gate list for the given
    /// parameters.
    pub fn gates(&self, theta: &[f64]) -> Result<Vec<Gate>, AnsatzError> {
        if theta.len() != self.param_count() {
            return Err(AnsatzError::ThetaLength {
                got: theta.len(),
                expected: self.param_count(),
            });
        }
        let mut gates = Vec::with_capacity(3 * self.n_blocks());
        for (i, (low, high)) in self.blocks().enumerate() {
            gates.push(Gate::ry(low, theta[2 * i]));
            gates.push(Gate::ry(high, theta[2 * i + 1]));
            gates.push(Gate::cnot(low, high));
        }
        Ok(gates)
    }

    /// Prepends the ancilla `|0⟩` when configured.
    pub fn prepare_input(&self, input: &StateVector) -> Result<StateVector, AnsatzError> {
        if input.n_qubits() != self.n_data {
            return Err(AnsatzError::InputDimension {
                got: input.n_qubits(),
                expected: self.n_data,
            });
        }
        if self.use_ancilla {
            let ancilla = StateVector::basis(1, 0)?;
            Ok(ancilla.tensor(input)?)
        } else {
            Ok(input.clone())
        }
    }

    /// Runs the circuit on an encoded input and returns the classifier
    /// score `m = (1 − ⟨Z⟩_output)/2 ∈ [0, 1]`.
    pub fn evaluate(
        &self,
        theta: &[f64],
        input: &StateVector,
        backend: Backend,
    ) -> Result<f64, AnsatzError> {
        let full = self.prepare_input(input)?;
        self.evaluate_prepared(theta, &full, backend)
    }

    /// As [`evaluate`](Self::evaluate), but `full` already carries the
    /// ancilla wire; training loops prepare inputs once and reuse them.
    pub fn evaluate_prepared(
        &self,
        theta: &[f64],
        full: &StateVector,
        backend: Backend,
    ) -> Result<f64, AnsatzError> {
        if full.n_qubits() != self.n_wires() {
            return Err(AnsatzError::InputDimension {
                got: full.n_qubits(),
                expected: self.n_wires(),
            });
        }
        let gates = self.gates(theta)?;
        let z = match backend {
            Backend::Dense => {
                let mut state = full.clone();
                for gate in &gates {
                    state.apply_mut(gate)?;
                }
                state.expectation_z(self.output_wire())?
            }
            Backend::Mps => {
                let mut state = MpsState::from_statevector(full, None)?;
                for gate in &gates {
                    state = state.apply_gate(gate, None)?;
                }
                state.expectation_z(self.output_wire())?
            }
        };
        Ok(((1.0 - z) / 2.0).clamp(0.0, 1.0))
    }
}

/// Decision rule shared by every prediction path: ties at 0.5 go to 1.
pub fn label_from_score(score: f64) -> u8 {
    u8::from(score >= 0.5)
}

/// Which source class each binary label maps to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMapping {
    /// Source class encoded as label 0.
    pub negative: u32,
    /// Source class encoded as label 1.
    pub positive: u32,
    pub negative_name: String,
    pub positive_name: String,
}

/// Persistable training result: circuit shape, optimized parameters, the
/// normalization bounds learned on the training split, the class mapping
/// and the per-iteration cost history.
///
/// Serializes to JSON; `f64` values survive the round trip bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub n_data: usize,
    pub use_ancilla: bool,
    pub theta: Vec<f64>,
    pub bounds: NormalizationBounds,
    pub classes: ClassMapping,
    pub history: Vec<f64>,
}

impl TrainedModel {
    pub fn new(
        circuit: StaircaseCircuit,
        theta: Vec<f64>,
        bounds: NormalizationBounds,
        classes: ClassMapping,
        history: Vec<f64>,
    ) -> Result<Self, AnsatzError> {
        if theta.len() != circuit.param_count() {
            return Err(AnsatzError::ThetaLength {
                got: theta.len(),
                expected: circuit.param_count(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(AnsatzError::NonFiniteTheta);
        }
        if history.is_empty() {
            return Err(AnsatzError::EmptyHistory);
        }
        if bounds.n_features() != circuit.n_data() {
            return Err(AnsatzError::BoundsMismatch {
                got: bounds.n_features(),
                expected: circuit.n_data(),
            });
        }
        Ok(Self {
            n_data: circuit.n_data(),
            use_ancilla: circuit.use_ancilla(),
            theta,
            bounds,
            classes,
            history,
        })
    }

    pub fn circuit(&self) -> StaircaseCircuit {
        StaircaseCircuit {
            n_data: self.n_data,
            use_ancilla: self.use_ancilla,
        }
    }

    /// Classifier score for a raw (unnormalized) feature row.
    pub fn score(&self, raw_row: &[f64], backend: Backend) -> Result<f64, AnsatzError> {
        if raw_row.len() != self.n_data {
            return Err(AnsatzError::RowLength {
                got: raw_row.len(),
                expected: self.n_data,
            });
        }
        let angles = self.bounds.normalize(raw_row)?;
        let input = encode_sample(&angles)?;
        self.circuit().evaluate(&self.theta, &input, backend)
    }

    /// `(label, score)` for a raw feature row on the dense backend.
    pub fn predict(&self, raw_row: &[f64]) -> Result<(u8, f64), AnsatzError> {
        self.predict_with(raw_row, Backend::Dense)
    }

    pub fn predict_with(
        &self,
        raw_row: &[f64],
        backend: Backend,
    ) -> Result<(u8, f64), AnsatzError> {
        let m = self.score(raw_row, backend)?;
        Ok((label_from_score(m), m))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AnsatzError> {
        let model: TrainedModel = serde_json::from_str(text)?;
        // re-validate the invariants the constructor enforces
        let circuit = StaircaseCircuit::new(model.n_data, model.use_ancilla)?;
        TrainedModel::new(
            circuit,
            model.theta,
            model.bounds,
            model.classes,
            model.history,
        )
    }
}
