//! Randomized cross-validation of the dense and tensor-train backends.
//!
//! Runs the staircase circuit with random parameters on random encoded
//! product inputs through both engines and compares the classifier
//! scores; any disagreement above [`XCHECK_TOL`] fails the check. The worst
//! trial and the peak bond profile seen during the runs are reported.

use crate::ansatz::{AnsatzError, Backend, StaircaseCircuit};
use crate::encoding::{encode_sample, EncodingError};
use crate::mps::{MpsError, MpsState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Maximum tolerated score difference between the two backends.
pub const XCHECK_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum XcheckError {
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("need at least 2 wires (ancilla plus one data wire), got {0}")]
    TooFewWires(usize),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XcheckReport {
    pub n_wires: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_abs_delta: f64,
    /// Trial index that produced `max_abs_delta`.
    pub worst_trial: usize,
    /// Largest bond dimension seen on each interior bond across all trials.
    pub max_bond_profile: Vec<usize>,
    pub pass: bool,
}

impl fmt::Display for XcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "xcheck {} wires, {} trials (seed {}): max |Δm| = {:.3e} (worst trial {}), \
             peak bonds {:?} — {}",
            self.n_wires,
            self.trials,
            self.seed,
            self.max_abs_delta,
            self.worst_trial,
            self.max_bond_profile,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Evaluates `trials` random `(θ, input)` staircase circuits on `n_wires`
/// total wires (ancilla + `n_wires − 1` data wires) through both backends.
pub fn run(n_wires: usize, trials: usize, seed: u64) -> Result<XcheckReport, XcheckError> {
    if trials == 0 {
        return Err(XcheckError::NoTrials);
    }
    if n_wires < 2 {
        return Err(XcheckError::TooFewWires(n_wires));
    }
    let circuit = StaircaseCircuit::new(n_wires - 1, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_delta = 0.0f64;
    let mut worst_trial = 0usize;
    let mut max_bond_profile = vec![0usize; n_wires - 1];

    for trial in 0..trials {
        let theta: Vec<f64> = (0..circuit.param_count())
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let angles: Vec<f64> = (0..circuit.n_data())
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        let input = encode_sample(&angles)?;
        let dense = circuit.evaluate(&theta, &input, Backend::Dense)?;

        // replay the gate list step by step so bond growth is observable
        let mut state = MpsState::from_statevector(&circuit.prepare_input(&input)?, None)?;
        record_bonds(&mut max_bond_profile, &state);
        for gate in circuit.gates(&theta)? {
            state = state.apply_gate(&gate, None)?;
            record_bonds(&mut max_bond_profile, &state);
        }
        let z = state.expectation_z(circuit.output_wire())?;
        let mps = ((1.0 - z) / 2.0).clamp(0.0, 1.0);

        let delta = (dense - mps).abs();
        if delta > max_abs_delta {
            max_abs_delta = delta;
            worst_trial = trial;
        }
    }

    Ok(XcheckReport {
        n_wires,
        trials,
        seed,
        tolerance: XCHECK_TOL,
        max_abs_delta,
        worst_trial,
        max_bond_profile,
        pass: max_abs_delta < XCHECK_TOL,
    })
}

fn record_bonds(profile: &mut [usize], state: &MpsState) {
    for (slot, chi) in profile.iter_mut().zip(state.bond_dims()) {
        *slot = (*slot).max(chi);
    }
}
