//! Angle encoding of feature rows into product states.
//!
//! Raw features are rescaled per column to angles using bounds learned
//! from the training split, then each angle `x` becomes the qubit
//! `cos(x)|0⟩ + sin(x)|1⟩` and a row becomes the tensor product of its
//! feature qubits. Normalized angles span half a turn (see [`ANGLE_MIN`])
//! so that distinct feature values always encode distinct states.

use crate::sim::{SimError, StateVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalized angles span `[−π/2, π/2]`, half the feature map's period.
///
/// Because `|φ(x + π)⟩ = −|φ(x)⟩` differs only by a global sign, the
/// `cos/sin` map is physically π-periodic: spreading features over a full
/// `[−π, π]` turn would fold every feature onto half its range. Over a
/// half-turn the map is injective except at the two exact endpoints,
/// which alias up to sign — a single value pair, the map's known edge
/// case.
pub const ANGLE_MIN: f64 = -std::f64::consts::FRAC_PI_2;
pub const ANGLE_MAX: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("cannot fit bounds on an empty feature matrix")]
    EmptyFit,
    #[error("feature matrix rows have inconsistent lengths")]
    RaggedRows,
    #[error("non-finite feature value in column {0}")]
    NonFinite(usize),
    #[error("row length {got} does not match bound count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("cannot encode an empty angle vector")]
    EmptySample,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Per-feature min/max learned from the training split only; stored with
/// every trained model so test data is rescaled identically.
///
/// A constant column (min == max) normalizes to angle 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl NormalizationBounds {
    /// Column-wise min/max over `rows`.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, EncodingError> {
        let first = rows.first().ok_or(EncodingError::EmptyFit)?;
        let width = first.len();
        if width == 0 {
            return Err(EncodingError::EmptyFit);
        }
        let mut mins = vec![f64::INFINITY; width];
        let mut maxs = vec![f64::NEG_INFINITY; width];
        for row in rows {
            if row.len() != width {
                return Err(EncodingError::RaggedRows);
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(EncodingError::NonFinite(j));
                }
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn min(&self, feature: usize) -> f64 {
        self.mins[feature]
    }

    pub fn max(&self, feature: usize) -> f64 {
        self.maxs[feature]
    }

    /// Rescales a raw row to angles spanning [`ANGLE_MIN`, `ANGLE_MAX`]:
    /// `x_j = ANGLE_MIN + (ANGLE_MAX − ANGLE_MIN)·(v_j − min_j)/(max_j − min_j)`,
    /// clamped so unseen test values outside the training range stay at
    /// the endpoints.
    pub fn normalize(&self, row: &[f64]) -> Result<Vec<f64>, EncodingError> {
        if row.len() != self.n_features() {
            return Err(EncodingError::LengthMismatch {
                got: row.len(),
                expected: self.n_features(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let (lo, hi) = (self.mins[j], self.maxs[j]);
                if lo == hi {
                    0.0
                } else {
                    let x = ANGLE_MIN + (ANGLE_MAX - ANGLE_MIN) * (v - lo) / (hi - lo);
                    x.clamp(ANGLE_MIN, ANGLE_MAX)
                }
            })
            .collect())
    }
}

/// A normalized sample ready for encoding: angles in
/// `[ANGLE_MIN, ANGLE_MAX]^N` plus its binary label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub angles: Vec<f64>,
    pub label: u8,
}

impl EncodedSample {
    pub fn new(angles: Vec<f64>, label: u8) -> Self {
        debug_assert!(label <= 1);
        Self { angles, label }
    }

    pub fn state(&self) -> Result<StateVector, EncodingError> {
        encode_sample(&self.angles)
    }
}

/// `x ↦ cos(x)|0⟩ + sin(x)|1⟩`; unit norm by the Pythagorean identity,
/// negative amplitudes permitted.
pub fn encode_feature(x: f64) -> StateVector {
    let amps = vec![Complex64::new(x.cos(), 0.0), Complex64::new(x.sin(), 0.0)];
    // cos² + sin² = 1, so this cannot fail for finite x
    StateVector::from_amplitudes(amps).expect("feature encoding is normalized")
}

/// Tensor product of per-feature encodings; dimension `2^N`.
pub fn encode_sample(angles: &[f64]) -> Result<StateVector, EncodingError> {
    if angles.is_empty() {
        return Err(EncodingError::EmptySample);
    }
    if let Some(j) = angles.iter().position(|x| !x.is_finite()) {
        return Err(EncodingError::NonFinite(j));
    }
    let factors: Vec<StateVector> = angles.iter().map(|&x| encode_feature(x)).collect();
    Ok(StateVector::product(&factors)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn fit_bounds_examples() {
        let b = NormalizationBounds::fit(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!((b.min(0), b.max(0)), (1.0, 3.0));

        // one row: min = max, normalization maps to 0
        let b = NormalizationBounds::fit(&[vec![2.5]]).unwrap();
        assert_eq!(b.min(0), b.max(0));
        assert_eq!(b.normalize(&[2.5]).unwrap(), vec![0.0]);

        assert!(matches!(
            NormalizationBounds::fit(&[]),
            Err(EncodingError::EmptyFit)
        ));
    }

    #[test]
    fn normalize_endpoints_and_clamping() {
        let b = NormalizationBounds::fit(&[vec![1.0], vec![3.0]]).unwrap();
        assert_abs_diff_eq!(b.normalize(&[1.0]).unwrap()[0], ANGLE_MIN);
        assert_abs_diff_eq!(b.normalize(&[2.0]).unwrap()[0], 0.0);
        assert_abs_diff_eq!(b.normalize(&[3.0]).unwrap()[0], ANGLE_MAX);
        // unseen test value beyond the max clamps to the endpoint
        assert_abs_diff_eq!(b.normalize(&[4.0]).unwrap()[0], ANGLE_MAX);
        assert!(matches!(
            b.normalize(&[1.0, 2.0]),
            Err(EncodingError::LengthMismatch { .. })
        ));
        // interior points encode distinct states; only the two exact range
        // endpoints coincide (up to a global sign), the known aliasing
        let probe = |x: f64, y: f64| {
            encode_feature(x).fidelity(&encode_feature(y)).unwrap()
        };
        assert!(probe(ANGLE_MIN, 0.0) < 1.0 - 1e-6);
        assert!(probe(ANGLE_MIN + 0.1, ANGLE_MAX - 0.1) < 1.0 - 1e-6);
        assert_abs_diff_eq!(probe(ANGLE_MIN, ANGLE_MAX), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn encode_feature_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(encode_feature(0.0).amplitudes()[0].re, 1.0);
        assert_eq!(encode_feature(0.0).amplitudes()[1].re, 0.0);
        let s = encode_feature(PI / 4.0);
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-15);
        let s = encode_feature(PI / 2.0);
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn encode_sample_examples() {
        let s = encode_sample(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.dim(), 16);
        assert_eq!(s.amplitudes()[0].re, 1.0);

        // (π/2, 0) → |10⟩
        let s = encode_sample(&[PI / 2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[2].re, 1.0, epsilon = 1e-15);

        // equal superpositions → all four amplitudes 1/2
        let s = encode_sample(&[PI / 4.0, PI / 4.0]).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
        }

        assert!(matches!(
            encode_sample(&[]),
            Err(EncodingError::EmptySample)
        ));
    }

    proptest! {
        #[test]
        fn encoded_samples_have_unit_norm(angles in proptest::collection::vec(-PI..PI, 1..6)) {
            let s = encode_sample(&angles).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn encoding_is_kronecker_of_factors(angles in proptest::collection::vec(-PI..PI, 1..6)) {
            let s = encode_sample(&angles).unwrap();
            let dim = s.dim();
            for b in 0..dim {
                let mut expect = 1.0;
                for (k, &x) in angles.iter().enumerate() {
                    let bit = (b >> (angles.len() - 1 - k)) & 1;
                    expect *= if bit == 0 { x.cos() } else { x.sin() };
                }
                prop_assert!((s.amplitudes()[b].re - expect).abs() < 1e-12);
            }
        }

        #[test]
        fn normalize_is_monotone(a in -100.0f64..100.0, b in -100.0f64..100.0, c in -100.0f64..100.0) {
            let lo = a.min(b);
            let hi = a.max(b);
            prop_assume!(hi - lo > 1e-9);
            let bounds = NormalizationBounds::fit(&[vec![lo], vec![hi]]).unwrap();
            let mid = bounds.normalize(&[c]).unwrap()[0];
            let above = bounds.normalize(&[c + 1.0]).unwrap()[0];
            prop_assert!(above >= mid);
        }
    }
}
