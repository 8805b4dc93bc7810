//! Dense statevector simulation of few-qubit circuits.
//!
//! A state over `n` qubits is a vector of `2^n` complex amplitudes with
//! qubit 0 as the **most significant bit** of the basis index, so `|10⟩`
//! on two wires sits at index 2. Every operation is pure: it borrows the
//! input state and returns a fresh one, which makes states safe to share
//! across worker threads.

use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on dense simulation size. The circuits this crate targets use
/// at most 7 wires; 24 is a safety margin, not a goal.
pub const MAX_QUBITS: usize = 24;

/// Tolerance for the unit-norm invariant of [`StateVector`].
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance for the unitarity check applied to generic gate matrices.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    BadQubitCount(usize),
    #[error("basis index {index} out of range for {n_qubits} qubit(s)")]
    BasisIndexOutOfRange { index: usize, n_qubits: usize },
    #[error("amplitude vector length {0} is not a power of two >= 2")]
    BadLength(usize),
    #[error("state norm² deviates from 1 by {0:.3e}")]
    NotNormalized(f64),
    #[error("wire {wire} out of range for {n_qubits} qubit(s)")]
    WireOutOfRange { wire: usize, n_qubits: usize },
    #[error("gate wires collide on wire {0}")]
    WireCollision(usize),
    #[error("gate matrix is not unitary (max |U†U − I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("product state needs at least one factor")]
    EmptyProduct,
    #[error("product factors must be single-qubit states")]
    NonQubitFactor,
    #[error("state dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
}

/// Rotation around the y axis in the half-angle convention,
/// `RY(θ) = exp(−iθY/2) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
pub fn ry_matrix(angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// A gate together with the wires it acts on.
#[derive(Clone, Debug)]
pub enum Gate {
    Ry { wire: usize, angle: f64 },
    /// Controlled NOT; flips `target` when `control` is set.
    Cnot { control: usize, target: usize },
    /// Arbitrary single-qubit unitary, validated on application.
    Generic1q {
        wire: usize,
        matrix: [[Complex64; 2]; 2],
    },
    /// Arbitrary two-qubit unitary in the `(wires.0, wires.1)` index order
    /// (row/column index `2·b₀ + b₁`), validated on application.
    Generic2q {
        wires: (usize, usize),
        matrix: [[Complex64; 4]; 4],
    },
}

impl Gate {
    pub fn ry(wire: usize, angle: f64) -> Self {
        Gate::Ry { wire, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn generic1q(wire: usize, matrix: [[Complex64; 2]; 2]) -> Self {
        Gate::Generic1q { wire, matrix }
    }

    pub fn generic2q(wires: (usize, usize), matrix: [[Complex64; 4]; 4]) -> Self {
        Gate::Generic2q { wires, matrix }
    }

    /// Wires the gate touches, in declaration order.
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Gate::Ry { wire, .. } | Gate::Generic1q { wire, .. } => vec![*wire],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Generic2q { wires, .. } => vec![wires.0, wires.1],
        }
    }

    /// Checks wire ranges, wire distinctness and (for generic matrices)
    /// unitarity within [`UNITARY_TOL`].
    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        let wires = self.wires();
        for &w in &wires {
            if w >= n_qubits {
                return Err(SimError::WireOutOfRange { wire: w, n_qubits });
            }
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(SimError::WireCollision(wires[0]));
        }
        match self {
            Gate::Generic1q { matrix, .. } => check_unitary_2(matrix),
            Gate::Generic2q { matrix, .. } => check_unitary_4(matrix),
            _ => Ok(()),
        }
    }

    /// The 2×2 matrix of a single-qubit gate, if this is one.
    pub fn one_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        match self {
            Gate::Ry { angle, .. } => Some(ry_matrix(*angle)),
            Gate::Generic1q { matrix, .. } => Some(*matrix),
            _ => None,
        }
    }

    /// The 4×4 matrix of a two-qubit gate in the gate's own wire order
    /// (index `2·b_first + b_second`), if this is one.
    pub fn two_qubit_matrix(&self) -> Option<[[Complex64; 4]; 4]> {
        match self {
            Gate::Cnot { .. } => {
                let o = Complex64::new(1.0, 0.0);
                let z = Complex64::new(0.0, 0.0);
                // basis order (b_control, b_target): 00, 01, 10, 11
                Some([[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]])
            }
            Gate::Generic2q { matrix, .. } => Some(*matrix),
            _ => None,
        }
    }
}

fn check_unitary_2(u: &[[Complex64; 2]; 2]) -> Result<(), SimError> {
    check_unitary(u.iter().map(|row| row.as_slice()), 2)
}

fn check_unitary_4(u: &[[Complex64; 4]; 4]) -> Result<(), SimError> {
    check_unitary(u.iter().map(|row| row.as_slice()), 4)
}

/// Max deviation of `U†U` from the identity, checked against
/// [`UNITARY_TOL`].
fn check_unitary<'a>(
    rows: impl Iterator<Item = &'a [Complex64]>,
    dim: usize,
) -> Result<(), SimError> {
    let rows: Vec<&[Complex64]> = rows.collect();
    let mut dev = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let s: Complex64 = rows.iter().map(|row| row[i].conj() * row[j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - target).norm());
        }
    }
    if dev > UNITARY_TOL {
        Err(SimError::NotUnitary(dev))
    } else {
        Ok(())
    }
}

/// Dense complex amplitude vector over `n_qubits` qubits.
///
/// Invariants: `amps.len() == 2^n_qubits` and `Σ|amp|² = 1` within
/// [`NORM_TOL`]; both are enforced at construction and preserved by every
/// operation (gates are unitary).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state `|basis_index⟩` on `n_qubits` wires.
    pub fn basis(n_qubits: usize, basis_index: usize) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::BadQubitCount(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if basis_index >= dim {
            return Err(SimError::BasisIndexOutOfRange {
                index: basis_index,
                n_qubits,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[basis_index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps a raw amplitude vector, validating length and normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(SimError::BadLength(dim));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(SimError::BadQubitCount(n_qubits));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized((norm_sqr - 1.0).abs()));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Self) -> Result<Complex64, SimError> {
        if self.dim() != other.dim() {
            return Err(SimError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &Self) -> Result<f64, SimError> {
        Ok(self.overlap(other)?.norm())
    }

    /// Kronecker product of single-qubit factors, in wire order
    /// (factor 0 becomes the most significant qubit).
    pub fn product(factors: &[StateVector]) -> Result<Self, SimError> {
        if factors.is_empty() {
            return Err(SimError::EmptyProduct);
        }
        if factors.iter().any(|f| f.n_qubits != 1) {
            return Err(SimError::NonQubitFactor);
        }
        if factors.len() > MAX_QUBITS {
            return Err(SimError::BadQubitCount(factors.len()));
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for f in factors {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * f.amps[0]);
                next.push(a * f.amps[1]);
            }
            amps = next;
        }
        Ok(Self {
            n_qubits: factors.len(),
            amps,
        })
    }

    /// `self ⊗ other` with `self`'s qubits becoming the most significant.
    pub fn tensor(&self, other: &Self) -> Result<Self, SimError> {
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(SimError::BadQubitCount(n_qubits));
        }
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { n_qubits, amps })
    }

    /// Applies `gate` on its wires, identity elsewhere.
    pub fn apply(&self, gate: &Gate) -> Result<Self, SimError> {
        let mut out = self.clone();
        out.apply_mut(gate)?;
        Ok(out)
    }

    /// In-place variant used by evaluation loops to avoid re-allocating
    /// the amplitude buffer per gate.
    pub(crate) fn apply_mut(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.validate(self.n_qubits)?;
        match gate {
            Gate::Ry { wire, angle } => {
                apply_1q(&mut self.amps, self.n_qubits, *wire, &ry_matrix(*angle))
            }
            Gate::Generic1q { wire, matrix } => {
                apply_1q(&mut self.amps, self.n_qubits, *wire, matrix)
            }
            Gate::Cnot { control, target } => {
                apply_cnot(&mut self.amps, self.n_qubits, *control, *target)
            }
            Gate::Generic2q { wires, matrix } => {
                apply_2q(&mut self.amps, self.n_qubits, *wires, matrix)
            }
        }
        Ok(())
    }

    /// Pauli-Z expectation on `wire`:
    /// `Σ_b (±1)·|amp_b|²` with `+` when the wire's bit is 0.
    /// `P(|1⟩ on wire) = (1 − result) / 2`.
    pub fn expectation_z(&self, wire: usize) -> Result<f64, SimError> {
        if wire >= self.n_qubits {
            return Err(SimError::WireOutOfRange {
                wire,
                n_qubits: self.n_qubits,
            });
        }
        let mask = wire_mask(self.n_qubits, wire);
        let mut z = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            z += if i & mask == 0 { p } else { -p };
        }
        Ok(z.clamp(-1.0, 1.0))
    }
}

/// Bit mask of `wire` in a basis index (qubit 0 = most significant bit).
fn wire_mask(n_qubits: usize, wire: usize) -> usize {
    1usize << (n_qubits - 1 - wire)
}

fn apply_1q(amps: &mut [Complex64], n_qubits: usize, wire: usize, u: &[[Complex64; 2]; 2]) {
    let stride = wire_mask(n_qubits, wire);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = u[0][0] * a0 + u[0][1] * a1;
            amps[i + stride] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * stride;
    }
}

fn apply_cnot(amps: &mut [Complex64], n_qubits: usize, control: usize, target: usize) {
    let cm = wire_mask(n_qubits, control);
    let tm = wire_mask(n_qubits, target);
    for i in 0..amps.len() {
        if i & cm != 0 && i & tm == 0 {
            amps.swap(i, i | tm);
        }
    }
}

fn apply_2q(
    amps: &mut [Complex64],
    n_qubits: usize,
    wires: (usize, usize),
    u: &[[Complex64; 4]; 4],
) {
    let m1 = wire_mask(n_qubits, wires.0);
    let m2 = wire_mask(n_qubits, wires.1);
    for i in 0..amps.len() {
        if i & m1 == 0 && i & m2 == 0 {
            // gate index order: 2·b_first + b_second
            let idx = [i, i | m2, i | m1, i | m1 | m2];
            let a = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for (r, &out_i) in idx.iter().enumerate() {
                amps[out_i] = u[r][0] * a[0] + u[r][1] * a[1] + u[r][2] * a[2] + u[r][3] * a[3];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    pub(crate) fn random_state(n_qubits: usize, rng: &mut impl Rng) -> StateVector {
        let dim = 1usize << n_qubits;
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(amps).unwrap()
    }

    pub(crate) fn random_gate(n_qubits: usize, rng: &mut impl Rng) -> Gate {
        match rng.gen_range(0..3) {
            0 => Gate::ry(rng.gen_range(0..n_qubits), rng.gen_range(-6.3..6.3)),
            1 => {
                let c = rng.gen_range(0..n_qubits);
                let mut t = rng.gen_range(0..n_qubits);
                while t == c {
                    t = rng.gen_range(0..n_qubits);
                }
                Gate::cnot(c, t)
            }
            _ => {
                // random real unitary: RY as a Generic1q
                let m = ry_matrix(rng.gen_range(-6.3..6.3));
                Gate::generic1q(rng.gen_range(0..n_qubits), m)
            }
        }
    }

    #[test]
    fn basis_states() {
        let s = StateVector::basis(2, 0).unwrap();
        assert_eq!(s.amplitudes(), &[re(1.0), re(0.0), re(0.0), re(0.0)]);
        let s = StateVector::basis(1, 1).unwrap();
        assert_eq!(s.amplitudes(), &[re(0.0), re(1.0)]);
        let s = StateVector::basis(3, 5).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amplitudes()[5], re(1.0));
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn basis_rejects_out_of_range() {
        assert!(matches!(
            StateVector::basis(2, 4),
            Err(SimError::BasisIndexOutOfRange { .. })
        ));
        assert!(matches!(
            StateVector::basis(0, 0),
            Err(SimError::BadQubitCount(0))
        ));
        assert!(matches!(
            StateVector::basis(25, 0),
            Err(SimError::BadQubitCount(25))
        ));
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(matches!(
            StateVector::from_amplitudes(vec![re(1.0); 3]),
            Err(SimError::BadLength(3))
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![re(1.0), re(1.0)]),
            Err(SimError::NotNormalized(_))
        ));
    }

    #[test]
    fn ry_half_angle_on_zero() {
        let s = StateVector::basis(1, 0).unwrap();
        let s = s.apply(&Gate::ry(0, std::f64::consts::FRAC_PI_2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩ → |11⟩ (qubit 0 is the MSB)
        let s = StateVector::basis(2, 2).unwrap();
        let s = s.apply(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[3], re(1.0));
        // control clear: |01⟩ unchanged
        let s = StateVector::basis(2, 1).unwrap();
        let s = s.apply(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[1], re(1.0));
    }

    #[test]
    fn ry_inverse_restores_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_state(3, &mut rng);
        let theta = 1.234;
        let back = s
            .apply(&Gate::ry(1, theta))
            .unwrap()
            .apply(&Gate::ry(1, -theta))
            .unwrap();
        for (a, b) in s.amplitudes().iter().zip(back.amplitudes()) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_examples() {
        let zero = StateVector::basis(1, 0).unwrap();
        let s = StateVector::product(&[zero.clone(), zero.clone()]).unwrap();
        assert_eq!(s.amplitudes(), &[re(1.0), re(0.0), re(0.0), re(0.0)]);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![re(h), re(h)]).unwrap();
        let s = StateVector::product(&[plus, zero.clone()]).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[2].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[3].re, 0.0, epsilon = 1e-15);

        let s = StateVector::product(&vec![zero; 4]).unwrap();
        assert_eq!(s.dim(), 16);
        assert_eq!(s.amplitudes()[0], re(1.0));

        assert!(matches!(
            StateVector::product(&[]),
            Err(SimError::EmptyProduct)
        ));
    }

    #[test]
    fn expectation_z_examples() {
        let s = StateVector::basis(1, 0).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        let s = StateVector::basis(1, 1).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), -1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(vec![re(h), re(h)]).unwrap();
        assert_abs_diff_eq!(s.expectation_z(0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            s.expectation_z(1),
            Err(SimError::WireOutOfRange { .. })
        ));
    }

    #[test]
    fn generic_gate_unitarity_enforced() {
        let bad = [[re(1.0), re(1.0)], [re(0.0), re(1.0)]];
        let s = StateVector::basis(1, 0).unwrap();
        assert!(matches!(
            s.apply(&Gate::generic1q(0, bad)),
            Err(SimError::NotUnitary(_))
        ));
    }

    #[test]
    fn wire_collision_rejected() {
        let s = StateVector::basis(2, 0).unwrap();
        assert!(matches!(
            s.apply(&Gate::cnot(1, 1)),
            Err(SimError::WireCollision(1))
        ));
    }

    #[test]
    fn generic2q_matches_cnot() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(3, &mut rng);
        let cnot = Gate::cnot(0, 2);
        let generic = Gate::generic2q((0, 2), cnot.two_qubit_matrix().unwrap());
        let a = s.apply(&cnot).unwrap();
        let b = s.apply(&generic).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-14);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn norm_preserved_over_random_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = random_state(6, &mut rng);
        for _ in 0..1000 {
            s = s.apply(&random_gate(6, &mut rng)).unwrap();
            assert!((s.norm_sqr().sqrt() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cnot_is_an_involution(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(4, &mut rng);
            let c = rng.gen_range(0..4);
            let t = (c + rng.gen_range(1..4)) % 4;
            let twice = s.apply(&Gate::cnot(c, t)).unwrap().apply(&Gate::cnot(c, t)).unwrap();
            for (a, b) in s.amplitudes().iter().zip(twice.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }

        #[test]
        fn ry_is_additive(seed in any::<u64>(), a in -6.3f64..6.3, b in -6.3f64..6.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(3, &mut rng);
            let w = rng.gen_range(0..3);
            let split = s.apply(&Gate::ry(w, a)).unwrap().apply(&Gate::ry(w, b)).unwrap();
            let joint = s.apply(&Gate::ry(w, a + b)).unwrap();
            for (x, y) in split.amplitudes().iter().zip(joint.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn expectation_z_is_bounded_and_consistent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_state(5, &mut rng);
            let w = rng.gen_range(0..5);
            let z = s.expectation_z(w).unwrap();
            prop_assert!((-1.0..=1.0).contains(&z));
            // z = 1 − 2·P(bit set)
            let mask = 1usize << (5 - 1 - w);
            let p1: f64 = s.amplitudes().iter().enumerate()
                .filter(|(i, _)| i & mask != 0)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            prop_assert!((z - (1.0 - 2.0 * p1)).abs() < 1e-12);
        }
    }
}
