//! Tensor-train (matrix product state) representation of qubit states.
//!
//! A state on `L` sites is a chain of rank-3 tensors `A_k` of shape
//! `(χ_{k−1}, 2, χ_k)` with open boundaries `χ_0 = χ_L = 1`; each tensor is
//! stored as a pair of `χ_{k−1} × χ_k` matrices, one per physical bit. The
//! amplitude of a bit string is the left-to-right product of the selected
//! matrices, which reduces to a scalar because of the boundary bonds.
//!
//! The interior bond dimension `χ_k` is capped by `min(2^k, 2^{L−k})` and
//! measures the entanglement across that cut: a product state has all
//! bonds 1, a Bell pair needs 2. Gates act either on one site (contracted
//! in place) or on two adjacent sites (merge, apply, split by SVD). SVD
//! splits drop singular values below `1e-12·σ_max`, optionally cap the
//! bond at `max_bond`, and rescale the kept values so the state keeps its
//! norm when truncation discards weight.

use crate::sim::{Gate, SimError, StateVector, MAX_QUBITS};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Relative singular-value cutoff applied at every SVD split.
pub const SVD_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("bit string length {got} does not match site count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("bit string entries must be 0 or 1, found {0}")]
    BadBit(u8),
    #[error("max_bond must be at least 1")]
    InvalidMaxBond,
    #[error("{0} sites exceed the dense reconstruction cap of {MAX_QUBITS}")]
    TooManySites(usize),
    #[error("two-qubit gates must act on adjacent sites, got {0} and {1}")]
    NonAdjacentWires(usize, usize),
    #[error("gate must act on one site or two adjacent sites")]
    UnsupportedGate,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Chain of site tensors; see the module docs for conventions.
#[derive(Clone, Debug)]
pub struct MpsState {
    /// `sites[k][σ]` is the `χ_{k−1} × χ_k` matrix selected by bit σ.
    sites: Vec<[DMatrix<C64>; 2]>,
    max_bond: Option<usize>,
}

impl MpsState {
    /// Decomposes a dense state by successive reshape + SVD, left to right.
    ///
    /// Without truncation the round trip back to a statevector has
    /// fidelity `> 1 − 1e-10`; with `max_bond` set, the kept singular
    /// values are renormalized so the state stays unit norm.
    pub fn from_statevector(
        state: &StateVector,
        max_bond: Option<usize>,
    ) -> Result<Self, MpsError> {
        if max_bond == Some(0) {
            return Err(MpsError::InvalidMaxBond);
        }
        let n_sites = state.n_qubits();
        let mut sites = Vec::with_capacity(n_sites);
        // carry starts as the full state laid out as a 1 × 2^L row
        let mut carry = DMatrix::from_fn(1, state.dim(), |_, j| state.amplitudes()[j]);
        let mut chi = 1usize;
        for _ in 0..n_sites - 1 {
            let rest = carry.ncols() / 2;
            // (χ, 2·rest) → (χ·2, rest): row (a, σ) = 2a + σ
            let m = DMatrix::from_fn(chi * 2, rest, |r, j| carry[(r / 2, (r % 2) * rest + j)]);
            let (u, new_carry) = svd_split(m, max_bond);
            let chi_next = u.ncols();
            sites.push([
                DMatrix::from_fn(chi, chi_next, |a, b| u[(a * 2, b)]),
                DMatrix::from_fn(chi, chi_next, |a, b| u[(a * 2 + 1, b)]),
            ]);
            carry = new_carry;
            chi = chi_next;
        }
        // last site: carry is (χ, 2)
        sites.push([
            DMatrix::from_fn(chi, 1, |a, _| carry[(a, 0)]),
            DMatrix::from_fn(chi, 1, |a, _| carry[(a, 1)]),
        ]);
        Ok(Self { sites, max_bond })
    }

    /// Number of sites (qubits).
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Truncation cap carried by this state, if any.
    pub fn max_bond(&self) -> Option<usize> {
        self.max_bond
    }

    /// Interior bond dimensions `χ_1 … χ_{L−1}` (empty for one site).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|site| site[0].ncols())
            .collect()
    }

    /// Amplitude of one bit string: the matrix product
    /// `Π_k A_k[bits_k]`, contracted left to right.
    pub fn amplitude(&self, bits: &[u8]) -> Result<C64, MpsError> {
        if bits.len() != self.len() {
            return Err(MpsError::LengthMismatch {
                got: bits.len(),
                expected: self.len(),
            });
        }
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(MpsError::BadBit(b));
        }
        let mut v = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (site, &bit) in self.sites.iter().zip(bits) {
            v = &v * &site[bit as usize];
        }
        Ok(v[(0, 0)])
    }

    /// Full contraction back to a dense statevector.
    pub fn to_statevector(&self) -> Result<StateVector, MpsError> {
        let n = self.len();
        if n > MAX_QUBITS {
            return Err(MpsError::TooManySites(n));
        }
        // acc rows enumerate the bits consumed so far, MSB first
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for site in &self.sites {
            let rows = acc.nrows();
            let cols = site[0].ncols();
            let mut next = DMatrix::from_element(rows * 2, cols, C64::new(0.0, 0.0));
            for sigma in 0..2 {
                let block = &acc * &site[sigma];
                for i in 0..rows {
                    for j in 0..cols {
                        next[(i * 2 + sigma, j)] = block[(i, j)];
                    }
                }
            }
            acc = next;
        }
        let amps: Vec<C64> = (0..acc.nrows()).map(|i| acc[(i, 0)]).collect();
        StateVector::from_amplitudes(amps).map_err(MpsError::Sim)
    }

    /// Applies a gate on one site or two adjacent sites. `max_bond`
    /// overrides the state's own cap for this application when given.
    pub fn apply_gate(&self, gate: &Gate, max_bond: Option<usize>) -> Result<Self, MpsError> {
        if max_bond == Some(0) {
            return Err(MpsError::InvalidMaxBond);
        }
        gate.validate(self.len())?;
        let cap = max_bond.or(self.max_bond);
        let wires = gate.wires();
        match wires.as_slice() {
            [w] => {
                let u = gate.one_qubit_matrix().ok_or(MpsError::UnsupportedGate)?;
                let mut sites = self.sites.clone();
                let [a0, a1] = &self.sites[*w];
                sites[*w] = [
                    a0.scale_complex(u[0][0]) + a1.scale_complex(u[0][1]),
                    a0.scale_complex(u[1][0]) + a1.scale_complex(u[1][1]),
                ];
                Ok(Self {
                    sites,
                    max_bond: self.max_bond,
                })
            }
            [a, b] => {
                if a.abs_diff(*b) != 1 {
                    return Err(MpsError::NonAdjacentWires(*a, *b));
                }
                let low = *a.min(b);
                let mut u = gate.two_qubit_matrix().ok_or(MpsError::UnsupportedGate)?;
                if a > b {
                    // gate indices are (b_a, b_b); re-order to (site low, low+1)
                    u = swap_two_qubit_index_order(&u);
                }
                let mut sites = self.sites.clone();
                let (left, right) = (&self.sites[low], &self.sites[low + 1]);
                let chi_l = left[0].nrows();
                let chi_r = right[0].ncols();
                // merge the two sites, apply the 4×4, reshape for the split
                let blob: Vec<DMatrix<C64>> = (0..4)
                    .map(|rc| {
                        let mut m = DMatrix::from_element(chi_l, chi_r, C64::new(0.0, 0.0));
                        for (cc, &coeff) in u[rc].iter().enumerate() {
                            if coeff.norm_sqr() > 0.0 {
                                m += (&left[cc / 2] * &right[cc % 2]).scale_complex(coeff);
                            }
                        }
                        m
                    })
                    .collect();
                let merged = DMatrix::from_fn(chi_l * 2, 2 * chi_r, |r, c| {
                    let (row_a, sigma) = (r / 2, r % 2);
                    let (tau, col_b) = (c / chi_r, c % chi_r);
                    blob[sigma * 2 + tau][(row_a, col_b)]
                });
                let (u_mat, carry) = svd_split(merged, cap);
                let chi_new = u_mat.ncols();
                sites[low] = [
                    DMatrix::from_fn(chi_l, chi_new, |a, c| u_mat[(a * 2, c)]),
                    DMatrix::from_fn(chi_l, chi_new, |a, c| u_mat[(a * 2 + 1, c)]),
                ];
                sites[low + 1] = [
                    DMatrix::from_fn(chi_new, chi_r, |c, b| carry[(c, b)]),
                    DMatrix::from_fn(chi_new, chi_r, |c, b| carry[(c, chi_r + b)]),
                ];
                Ok(Self {
                    sites,
                    max_bond: self.max_bond,
                })
            }
            _ => Err(MpsError::UnsupportedGate),
        }
    }

    /// Pauli-Z expectation on `wire` by transfer-matrix contraction,
    /// without densifying.
    pub fn expectation_z(&self, wire: usize) -> Result<f64, MpsError> {
        if wire >= self.len() {
            return Err(MpsError::Sim(SimError::WireOutOfRange {
                wire,
                n_qubits: self.len(),
            }));
        }
        Ok(self.contract_diagonal(Some(wire)).re.clamp(-1.0, 1.0))
    }

    /// `⟨ψ|ψ⟩` of the represented state.
    pub fn norm_sqr(&self) -> f64 {
        self.contract_diagonal(None).re
    }

    /// `⟨ψ|O|ψ⟩` where `O` is Z on `z_wire` (or identity when `None`).
    fn contract_diagonal(&self, z_wire: Option<usize>) -> C64 {
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for (k, site) in self.sites.iter().enumerate() {
            let chi_next = site[0].ncols();
            let mut next = DMatrix::from_element(chi_next, chi_next, C64::new(0.0, 0.0));
            for (sigma, a) in site.iter().enumerate() {
                let weight = match z_wire {
                    Some(w) if w == k && sigma == 1 => -1.0,
                    _ => 1.0,
                };
                next += (a.adjoint() * &env * a).scale_complex(C64::new(weight, 0.0));
            }
            env = next;
        }
        env[(0, 0)]
    }
}

/// Thin SVD split `m = U · carry` keeping singular values above
/// `SVD_CUTOFF · σ_max`, at most `max_bond` of them, always at least one.
/// The kept values are rescaled so the split preserves `‖m‖_F`.
fn svd_split(m: DMatrix<C64>, max_bond: Option<usize>) -> (DMatrix<C64>, DMatrix<C64>) {
    // factor m = left · diag(σ) · right with orthonormal left columns and
    // right rows; the Jacobi sweep runs on whichever orientation is tall
    let (left, sigma, right) = if m.nrows() >= m.ncols() {
        let (u, sigma, w) = jacobi_svd(m);
        let right = w.adjoint();
        (u, sigma, right)
    } else {
        let (u, sigma, w) = jacobi_svd(m.adjoint());
        (w, sigma, u.adjoint())
    };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let sigma_max = sigma[order[0]];
    let threshold = SVD_CUTOFF * sigma_max;
    let mut keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| sigma[i] > threshold)
        .collect();
    if let Some(cap) = max_bond {
        keep.truncate(cap);
    }
    if keep.is_empty() {
        keep.push(order[0]);
    }

    let total: f64 = sigma.iter().map(|x| x * x).sum();
    let kept: f64 = keep.iter().map(|&i| sigma[i] * sigma[i]).sum();
    let scale = (total / kept).sqrt();

    let u_trunc = DMatrix::from_fn(left.nrows(), keep.len(), |r, c| left[(r, keep[c])]);
    let carry = DMatrix::from_fn(keep.len(), right.ncols(), |r, c| {
        right[(keep[r], c)] * C64::new(sigma[keep[r]] * scale, 0.0)
    });
    (u_trunc, carry)
}

/// One-sided Jacobi SVD of a tall matrix `b` (`nrows >= ncols`): returns
/// `(u, σ, w)` with `b = u · diag(σ) · w†`, `u` carrying orthonormal
/// columns (zero columns where σ = 0) and `w` unitary.
///
/// Hestenes rotations orthogonalize column pairs in place; quadratic
/// convergence makes a handful of sweeps plenty for the ≤ 2^12-element
/// matrices bond splitting produces. Written out here because the
/// general-purpose complex SVDs available to this crate lose accuracy on
/// the rank-deficient splits product states generate.
fn jacobi_svd(mut b: DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    const TOL: f64 = 1e-15;
    const MAX_SWEEPS: usize = 64;

    let n_cols = b.ncols();
    let mut w = DMatrix::identity(n_cols, n_cols);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n_cols {
            for j in (i + 1)..n_cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for r in 0..b.nrows() {
                    alpha += b[(r, i)].norm_sqr();
                    beta += b[(r, j)].norm_sqr();
                    gamma += b[(r, i)].conj() * b[(r, j)];
                }
                if gamma.norm_sqr() <= TOL * TOL * alpha * beta || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                rotated = true;
                // phase column j so the pair's Gram off-diagonal is real
                let phase = C64::from_polar(1.0, -gamma.arg());
                let g = gamma.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..b.nrows() {
                    let bi = b[(r, i)];
                    let bj = b[(r, j)] * phase;
                    b[(r, i)] = c * bi - s * bj;
                    b[(r, j)] = s * bi + c * bj;
                }
                for r in 0..n_cols {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)] * phase;
                    w[(r, i)] = c * wi - s * wj;
                    w[(r, j)] = s * wi + c * wj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma = Vec::with_capacity(n_cols);
    let mut u = DMatrix::from_element(b.nrows(), n_cols, C64::new(0.0, 0.0));
    for col in 0..n_cols {
        let norm: f64 = (0..b.nrows()).map(|r| b[(r, col)].norm_sqr()).sum::<f64>().sqrt();
        sigma.push(norm);
        if norm > 0.0 {
            for r in 0..b.nrows() {
                u[(r, col)] = b[(r, col)] / norm;
            }
        }
    }
    (u, sigma, w)
}

/// Re-indexes a 4×4 two-qubit matrix so the roles of the first and second
/// qubit swap: index `2a + b ↦ 2b + a` on both rows and columns.
fn swap_two_qubit_index_order(u: &[[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let perm = [0usize, 2, 1, 3];
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = u[perm[r]][perm[c]];
        }
    }
    out
}

/// Complex scalar multiplication helper for `DMatrix<C64>`.
trait ScaleComplex {
    fn scale_complex(&self, k: C64) -> Self;
}

impl ScaleComplex for DMatrix<C64> {
    fn scale_complex(&self, k: C64) -> Self {
        self.map(|x| x * k)
    }
}
