//! Dense state-vector expectation values for the GHZ–Werner family.
//!
//! This is an independent route to the correlation tensor: it builds the
//! `2^N` amplitude vector of `(|0...0⟩ + |1...1⟩)/√2`, applies Pauli
//! operators qubit by qubit and takes the inner product. The white-noise
//! part contributes `(1 - V) Tr(P) / 2^N`, evaluated from the diagonal of `P`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{BellError, Result};

pub const MIN_ORACLE_PARTIES: usize = 2;
pub const MAX_ORACLE_PARTIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
}

impl PauliAxis {
    /// Tensor axis index (1 for x, 2 for y).
    pub fn tensor_index(self) -> u8 {
        match self {
            PauliAxis::X => 1,
            PauliAxis::Y => 2,
        }
    }

    pub fn from_tensor_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(PauliAxis::X),
            2 => Some(PauliAxis::Y),
            _ => None,
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliAxis::X => "x",
            PauliAxis::Y => "y",
        })
    }
}

impl FromStr for PauliAxis {
    type Err = BellError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(PauliAxis::X),
            "y" | "Y" => Ok(PauliAxis::Y),
            other => Err(BellError::InvalidAxis(other.to_string())),
        }
    }
}

fn apply_pauli(state: &[Complex64], qubit: usize, axis: PauliAxis) -> Vec<Complex64> {
    let mask = 1usize << qubit;
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    for (b, amp) in state.iter().enumerate() {
        let phase = match axis {
            PauliAxis::X => Complex64::new(1.0, 0.0),
            // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
            PauliAxis::Y if b & mask == 0 => Complex64::new(0.0, 1.0),
            PauliAxis::Y => Complex64::new(0.0, -1.0),
        };
        out[b ^ mask] += phase * amp;
    }
    out
}

fn apply_product(state: &[Complex64], axes: &[PauliAxis]) -> Vec<Complex64> {
    axes.iter()
        .enumerate()
        .fold(state.to_vec(), |acc, (q, &axis)| apply_pauli(&acc, q, axis))
}

fn ghz_state(n_parties: usize) -> Vec<Complex64> {
    let dim = 1usize << n_parties;
    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    state[0] = amp;
    state[dim - 1] = amp;
    state
}

/// `⟨σ_{a_1} ⊗ ... ⊗ σ_{a_N}⟩` on `V |GHZ⟩⟨GHZ| + (1 - V) 1/2^N`.
pub fn statevector_correlation_oracle(
    n_parties: usize,
    visibility: f64,
    axes: &[PauliAxis],
) -> Result<f64> {
    if !(MIN_ORACLE_PARTIES..=MAX_ORACLE_PARTIES).contains(&n_parties) {
        return Err(BellError::PartiesOutOfRange {
            got: n_parties,
            min: MIN_ORACLE_PARTIES,
            max: MAX_ORACLE_PARTIES,
        });
    }
    if !(0.0..=1.0).contains(&visibility) {
        return Err(BellError::InvalidVisibility(visibility));
    }
    if axes.len() != n_parties {
        return Err(BellError::SizeMismatch {
            what: "axis list",
            expected: n_parties,
            found: axes.len(),
        });
    }

    let psi = ghz_state(n_parties);
    let p_psi = apply_product(&psi, axes);
    let pure: Complex64 = psi.iter().zip(&p_psi).map(|(a, b)| a.conj() * b).sum();

    let dim = psi.len();
    let mut trace = Complex64::new(0.0, 0.0);
    let mut basis = vec![Complex64::new(0.0, 0.0); dim];
    for b in 0..dim {
        basis[b] = Complex64::new(1.0, 0.0);
        trace += apply_product(&basis, axes)[b];
        basis[b] = Complex64::new(0.0, 0.0);
    }

    let value = visibility * pure + (1.0 - visibility) * trace / dim as f64;
    debug_assert!(value.im.abs() < 1e-12, "Hermitian expectation must be real");
    Ok(value.re)
}

/// Full plane-restricted tensor assembled from oracle expectations, in the
/// same packed order as [`crate::tensor::CorrelationTensor`].
pub fn oracle_tensor_components(n_parties: usize, visibility: f64) -> Result<Vec<f64>> {
    if !(MIN_ORACLE_PARTIES..=MAX_ORACLE_PARTIES).contains(&n_parties) {
        return Err(BellError::PartiesOutOfRange {
            got: n_parties,
            min: MIN_ORACLE_PARTIES,
            max: MAX_ORACLE_PARTIES,
        });
    }
    (0..1usize << n_parties)
        .map(|idx| {
            let axes: Vec<PauliAxis> = (0..n_parties)
                .map(|j| if idx >> j & 1 == 0 { PauliAxis::X } else { PauliAxis::Y })
                .collect();
            statevector_correlation_oracle(n_parties, visibility, &axes)
        })
        .collect()
}
