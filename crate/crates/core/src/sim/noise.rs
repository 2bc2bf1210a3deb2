//! Pauli algebra helpers and the circuit-level noise model.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Index order I, X, Y, Z.
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i]
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }
}

/// The `k`-th non-identity component of a one-qubit channel (X, Y, Z).
pub fn one_qubit_component(k: usize) -> Pauli {
    Pauli::from_index(k + 1)
}

/// The `k`-th non-identity component of a two-qubit channel in lexicographic
/// order IX, IY, IZ, XI, ..., ZZ. The first letter acts on the first operand.
pub fn two_qubit_component(k: usize) -> (Pauli, Pauli) {
    let code = k + 1;
    (Pauli::from_index(code / 4), Pauli::from_index(code % 4))
}

/// Draws a channel component: `Some(k)` with probability `probs[k]`,
/// `None` with probability `1 - sum(probs)`.
pub fn sample_component<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Some(k);
        }
    }
    None
}

/// Circuit-level Pauli noise.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    /// After each two-qubit gate, lexicographic IX..ZZ order.
    pub p2q: [f64; 15],
    /// After each single-qubit gate, (X, Y, Z).
    pub p1q: [f64; 3],
    /// On data qubits whenever blocks are moved, (X, Y, Z).
    pub p_move: [f64; 3],
    pub p_reset: f64,
    pub p_meas: f64,
}

impl NoiseModel {
    /// Neutral-atom motivated circuit-level noise.
    pub fn neutral_atom() -> Self {
        NoiseModel {
            p2q: [
                0.0005, 0.00175, 0.000625, 0.0005, 0.0, 0.0, 0.0, 0.00175, 0.0, 0.0, 0.0, 0.000625,
                0.0, 0.0, 0.00125,
            ],
            p1q: [1e-4, 1e-4, 1e-4],
            p_move: [4e-7, 4e-7, 1.6e-6],
            p_reset: 0.002,
            p_meas: 0.002,
        }
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            p2q: [0.0; 15],
            p1q: [0.0; 3],
            p_move: [0.0; 3],
            p_reset: 0.0,
            p_meas: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let channels: [(&str, &[f64]); 5] = [
            ("p2q", &self.p2q),
            ("p1q", &self.p1q),
            ("p_move", &self.p_move),
            ("p_reset", std::slice::from_ref(&self.p_reset)),
            ("p_meas", std::slice::from_ref(&self.p_meas)),
        ];
        for (name, probs) in channels {
            if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidNoise(format!("{name} has an entry outside [0, 1]")));
            }
            if probs.iter().sum::<f64>() > 1.0 + 1e-12 {
                return Err(Error::InvalidNoise(format!("{name} sums above 1")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p2q.iter().chain(&self.p1q).chain(&self.p_move).all(|&p| p == 0.0)
            && self.p_reset == 0.0
            && self.p_meas == 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::neutral_atom()
    }
}
