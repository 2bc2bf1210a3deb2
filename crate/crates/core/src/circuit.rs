//! Physical circuits: a flat, time-ordered instruction list with inline noise.

use std::fmt;

use crate::sim::noise::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate1 {
    I,
    X,
    Y,
    Z,
    H,
}

impl Gate1 {
    pub const ALL: [Gate1; 5] = [Gate1::I, Gate1::X, Gate1::Y, Gate1::Z, Gate1::H];

    pub fn name(self) -> &'static str {
        match self {
            Gate1::I => "I",
            Gate1::X => "X",
            Gate1::Y => "Y",
            Gate1::Z => "Z",
            Gate1::H => "H",
        }
    }

    pub fn pauli(self) -> Option<Pauli> {
        match self {
            Gate1::I => Some(Pauli::I),
            Gate1::X => Some(Pauli::X),
            Gate1::Y => Some(Pauli::Y),
            Gate1::Z => Some(Pauli::Z),
            Gate1::H => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Gate1(Gate1, usize),
    /// (control, target)
    Cx(usize, usize),
    Cz(usize, usize),
    /// Reset to |0>, followed by an X flip with probability `flip_p`.
    Reset { q: usize, flip_p: f64 },
    /// Z-basis measurement. The recorded bit is flipped with probability
    /// `flip_p`; the state is not affected by that flip.
    Measure { q: usize, flip_p: f64 },
    /// One-qubit Pauli channel (X, Y, Z).
    Noise1 { q: usize, probs: [f64; 3] },
    /// Two-qubit Pauli channel, IX..ZZ order, first letter on `a`.
    Noise2 { a: usize, b: usize, probs: [f64; 15] },
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Gate1(g, q) => write!(f, "{} {q}", g.name()),
            Op::Cx(c, t) => write!(f, "CX {c} {t}"),
            Op::Cz(a, b) => write!(f, "CZ {a} {b}"),
            Op::Reset { q, flip_p } => write!(f, "R({flip_p}) {q}"),
            Op::Measure { q, flip_p } => write!(f, "M({flip_p}) {q}"),
            Op::Noise1 { q, probs } => write!(f, "PAULI_CHANNEL_1{probs:?} {q}"),
            Op::Noise2 { a, b, probs } => write!(f, "PAULI_CHANNEL_2{probs:?} {a} {b}"),
        }
    }
}

impl Op {
    pub fn is_noise_site(&self) -> bool {
        match self {
            Op::Noise1 { .. } | Op::Noise2 { .. } => true,
            Op::Reset { flip_p, .. } | Op::Measure { flip_p, .. } => *flip_p > 0.0,
            _ => false,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Op::Gate1(_, q) | Op::Reset { q, .. } | Op::Measure { q, .. } | Op::Noise1 { q, .. } => {
                vec![q]
            }
            Op::Cx(a, b) | Op::Cz(a, b) | Op::Noise2 { a, b, .. } => vec![a, b],
        }
    }
}

/// A deterministic Pauli applied right after instruction `after_op`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Injection {
    pub after_op: usize,
    pub qubit: usize,
    pub pauli: Pauli,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalCircuit {
    pub num_qubits: usize,
    pub ops: Vec<Op>,
    pub num_measurements: usize,
    /// Measurement-event indices of the final transversal data readout, per
    /// logical qubit, in data-qubit order.
    pub final_data_events: Vec<Vec<usize>>,
}

impl PhysicalCircuit {
    pub fn new(num_qubits: usize) -> Self {
        PhysicalCircuit {
            num_qubits,
            ops: Vec::new(),
            num_measurements: 0,
            final_data_events: Vec::new(),
        }
    }

    pub fn push(&mut self, op: Op) -> Option<usize> {
        let event = matches!(op, Op::Measure { .. }).then(|| {
            self.num_measurements += 1;
            self.num_measurements - 1
        });
        self.ops.push(op);
        event
    }

    /// Copy with every probabilistic element removed.
    pub fn without_noise(&self) -> Self {
        let ops = self
            .ops
            .iter()
            .filter(|op| !matches!(op, Op::Noise1 { .. } | Op::Noise2 { .. }))
            .map(|op| match *op {
                Op::Reset { q, .. } => Op::Reset { q, flip_p: 0.0 },
                Op::Measure { q, .. } => Op::Measure { q, flip_p: 0.0 },
                ref other => other.clone(),
            })
            .collect();
        PhysicalCircuit {
            ops,
            ..self.clone()
        }
    }

    pub fn count_ops(&self, pred: impl Fn(&Op) -> bool) -> usize {
        self.ops.iter().filter(|op| pred(op)).count()
    }
}
