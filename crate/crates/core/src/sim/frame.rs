//! Pauli-frame sampling of noisy shots.
//!
//! The frame holds the X and Z components of the accumulated error relative
//! to the noiseless reference execution. Measurement flips are the X
//! component on the measured qubit at measurement time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;
use crate::circuit::{Gate1, Injection, Op, PhysicalCircuit};
use crate::error::{Error, Result};
use crate::sim::noise::{one_qubit_component, sample_component, two_qubit_component, Pauli};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    pub x_flips: Bits,
    pub z_flips: Bits,
}

impl PauliFrame {
    pub fn new(num_qubits: usize) -> Self {
        PauliFrame {
            x_flips: Bits::zeros(num_qubits),
            z_flips: Bits::zeros(num_qubits),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.x_flips.len()
    }

    #[inline]
    pub fn xor_pauli(&mut self, q: usize, p: Pauli) {
        if p.has_x() {
            self.x_flips.flip(q);
        }
        if p.has_z() {
            self.z_flips.flip(q);
        }
    }

    pub fn pauli(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_flips.get(q), self.z_flips.get(q))
    }

    pub fn is_identity(&self) -> bool {
        !self.x_flips.any() && !self.z_flips.any()
    }

    #[inline]
    pub fn h(&mut self, q: usize) {
        let (x, z) = (self.x_flips.get(q), self.z_flips.get(q));
        self.x_flips.set(q, z);
        self.z_flips.set(q, x);
    }

    #[inline]
    pub fn cx(&mut self, c: usize, t: usize) {
        if self.x_flips.get(c) {
            self.x_flips.flip(t);
        }
        if self.z_flips.get(t) {
            self.z_flips.flip(c);
        }
    }

    #[inline]
    pub fn cz(&mut self, a: usize, b: usize) {
        let (xa, xb) = (self.x_flips.get(a), self.x_flips.get(b));
        if xb {
            self.z_flips.flip(a);
        }
        if xa {
            self.z_flips.flip(b);
        }
    }

    #[inline]
    pub fn reset(&mut self, q: usize) {
        self.x_flips.set(q, false);
        self.z_flips.set(q, false);
    }
}

/// Unitary or reset/measure action of `op` on the frame, without noise.
/// Returns the measurement flip for `Measure`, `None` otherwise.
pub fn propagate_gate(frame: &mut PauliFrame, op: &Op) -> Option<bool> {
    match *op {
        Op::Gate1(Gate1::H, q) => frame.h(q),
        Op::Gate1(_, _) => {}
        Op::Cx(c, t) => frame.cx(c, t),
        Op::Cz(a, b) => frame.cz(a, b),
        Op::Reset { q, .. } => frame.reset(q),
        Op::Measure { q, .. } => return Some(frame.x_flips.get(q)),
        Op::Noise1 { .. } | Op::Noise2 { .. } => {}
    }
    None
}

/// XORs a random component of a Pauli channel into the frame. `probs` has
/// length 3 for one qubit or 15 for two.
pub fn apply_pauli_channel<R: Rng + ?Sized>(
    frame: &mut PauliFrame,
    qubits: &[usize],
    probs: &[f64],
    rng: &mut R,
) -> Result<()> {
    let expected = match qubits.len() {
        1 => 3,
        2 => 15,
        n => {
            return Err(Error::ChannelArity {
                arity: n,
                expected: 4usize.pow(n as u32) - 1,
                got: probs.len(),
            })
        }
    };
    if probs.len() != expected {
        return Err(Error::ChannelArity {
            arity: qubits.len(),
            expected,
            got: probs.len(),
        });
    }
    if let Some(k) = sample_component(probs, rng) {
        if qubits.len() == 1 {
            frame.xor_pauli(qubits[0], one_qubit_component(k));
        } else {
            let (pa, pb) = two_qubit_component(k);
            frame.xor_pauli(qubits[0], pa);
            frame.xor_pauli(qubits[1], pb);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotRecord {
    pub meas_flips: Bits,
    pub final_data_flips: Bits,
}

impl ShotRecord {
    fn from_flips(circuit: &PhysicalCircuit, meas_flips: Bits) -> Self {
        let finals: Vec<usize> = circuit.final_data_events.iter().flatten().copied().collect();
        let mut final_data_flips = Bits::zeros(finals.len());
        for (i, &e) in finals.iter().enumerate() {
            final_data_flips.set(i, meas_flips.get(e));
        }
        ShotRecord {
            meas_flips,
            final_data_flips,
        }
    }
}

/// Derives the random stream for one shot. Streams of distinct shot indices
/// under the same master seed never overlap.
pub fn shot_rng(master_seed: u64, shot_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot_index);
    rng
}

/// Samples one noisy shot.
pub fn frame_sample<R: Rng + ?Sized>(circuit: &PhysicalCircuit, rng: &mut R) -> ShotRecord {
    run_frame(circuit, Some(rng), &[])
}

/// Propagates a fixed set of injected Paulis with all noise disabled.
pub fn frame_inject(circuit: &PhysicalCircuit, injections: &[Injection]) -> ShotRecord {
    run_frame::<ChaCha8Rng>(circuit, None, injections)
}

fn run_frame<R: Rng + ?Sized>(
    circuit: &PhysicalCircuit,
    mut rng: Option<&mut R>,
    injections: &[Injection],
) -> ShotRecord {
    let mut frame = PauliFrame::new(circuit.num_qubits);
    let mut flips = Bits::zeros(circuit.num_measurements);
    let mut event = 0;
    let mut pending = injections.to_vec();
    pending.sort_by_key(|inj| inj.after_op);
    let mut next_inj = 0;

    for (idx, op) in circuit.ops.iter().enumerate() {
        match (op, rng.as_deref_mut()) {
            (Op::Noise1 { q, probs }, Some(r)) => {
                if let Some(k) = sample_component(probs, r) {
                    frame.xor_pauli(*q, one_qubit_component(k));
                }
            }
            (Op::Noise2 { a, b, probs }, Some(r)) => {
                if let Some(k) = sample_component(probs, r) {
                    let (pa, pb) = two_qubit_component(k);
                    frame.xor_pauli(*a, pa);
                    frame.xor_pauli(*b, pb);
                }
            }
            (&Op::Reset { q, flip_p }, r) => {
                frame.reset(q);
                if let Some(r) = r {
                    if flip_p > 0.0 && r.random::<f64>() < flip_p {
                        frame.x_flips.flip(q);
                    }
                }
            }
            (&Op::Measure { q, flip_p }, r) => {
                let mut bit = frame.x_flips.get(q);
                if let Some(r) = r {
                    if flip_p > 0.0 && r.random::<f64>() < flip_p {
                        bit = !bit;
                    }
                }
                flips.set(event, bit);
                event += 1;
            }
            (op, _) => {
                propagate_gate(&mut frame, op);
            }
        }
        while next_inj < pending.len() && pending[next_inj].after_op == idx {
            let inj = pending[next_inj];
            frame.xor_pauli(inj.qubit, inj.pauli);
            next_inj += 1;
        }
    }
    ShotRecord::from_flips(circuit, flips)
}
