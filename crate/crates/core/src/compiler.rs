//! Lowering of logical circuits onto rotated surface code patches, and the
//! detector / observable definitions that go with each lowered circuit.
//!
//! Each logical qubit owns a block of `d^2` data qubits followed by `d^2 - 1`
//! ancillas. Every gate layer is followed by one stabilizer-measurement round
//! on every block; the last round is followed by a transversal Z readout.
//!
//! A transversal H is absorbed by relabelling: after an odd number of H gates
//! a block is read through a quarter-turn of the lattice, so physical
//! plaquette `a` plays the role of plaquette `rotate_ancilla(a)` of the
//! canonical layout ("virtual" index). Detector vectors are always emitted in
//! canonical virtual order, Z block first.

use crate::circuit::{Gate1, Op, PhysicalCircuit};
use crate::error::{Error, Result};
use crate::geometry::{Basis, CodeLayout};
use crate::logical::{LogicalCircuit, LogicalGate};
use crate::sim::noise::NoiseModel;

/// Corner indices into `[NW, NE, SW, SE]`.
pub type CornerOrder = [usize; 4];

#[derive(Clone, Debug, PartialEq)]
pub struct CompileOptions {
    /// Interaction order for plaquettes currently measuring Z.
    pub z_order: CornerOrder,
    /// Interaction order for plaquettes currently measuring X.
    pub x_order: CornerOrder,
    /// Also apply movement noise before single-qubit gate layers.
    pub movement_on_single_qubit_layers: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            z_order: [0, 1, 2, 3],
            x_order: [0, 2, 1, 3],
            movement_on_single_qubit_layers: false,
        }
    }
}

/// Which decoder module consumes the syndrome of one qubit at one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateTag {
    Single(Gate1),
    Control { partner: usize },
    Target { partner: usize },
}

impl GateTag {
    pub fn code(self) -> (u8, u8) {
        match self {
            GateTag::Single(g) => (g as u8, 0),
            GateTag::Control { partner } => (5, partner as u8),
            GateTag::Target { partner } => (6, partner as u8),
        }
    }

    pub fn from_code(code: u8, partner: u8) -> Option<GateTag> {
        Some(match code {
            0..=4 => GateTag::Single(Gate1::ALL[code as usize]),
            5 => GateTag::Control {
                partner: partner as usize,
            },
            6 => GateTag::Target {
                partner: partner as usize,
            },
            _ => return None,
        })
    }
}

/// Measurement-event parities that define detectors and observables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectorMap {
    pub d: usize,
    pub num_logical: usize,
    pub depth: usize,
    /// `rounds[q][t][k]`: events whose parity is detector `k` of qubit `q` at
    /// round `t`. Empty when the detector has no deterministic reference.
    pub rounds: Vec<Vec<Vec<Vec<usize>>>>,
    /// `finals[q][k]`: reconstructed final-round detectors, one per Z plaquette.
    pub finals: Vec<Vec<Vec<usize>>>,
    /// `observables[q]`: events whose parity is the logical Z outcome of `q`.
    pub observables: Vec<Vec<usize>>,
    pub tags: Vec<Vec<GateTag>>,
    pub num_measurements: usize,
}

impl DetectorMap {
    pub fn stabilizers(&self) -> usize {
        self.d * self.d - 1
    }

    pub fn half(&self) -> usize {
        self.stabilizers() / 2
    }

    /// Flat index of round detector `(q, t, k)`.
    pub fn round_index(&self, q: usize, t: usize, k: usize) -> usize {
        (q * self.depth + t) * self.stabilizers() + k
    }

    /// Flat index of final detector `(q, k)`.
    pub fn final_index(&self, q: usize, k: usize) -> usize {
        self.num_logical * self.depth * self.stabilizers() + q * self.half() + k
    }

    pub fn num_detectors(&self) -> usize {
        self.num_logical * (self.depth * self.stabilizers() + self.half())
    }

    /// Events of every detector in flat order.
    pub fn detector_events(&self) -> Vec<&[usize]> {
        let mut out = Vec::with_capacity(self.num_detectors());
        for per_q in &self.rounds {
            for per_t in per_q {
                out.extend(per_t.iter().map(Vec::as_slice));
            }
        }
        for per_q in &self.finals {
            out.extend(per_q.iter().map(Vec::as_slice));
        }
        out
    }
}

struct Lowering<'a> {
    layout: &'a CodeLayout,
    noise: &'a NoiseModel,
    options: &'a CompileOptions,
    circuit: PhysicalCircuit,
    block: usize,
    inv_rot_data: Vec<usize>,
    rot_anc: Vec<usize>,
    inv_rot_anc: Vec<usize>,
}

impl<'a> Lowering<'a> {
    fn new(layout: &'a CodeLayout, noise: &'a NoiseModel, options: &'a CompileOptions, q: usize) -> Self {
        let n_data = layout.num_data();
        let n_anc = layout.num_ancillas();
        let rot_data: Vec<usize> = (0..n_data).map(|i| layout.rotate_data(i)).collect();
        let rot_anc: Vec<usize> = (0..n_anc).map(|a| layout.rotate_ancilla(a)).collect();
        let mut inv_rot_data = vec![0; n_data];
        for (i, &r) in rot_data.iter().enumerate() {
            inv_rot_data[r] = i;
        }
        let mut inv_rot_anc = vec![0; n_anc];
        for (a, &r) in rot_anc.iter().enumerate() {
            inv_rot_anc[r] = a;
        }
        let block = n_data + n_anc;
        Lowering {
            layout,
            noise,
            options,
            circuit: PhysicalCircuit::new(q * block),
            block,
            inv_rot_data,
            rot_anc,
            inv_rot_anc,
        }
    }

    fn data(&self, q: usize, i: usize) -> usize {
        q * self.block + i
    }

    fn ancilla(&self, q: usize, a: usize) -> usize {
        q * self.block + self.layout.num_data() + a
    }

    /// Physical data index playing virtual data `v` at orientation `o`.
    fn phys_data(&self, v: usize, rotated: bool) -> usize {
        if rotated {
            self.inv_rot_data[v]
        } else {
            v
        }
    }

    fn phys_anc(&self, v: usize, rotated: bool) -> usize {
        if rotated {
            self.inv_rot_anc[v]
        } else {
            v
        }
    }

    fn virt_anc(&self, a: usize, rotated: bool) -> usize {
        if rotated {
            self.rot_anc[a]
        } else {
            a
        }
    }

    fn movement(&mut self, q: usize) {
        for i in 0..self.layout.num_data() {
            let dq = self.data(q, i);
            self.circuit.push(Op::Noise1 {
                q: dq,
                probs: self.noise.p_move,
            });
        }
    }

    fn single_layer(&mut self, g: Gate1, q: usize) {
        if self.options.movement_on_single_qubit_layers {
            self.movement(q);
        }
        for i in 0..self.layout.num_data() {
            let dq = self.data(q, i);
            self.circuit.push(Op::Gate1(g, dq));
            self.circuit.push(Op::Noise1 {
                q: dq,
                probs: self.noise.p1q,
            });
        }
    }

    fn cnot_layer(&mut self, control: usize, target: usize, rotated: &[bool]) {
        self.movement(control);
        self.movement(target);
        for v in 0..self.layout.num_data() {
            let a = self.data(control, self.phys_data(v, rotated[control]));
            let b = self.data(target, self.phys_data(v, rotated[target]));
            self.circuit.push(Op::Cx(a, b));
            self.circuit.push(Op::Noise2 {
                a,
                b,
                probs: self.noise.p2q,
            });
        }
    }

    /// One stabilizer round on block `q`; returns measurement events by
    /// physical plaquette.
    fn qec_round(&mut self, q: usize, rotated: bool) -> Vec<usize> {
        let n_anc = self.layout.num_ancillas();
        let anc: Vec<usize> = (0..n_anc).map(|a| self.ancilla(q, a)).collect();
        for &aq in &anc {
            self.circuit.push(Op::Reset {
                q: aq,
                flip_p: self.noise.p_reset,
            });
        }
        self.ancilla_hadamards(&anc);
        for step in 0..4 {
            for a in 0..n_anc {
                let plaquette = &self.layout.ancillas[a];
                let basis = if rotated { plaquette.basis.flipped() } else { plaquette.basis };
                let order = match basis {
                    Basis::Z => self.options.z_order,
                    Basis::X => self.options.x_order,
                };
                let Some(i) = plaquette.corners[order[step]] else { continue };
                let dq = self.data(q, i);
                self.circuit.push(match basis {
                    Basis::Z => Op::Cz(dq, anc[a]),
                    Basis::X => Op::Cx(anc[a], dq),
                });
                self.circuit.push(Op::Noise2 {
                    a: dq,
                    b: anc[a],
                    probs: self.noise.p2q,
                });
            }
        }
        self.ancilla_hadamards(&anc);
        anc.iter()
            .map(|&aq| {
                self.circuit
                    .push(Op::Measure {
                        q: aq,
                        flip_p: self.noise.p_meas,
                    })
                    .expect("measure yields an event")
            })
            .collect()
    }

    fn ancilla_hadamards(&mut self, anc: &[usize]) {
        for &aq in anc {
            self.circuit.push(Op::Gate1(Gate1::H, aq));
            self.circuit.push(Op::Noise1 {
                q: aq,
                probs: self.noise.p1q,
            });
        }
    }
}

/// Virtual plaquettes at round `t - 1` whose product flows into virtual
/// plaquette `k` of qubit `q` through the layer gate. Entries are `(qubit, k')`.
fn flow(
    layout: &CodeLayout,
    low: &Lowering<'_>,
    gate: &LogicalGate,
    q: usize,
    k: usize,
    rotated_before: &[bool],
    rotated_after: &[bool],
) -> Vec<(usize, usize)> {
    match *gate {
        LogicalGate::Single(Gate1::H, _) => {
            let a = low.phys_anc(k, rotated_after[q]);
            vec![(q, low.virt_anc(a, rotated_before[q]))]
        }
        LogicalGate::Single(..) => vec![(q, k)],
        LogicalGate::Cnot { control, target } => match (layout.ancillas[k].basis, q == target) {
            (Basis::Z, true) => vec![(target, k), (control, k)],
            (Basis::X, false) => vec![(control, k), (target, k)],
            _ => vec![(q, k)],
        },
    }
}

fn lower(
    logical: &LogicalCircuit,
    layout: &CodeLayout,
    noise: &NoiseModel,
    options: &CompileOptions,
) -> Result<(PhysicalCircuit, DetectorMap)> {
    noise.validate()?;
    let nq = logical.num_qubits;
    let depth = logical.depth();
    if depth == 0 {
        return Err(Error::InvalidCircuit("circuit has no layers".into()));
    }
    let n_stab = layout.num_ancillas();
    let mut low = Lowering::new(layout, noise, options, nq);
    let mut rotated = vec![false; nq];
    // meas[q][t][physical plaquette]
    let mut meas: Vec<Vec<Vec<usize>>> = vec![Vec::with_capacity(depth); nq];
    let mut rounds = vec![vec![vec![Vec::new(); n_stab]; depth]; nq];
    let mut tags = vec![Vec::with_capacity(depth); nq];

    for (t, layer) in logical.layers.iter().enumerate() {
        let before = rotated.clone();
        let mut gate_of = vec![None; nq];
        for gate in layer {
            match *gate {
                LogicalGate::Single(g, q) => {
                    low.single_layer(g, q);
                    if g == Gate1::H {
                        rotated[q] = !rotated[q];
                    }
                    tags[q].push(GateTag::Single(g));
                    gate_of[q] = Some(*gate);
                }
                LogicalGate::Cnot { control, target } => {
                    if control == target {
                        return Err(Error::SelfCnot(control));
                    }
                    low.cnot_layer(control, target, &rotated);
                    tags[control].push(GateTag::Control { partner: target });
                    tags[target].push(GateTag::Target { partner: control });
                    gate_of[control] = Some(*gate);
                    gate_of[target] = Some(*gate);
                }
            }
        }
        for q in 0..nq {
            let events = low.qec_round(q, rotated[q]);
            meas[q].push(events);
        }
        for q in 0..nq {
            let gate = gate_of[q].ok_or_else(|| Error::InvalidCircuit(format!("qubit {q} missing from layer {t}")))?;
            for k in 0..n_stab {
                let mut parity = vec![meas[q][t][low.phys_anc(k, rotated[q])]];
                let sources = flow(layout, &low, &gate, q, k, &before, &rotated);
                if t == 0 {
                    // Only Z-type stabilizers of the initial |0..0> have a known value.
                    let known = sources.iter().all(|&(_, k0)| layout.ancillas[k0].basis == Basis::Z);
                    if !known {
                        parity.clear();
                    }
                } else {
                    for (q0, k0) in sources {
                        parity.push(meas[q0][t - 1][low.phys_anc(k0, before[q0])]);
                    }
                }
                parity.sort_unstable();
                rounds[q][t][k] = parity;
            }
        }
    }

    let n_data = layout.num_data();
    let mut final_events = Vec::with_capacity(nq);
    for q in 0..nq {
        let events: Vec<usize> = (0..n_data)
            .map(|i| {
                let dq = low.data(q, i);
                low.circuit
                    .push(Op::Measure {
                        q: dq,
                        flip_p: noise.p_meas,
                    })
                    .expect("measure yields an event")
            })
            .collect();
        final_events.push(events);
    }

    let half = layout.half();
    let mut finals = Vec::with_capacity(nq);
    let mut observables = Vec::with_capacity(nq);
    for q in 0..nq {
        let per_q: Vec<Vec<usize>> = (0..half)
            .map(|k| {
                debug_assert_eq!(layout.ancillas[k].basis, Basis::Z);
                let a = low.phys_anc(k, rotated[q]);
                let mut parity: Vec<usize> = layout.ancillas[a].support().map(|i| final_events[q][i]).collect();
                parity.push(meas[q][depth - 1][a]);
                parity.sort_unstable();
                parity
            })
            .collect();
        finals.push(per_q);
        let mut obs: Vec<usize> = layout
            .logical_z_support
            .iter()
            .map(|&v| final_events[q][low.phys_data(v, rotated[q])])
            .collect();
        obs.sort_unstable();
        observables.push(obs);
    }

    let mut circuit = low.circuit;
    circuit.final_data_events = final_events;
    let dmap = DetectorMap {
        d: layout.d,
        num_logical: nq,
        depth,
        rounds,
        finals,
        observables,
        tags,
        num_measurements: circuit.num_measurements,
    };
    Ok((circuit, dmap))
}

/// Lowers a logical circuit to a noisy physical circuit.
pub fn compile(logical: &LogicalCircuit, layout: &CodeLayout, noise: &NoiseModel) -> Result<PhysicalCircuit> {
    compile_with(logical, layout, noise, &CompileOptions::default()).map(|(c, _)| c)
}

/// Detector definitions for the circuit [`compile`] produces.
pub fn build_detector_map(logical: &LogicalCircuit, layout: &CodeLayout) -> Result<DetectorMap> {
    compile_with(logical, layout, &NoiseModel::noiseless(), &CompileOptions::default()).map(|(_, m)| m)
}

pub fn compile_with(
    logical: &LogicalCircuit,
    layout: &CodeLayout,
    noise: &NoiseModel,
    options: &CompileOptions,
) -> Result<(PhysicalCircuit, DetectorMap)> {
    lower(logical, layout, noise, options)
}
