//! The modular recurrent decoder.
//!
//! Each logical qubit carries a hidden state. At every layer its new
//! syndrome is fed, together with that state, into the recurrent module of
//! the gate just applied; a CNOT runs one double-width module over the
//! concatenated states of control and target. A shared readout maps the final
//! state plus the final-round syndrome to a logical-flip prediction.

pub mod checkpoint;
pub mod lstm;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::circuit::Gate1;
use crate::compiler::GateTag;
use crate::dataset::SyndromeTrajectory;
use crate::error::{Error, Result};
use crate::logical::{LogicalCircuit, LogicalGate};

pub use lstm::{CellState, LayerCache, LstmLayer};

pub const LSTM_LAYERS: usize = 2;

/// A two-layer LSTM; layer 2 consumes layer 1's output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmModule {
    pub layers: [LstmLayer; LSTM_LAYERS],
}

impl LstmModule {
    pub fn zeros(in_size: usize, hidden: usize) -> Self {
        LstmModule {
            layers: [LstmLayer::zeros(in_size, hidden), LstmLayer::zeros(hidden, hidden)],
        }
    }

    pub fn random<R: Rng + ?Sized>(in_size: usize, hidden: usize, rng: &mut R) -> Self {
        LstmModule {
            layers: [LstmLayer::random(in_size, hidden, rng), LstmLayer::random(hidden, hidden, rng)],
        }
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    pub fn forward(&self, x: &DVector<f64>, state: &HiddenState) -> HiddenState {
        self.forward_cached(x, state).0
    }

    pub fn forward_cached(&self, x: &DVector<f64>, state: &HiddenState) -> (HiddenState, [LayerCache; LSTM_LAYERS]) {
        let (s0, c0) = self.layers[0].forward_cached(x, &state.layers[0]);
        let (s1, c1) = self.layers[1].forward_cached(&s0.h, &state.layers[1]);
        (HiddenState { layers: [s0, s1] }, [c0, c1])
    }

    /// Backward through both layers; returns the gradient on the previous state.
    pub fn backward(&self, caches: &[LayerCache; LSTM_LAYERS], d_out: &HiddenState, grad: &mut LstmModule) -> HiddenState {
        let (dx1, d_prev1) = self.layers[1].backward(&caches[1], &d_out.layers[1], &mut grad.layers[1]);
        let mut d_top0 = d_out.layers[0].clone();
        d_top0.h += dx1;
        let (_, d_prev0) = self.layers[0].backward(&caches[0], &d_top0, &mut grad.layers[0]);
        HiddenState {
            layers: [d_prev0, d_prev1],
        }
    }
}

/// Per-layer `(c, h)` of one logical qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenState {
    pub layers: [CellState; LSTM_LAYERS],
}

impl HiddenState {
    pub fn zeros(hidden: usize) -> Self {
        HiddenState {
            layers: [CellState::zeros(hidden), CellState::zeros(hidden)],
        }
    }

    /// Output of the top layer.
    pub fn output(&self) -> &DVector<f64> {
        &self.layers[LSTM_LAYERS - 1].h
    }

    /// Control first, per layer.
    pub fn concat(control: &HiddenState, target: &HiddenState) -> HiddenState {
        HiddenState {
            layers: [
                CellState::concat(&control.layers[0], &target.layers[0]),
                CellState::concat(&control.layers[1], &target.layers[1]),
            ],
        }
    }

    pub fn split(&self) -> (HiddenState, HiddenState) {
        let (a0, b0) = self.layers[0].split();
        let (a1, b1) = self.layers[1].split();
        (HiddenState { layers: [a0, a1] }, HiddenState { layers: [b0, b1] })
    }

    pub fn add_assign(&mut self, other: &HiddenState) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add_assign(b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.c.iter().chain(l.h.iter()).all(|v| v.is_finite()))
    }
}

/// Two affine maps with a ReLU between: `n -> n -> 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

pub struct ReadoutCache {
    z: DVector<f64>,
    pre: DVector<f64>,
    act: DVector<f64>,
}

impl Readout {
    pub fn zeros(n: usize) -> Self {
        Readout {
            w1: DMatrix::zeros(n, n),
            b1: DVector::zeros(n),
            w2: DMatrix::zeros(2, n),
            b2: DVector::zeros(2),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let k = 1.0 / (n as f64).sqrt();
        let mut u = || rng.random_range(-k..k);
        Readout {
            w1: DMatrix::from_fn(n, n, |_, _| u()),
            b1: DVector::from_fn(n, |_, _| u()),
            w2: DMatrix::from_fn(2, n, |_, _| u()),
            b2: DVector::from_fn(2, |_, _| u()),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w1.ncols()
    }

    pub fn forward_cached(&self, z: DVector<f64>) -> ([f64; 2], ReadoutCache) {
        let mut pre = self.b1.clone();
        pre.gemv(1.0, &self.w1, &z, 1.0);
        let act = pre.map(|v| v.max(0.0));
        let mut out = self.b2.clone();
        out.gemv(1.0, &self.w2, &act, 1.0);
        ([out[0], out[1]], ReadoutCache { z, pre, act })
    }

    /// Returns the gradient on the readout input.
    pub fn backward(&self, cache: &ReadoutCache, d_logits: [f64; 2], grad: &mut Readout) -> DVector<f64> {
        let dl = DVector::from_row_slice(&d_logits);
        grad.w2.ger(1.0, &dl, &cache.act, 1.0);
        grad.b2 += &dl;
        let mut d_act = DVector::zeros(self.w2.ncols());
        d_act.gemv_tr(1.0, &self.w2, &dl, 0.0);
        let d_pre = d_act.zip_map(&cache.pre, |g, p| if p > 0.0 { g } else { 0.0 });
        grad.w1.ger(1.0, &d_pre, &cache.z, 1.0);
        grad.b1 += &d_pre;
        let mut dz = DVector::zeros(self.w1.ncols());
        dz.gemv_tr(1.0, &self.w1, &d_pre, 0.0);
        dz
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), self.b1.as_slice(), self.w2.as_slice(), self.b2.as_slice()]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            self.b1.as_mut_slice(),
            self.w2.as_mut_slice(),
            self.b2.as_mut_slice(),
        ]
    }
}

/// Parameter groups, used for freezing during staged training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Single(Gate1),
    Two,
    Main,
    Aux,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    /// Hidden size of each single-qubit module.
    pub hidden: usize,
    /// Length of the final-round syndrome, `(d^2 - 1) / 2`.
    pub final_size: usize,
    /// Indexed in `Gate1::ALL` order.
    pub single: [LstmModule; 5],
    /// Input `2 (d^2 - 1)`, hidden `2 * hidden`.
    pub two: LstmModule,
    pub main: Readout,
    pub aux: Readout,
}

/// Default single-qubit hidden size per code distance.
pub fn default_hidden(d: usize) -> usize {
    match d {
        3 => 64,
        5 => 192,
        _ => 64,
    }
}

impl ModelParams {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        let n = d * d - 1;
        let fx = n / 2;
        ModelParams {
            d,
            hidden,
            final_size: fx,
            single: std::array::from_fn(|_| LstmModule::zeros(n, hidden)),
            two: LstmModule::zeros(2 * n, 2 * hidden),
            main: Readout::zeros(hidden + fx),
            aux: Readout::zeros(hidden),
        }
    }

    pub fn random<R: Rng + ?Sized>(d: usize, hidden: usize, rng: &mut R) -> Self {
        let n = d * d - 1;
        let fx = n / 2;
        ModelParams {
            d,
            hidden,
            final_size: fx,
            single: std::array::from_fn(|_| LstmModule::random(n, hidden, rng)),
            two: LstmModule::random(2 * n, 2 * hidden, rng),
            main: Readout::random(hidden + fx, rng),
            aux: Readout::random(hidden, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.d, self.hidden)
    }

    pub fn stabilizers(&self) -> usize {
        self.d * self.d - 1
    }

    pub fn module(&self, g: Gate1) -> &LstmModule {
        &self.single[g as usize]
    }

    /// Every tensor in checkpoint order, each tagged with its group.
    pub fn tensors(&self) -> Vec<(ParamGroup, &[f64])> {
        let mut out = Vec::new();
        for (g, m) in Gate1::ALL.iter().zip(&self.single) {
            for layer in &m.layers {
                out.extend(layer.tensors().map(|t| (ParamGroup::Single(*g), t)));
            }
        }
        for layer in &self.two.layers {
            out.extend(layer.tensors().map(|t| (ParamGroup::Two, t)));
        }
        out.extend(self.main.tensors().map(|t| (ParamGroup::Main, t)));
        out.extend(self.aux.tensors().map(|t| (ParamGroup::Aux, t)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(ParamGroup, &mut [f64])> {
        let mut out = Vec::new();
        for (g, m) in Gate1::ALL.iter().zip(self.single.iter_mut()) {
            for layer in m.layers.iter_mut() {
                out.extend(layer.tensors_mut().map(|t| (ParamGroup::Single(*g), t)));
            }
        }
        for layer in self.two.layers.iter_mut() {
            out.extend(layer.tensors_mut().map(|t| (ParamGroup::Two, t)));
        }
        out.extend(self.main.tensors_mut().map(|t| (ParamGroup::Main, t)));
        out.extend(self.aux.tensors_mut().map(|t| (ParamGroup::Aux, t)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

fn syndrome_vector(bits: &crate::bits::Bits) -> DVector<f64> {
    DVector::from_iterator(bits.len(), (0..bits.len()).map(|i| if bits.get(i) { 1.0 } else { 0.0 }))
}

/// One LSTM layer step.
pub fn lstm_cell_forward(layer: &LstmLayer, x: &DVector<f64>, state: &CellState) -> Result<CellState> {
    if x.len() != layer.in_size() || state.c.len() != layer.hidden() || state.h.len() != layer.hidden() {
        return Err(Error::Shape(format!(
            "layer expects input {} and hidden {}, got {} and ({}, {})",
            layer.in_size(),
            layer.hidden(),
            x.len(),
            state.c.len(),
            state.h.len()
        )));
    }
    Ok(layer.forward(x, state))
}

fn check_state(model: &ModelParams, s: &HiddenState) -> Result<()> {
    if s.layers.iter().any(|l| l.c.len() != model.hidden || l.h.len() != model.hidden) {
        return Err(Error::Shape(format!("hidden state must have size {}", model.hidden)));
    }
    Ok(())
}

fn check_syndrome(model: &ModelParams, s: &DVector<f64>) -> Result<()> {
    if s.len() != model.stabilizers() {
        return Err(Error::Shape(format!(
            "syndrome has length {}, expected {}",
            s.len(),
            model.stabilizers()
        )));
    }
    Ok(())
}

pub fn step_single(model: &ModelParams, gate: Gate1, syndrome: &DVector<f64>, state: &HiddenState) -> Result<HiddenState> {
    check_syndrome(model, syndrome)?;
    check_state(model, state)?;
    Ok(model.module(gate).forward(syndrome, state))
}

pub fn step_two(
    model: &ModelParams,
    control: &HiddenState,
    target: &HiddenState,
    s_control: &DVector<f64>,
    s_target: &DVector<f64>,
) -> Result<(HiddenState, HiddenState)> {
    for s in [s_control, s_target] {
        check_syndrome(model, s)?;
    }
    for s in [control, target] {
        check_state(model, s)?;
    }
    let x = lstm::concat(s_control, s_target);
    Ok(model.two.forward(&x, &HiddenState::concat(control, target)).split())
}

pub fn main_input(h: &DVector<f64>, finals: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(h.len() + finals.len(), h.iter().map(|v| v.max(0.0)).chain(finals.iter().copied()))
}

pub fn readout_main(model: &ModelParams, h_final: &DVector<f64>, finals: &DVector<f64>) -> Result<[f64; 2]> {
    if h_final.len() != model.hidden || finals.len() != model.final_size {
        return Err(Error::Shape(format!(
            "main readout expects ({}, {}), got ({}, {})",
            model.hidden,
            model.final_size,
            h_final.len(),
            finals.len()
        )));
    }
    Ok(model.main.forward_cached(main_input(h_final, finals)).0)
}

pub fn readout_aux(model: &ModelParams, h: &DVector<f64>) -> Result<[f64; 2]> {
    if h.len() != model.hidden {
        return Err(Error::Shape(format!("aux readout expects {}, got {}", model.hidden, h.len())));
    }
    Ok(model.aux.forward_cached(h.map(|v| v.max(0.0))).0)
}

/// Probability of class 1 (logical flip).
pub fn flip_probability(logits: [f64; 2]) -> f64 {
    lstm::sigmoid(logits[1] - logits[0])
}

/// One module invocation of the unrolled decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Single { t: usize, q: usize, gate: Gate1 },
    Two { t: usize, control: usize, target: usize },
}

/// Module invocations in execution order, derived from the gate tags.
pub fn routing_plan(traj: &SyndromeTrajectory) -> Result<Vec<Step>> {
    let nq = traj.num_logical;
    if traj.tags.len() != nq || traj.tags.iter().any(|t| t.len() != traj.depth) {
        return Err(Error::InconsistentCircuit("gate tags do not cover every (qubit, layer)".into()));
    }
    let mut plan = Vec::with_capacity(nq * traj.depth);
    for t in 0..traj.depth {
        for q in 0..nq {
            match traj.tags[q][t] {
                GateTag::Single(gate) => plan.push(Step::Single { t, q, gate }),
                GateTag::Control { partner } => {
                    if partner >= nq || traj.tags[partner][t] != (GateTag::Target { partner: q }) {
                        return Err(Error::InconsistentCircuit(format!("unpaired CNOT control {q} at layer {t}")));
                    }
                    plan.push(Step::Two {
                        t,
                        control: q,
                        target: partner,
                    });
                }
                GateTag::Target { partner } => {
                    if partner >= nq || traj.tags[partner][t] != (GateTag::Control { partner: q }) {
                        return Err(Error::InconsistentCircuit(format!("unpaired CNOT target {q} at layer {t}")));
                    }
                }
            }
        }
    }
    Ok(plan)
}

/// Checks that the trajectory's gate tags describe `circuit`.
pub fn check_tags(traj: &SyndromeTrajectory, circuit: &LogicalCircuit) -> Result<()> {
    if circuit.num_qubits != traj.num_logical || circuit.depth() != traj.depth {
        return Err(Error::InconsistentCircuit("trajectory and circuit differ in shape".into()));
    }
    for (t, layer) in circuit.layers.iter().enumerate() {
        for gate in layer {
            let ok = match *gate {
                LogicalGate::Single(g, q) => traj.tags[q][t] == GateTag::Single(g),
                LogicalGate::Cnot { control, target } => {
                    traj.tags[control][t] == (GateTag::Control { partner: target })
                        && traj.tags[target][t] == (GateTag::Target { partner: control })
                }
            };
            if !ok {
                return Err(Error::InconsistentCircuit(format!("gate tag mismatch at layer {t}")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub flip: bool,
    pub probability: f64,
}

/// Final hidden states after running every step of the plan.
pub fn run_recurrence(model: &ModelParams, traj: &SyndromeTrajectory) -> Result<Vec<HiddenState>> {
    if traj.d != model.d {
        return Err(Error::Shape(format!("trajectory is d={}, model is d={}", traj.d, model.d)));
    }
    let plan = routing_plan(traj)?;
    let mut states = vec![HiddenState::zeros(model.hidden); traj.num_logical];
    for step in plan {
        match step {
            Step::Single { t, q, gate } => {
                let s = syndrome_vector(&traj.syndromes[q][t]);
                states[q] = model.module(gate).forward(&s, &states[q]);
            }
            Step::Two { t, control, target } => {
                let x = lstm::concat(
                    &syndrome_vector(&traj.syndromes[control][t]),
                    &syndrome_vector(&traj.syndromes[target][t]),
                );
                let joint = HiddenState::concat(&states[control], &states[target]);
                let (c, tg) = model.two.forward(&x, &joint).split();
                states[control] = c;
                states[target] = tg;
            }
        }
    }
    Ok(states)
}

/// Per-qubit prediction from the main readout. Ties go to "no flip".
pub fn decode_trajectory(model: &ModelParams, traj: &SyndromeTrajectory) -> Result<Vec<Prediction>> {
    let states = run_recurrence(model, traj)?;
    states
        .iter()
        .zip(&traj.finals)
        .map(|(s, f)| {
            let logits = readout_main(model, s.output(), &syndrome_vector(f))?;
            Ok(Prediction {
                flip: logits[1] > logits[0],
                probability: flip_probability(logits),
            })
        })
        .collect()
}

/// As [`decode_trajectory`], after checking the tags against the circuit.
pub fn decode_with_circuit(
    model: &ModelParams,
    traj: &SyndromeTrajectory,
    circuit: &LogicalCircuit,
) -> Result<Vec<Prediction>> {
    check_tags(traj, circuit)?;
    decode_trajectory(model, traj)
}

pub(crate) fn syndrome_input(bits: &crate::bits::Bits) -> DVector<f64> {
    syndrome_vector(bits)
}
