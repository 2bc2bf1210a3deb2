//! Detector error models and a bounded most-likely-error decoder.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::bits::Bits;
use crate::circuit::{Injection, Op, PhysicalCircuit};
use crate::compiler::DetectorMap;
use crate::error::{Error, Result};
use crate::sim::noise::{one_qubit_component, two_qubit_component};
use crate::sim::{propagate_gate, Pauli, PauliFrame, ShotRecord};

/// One independent fault mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct Fault {
    pub p: f64,
    /// Sorted flat detector indices.
    pub detectors: Vec<usize>,
    /// Sorted logical qubit indices whose observable flips.
    pub observables: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    /// Sorted by `(detectors, observables)`, no duplicates.
    pub faults: Vec<Fault>,
}

/// Detector and observable values of one shot.
pub fn shot_detectors(dmap: &DetectorMap, shot: &ShotRecord) -> (Bits, Bits) {
    let events = dmap.detector_events();
    let mut det = Bits::zeros(events.len());
    for (i, ev) in events.iter().enumerate() {
        det.set(i, shot.meas_flips.parity(ev));
    }
    let mut obs = Bits::zeros(dmap.observables.len());
    for (q, ev) in dmap.observables.iter().enumerate() {
        obs.set(q, shot.meas_flips.parity(ev));
    }
    (det, obs)
}

struct Signatures {
    /// Detectors containing each measurement event.
    det_of_event: Vec<Vec<usize>>,
    obs_of_event: Vec<Vec<usize>>,
    num_detectors: usize,
    num_observables: usize,
}

impl Signatures {
    fn new(circuit: &PhysicalCircuit, dmap: &DetectorMap) -> Self {
        let mut det_of_event = vec![Vec::new(); circuit.num_measurements];
        let events = dmap.detector_events();
        for (i, ev) in events.iter().enumerate() {
            for &e in ev.iter() {
                det_of_event[e].push(i);
            }
        }
        let mut obs_of_event = vec![Vec::new(); circuit.num_measurements];
        for (q, ev) in dmap.observables.iter().enumerate() {
            for &e in ev {
                obs_of_event[e].push(q);
            }
        }
        Signatures {
            det_of_event,
            obs_of_event,
            num_detectors: events.len(),
            num_observables: dmap.observables.len(),
        }
    }

    fn of_events(&self, flipped: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut det = Bits::zeros(self.num_detectors);
        let mut obs = Bits::zeros(self.num_observables);
        for &e in flipped {
            for &i in &self.det_of_event[e] {
                det.flip(i);
            }
            for &q in &self.obs_of_event[e] {
                obs.flip(q);
            }
        }
        (det.ones().collect(), obs.ones().collect())
    }
}

/// Measurement events flipped by `paulis` applied right after op `start`.
fn propagate_from(circuit: &PhysicalCircuit, event_of_op: &[usize], start: usize, paulis: &[(usize, Pauli)]) -> Vec<usize> {
    let mut frame = PauliFrame::new(circuit.num_qubits);
    for &(q, p) in paulis {
        frame.xor_pauli(q, p);
    }
    let mut flipped = Vec::new();
    for (idx, op) in circuit.ops.iter().enumerate().skip(start + 1) {
        if frame.is_identity() {
            break;
        }
        if propagate_gate(&mut frame, op) == Some(true) {
            flipped.push(event_of_op[idx]);
        }
    }
    flipped
}

/// Probability that exactly one of two independent events fires.
pub fn xor_probability(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// Builds the detector error model by propagating every nonzero Pauli
/// component of every noise site to the end of the circuit.
pub fn extract_dem(circuit: &PhysicalCircuit, dmap: &DetectorMap) -> DetectorErrorModel {
    let sig = Signatures::new(circuit, dmap);
    let mut event_of_op = vec![usize::MAX; circuit.ops.len()];
    let mut e = 0;
    for (idx, op) in circuit.ops.iter().enumerate() {
        if matches!(op, Op::Measure { .. }) {
            event_of_op[idx] = e;
            e += 1;
        }
    }

    let mut raw: Vec<(f64, Vec<usize>)> = Vec::new();
    for (idx, op) in circuit.ops.iter().enumerate() {
        match *op {
            Op::Noise1 { q, probs } => {
                for (k, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        raw.push((p, propagate_from(circuit, &event_of_op, idx, &[(q, one_qubit_component(k))])));
                    }
                }
            }
            Op::Noise2 { a, b, probs } => {
                for (k, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        let (pa, pb) = two_qubit_component(k);
                        raw.push((p, propagate_from(circuit, &event_of_op, idx, &[(a, pa), (b, pb)])));
                    }
                }
            }
            Op::Reset { q, flip_p } if flip_p > 0.0 => {
                raw.push((flip_p, propagate_from(circuit, &event_of_op, idx, &[(q, Pauli::X)])));
            }
            Op::Measure { flip_p, .. } if flip_p > 0.0 => {
                raw.push((flip_p, vec![event_of_op[idx]]));
            }
            _ => {}
        }
    }

    let mut merged: HashMap<(Vec<usize>, Vec<usize>), f64> = HashMap::new();
    let mut order = Vec::new();
    for (p, events) in raw {
        let key = sig.of_events(&events);
        if key.0.is_empty() && key.1.is_empty() {
            continue;
        }
        match merged.get_mut(&key) {
            Some(q) => *q = xor_probability(*q, p),
            None => {
                order.push(key.clone());
                merged.insert(key, p);
            }
        }
    }
    order.sort();
    let faults = order
        .into_iter()
        .map(|key| {
            let p = merged[&key];
            Fault {
                p,
                detectors: key.0,
                observables: key.1,
            }
        })
        .collect();
    DetectorErrorModel {
        num_detectors: sig.num_detectors,
        num_observables: sig.num_observables,
        faults,
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

impl DetectorErrorModel {
    /// One fault per line, `p Δ:{i,...} Λ:{j,...}`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.faults {
            writeln!(out, "{} Δ:{{{}}} Λ:{{{}}}", f.p, join(&f.detectors), join(&f.observables)).unwrap();
        }
        out
    }

    /// Fires every fault independently and XORs the signatures.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Bits, Bits) {
        let mut det = Bits::zeros(self.num_detectors);
        let mut obs = Bits::zeros(self.num_observables);
        for f in &self.faults {
            if rng.random::<f64>() < f.p {
                for &i in &f.detectors {
                    det.flip(i);
                }
                for &q in &f.observables {
                    obs.flip(q);
                }
            }
        }
        (det, obs)
    }
}

/// Default enumeration guard, `C(F, max_weight)` must not exceed it.
pub const MLE_GUARD: u128 = 10_000_000;

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleResult {
    /// Observable flips of the chosen fault set.
    pub observables: Bits,
    /// False when no subset of size `<= max_weight` explains the syndrome;
    /// the prediction is then all zeros.
    pub found: bool,
    pub weight: usize,
    /// `sum log(p / (1 - p))` over the chosen faults.
    pub log_odds: f64,
}

/// Bounded-weight most-likely-error decoder over a fixed model.
pub struct MleDecoder<'a> {
    dem: &'a DetectorErrorModel,
    max_weight: usize,
    signatures: Vec<Bits>,
    obs: Vec<Bits>,
    log_odds: Vec<f64>,
    by_signature: HashMap<Bits, Vec<usize>>,
}

impl<'a> MleDecoder<'a> {
    pub fn new(dem: &'a DetectorErrorModel, max_weight: usize) -> Result<Self> {
        Self::with_guard(dem, max_weight, MLE_GUARD)
    }

    pub fn with_guard(dem: &'a DetectorErrorModel, max_weight: usize, guard: u128) -> Result<Self> {
        if max_weight == 0 {
            return Err(Error::Config("max_weight must be at least 1".into()));
        }
        let size = binomial(dem.faults.len(), max_weight);
        if size > guard {
            return Err(Error::InstanceTooLarge(size));
        }
        let mut signatures = Vec::with_capacity(dem.faults.len());
        let mut obs = Vec::with_capacity(dem.faults.len());
        let mut by_signature: HashMap<Bits, Vec<usize>> = HashMap::new();
        for (k, f) in dem.faults.iter().enumerate() {
            let mut s = Bits::zeros(dem.num_detectors);
            f.detectors.iter().for_each(|&i| s.set(i, true));
            let mut o = Bits::zeros(dem.num_observables);
            f.observables.iter().for_each(|&q| o.set(q, true));
            by_signature.entry(s.clone()).or_default().push(k);
            signatures.push(s);
            obs.push(o);
        }
        Ok(MleDecoder {
            dem,
            max_weight,
            signatures,
            obs,
            log_odds: dem.faults.iter().map(|f| (f.p / (1.0 - f.p)).ln()).collect(),
            by_signature,
        })
    }

    /// Most probable subset with `|S| <= max_weight` whose detector XOR equals
    /// `observed`. Subsets of size `w` are searched by enumerating the first
    /// `w - 1` faults and looking the last one up by its signature.
    pub fn decode(&self, observed: &Bits) -> MleResult {
        let mut best = MleResult {
            observables: Bits::zeros(self.dem.num_observables),
            found: false,
            weight: 0,
            log_odds: f64::NEG_INFINITY,
        };
        if !observed.any() {
            best.found = true;
            best.log_odds = 0.0;
            return best;
        }
        let mut chosen = Vec::with_capacity(self.max_weight);
        self.search(observed.clone(), 0, 0.0, &mut chosen, &mut best);
        best
    }

    fn search(&self, residual: Bits, start: usize, score: f64, chosen: &mut Vec<usize>, best: &mut MleResult) {
        if let Some(cands) = self.by_signature.get(&residual) {
            for &k in cands.iter().filter(|&&k| k >= start) {
                let s = score + self.log_odds[k];
                if s > best.log_odds {
                    let mut o = self.obs[k].clone();
                    for &j in chosen.iter() {
                        o.xor_assign(&self.obs[j]);
                    }
                    *best = MleResult {
                        observables: o,
                        found: true,
                        weight: chosen.len() + 1,
                        log_odds: s,
                    };
                }
            }
        }
        if chosen.len() + 1 >= self.max_weight {
            return;
        }
        for k in start..self.signatures.len() {
            let mut r = residual.clone();
            r.xor_assign(&self.signatures[k]);
            chosen.push(k);
            self.search(r, k + 1, score + self.log_odds[k], chosen, best);
            chosen.pop();
        }
    }
}

/// Convenience wrapper around [`MleDecoder`].
pub fn mle_decode(dem: &DetectorErrorModel, observed: &Bits, max_weight: usize) -> Result<MleResult> {
    Ok(MleDecoder::new(dem, max_weight)?.decode(observed))
}

/// Injections equivalent to one DEM fault source, for cross-checks.
pub fn injections_for(op_index: usize, paulis: &[(usize, Pauli)]) -> Vec<Injection> {
    paulis
        .iter()
        .map(|&(qubit, pauli)| Injection {
            after_op: op_index,
            qubit,
            pauli,
        })
        .collect()
}
