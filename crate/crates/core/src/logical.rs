//! Logical circuits over {I, X, Y, Z, H, CNOT} and mirror-circuit sampling.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::Gate1;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalGate {
    Single(Gate1, usize),
    Cnot { control: usize, target: usize },
}

impl LogicalGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            LogicalGate::Single(_, q) => vec![q],
            LogicalGate::Cnot { control, target } => vec![control, target],
        }
    }

    fn min_qubit(&self) -> usize {
        self.qubits().into_iter().min().unwrap_or(0)
    }

    /// Every gate in the set is self-inverse.
    pub fn inverse(self) -> Self {
        self
    }
}

impl fmt::Display for LogicalGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalGate::Single(g, q) => write!(f, "{}@{q}", g.name()),
            LogicalGate::Cnot { control, target } => write!(f, "CNOT@{control},{target}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircuitType {
    /// Single-qubit gates only.
    I,
    /// Alternating single-qubit and CNOT layers.
    II,
}

impl fmt::Display for CircuitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CircuitType::I => "I",
            CircuitType::II => "II",
        })
    }
}

impl FromStr for CircuitType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" => Ok(CircuitType::I),
            "II" | "2" => Ok(CircuitType::II),
            other => Err(Error::Config(format!("unknown circuit type {other:?}"))),
        }
    }
}

pub type Layer = Vec<LogicalGate>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalCircuit {
    pub num_qubits: usize,
    pub circuit_type: CircuitType,
    /// Every layer covers each logical qubit exactly once, sorted by lowest operand.
    pub layers: Vec<Layer>,
}

impl LogicalCircuit {
    pub fn new(num_qubits: usize, circuit_type: CircuitType, mut layers: Vec<Layer>) -> Result<Self> {
        for (t, layer) in layers.iter_mut().enumerate() {
            let mut seen = vec![false; num_qubits];
            for gate in layer.iter() {
                if let LogicalGate::Cnot { control, target } = *gate {
                    if control == target {
                        return Err(Error::SelfCnot(control));
                    }
                    if circuit_type == CircuitType::I {
                        return Err(Error::InvalidCircuit(format!("CNOT in type I circuit at layer {t}")));
                    }
                }
                for q in gate.qubits() {
                    if q >= num_qubits {
                        return Err(Error::InvalidCircuit(format!("qubit {q} out of range at layer {t}")));
                    }
                    if std::mem::replace(&mut seen[q], true) {
                        return Err(Error::InvalidCircuit(format!("qubit {q} used twice at layer {t}")));
                    }
                }
            }
            if let Some(q) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidCircuit(format!("qubit {q} missing from layer {t}")));
            }
            layer.sort_by_key(LogicalGate::min_qubit);
        }
        Ok(LogicalCircuit {
            num_qubits,
            circuit_type,
            layers,
        })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn is_mirror(&self) -> bool {
        let d = self.layers.len();
        (0..d).all(|t| {
            let mut inv: Layer = self.layers[d - 1 - t].iter().map(|g| g.inverse()).collect();
            inv.sort_by_key(LogicalGate::min_qubit);
            inv == self.layers[t]
        })
    }

    /// Writes the text form: a `Q=.. D=.. TYPE=..` header and one layer per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("Q={} D={} TYPE={}\n", self.num_qubits, self.depth(), self.circuit_type);
        for layer in &self.layers {
            let tokens: Vec<String> = layer.iter().map(|g| g.to_string()).collect();
            out.push_str(&tokens.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let mut q = None;
        let mut depth = None;
        let mut kind = None;
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or(Error::Parse {
                line: 1,
                msg: format!("malformed header field {field:?}"),
            })?;
            let bad = |_| Error::Parse {
                line: 1,
                msg: format!("bad value in {field:?}"),
            };
            match key {
                "Q" => q = Some(value.parse::<usize>().map_err(bad)?),
                "D" => depth = Some(value.parse::<usize>().map_err(bad)?),
                "TYPE" => kind = Some(value.parse::<CircuitType>().map_err(|e| Error::Parse {
                    line: 1,
                    msg: e.to_string(),
                })?),
                _ => {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unknown header key {key:?}"),
                    })
                }
            }
        }
        let (Some(q), Some(depth), Some(kind)) = (q, depth, kind) else {
            return Err(Error::Parse {
                line: 1,
                msg: "header needs Q, D and TYPE".into(),
            });
        };
        let mut layers = Vec::with_capacity(depth);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let layer = line
                .split_whitespace()
                .map(|tok| parse_gate(tok).map_err(|msg| Error::Parse { line: i + 1, msg }))
                .collect::<Result<Layer>>()?;
            layers.push(layer);
        }
        if layers.len() != depth {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header says D={depth} but found {} layers", layers.len()),
            });
        }
        LogicalCircuit::new(q, kind, layers)
    }
}

fn parse_gate(tok: &str) -> std::result::Result<LogicalGate, String> {
    let (name, args) = tok.split_once('@').ok_or_else(|| format!("token {tok:?} lacks '@'"))?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad qubit index in {tok:?}"));
    let single = |g| Ok(LogicalGate::Single(g, num(args)?));
    match name {
        "I" => single(Gate1::I),
        "X" => single(Gate1::X),
        "Y" => single(Gate1::Y),
        "Z" => single(Gate1::Z),
        "H" => single(Gate1::H),
        "CNOT" => {
            let (c, t) = args.split_once(',').ok_or_else(|| format!("CNOT needs two operands in {tok:?}"))?;
            Ok(LogicalGate::Cnot {
                control: num(c)?,
                target: num(t)?,
            })
        }
        other => Err(format!("unknown gate kind {other:?}")),
    }
}

fn random_single_layer<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Layer {
    (0..q)
        .map(|i| LogicalGate::Single(Gate1::ALL[rng.random_range(0..Gate1::ALL.len())], i))
        .collect()
}

fn random_cnot_layer<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Layer {
    let mut order: Vec<usize> = (0..q).collect();
    order.shuffle(rng);
    order
        .chunks_exact(2)
        .map(|pair| LogicalGate::Cnot {
            control: pair[0],
            target: pair[1],
        })
        .collect()
}

/// Samples a depth-`depth` mirror circuit: a random forward half followed by
/// its layer-wise reverse.
pub fn sample_mirror<R: Rng + ?Sized>(
    circuit_type: CircuitType,
    num_qubits: usize,
    depth: usize,
    rng: &mut R,
) -> Result<LogicalCircuit> {
    if num_qubits == 0 {
        return Err(Error::InvalidMirror("need at least one logical qubit".into()));
    }
    if depth == 0 || depth % 2 != 0 {
        return Err(Error::InvalidMirror(format!("depth {depth} must be positive and even")));
    }
    let half = depth / 2;
    let forward: Vec<Layer> = match circuit_type {
        CircuitType::I => (0..half).map(|_| random_single_layer(num_qubits, rng)).collect(),
        CircuitType::II => {
            if depth % 4 != 0 {
                return Err(Error::InvalidMirror(format!("type II depth {depth} must be divisible by 4")));
            }
            if num_qubits < 2 || num_qubits % 2 != 0 {
                return Err(Error::InvalidMirror(format!(
                    "type II needs an even number of logical qubits, got {num_qubits}"
                )));
            }
            (0..half)
                .map(|t| {
                    if t % 2 == 0 {
                        random_single_layer(num_qubits, rng)
                    } else {
                        random_cnot_layer(num_qubits, rng)
                    }
                })
                .collect()
        }
    };
    let backward = forward
        .iter()
        .rev()
        .map(|layer| layer.iter().map(|g| g.inverse()).collect::<Layer>());
    let layers = forward.iter().cloned().chain(backward).collect();
    LogicalCircuit::new(num_qubits, circuit_type, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(g: Gate1) -> Layer {
        vec![LogicalGate::Single(g, 0)]
    }

    #[test]
    fn self_inverse_mirror_of_forward_half() {
        let fwd = [Gate1::X, Gate1::H, Gate1::Z];
        let layers: Vec<Layer> = fwd.iter().chain(fwd.iter().rev()).map(|&g| single(g)).collect();
        let c = LogicalCircuit::new(1, CircuitType::I, layers).unwrap();
        assert_eq!(c.depth(), 6);
        assert!(c.is_mirror());
        assert_eq!(c.to_text(), "Q=1 D=6 TYPE=I\nX@0\nH@0\nZ@0\nZ@0\nH@0\nX@0\n");
    }

    #[test]
    fn type_two_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = sample_mirror(CircuitType::II, 2, 4, &mut rng).unwrap();
        assert!(c.layers[0].iter().all(|g| matches!(g, LogicalGate::Single(..))));
        assert!(matches!(c.layers[1][0], LogicalGate::Cnot { .. }));
        assert_eq!(c.layers[1], c.layers[2]);
        assert_eq!(c.layers[0], c.layers[3]);
    }

    #[test]
    fn rejects_bad_requests() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_mirror(CircuitType::I, 1, 3, &mut rng).is_err());
        assert!(sample_mirror(CircuitType::II, 2, 6, &mut rng).is_err());
        assert!(sample_mirror(CircuitType::II, 3, 8, &mut rng).is_err());
        let self_cnot = vec![vec![LogicalGate::Cnot { control: 1, target: 1 }, LogicalGate::Single(Gate1::I, 0)]];
        assert!(matches!(
            LogicalCircuit::new(2, CircuitType::II, self_cnot),
            Err(Error::SelfCnot(1))
        ));
        assert!(LogicalCircuit::from_text("Q=1 D=1 TYPE=I\nT@0\n").is_err());
        assert!(LogicalCircuit::from_text("Q=1 D=2 TYPE=I\nX@0\n").is_err());
    }

    #[test]
    fn type_one_gates_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let c = sample_mirror(CircuitType::I, 1, 2, &mut rng).unwrap();
            let LogicalGate::Single(g, _) = c.layers[0][0] else { unreachable!() };
            counts[Gate1::ALL.iter().position(|&x| x == g).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.2).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn text_round_trip(seed in any::<u64>(), quarter in 1usize..6, q2 in 1usize..3, two in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (kind, q) = if two { (CircuitType::II, 2 * q2) } else { (CircuitType::I, q2) };
            let c = sample_mirror(kind, q, 4 * quarter, &mut rng).unwrap();
            prop_assert!(c.is_mirror());
            let text = c.to_text();
            let back = LogicalCircuit::from_text(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
