//! Labelled syndrome trajectories and the `MCCDDAT1` binary dataset format.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "MCCDDAT1"
//! version  u32      1
//! d        u32
//! Q        u32
//! D        u32
//! count    u64
//! records  count x record
//! ```
//!
//! A record stores, in order: `Q * D` detector rows of `d^2 - 1` bits, `Q`
//! final rows of `(d^2 - 1) / 2` bits, one row of `Q` label bits, and `Q * D`
//! gate tags as `(code, partner)` byte pairs. Every bit row is padded to whole
//! bytes, least significant bit first. Tag codes: I=0 X=1 Y=2 Z=3 H=4,
//! CNOT control=5, CNOT target=6; `partner` is the other operand of a CNOT
//! and 0 otherwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::bits::Bits;
use crate::compiler::{compile_with, CompileOptions, DetectorMap, GateTag};
use crate::error::{Error, Result};
use crate::geometry::CodeLayout;
use crate::logical::{sample_mirror, CircuitType, LogicalCircuit};
use crate::sim::frame::{frame_sample, ShotRecord};
use crate::sim::noise::NoiseModel;

pub const MAGIC: &[u8; 8] = b"MCCDDAT1";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeTrajectory {
    pub d: usize,
    pub num_logical: usize,
    pub depth: usize,
    /// `syndromes[q][t]`, `d^2 - 1` detector bits in canonical order.
    pub syndromes: Vec<Vec<Bits>>,
    /// `finals[q]`, reconstructed Z-plaquette detectors.
    pub finals: Vec<Bits>,
    /// Logical-Z flip per qubit.
    pub labels: Vec<bool>,
    pub tags: Vec<Vec<GateTag>>,
}

impl SyndromeTrajectory {
    pub fn stabilizers(&self) -> usize {
        self.d * self.d - 1
    }

    pub fn is_trivial(&self) -> bool {
        self.syndromes.iter().flatten().all(|b| !b.any())
            && self.finals.iter().all(|b| !b.any())
            && self.labels.iter().all(|&l| !l)
    }

    fn same_shape(&self, other: &Self) -> bool {
        (self.d, self.num_logical, self.depth) == (other.d, other.num_logical, other.depth)
    }
}

/// Evaluates detectors and labels of one shot.
pub fn build_trajectory(shot: &ShotRecord, dmap: &DetectorMap) -> Result<SyndromeTrajectory> {
    if shot.meas_flips.len() != dmap.num_measurements {
        return Err(Error::InconsistentCircuit(format!(
            "shot has {} measurement events, detector map expects {}",
            shot.meas_flips.len(),
            dmap.num_measurements
        )));
    }
    let flips = &shot.meas_flips;
    let row = |events: &[Vec<usize>]| {
        let mut b = Bits::zeros(events.len());
        for (k, e) in events.iter().enumerate() {
            b.set(k, flips.parity(e));
        }
        b
    };
    Ok(SyndromeTrajectory {
        d: dmap.d,
        num_logical: dmap.num_logical,
        depth: dmap.depth,
        syndromes: dmap.rounds.iter().map(|per_q| per_q.iter().map(|r| row(r)).collect()).collect(),
        finals: dmap.finals.iter().map(|f| row(f)).collect(),
        labels: dmap.observables.iter().map(|o| flips.parity(o)).collect(),
        tags: dmap.tags.clone(),
    })
}

/// Samples a mirror circuit of the given shape and one noisy shot of it.
pub fn sample_trajectory<R: Rng + ?Sized>(
    layout: &CodeLayout,
    noise: &NoiseModel,
    circuit_type: CircuitType,
    num_logical: usize,
    depth: usize,
    rng: &mut R,
) -> Result<(LogicalCircuit, SyndromeTrajectory)> {
    let logical = sample_mirror(circuit_type, num_logical, depth, rng)?;
    let (phys, dmap) = compile_with(&logical, layout, noise, &CompileOptions::default())?;
    let shot = frame_sample(&phys, rng);
    let traj = build_trajectory(&shot, &dmap)?;
    Ok((logical, traj))
}

fn write_row<W: Write>(w: &mut W, bits: &Bits) -> std::io::Result<()> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for i in bits.ones() {
        bytes[i / 8] |= 1 << (i % 8);
    }
    w.write_all(&bytes)
}

fn read_row<R: Read>(r: &mut R, len: usize) -> Result<Bits> {
    let mut bytes = vec![0u8; len.div_ceil(8)];
    read_exact(r, &mut bytes)?;
    let mut bits = Bits::zeros(len);
    for i in 0..len {
        if (bytes[i / 8] >> (i % 8)) & 1 == 1 {
            bits.set(i, true);
        }
    }
    if len % 8 != 0 && bytes.last().is_some_and(|b| b >> (len % 8) != 0) {
        return Err(Error::Format("nonzero padding bits".into()));
    }
    Ok(bits)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Rebuilds the logical circuit from the gate tags of a trajectory.
pub fn circuit_from_tags(traj: &SyndromeTrajectory) -> Result<LogicalCircuit> {
    use crate::logical::LogicalGate;
    let mut layers = Vec::with_capacity(traj.depth);
    let mut two_qubit = false;
    for t in 0..traj.depth {
        let mut layer = Vec::new();
        for q in 0..traj.num_logical {
            match traj.tags.get(q).and_then(|r| r.get(t)) {
                Some(GateTag::Single(g)) => layer.push(LogicalGate::Single(*g, q)),
                Some(GateTag::Control { partner }) => {
                    two_qubit = true;
                    layer.push(LogicalGate::Cnot {
                        control: q,
                        target: *partner,
                    });
                }
                Some(GateTag::Target { partner }) => {
                    if traj.tags.get(*partner).and_then(|r| r.get(t)) != Some(&GateTag::Control { partner: q }) {
                        return Err(Error::InconsistentCircuit(format!("unpaired CNOT target {q} at layer {t}")));
                    }
                }
                None => return Err(Error::InconsistentCircuit(format!("missing tag for qubit {q} at layer {t}"))),
            }
        }
        layers.push(layer);
    }
    let ty = if two_qubit { CircuitType::II } else { CircuitType::I };
    LogicalCircuit::new(traj.num_logical, ty, layers)
}


/// Shape shared by every record of a dataset file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetHeader {
    pub d: usize,
    pub num_logical: usize,
    pub depth: usize,
}

pub fn encode_dataset<W: Write>(w: &mut W, trajectories: &[SyndromeTrajectory]) -> Result<()> {
    let header = match trajectories.first() {
        Some(t) => DatasetHeader {
            d: t.d,
            num_logical: t.num_logical,
            depth: t.depth,
        },
        None => DatasetHeader {
            d: 0,
            num_logical: 0,
            depth: 0,
        },
    };
    if let Some(first) = trajectories.first() {
        if let Some(i) = trajectories.iter().position(|t| !t.same_shape(first)) {
            return Err(Error::Format(format!("record {i} differs in (d, Q, D) from record 0")));
        }
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [header.d, header.num_logical, header.depth] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(trajectories.len() as u64).to_le_bytes())?;
    for t in trajectories {
        for row in t.syndromes.iter().flatten() {
            write_row(w, row)?;
        }
        for row in &t.finals {
            write_row(w, row)?;
        }
        write_row(w, &Bits::from_bools(&t.labels))?;
        for tag in t.tags.iter().flatten() {
            let (code, partner) = tag.code();
            w.write_all(&[code, partner])?;
        }
    }
    Ok(())
}

pub fn decode_dataset<R: Read>(r: &mut R) -> Result<(DatasetHeader, Vec<SyndromeTrajectory>)> {
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let d = read_u32(r)? as usize;
    let nq = read_u32(r)? as usize;
    let depth = read_u32(r)? as usize;
    let mut count = [0u8; 8];
    read_exact(r, &mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    let header = DatasetHeader {
        d,
        num_logical: nq,
        depth,
    };
    if count > 0 && (d < 3 || d % 2 == 0) {
        return Err(Error::Format(format!("invalid distance {d} in header")));
    }
    let n_stab = (d * d).saturating_sub(1);
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let syndromes = (0..nq)
            .map(|_| (0..depth).map(|_| read_row(r, n_stab)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let finals = (0..nq).map(|_| read_row(r, n_stab / 2)).collect::<Result<Vec<_>>>()?;
        let labels = read_row(r, nq)?.to_bools();
        let mut tags = vec![Vec::with_capacity(depth); nq];
        for per_q in tags.iter_mut() {
            for _ in 0..depth {
                let mut b = [0u8; 2];
                read_exact(r, &mut b)?;
                per_q.push(GateTag::from_code(b[0], b[1]).ok_or_else(|| Error::Format(format!("bad gate tag {}", b[0])))?);
            }
        }
        out.push(SyndromeTrajectory {
            d,
            num_logical: nq,
            depth,
            syndromes,
            finals,
            labels,
            tags,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    Ok((header, out))
}

pub fn write_dataset(path: impl AsRef<Path>, trajectories: &[SyndromeTrajectory]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_dataset(&mut w, trajectories)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<SyndromeTrajectory>> {
    let mut r = BufReader::new(File::open(path)?);
    decode_dataset(&mut r).map(|(_, t)| t)
}
