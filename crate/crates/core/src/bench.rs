//! Accuracy and wall-time benchmarks.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use crate::compiler::{compile_with, CompileOptions};
use crate::dataset::{build_trajectory, SyndromeTrajectory};
use crate::dem::{extract_dem, DetectorErrorModel, MleDecoder};
use crate::error::{Error, Result};
use crate::geometry::CodeLayout;
use crate::logical::{sample_mirror, CircuitType, LogicalCircuit};
use crate::model::{decode_trajectory, ModelParams};
use crate::sim::{frame_sample, shot_rng, NoiseModel};

pub const CSV_HEADER: &str = "decoder,d,type,depth,shots,accuracy,stderr,mean_walltime_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    Mccd,
    Mle,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::Mccd => "mccd",
            DecoderKind::Mle => "mle",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub decoder: DecoderKind,
    pub d: usize,
    pub circuit_type: CircuitType,
    pub depth: usize,
    /// Trajectories decoded; accuracy is over `shots * Q` qubit predictions.
    pub shots: usize,
    pub accuracy: f64,
    pub stderr: f64,
    pub mean_walltime_s: f64,
    /// Fraction of qubit labels equal to the more common label.
    pub majority_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Wall time against depth; absent with fewer than two depths.
    pub fit: Option<LinearFit>,
}

pub fn standard_error(accuracy: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (accuracy * (1.0 - accuracy) / n as f64).sqrt()
}

/// Ordinary least squares of `y` on `x`. `None` with fewer than two distinct
/// `x` values.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.9}",
                r.decoder, r.d, r.circuit_type, r.depth, r.shots, r.accuracy, r.stderr, r.mean_walltime_s
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<8}{:>4}{:>6}{:>7}{:>9}{:>11}{:>10}{:>11}{:>14}\n",
            "decoder", "d", "type", "depth", "shots", "accuracy", "stderr", "majority", "walltime_s"
        );
        for r in &self.rows {
            writeln!(
                out,
                "{:<8}{:>4}{:>6}{:>7}{:>9}{:>11.4}{:>10.4}{:>11.4}{:>14.3e}",
                r.decoder.to_string(), r.d, r.circuit_type.to_string(), r.depth, r.shots, r.accuracy, r.stderr, r.majority_rate, r.mean_walltime_s
            )
            .unwrap();
        }
        if let Some(fit) = &self.fit {
            writeln!(out, "fit: walltime = {:.3e} * depth + {:.3e}, R^2 = {:.4}", fit.slope, fit.intercept, fit.r2).unwrap();
        }
        out
    }
}

/// Decoders accepted by the harness.
pub enum Decoder<'a> {
    Mccd(&'a ModelParams),
    /// Bounded-weight MLE on the exact model of each sampled circuit.
    Mle { noise: &'a NoiseModel, max_weight: usize },
}

impl Decoder<'_> {
    pub fn kind(&self) -> DecoderKind {
        match self {
            Decoder::Mccd(_) => DecoderKind::Mccd,
            Decoder::Mle { .. } => DecoderKind::Mle,
        }
    }
}

/// A sampled evaluation shot: the circuit and its syndrome trajectory.
pub struct Shot {
    pub circuit: LogicalCircuit,
    pub trajectory: SyndromeTrajectory,
}

/// The same shots for every decoder: shot `i` at depth `depth` uses stream
/// `(depth << 32) | i` of `seed`.
pub fn sample_shots(
    layout: &CodeLayout,
    noise: &NoiseModel,
    circuit_type: CircuitType,
    num_logical: usize,
    depth: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<Shot>> {
    (0..shots)
        .map(|i| {
            let mut rng = shot_rng(seed, ((depth as u64) << 32) | i as u64);
            let circuit = sample_mirror(circuit_type, num_logical, depth, &mut rng)?;
            let (phys, dmap) = compile_with(&circuit, layout, noise, &CompileOptions::default())?;
            let trajectory = build_trajectory(&frame_sample(&phys, &mut rng), &dmap)?;
            Ok(Shot { circuit, trajectory })
        })
        .collect()
}

/// Fraction of labels equal to the majority label.
pub fn majority_rate(shots: &[Shot]) -> f64 {
    let labels: Vec<bool> = shots.iter().flat_map(|s| s.trajectory.labels.iter().copied()).collect();
    if labels.is_empty() {
        return 1.0;
    }
    let ones = labels.iter().filter(|&&b| b).count();
    ones.max(labels.len() - ones) as f64 / labels.len() as f64
}

fn check_model(model: &ModelParams, d: usize) -> Result<()> {
    if model.d != d {
        return Err(Error::Config(format!("checkpoint is for d={}, benchmark asks d={d}", model.d)));
    }
    Ok(())
}

/// Per-qubit predictions for every shot, and the total decode time in
/// seconds. MLE decoders build the circuit's model outside the timed region.
fn decode_all(decoder: &Decoder, layout: &CodeLayout, shots: &[Shot]) -> Result<(Vec<Vec<bool>>, f64)> {
    let mut preds = Vec::with_capacity(shots.len());
    let mut secs = 0.0;
    match decoder {
        Decoder::Mccd(model) => {
            for s in shots {
                let t0 = Instant::now();
                let p = decode_trajectory(model, &s.trajectory)?;
                secs += t0.elapsed().as_secs_f64();
                preds.push(p.into_iter().map(|p| p.flip).collect());
            }
        }
        Decoder::Mle { noise, max_weight } => {
            let mut cache: HashMap<String, (DetectorErrorModel, crate::compiler::DetectorMap)> = HashMap::new();
            for s in shots {
                let key = s.circuit.to_text();
                if !cache.contains_key(&key) {
                    let (phys, dmap) = compile_with(&s.circuit, layout, noise, &CompileOptions::default())?;
                    cache.insert(key.clone(), (extract_dem(&phys, &dmap), dmap));
                }
                let (dem, _) = &cache[&key];
                let observed = trajectory_detectors(&s.trajectory);
                let t0 = Instant::now();
                let r = MleDecoder::new(dem, *max_weight)?.decode(&observed);
                secs += t0.elapsed().as_secs_f64();
                preds.push((0..s.trajectory.num_logical).map(|q| r.observables.get(q)).collect());
            }
        }
    }
    Ok((preds, secs))
}

/// Flat detector vector of a trajectory, in detector-map order.
pub fn trajectory_detectors(traj: &SyndromeTrajectory) -> crate::bits::Bits {
    let n = traj.stabilizers();
    let half = n / 2;
    let q = traj.num_logical;
    let mut out = crate::bits::Bits::zeros(q * (traj.depth * n + half));
    let mut i = 0;
    for per_q in &traj.syndromes {
        for s in per_q {
            for k in 0..n {
                out.set(i, s.get(k));
                i += 1;
            }
        }
    }
    for f in &traj.finals {
        for k in 0..half {
            out.set(i, f.get(k));
            i += 1;
        }
    }
    out
}

/// Samples fresh shots per depth, decodes them and scores per-qubit
/// correctness against the mirror labels.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_accuracy(
    decoder: &Decoder,
    noise: &NoiseModel,
    d: usize,
    circuit_type: CircuitType,
    num_logical: usize,
    depths: &[usize],
    shots: usize,
    seed: u64,
) -> Result<BenchReport> {
    if let Decoder::Mccd(m) = decoder {
        check_model(m, d)?;
    }
    let layout = CodeLayout::new(d)?;
    let mut rows = Vec::with_capacity(depths.len());
    for &depth in depths {
        let sampled = sample_shots(&layout, noise, circuit_type, num_logical, depth, shots, seed)?;
        rows.push(score(decoder, &layout, &sampled, d, circuit_type, depth)?);
    }
    Ok(BenchReport { rows, fit: None })
}

/// Scores a decoder on pre-sampled shots.
pub fn score(
    decoder: &Decoder,
    layout: &CodeLayout,
    shots: &[Shot],
    d: usize,
    circuit_type: CircuitType,
    depth: usize,
) -> Result<BenchRow> {
    let (preds, secs) = decode_all(decoder, layout, shots)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for (s, p) in shots.iter().zip(&preds) {
        for (&label, &pred) in s.trajectory.labels.iter().zip(p) {
            correct += (label == pred) as usize;
            total += 1;
        }
    }
    let accuracy = if total == 0 { 1.0 } else { correct as f64 / total as f64 };
    Ok(BenchRow {
        decoder: decoder.kind(),
        d,
        circuit_type,
        depth,
        shots: shots.len(),
        accuracy,
        stderr: standard_error(accuracy, total),
        mean_walltime_s: if shots.is_empty() { 0.0 } else { secs / shots.len() as f64 },
        majority_rate: majority_rate(shots),
    })
}

/// Decode-only wall time per trajectory for each depth, with a linear fit.
/// Accuracy columns come from a separate untimed pass.
#[allow(clippy::too_many_arguments)]
pub fn benchmark_walltime(
    model: &ModelParams,
    noise: &NoiseModel,
    d: usize,
    circuit_type: CircuitType,
    num_logical: usize,
    depths: &[usize],
    shots: usize,
    seed: u64,
) -> Result<BenchReport> {
    check_model(model, d)?;
    let layout = CodeLayout::new(d)?;
    let sampled = depths
        .iter()
        .map(|&depth| sample_shots(&layout, noise, circuit_type, num_logical, depth, shots, seed))
        .collect::<Result<Vec<_>>>()?;
    let decoder = Decoder::Mccd(model);
    let mut rows = depths
        .iter()
        .zip(&sampled)
        .map(|(&depth, s)| score(&decoder, &layout, s, d, circuit_type, depth))
        .collect::<Result<Vec<_>>>()?;
    // Round-robin over depths so slow drifts in machine load hit every depth alike.
    let mut secs = vec![0.0; depths.len()];
    for i in 0..shots {
        for (j, s) in sampled.iter().enumerate() {
            let t0 = Instant::now();
            std::hint::black_box(decode_trajectory(model, &s[i].trajectory)?);
            secs[j] += t0.elapsed().as_secs_f64();
        }
    }
    for (row, t) in rows.iter_mut().zip(&secs) {
        if shots > 0 {
            row.mean_walltime_s = t / shots as f64;
        }
    }
    let mut report = BenchReport { rows, fit: None };
    let x: Vec<f64> = report.rows.iter().map(|r| r.depth as f64).collect();
    let y: Vec<f64> = report.rows.iter().map(|r| r.mean_walltime_s).collect();
    report.fit = linear_fit(&x, &y);
    Ok(report)
}
