//! Loss, reverse-mode gradients, Adam and the two-stage training loop.

use std::path::PathBuf;

use nalgebra::DVector;
use rand::Rng;

use crate::circuit::Gate1;
use crate::compiler::{build_detector_map, compile, GateTag};
use crate::dataset::{build_trajectory, sample_trajectory, SyndromeTrajectory};
use crate::error::{Error, Result};
use crate::geometry::CodeLayout;
use crate::logical::{CircuitType, LogicalCircuit, LogicalGate};
use crate::model::checkpoint::{read_checkpoint, write_checkpoint};
use crate::model::lstm::{self, LayerCache};
use crate::model::{default_hidden, main_input, routing_plan, syndrome_input, HiddenState, ModelParams, ParamGroup, ReadoutCache, Step};
use crate::sim::{frame_sample, shot_rng, NoiseModel};

/// Negative log-softmax of the true class.
pub fn cross_entropy(logits: [f64; 2], label: bool) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label as usize]
}

/// Gradient of [`cross_entropy`] with respect to the logits.
pub fn cross_entropy_grad(logits: [f64; 2], label: bool) -> [f64; 2] {
    let p1 = lstm::sigmoid(logits[1] - logits[0]);
    let y = label as u8 as f64;
    [(1.0 - p1) - (1.0 - y), p1 - y]
}

pub fn loss(main: [f64; 2], aux: [f64; 2], label: bool, aux_weight: f64) -> f64 {
    cross_entropy(main, label) + aux_weight * cross_entropy(aux, label)
}

/// Batch-mean losses over every (sample, qubit) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Losses {
    pub main: f64,
    pub aux: f64,
    pub total: f64,
}

enum StepCache {
    Single {
        q: usize,
        gate: Gate1,
        caches: [LayerCache; 2],
    },
    Two {
        control: usize,
        target: usize,
        caches: [LayerCache; 2],
    },
}

fn relu_mask(h: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
    g.zip_map(h, |g, h| if h > 0.0 { g } else { 0.0 })
}

/// Forward and backward for one trajectory. Gradients are scaled by `scale`
/// and added to `grad`; returns the summed (not averaged) losses.
fn accumulate(model: &ModelParams, traj: &SyndromeTrajectory, aux_weight: f64, scale: f64, grad: &mut ModelParams) -> Result<Losses> {
    if traj.d != model.d {
        return Err(Error::Shape(format!("trajectory is d={}, model is d={}", traj.d, model.d)));
    }
    let plan = routing_plan(traj)?;
    let nq = traj.num_logical;
    let mut states = vec![HiddenState::zeros(model.hidden); nq];
    let mut tape = Vec::with_capacity(plan.len());
    for step in plan {
        match step {
            Step::Single { t, q, gate } => {
                let x = syndrome_input(&traj.syndromes[q][t]);
                let (s, caches) = model.module(gate).forward_cached(&x, &states[q]);
                states[q] = s;
                tape.push(StepCache::Single { q, gate, caches });
            }
            Step::Two { t, control, target } => {
                let x = lstm::concat(
                    &syndrome_input(&traj.syndromes[control][t]),
                    &syndrome_input(&traj.syndromes[target][t]),
                );
                let joint = HiddenState::concat(&states[control], &states[target]);
                let (s, caches) = model.two.forward_cached(&x, &joint);
                let (c, tg) = s.split();
                states[control] = c;
                states[target] = tg;
                tape.push(StepCache::Two { control, target, caches });
            }
        }
    }

    let mut losses = Losses::default();
    let mut d_states = vec![HiddenState::zeros(model.hidden); nq];
    for q in 0..nq {
        let h = states[q].output();
        let label = traj.labels[q];
        let (main, main_cache): ([f64; 2], ReadoutCache) =
            model.main.forward_cached(main_input(h, &syndrome_input(&traj.finals[q])));
        let (aux, aux_cache) = model.aux.forward_cached(h.map(|v| v.max(0.0)));
        let lm = cross_entropy(main, label);
        let la = cross_entropy(aux, label);
        losses.main += lm;
        losses.aux += la;
        losses.total += lm + aux_weight * la;

        let gm = cross_entropy_grad(main, label).map(|v| v * scale);
        let dz = model.main.backward(&main_cache, gm, &mut grad.main);
        let mut dh = relu_mask(h, &dz.rows(0, model.hidden).into_owned());
        if aux_weight != 0.0 {
            let ga = cross_entropy_grad(aux, label).map(|v| v * scale * aux_weight);
            let dza = model.aux.backward(&aux_cache, ga, &mut grad.aux);
            dh += relu_mask(h, &dza);
        }
        d_states[q].layers[1].h += dh;
    }

    for entry in tape.iter().rev() {
        match entry {
            StepCache::Single { q, gate, caches } => {
                let g = *gate as usize;
                d_states[*q] = model.single[g].backward(caches, &d_states[*q], &mut grad.single[g]);
            }
            StepCache::Two { control, target, caches } => {
                let joint = HiddenState::concat(&d_states[*control], &d_states[*target]);
                let (dc, dt) = model.two.backward(caches, &joint, &mut grad.two).split();
                d_states[*control] = dc;
                d_states[*target] = dt;
            }
        }
    }
    Ok(losses)
}

fn check_batch(batch: &[SyndromeTrajectory]) -> Result<usize> {
    let first = batch.first().ok_or_else(|| Error::Config("empty batch".into()))?;
    if batch.iter().any(|t| t.d != first.d || t.num_logical != first.num_logical) {
        return Err(Error::Shape("batch must be homogeneous in (d, Q)".into()));
    }
    Ok(batch.len() * first.num_logical)
}

/// Mean losses and their exact gradient over the batch.
pub fn backward(model: &ModelParams, batch: &[SyndromeTrajectory], aux_weight: f64) -> Result<(Losses, ModelParams)> {
    let n = check_batch(batch)? as f64;
    let mut grad = model.zeros_like();
    let mut sum = Losses::default();
    for traj in batch {
        let l = accumulate(model, traj, aux_weight, 1.0 / n, &mut grad)?;
        sum.main += l.main;
        sum.aux += l.aux;
        sum.total += l.total;
    }
    Ok((
        Losses {
            main: sum.main / n,
            aux: sum.aux / n,
            total: sum.total / n,
        },
        grad,
    ))
}

/// Mean total loss without gradients.
pub fn batch_loss(model: &ModelParams, batch: &[SyndromeTrajectory], aux_weight: f64) -> Result<Losses> {
    let n = check_batch(batch)? as f64;
    let mut sum = Losses::default();
    for traj in batch {
        let states = crate::model::run_recurrence(model, traj)?;
        for (q, s) in states.iter().enumerate() {
            let h = s.output();
            let main = model.main.forward_cached(main_input(h, &syndrome_input(&traj.finals[q]))).0;
            let aux = model.aux.forward_cached(h.map(|v| v.max(0.0))).0;
            let lm = cross_entropy(main, traj.labels[q]);
            let la = cross_entropy(aux, traj.labels[q]);
            sum.main += lm;
            sum.aux += la;
            sum.total += lm + aux_weight * la;
        }
    }
    Ok(Losses {
        main: sum.main / n,
        aux: sum.aux / n,
        total: sum.total / n,
    })
}

pub const GRAD_CHECK_FLOOR: f64 = 1e-5;

/// Largest relative error between [`backward`] and central differences,
/// over every parameter. The denominator is floored at [`GRAD_CHECK_FLOOR`]:
/// below that magnitude central differences at `eps = 1e-5` are limited by
/// f64 roundoff (about `1e-16 / eps`), so tiny coordinates are held to an
/// absolute tolerance of `floor * 1e-5` instead.
pub fn grad_check(model: &ModelParams, batch: &[SyndromeTrajectory], aux_weight: f64, eps: f64) -> Result<f64> {
    let (_, grad) = backward(model, batch, aux_weight)?;
    let analytic: Vec<f64> = grad.tensors().into_iter().flat_map(|(_, t)| t.iter().copied()).collect();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut idx = 0;
    let sizes: Vec<usize> = model.tensors().iter().map(|(_, t)| t.len()).collect();
    for (ti, len) in sizes.into_iter().enumerate() {
        for k in 0..len {
            let orig = model.tensors()[ti].1[k];
            probe.tensors_mut()[ti].1[k] = orig + eps;
            let plus = batch_loss(&probe, batch, aux_weight)?.total;
            probe.tensors_mut()[ti].1[k] = orig - eps;
            let minus = batch_loss(&probe, batch, aux_weight)?.total;
            probe.tensors_mut()[ti].1[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[idx];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            worst = worst.max(err);
            idx += 1;
        }
    }
    Ok(worst)
}

/// A small batch exercising every module: four Q=2, D=2 mirror circuits
/// covering I, X, Y, Z, H and CNOT, sampled under heavy noise so that
/// syndromes and labels are mixed.
pub fn grad_check_batch(d: usize, seed: u64) -> Result<Vec<SyndromeTrajectory>> {
    use Gate1::*;
    let layout = CodeLayout::new(d)?;
    let noise = NoiseModel {
        p2q: [0.01; 15],
        p1q: [0.02; 3],
        p_move: [0.01; 3],
        p_reset: 0.05,
        p_meas: 0.05,
    };
    let pairs = [(I, X), (Y, Z), (H, I)];
    let mut layers: Vec<Vec<Vec<LogicalGate>>> = pairs
        .iter()
        .map(|&(a, b)| {
            let l = vec![LogicalGate::Single(a, 0), LogicalGate::Single(b, 1)];
            vec![l.clone(), l]
        })
        .collect();
    let cnot = vec![LogicalGate::Cnot { control: 0, target: 1 }];
    layers.push(vec![cnot.clone(), cnot]);
    let mut out = Vec::new();
    for (i, l) in layers.into_iter().enumerate() {
        let ty = if i == 3 { CircuitType::II } else { CircuitType::I };
        let logical = LogicalCircuit::new(2, ty, l)?;
        let phys = compile(&logical, &layout, &noise)?;
        let dmap = build_detector_map(&logical, &layout)?;
        let mut rng = shot_rng(seed, i as u64);
        out.push(build_trajectory(&frame_sample(&phys, &mut rng), &dmap)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(model: &ModelParams) -> Self {
        let n = model.num_params();
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update. Tensors whose group fails `trainable` are
/// left untouched, moments included.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    lr: f64,
    trainable: impl Fn(ParamGroup) -> bool,
) -> Result<()> {
    if state.m.len() != params.num_params() || grads.num_params() != params.num_params() {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let mut off = 0;
    for ((group, p), (_, g)) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        let len = p.len();
        if trainable(group) {
            let m = &mut state.m[off..off + len];
            let v = &mut state.v[off..off + len];
            for k in 0..len {
                m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
                v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= lr * mh / (vh.sqrt() + state.eps);
            }
        }
        off += len;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn from_number(n: u32) -> Result<Stage> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            _ => Err(Error::Config(format!("stage must be 1 or 2, got {n}"))),
        }
    }

    pub fn trains(self, group: ParamGroup) -> bool {
        match self {
            Stage::One => group != ParamGroup::Two,
            Stage::Two => group == ParamGroup::Two,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub distance: usize,
    pub circuit_type: CircuitType,
    pub num_logical_qubits: usize,
    pub depths: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub aux_weight: f64,
    pub num_batches: usize,
    pub stage: Stage,
    pub seed: u64,
    /// Single-qubit hidden size; `None` picks the per-distance default.
    pub hidden: Option<usize>,
    pub noise: NoiseModel,
    pub checkpoint_in: Option<PathBuf>,
    pub checkpoint_out: Option<PathBuf>,
    /// Train from this dataset file instead of sampling on the fly.
    pub dataset: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            distance: 3,
            circuit_type: CircuitType::I,
            num_logical_qubits: 1,
            depths: vec![2, 4],
            batch_size: 1024,
            learning_rate: 0.001,
            aux_weight: 0.5,
            num_batches: 100,
            stage: Stage::One,
            seed: 0,
            hidden: None,
            noise: NoiseModel::default(),
            checkpoint_in: None,
            checkpoint_out: None,
            dataset: None,
        }
    }
}

impl TrainConfig {
    pub fn hidden_size(&self) -> usize {
        self.hidden.unwrap_or_else(|| default_hidden(self.distance))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.aux_weight >= 0.0) {
            return bad("aux_weight must be nonnegative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.depths.is_empty() {
            return bad("depths must not be empty");
        }
        if self.num_logical_qubits == 0 {
            return bad("num_logical_qubits must be positive");
        }
        match (self.stage, self.circuit_type) {
            (Stage::One, CircuitType::II) => return bad("stage 1 trains on Type I circuits"),
            (Stage::Two, CircuitType::I) => return bad("stage 2 trains on Type II circuits"),
            _ => {}
        }
        if self.stage == Stage::Two && self.checkpoint_in.is_none() {
            return bad("stage 2 requires a stage-1 checkpoint");
        }
        self.noise.validate()?;
        CodeLayout::new(self.distance)?;
        Ok(())
    }
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLine {
    pub step: usize,
    pub losses: Losses,
}

impl std::fmt::Display for LogLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.step, self.losses.main, self.losses.aux, self.losses.total)
    }
}

pub const LOG_HEADER: &str = "step,loss_main,loss_aux,loss_total";

pub struct TrainOutcome {
    pub model: ModelParams,
    pub log: Vec<LogLine>,
}

enum Source {
    Sampled(CodeLayout),
    File(Vec<SyndromeTrajectory>),
}

impl Source {
    fn batch(&self, cfg: &TrainConfig, step: usize) -> Result<Vec<SyndromeTrajectory>> {
        match self {
            Source::Sampled(layout) => (0..cfg.batch_size)
                .map(|i| {
                    let mut rng = shot_rng(cfg.seed, (step * cfg.batch_size + i) as u64);
                    let depth = cfg.depths[rng.random_range(0..cfg.depths.len())];
                    sample_trajectory(layout, &cfg.noise, cfg.circuit_type, cfg.num_logical_qubits, depth, &mut rng)
                        .map(|(_, t)| t)
                })
                .collect(),
            Source::File(all) => Ok((0..cfg.batch_size)
                .map(|i| all[(step * cfg.batch_size + i) % all.len()].clone())
                .collect()),
        }
    }
}

fn has_cnot(traj: &SyndromeTrajectory) -> bool {
    traj.tags.iter().flatten().any(|t| !matches!(t, GateTag::Single(_)))
}

/// Initial weights for a fresh model, drawn from a stream reserved for
/// initialization.
pub fn init_model(d: usize, hidden: usize, seed: u64) -> ModelParams {
    ModelParams::random(d, hidden, &mut shot_rng(seed, u64::MAX))
}

fn run(cfg: &TrainConfig, mut model: ModelParams, mut on_line: impl FnMut(&LogLine)) -> Result<TrainOutcome> {
    let source = match &cfg.dataset {
        Some(path) => {
            let all = crate::dataset::read_dataset(path)?;
            if all.is_empty() {
                return Err(Error::Config("training dataset is empty".into()));
            }
            if all.iter().any(|t| t.d != cfg.distance || t.num_logical != cfg.num_logical_qubits) {
                return Err(Error::Config("dataset does not match distance / num_logical_qubits".into()));
            }
            if cfg.stage == Stage::One && all.iter().any(has_cnot) {
                return Err(Error::Config("stage 1 requires Type I data; dataset contains CNOT layers".into()));
            }
            Source::File(all)
        }
        None => Source::Sampled(CodeLayout::new(cfg.distance)?),
    };
    let mut adam = AdamState::new(&model);
    let mut log = Vec::with_capacity(cfg.num_batches);
    for step in 0..cfg.num_batches {
        let batch = source.batch(cfg, step)?;
        let (losses, grad) = backward(&model, &batch, cfg.aux_weight)?;
        adam_step(&mut model, &grad, &mut adam, cfg.learning_rate, |g| cfg.stage.trains(g))?;
        let line = LogLine { step, losses };
        on_line(&line);
        log.push(line);
    }
    if let Some(path) = &cfg.checkpoint_out {
        write_checkpoint(path, &model)?;
    }
    Ok(TrainOutcome { model, log })
}

/// Trains the single-qubit modules and both readouts on Type I data. The
/// two-qubit module keeps its initial weights.
pub fn train_stage1(cfg: &TrainConfig, on_line: impl FnMut(&LogLine)) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.stage != Stage::One {
        return Err(Error::Config("train_stage1 called with stage 2 config".into()));
    }
    let model = match &cfg.checkpoint_in {
        Some(path) => {
            let m = read_checkpoint(path)?;
            check_model(cfg, &m)?;
            m
        }
        None => init_model(cfg.distance, cfg.hidden_size(), cfg.seed),
    };
    run(cfg, model, on_line)
}

/// Trains only the two-qubit module, starting from `stage1`.
pub fn train_stage2(cfg: &TrainConfig, stage1: ModelParams, on_line: impl FnMut(&LogLine)) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.stage != Stage::Two {
        return Err(Error::Config("train_stage2 called with stage 1 config".into()));
    }
    check_model(cfg, &stage1)?;
    run(cfg, stage1, on_line)
}

fn check_model(cfg: &TrainConfig, model: &ModelParams) -> Result<()> {
    if model.d != cfg.distance || cfg.hidden.is_some_and(|h| h != model.hidden) {
        return Err(Error::Config(format!(
            "checkpoint is d={} h1q={}, config asks for d={} h1q={}",
            model.d,
            model.hidden,
            cfg.distance,
            cfg.hidden_size()
        )));
    }
    Ok(())
}

/// Dispatches on `cfg.stage`, loading the stage-1 checkpoint for stage 2.
pub fn train(cfg: &TrainConfig, on_line: impl FnMut(&LogLine)) -> Result<TrainOutcome> {
    match cfg.stage {
        Stage::One => train_stage1(cfg, on_line),
        Stage::Two => {
            cfg.validate()?;
            let path = cfg.checkpoint_in.as_ref().expect("validated");
            train_stage2(cfg, read_checkpoint(path)?, on_line)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> ModelParams {
        init_model(3, 4, seed)
    }

    #[test]
    fn loss_examples() {
        let ln2 = std::f64::consts::LN_2;
        for label in [false, true] {
            assert!((loss([0.0, 0.0], [0.0, 0.0], label, 0.5) - 1.5 * ln2).abs() < 1e-12);
        }
        assert!((loss([20.0, -20.0], [0.0, 0.0], false, 0.5) - 0.5 * ln2).abs() < 1e-12);
        assert_eq!(loss([1.0, -2.0], [3.0, 0.5], true, 0.0), cross_entropy([1.0, -2.0], true));
        assert!(cross_entropy([1000.0, -1000.0], true).is_finite());
    }

    #[test]
    fn zero_model_batch_loss() {
        let batch = grad_check_batch(3, 1).unwrap();
        let m = ModelParams::zeros(3, 4);
        let l = batch_loss(&m, &batch, 0.5).unwrap();
        assert!((l.total - 1.5 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn no_path_means_zero_lstm_gradient() {
        let batch = grad_check_batch(3, 2).unwrap();
        let mut m = tiny(3);
        m.main.w1.fill(0.0);
        m.main.w2.fill(0.0);
        let (_, g) = backward(&m, &batch, 0.0).unwrap();
        for (group, t) in g.tensors() {
            if matches!(group, ParamGroup::Single(_) | ParamGroup::Two | ParamGroup::Aux) {
                assert!(t.iter().all(|&v| v == 0.0), "{group:?}");
            }
        }
    }

    #[test]
    fn duplicate_samples_do_not_change_gradient() {
        let batch = grad_check_batch(3, 4).unwrap();
        let m = tiny(5);
        let (l1, g1) = backward(&m, &batch[3..4], 0.5).unwrap();
        let twice = vec![batch[3].clone(), batch[3].clone()];
        let (l2, g2) = backward(&m, &twice, 0.5).unwrap();
        assert!((l1.total - l2.total).abs() < 1e-14);
        for ((_, a), (_, b)) in g1.tensors().into_iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-14 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let batch = grad_check_batch(3, 6).unwrap();
        let m = tiny(7);
        let err = grad_check(&m, &batch, 0.5, 1e-5).unwrap();
        assert!(err < 1e-5, "{err}");
        let coarse = grad_check(&m, &batch, 0.5, 1e-1).unwrap();
        assert!(coarse > err);
    }

    #[test]
    fn adam_first_step() {
        let mut m = ModelParams::zeros(3, 2);
        let mut g = m.zeros_like();
        g.main.b2[0] = 1e-3;
        g.main.b2[1] = -1.0;
        g.aux.b2[0] = 1.0;
        let mut st = AdamState::new(&m);
        adam_step(&mut m, &g, &mut st, 0.01, |_| true).unwrap();
        assert!((m.main.b2[0] + 0.01).abs() < 1e-6);
        assert!((m.main.b2[1] - 0.01).abs() < 1e-9);
        assert!((m.aux.b2[0] + 0.01).abs() < 1e-9);
        assert_eq!(m.main.b1[0], 0.0);
    }

    #[test]
    fn adam_respects_mask() {
        let mut m = tiny(1);
        let before = m.clone();
        let mut g = m.clone();
        g.scale(1.0);
        let mut st = AdamState::new(&m);
        adam_step(&mut m, &g, &mut st, 0.01, |grp| grp == ParamGroup::Two).unwrap();
        assert_eq!(m.single, before.single);
        assert_eq!(m.main, before.main);
        assert_eq!(m.aux, before.aux);
        assert_ne!(m.two, before.two);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { learning_rate: 0.0, ..ok.clone() },
            TrainConfig { aux_weight: -1.0, ..ok.clone() },
            TrainConfig { circuit_type: CircuitType::II, ..ok.clone() },
            TrainConfig { stage: Stage::Two, circuit_type: CircuitType::II, ..ok.clone() },
            TrainConfig { distance: 4, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(Stage::from_number(3).is_err());
    }

    #[test]
    fn stage1_is_reproducible_and_leaves_two_qubit_module() {
        let cfg = TrainConfig {
            hidden: Some(4),
            batch_size: 4,
            num_batches: 3,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train_stage1(&cfg, |_| {}).unwrap();
        let b = train_stage1(&cfg, |_| {}).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log.len(), 3);
        assert_eq!(a.model.two, init_model(3, 4, 11).two);
        assert_ne!(a.model.main, init_model(3, 4, 11).main);
        assert!(a.log[0].to_string().starts_with("0,"));
    }
}
