mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mccd_core::bench::{
    benchmark_walltime, evaluate_accuracy, standard_error, trajectory_detectors, BenchReport, BenchRow, Decoder, DecoderKind,
};
use mccd_core::compiler::{compile_with, CompileOptions};
use mccd_core::dataset::{circuit_from_tags, read_dataset, sample_trajectory, write_dataset};
use mccd_core::dem::{extract_dem, MleDecoder};
use mccd_core::geometry::CodeLayout;
use mccd_core::logical::{sample_mirror, LogicalCircuit};
use mccd_core::model::checkpoint::read_checkpoint;
use mccd_core::sim::shot_rng;
use mccd_core::train::{grad_check, grad_check_batch, init_model, train, LOG_HEADER};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "mccd", version, about = "Modular recurrent decoder for logical Clifford circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Mccd,
    Mle,
}

#[derive(Subcommand)]
enum Command {
    /// Sample mirror circuits and write a dataset file per depth.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Trajectories per depth (defaults to `shots`).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Train stage 1 or 2; the log goes to --out or stdout.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Logical accuracy per depth; CSV to --out.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "mccd")]
        decoder: DecoderArg,
    },
    /// Decode-only wall time per depth with a linear fit; CSV to --out.
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Dump the detector error model of one circuit.
    Dem {
        #[command(flatten)]
        common: Common,
        /// Logical circuit in text form; sampled from the config if absent.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
    /// Decode a dataset file with the bounded MLE baseline.
    Mle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Finite-difference audit of the hand-written gradients.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_report(report: &BenchReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report.to_table());
    if let Some(p) = out {
        std::fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn dataset_path(out: &Path, depth: usize, many: bool) -> PathBuf {
    if !many {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_D{depth}.{ext}"),
        None => format!("{stem}_D{depth}"),
    };
    out.with_file_name(name)
}

fn gen(cfg: &RunConfig, out: &Path, count: usize) -> Result<()> {
    let t = &cfg.train;
    let layout = CodeLayout::new(t.distance)?;
    let many = t.depths.len() > 1;
    for &depth in &t.depths {
        let trajs = (0..count)
            .map(|i| {
                let mut rng = shot_rng(t.seed, ((depth as u64) << 32) | i as u64);
                sample_trajectory(&layout, &t.noise, t.circuit_type, t.num_logical_qubits, depth, &mut rng).map(|(_, tr)| tr)
            })
            .collect::<mccd_core::Result<Vec<_>>>()?;
        let path = dataset_path(out, depth, many);
        write_dataset(&path, &trajs)?;
        eprintln!("wrote {count} trajectories (D={depth}) to {}", path.display());
    }
    Ok(())
}

fn run_train(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let mut w = output(out)?;
    writeln!(w, "{LOG_HEADER}")?;
    let mut io_err = None;
    let outcome = train(&cfg.train, |line| {
        if io_err.is_none() {
            io_err = writeln!(w, "{line}").err();
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    w.flush()?;
    if let Some(last) = outcome.log.last() {
        eprintln!("final loss {:.6} after {} batches", last.losses.total, outcome.log.len());
    }
    match &cfg.train.checkpoint_out {
        Some(p) => eprintln!("checkpoint written to {}", p.display()),
        None => eprintln!("no checkpoint_out set; model discarded"),
    }
    Ok(())
}

fn load_model(cfg: &RunConfig) -> Result<mccd_core::model::ModelParams> {
    let path = cfg.train.checkpoint_in.as_ref().context("checkpoint_in is required")?;
    Ok(read_checkpoint(path)?)
}

fn eval(cfg: &RunConfig, decoder: DecoderArg, out: Option<&Path>) -> Result<()> {
    let t = &cfg.train;
    let model;
    let dec = match decoder {
        DecoderArg::Mccd => {
            model = load_model(cfg)?;
            Decoder::Mccd(&model)
        }
        DecoderArg::Mle => Decoder::Mle {
            noise: &t.noise,
            max_weight: cfg.max_weight,
        },
    };
    let report = evaluate_accuracy(&dec, &t.noise, t.distance, t.circuit_type, t.num_logical_qubits, &t.depths, cfg.shots, t.seed)?;
    emit_report(&report, out)
}

fn bench(cfg: &RunConfig, out: Option<&Path>) -> Result<()> {
    let t = &cfg.train;
    let model = match &t.checkpoint_in {
        Some(p) => read_checkpoint(p)?,
        None => init_model(t.distance, t.hidden_size(), t.seed),
    };
    let report = benchmark_walltime(&model, &t.noise, t.distance, t.circuit_type, t.num_logical_qubits, &t.depths, cfg.shots, t.seed)?;
    emit_report(&report, out)
}

fn dem(cfg: &RunConfig, circuit: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let t = &cfg.train;
    let logical = match circuit {
        Some(p) => LogicalCircuit::from_text(&std::fs::read_to_string(p)?)?,
        None => sample_mirror(t.circuit_type, t.num_logical_qubits, t.depths[0], &mut shot_rng(t.seed, 0))?,
    };
    let layout = CodeLayout::new(t.distance)?;
    let (phys, dmap) = compile_with(&logical, &layout, &t.noise, &CompileOptions::default())?;
    let model = extract_dem(&phys, &dmap);
    eprintln!("{} faults over {} detectors for\n{}", model.faults.len(), model.num_detectors, logical.to_text());
    output(out)?.write_all(model.to_text().as_bytes())?;
    Ok(())
}

fn mle(cfg: &RunConfig, data: &Path, out: Option<&Path>) -> Result<()> {
    let t = &cfg.train;
    let trajs = read_dataset(data)?;
    let Some(first) = trajs.first() else {
        bail!("dataset {} is empty", data.display());
    };
    let layout = CodeLayout::new(first.d)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut not_found = 0usize;
    let mut secs = 0.0;
    let mut cache = std::collections::HashMap::new();
    for traj in &trajs {
        let logical = circuit_from_tags(traj)?;
        let key = logical.to_text();
        if !cache.contains_key(&key) {
            let (phys, dmap) = compile_with(&logical, &layout, &t.noise, &CompileOptions::default())?;
            cache.insert(key.clone(), extract_dem(&phys, &dmap));
        }
        let model = &cache[&key];
        let t0 = std::time::Instant::now();
        let r = MleDecoder::new(model, cfg.max_weight)?.decode(&trajectory_detectors(traj));
        secs += t0.elapsed().as_secs_f64();
        not_found += !r.found as usize;
        for (q, &label) in traj.labels.iter().enumerate() {
            correct += (r.observables.get(q) == label) as usize;
            total += 1;
        }
    }
    let accuracy = correct as f64 / total as f64;
    let report = BenchReport {
        rows: vec![BenchRow {
            decoder: DecoderKind::Mle,
            d: first.d,
            circuit_type: if first.tags.iter().flatten().all(|g| matches!(g, mccd_core::compiler::GateTag::Single(_))) {
                mccd_core::logical::CircuitType::I
            } else {
                mccd_core::logical::CircuitType::II
            },
            depth: first.depth,
            shots: trajs.len(),
            accuracy,
            stderr: standard_error(accuracy, total),
            mean_walltime_s: secs / trajs.len() as f64,
            majority_rate: {
                let ones = trajs.iter().flat_map(|t| &t.labels).filter(|&&b| b).count();
                ones.max(total - ones) as f64 / total as f64
            },
        }],
        fit: None,
    };
    eprintln!("{not_found} of {} shots had no explanation within weight {}", trajs.len(), cfg.max_weight);
    emit_report(&report, out)
}

fn gradcheck(seed: u64, eps: f64) -> Result<()> {
    let model = init_model(3, 8, seed);
    let batch = grad_check_batch(3, seed)?;
    let err = grad_check(&model, &batch, 0.5, eps)?;
    println!("max relative error {err:.3e} over {} parameters (eps {eps:e})", model.num_params());
    if err >= 1e-5 {
        bail!("gradient check failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { common, count } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            let out = common.out.context("--out is required")?;
            gen(&cfg, &out, count.unwrap_or(cfg.shots))
        }
        Command::Train { common } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            run_train(&cfg, common.out.as_deref())
        }
        Command::Eval { common, decoder } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            eval(&cfg, decoder, common.out.as_deref())
        }
        Command::Bench { common } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            bench(&cfg, common.out.as_deref())
        }
        Command::Dem { common, circuit } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            dem(&cfg, circuit.as_deref(), common.out.as_deref())
        }
        Command::Mle { common, data } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            mle(&cfg, &data, common.out.as_deref())
        }
        Command::Gradcheck { common, eps } => {
            let cfg = config::load(common.config.as_deref(), common.seed)?;
            gradcheck(cfg.train.seed, eps)
        }
    }
}
