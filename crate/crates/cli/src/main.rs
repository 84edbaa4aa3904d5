//! `ptensor`: build process tensors, validate them, sweep the two-qubit
//! model over (ξ, κ) and compute memory diagnostics.

mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use ptensor::io::{instrument_from_json, read_process, write_process};
use ptensor::memory::{
    causal_break_sequence, identity_instrument, memory_strength, memory_strength_sequential, noise_instrument, quantum_cmi, Aggregation,
    MemoryBlockSpec, MemoryStrength,
};
use ptensor::models::{cp_divisible, two_qubit_process_tensor, two_time_non_markovianity, ModelSpec, TwoQubitModel};
use ptensor::process::{non_markovianity, validate_process, ProcessTensor};

#[derive(Parser)]
#[command(name = "ptensor", version, about = "Process tensors and quantum memory diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check positivity and the causal hierarchy of a process-tensor file.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build a model from a JSON spec (inline or a file) and write it out.
    Model {
        spec: String,
        #[arg(long)]
        out: PathBuf,
        /// Seed for models with random ingredients; overrides the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a two-qubit-model metric on a (ξ, κ) grid and write CSV.
    Sweep {
        /// ξ range a:b:steps [default 0:5:11, or 0:5:51 with --fine]
        #[arg(long, conflicts_with = "fine")]
        xi: Option<String>,
        /// κ range a:b:steps [default 0:10:21, or 0:10:101 with --fine]
        #[arg(long, conflicts_with = "fine")]
        kappa: Option<String>,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long, default_value_t = 0.3)]
        dt: f64,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// 0.1 spacing over ξ ∈ [0, 5], κ ∈ [0, 10]; long-running for non-markovianity.
        #[arg(long)]
        fine: bool,
    },
    /// Memory strength of a process with respect to an instrument on a block.
    Memory {
        #[arg(long)]
        process: PathBuf,
        /// `F=..;M=..;H=..`, `M=..` or memory timesteps such as `2,3`.
        #[arg(long)]
        block: String,
        #[arg(long, value_enum)]
        instrument: InstrumentChoice,
        /// Instrument JSON, required with `--instrument file`.
        #[arg(long)]
        instrument_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Max)]
        mode: Mode,
        #[arg(long)]
        json: bool,
    },
    /// Quantum conditional mutual information I(F:H|M) in bits.
    Cmi {
        #[arg(long)]
        process: PathBuf,
        #[arg(long)]
        partition: String,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    NonMarkovianity,
    TwoTime,
    CpDivisible,
}

#[derive(Clone, Copy, ValueEnum)]
enum InstrumentChoice {
    Identity,
    Noise,
    CausalBreak,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PerOutcome,
    Avg,
    Max,
}

/// Exit status 1 is a domain failure, 2 a usage, parse or spec error.
enum Failure {
    Domain(String),
    Usage(String),
}

impl From<ptensor::Error> for Failure {
    fn from(e: ptensor::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { file, json } => cmd_validate(&file, json),
        Command::Model { spec, out, seed } => cmd_model(&spec, &out, seed),
        Command::Sweep { xi, kappa, metric, dt, n, out, fine } => cmd_sweep(xi, kappa, metric, dt, n, &out, fine),
        Command::Memory { process, block, instrument, instrument_file, mode, json } => {
            cmd_memory(&process, &block, instrument, instrument_file.as_deref(), mode, json)
        }
        Command::Cmi { process, partition, json } => cmd_cmi(&process, &partition, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<ProcessTensor, Failure> {
    Ok(read_process(path)?)
}

fn cmd_validate(file: &Path, json: bool) -> CmdResult {
    let p = load(file)?;
    let r = validate_process(&p);
    if json {
        let levels: Vec<_> = r.hierarchy.iter().map(|(t, d)| json!({"timestep": t, "deviation": d})).collect();
        let out = json!({
            "pass": r.pass,
            "positivity_margin": r.positivity_margin,
            "trace_deviation": r.trace_deviation,
            "hierarchy": levels,
            "failures": r.failures,
        });
        println!("{out}");
    } else {
        println!("wires: {}", p.wires());
        println!("positivity margin: {:.6e}", r.positivity_margin);
        println!("trace deviation: {:.6e}", r.trace_deviation);
        for (t, d) in &r.hierarchy {
            println!("hierarchy at timestep {t}: {d:.6e}");
        }
        for f in &r.failures {
            println!("failed: {f}");
        }
        println!("{}", if r.pass { "PASS" } else { "FAIL" });
    }
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Domain(format!("{} is not a valid process tensor", file.display())))
    }
}

fn cmd_model(spec: &str, out: &Path, seed: Option<u64>) -> CmdResult {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("{spec}: {e}")))?
    };
    let mut model: ModelSpec = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("model spec: {e}")))?;
    if let Some(s) = seed {
        match &mut model {
            ModelSpec::Collision { seed, .. } => *seed = s,
            other => return Err(Failure::Usage(format!("model {} takes no seed", other.name()))),
        }
    }
    let p = model.build()?;
    write_process(out, &p)?;
    println!("model: {}", model.name());
    println!("wires: {}", p.wires());
    println!("dimension: {}", p.matrix().dim());
    for (k, v) in p.metadata() {
        println!("{k}: {v}");
    }
    Ok(())
}

fn cmd_sweep(
    xi: Option<String>,
    kappa: Option<String>,
    metric: Metric,
    dt: f64,
    n: usize,
    out: &Path,
    fine: bool,
) -> CmdResult {
    let (xi_default, kappa_default) = if fine { ("0:5:51", "0:10:101") } else { ("0:5:11", "0:10:21") };
    let xs = spec::parse_range(xi.as_deref().unwrap_or(xi_default)).map_err(Failure::Usage)?;
    let ks = spec::parse_range(kappa.as_deref().unwrap_or(kappa_default)).map_err(Failure::Usage)?;
    if let Metric::NonMarkovianity = metric {
        TwoQubitModel::new(0.0, 0.0, dt, n)?;
    }
    let grid: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ks.iter().map(move |&k| (x, k))).collect();
    let threads = std::env::var("PT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    let values: Vec<Result<String, ptensor::Error>> =
        pool.install(|| grid.par_iter().map(|&(x, k)| evaluate(metric, x, k, dt, n)).collect());
    let mut w = csv::Writer::from_path(out).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    let io = |e: csv::Error| Failure::Usage(e.to_string());
    w.write_record(["xi", "kappa", "value"]).map_err(io)?;
    for (&(x, k), v) in grid.iter().zip(values) {
        w.write_record([x.to_string(), k.to_string(), v?]).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Usage(e.to_string()))?;
    let name = match metric {
        Metric::NonMarkovianity => "non-markovianity",
        Metric::TwoTime => "two-time",
        Metric::CpDivisible => "cp-divisible",
    };
    println!("metric: {name}");
    println!("xi: {} points in [{}, {}]", xs.len(), xs[0], xs[xs.len() - 1]);
    println!("kappa: {} points in [{}, {}]", ks.len(), ks[0], ks[ks.len() - 1]);
    if let Metric::NonMarkovianity = metric {
        println!("dt: {dt}, n: {n}");
    }
    println!("rows: {}", grid.len());
    Ok(())
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn evaluate(metric: Metric, xi: f64, kappa: f64, dt: f64, n: usize) -> Result<String, ptensor::Error> {
    Ok(match metric {
        Metric::TwoTime => format_value(two_time_non_markovianity(xi, kappa)),
        Metric::CpDivisible => cp_divisible(xi, kappa).to_string(),
        Metric::NonMarkovianity => {
            let p = two_qubit_process_tensor(&TwoQubitModel::new(xi, kappa, dt, n)?)?;
            format_value(non_markovianity(&p)?)
        }
    })
}

fn cmd_memory(
    process: &Path,
    block: &str,
    choice: InstrumentChoice,
    instrument_file: Option<&Path>,
    mode: Mode,
    json: bool,
) -> CmdResult {
    let p = load(process)?;
    let block: MemoryBlockSpec = spec::parse_block(block, p.wires()).map_err(Failure::Usage)?;
    let agg = match mode {
        Mode::PerOutcome => Aggregation::PerOutcome,
        Mode::Avg => Aggregation::Average,
        Mode::Max => Aggregation::Maximum,
    };
    let strength = match choice {
        InstrumentChoice::Identity => memory_strength(&p, &identity_instrument(p.wires(), &block.memory)?, &block, agg)?,
        InstrumentChoice::Noise => memory_strength(&p, &noise_instrument(p.wires(), &block.memory)?, &block, agg)?,
        InstrumentChoice::CausalBreak => {
            let parts = causal_break_sequence(p.wires(), &block.memory)?;
            memory_strength_sequential(&p, &parts, &block, agg)?
        }
        InstrumentChoice::File => {
            let path = instrument_file.ok_or_else(|| Failure::Usage("--instrument file needs --instrument-file".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            memory_strength(&p, &instrument_from_json(&text)?, &block, agg)?
        }
    };
    match (&strength, json) {
        (MemoryStrength::Scalar(v), false) => println!("memory strength: {v:.12e} bits"),
        (MemoryStrength::Scalar(v), true) => println!("{}", json!({"unit": "bits", "value": v})),
        (MemoryStrength::PerOutcome(os), false) => {
            for o in os {
                println!("{}: {:.12e} bits (weight {:.6e})", o.label, o.strength, o.weight);
            }
        }
        (MemoryStrength::PerOutcome(os), true) => {
            let list: Vec<_> =
                os.iter().map(|o| json!({"label": o.label, "value": o.strength, "weight": o.weight})).collect();
            println!("{}", json!({"unit": "bits", "outcomes": list}));
        }
    }
    Ok(())
}

fn cmd_cmi(process: &Path, partition: &str, json: bool) -> CmdResult {
    let p = load(process)?;
    let block = spec::parse_block(partition, p.wires()).map_err(Failure::Usage)?;
    let v = quantum_cmi(&p, &block)?;
    if json {
        println!("{}", json!({"unit": "bits", "value": v}));
    } else {
        println!("conditional mutual information: {v:.12e} bits");
    }
    Ok(())
}
