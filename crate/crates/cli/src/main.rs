use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use mcswap::data::{self, XorSpec, DEFAULT_SPREAD};
use mcswap::experiment::{self, DatasetSpec, ExperimentConfig, Mode};
use mcswap::Error;
use serde::Deserialize;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mcswap",
    version,
    about = "Multi-class SWAP-test classifier experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an XOR-family dataset to CSV.
    Generate(GenerateArgs),
    /// Run cross-validated classification for each noise level.
    Experiment(ExperimentArgs),
    /// Sweep the label capacity of a predicted vector.
    Capacity(CapacityArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config whose dataset section is an XOR generator.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    points_per_class: Option<usize>,
    #[arg(long)]
    spread: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<u64>,
    /// Comma-separated depolarizing probabilities.
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Predicted vector as x,y,z.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    r: Option<Vec<f64>>,
    /// Comma-separated repetition counts.
    #[arg(long, value_delimiter = ',')]
    repetitions: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    /// Output stem; `.json` and `.csv` are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityFile {
    capacity: CapacityConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityConfig {
    r: Option<[f64; 3]>,
    #[serde(default)]
    repetitions: Vec<u64>,
    #[serde(default)]
    noise: Vec<f64>,
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }

    fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Infeasible(_) | Error::PoleDegenerate(_) => {
                EXIT_CONFIG
            }
            Error::Data(_) | Error::Io { .. } | Error::Csv { .. } => EXIT_DATA,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    toml::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::config)
}

fn load_experiment_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let mut config: ExperimentConfig = read_toml(path)?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(Failure::runtime)?;
    }
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::runtime)
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let base = match &args.config {
        Some(path) => match load_experiment_config(path)?.dataset {
            DatasetSpec::Xor(spec) => Some(spec),
            DatasetSpec::Csv { .. } => {
                return Err(Failure::config(anyhow!(
                    "{}: dataset is a CSV file, not a generator",
                    path.display()
                )))
            }
        },
        None => None,
    };
    let pick = |flag: Option<usize>, from: Option<usize>, name: &str| {
        flag.or(from)
            .ok_or_else(|| Failure::config(anyhow!("--{name} is required without --config")))
    };
    let spec = XorSpec {
        n_classes: pick(args.classes, base.map(|b| b.n_classes), "classes")?,
        n_features: pick(args.features, base.map(|b| b.n_features), "features")?,
        points_per_class: pick(
            args.points_per_class,
            base.map(|b| b.points_per_class),
            "points-per-class",
        )?,
        spread: args
            .spread
            .or(base.map(|b| b.spread))
            .unwrap_or(DEFAULT_SPREAD),
        seed: args.seed.or(base.map(|b| b.seed)).unwrap_or(0),
    };
    let generated = data::generate_xor(&spec)?;
    let ds = &generated.dataset;
    ds.write_csv(&args.out)
        .map_err(|e| Failure::runtime(anyhow!(e)))?;
    println!(
        "wrote {}: M = {}, N = {}, L = {}, min separation = {:.2} deg",
        args.out.display(),
        ds.len(),
        ds.n_features(),
        ds.n_classes(),
        generated.min_separation.to_degrees()
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> CmdResult {
    let mut config = load_experiment_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.execution.shots = shots;
    }
    if let Some(noise) = args.noise {
        config.execution.noise = noise;
    }
    if let Some(mode) = args.mode {
        config.execution.mode = mode;
    }
    if let Some(out) = args.out {
        config.out = Some(out);
    }
    let result = experiment::run_experiment(&config)?;
    print!("{}", experiment::format_table(&result.records));
    if let Some(out) = &config.out {
        let json = serde_json::to_string_pretty(&result).map_err(Failure::runtime)?;
        write_file(out, &(json + "\n"))?;
        println!("results written to {}", out.display());
    }
    if !result.complete {
        for e in &result.errors {
            eprintln!("error: {e}");
        }
        return Err(Failure::runtime(anyhow!(
            "run incomplete; partial results kept"
        )));
    }
    Ok(())
}

fn cmd_capacity(args: CapacityArgs) -> CmdResult {
    let file = match &args.config {
        Some(path) => read_toml::<CapacityFile>(path)?.capacity,
        None => CapacityConfig::default(),
    };
    let r = match args.r {
        Some(v) => <[f64; 3]>::try_from(v.as_slice())
            .map_err(|_| Failure::config(anyhow!("--r takes exactly three components")))?,
        None => file
            .r
            .ok_or_else(|| Failure::config(anyhow!("--r is required without --config")))?,
    };
    let repetitions = args.repetitions.unwrap_or(file.repetitions);
    let repetitions = if repetitions.is_empty() {
        vec![100, 1_000, 10_000, 100_000]
    } else {
        repetitions
    };
    let noise = args.noise.unwrap_or(file.noise);
    let sweep = experiment::capacity_sweep(r, &repetitions, &noise)?;

    println!(
        "{:>10}  {:>6}  {:>12}  {:>12}  {:>14}  {:>14}",
        "R", "p", "dtheta", "dphi", "N_s", "noisy N_s"
    );
    for row in &sweep.rows {
        println!(
            "{:>10}  {:>6.3}  {:>12.6}  {:>12.6}  {:>14.2}  {:>14.2}",
            row.repetitions,
            row.p,
            row.delta_theta,
            row.delta_phi,
            row.n_states,
            row.noisy_n_states
        );
    }
    for f in &sweep.fits {
        println!(
            "p = {}: slope {:.6e} per repetition, R^2 = {:.6}",
            f.p, f.fit.slope, f.fit.r_squared
        );
    }
    if let Some(stem) = args.out.or(file.out) {
        let json_path = stem.with_extension("json");
        let csv_path = stem.with_extension("csv");
        let json = serde_json::to_string_pretty(&sweep).map_err(Failure::runtime)?;
        write_file(&json_path, &(json + "\n"))?;
        sweep
            .write_csv(&csv_path)
            .map_err(|e| Failure::runtime(anyhow!(e)))?;
        println!(
            "sweep written to {} and {}",
            json_path.display(),
            csv_path.display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Capacity(a) => cmd_capacity(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
