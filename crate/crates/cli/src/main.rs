//! `fedkan`: run Wav-KAN experiments from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data
//! error, 4 numerical failure (divergence, failed gradient check).

mod args;
mod fetch;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedkan::data::{partition_dirichlet, partition_iid};
use fedkan::experiment::{load_datasets, run_experiment, ExperimentConfig, ExperimentOutcome, PartitionKind};
use fedkan::gradcheck::run_gradcheck_wavelets;
use fedkan::wavelet::parse_wavelet_spec;
use fedkan::{Error, ErrorCategory, MotherWavelet, Result};
use toml::Value;

use args::ConfigArgs;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "fedkan", version, about = "Federated training of wavelet KANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model on the whole training set
    TrainCentral {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the merged configuration as TOML and exit
        #[arg(long)]
        print_config: bool,
    },
    /// Federated training with per-round averaging
    TrainFed {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print the merged configuration as TOML and exit
        #[arg(long)]
        print_config: bool,
    },
    /// Compare analytic gradients against finite differences
    Gradcheck {
        /// Comma-separated wavelet names
        #[arg(long, value_delimiter = ',', default_value = "mexican_hat,morlet,dog,shannon")]
        wavelets: Vec<String>,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-client sample counts and class histograms of a partition
    PartitionStats {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Download MNIST and verify checksums
    FetchMnist {
        #[arg(long, default_value = "data/mnist")]
        dir: PathBuf,
        /// http(s) URL or local directory holding the .gz files
        #[arg(long, default_value = fetch::DEFAULT_BASE_URL)]
        base_url: String,
        /// Re-download even if verified files exist
        #[arg(long)]
        force: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Config => EXIT_CONFIG,
        ErrorCategory::Data => EXIT_DATA,
        ErrorCategory::Numerical => EXIT_NUMERICAL,
        ErrorCategory::Io => EXIT_IO,
    }
}

fn report(cfg: &ExperimentConfig, outcome: &ExperimentOutcome) {
    println!("phase,step,train_accuracy,test_accuracy,train_loss,test_loss (mean of {} trial(s))", cfg.trials);
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.4}"));
    for r in &outcome.averaged.rows {
        println!(
            "{},{},{},{:.4},{},{:.4}",
            r.phase,
            r.step,
            opt(r.train_accuracy),
            r.test_accuracy,
            opt(r.train_loss),
            r.test_loss
        );
    }
    println!("wrote {}", cfg.output_dir.display());
}

fn train(config: &ConfigArgs, mode: &str, print_config: bool) -> Result<u8> {
    let cfg = config.resolve(&[("mode", Value::String(mode.into()))])?;
    if print_config {
        print!("{}", cfg.to_toml_string());
        return Ok(0);
    }
    let outcome = run_experiment(&cfg)?;
    report(&cfg, &outcome);
    Ok(0)
}

fn gradcheck(names: &[String], tolerance: f64, seed: u64) -> Result<u8> {
    let wavelets = names
        .iter()
        .filter(|n| !n.trim().is_empty())
        .map(|n| parse_wavelet_spec(n.trim(), &Default::default()))
        .collect::<Result<Vec<MotherWavelet>>>()?;
    let report = run_gradcheck_wavelets(&wavelets, tolerance, seed)?;
    println!("wavelet,derivative_error,model_error,result");
    for c in &report.checks {
        println!(
            "{},{:.3e},{:.3e},{}",
            c.wavelet,
            c.derivative_error,
            c.model_error,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    if report.passed() {
        Ok(0)
    } else {
        eprintln!(
            "gradient check failed for: {} (tolerance {tolerance:e})",
            report.failed_wavelets().join(", ")
        );
        Ok(EXIT_NUMERICAL)
    }
}

fn partition_stats(config: &ConfigArgs) -> Result<u8> {
    let cfg = config.resolve(&[])?;
    let data = load_datasets(&cfg)?;
    let labels = data.train.labels();
    let plan = match cfg.partition {
        PartitionKind::Iid => partition_iid(labels.len(), cfg.clients, cfg.seed)?,
        PartitionKind::Dirichlet => partition_dirichlet(labels, cfg.clients, cfg.dirichlet_alpha, cfg.seed)?,
    };
    let classes = data.train.num_classes();
    let header: Vec<String> = (0..classes).map(|c| format!("class_{c}")).collect();
    println!("client,samples,{}", header.join(","));
    for (k, h) in plan.class_histogram(labels, classes).iter().enumerate() {
        let counts: Vec<String> = h.iter().map(usize::to_string).collect();
        println!("{k},{},{}", plan.shards()[k].len(), counts.join(","));
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::TrainCentral { config, print_config } => train(&config, "central", print_config),
        Command::TrainFed { config, print_config } => train(&config, "federated", print_config),
        Command::Gradcheck { wavelets, tolerance, seed } => gradcheck(&wavelets, tolerance, seed),
        Command::PartitionStats { config } => partition_stats(&config),
        Command::FetchMnist { dir, base_url, force } => {
            for (path, status) in fetch::fetch_mnist(&dir, &base_url, force)? {
                let what = match status {
                    fetch::FetchStatus::AlreadyPresent => "verified",
                    fetch::FetchStatus::Downloaded => "downloaded and verified",
                };
                println!("{}: {what}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
