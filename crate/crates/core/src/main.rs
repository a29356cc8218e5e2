use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tobe_rtb::config::parse_config;
use tobe_rtb::pipeline::{run_pipeline, Stage};

/// Row-column array simulation, decoding, beamforming and evaluation.
#[derive(Parser, Debug)]
#[command(name = "tobe-rtb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate Hadamard-encoded channel data (writes encoded.rcrf).
    Simulate(Common),
    /// Decode encoded.rcrf into single-column transmits (writes decoded.rcrf).
    Decode(Common),
    /// Beamform every configured scheme (writes volumes and B-scan images).
    Beamform(Common),
    /// Measure FWHM or gCNR and frame rates (writes CSV tables).
    Metrics(Common),
    /// Run every stage in order.
    All(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `threads` (0 = one per core).
    #[arg(short, long)]
    threads: Option<usize>,
    /// Random seed, overriding `seed`.
    #[arg(short, long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match cli.command {
        Command::Simulate(a) => (Stage::Simulate, a),
        Command::Decode(a) => (Stage::Decode, a),
        Command::Beamform(a) => (Stage::Beamform, a),
        Command::Metrics(a) => (Stage::Metrics, a),
        Command::All(a) => (Stage::All, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("[config] cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("[config] {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
    {
        eprintln!("[setup] thread pool: {e}");
        return ExitCode::from(2);
    }
    match run_pipeline(&cfg, stage) {
        Ok(summary) => {
            for a in &summary.artifacts {
                println!("wrote {}", a.display());
            }
            if !summary.schemes.is_empty() {
                print!("{}", summary.table());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
