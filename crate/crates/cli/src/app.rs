//! Argument parsing and dispatch for the `qcomp` binary.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use qcomp_core::analysis::{AnalysisError, CalibrationOptions};
use qcomp_core::gate_ir::MAX_BIT_WIDTH;

use crate::commands::{
    comparator_for_verify, execute_run, reproduce, summary_table, synth, verify_circuit,
    write_reproduction, write_run, ReproduceOptions, VerifyMode,
};
use crate::config::{default_output_dir, RawConfig, RunConfig, OUTPUT_DIR_ENV};
use crate::output::write_atomic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qcomp", version, about = "Reversible comparator synthesis and noisy simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the n-bit comparator and print it as QASM.
    Synth(SynthArgs),
    /// Run the random-input protocol and write reports.
    Run(Box<RunArgs>),
    /// Calibrate the noise model to the reference rates and rerun the protocol.
    Reproduce(ReproduceArgs),
    /// Check the comparator against the classical oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Bit width.
    #[arg(value_parser = clap::value_parser!(u32).range(1..=MAX_BIT_WIDTH as i64))]
    pub n: u32,
    /// Replace every Toffoli by its Clifford+T decomposition.
    #[arg(long)]
    pub lower: bool,
    /// Write QASM here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags override the same keys read from `--config`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated bit widths.
    #[arg(long = "n")]
    pub n_values: Option<String>,
    #[arg(long)]
    pub shots: Option<String>,
    /// basis, statevector or auto.
    #[arg(long)]
    pub backend: Option<String>,
    /// none, model or tied.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub p1: Option<String>,
    #[arg(long)]
    pub p2: Option<String>,
    #[arg(long)]
    pub p3: Option<String>,
    #[arg(long)]
    pub idle: Option<String>,
    #[arg(long)]
    pub readout_flip: Option<String>,
    /// X,Y,Z weights.
    #[arg(long)]
    pub pauli_weights: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<String>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Embed raw shot records in the JSON report.
    #[arg(long)]
    pub records: bool,
}

impl RunArgs {
    fn raw(&self) -> RawConfig {
        RawConfig {
            n_values: self.n_values.clone(),
            shots: self.shots.clone(),
            backend: self.backend.clone(),
            noise: self.noise.clone(),
            p1: self.p1.clone(),
            p2: self.p2.clone(),
            p3: self.p3.clone(),
            idle: self.idle.clone(),
            readout_flip: self.readout_flip.clone(),
            pauli_weights: self.pauli_weights.clone(),
            seed: self.seed.clone(),
            output: self.out.clone(),
            format: self.format.clone(),
            records: self.records.then(|| "true".to_string()),
        }
    }
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Shots per bit width in the final run.
    #[arg(long, default_value_t = crate::config::DEFAULT_SHOTS, value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shots per bit width per calibration candidate.
    #[arg(long, default_value_t = CalibrationOptions::default().shots_per_n)]
    pub calibration_shots: u64,
    /// Output directory.
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Check every width from 1 up to this.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u32).range(1..=MAX_BIT_WIDTH as i64))]
    pub n_max: u32,
    /// Seed for sampled inputs on wide registers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Remove the k-th CNOT before checking (self-test of the checker).
    #[arg(long, hide = true)]
    pub drop_cnot: Option<usize>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<AnalysisError>()
                .is_some_and(|a| matches!(a, AnalysisError::CalibrationFailed { .. }))
            {
                EXIT_FAILURE
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(*a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Verify(a) => Ok(cmd_verify(a)),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let s = synth(args.n as usize, args.lower)?;
    match &args.out {
        Some(path) => write_atomic(path, &s.qasm)?,
        None => print!("{}", s.qasm),
    }
    eprintln!("{}", s.metrics);
    Ok(EXIT_OK)
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let file = match &args.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    let config = RunConfig::from_raw(&file.overlay(args.raw()))?;
    let output = execute_run(&config)?;
    let reports: Vec<_> = output.reports.iter().map(|r| &r.report).collect();
    print!("{}", summary_table(&reports));
    for path in write_run(&config, &output)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<i32> {
    let options = ReproduceOptions {
        shots: args.shots,
        seed: args.seed,
        calibration: CalibrationOptions {
            shots_per_n: args.calibration_shots,
            ..CalibrationOptions::default()
        },
        ..ReproduceOptions::default()
    };
    let r = match reproduce(options) {
        Ok(r) => r,
        Err(e) => {
            if let Some(AnalysisError::CalibrationFailed { calibration, threshold }) =
                e.downcast_ref::<AnalysisError>()
            {
                eprintln!("calibration residuals exceed {threshold}:");
                for (n, res) in &calibration.residuals {
                    eprintln!("  n={n} target={} simulated={} residual={res:+.4}", calibration.targets[n], calibration.simulated[n]);
                }
            }
            return Err(e);
        }
    };
    let c = &r.calibration;
    println!("fitted p2 = {:.6} (sse {:.3e}, {} evaluations)", c.p2, c.sse, c.evaluations);
    for (n, res) in &c.residuals {
        println!("  n={n} target={:.4} simulated={:.4} residual={res:+.4}", c.targets[n], c.simulated[n]);
    }
    print!("{}", summary_table(&r.reports()));
    let k = &r.checks;
    println!(
        "conventional monotone: {}  strict < conventional: {}  strict drops faster: {}  dominant failure at largest n: {}",
        k.conventional_monotone,
        k.strict_below_conventional,
        k.strict_drops_faster,
        k.dominant_failure_at_max_n.map_or("none".into(), |c| c.to_string())
    );
    let dir = args.out.unwrap_or_else(default_output_dir);
    for path in write_reproduction(&dir, &r)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs) -> i32 {
    for n in 1..=args.n_max as usize {
        let circuit = match comparator_for_verify(n, args.drop_cnot) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_USAGE;
            }
        };
        let mode = VerifyMode::for_width(n, args.seed);
        match verify_circuit(&circuit, mode) {
            Ok(checked) => {
                let how = match mode {
                    VerifyMode::Exhaustive => "exhaustive",
                    VerifyMode::Random { .. } => "random",
                };
                println!("n={n}: ok ({checked} inputs, {how})");
            }
            Err(cex) => {
                println!("n={n}: FAIL");
                println!("{cex}");
                return EXIT_FAILURE;
            }
        }
    }
    EXIT_OK
}
