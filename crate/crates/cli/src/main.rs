use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use conflate_cli::{
    exit_code, metadata_path, parse_rows, parse_specs, read_rows, read_specs, run, Command, Format, JobConfig, Options,
};

/// Conflate probability distributions and check the result.
#[derive(Parser, Debug)]
#[command(name = "conflate", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON file holding one distribution spec or an array of them.
    #[arg(long, global = true, value_name = "PATH")]
    input: Vec<PathBuf>,
    /// Inline distribution spec (or array) as JSON.
    #[arg(long, global = true, value_name = "JSON")]
    spec: Vec<String>,
    /// Base point count of the quadrature grid.
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Finest dyadic level used by the oracle.
    #[arg(long, global = true, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=30))]
    jmax: u32,
    /// Agreement tolerance for absolutely continuous sampling.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Conflate the inputs.
    Conflate,
    /// Approximate the conflation by dyadic discretization.
    Oracle {
        /// Total variation tolerance between successive levels.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Information loss, likelihood ratio and proportionality checks.
    Diagnose {
        /// Candidate spec; the conflation of the inputs by default.
        #[arg(long, value_name = "JSON")]
        candidate: Option<String>,
        /// Half-width of the characteristic function grid.
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
    },
    /// Draw from the conflation by agreement sampling.
    Sample {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// Maximum number of proposals.
        #[arg(long, default_value_t = conflate_core::sampler::DEFAULT_PROPOSAL_CAP)]
        cap: u64,
    },
    /// Best linear unbiased estimate from observation,variance rows.
    Fuse,
    /// Run the built-in reference cases.
    Verify,
}

fn build(cli: Cli) -> Result<(JobConfig, Option<PathBuf>)> {
    let g = cli.global;
    let mut options = Options {
        grid: g.grid,
        jmax: g.jmax,
        epsilon: g.epsilon,
        seed: g.seed,
        ..Options::default()
    };
    let command = match cli.command {
        Cmd::Conflate => Command::Conflate,
        Cmd::Oracle { tol } => {
            options.tv_tol = tol;
            Command::Oracle
        }
        Cmd::Diagnose { candidate, t_max } => {
            if let Some(c) = candidate {
                let mut specs = parse_specs(&c).context("--candidate")?;
                anyhow::ensure!(specs.len() == 1, "--candidate takes a single spec");
                options.candidate = specs.pop();
            }
            options.t_max = t_max;
            Command::Diagnose
        }
        Cmd::Sample { n, cap } => {
            options.samples = n;
            options.proposal_cap = cap;
            Command::Sample
        }
        Cmd::Fuse => Command::Fuse,
        Cmd::Verify => Command::Verify,
    };
    let mut inputs = Vec::new();
    let mut rows = Vec::new();
    if command == Command::Fuse {
        for p in &g.input {
            rows.extend(read_rows(p)?);
        }
        if g.input.is_empty() {
            rows = parse_rows(std::io::stdin().lock())?;
        }
    } else {
        for p in &g.input {
            inputs.extend(read_specs(p)?);
        }
        for s in &g.spec {
            inputs.extend(parse_specs(s).context("--spec")?);
        }
        if inputs.is_empty() && command != Command::Verify {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            if !text.trim().is_empty() {
                inputs = parse_specs(&text).context("stdin")?;
            }
        }
    }
    let format = g.format.unwrap_or(match command {
        Command::Verify => Format::Text,
        _ => Format::Json,
    });
    Ok((
        JobConfig {
            command,
            inputs,
            rows,
            options,
            format,
        },
        g.out,
    ))
}

fn execute(cli: Cli) -> Result<bool> {
    let (cfg, out) = build(cli)?;
    let output = run(&cfg)?;
    match &out {
        Some(path) => {
            std::fs::write(path, &output.body).with_context(|| format!("cannot write {}", path.display()))?;
            if let Some(meta) = &output.metadata {
                let mp = metadata_path(path);
                std::fs::write(&mp, meta).with_context(|| format!("cannot write {}", mp.display()))?;
            }
        }
        None => {
            std::io::stdout().lock().write_all(output.body.as_bytes())?;
            if let Some(meta) = &output.metadata {
                eprint!("{meta}");
            }
        }
    }
    Ok(output.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("CONFLATE_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
