//! Jobs behind the `conflate` binary.
//!
//! A [`JobConfig`] names a command, its input distributions and options;
//! [`run`] executes it and returns the rendered output. Errors that mean the
//! requested conflation does not exist map to exit code 2, everything else
//! to 1 (see [`exit_code`]).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde_json::{json, Value};

use conflate_core::conflation::{conflate_with, GridOptions};
use conflate_core::diagnostics::{
    convolution_check, max_information_loss, mlr_delta, proportionality_check, symmetric_grid,
};
use conflate_core::dyadic::oracle_conflation;
use conflate_core::fusion::blue_estimate;
use conflate_core::json::to_canonical_string;
use conflate_core::reference_cases::run_reference_cases;
use conflate_core::sampler::{default_epsilon, empirical_distance, sample_agree_ac, sample_agree_discrete};
use conflate_core::{conflate, DistributionSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Conflate,
    Oracle,
    Diagnose,
    Sample,
    Fuse,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    /// Base grid size for the grid engine.
    pub grid: Option<usize>,
    pub jmax: u32,
    pub tv_tol: f64,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub samples: u64,
    pub proposal_cap: u64,
    /// Candidate for `diagnose`; the conflation when absent.
    pub candidate: Option<DistributionSpec>,
    pub t_max: f64,
    pub proportionality_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grid: None,
            jmax: 12,
            tv_tol: 1e-4,
            epsilon: None,
            seed: 0,
            samples: 10_000,
            proposal_cap: conflate_core::sampler::DEFAULT_PROPOSAL_CAP,
            candidate: None,
            t_max: 10.0,
            proportionality_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub command: Command,
    pub inputs: Vec<DistributionSpec>,
    /// `(observation, variance)` rows for `fuse`.
    pub rows: Vec<(f64, f64)>,
    pub options: Options,
    pub format: Format,
}

/// Rendered output of a job.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub body: String,
    /// Sample metadata accompanying a CSV batch.
    pub metadata: Option<String>,
    /// False when a `verify` case failed.
    pub passed: bool,
}

impl Output {
    fn of(body: String) -> Self {
        Output {
            body,
            metadata: None,
            passed: true,
        }
    }
}

/// 2 when the error says the conflation (or its sample) does not exist,
/// otherwise 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<conflate_core::Error>() {
        Some(e) if e.is_nonexistence() => 2,
        _ => 1,
    }
}

/// One spec or an array of specs.
pub fn parse_specs(text: &str) -> Result<Vec<DistributionSpec>> {
    let v: Value = serde_json::from_str(text).context("malformed JSON")?;
    let items = match v {
        Value::Array(items) => items,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|item| serde_json::from_value(item).context("invalid distribution spec"))
        .collect()
}

pub fn read_specs(path: &Path) -> Result<Vec<DistributionSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_specs(&text).with_context(|| format!("in {}", path.display()))
}

/// `observation,variance` rows; a non-numeric first row is taken as a header.
pub fn parse_rows<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            bail!("row {}: expected observation,variance", i + 1);
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(v)) => rows.push((x, v)),
            _ if i == 0 => continue,
            _ => bail!("row {}: not a number pair", i + 1),
        }
    }
    Ok(rows)
}

pub fn read_rows(path: &Path) -> Result<Vec<(f64, f64)>> {
    let f = std::fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_rows(f)
}

fn line(v: &impl serde::Serialize) -> String {
    to_canonical_string(v) + "\n"
}

fn grid_options(o: &Options) -> GridOptions {
    let mut g = GridOptions::default();
    if let Some(n) = o.grid {
        g.base_points = n;
    }
    g
}

pub fn run(cfg: &JobConfig) -> Result<Output> {
    if cfg.command != Command::Verify && cfg.command != Command::Fuse && cfg.inputs.is_empty() {
        bail!("no input distributions; pass --spec or --input");
    }
    match cfg.command {
        Command::Conflate => run_conflate(cfg),
        Command::Oracle => run_oracle(cfg),
        Command::Diagnose => run_diagnose(cfg),
        Command::Sample => run_sample(cfg),
        Command::Fuse => run_fuse(cfg),
        Command::Verify => Ok(run_verify(cfg)),
    }
}

fn run_conflate(cfg: &JobConfig) -> Result<Output> {
    let r = conflate_with(&cfg.inputs, &grid_options(&cfg.options))?;
    Ok(Output::of(match cfg.format {
        Format::Json => r.to_json(),
        Format::Csv => r.to_csv(cfg.options.grid.unwrap_or(512))?,
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "engine: {}", r.engine.name())?;
            writeln!(s, "result: {}", to_canonical_string(&r.to_spec()))?;
            writeln!(s, "normalizer: {}", r.norm_constant)?;
            if let Ok((m, v)) = r.moments() {
                writeln!(s, "mean: {m}\nvariance: {v}")?;
            }
            if let Some(x) = r.concentration {
                writeln!(s, "concentrates at: {x}")?;
            }
            for w in &r.warnings {
                writeln!(s, "warning: {w}")?;
            }
            s
        }
    }))
}

fn run_oracle(cfg: &JobConfig) -> Result<Output> {
    let r = oracle_conflation(&cfg.inputs, cfg.options.jmax, cfg.options.tv_tol)?;
    Ok(Output::of(match cfg.format {
        Format::Json => line(&r),
        Format::Csv => {
            let mut s = String::from("x,mass\n");
            for (x, m) in r.approx.atoms() {
                writeln!(s, "{x},{m}")?;
            }
            s
        }
        Format::Text => {
            let mut s = String::from("level  mass                    tv\n");
            for (i, m) in r.mass_sequence.iter().enumerate() {
                let tv = if i == 0 {
                    String::from("-")
                } else {
                    r.tv_sequence[i - 1].to_string()
                };
                writeln!(s, "{:>5}  {m:<22}  {tv}", i + 1)?;
            }
            writeln!(
                s,
                "converged: {}, monotone: {}, escape: {}, level {}",
                r.converged, r.monotonicity_ok, r.escape_flag, r.achieved_level
            )?;
            s
        }
    }))
}

fn attempt<T: serde::Serialize>(r: conflate_core::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn run_diagnose(cfg: &JobConfig) -> Result<Output> {
    let specs = &cfg.inputs;
    let candidate = match &cfg.options.candidate {
        Some(c) => c.clone(),
        None => conflate(specs)?.to_spec(),
    };
    let mut report = json!({
        "candidate": serde_json::to_value(&candidate)?,
        "information": attempt(max_information_loss(&candidate, specs)),
        "mlr": attempt(mlr_delta(&candidate, specs)),
        "proportionality": attempt(proportionality_check(&candidate, specs, cfg.options.proportionality_tol)),
    });
    if specs.len() == 2 && !specs.iter().any(|s| s.is_discrete()) {
        let ts = symmetric_grid(cfg.options.t_max, 201);
        report["convolution_residual"] = attempt(convolution_check(&specs[0], &specs[1], &ts));
    }
    Ok(Output::of(match cfg.format {
        Format::Json | Format::Csv => line(&report),
        Format::Text => {
            let mut s = String::new();
            match &candidate {
                DistributionSpec::Grid(g) => writeln!(s, "candidate: grid density on {} points", g.points().len())?,
                c => writeln!(s, "candidate: {}", to_canonical_string(c))?,
            }
            for key in ["information", "mlr", "proportionality", "convolution_residual"] {
                if let Some(v) = report.get(key) {
                    writeln!(s, "{key}: {}", to_canonical_string(v))?;
                }
            }
            s
        }
    }))
}

fn run_sample(cfg: &JobConfig) -> Result<Output> {
    let o = &cfg.options;
    let batch = if cfg.inputs.iter().all(|s| s.is_discrete()) {
        sample_agree_discrete(&cfg.inputs, o.samples, o.seed, o.proposal_cap)?
    } else {
        let eps = match o.epsilon {
            Some(e) => e,
            None => default_epsilon(&cfg.inputs)?,
        };
        sample_agree_ac(&cfg.inputs, eps, o.samples, o.seed, o.proposal_cap)?
    };
    let mut meta = batch.metadata();
    if let Ok(target) = conflate(&cfg.inputs) {
        if let Ok(d) = empirical_distance(&batch, &target) {
            meta["distance_to_conflation"] = json!(d);
        }
    }
    Ok(match cfg.format {
        Format::Json => {
            let mut v = meta;
            v["values"] = json!(batch.values);
            Output::of(line(&v))
        }
        Format::Csv => Output {
            body: batch.to_csv(),
            metadata: Some(line(&meta)),
            passed: true,
        },
        Format::Text => {
            let mut s = String::new();
            for (k, v) in meta.as_object().into_iter().flatten() {
                writeln!(s, "{k}: {v}")?;
            }
            Output::of(s)
        }
    })
}

fn run_fuse(cfg: &JobConfig) -> Result<Output> {
    if cfg.rows.is_empty() {
        bail!("no observation,variance rows");
    }
    let (obs, vars): (Vec<f64>, Vec<f64>) = cfg.rows.iter().copied().unzip();
    let est = blue_estimate(&obs, &vars)?;
    Ok(Output::of(match cfg.format {
        Format::Json => line(&est),
        Format::Csv => format!("value,variance\n{},{}\n", est.value, est.variance),
        Format::Text => format!(
            "value: {}\nvariance: {}\nweights: {:?}\n",
            est.value, est.variance, est.weights
        ),
    }))
}

fn run_verify(cfg: &JobConfig) -> Output {
    let cases = run_reference_cases();
    let passed = cases.iter().all(|c| c.passed);
    let body = match cfg.format {
        Format::Json => line(&cases),
        Format::Csv => {
            let mut s = String::from("case,passed\n");
            for c in &cases {
                s.push_str(&format!("\"{}\",{}\n", c.name.replace('"', "\"\""), c.passed));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for c in &cases {
                s.push_str(&format!(
                    "{} {}: {}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
            let n = cases.iter().filter(|c| c.passed).count();
            s.push_str(&format!("{n}/{} passed\n", cases.len()));
            s
        }
    };
    Output {
        body,
        metadata: None,
        passed,
    }
}

/// Where the CSV batch metadata goes when the batch is written to `out`.
pub fn metadata_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(command: Command, inputs: Vec<DistributionSpec>) -> JobConfig {
        JobConfig {
            command,
            inputs,
            rows: Vec::new(),
            options: Options::default(),
            format: Format::Json,
        }
    }

    #[test]
    fn parses_single_and_array_specs() {
        let one = parse_specs(r#"{"kind":"bernoulli","params":{"p":0.25}}"#).unwrap();
        assert_eq!(one, vec![DistributionSpec::bernoulli(0.25)]);
        let two = parse_specs(r#"[{"kind":"poisson","params":{"lambda":2}},{"kind":"pmf","atoms":[[0,1]]}]"#).unwrap();
        assert_eq!(two.len(), 2);
        assert!(parse_specs("{").is_err());
        assert!(parse_specs(r#"{"kind":"nope","params":{}}"#).is_err());
    }

    #[test]
    fn rows_with_and_without_header() {
        assert_eq!(
            parse_rows("x,v\n1,1\n2,4\n".as_bytes()).unwrap(),
            vec![(1.0, 1.0), (2.0, 4.0)]
        );
        assert_eq!(parse_rows("1, 1\n".as_bytes()).unwrap(), vec![(1.0, 1.0)]);
        assert!(parse_rows("1,1\nx,2\n".as_bytes()).is_err());
    }

    #[test]
    fn exit_codes() {
        let disjoint = job(
            Command::Conflate,
            vec![DistributionSpec::pmf([(0.0, 1.0)]), DistributionSpec::pmf([(1.0, 1.0)])],
        );
        let e = run(&disjoint).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("no common atoms"));
        let e = run(&job(Command::Conflate, vec![])).unwrap_err();
        assert_eq!(exit_code(&e), 1);
    }

    #[test]
    fn fuse_rows() {
        let mut cfg = job(Command::Fuse, vec![]);
        cfg.rows = vec![(1.0, 1.0), (2.0, 4.0)];
        let out = run(&cfg).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert!((v["value"].as_f64().unwrap() - 1.2).abs() < 1e-15);
        assert!((v["variance"].as_f64().unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn diagnose_reports_every_check() {
        let n = DistributionSpec::normal(0.0, 1.0);
        let out = run(&job(Command::Diagnose, vec![n.clone(), n])).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(v["proportionality"]["proportional"], json!(true));
        assert!(v["convolution_residual"].as_f64().unwrap() < 1e-6);
        assert!(v["information"]["bound"].is_number());
    }

    #[test]
    fn metadata_sits_next_to_the_batch() {
        assert_eq!(
            metadata_path(Path::new("/tmp/a.csv")),
            PathBuf::from("/tmp/a.csv.meta.json")
        );
    }
}
