//! Command-line front end: `construct`, `verify`, `bm-audit` and `export`.

mod commands;
mod files;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::concentration::MassMethod;
use crate::counterexample::{DEFAULT_SCALE_CAP, DEFAULT_TARGET_C};
use crate::error::Error;

pub use files::{InstanceFile, SetFile};

#[derive(Debug, Parser)]
#[command(name = "annihilation", version, about = "Builds and audits concentration witnesses and shifted-lattice certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build one instance per level and the assembled pair.
    Construct,
    /// Recompute ratios, density profile, thinness and gap checks.
    Verify,
    /// Block certificates, averaged identity, E_r measures and Λ assembly.
    BmAudit,
    /// CSV plot data for the built instances.
    Export,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Direct,
    Modulated,
}

impl From<MethodArg> for MassMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => MassMethod::Auto,
            MethodArg::Direct => MassMethod::Direct,
            MethodArg::Modulated => MassMethod::Modulated,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Options {
    /// Inclusive level range, `a..b` or a single level.
    #[arg(long, global = true, default_value = "2..4", value_parser = parse_n_range)]
    pub n_range: NRange,
    /// Target ratio is `target_c / n`.
    #[arg(long, global = true, default_value_t = DEFAULT_TARGET_C)]
    pub target_c: f64,
    /// Largest scale N the search may reach.
    #[arg(long, global = true, default_value_t = DEFAULT_SCALE_CAP)]
    pub n_cap: u64,
    /// Divides the direct quadrature step.
    #[arg(long, global = true, default_value_t = 1)]
    pub grid_refinement: u32,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Auto)]
    pub mass_method: MethodArg,
    /// Defaults to the normalized length of the common gap of S.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Largest dyadic block index audited.
    #[arg(long, global = true, default_value_t = 20)]
    pub j_max: u32,
    #[arg(long, global = true, default_value_t = 100)]
    pub alpha_samples: usize,
    /// Shifts merged into Λ.
    #[arg(long, global = true, default_value_t = 4)]
    pub lambda_count: usize,
    /// Λ is listed on `[0, lambda_window)`.
    #[arg(long, global = true, default_value_t = 4096.0)]
    pub lambda_window: f64,
    /// Dense-sequence terms tried before Λ assembly gives up.
    #[arg(long, global = true, default_value_t = 256)]
    pub lambda_budget: u64,
    /// Set file for `bm-audit`; defaults to `<output>/q.json`.
    #[arg(long, global = true)]
    pub q_file: Option<PathBuf>,
    #[arg(long = "output", short = 'o', global = true, default_value = "out")]
    pub output_path: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NRange {
    pub lo: u32,
    pub hi: u32,
}

impl NRange {
    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }
}

fn parse_n_range(s: &str) -> Result<NRange, String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad level `{t}`: {e}"));
    let (lo, hi) = (parse(a)?, parse(b)?);
    if lo < 2 || hi > 40 || lo > hi {
        return Err(format!("level range {lo}..{hi} must satisfy 2 <= a <= b <= 40"));
    }
    Ok(NRange { lo, hi })
}

/// Everything a run depends on; its digest stamps every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(flatten)]
    pub options: Options,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let o = &self.options;
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(o.target_c > 0.0 && o.target_c.is_finite()) {
            return bad(format!("--target-c must be positive, got {}", o.target_c));
        }
        if o.grid_refinement == 0 {
            return bad("--grid-refinement must be at least 1".into());
        }
        if let Some(s) = o.sigma {
            if !(s > 0.0 && s < 1.0) {
                return bad(format!("--sigma must lie in (0, 1), got {s}"));
            }
        }
        if o.j_max > crate::uniqueness::MAX_BLOCK_INDEX {
            return bad(format!("--j-max must be at most {}", crate::uniqueness::MAX_BLOCK_INDEX));
        }
        if o.alpha_samples == 0 || o.lambda_count == 0 {
            return bad("--alpha-samples and --lambda-count must be positive".into());
        }
        if !(o.lambda_window > 0.0 && o.lambda_window <= 1e9) {
            return bad(format!("--lambda-window must lie in (0, 1e9], got {}", o.lambda_window));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Open { .. } => 2,
        _ => 1,
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let config = RunConfig { command: cli.command, options: cli.options };
    match execute(&config) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("check failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Summary of a command: informational lines and failed checks.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, Error> {
    config.validate()?;
    std::fs::create_dir_all(&config.options.output_path)?;
    match config.command {
        Command::Construct => commands::construct(config),
        Command::Verify => commands::verify(config),
        Command::BmAudit => commands::bm_audit(config),
        Command::Export => commands::export(config),
    }
}
