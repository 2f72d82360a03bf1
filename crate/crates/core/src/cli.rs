//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a flat `key = value` file whose
//! keys are the long flag names. Flags given on the command line win over
//! the file, and the file wins over built-in defaults. `HISMP_SEED`, when
//! set, replaces the built-in default seed.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{ActivationMode, SimConfig};
use crate::engine::simulate;
use crate::experiment::{
    default_m_values, paper_presets, run_sweep, write_csv, SweepSpec, DEFAULT_MALES, DEFAULT_REPETITIONS,
};
use crate::oracle::MAX_ORACLE_SIZE;
use crate::verify::{engine_matching, verify_instance, verify_suite, EngineFn};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SEED_ENV: &str = "HISMP_SEED";

#[derive(Debug, Parser)]
#[command(name = "hismp", version, about = "Stable marriage simulator with partially active proposers on both sides")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one matching and print a summary.
    Run(RunArgs),
    /// Sweep female group size over (alpha, beta) pairs and write a CSV.
    Sweep(SweepArgs),
    /// Write extremes.csv, case1.csv, case2.csv and case3.csv.
    PaperFigures(FiguresArgs),
    /// Check the engine against brute-force enumeration on small markets.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of males [default: 1000]
    #[arg(long)]
    pub males: Option<usize>,
    /// Number of females [default: same as --males]
    #[arg(long)]
    pub females: Option<usize>,
    /// Active fraction of females, in [0, 1] [default: 0]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Active fraction of males, in [0, 1] [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Instance seed [default: $HISMP_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// bernoulli or exact [default: bernoulli]
    #[arg(long)]
    pub activation: Option<String>,
    /// Flat key = value file with defaults for the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of males [default: 1000]
    #[arg(long)]
    pub males: Option<usize>,
    /// Comma-separated female sizes, strictly increasing [default: 0.1N, 0.2N, ..., 2.0N]
    #[arg(long)]
    pub females: Option<String>,
    /// Comma-separated alpha:beta pairs [default: 0:1]
    #[arg(long)]
    pub pairs: Option<String>,
    /// Repetitions per grid point [default: 50]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed [default: $HISMP_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// bernoulli or exact [default: bernoulli]
    #[arg(long)]
    pub activation: Option<String>,
    /// Worker threads, 0 = all logical CPUs [default: 0]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output CSV path [default: sweep.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value file with defaults for the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    /// Number of males; female sizes run 0.1N..2.0N [default: 1000]
    #[arg(long)]
    pub scale: Option<usize>,
    /// Repetitions per grid point [default: 50]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Master seed shared by all four presets [default: $HISMP_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// bernoulli or exact [default: bernoulli]
    #[arg(long)]
    pub activation: Option<String>,
    /// Worker threads, 0 = all logical CPUs [default: 0]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for the four CSV files [default: .]
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Flat key = value file with defaults for the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Random instances per size [default: 200]
    #[arg(long)]
    pub instances: Option<usize>,
    /// Largest market size checked, at most 8 [default: 6]
    #[arg(long = "max-size")]
    pub max_size: Option<usize>,
    /// Master seed [default: $HISMP_SEED, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replay a single instance seed at --max-size instead of the suite
    #[arg(long)]
    pub replay: Option<u64>,
    /// Flat key = value file with defaults for the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Values from a `--config` file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            let key = key.trim().trim_start_matches("--");
            if !allowed.contains(&key) {
                return Err(format!("line {}: unknown key '{key}'", n + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn load(path: Option<&Path>, allowed: &[&str]) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text, allowed).map_err(|e| usage(format!("{}: {e}", p.display())))
            }
        }
    }

    /// Flag value if given, else the file's value for `key`.
    fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values.get(key).map(|v| v.parse::<T>().map_err(|e| usage(format!("{key} = {v}: {e}")))).transpose()
    }
}

fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|e| usage(format!("{SEED_ENV}={v}: {e}"))),
        Err(_) => Ok(0),
    }
}

fn parse_activation(s: Option<String>) -> Result<ActivationMode, CliError> {
    s.map_or(Ok(ActivationMode::default()), |s| s.parse().map_err(usage))
}

pub fn parse_list<T>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e| usage(format!("bad {what} '{x}': {e}"))))
        .collect()
}

pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|pair| {
            let (a, b) = pair.split_once(':').ok_or_else(|| usage(format!("pair '{pair}' is not alpha:beta")))?;
            let a = a.trim().parse::<f64>().map_err(|e| usage(format!("bad alpha in '{pair}': {e}")))?;
            let b = b.trim().parse::<f64>().map_err(|e| usage(format!("bad beta in '{pair}': {e}")))?;
            Ok((a, b))
        })
        .collect()
}

pub fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ConfigFile::load(args.config.as_deref(), &["males", "females", "alpha", "beta", "seed", "activation"])?;
    let males = file.pick(args.males, "males")?.unwrap_or(DEFAULT_MALES);
    let females = file.pick(args.females, "females")?.unwrap_or(males);
    let alpha = file.pick(args.alpha, "alpha")?.unwrap_or(0.0);
    let beta = file.pick(args.beta, "beta")?.unwrap_or(1.0);
    let seed = match file.pick(args.seed, "seed")? {
        Some(s) => s,
        None => default_seed()?,
    };
    let mode = parse_activation(file.pick(args.activation, "activation")?)?;
    let config = SimConfig::new(males, females, alpha, beta, seed).map_err(usage)?.with_activation(mode);

    let r = simulate(&config);
    let report = format!(
        "males               {males}\n\
         females             {females}\n\
         alpha               {alpha:.6}\n\
         beta                {beta:.6}\n\
         seed                {seed}\n\
         activation          {mode}\n\
         mean_male_energy    {:.6}\n\
         mean_female_energy  {:.6}\n\
         single_males        {}\n\
         single_females      {}\n\
         blocking_pairs      {}\n\
         proposal_events     {}\n",
        r.mean_male_energy, r.mean_female_energy, r.single_males, r.single_females, r.blocking_pairs, r.proposal_events
    );
    out.write_all(report.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_sweep(spec: &SweepSpec, workers: usize, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let rows = run_sweep(spec, workers).map_err(usage)?;
    let file =
        fs::File::create(path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    write_csv(&rows, std::io::BufWriter::new(file))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    writeln!(out, "wrote {} rows to {} in {:.1?}", rows.len(), path.display(), started.elapsed())
        .map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_sweep(args: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = ConfigFile::load(
        args.config.as_deref(),
        &["males", "females", "pairs", "reps", "seed", "activation", "workers", "out"],
    )?;
    let n_males = file.pick(args.males, "males")?.unwrap_or(DEFAULT_MALES);
    let m_values = match file.pick(args.females, "females")? {
        Some(s) => parse_list(&s, "female size")?,
        None => default_m_values(n_males),
    };
    let configs = match file.pick(args.pairs, "pairs")? {
        Some(s) => parse_pairs(&s)?,
        None => vec![(0.0, 1.0)],
    };
    let spec = SweepSpec {
        n_males,
        m_values,
        configs,
        repetitions: file.pick(args.reps, "reps")?.unwrap_or(DEFAULT_REPETITIONS),
        master_seed: match file.pick(args.seed, "seed")? {
            Some(s) => s,
            None => default_seed()?,
        },
        activation_mode: parse_activation(file.pick(args.activation, "activation")?)?,
    };
    spec.validate().map_err(usage)?;
    let workers = file.pick(args.workers, "workers")?.unwrap_or(0);
    let path = file.pick(args.out, "out")?.unwrap_or_else(|| PathBuf::from("sweep.csv"));
    write_sweep(&spec, workers, &path, out)
}

pub fn cmd_paper_figures(args: FiguresArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file =
        ConfigFile::load(args.config.as_deref(), &["scale", "reps", "seed", "activation", "workers", "out-dir"])?;
    let scale = file.pick(args.scale, "scale")?.unwrap_or(DEFAULT_MALES);
    let reps = file.pick(args.reps, "reps")?.unwrap_or(DEFAULT_REPETITIONS);
    let seed = match file.pick(args.seed, "seed")? {
        Some(s) => s,
        None => default_seed()?,
    };
    let mode = parse_activation(file.pick(args.activation, "activation")?)?;
    let workers = file.pick(args.workers, "workers")?.unwrap_or(0);
    let dir = file.pick(args.out_dir, "out-dir")?.unwrap_or_else(|| PathBuf::from("."));
    if !dir.is_dir() {
        return Err(CliError::Runtime(format!("output directory {} does not exist", dir.display())));
    }
    for preset in paper_presets() {
        let mut spec = SweepSpec::new(scale, preset.configs, reps, seed);
        spec.activation_mode = mode;
        spec.validate().map_err(usage)?;
        write_sweep(&spec, workers, &dir.join(format!("{}.csv", preset.name)), out)?;
    }
    Ok(())
}

pub fn cmd_verify(args: VerifyArgs, out: &mut dyn Write, engine: EngineFn) -> Result<(), CliError> {
    let file = ConfigFile::load(args.config.as_deref(), &["instances", "max-size", "seed", "replay"])?;
    let instances = file.pick(args.instances, "instances")?.unwrap_or(200);
    let max_size = file.pick(args.max_size, "max-size")?.unwrap_or(6);
    let seed = match file.pick(args.seed, "seed")? {
        Some(s) => s,
        None => default_seed()?,
    };
    let io_err = |e: std::io::Error| CliError::Runtime(e.to_string());

    if !(2..=MAX_ORACLE_SIZE).contains(&max_size) {
        return Err(usage(format!("--max-size must be between 2 and {MAX_ORACLE_SIZE} (got {max_size})")));
    }
    if let Some(replay) = file.pick(args.replay, "replay")? {
        return match verify_instance(max_size, replay, engine) {
            Ok(()) => writeln!(out, "size {max_size} seed {replay}: pass").map_err(io_err),
            Err(reason) => Err(CliError::Runtime(format!("size {max_size} seed {replay}: {reason}"))),
        };
    }

    let report = verify_suite(instances, max_size, seed, engine).map_err(usage)?;
    out.write_all(report.table().as_bytes()).map_err(io_err)?;
    if report.all_passed() {
        writeln!(out, "all checks passed").map_err(io_err)
    } else {
        for f in &report.failures {
            writeln!(out, "FAIL {f}").map_err(io_err)?;
        }
        Err(CliError::Runtime(format!(
            "{} instance(s) failed; replay with: hismp verify --max-size <size> --replay <seed>",
            report.failures.len()
        )))
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::PaperFigures(a) => cmd_paper_figures(a, out),
        Command::Verify(a) => cmd_verify(a, out, engine_matching),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
