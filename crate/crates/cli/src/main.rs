//! Batch front-end: reads a JSON config, runs one pipeline, writes CSV or JSON
//! into the output directory and prints a one-line summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use xprob_core::apps::{run_boomerang, run_species, OpinionConfig, SpeciesConfig};
use xprob_core::{
    conjugacy_residual, core, measure_book_search, run_discovery, validate_capacity, CredalRecord, DiscoveryProcess,
    ElicitedTable, Envelope, Error, Event, ExtendedMeasure, Label, MeasureRecord, PriceTable, Result, Split, StateSpace,
    ValidationMode, CORE_CAP, ELICITED_CAP, EXACT_TOL,
};

#[derive(Parser, Debug)]
#[command(name = "xprob", version, about = "Extended probability toolkit, batch mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input JSON for the chosen command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Reject inputs that fail an axiom (default).
    #[arg(long, global = true, conflicts_with = "relaxed")]
    strict: bool,

    /// Load inputs that fail an axiom and report the residuals.
    #[arg(long, global = true)]
    relaxed: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check a measure against the axioms.
    Validate,
    /// Simulate state discovery from an oracle.
    Discover,
    /// Lower/upper envelopes of a credal set and their capacity checks.
    Envelopes,
    /// Core of a lower envelope, with a certificate.
    Core,
    /// Species sampling with a family of geometric priors.
    Species,
    /// Persuasion dynamics with credibility weights.
    Boomerang,
    /// Dutch-book search for a measure, a price table or an elicited envelope.
    Coherence,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

struct Run {
    config: PathBuf,
    seed: Option<u64>,
    out: PathBuf,
    format: Format,
    mode: ValidationMode,
}

/// What a command reports back: the summary line and the exit code.
struct Outcome {
    summary: String,
    code: u8,
}

impl Outcome {
    fn ok(summary: String) -> Outcome {
        Outcome { summary, code: 0 }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::RestartRequired(_) => 3,
        Error::Io(_) => 4,
        Error::NumericalFailure(_) => 1,
        _ => 2,
    }
}

fn init_logging() {
    let level = match std::env::var("XPROB_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let run = Run {
        config,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
        mode: if cli.relaxed { ValidationMode::Relaxed } else { ValidationMode::Strict },
    };
    match dispatch(cli.command, &run) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(command: Command, run: &Run) -> Result<Outcome> {
    let input = fs::read_to_string(&run.config).map_err(|e| Error::Io(format!("{}: {e}", run.config.display())))?;
    fs::create_dir_all(&run.out).map_err(|e| Error::Io(format!("{}: {e}", run.out.display())))?;
    log::info!("running {command:?} on {}", run.config.display());
    match command {
        Command::Validate => validate(&input, run),
        Command::Discover => discover(&input, run),
        Command::Envelopes => envelopes(&input, run),
        Command::Core => core_cmd(&input, run),
        Command::Species => species(&input, run),
        Command::Boomerang => boomerang(&input, run),
        Command::Coherence => coherence(&input, run),
    }
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn json_bytes(mut s: String) -> Vec<u8> {
    s.push('\n');
    s.into_bytes()
}

fn validate(input: &str, run: &Run) -> Result<Outcome> {
    let record: MeasureRecord = serde_json::from_str(input)?;
    let (_, report) = record.into_measure(ValidationMode::Relaxed)?;
    let bytes = match run.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes(serde_json::to_string_pretty(&report)?),
    };
    write_out(&run.out, &format!("validation.{}", run.format.ext()), &bytes)?;
    let verdict = if report.passed() { "valid" } else { "invalid" };
    let code = if !report.passed() && run.mode == ValidationMode::Strict { 2 } else { 0 };
    Ok(Outcome { summary: format!("{verdict}: {}", report.summary()), code })
}

fn default_max_steps() -> usize {
    10_000
}

/// Config of the `discover` command.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscoverConfig {
    labels: Vec<Label>,
    /// Regular measure over all labels.
    oracle: Vec<f64>,
    /// Initially known states.
    actual: Vec<Label>,
    /// States that actually occur; all labels when absent.
    #[serde(default)]
    true_space: Option<Vec<Label>>,
    #[serde(default)]
    replacement: bool,
    #[serde(default)]
    schedule: Option<Vec<Label>>,
    #[serde(default = "default_max_steps")]
    max_steps: usize,
    #[serde(default)]
    seed: u64,
}

fn discover(input: &str, run: &Run) -> Result<Outcome> {
    let cfg: DiscoverConfig = serde_json::from_str(input)?;
    let space = Arc::new(StateSpace::explicit(cfg.labels)?);
    let oracle = ExtendedMeasure::new(Arc::clone(&space), cfg.oracle)?;
    let split0 = Split::new(space.event(&cfg.actual)?)?;
    let true_space = match &cfg.true_space {
        Some(labels) => space.event(labels)?,
        None => Event::full(space.len()),
    };
    let process =
        DiscoveryProcess { true_space, replacement: cfg.replacement, seed: run.seed.unwrap_or(cfg.seed), schedule: cfg.schedule };
    let traj = run_discovery(&oracle, &split0, &process, cfg.max_steps)?;
    let bytes = match run.format {
        Format::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes(traj.to_json()?),
    };
    write_out(&run.out, &format!("trajectory.{}", run.format.ext()), &bytes)?;
    let last = traj.d_etv.last().copied().unwrap_or(f64::NAN);
    Ok(Outcome::ok(format!(
        "steps {}, final d_etv {last}, scenario {}, agent scenario {}",
        traj.steps(),
        traj.scenario.as_str(),
        traj.agent_scenario.as_str()
    )))
}

fn envelopes(input: &str, run: &Run) -> Result<Outcome> {
    let record: CredalRecord = serde_json::from_str(input)?;
    let env = Envelope::Derived(record.into_set()?);
    let table = ElicitedTable::from_envelope(&env)?;
    let mut report = validate_capacity(&env, ELICITED_CAP)?;
    let conj = conjugacy_residual(&env, ELICITED_CAP)?;
    report.push("conjugacy", conj <= EXACT_TOL, conj, "");

    let (table_bytes, report_bytes) = match run.format {
        Format::Csv => {
            let mut t = Vec::new();
            table.write_csv(&mut t)?;
            let mut r = Vec::new();
            report.write_csv(&mut r)?;
            (t, r)
        }
        Format::Json => (json_bytes(table.to_json()?), json_bytes(serde_json::to_string_pretty(&report)?)),
    };
    write_out(&run.out, &format!("envelopes.{}", run.format.ext()), &table_bytes)?;
    write_out(&run.out, &format!("capacity.{}", run.format.ext()), &report_bytes)?;
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let verdict = if failed.is_empty() { "all checks pass".to_owned() } else { format!("failed: {}", failed.join(", ")) };
    Ok(Outcome::ok(format!("{} events, {verdict}, conjugacy residual {conj}", 1usize << env.len())))
}

/// Credal sets carry a `members` key; anything else is read as an elicited
/// table.
fn load_envelope(value: &serde_json::Value, input: &str) -> Result<Envelope> {
    if value.get("members").is_some() {
        let record: CredalRecord = serde_json::from_value(value.clone())?;
        Ok(Envelope::Derived(record.into_set()?))
    } else {
        Ok(Envelope::Elicited(ElicitedTable::from_json(input, None)?))
    }
}

fn core_summary(env: &Envelope, run: &Run, file: &str) -> Result<Outcome> {
    let report = core(env, CORE_CAP)?;
    write_out(&run.out, file, &json_bytes(report.to_json(env.space())?))?;
    Ok(Outcome::ok(format!(
        "core {}, {}",
        if report.nonempty { "nonempty" } else { "empty" },
        if report.coherent { "coherent" } else { "Dutch book found" }
    )))
}

fn core_cmd(input: &str, run: &Run) -> Result<Outcome> {
    let value: serde_json::Value = serde_json::from_str(input)?;
    let env = load_envelope(&value, input)?;
    core_summary(&env, run, "core.json")
}

fn species(input: &str, run: &Run) -> Result<Outcome> {
    let mut cfg: SpeciesConfig = serde_json::from_str(input)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    let result = run_species(&cfg)?;
    match run.format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.table.write_csv(&mut buf)?;
            write_out(&run.out, "intervals.csv", &buf)?;
        }
        Format::Json => {
            write_out(&run.out, "species.json", &json_bytes(serde_json::to_string_pretty(&result.summary(&cfg))?))?;
        }
    }
    Ok(Outcome::ok(format!(
        "discovered {} species, scenario {}, {} interval rows",
        result.discovered.len(),
        result.scenario.as_str(),
        result.table.rows.len()
    )))
}

fn boomerang(input: &str, run: &Run) -> Result<Outcome> {
    let mut cfg: OpinionConfig = serde_json::from_str(input)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    let result = run_boomerang(&cfg)?;
    let bytes = match run.format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes(serde_json::to_string_pretty(&result.rows())?),
    };
    write_out(&run.out, &format!("boomerang.{}", run.format.ext()), &bytes)?;
    let worst = result.steps.iter().map(|s| s.identity_residual).fold(0.0, f64::max);
    let regular = result.steps.last().map(|s| s.influenced.is_regular()).unwrap_or(false);
    Ok(Outcome::ok(format!(
        "{} steps, max identity residual {worst}, final opinion {}",
        result.steps.len(),
        if regular { "regular" } else { "not regular" }
    )))
}

fn coherence(input: &str, run: &Run) -> Result<Outcome> {
    let value: serde_json::Value = serde_json::from_str(input)?;
    if value.get("atoms").is_some() {
        let record: MeasureRecord = serde_json::from_value(value)?;
        let (p, _) = record.into_measure(run.mode)?;
        let found = measure_book_search(&p, p.len())?;
        write_out(&run.out, "coherence.json", &json_bytes(found.to_json(p.space())?))?;
        return Ok(Outcome::ok(search_summary(found.coherent(), found.lp_optimum)));
    }
    if value.get("prices").is_some() {
        let table: PriceTable = serde_json::from_value(value)?;
        let (space, found) = table.search()?;
        write_out(&run.out, "coherence.json", &json_bytes(found.to_json(&space)?))?;
        return Ok(Outcome::ok(search_summary(found.coherent(), found.lp_optimum)));
    }
    let env = load_envelope(&value, input)?;
    core_summary(&env, run, "coherence.json")
}

fn search_summary(coherent: bool, optimum: f64) -> String {
    if coherent {
        format!("coherent, LP optimum {optimum}")
    } else {
        format!("Dutch book found, LP optimum {optimum}")
    }
}
