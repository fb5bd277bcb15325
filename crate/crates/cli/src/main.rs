use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mutual_assist::matcher::evaluate_all;
use mutual_assist::ontology::TaxonomyDocument;
use mutual_assist::registry::{events_to_jsonl, parse_scenario, replay};
use mutual_assist::sim::{SimParams, Simulation};
use mutual_assist::sweep::{rows_to_csv, run_sweep, SweepSpec};
use mutual_assist::{MatchVerdict, ServiceAdvertisement, ServiceRequest, Taxonomy, Timestamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "mutual-assist", version, about = "Service matching, coordination replay and community simulation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check a taxonomy file and list every structural problem.
    OntologyValidate { taxonomy: PathBuf },
    /// Evaluate one request against a list of advertisements.
    Match(MatchArgs),
    /// Event-log operations.
    #[command(subcommand)]
    Registry(RegistryCmd),
    /// Same as `registry replay`.
    RegistryReplay(ReplayArgs),
    /// Run one simulation.
    SimRun(SimArgs),
    /// Run a replicated parameter sweep.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
enum RegistryCmd {
    /// Replay a scenario file and print its event log as JSON lines.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// Taxonomy file; the shipped taxonomy when omitted.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    request: PathBuf,
    /// JSON array of advertisements.
    #[arg(long)]
    adverts: PathBuf,
    /// Current time for deadline checks.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    now: Timestamp,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    scenario: PathBuf,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    params: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    torus: bool,
    /// Directory for `report.json` and `steps.csv`; the report goes to
    /// standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// A sweep spec, or a JSON array of specs.
    spec: PathBuf,
    /// Overrides every spec's seed base.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    torus: bool,
    /// Output directory, one CSV per spec. A single spec prints its CSV to
    /// standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Output(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            _ => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn load_taxonomy(path: Option<&Path>) -> Result<Taxonomy, CliError> {
    let Some(path) = path else {
        return Ok(Taxonomy::builtin());
    };
    let doc: TaxonomyDocument = parse(path, &read(path)?)?;
    Taxonomy::from_document(&doc).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn ontology_validate(path: &Path) -> Result<(), CliError> {
    let doc: TaxonomyDocument = parse(path, &read(path)?)?;
    let problems = doc.diagnose();
    if problems.is_empty() {
        println!("{}: ok ({} concepts, {} edges)", path.display(), doc.concepts.len(), doc.edges.len());
        return Ok(());
    }
    for p in &problems {
        eprintln!("{}: {p}", path.display());
    }
    Err(invalid(format!("{} problem(s) found", problems.len())))
}

#[derive(Serialize)]
struct MatchLine<'a> {
    advertisement: &'a str,
    #[serde(flatten)]
    verdict: MatchVerdict,
}

fn run_match(args: &MatchArgs) -> Result<(), CliError> {
    let taxonomy = load_taxonomy(args.taxonomy.as_deref())?;
    let request: ServiceRequest = parse(&args.request, &read(&args.request)?)?;
    let raw = read(&args.adverts)?;
    let adverts: Vec<ServiceAdvertisement> = if raw.trim().is_empty() {
        Vec::new()
    } else {
        parse(&args.adverts, &raw)?
    };
    request.validate(&taxonomy).map_err(invalid)?;
    for adv in &adverts {
        adv.validate(&taxonomy).map_err(invalid)?;
    }
    let ranked = evaluate_all(&taxonomy, &request, &adverts, args.now).map_err(invalid)?;
    let mut out = io::stdout().lock();
    for (adv, verdict) in &ranked {
        let line = MatchLine {
            advertisement: &adv.id,
            verdict: *verdict,
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("verdicts serialize"))?;
    }
    let accepted = ranked.iter().filter(|(_, v)| v.overall).count();
    eprintln!("{accepted} of {} advertisement(s) match", ranked.len());
    Ok(())
}

fn registry_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let taxonomy = load_taxonomy(args.taxonomy.as_deref())?;
    let commands = parse_scenario(&read(&args.scenario)?).map_err(|e| CliError::Parse {
        path: args.scenario.clone(),
        message: e.to_string(),
    })?;
    let registry = replay(taxonomy, commands).map_err(invalid)?;
    io::stdout().lock().write_all(events_to_jsonl(registry.events()).as_bytes())?;
    Ok(())
}

fn sim_run(args: &SimArgs) -> Result<(), CliError> {
    let mut params: SimParams = parse(&args.params, &read(&args.params)?)?;
    if let Some(seed) = args.seed {
        params.seed = seed;
    }
    if let Some(steps) = args.steps {
        params.max_steps = steps;
    }
    if let Some(radius) = args.radius {
        params.radius = radius;
    }
    params.torus |= args.torus;

    let mut sim = Simulation::new(params.clone()).map_err(invalid)?;
    for _ in 0..params.max_steps {
        sim.step();
    }
    let report = sim.report();
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Write {
                path: dir.clone(),
                source,
            })?;
            write(&dir.join("report.json"), &(report.to_json() + "\n"))?;
            write(&dir.join("steps.csv"), &report.series_csv())?;
        }
        None => writeln!(io::stdout().lock(), "{}", report.to_json())?,
    }
    eprintln!("{}", report.summary());
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    One(Box<SweepSpec>),
    Many(Vec<SweepSpec>),
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let (mut specs, single) = match parse::<SpecFile>(&args.spec, &read(&args.spec)?)? {
        SpecFile::One(spec) => (vec![*spec], true),
        SpecFile::Many(specs) => (specs, false),
    };
    for spec in &mut specs {
        if let Some(seed) = args.seed {
            spec.seed_base = seed;
        }
        if let Some(steps) = args.steps {
            spec.base.max_steps = steps;
        }
        if let Some(radius) = args.radius {
            spec.base.radius = radius;
        }
        spec.base.torus |= args.torus;
        spec.validate().map_err(invalid)?;
    }
    if !single && args.out.is_none() {
        return Err(invalid("a file with several sweep specs needs --out"));
    }

    let stem = args
        .spec
        .file_stem()
        .map_or_else(|| "sweep".to_string(), |s| s.to_string_lossy().into_owned());
    for (i, spec) in specs.iter().enumerate() {
        let rows = run_sweep(spec).map_err(invalid)?;
        let csv = rows_to_csv(&rows);
        let name = match (&spec.label, single) {
            (_, true) => format!("{stem}.csv"),
            (Some(label), false) => format!("{stem}.{label}.csv"),
            (None, false) => format!("{stem}.{i}.csv"),
        };
        match &args.out {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.clone(),
                    source,
                })?;
                write(&dir.join(&name), &csv)?;
                eprintln!("{name}: {} rows x {} replicates", rows.len(), spec.replicates);
            }
            None => io::stdout().lock().write_all(csv.as_bytes())?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::OntologyValidate { taxonomy } => ontology_validate(taxonomy),
        Cmd::Match(args) => run_match(args),
        Cmd::Registry(RegistryCmd::Replay(args)) | Cmd::RegistryReplay(args) => registry_replay(args),
        Cmd::SimRun(args) => sim_run(args),
        Cmd::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
