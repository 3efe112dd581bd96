//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::net::{to_canonical, Trace};
use crate::protocol::{run_auction, Transport};
use crate::report::{
    export_csv, ntp_attack, render_tiebreak, tiebreak, verify_results, CsvKind, ResultsDocument,
};
use crate::scenario::{bundled, ScenarioConfig, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "knapsack-auction", version, about = "Knapsack sealed-bid auction simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file (or a bundled one: example1, example2, table1).
    Run(RunArgs),
    /// Resolve ties in a CSV of auction_id,price,bidder,timestamp rows.
    Tiebreak {
        table: PathBuf,
        #[arg(long, default_value_t = 0)]
        retry_limit: u32,
    },
    /// Evaluate the delayed-response clock synchronization attack.
    NtpAttack {
        #[arg(long, default_value_t = 30_000)]
        delay_ms: u64,
    },
    /// Export bid timestamps or bid counts per price from a trace.
    ExportCsv {
        trace: PathBuf,
        #[arg(long, value_enum)]
        kind: CsvKind,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a results document against its trace.
    Verify { results: PathBuf, trace: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Require q to exceed the code sum.
    #[arg(long, conflicts_with = "paper_compat")]
    pub strict: bool,
    /// Accept any prime q, as the reference examples do.
    #[arg(long)]
    pub paper_compat: bool,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "sim")]
    pub transport: TransportArg,
    /// Also write a CSV of this kind next to the trace.
    #[arg(long, value_enum)]
    pub csv: Option<CsvKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TransportArg {
    Sim,
    Stream,
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Io = 1,
    Parse = 2,
    Validation = 3,
    Failure = 4,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    fn new(status: Status, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::Parse(_) => Status::Parse,
            ScenarioError::Invalid(_) => Status::Validation,
        };
        CliError::new(status, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::new(Status::Io, format!("{}: {e}", path.display())))
}

/// Loads a scenario from a path, falling back to the bundled set by name.
pub fn load_scenario(name: &str) -> Result<(String, String), CliError> {
    let path = Path::new(name);
    if path.exists() {
        let stem = path.file_stem().map_or(name.into(), |s| s.to_string_lossy().into_owned());
        return Ok((stem, read(path)?));
    }
    match bundled(name) {
        Some(text) => Ok((name.to_owned(), text.to_owned())),
        None => Err(CliError::new(Status::Io, format!("{name}: no such file or bundled scenario"))),
    }
}

/// Runs a scenario and writes `results.json`, `trace.jsonl` and the optional
/// CSV under `out_dir`. Returns the results and what was printed.
pub fn cmd_run(args: &RunArgs) -> Result<(ResultsDocument, String), CliError> {
    let (name, text) = load_scenario(&args.scenario)?;
    let mut scenario: ScenarioConfig = serde_json::from_str(&text).map_err(ScenarioError::from)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if args.strict {
        scenario.auction.strict_modulus = true;
    }
    if args.paper_compat {
        scenario.auction.strict_modulus = false;
    }
    scenario.validate()?;
    let transport = match args.transport {
        TransportArg::Sim => Transport::Sim,
        TransportArg::Stream => Transport::Stream,
    };
    let report = run_auction(&scenario.to_run_spec(transport))
        .map_err(|e| CliError::new(Status::Validation, e.to_string()))?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::new(Status::Io, format!("{}: {e}", args.out_dir.display())))?;
    let trace_file = "trace.jsonl";
    let doc = ResultsDocument::from_report(&name, &scenario.auction.auction_id, scenario.seed, &report, trace_file);
    write(&args.out_dir.join(trace_file), &report.trace.to_jsonl())?;
    let mut json = to_canonical(&doc).map_err(|e| CliError::new(Status::Io, e.to_string()))?;
    json.push('\n');
    write(&args.out_dir.join("results.json"), &json)?;
    if let Some(kind) = args.csv {
        let csv = export_csv(&report.trace, kind).map_err(|e| CliError::new(Status::Io, e.to_string()))?;
        write(&args.out_dir.join(csv_name(kind)), &csv)?;
    }

    let mut out = String::new();
    if let (Some(flags), Some(price)) = (&doc.flags, doc.winning_price) {
        out.push_str(&format!("flags {flags}\nwinning price {price}\n"));
        let ranked: Vec<String> = doc.ranked_prices.iter().map(|p| p.to_string()).collect();
        out.push_str(&format!("ranked prices {}\n", ranked.join(", ")));
        out.push_str(&format!("winner {}\n", doc.winner_id.as_deref().unwrap_or("unclaimed")));
    }
    if let Some(f) = &doc.failure {
        out.push_str(&format!("failure: {f}\n"));
    }
    Ok((doc, out))
}

fn csv_name(kind: CsvKind) -> &'static str {
    match kind {
        CsvKind::Timestamps => "timestamps.csv",
        CsvKind::BidsVsPrices => "bids_vs_prices.csv",
    }
}

/// Executes a command; returns what to print and the exit status.
pub fn execute(cli: &Cli) -> Result<(String, Status), CliError> {
    match &cli.command {
        Command::Run(args) => {
            let (doc, out) = cmd_run(args)?;
            let status = if doc.succeeded() { Status::Success } else { Status::Failure };
            Ok((out, status))
        }
        Command::Tiebreak { table, retry_limit } => {
            let text = read(table)?;
            let auctions =
                tiebreak(&text, *retry_limit).map_err(|e| CliError::new(Status::Parse, e.to_string()))?;
            Ok((render_tiebreak(&auctions), Status::Success))
        }
        Command::NtpAttack { delay_ms } => {
            let r = ntp_attack(*delay_ms);
            let out = format!(
                "T1={} T2={} T3={} T4={}\npaper_error_bound (T4-T3)/2 = {} ms\nstandard_offset ((T2-T1)+(T3-T4))/2 = {} ms\n",
                r.t1, r.t2, r.t3, r.t4, r.paper_error_bound_ms, r.standard_offset_ms
            );
            Ok((out, Status::Success))
        }
        Command::ExportCsv { trace, kind, out } => {
            let trace = Trace::from_jsonl(&read(trace)?)
                .map_err(|e| CliError::new(Status::Parse, format!("trace: {e}")))?;
            let csv = export_csv(&trace, *kind).map_err(|e| CliError::new(Status::Io, e.to_string()))?;
            match out {
                Some(path) => {
                    write(path, &csv)?;
                    Ok((String::new(), Status::Success))
                }
                None => Ok((csv, Status::Success)),
            }
        }
        Command::Verify { results, trace } => {
            let doc: ResultsDocument = serde_json::from_str(&read(results)?)
                .map_err(|e| CliError::new(Status::Parse, format!("results: {e}")))?;
            let trace = Trace::from_jsonl(&read(trace)?)
                .map_err(|e| CliError::new(Status::Parse, format!("trace: {e}")))?;
            let problems = verify_results(&doc, &trace);
            if problems.is_empty() {
                Ok(("results match the trace\n".into(), Status::Success))
            } else {
                Err(CliError::new(Status::Validation, problems.join("\n")))
            }
        }
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    match execute(&cli) {
        Ok((out, status)) => {
            print!("{out}");
            status.into()
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.status.into()
        }
    }
}
