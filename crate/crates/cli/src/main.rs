use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use fot_core::braess::{braess_ratio, sweep_transpose_m3, SubgraphPolicy, SweepGridJson};
use fot_core::dynamics::{certify_nash, validate_feasible};
use fot_core::equilibrium::{
    nash_flow_with, phases_to_csv, plotdata_csv, EngineOptions, RunReport, DEFAULT_PHASE_CAP,
};
use fot_core::flow::{flow_from_json, flow_to_json};
use fot_core::gen::{
    instantiate_m3_variant, integer_alphas, lemma1_alphas, make_m3_variants, make_mn, make_mn_transpose, random_dag,
    MnParams,
};
use fot_core::network::{instance_from_json, instance_to_json, network_from_json, network_to_json};
use fot_core::presets::{run_preset, Overrides, PresetId};
use fot_core::scalar::{decimal, int, parse_rational, Rational};
use fot_core::topology::classify;
use fot_core::{Error, Network};

#[derive(Parser)]
#[command(name = "fot", version, about = "Exact Nash flows over time and Braess ratios")]
struct Cli {
    /// Add non-authoritative decimal renderings with this many digits.
    #[arg(long, global = true, value_name = "K")]
    decimal: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the equilibrium of an instance phase by phase.
    Simulate {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_PHASE_CAP)]
        phase_cap: usize,
        /// Also write the computed flow over time as JSON.
        #[arg(long, value_name = "FILE")]
        flow: Option<PathBuf>,
    },
    /// Check a flow over time for feasibility and the Nash property.
    Validate {
        instance: PathBuf,
        flow: PathBuf,
        /// Fail unless the flow is also a Nash flow.
        #[arg(long)]
        nash: bool,
    },
    /// Braess's ratio by subnetwork enumeration.
    Braess {
        instance: PathBuf,
        #[arg(long, default_value_t = 16)]
        cap: usize,
        /// JSON list of edge-id lists to evaluate instead of all subsets.
        #[arg(long, value_name = "FILE")]
        subsets: Option<PathBuf>,
    },
    /// Braess's ratio over a parameter grid.
    Sweep {
        #[arg(long, value_enum)]
        preset: SweepPreset,
        #[arg(long, value_name = "FILE")]
        grid: Option<PathBuf>,
    },
    /// Topological minors, chain structure and series-parallelism.
    Classify { network: PathBuf },
    /// Generate instances and networks.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run a reproduction preset and check its claims exactly.
    Reproduce {
        #[arg(value_parser = parse_preset)]
        id: PresetId,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_parser = parse_q)]
        eps: Option<Rational>,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long = "T", value_parser = parse_q)]
        big_t: Option<Rational>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        edges: Option<usize>,
        /// Write the report here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Turn a `simulate` JSON report into CSV series for plotting.
    ExportPlotdata { run: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepPreset {
    TransposeM3,
}

#[derive(Subcommand)]
enum GenCommand {
    /// The instance A_n on M_n.
    Mn {
        #[arg(long)]
        n: usize,
        #[arg(long = "T", value_parser = parse_q, default_value = "1")]
        big_t: Rational,
        #[arg(long, value_parser = parse_q, default_value = "1/100")]
        eps: Rational,
        #[arg(long, default_value_t = 1)]
        j: u32,
        /// Use integer capacities.
        #[arg(long)]
        integer: bool,
        /// Emit the transposed instance.
        #[arg(long)]
        transpose: bool,
    },
    /// M3' as a network, or as an instance when --eps is given.
    M3prime(VariantArgs),
    /// M3'' as a network, or as an instance when --eps is given.
    M3doubleprime(VariantArgs),
    /// A random DAG with terminals v0 and the last node.
    Random {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct VariantArgs {
    #[arg(long = "T", value_parser = parse_q, default_value = "1")]
    big_t: Rational,
    #[arg(long, value_parser = parse_q)]
    eps: Option<Rational>,
    #[arg(long, default_value_t = 1)]
    j: u32,
}

fn parse_q(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_preset(s: &str) -> Result<PresetId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Assertion(String),
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) | Error::PhaseCap { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Outcome {
    fs::write(path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn is_rational(s: &str) -> bool {
    s.split_once('/').is_some_and(|(p, q)| {
        let p = p.strip_prefix('-').unwrap_or(p);
        !p.is_empty() && !q.is_empty() && p.bytes().chain(q.bytes()).all(|b| b.is_ascii_digit())
    })
}

fn collect_decimals(v: &Value, pointer: &mut String, digits: usize, out: &mut serde_json::Map<String, Value>) {
    match v {
        Value::String(s) if is_rational(s) => {
            if let Ok(q) = parse_rational(s) {
                out.insert(pointer.clone(), Value::String(decimal(&q, digits)));
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                let len = pointer.len();
                pointer.push_str(&format!("/{i}"));
                collect_decimals(item, pointer, digits, out);
                pointer.truncate(len);
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                let len = pointer.len();
                pointer.push('/');
                pointer.push_str(&k.replace('~', "~0").replace('/', "~1"));
                collect_decimals(item, pointer, digits, out);
                pointer.truncate(len);
            }
        }
        _ => {}
    }
}

/// Adds `decimal_non_authoritative`, mapping JSON pointers of every rational
/// string to a rounded decimal.
fn with_decimals(json: String, digits: Option<usize>) -> String {
    let Some(digits) = digits else { return json };
    let mut doc: Value = serde_json::from_str(&json).expect("own output parses");
    let mut table = serde_json::Map::new();
    collect_decimals(&doc, &mut String::new(), digits, &mut table);
    if let Value::Object(map) = &mut doc {
        map.insert("decimal_non_authoritative".into(), Value::Object(table));
    }
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Adds a `decimal_non_authoritative` column rendering the last column.
fn csv_with_decimals(csv: String, digits: Option<usize>) -> String {
    let Some(digits) = digits else { return csv };
    let mut out = String::new();
    for (i, line) in csv.lines().enumerate() {
        out.push_str(line);
        out.push(',');
        if i == 0 {
            out.push_str("decimal_non_authoritative");
        } else {
            let last = line.rsplit(',').next().unwrap_or("");
            if let Ok(q) = parse_rational(last) {
                out.push_str(&decimal(&q, digits));
            }
        }
        out.push('\n');
    }
    out
}

/// Writes to standard output; a closed pipe is not an error.
fn stdout_write(body: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(body.as_bytes()).and_then(|_| stdout.flush());
}

fn emit_json(json: String, digits: Option<usize>) {
    stdout_write(&(with_decimals(json, digits) + "\n"));
}

fn load_network(s: &str) -> Result<Network, Failure> {
    match network_from_json(s) {
        Ok(net) => Ok(net),
        Err(_) => Ok(instance_from_json(s)?.network().clone()),
    }
}

fn run(cli: Cli) -> Outcome {
    let digits = cli.decimal;
    match cli.command {
        Command::Simulate { instance, format, phase_cap, flow } => {
            let inst = instance_from_json(&read(&instance)?)?;
            let run = nash_flow_with(&inst, &EngineOptions { phase_cap, certify: false })?;
            if let Some(path) = flow {
                write(&path, &flow_to_json(&inst, &run.flow))?;
            }
            let report = RunReport::from_run(&run);
            match format {
                Format::Json => emit_json(report.to_json(), digits),
                Format::Csv => stdout_write(&csv_with_decimals(phases_to_csv(&report.phases), digits)),
            }
            Ok(())
        }
        Command::Validate { instance, flow, nash } => {
            let inst = instance_from_json(&read(&instance)?)?;
            let f = flow_from_json(&inst, &read(&flow)?)?;
            let feasible = validate_feasible(&inst, &f)?;
            let (is_nash, nash_report) = if feasible.ok { certify_nash(&inst, &f)? } else { (false, feasible.clone()) };
            let doc = serde_json::json!({
                "feasible": feasible.ok,
                "nash": is_nash,
                "feasibility": serde_json::from_str::<Value>(&feasible.to_json()).expect("json"),
                "nash_certificate": serde_json::from_str::<Value>(&nash_report.to_json()).expect("json"),
            });
            emit_json(serde_json::to_string_pretty(&doc).expect("json"), digits);
            if !feasible.ok {
                return Err(Failure::Assertion("flow is not feasible".into()));
            }
            if nash && !is_nash {
                return Err(Failure::Assertion("flow is not a Nash flow".into()));
            }
            Ok(())
        }
        Command::Braess { instance, cap, subsets } => {
            let inst = instance_from_json(&read(&instance)?)?;
            let policy = match subsets {
                Some(path) => {
                    let lists: Vec<BTreeSet<String>> =
                        serde_json::from_str(&read(&path)?).map_err(|e| Failure::Usage(format!("subsets: {e}")))?;
                    SubgraphPolicy::List(lists)
                }
                None => SubgraphPolicy::AllSubsets { cap },
            };
            let mut report = braess_ratio(&inst, &policy)?;
            report.instance_id = instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            emit_json(report.to_json(), digits);
            Ok(())
        }
        Command::Sweep { preset: SweepPreset::TransposeM3, grid } => {
            let grid = match grid {
                Some(path) => {
                    serde_json::from_str(&read(&path)?).map_err(|e| Failure::Usage(format!("grid: {e}")))?
                }
                None => SweepGridJson::default_transpose_m3(),
            };
            let report = sweep_transpose_m3(&grid)?;
            emit_json(report.to_json(), digits);
            if !report.failed.is_empty() {
                return Err(Failure::Internal(format!("points {:?} failed", report.failed)));
            }
            if report.paradox_found {
                return Err(Failure::Assertion(format!("paradox at points {:?}", report.candidates)));
            }
            Ok(())
        }
        Command::Classify { network } => {
            let net = load_network(&read(&network)?)?;
            emit_json(classify(&net)?.to_json(), digits);
            Ok(())
        }
        Command::Gen { what } => {
            let json = match what {
                GenCommand::Mn { n, big_t, eps, j, integer, transpose } => {
                    let alphas = if integer { integer_alphas(n, &eps, j)?.alphas } else { lemma1_alphas(n, &eps, j)? };
                    let p = MnParams::new(n, big_t, alphas)?;
                    instance_to_json(&if transpose { make_mn_transpose(&p)? } else { make_mn(&p)? })
                }
                GenCommand::M3prime(args) => variant(make_m3_variants().0, args)?,
                GenCommand::M3doubleprime(args) => variant(make_m3_variants().1, args)?,
                GenCommand::Random { nodes, edges, seed } => network_to_json(&random_dag(nodes, edges, seed)?),
            };
            stdout_write(&(json + "\n"));
            Ok(())
        }
        Command::Reproduce { id, n, eps, j, big_t, samples, seed, nodes, edges, out } => {
            let o = Overrides { n, eps, j, big_t, samples, seed, nodes, edges };
            let report = run_preset(id, &o)?;
            let json = with_decimals(report.to_json(), digits);
            match out {
                Some(path) => write(&path, &json)?,
                None => stdout_write(&(json + "\n")),
            }
            match report.first_failure() {
                Some(a) => Err(Failure::Assertion(format!("{}: {}", a.claim, a.witness))),
                None => Ok(()),
            }
        }
        Command::ExportPlotdata { run } => {
            let report: RunReport =
                serde_json::from_str(&read(&run)?).map_err(|e| Failure::Usage(format!("run report: {e}")))?;
            stdout_write(&csv_with_decimals(plotdata_csv(&report)?, digits));
            Ok(())
        }
    }
}

fn variant(net: Network, args: VariantArgs) -> Result<String, Failure> {
    Ok(match args.eps {
        Some(eps) => {
            let p = MnParams::new(3, args.big_t, lemma1_alphas(3, &eps, args.j)?)?;
            instance_to_json(&instantiate_m3_variant(&net, &p)?)
        }
        None if args.big_t == int(1) => network_to_json(&net),
        None => return Err(Failure::Usage("--T needs --eps".into())),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
