use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use disksat::formula::{decode_assignment, CnfFormula};
use disksat::machine::{MachineConfig, PhotocellMode, RunReport};
use disksat::mask::DEFAULT_N_MAX;
use disksat::random::{random_cnf, seeded, RandomCnfParams};
use disksat::saldo::{precision_report, DEFAULT_ANGLE_THRESHOLD};
use disksat::word::{emit_dimacs, encode_word, parse_input, InputFormat};
use disksat::{EngineConfig, EngineRegistry, Outcome, Verdict};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;

#[derive(Parser)]
#[command(
    name = "disksat",
    version,
    about = "Rotating-disk SAT machine simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the input and print a summary.
    Parse(ParseArgs),
    /// Decide satisfiability. Exits 10 on SAT, 20 on UNSAT.
    Solve(SolveArgs),
    /// List satisfying assignments.
    #[command(alias = "enumerate")]
    Models(ModelsArgs),
    /// Print the machine's step trace.
    Trace(TraceArgs),
    /// Convert between word and DIMACS text.
    Convert(ConvertArgs),
    /// Print the cost ledger and precision report.
    Report(ReportArgs),
    /// Generate a seeded random CNF instance.
    Random(RandomArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input file; stdin when omitted or `-`.
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    format: FormatArg,
    /// Declare this many variables (at least the highest index used).
    #[arg(long)]
    vars: Option<u32>,
}

#[derive(Args)]
struct EngineArgs {
    /// One of: ldo, mask, oracle, saldo.
    #[arg(long, default_value = "ldo")]
    engine: String,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long, value_enum, default_value_t = PhotocellArg::Scan)]
    photocell: PhotocellArg,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Args)]
struct ModelsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Stop listing after this many models.
    #[arg(long, default_value_t = 1024)]
    max_models: usize,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Include per-command sub-steps.
    #[arg(long)]
    detail: bool,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Target format; defaults to whichever the input is not.
    #[arg(long, value_enum)]
    to: Option<TextFormat>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_enum, default_value_t = ReportOutput::Text)]
    output: ReportOutput,
    /// Field angle in radians below which a warning is issued.
    #[arg(long, default_value_t = DEFAULT_ANGLE_THRESHOLD)]
    angle_threshold: f64,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    vars: u32,
    #[arg(long, default_value_t = 8)]
    clauses: usize,
    /// Maximum clause width.
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, value_enum, default_value_t = TextFormat::Word)]
    to: TextFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Word,
    Dimacs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Word,
    Dimacs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhotocellArg {
    Scan,
    Analog,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportOutput {
    Text,
    Kv,
    Json,
}

type CliResult<T> = Result<T, String>;

struct Loaded {
    formula: CnfFormula,
    format: InputFormat,
}

fn load(args: &InputArgs) -> CliResult<Loaded> {
    let text = match &args.input {
        Some(path) if path.as_os_str() != "-" => {
            fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
        }
        _ => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| format!("stdin: {e}"))?;
            buf
        }
    };
    let format = match args.format {
        FormatArg::Auto => InputFormat::detect(&text),
        FormatArg::Word => InputFormat::Word,
        FormatArg::Dimacs => InputFormat::Dimacs,
    };
    let parsed = parse_input(&text, format).map_err(|e| format!("parse error: {e}"))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let formula = match args.vars {
        Some(n) => parsed.formula.declare_vars(n).map_err(|e| e.to_string())?,
        None => parsed.formula,
    };
    Ok(Loaded { formula, format })
}

fn engine_config(args: &EngineArgs) -> EngineConfig {
    EngineConfig {
        machine: MachineConfig {
            photocell: match args.photocell {
                PhotocellArg::Scan => PhotocellMode::Scan,
                PhotocellArg::Analog => PhotocellMode::Analog,
            },
            n_max: args.n_max,
            ..MachineConfig::default()
        },
        ..EngineConfig::default()
    }
}

fn solve_with(
    formula: &CnfFormula,
    args: &EngineArgs,
    config: &EngineConfig,
) -> CliResult<Outcome> {
    let registry = EngineRegistry::builtin();
    let engine = registry.get(&args.engine).map_err(|e| e.to_string())?;
    engine.solve(formula, config).map_err(|e| e.to_string())
}

fn machine_run<'a>(outcome: &'a Outcome, what: &str) -> CliResult<&'a RunReport> {
    outcome.run.as_ref().ok_or_else(|| {
        format!(
            "{what} needs a disk machine engine (ldo or saldo), not {:?}",
            outcome.engine
        )
    })
}

fn print_json(value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    println!("{text}");
    Ok(())
}

fn cmd_parse(args: &ParseArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let f = &loaded.formula;
    let format = match loaded.format {
        InputFormat::Word => "word",
        InputFormat::Dimacs => "dimacs",
    };
    println!(
        "format={format} vars={} clauses={} literals={}",
        f.num_vars(),
        f.num_clauses(),
        f.num_literals()
    );
    println!("{}", encode_word(f));
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> CliResult<Verdict> {
    let loaded = load(&args.input)?;
    let outcome = solve_with(&loaded.formula, &args.engine, &engine_config(&args.engine))?;
    match args.output {
        Output::Text => println!("{}", outcome.verdict),
        Output::Json => print_json(&json!({
            "engine": outcome.engine,
            "verdict": outcome.verdict,
            "num_vars": loaded.formula.num_vars(),
            "num_clauses": loaded.formula.num_clauses(),
            "mask": outcome.mask,
        }))?,
    }
    Ok(outcome.verdict)
}

fn cmd_models(args: &ModelsArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let n = loaded.formula.num_vars();
    let outcome = solve_with(&loaded.formula, &args.engine, &engine_config(&args.engine))?;
    let total = outcome.models.len();
    let shown = &outcome.models[..total.min(args.max_models)];
    if shown.len() < total {
        eprintln!(
            "warning: listing {} of {total} models; the count can grow as 2^n",
            shown.len()
        );
    }
    let mut rows = Vec::with_capacity(shown.len());
    for &j in shown {
        let values = decode_assignment(j, n).map_err(|e| e.to_string())?;
        let field = outcome.registry.as_ref().map(|r| r.field_for(j));
        rows.push((j, values, field));
    }
    match args.output {
        Output::Text => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for (j, values, field) in &rows {
                let mut line = j.0.to_string();
                for (var, value) in values {
                    line.push_str(&format!(" {var}={}", u8::from(*value)));
                }
                if let Some(field) = field {
                    line.push_str(&format!(" field={field}"));
                }
                writeln!(out, "{line}").map_err(|e| e.to_string())?;
            }
        }
        Output::Json => {
            let models: Vec<Value> = rows
                .iter()
                .map(|(j, values, field)| {
                    let values: serde_json::Map<String, Value> = values
                        .iter()
                        .map(|(var, value)| (var.to_string(), Value::Bool(*value)))
                        .collect();
                    let mut row = json!({ "index": j.0, "values": values });
                    if let Some(field) = field {
                        row["field"] = json!(field);
                    }
                    row
                })
                .collect();
            print_json(&json!({
                "engine": outcome.engine,
                "verdict": outcome.verdict,
                "count": total,
                "truncated": shown.len() < total,
                "models": models,
            }))?;
        }
    }
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let outcome = solve_with(&loaded.formula, &args.engine, &engine_config(&args.engine))?;
    let run = machine_run(&outcome, "trace")?;
    match args.output {
        Output::Text => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for event in &run.trace {
                writeln!(out, "{}", event.render_line(args.detail)).map_err(|e| e.to_string())?;
            }
        }
        Output::Json => {
            let mut events = serde_json::to_value(&run.trace).map_err(|e| e.to_string())?;
            if !args.detail {
                for event in events.as_array_mut().into_iter().flatten() {
                    if let Some(obj) = event.as_object_mut() {
                        obj.remove("sub");
                    }
                }
            }
            print_json(&json!({
                "engine": outcome.engine,
                "verdict": run.verdict,
                "events": events,
            }))?;
        }
    }
    Ok(())
}

fn cmd_convert(args: &ConvertArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let target = args.to.unwrap_or(match loaded.format {
        InputFormat::Word => TextFormat::Dimacs,
        InputFormat::Dimacs => TextFormat::Word,
    });
    match target {
        TextFormat::Word => println!("{}", encode_word(&loaded.formula)),
        TextFormat::Dimacs => print!("{}", emit_dimacs(&loaded.formula)),
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let config = EngineConfig {
        angle_threshold: args.angle_threshold,
        ..engine_config(&args.engine)
    };
    let outcome = solve_with(&loaded.formula, &args.engine, &config)?;
    let run = machine_run(&outcome, "report")?;
    let ledger = &run.ledger;
    let precision = precision_report(ledger, config.angle_threshold);

    if args.output == ReportOutput::Json {
        return print_json(&json!({
            "engine": outcome.engine,
            "verdict": run.verdict,
            "tokens_consumed": run.tokens_consumed,
            "tokens_unconsumed": run.tokens_unconsumed,
            "ledger": ledger,
            "precision": precision,
        }));
    }

    let mut rows: Vec<(&str, String)> = vec![
        ("engine", outcome.engine.clone()),
        ("verdict", run.verdict.to_string()),
        ("tokens_consumed", run.tokens_consumed.to_string()),
        ("tokens_unconsumed", run.tokens_unconsumed.to_string()),
        ("machine_steps", ledger.machine_steps.to_string()),
        ("field_ops", ledger.field_ops.to_string()),
        ("blanks_consumed", ledger.blanks_consumed.to_string()),
        ("assembly_blanks", ledger.assembly_blanks.to_string()),
        ("clause_blanks", ledger.clause_blanks.to_string()),
        ("disks_duplicated", ledger.disks_duplicated.to_string()),
        ("g_cycles", ledger.g_cycles.to_string()),
        ("fields_per_disk", precision.fields_per_disk.to_string()),
        (
            "min_field_angle",
            format!("{:.6e}", precision.min_field_angle),
        ),
        (
            "angle_threshold",
            format!("{:.1e}", precision.angle_threshold),
        ),
    ];
    if let Some(registry) = &outcome.registry {
        rows.push(("variable_disks", registry.disks().to_string()));
    }
    match args.output {
        ReportOutput::Kv => {
            for (key, value) in &rows {
                println!("{key}={value}");
            }
            if let Some(w) = &precision.warning {
                println!("warning={w}");
            }
        }
        _ => {
            for (key, value) in &rows {
                println!("{key:<18} {value}");
            }
            if let Some(w) = &precision.warning {
                println!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn cmd_random(args: &RandomArgs) -> CliResult<()> {
    if args.vars == 0 || args.width == 0 {
        return Err("--vars and --width must be at least 1".into());
    }
    let mut rng = seeded(args.seed);
    let formula = random_cnf(
        &mut rng,
        RandomCnfParams {
            num_vars: args.vars,
            num_clauses: args.clauses,
            min_width: 1,
            max_width: args.width,
        },
    );
    match args.to {
        TextFormat::Word => println!("{}", encode_word(&formula)),
        TextFormat::Dimacs => print!("{}", emit_dimacs(&formula)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Parse(a) => cmd_parse(a).map(|_| ExitCode::SUCCESS),
        Command::Solve(a) => cmd_solve(a).map(|v| match v {
            Verdict::Sat => ExitCode::from(EXIT_SAT),
            Verdict::Unsat => ExitCode::from(EXIT_UNSAT),
        }),
        Command::Models(a) => cmd_models(a).map(|_| ExitCode::SUCCESS),
        Command::Trace(a) => cmd_trace(a).map(|_| ExitCode::SUCCESS),
        Command::Convert(a) => cmd_convert(a).map(|_| ExitCode::SUCCESS),
        Command::Report(a) => cmd_report(a).map(|_| ExitCode::SUCCESS),
        Command::Random(a) => cmd_random(a).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
