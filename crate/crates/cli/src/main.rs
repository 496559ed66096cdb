use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qcflat_core::builtins;
use qcflat_core::par;
use qcflat_core::report::{analyze_text, AnalysisOptions, AnalysisReport, CheckLevel};
use qcflat_core::scalar::ScalarMode;

#[derive(Parser)]
#[command(name = "qcflat", version, about = "Biquard connection, curvature and qc conformal flatness of left-invariant qc structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a structure file or a built-in example.
    Analyze(AnalyzeArgs),
    /// List the built-in examples, or print one as structure-file text.
    Examples {
        /// Print the structure file of this builtin.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Structure file to analyze.
    #[arg(conflicts_with_all = ["builtin", "all"])]
    file: Option<PathBuf>,
    /// Name of a built-in example.
    #[arg(long, conflicts_with = "all")]
    builtin: Option<String>,
    /// Analyze every built-in example.
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Level::Basic)]
    check_level: Level,
    /// Number of seeded random conformal jets.
    #[arg(long, default_value_t = 25)]
    conformal_trials: u64,
    /// Base seed; trial k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Basic,
    Full,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

const INPUT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Examples { show: None } => {
            for b in builtins::ALL {
                println!("{:<15} {}", b.name, b.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Examples { show: Some(name) } => match builtins::find(&name) {
            Some(b) => {
                print!("{}", b.text);
                ExitCode::SUCCESS
            }
            None => unknown_builtin(&name),
        },
        Command::Analyze(args) => analyze(args),
    }
}

fn unknown_builtin(name: &str) -> ExitCode {
    let names: Vec<_> = builtins::ALL.iter().map(|b| b.name).collect();
    eprintln!("error: unknown builtin `{name}` (available: {})", names.join(", "));
    ExitCode::from(INPUT_ERROR)
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let opts = AnalysisOptions {
        mode: match args.mode {
            Mode::Exact => ScalarMode::ExactRational,
            Mode::Float => ScalarMode::float(),
        },
        check_level: match args.check_level {
            Level::Basic => CheckLevel::Basic,
            Level::Full => CheckLevel::Full,
        },
        conformal_trials: args.conformal_trials,
        seed: args.seed,
    };
    let inputs: Vec<(String, String)> = if args.all {
        builtins::ALL.iter().map(|b| (b.name.to_string(), b.text.to_string())).collect()
    } else if let Some(name) = &args.builtin {
        match builtins::find(name) {
            Some(b) => vec![(b.name.to_string(), b.text.to_string())],
            None => return unknown_builtin(name),
        }
    } else if let Some(path) = &args.file {
        match std::fs::read_to_string(path) {
            Ok(text) => vec![(path.display().to_string(), text)],
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(INPUT_ERROR);
            }
        }
    } else {
        eprintln!("error: give a FILE, --builtin NAME or --all");
        return ExitCode::from(INPUT_ERROR);
    };

    let results = par::map_slice(&inputs, |(name, text)| analyze_text(name, text, &opts));
    let mut reports: Vec<AnalysisReport> = Vec::new();
    let mut input_error = false;
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                eprintln!("error: {e}");
                input_error = true;
            }
        }
    }

    let json = if reports.len() == 1 && !args.all {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(&reports)
    }
    .expect("report serializes");
    match args.format {
        Format::Json if !reports.is_empty() => println!("{json}"),
        Format::Json => {}
        Format::Text => {
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", r.to_text());
            }
        }
    }
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(INPUT_ERROR);
        }
    }
    if input_error {
        ExitCode::from(INPUT_ERROR)
    } else if reports.iter().all(|r| r.exit_code() == 0) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
