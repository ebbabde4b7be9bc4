use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use upqca::autoqca::QcaMode;
use upqca::oracle::{CheckOptions, Level};
use upqca::universal::SearchLimits;
use upqca_cli::formats::BandFile;
use upqca_cli::{
    cmd_compile, cmd_resources, cmd_synthesize, cmd_trace, cmd_verify, load_circuit, parse_digits, render_outcomes, run_marginal, to_toml,
    CliError, RunLevel, SynthesisResult, VerifyOptions, EXIT_FALSE, EXIT_OK, EXIT_USAGE,
};

/// Compile gate circuits into autonomous QCA program bands and run them.
#[derive(Parser)]
#[command(name = "upqca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Gate,
    Ccqca,
    Nn,
    Qca,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Faithful,
    Factored,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit file into a band file.
    Compile {
        circuit: PathBuf,
        #[arg(long, value_enum, default_value = "off")]
        peephole: Switch,
        /// Band file to write; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a circuit at one level and print the outcome table.
    Run {
        circuit: PathBuf,
        #[arg(long, value_enum, default_value = "gate")]
        level: LevelArg,
        #[arg(long, value_enum, default_value = "factored")]
        mode: ModeArg,
        /// Basis input over the circuit wires, e.g. 10. Defaults to all zeros.
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cross-check levels on random circuits with exhaustive inputs.
    Verify {
        #[arg(long, value_delimiter = ',', default_value = "gate,qca-factored")]
        levels: Vec<String>,
        #[arg(long, default_value_t = 3)]
        max_wires: usize,
        #[arg(long, default_value_t = 3)]
        max_gates: usize,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value = "off")]
        peephole: Switch,
        /// Extra steps after completion for the stability check.
        #[arg(long, default_value_t = 0)]
        extra_steps: u64,
        #[arg(long, hide = true)]
        corrupt_digit: Option<usize>,
    },
    /// Print the space-time diagram of a band run.
    Trace {
        band: PathBuf,
        #[arg(long)]
        input: Option<String>,
        /// Defaults to the completion step count.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Print resource tallies for a circuit.
    Resources { circuit: PathBuf },
    /// Rebuild a realization fixture for H or TOFFOLI.
    Synthesize {
        target: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2_000_000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 120.0)]
        max_seconds: f64,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn input_digits(input: Option<&str>, wires: usize) -> Result<Vec<usize>, CliError> {
    match input {
        Some(s) => parse_digits(s, wires),
        None => Ok(vec![0; wires]),
    }
}

fn execute(command: Command) -> Result<u8, CliError> {
    let started = Instant::now();
    let code = match command {
        Command::Compile { circuit, peephole, out } => {
            let circuit = load_circuit(&read(&circuit)?)?;
            let (band, summary) = cmd_compile(&circuit, matches!(peephole, Switch::On))?;
            match out {
                Some(path) => write(&path, &band.to_text())?,
                None => print!("{}", band.to_text()),
            }
            #[derive(serde::Serialize)]
            struct Printed<'a> {
                summary: &'a upqca_cli::CompileSummary,
            }
            print!("\n{}", to_toml(&Printed { summary: &summary }));
            EXIT_OK
        }
        Command::Run { circuit, level, mode, input, shots, seed } => {
            let circuit = load_circuit(&read(&circuit)?)?;
            let input = input_digits(input.as_deref(), circuit.wires())?;
            let level = match level {
                LevelArg::Gate => RunLevel::Gate,
                LevelArg::Ccqca => RunLevel::Ccqca,
                LevelArg::Nn => RunLevel::Nn,
                LevelArg::Qca => RunLevel::Qca(match mode {
                    ModeArg::Faithful => QcaMode::Faithful,
                    ModeArg::Factored => QcaMode::Factored,
                }),
            };
            let marginal = run_marginal(&circuit, level, &input)?;
            print!("{}", render_outcomes(&marginal, shots.map(|k| (k, seed))));
            EXIT_OK
        }
        Command::Verify { levels, max_wires, max_gates, seeds, tol, peephole, extra_steps, corrupt_digit } => {
            let levels = levels.iter().map(|l| l.parse::<Level>()).collect::<Result<Vec<_>, _>>()?;
            let check = CheckOptions { tol, peephole: matches!(peephole, Switch::On), extra_steps, superposition: true };
            let report = cmd_verify(&VerifyOptions { levels, max_wires, max_gates, seeds, check, corrupt_digit })?;
            print!("{}", to_toml(&report));
            if report.verdict {
                EXIT_OK
            } else {
                EXIT_FALSE
            }
        }
        Command::Trace { band, input, steps } => {
            let band = BandFile::parse(&read(&band)?)?;
            let input = input_digits(input.as_deref(), band.data_wires())?;
            print!("{}", cmd_trace(&band, &input, steps)?);
            EXIT_OK
        }
        Command::Resources { circuit } => {
            let circuit = load_circuit(&read(&circuit)?)?;
            print!("{}", to_toml(&cmd_resources(&circuit)?));
            EXIT_OK
        }
        Command::Synthesize { target, out, max_nodes, max_seconds } => {
            match cmd_synthesize(&target, SearchLimits { max_nodes, max_seconds })? {
                SynthesisResult::Found(text) => {
                    match out {
                        Some(path) => write(&path, &text)?,
                        None => print!("{text}"),
                    }
                    EXIT_OK
                }
                SynthesisResult::Exhausted(report) => {
                    print!("{}", to_toml(&report));
                    EXIT_FALSE
                }
            }
        }
    };
    eprintln!("elapsed {:.3} s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
