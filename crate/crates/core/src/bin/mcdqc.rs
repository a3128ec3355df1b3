use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcdqc::authcode::{exact_detection_probability, Attack};
use mcdqc::harness::{blindness_check, parse_scenario, run_trials, HarnessError, Overrides};
use mcdqc::multiclient::{error_bound, two_client_bound, BoundVariant};
use mcdqc::qsim::{enumerate_clifford, PauliString};

#[derive(Parser)]
#[command(name = "mcdqc", version, about = "Multi-client blind verifiable DQC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Output {
    /// Aligned tables, or one `key=value` per line.
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every adversary of a scenario file and report against the error bound.
    Run {
        /// Scenario file.
        scenario: PathBuf,
        /// Master seed; overrides `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Trials per strategy; overrides `trials` in the file.
        #[arg(long)]
        trials: Option<usize>,
        /// Delegation backend; overrides `backend` in the file.
        #[arg(long, value_parser = ["ideal", "clifford-auth"])]
        backend: Option<String>,
        /// Traps per authenticated qubit, 1 to 3.
        #[arg(long)]
        traps: Option<usize>,
        /// Whether an aborting client forwards the abort to every other client.
        #[arg(long, value_enum)]
        rebroadcast: Option<Switch>,
        #[command(flatten)]
        output: Output,
    },
    /// Distance between the server views of two honest runs.
    Blindness {
        /// First scenario file.
        a: PathBuf,
        /// Second scenario file; must share the protocol and size profile.
        b: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate the composed error bound.
    Bound {
        /// Clients.
        n: usize,
        /// Rounds.
        m: usize,
        /// Blind-verifiable delegation error.
        eps_bv: f64,
        /// Per-transfer authentication error.
        eps_qsec: f64,
        /// Classical broadcast error.
        eps_bb: f64,
    },
    /// Exact authentication-code oracles.
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
    /// Enumerate finite groups.
    Enumerate {
        #[command(subcommand)]
        what: EnumerateCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Detection statistics of every non-identity Pauli attack on an (m, t) block.
    Detection { m: usize, t: usize },
}

#[derive(Subcommand)]
enum EnumerateCommand {
    /// Size of the n-qubit Clifford group modulo phases.
    Cliffords { n: usize },
}

fn emit(output: &Output, text: String) -> Result<(), HarnessError> {
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn input_error(message: String) -> HarnessError {
    HarnessError::Parse { line: 0, message }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { scenario, seed, trials, backend, traps, rebroadcast, output } => {
            let file = parse_scenario(&scenario)?;
            let overrides =
                Overrides { seed, trials, backend, traps, rebroadcast: rebroadcast.map(|s| matches!(s, Switch::On)) };
            let report = run_trials(&file, &overrides)?;
            let text = match output.format {
                Format::Human => report.to_human(),
                Format::Machine => report.to_machine(),
            };
            emit(&output, text)
        }
        Command::Blindness { a, b, output } => {
            let (fa, fb) = (parse_scenario(&a)?, parse_scenario(&b)?);
            let d = blindness_check(&fa, &fb)?;
            let text = match output.format {
                Format::Human => format!("blindness  {} vs {}  {d:.3e}\n", fa.name, fb.name),
                Format::Machine => format!("a={}\nb={}\ndistance={d}\n", fa.name, fb.name),
            };
            emit(&output, text)
        }
        Command::Bound { n, m, eps_bv, eps_qsec, eps_bb } => {
            for (name, variant) in [("protocol1", BoundVariant::Protocol1), ("protocol3", BoundVariant::Protocol3)] {
                let general =
                    error_bound(n, m, eps_bv, eps_qsec, eps_bb, variant).map_err(|e| input_error(e.to_string()))?;
                println!("{name}.general={general}");
                if n == 2 && m == 1 {
                    let two =
                        two_client_bound(eps_bv, eps_qsec, eps_bb, variant).map_err(|e| input_error(e.to_string()))?;
                    println!("{name}.two_client={two}");
                }
            }
            Ok(())
        }
        Command::Oracle { what: OracleCommand::Detection { m, t } } => {
            println!("{:<8} {:>10} {:>10} {:>10}", "pauli", "p_detect", "p_harmless", "epsilon");
            for p in PauliString::non_identity(m + t) {
                let s = exact_detection_probability(m, t, &Attack::Pauli(p.clone()))
                    .map_err(|e| input_error(e.to_string()))?;
                println!("{:<8} {:>10.6} {:>10.6} {:>10.6}", p.to_string(), s.p_detect, s.p_harmless, s.epsilon());
            }
            Ok(())
        }
        Command::Enumerate { what: EnumerateCommand::Cliffords { n } } => {
            let group = enumerate_clifford(n).map_err(|e| input_error(e.to_string()))?;
            println!("{}", group.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
