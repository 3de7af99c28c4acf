//! Command-line front end for the trine QKD simulator and analysis toolkit.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 verification failure,
//! 3 numeric or degenerate condition.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use trine_qkd::cli::{
    cmd_analyze, cmd_azuma, cmd_simulate, cmd_sweep, cmd_threshold, cmd_transcript, cmd_verify,
    verify_summary, AttackSpec, Config, OutputFormat, DEFAULT_SEED,
};
use trine_qkd::protocol::BitMapping;
use trine_qkd::verify::VerifyOptions;
use trine_qkd::Error;

#[derive(Parser)]
#[command(
    name = "trine-qkd",
    about = "Simulate and analyze the trine (three-state) QKD protocols PBC00 and R04",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigSource {
    /// Path to a JSON config file.
    #[arg(long, value_name = "PATH", conflicts_with = "inline")]
    config: Option<String>,
    /// Inline JSON config document.
    #[arg(long, value_name = "JSON")]
    inline: Option<String>,
}

#[derive(Args, Clone)]
struct OutputOptions {
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormatArg {
    Json,
    Csv,
}

impl From<OutputFormatArg> for OutputFormat {
    fn from(value: OutputFormatArg) -> Self {
        match value {
            OutputFormatArg::Json => OutputFormat::Json,
            OutputFormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MappingArg {
    Exclusion,
    LiteralPaper,
}

impl From<MappingArg> for BitMapping {
    fn from(value: MappingArg) -> Self {
        match value {
            MappingArg::Exclusion => BitMapping::Exclusion,
            MappingArg::LiteralPaper => BitMapping::Literal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured protocol and report statistics and key rate.
    Simulate {
        #[command(flatten)]
        source: ConfigSource,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Seed from OS entropy instead of the fixed default.
        #[arg(long, conflicts_with = "seed")]
        entropy_seed: bool,
        /// Override the config output format.
        #[arg(long, value_enum)]
        output: Option<OutputFormatArg>,
        /// Also write the per-pulse transcript CSV to this path.
        #[arg(long, value_name = "PATH")]
        transcript: Option<String>,
        #[command(flatten)]
        sink: OutputOptions,
    },
    /// Compute bit/phase error probabilities and the implied key rate for an
    /// attack.
    Analyze {
        /// Attack spec as inline JSON (same schema as the config `attack`
        /// field).
        #[arg(long, value_name = "JSON", conflicts_with = "config")]
        attack: Option<String>,
        /// Read the attack from a config file's `attack` field.
        #[arg(long, value_name = "PATH")]
        config: Option<String>,
        #[command(flatten)]
        sink: OutputOptions,
    },
    /// Print the security thresholds and the cross-protocol comparison table.
    Threshold {
        #[arg(long, value_enum, default_value = "json")]
        output: OutputFormatArg,
        #[command(flatten)]
        sink: OutputOptions,
    },
    /// Sweep an attack parameter and emit one CSV row per grid point.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        sink: OutputOptions,
    },
    /// Concentration-bound calculator and empirical martingale check.
    Azuma {
        /// Number of dependent trials N.
        #[arg(long)]
        n: Option<u64>,
        /// Deviation ε.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Target failure probability δ (with --epsilon: solve for N).
        #[arg(long)]
        delta: Option<f64>,
        /// Empirical trials for the adversarial policy battery.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        sink: OutputOptions,
    },
    /// Run the full invariant battery; exits 0 only if every check passes.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Outcome-to-bit convention to verify under.
        #[arg(long, value_enum, default_value = "exclusion")]
        mapping: MappingArg,
        /// Test hook: corrupt every tolerance so all checks fail.
        #[arg(long, hide = true)]
        corrupt_tolerances: bool,
        #[command(flatten)]
        sink: OutputOptions,
    },
}

fn load_config(source: &ConfigSource) -> Result<Config, Error> {
    let text = match (&source.config, &source.inline) {
        (Some(path), None) => fs::read_to_string(path)?,
        (None, Some(json)) => json.clone(),
        (None, None) => {
            return Err(Error::Config(
                "provide a config with --config PATH or --inline JSON".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    Config::from_json(&text)
}

fn entropy_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ (std::process::id() as u64).rotate_left(32)
}

fn emit(sink: &OutputOptions, text: &str) -> Result<(), Error> {
    match &sink.out {
        Some(path) => {
            fs::write(path, text)?;
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Simulate {
            source,
            seed,
            entropy_seed: use_entropy,
            output,
            transcript,
            sink,
        } => {
            let mut config = load_config(&source)?;
            if let Some(seed) = seed {
                config.seed = seed;
            } else if use_entropy {
                config.seed = entropy_seed();
            }
            if let Some(fmt) = output {
                config.output = fmt.into();
            }
            for warning in config.attack.build()?.warnings() {
                eprintln!("warning: {warning}");
            }
            if let Some(path) = transcript {
                fs::write(path, cmd_transcript(&config)?)?;
            }
            emit(&sink, &cmd_simulate(&config)?)?;
            Ok(0)
        }
        Command::Analyze {
            attack,
            config,
            sink,
        } => {
            let spec: AttackSpec = match (attack, config) {
                (Some(json), None) => serde_json::from_str(&json)
                    .map_err(|e| Error::Config(format!("attack spec: {e}")))?,
                (None, Some(path)) => {
                    let cfg = Config::from_json(&fs::read_to_string(path)?)?;
                    cfg.attack
                }
                _ => {
                    return Err(Error::Config(
                        "provide the attack with --attack JSON or --config PATH".into(),
                    ))
                }
            };
            emit(&sink, &cmd_analyze(&spec)?)?;
            Ok(0)
        }
        Command::Threshold { output, sink } => {
            emit(&sink, &cmd_threshold(output.into())?)?;
            Ok(0)
        }
        Command::Sweep { source, seed, sink } => {
            let mut config = load_config(&source)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            emit(&sink, &cmd_sweep(&config)?)?;
            Ok(0)
        }
        Command::Azuma {
            n,
            epsilon,
            delta,
            trials,
            seed,
            sink,
        } => {
            emit(&sink, &cmd_azuma(n, epsilon, delta, trials, seed)?)?;
            Ok(0)
        }
        Command::Verify {
            seed,
            mapping,
            corrupt_tolerances,
            sink,
        } => {
            let options = VerifyOptions {
                seed,
                mapping: mapping.into(),
                corrupt_tolerances,
            };
            let (json, report) = cmd_verify(&options)?;
            emit(&sink, &json)?;
            eprint!("{}", verify_summary(&report));
            if report.all_passed {
                Ok(0)
            } else {
                Ok(2)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
