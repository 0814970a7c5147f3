//! Argument parsing and dispatch for the `qkdsim` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkd_core::otp::BitString;

use crate::commands::{self, Report};
use crate::{exit, presets, CliError, Kind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "qkdsim", version, about = "Entangled-photon BB84 simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key-distribution session: trials.csv, transcript.json, summary.json.
    Session(Common),
    /// Tomography of the configured state: counts, density matrix, metrics, bars.
    Tomo {
        #[command(flatten)]
        common: Common,
        /// Reconstruct from this counts CSV instead of simulating.
        #[arg(long)]
        counts: Option<PathBuf>,
    },
    /// CHSH value of the configured state.
    Bell(Common),
    /// Runs the experiment named by the config's `kind`.
    Run(Common),
    /// One-time-pad encryption with a distributed key.
    Otp {
        #[arg(value_enum)]
        direction: Direction,
        #[command(flatten)]
        args: OtpArgs,
    },
    /// Lists the bundled presets.
    Presets,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration by name (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `out_dir`, then `qkd-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    Encrypt,
    Decrypt,
}

#[derive(Debug, Args)]
struct OtpArgs {
    /// Key as hex.
    #[arg(
        long,
        required_unless_present = "key_file",
        conflicts_with = "key_file"
    )]
    key: Option<String>,
    /// transcript.json or summary.json holding a final key.
    #[arg(long)]
    key_file: Option<PathBuf>,
    /// UTF-8 message.
    #[arg(long, required_unless_present = "hex", conflicts_with = "hex")]
    text: Option<String>,
    /// Message as hex.
    #[arg(long)]
    hex: Option<String>,
    /// First key bit to use.
    #[arg(long, default_value_t = 0)]
    offset: usize,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => presets::load(name)?,
            (None, None) => unreachable!("clap requires one of --config/--preset"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("qkd-out"))
    }
}

fn experiment(kind: Kind, common: &Common, counts: Option<PathBuf>) -> Result<i32, CliError> {
    let cfg = common.load()?;
    let report: Report = match kind {
        Kind::Session => commands::session(&cfg)?.0,
        Kind::Tomo => commands::tomo(&cfg, counts.as_deref())?,
        Kind::Bell => commands::bell(&cfg)?.0,
    };
    let dir = common.out_dir(&cfg);
    report.write_to(&dir)?;
    for line in &report.stdout {
        println!("{line}");
    }
    let names: Vec<_> = report.artifacts.iter().map(|a| a.name).collect();
    eprintln!("wrote {} to {}", names.join(", "), dir.display());
    Ok(if report.aborted {
        exit::ABORT
    } else {
        exit::SUCCESS
    })
}

fn otp(direction: Direction, a: &OtpArgs) -> Result<i32, CliError> {
    let key = match (&a.key, &a.key_file) {
        (Some(hex), _) => BitString::from_hex(hex).map_err(CliError::config)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            commands::key_from_json(&text)?
        }
        (None, None) => unreachable!("clap requires one of --key/--key-file"),
    };
    let data = match (&a.text, &a.hex) {
        (Some(t), _) => BitString::from_text(t),
        (None, Some(h)) => BitString::from_hex(h).map_err(CliError::config)?,
        (None, None) => unreachable!("clap requires one of --text/--hex"),
    };
    let out = commands::otp(key, a.offset, &data)?;
    match (direction, out.to_text()) {
        (Direction::Decrypt, Ok(text)) => println!("{text}"),
        _ => println!("{}", out.to_hex()),
    }
    eprintln!("used key bits {}..{}", a.offset, a.offset + data.len());
    Ok(exit::SUCCESS)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Session(c) => experiment(Kind::Session, c, None),
        Command::Tomo { common, counts } => experiment(Kind::Tomo, common, counts.clone()),
        Command::Bell(c) => experiment(Kind::Bell, c, None),
        Command::Run(c) => c.load().and_then(|cfg| {
            let kind = cfg
                .kind
                .ok_or_else(|| CliError::Config("`run` needs a `kind` in the config".into()))?;
            experiment(kind, c, None)
        }),
        Command::Otp { direction, args } => otp(*direction, args),
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            Ok(exit::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit::CONFIG
    })
}
