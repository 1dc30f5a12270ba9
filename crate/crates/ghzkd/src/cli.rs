//! Command-line front end.
//!
//! One binary, one `--command` dispatcher:
//!
//! ```text
//! ghzkd --command run        --n 16 --tau 2 --seed 7 --attack none
//! ghzkd --command detect     --attack measure-resend-b --sessions 10000
//! ghzkd --command sweep      --n 1 --tau 1 --sessions 2000
//! ghzkd --command efficiency --n 96 --tau 4
//! ghzkd --command verify [--quick]
//! ```
//!
//! Every command emits a [`Report`] (JSON by default,
//! CSV with `--format csv`) to stdout or to `--out`. Exit codes: 0 success,
//! 1 session abort (`run`) or failed criterion (`verify`), 2 usage or
//! configuration errors.

use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::analysis::{detection_report, efficiency};
use crate::protocol::{run_session, SessionConfig};
use crate::report::{
    parse_attack, write_report, Command, OutputFormat, Report, ReportBody, RunConfig, SweepReport,
    SweepRow, SWEEP_PRESETS,
};
use crate::rng::derive_seed;
use crate::verify;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandArg {
    /// Run one protocol session and report its records and keys.
    Run,
    /// Exact and Monte Carlo detection probabilities for one attack.
    Detect,
    /// Detection table over every built-in attack preset.
    Sweep,
    /// Communication-efficiency accounting.
    Efficiency,
    /// Run the verification checklist.
    Verify,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "ghzkd", version, about = "Simulator and attack analysis for a hybrid semiquantum key-distribution / secret-sharing protocol on GHZ-like states")]
pub struct Cli {
    /// What to do.
    #[arg(long, value_enum)]
    pub command: CommandArg,

    /// Key length; a session runs 8(n+tau) rounds.
    #[arg(long, default_value_t = 16)]
    pub n: u32,

    /// Round padding (>= 1).
    #[arg(long, default_value_t = 2)]
    pub tau: u32,

    /// Root seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Attack preset: none, measure-resend-b/c, intercept-resend-b/c,
    /// double-cnot-b/c, double-cnot-both, or `entangle-measure:<matrix file>`.
    #[arg(long, default_value = "none")]
    pub attack: String,

    /// Monte Carlo session count for detect and sweep (0 = exact only).
    #[arg(long, default_value_t = 1000)]
    pub sessions: u64,

    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,

    /// Output file. Relative paths resolve under $GHZKD_OUT_DIR when set;
    /// without --out the report goes to stdout.
    #[arg(long)]
    pub out: Option<String>,

    /// verify only: subsample the Monte Carlo criteria (10^3 sessions).
    #[arg(long, default_value_t = false)]
    pub quick: bool,
}

impl Cli {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            command: match self.command {
                CommandArg::Run => Command::Run,
                CommandArg::Detect => Command::Detect,
                CommandArg::Sweep => Command::Sweep,
                CommandArg::Efficiency => Command::Efficiency,
                CommandArg::Verify => Command::Verify,
            },
            n: self.n,
            tau: self.tau,
            seed: self.seed,
            attack: self.attack.clone(),
            sessions: self.sessions,
            format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            },
            out: self.out.clone(),
            quick: self.quick,
        }
    }
}

/// Parse argv and dispatch. Usage errors exit 2 via clap.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    run(cli)
}

/// Dispatch a parsed invocation.
pub fn run(cli: Cli) -> ExitCode {
    match execute(&cli) {
        Ok((report, exit)) => {
            let rendered = match report.render(cli.run_config().format) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("ghzkd: {e}");
                    return ExitCode::from(2);
                }
            };
            match &cli.out {
                Some(out) => match write_report(&report, cli.run_config().format, out) {
                    Ok(path) => eprintln!("ghzkd: wrote {}", path.display()),
                    Err(e) => {
                        eprintln!("ghzkd: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => print!("{rendered}"),
            }
            exit
        }
        Err(message) => {
            eprintln!("ghzkd: {message}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<(Report, ExitCode), String> {
    let config = cli.run_config();
    match cli.command {
        CommandArg::Run => {
            let attack = parse_attack(&cli.attack).map_err(|e| e.to_string())?;
            let session_config = SessionConfig::new(cli.n, cli.tau, cli.seed, attack);
            let session = run_session(&session_config).map_err(|e| e.to_string())?;
            let exit = if session.aborted {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
            Ok((Report::new(config, ReportBody::Run(Box::new(session))), exit))
        }
        CommandArg::Detect => {
            let attack = parse_attack(&cli.attack).map_err(|e| e.to_string())?;
            let detection = detection_report(&attack, cli.n, cli.tau, cli.sessions, cli.seed)
                .map_err(|e| e.to_string())?;
            Ok((
                Report::new(config, ReportBody::Detect(detection)),
                ExitCode::SUCCESS,
            ))
        }
        CommandArg::Sweep => {
            let mut rows = Vec::with_capacity(SWEEP_PRESETS.len());
            for (i, preset) in SWEEP_PRESETS.iter().enumerate() {
                let attack = parse_attack(preset).map_err(|e| e.to_string())?;
                let detection = detection_report(
                    &attack,
                    cli.n,
                    cli.tau,
                    cli.sessions,
                    derive_seed(cli.seed, i as u64),
                )
                .map_err(|e| e.to_string())?;
                rows.push(SweepRow {
                    attack: preset.to_string(),
                    detection,
                });
            }
            Ok((
                Report::new(config, ReportBody::Sweep(SweepReport { rows })),
                ExitCode::SUCCESS,
            ))
        }
        CommandArg::Efficiency => {
            let report = efficiency(cli.n as u64, cli.tau as u64);
            Ok((
                Report::new(config, ReportBody::Efficiency(report)),
                ExitCode::SUCCESS,
            ))
        }
        CommandArg::Verify => {
            let outcomes = verify::run_all(cli.quick);
            for o in &outcomes {
                println!("{}", o.line());
            }
            let body = verify::to_report(&outcomes);
            let exit = if body.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
            Ok((Report::new(config, ReportBody::Verify(body)), exit))
        }
    }
}
