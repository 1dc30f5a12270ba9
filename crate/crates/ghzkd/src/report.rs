//! Machine-readable reports.
//!
//! Every command emits a [`Report`]: a schema version tag, the fully
//! resolved configuration, and a command-specific result body. JSON is the
//! canonical nested form and round-trips losslessly; CSV flattens the body
//! into plot-ready rows (one row per round / attack / criterion). Reports
//! contain no timestamps or environment data, so identical configurations
//! (including the seed) render byte-identically.
//!
//! The JSON field layout is documented in `docs/report-schema.md`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{load_entangle_measure, AttackError, AttackSpec, Channel, FakeBit};
use crate::analysis::{DetectionReport, EfficiencyReport};
use crate::protocol::{AliceOutcome, SessionResult};

/// Version tag of the report layout.
pub const SCHEMA_VERSION: &str = "1";

/// Environment variable that relocates relative `--out` paths.
pub const OUT_DIR_ENV: &str = "GHZKD_OUT_DIR";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(
        "unknown attack `{0}` (expected none, measure-resend-b/c, intercept-resend-b/c, \
         double-cnot-b/c, double-cnot-both, or entangle-measure:<file>)"
    )]
    UnknownAttack(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Run,
    Detect,
    Sweep,
    Efficiency,
    Verify,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// The resolved invocation, echoed verbatim into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: u32,
    pub tau: u32,
    pub seed: u64,
    /// Attack preset string, e.g. `measure-resend-b` or
    /// `entangle-measure:attack.mat`.
    pub attack: String,
    pub sessions: u64,
    pub format: OutputFormat,
    pub out: Option<String>,
    pub quick: bool,
}

/// Resolve an attack preset string.
///
/// Presets: `none`, `measure-resend-b`, `measure-resend-c`,
/// `intercept-resend-b`, `intercept-resend-c`, `double-cnot-b`,
/// `double-cnot-c`, `double-cnot-both`, `entangle-measure:<file>` (matrix
/// file format documented in [`crate::adversary::load_entangle_measure`]).
/// Intercept-resend presets forward the fake particle |0⟩.
pub fn parse_attack(text: &str) -> Result<AttackSpec, ReportError> {
    Ok(match text {
        "none" => AttackSpec::None,
        "measure-resend-b" => AttackSpec::MeasureResend { target: Channel::B },
        "measure-resend-c" => AttackSpec::MeasureResend { target: Channel::C },
        "intercept-resend-b" => AttackSpec::InterceptResend {
            target: Channel::B,
            fake: FakeBit::Zero,
        },
        "intercept-resend-c" => AttackSpec::InterceptResend {
            target: Channel::C,
            fake: FakeBit::Zero,
        },
        "double-cnot-b" => AttackSpec::DoubleCnotSingle { target: Channel::B },
        "double-cnot-c" => AttackSpec::DoubleCnotSingle { target: Channel::C },
        "double-cnot-both" => AttackSpec::DoubleCnotTwice,
        other => match other.strip_prefix("entangle-measure:") {
            Some(path) => AttackSpec::EntangleMeasure(Box::new(load_entangle_measure(
                Path::new(path),
            )?)),
            None => return Err(ReportError::UnknownAttack(other.to_string())),
        },
    })
}

/// The attack presets a sweep iterates over (everything that needs no
/// matrix file).
pub const SWEEP_PRESETS: [&str; 8] = [
    "none",
    "measure-resend-b",
    "measure-resend-c",
    "intercept-resend-b",
    "intercept-resend-c",
    "double-cnot-b",
    "double-cnot-c",
    "double-cnot-both",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub attack: String,
    pub detection: DetectionReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

/// One line of the verification checklist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ReportBody {
    Run(Box<SessionResult>),
    Detect(DetectionReport),
    Sweep(SweepReport),
    Efficiency(EfficiencyReport),
    Verify(VerifyReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config: RunConfig,
    pub results: ReportBody,
}

impl Report {
    pub fn new(config: RunConfig, results: ReportBody) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            results,
        }
    }

    /// Canonical JSON rendering (pretty-printed, trailing newline).
    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Flat CSV rendering of the result body.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.results {
            ReportBody::Run(session) => {
                out.push_str(
                    "index,bob_mode,charlie_mode,case,bob_z,charlie_z,alice_b_return,\
                     alice_c_return,alice_own_a,alice_bell_ac,alice_bell_ab,alice_ghz,\
                     checked,consistent\n",
                );
                for r in &session.records {
                    let (b_ret, c_ret, own_a, bell_ac, bell_ab, ghz) = match r.alice {
                        AliceOutcome::TripleZ {
                            b_return,
                            c_return,
                            own_a,
                        } => (
                            Some(b_return as usize),
                            Some(c_return as usize),
                            Some(own_a as usize),
                            None,
                            None,
                            None,
                        ),
                        AliceOutcome::ZAndBell { b_return, bell_ac } => {
                            (Some(b_return as usize), None, None, Some(bell_ac), None, None)
                        }
                        AliceOutcome::BellAndZ { c_return, bell_ab } => {
                            (None, Some(c_return as usize), None, None, Some(bell_ab), None)
                        }
                        AliceOutcome::GhzLike { index } => {
                            (None, None, None, None, None, Some(index))
                        }
                    };
                    let _ = writeln!(
                        out,
                        "{},{:?},{:?},{},{},{},{},{},{},{},{},{},{},{}",
                        r.index,
                        r.bob_mode,
                        r.charlie_mode,
                        r.case.number(),
                        opt(r.bob_z.map(usize::from)),
                        opt(r.charlie_z.map(usize::from)),
                        opt(b_ret),
                        opt(c_ret),
                        opt(own_a),
                        opt(bell_ac),
                        opt(bell_ab),
                        opt(ghz),
                        r.checked,
                        r.consistent.map(|c| c.to_string()).unwrap_or_default(),
                    );
                }
            }
            ReportBody::Detect(d) => {
                out.push_str(
                    "n,tau,per_case1,per_case2,per_case3,per_case4,per_particle_exact,\
                     per_particle_closed_form,cumulative,mc_sessions,mc_detected,\
                     mc_estimate,mc_std_error\n",
                );
                out.push_str(&detect_row(d));
            }
            ReportBody::Sweep(s) => {
                out.push_str(
                    "attack,n,tau,per_case1,per_case2,per_case3,per_case4,\
                     per_particle_exact,per_particle_closed_form,cumulative,mc_sessions,\
                     mc_detected,mc_estimate,mc_std_error\n",
                );
                for row in &s.rows {
                    out.push_str(&row.attack);
                    out.push(',');
                    out.push_str(&detect_row(&row.detection));
                }
            }
            ReportBody::Efficiency(e) => {
                out.push_str("n,tau,lk,lq,lq_source,lq_reprepared,lc,ce\n");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    e.n, e.tau, e.lk, e.lq, e.lq_source, e.lq_reprepared, e.lc, e.ce
                );
            }
            ReportBody::Verify(v) => {
                out.push_str("id,name,passed,details\n");
                for c in &v.criteria {
                    let _ = writeln!(
                        out,
                        "{},{},{},\"{}\"",
                        c.id,
                        c.name,
                        c.passed,
                        c.details.replace('"', "'")
                    );
                }
            }
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, ReportError> {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => Ok(self.to_csv()),
        }
    }
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn detect_row(d: &DetectionReport) -> String {
    let (s, k, est, err) = match &d.monte_carlo {
        Some(mc) => (
            mc.sessions.to_string(),
            mc.detected.to_string(),
            mc.estimate.to_string(),
            mc.std_error.to_string(),
        ),
        None => (String::new(), String::new(), String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        d.n,
        d.tau,
        d.per_case_exact[0],
        d.per_case_exact[1],
        d.per_case_exact[2],
        d.per_case_exact[3],
        d.per_particle_exact,
        d.per_particle_closed_form
            .map(|p| p.to_string())
            .unwrap_or_default(),
        d.cumulative,
        s,
        k,
        est,
        err
    )
}

/// Resolve the output path: relative paths land in [`OUT_DIR_ENV`]'s
/// directory when that variable is set.
pub fn resolve_out_path(out: &str) -> PathBuf {
    let path = PathBuf::from(out);
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path,
    }
}

/// Write the rendered report to the resolved path, creating parent
/// directories as needed.
pub fn write_report(report: &Report, format: OutputFormat, out: &str) -> Result<PathBuf, ReportError> {
    let path = resolve_out_path(out);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, report.render(format)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{run_session, SessionConfig};

    fn sample_config(command: Command) -> RunConfig {
        RunConfig {
            command,
            n: 2,
            tau: 1,
            seed: 9,
            attack: "none".into(),
            sessions: 0,
            format: OutputFormat::Json,
            out: None,
            quick: false,
        }
    }

    #[test]
    fn presets_resolve() {
        for preset in SWEEP_PRESETS {
            assert!(parse_attack(preset).is_ok(), "{preset}");
        }
        assert!(matches!(
            parse_attack("sidechannel"),
            Err(ReportError::UnknownAttack(_))
        ));
        assert!(parse_attack("entangle-measure:/no/such/file").is_err());
    }

    #[test]
    fn run_report_roundtrips_through_json() {
        let session = run_session(&SessionConfig::new(2, 1, 9, AttackSpec::None)).unwrap();
        let report = Report::new(sample_config(Command::Run), ReportBody::Run(Box::new(session)));
        let json = report.to_json().unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn detect_and_efficiency_reports_roundtrip() {
        let detection = crate::analysis::detection_report(
            &AttackSpec::MeasureResend {
                target: Channel::B,
            },
            1,
            1,
            50,
            13,
        )
        .unwrap();
        let report = Report::new(sample_config(Command::Detect), ReportBody::Detect(detection));
        let back: Report = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);

        let eff = crate::analysis::efficiency(96, 4);
        let report = Report::new(sample_config(Command::Efficiency), ReportBody::Efficiency(eff));
        let back: Report = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn identical_configs_render_identically() {
        let make = || {
            let session = run_session(&SessionConfig::new(2, 1, 9, AttackSpec::None)).unwrap();
            Report::new(sample_config(Command::Run), ReportBody::Run(Box::new(session)))
                .to_json()
                .unwrap()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn csv_has_one_row_per_round() {
        let session = run_session(&SessionConfig::new(2, 1, 9, AttackSpec::None)).unwrap();
        let rounds = session.records.len();
        let report = Report::new(sample_config(Command::Run), ReportBody::Run(Box::new(session)));
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), rounds + 1);
        assert!(csv.starts_with("index,"));
    }

    #[test]
    fn out_dir_env_controls_relative_paths() {
        // Absolute paths pass through untouched.
        let abs = resolve_out_path("/tmp/x.json");
        assert_eq!(abs, PathBuf::from("/tmp/x.json"));
    }
}
