//! The self-verification checklist.
//!
//! Nine numbered criteria pin the crate's core claims: basis construction,
//! the source state's conditional structure, honest-protocol completeness,
//! the exact and sampled detection rates of every attack family, probe
//! constancy, the efficiency formula and report determinism. Each criterion
//! states its tolerance in code and carries a wall-clock budget. The CLI's
//! `verify` command and the `acceptance` test target both run this list.
//!
//! `quick` mode subsamples the Monte Carlo criteria (10³ sessions instead of
//! 10⁴); the statistical bands widen automatically with the sample count.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{eve_guess, AttackSpec, Channel, EntangleMeasureSpec, FakeBit};
use crate::analysis::{
    cumulative_detection, detection_report, efficiency, exact_detection, monte_carlo_detection,
};
use crate::protocol::{run_session_traced, SessionConfig};
use crate::qstate::{bell_state, ghz_like_state, Basis, RegisterLabel, PSI_PLUS};
use crate::report::{Command, CriterionReport, OutputFormat, Report, ReportBody, RunConfig, VerifyReport};
use crate::rng::{derive_seed, rng_from_seed};

const EXACT_TOL: f64 = 1e-12;
const PROBE_TOL: f64 = 1e-10;

/// Result of one criterion run.
#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub runtime_ms: u128,
    pub budget_ms: u128,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{}  {}. {}: {} [{} ms, budget {} ms]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details,
            self.runtime_ms,
            self.budget_ms
        )
    }
}

pub const CRITERION_COUNT: u32 = 9;

type CriterionBody = fn(bool) -> (bool, String);

/// Run one criterion (1-9). Panics on an unknown id.
pub fn run_criterion(id: u32, quick: bool) -> CriterionOutcome {
    let (name, budget_ms, body): (&'static str, u128, CriterionBody) = match id {
        1 => ("basis correctness", 1_000, c1_basis),
        2 => ("source-state decomposition", 1_000, c2_decomposition),
        3 => ("honest protocol", 10_000, c3_honest),
        4 => ("measure-resend detection", 60_000, c4_measure_resend),
        5 => ("intercept-resend detection", 60_000, c5_intercept_resend),
        6 => ("double-CNOT invisibility/uselessness", 30_000, c6_double_cnot),
        7 => ("entangle-measure constraint", 120_000, c7_entangle_measure),
        8 => ("communication efficiency", 1_000, c8_efficiency),
        9 => ("report determinism", 60_000, c9_determinism),
        _ => panic!("unknown criterion id {id}"),
    };
    let start = Instant::now();
    let (ok, details) = body(quick);
    let runtime_ms = start.elapsed().as_millis();
    CriterionOutcome {
        id,
        name,
        passed: ok && runtime_ms <= budget_ms,
        details,
        runtime_ms,
        budget_ms,
    }
}

/// Run the whole checklist in order.
pub fn run_all(quick: bool) -> Vec<CriterionOutcome> {
    (1..=CRITERION_COUNT)
        .map(|id| run_criterion(id, quick))
        .collect()
}

/// Convert checklist outcomes into the report body.
pub fn to_report(outcomes: &[CriterionOutcome]) -> VerifyReport {
    VerifyReport {
        passed: outcomes.iter().all(|o| o.passed),
        criteria: outcomes
            .iter()
            .map(|o| CriterionReport {
                id: o.id,
                name: o.name.to_string(),
                passed: o.passed,
                details: o.details.clone(),
            })
            .collect(),
    }
}

fn qubits_abc() -> [RegisterLabel; 3] {
    [
        RegisterLabel::qubit("a"),
        RegisterLabel::qubit("b"),
        RegisterLabel::qubit("c"),
    ]
}

/// Criterion 1: The eight three-qubit basis states have an identity 8×8 Gram matrix
/// and the four Bell states are orthonormal, all within 1e-12.
fn c1_basis(_quick: bool) -> (bool, String) {
    let mut max_dev = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let gi = ghz_like_state(i, qubits_abc()).unwrap();
            let gj = ghz_like_state(j, qubits_abc()).unwrap();
            let ip = gi.inner(&gj).unwrap();
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((ip - C64::new(target, 0.0)).norm());
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            let bi = bell_state(i, [RegisterLabel::qubit("a"), RegisterLabel::qubit("b")]).unwrap();
            let bj = bell_state(j, [RegisterLabel::qubit("a"), RegisterLabel::qubit("b")]).unwrap();
            let ip = bi.inner(&bj).unwrap();
            let target = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((ip - C64::new(target, 0.0)).norm());
        }
    }
    (
        max_dev <= EXACT_TOL,
        format!("max Gram deviation {max_dev:.2e} (tolerance 1e-12)"),
    )
}

/// Criterion 2: Conditioning the source triple on a Z outcome of any single register
/// leaves the other two registers in an exact Bell eigenstate: outcome 0
/// pairs with ψ⁺, outcome 1 with φ⁺, each branch having probability 1/2.
fn c2_decomposition(_quick: bool) -> (bool, String) {
    let [a, b, c] = qubits_abc();
    let g1 = ghz_like_state(1, qubits_abc()).unwrap();
    let mut max_dev = 0.0f64;
    for (single, pair) in [
        (a.clone(), [b.clone(), c.clone()]),
        (b.clone(), [a.clone(), c.clone()]),
        (c.clone(), [a.clone(), b.clone()]),
    ] {
        for bit in 0..2usize {
            let (p, post) = g1.project(Basis::Z, &[&single], bit).unwrap();
            max_dev = max_dev.max((p - 0.5).abs());
            let dist = post
                .outcome_distribution(Basis::Bell, &[&pair[0], &pair[1]])
                .unwrap();
            let expected = if bit == 0 { PSI_PLUS } else { crate::qstate::PHI_PLUS };
            let point = dist.get(&expected).copied().unwrap_or(0.0);
            max_dev = max_dev.max((point - 1.0).abs());
            max_dev = max_dev.max(dist.len() as f64 - 1.0);
        }
    }
    (
        max_dev <= EXACT_TOL,
        format!("max deviation from the exact pairings {max_dev:.2e} (tolerance 1e-12)"),
    )
}

/// Criterion 3: One hundred honest sessions at n=16, τ=2 under distinct seeds: no
/// aborts, no inconsistent checked round, both copies of each pairwise key
/// agree, and complement(K_A) = K_B ⊕ K_C throughout.
fn c3_honest(quick: bool) -> (bool, String) {
    let sessions = if quick { 25 } else { 100 };
    let mut restarts_total = 0u32;
    for seed in 0..sessions {
        let config = SessionConfig::new(16, 2, seed, AttackSpec::None);
        let (result, _) = match run_session_traced(&config) {
            Ok(r) => r,
            Err(e) => return (false, format!("seed {seed}: session error: {e}")),
        };
        restarts_total += result.restarts;
        if result.aborted {
            return (false, format!("seed {seed}: honest session aborted"));
        }
        if result.inconsistent_counts.iter().any(|&k| k > 0) {
            return (false, format!("seed {seed}: inconsistent checked round"));
        }
        let keys = result.keys.expect("non-aborted session has keys");
        if !keys.k_ab.agree() || !keys.k_ac.agree() {
            return (false, format!("seed {seed}: key copies disagree"));
        }
        if !keys.secret_sharing_holds() {
            return (false, format!("seed {seed}: secret-sharing relation broken"));
        }
        if keys.k_a.len() != 16 || keys.k_ab.peer.len() != 16 {
            return (false, format!("seed {seed}: short key"));
        }
    }
    (
        true,
        format!("{sessions} sessions clean ({restarts_total} sift restarts among them)"),
    )
}

fn check_exact(
    attack: &AttackSpec,
    want_cases: [f64; 4],
    want_particle: f64,
    label: &str,
    problems: &mut Vec<String>,
) {
    match exact_detection(attack) {
        Ok(d) => {
            for i in 0..4 {
                if (d.per_case[i] - want_cases[i]).abs() > EXACT_TOL {
                    problems.push(format!(
                        "{label}: case {} = {} (want {})",
                        i + 1,
                        d.per_case[i],
                        want_cases[i]
                    ));
                }
            }
            if (d.per_particle - want_particle).abs() > EXACT_TOL {
                problems.push(format!(
                    "{label}: per-particle = {} (want {})",
                    d.per_particle, want_particle
                ));
            }
        }
        Err(e) => problems.push(format!("{label}: oracle error: {e}")),
    }
}

fn check_monte_carlo(
    attack: &AttackSpec,
    sessions: u64,
    seed: u64,
    target: f64,
    label: &str,
    problems: &mut Vec<String>,
) -> String {
    match monte_carlo_detection(attack, 1, 1, sessions, seed) {
        Ok(mc) => {
            let sigma = (target * (1.0 - target) / sessions as f64).sqrt();
            let dev = (mc.estimate - target).abs();
            if dev > 4.0 * sigma {
                problems.push(format!(
                    "{label}: MC {:.5} vs target {:.5} is {:.1}σ off",
                    mc.estimate,
                    target,
                    dev / sigma
                ));
            }
            format!("{label} {:.4} ({:+.1}σ)", mc.estimate, (mc.estimate - target) / sigma)
        }
        Err(e) => {
            problems.push(format!("{label}: Monte Carlo error: {e}"));
            String::new()
        }
    }
}

/// Criterion 4: Measure-resend: the oracle reproduces 3/16 exactly, the per-case
/// conditional rates are (0, 0, 1/2, 1/2) on channel b (cases 2/3 swap on
/// channel c), and the first-pass Monte Carlo abort rate at n=τ=1 lands
/// within 4σ of 1 − (13/16)^16 on both channels.
fn c4_measure_resend(quick: bool) -> (bool, String) {
    let sessions: u64 = if quick { 1_000 } else { 10_000 };
    let mut problems = Vec::new();
    check_exact(
        &AttackSpec::MeasureResend { target: Channel::B },
        [0.0, 0.0, 0.5, 0.5],
        3.0 / 16.0,
        "channel b",
        &mut problems,
    );
    check_exact(
        &AttackSpec::MeasureResend { target: Channel::C },
        [0.0, 0.5, 0.0, 0.5],
        3.0 / 16.0,
        "channel c",
        &mut problems,
    );
    let target = 1.0 - (13.0f64 / 16.0).powi(16);
    let mb = check_monte_carlo(
        &AttackSpec::MeasureResend { target: Channel::B },
        sessions,
        0xA4,
        target,
        "MC(b)",
        &mut problems,
    );
    let mc = check_monte_carlo(
        &AttackSpec::MeasureResend { target: Channel::C },
        sessions,
        0xA5,
        target,
        "MC(c)",
        &mut problems,
    );
    if problems.is_empty() {
        (
            true,
            format!("exact 3/16 on both channels; {mb}, {mc} vs {target:.4}, {sessions} sessions"),
        )
    } else {
        (false, problems.join("; "))
    }
}

/// Criterion 5: Intercept-resend: 13/32 exactly, per-case (1/2, 1/2, 3/4, 3/4) on
/// channel b (cases 2/3 swap on channel c), Monte Carlo within 4σ of
/// 1 − (19/32)^16 on both channels.
fn c5_intercept_resend(quick: bool) -> (bool, String) {
    let sessions: u64 = if quick { 1_000 } else { 10_000 };
    let mut problems = Vec::new();
    check_exact(
        &AttackSpec::InterceptResend {
            target: Channel::B,
            fake: FakeBit::Zero,
        },
        [0.5, 0.5, 0.75, 0.75],
        13.0 / 32.0,
        "channel b",
        &mut problems,
    );
    check_exact(
        &AttackSpec::InterceptResend {
            target: Channel::C,
            fake: FakeBit::Zero,
        },
        [0.5, 0.75, 0.5, 0.75],
        13.0 / 32.0,
        "channel c",
        &mut problems,
    );
    let target = 1.0 - (19.0f64 / 32.0).powi(16);
    let mb = check_monte_carlo(
        &AttackSpec::InterceptResend {
            target: Channel::B,
            fake: FakeBit::Zero,
        },
        sessions,
        0xB4,
        target,
        "MC(b)",
        &mut problems,
    );
    let mc = check_monte_carlo(
        &AttackSpec::InterceptResend {
            target: Channel::C,
            fake: FakeBit::Zero,
        },
        sessions,
        0xB5,
        target,
        "MC(c)",
        &mut problems,
    );
    if problems.is_empty() {
        (
            true,
            format!("exact 13/32 on both channels; {mb}, {mc} vs {target:.5}, {sessions} sessions"),
        )
    } else {
        (false, problems.join("; "))
    }
}

/// Criterion 6: Both CNOT attacks pass every check, their ancillas finish every round
/// in the initial |0⟩ (⊗|0⟩) state within 1e-10, and guessing key bits from
/// the ancilla readout is worth a coin flip.
fn c6_double_cnot(quick: bool) -> (bool, String) {
    let sessions: u64 = if quick { 200 } else { 1_000 };
    let variants: [(&str, AttackSpec); 3] = [
        ("single-b", AttackSpec::DoubleCnotSingle { target: Channel::B }),
        ("single-c", AttackSpec::DoubleCnotSingle { target: Channel::C }),
        ("twice", AttackSpec::DoubleCnotTwice),
    ];
    let mut problems = Vec::new();
    let mut summary = Vec::new();
    for (label, attack) in variants {
        // The fidelity reference extracted from the first round must be the
        // ancilla ground state itself.
        match run_session_traced(&SessionConfig::new(2, 1, 0xC0, attack.clone())) {
            Ok((_, eve)) => match eve.reference_probe() {
                Some(reference) if (reference[0].norm() - 1.0).abs() < 1e-9 => {}
                Some(_) => problems.push(format!("{label}: reference probe is not |0…0⟩")),
                None => problems.push(format!("{label}: no reference probe recorded")),
            },
            Err(e) => problems.push(format!("{label}: {e}")),
        }
        let collected: Result<Vec<(bool, f64, u64, u64)>, String> = (0..sessions)
            .into_par_iter()
            .map(|i| {
                let config = SessionConfig::new(8, 2, derive_seed(0xC6, i), attack.clone());
                let (result, eve) =
                    run_session_traced(&config).map_err(|e| format!("{label}: {e}"))?;
                let detected = result.inconsistent_counts.iter().any(|&k| k > 0);
                let min_fid = eve
                    .rounds
                    .iter()
                    .filter_map(|r| r.probe_fidelity)
                    .fold(f64::INFINITY, f64::min);
                let (matches, bits) = match &result.keys {
                    Some(keys) => {
                        let guesses = eve_guess(&attack, &eve, &result.records, 8);
                        let actual = keys.k_ab.peer.bits();
                        let m = guesses
                            .iter()
                            .zip(actual)
                            .filter(|(g, a)| g == a)
                            .count() as u64;
                        (m, actual.len() as u64)
                    }
                    None => (0, 0),
                };
                Ok((detected, min_fid, matches, bits))
            })
            .collect();
        let collected = match collected {
            Ok(c) => c,
            Err(e) => return (false, e),
        };
        let detections = collected.iter().filter(|x| x.0).count();
        let min_fid = collected.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let matches: u64 = collected.iter().map(|x| x.2).sum();
        let bits: u64 = collected.iter().map(|x| x.3).sum();
        if detections > 0 {
            problems.push(format!("{label}: {detections} sessions detected"));
        }
        if min_fid < 1.0 - PROBE_TOL {
            problems.push(format!("{label}: probe fidelity dropped to {min_fid}"));
        }
        let accuracy = matches as f64 / bits as f64;
        let sigma = 0.5 / (bits as f64).sqrt();
        if (accuracy - 0.5).abs() > 4.0 * sigma {
            problems.push(format!(
                "{label}: guess accuracy {accuracy:.4} over {bits} bits is {:.1}σ from 1/2",
                (accuracy - 0.5).abs() / sigma
            ));
        }
        summary.push(format!("{label}: fid≥{min_fid:.12}, acc {accuracy:.3} over {bits} bits"));
    }
    if problems.is_empty() {
        (true, format!("0 detections in {sessions} sessions/variant; {}", summary.join("; ")))
    } else {
        (false, problems.join("; "))
    }
}

/// Criterion 7: Entangle-measure, both directions of the no-error constraint. A
/// compliant attack (no bit mixing, a single common probe ket, identity
/// return unitary) is invisible and its probe never moves; one hundred
/// sampled violating attacks (bit-mixing rotations and probe markings) all
/// have strictly positive exact detection probability.
fn c7_entangle_measure(quick: bool) -> (bool, String) {
    let mut problems = Vec::new();

    let compliant = EntangleMeasureSpec::compliant(4);
    let attack = AttackSpec::EntangleMeasure(Box::new(compliant));
    match exact_detection(&attack) {
        Ok(d) => {
            if d.per_particle.abs() > EXACT_TOL {
                problems.push(format!("compliant attack detected at rate {}", d.per_particle));
            }
        }
        Err(e) => problems.push(format!("compliant oracle error: {e}")),
    }
    let n = if quick { 4 } else { 16 };
    match run_session_traced(&SessionConfig::new(n, 2, 0xE7, attack)) {
        Ok((result, eve)) => {
            if result.aborted {
                problems.push("compliant attack aborted a session".into());
            }
            let min_fid = eve
                .rounds
                .iter()
                .filter_map(|r| r.probe_fidelity)
                .fold(f64::INFINITY, f64::min);
            if min_fid < 1.0 - PROBE_TOL {
                problems.push(format!("compliant probe fidelity dropped to {min_fid}"));
            }
            // The constant probe is the attached ket pair itself: |χ⟩|χ⟩,
            // here the first basis vector of the 16-dimensional probe space.
            match eve.reference_probe() {
                Some(reference) => {
                    if (reference[0].norm() - 1.0).abs() > 1e-9 {
                        problems.push("compliant reference probe is not |χ⟩|χ⟩".into());
                    }
                }
                None => problems.push("no reference probe recorded".into()),
            }
        }
        Err(e) => problems.push(format!("compliant session error: {e}")),
    }

    // Contrapositive, by sampling violating attacks.
    let mut rng = rng_from_seed(0x7E);
    let mut min_detection = f64::INFINITY;
    let mut tested = 0u32;
    for k in 0..100 {
        let spec = if k % 2 == 0 {
            // Bit-mixing rotation, θ well away from the compliant θ = 0.
            let theta = 0.1 + rng.gen::<f64>() * (std::f64::consts::FRAC_PI_2 - 0.2);
            match EntangleMeasureSpec::rotation(theta, 4) {
                Ok(s) => s,
                Err(e) => {
                    problems.push(format!("rotation build failed: {e}"));
                    continue;
                }
            }
        } else {
            // Probe marking with a random orthonormal pair of probe kets.
            let chi0 = random_unit(&mut rng, 4);
            let chi1 = random_orthogonal_unit(&mut rng, &chi0);
            match EntangleMeasureSpec::marking(chi0, chi1) {
                Ok(s) => s,
                Err(e) => {
                    problems.push(format!("marking build failed: {e}"));
                    continue;
                }
            }
        };
        match exact_detection(&AttackSpec::EntangleMeasure(Box::new(spec))) {
            Ok(d) => {
                tested += 1;
                min_detection = min_detection.min(d.per_particle);
                if d.per_particle <= 1e-6 {
                    problems.push(format!(
                        "violating attack {k} nearly invisible: detection {}",
                        d.per_particle
                    ));
                }
            }
            Err(e) => problems.push(format!("violating attack {k}: oracle error: {e}")),
        }
    }
    if problems.is_empty() {
        (
            true,
            format!(
                "compliant attack invisible with frozen probe; {tested} violating attacks all \
                 detected (min exact detection {min_detection:.3e} > 1e-6)"
            ),
        )
    } else {
        (false, problems.join("; "))
    }
}

fn random_unit(rng: &mut crate::rng::SimRng, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn random_orthogonal_unit(rng: &mut crate::rng::SimRng, against: &[C64]) -> Vec<C64> {
    loop {
        let mut v = random_unit(rng, against.len());
        let overlap: C64 = against.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
        for (x, a) in v.iter_mut().zip(against) {
            *x -= overlap * a;
        }
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Criterion 8: CE = 3n / (32(n+τ)) with the qubit count decomposing as
/// 24(n+τ) + 8(n+τ), and the n→∞ limit 3/32 reached within 1e-4 by n = 10⁶.
fn c8_efficiency(_quick: bool) -> (bool, String) {
    let mut problems = Vec::new();
    for (n, tau) in [(1u64, 1u64), (16, 2), (96, 4), (1000, 7), (12345, 11)] {
        let e = efficiency(n, tau);
        let want = 3.0 * n as f64 / (32.0 * (n + tau) as f64);
        if (e.ce - want).abs() > EXACT_TOL {
            problems.push(format!("(n={n}, τ={tau}): ce {} vs {want}", e.ce));
        }
        if e.lq_source != 24 * (n + tau) || e.lq_reprepared != 8 * (n + tau) {
            problems.push(format!("(n={n}, τ={tau}): qubit accounting off"));
        }
        if e.lk != 3 * n || e.lq != 32 * (n + tau) || e.lc != 0 {
            problems.push(format!("(n={n}, τ={tau}): totals off"));
        }
    }
    let limit = efficiency(1_000_000, 1);
    if (limit.ce - 3.0 / 32.0).abs() > 1e-4 {
        problems.push(format!("limit ce {} misses 3/32", limit.ce));
    }
    let e96 = efficiency(96, 4);
    if problems.is_empty() {
        (
            true,
            format!(
                "ce(96,4) = {}, limit {} → 3/32 = {}",
                e96.ce,
                limit.ce,
                3.0 / 32.0
            ),
        )
    } else {
        (false, problems.join("; "))
    }
}

/// Criterion 9: Identical configurations (seed included) render byte-identical JSON
/// reports, for both a session run and a Monte Carlo detect run.
fn c9_determinism(quick: bool) -> (bool, String) {
    let sessions = if quick { 50 } else { 200 };
    let run_report = || -> Result<String, String> {
        let config = RunConfig {
            command: Command::Run,
            n: 4,
            tau: 1,
            seed: 42,
            attack: "measure-resend-b".into(),
            sessions: 0,
            format: OutputFormat::Json,
            out: None,
            quick: false,
        };
        let session = crate::protocol::run_session(&SessionConfig::new(
            4,
            1,
            42,
            AttackSpec::MeasureResend { target: Channel::B },
        ))
        .map_err(|e| e.to_string())?;
        Report::new(config, ReportBody::Run(Box::new(session)))
            .to_json()
            .map_err(|e| e.to_string())
    };
    let detect_report = || -> Result<String, String> {
        let config = RunConfig {
            command: Command::Detect,
            n: 1,
            tau: 1,
            seed: 7,
            attack: "intercept-resend-b".into(),
            sessions,
            format: OutputFormat::Json,
            out: None,
            quick: false,
        };
        let detection = detection_report(
            &AttackSpec::InterceptResend {
                target: Channel::B,
                fake: FakeBit::Zero,
            },
            1,
            1,
            sessions,
            7,
        )
        .map_err(|e| e.to_string())?;
        Report::new(config, ReportBody::Detect(detection))
            .to_json()
            .map_err(|e| e.to_string())
    };
    for (label, build) in [
        ("run", &run_report as &dyn Fn() -> Result<String, String>),
        ("detect", &detect_report),
    ] {
        let first = match build() {
            Ok(s) => s,
            Err(e) => return (false, format!("{label}: {e}")),
        };
        let second = match build() {
            Ok(s) => s,
            Err(e) => return (false, format!("{label}: {e}")),
        };
        if first != second {
            return (false, format!("{label} reports differ between identical runs"));
        }
    }
    (true, "run and detect reports byte-identical across repeat builds".into())
}

// Touch cumulative_detection here so the closed-form helper stays the single
// source for the targets used above.
#[allow(dead_code)]
fn closed_form_targets() -> (f64, f64) {
    (
        cumulative_detection(3.0 / 16.0, 1, 1),
        cumulative_detection(13.0 / 32.0, 1, 1),
    )
}
