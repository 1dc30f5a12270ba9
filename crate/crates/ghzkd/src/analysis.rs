//! Detection-probability oracles, Monte Carlo estimators and the efficiency
//! metric.
//!
//! The exact oracle never samples: it walks the complete finite tree of one
//! attacked round — party modes (probability 1/4 each), every stochastic
//! branch the attack itself takes, the parties' Born-rule measurement
//! branches — and weighs each leaf's chance of failing Alice's consistency
//! comparison, times the chance the round is selected for checking (1/2 for
//! cases 1-3, 1 for case 4). This is the reference every sampled statistic
//! in the crate is held against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::adversary::{AttackError, AttackSpec, Channel, CompiledAttack, RoundScratch, Transit};
use crate::protocol::{
    fresh_transit, reg_a, run_session_traced, AbortReason, CaseId, ProtocolError, RoundMode,
    SessionConfig,
};
use crate::qstate::{Basis, QStateError, RegisterLabel, PHI_PLUS, PSI_PLUS};
use crate::rng::derive_seed;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("attack has no probe register to analyze")]
    NoProbe,
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Exact single-round detection probabilities for an attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDetection {
    /// P(check fails | the round falls in case i+1 and is checked).
    pub per_case: [f64; 4],
    /// P(a single attacked round triggers a detection), marginalized over
    /// modes and check selection.
    pub per_particle: f64,
}

/// One enumeration branch: reached with `probability`, carrying the
/// in-transit state plus whatever the parties have announced so far.
struct BranchState {
    probability: f64,
    transit: Transit,
    scratch: RoundScratch,
    bob_bit: Option<u8>,
    charlie_bit: Option<u8>,
}

/// Walk the full branch tree of one round under the given modes and return
/// the exact probability that Alice's check fails.
fn case_inconsistency(attack: &CompiledAttack, case: CaseId) -> Result<f64, AnalysisError> {
    let (bob_mode, charlie_mode) = match case {
        CaseId::Case1 => (RoundMode::MeasureResend, RoundMode::MeasureResend),
        CaseId::Case2 => (RoundMode::MeasureResend, RoundMode::Reflect),
        CaseId::Case3 => (RoundMode::Reflect, RoundMode::MeasureResend),
        CaseId::Case4 => (RoundMode::Reflect, RoundMode::Reflect),
    };

    let mut branches = vec![BranchState {
        probability: 1.0,
        transit: fresh_transit()?,
        scratch: RoundScratch::default(),
        bob_bit: None,
        charlie_bit: None,
    }];

    // Outbound legs, with the attack's own stochastic choices enumerated.
    for ch in [Channel::B, Channel::C] {
        let mut next = Vec::with_capacity(branches.len());
        for b in branches {
            for (p, transit, scratch) in attack.outbound_branches(&b.transit, ch, &b.scratch)? {
                next.push(BranchState {
                    probability: b.probability * p,
                    transit,
                    scratch,
                    bob_bit: b.bob_bit,
                    charlie_bit: b.charlie_bit,
                });
            }
        }
        branches = next;
    }

    // Party actions: a MEASURE-RESEND splits each branch over the wire's
    // Z outcomes with Born weights.
    for (mode, ch) in [(bob_mode, Channel::B), (charlie_mode, Channel::C)] {
        if mode != RoundMode::MeasureResend {
            continue;
        }
        let mut next = Vec::with_capacity(branches.len() * 2);
        for b in branches {
            let wire = b.transit.wire(ch).clone();
            let dist = b.transit.ket.outcome_distribution(Basis::Z, &[&wire])?;
            for (value, p) in dist {
                let (_, post) = b.transit.ket.project(Basis::Z, &[&wire], value)?;
                let mut transit = b.transit.clone();
                transit.ket = post;
                let mut branch = BranchState {
                    probability: b.probability * p,
                    transit,
                    scratch: b.scratch.clone(),
                    bob_bit: b.bob_bit,
                    charlie_bit: b.charlie_bit,
                };
                match ch {
                    Channel::B => branch.bob_bit = Some(value as u8),
                    Channel::C => branch.charlie_bit = Some(value as u8),
                }
                next.push(branch);
            }
        }
        branches = next;
    }

    // Return legs are deterministic for every attack family.
    for b in branches.iter_mut() {
        attack.inbound(&mut b.transit, Channel::B, &mut b.scratch)?;
        attack.inbound(&mut b.transit, Channel::C, &mut b.scratch)?;
    }

    let mut inconsistent = 0.0;
    for b in &branches {
        let accept = accept_probability(case, &b.transit, b.bob_bit, b.charlie_bit)?;
        inconsistent += b.probability * (1.0 - accept);
    }
    Ok(inconsistent.clamp(0.0, 1.0))
}

/// Probability that Alice's case measurements come out exactly as the
/// announced bits require.
fn accept_probability(
    case: CaseId,
    transit: &Transit,
    bob_bit: Option<u8>,
    charlie_bit: Option<u8>,
) -> Result<f64, AnalysisError> {
    let a = reg_a();
    let wb = &transit.wire_b;
    let wc = &transit.wire_c;
    let steps: Vec<(Basis, Vec<&RegisterLabel>, usize)> = match case {
        CaseId::Case1 => {
            let s = bob_bit.expect("case 1 has Bob's bit") as usize;
            let t = charlie_bit.expect("case 1 has Charlie's bit") as usize;
            let want_a = 1 - (s ^ t);
            vec![
                (Basis::Z, vec![wb], s),
                (Basis::Z, vec![wc], t),
                (Basis::Z, vec![&a], want_a),
            ]
        }
        CaseId::Case2 => {
            let s = bob_bit.expect("case 2 has Bob's bit") as usize;
            let bell = if s == 0 { PSI_PLUS } else { PHI_PLUS };
            vec![(Basis::Z, vec![wb], s), (Basis::Bell, vec![&a, wc], bell)]
        }
        CaseId::Case3 => {
            let t = charlie_bit.expect("case 3 has Charlie's bit") as usize;
            let bell = if t == 0 { PSI_PLUS } else { PHI_PLUS };
            vec![(Basis::Z, vec![wc], t), (Basis::Bell, vec![&a, wb], bell)]
        }
        CaseId::Case4 => vec![(Basis::GhzLike, vec![&a, wb, wc], 1)],
    };

    let mut prob = 1.0;
    let mut ket = transit.ket.clone();
    for (basis, targets, want) in steps {
        let dist = ket.outcome_distribution(basis, &targets)?;
        let p = dist.get(&want).copied().unwrap_or(0.0);
        if p <= 1e-15 {
            return Ok(0.0);
        }
        let (_, post) = ket.project(basis, &targets, want)?;
        prob *= p;
        ket = post;
    }
    Ok(prob)
}

/// Exact per-case and per-particle detection probabilities, by full branch
/// enumeration. Supports every attack variant; the closed-form literature
/// values for measure-resend (3/16) and intercept-resend (13/32) fall out of
/// this computation rather than being assumed.
pub fn exact_detection(attack: &AttackSpec) -> Result<ExactDetection, AnalysisError> {
    let compiled = CompiledAttack::new(attack.clone())?;
    let mut per_case = [0.0f64; 4];
    for case in CaseId::ALL {
        per_case[case.index()] = case_inconsistency(&compiled, case)?;
    }
    let per_particle = CaseId::ALL
        .iter()
        .map(|&case| 0.25 * case.check_probability() * per_case[case.index()])
        .sum();
    Ok(ExactDetection {
        per_case,
        per_particle,
    })
}

/// The closed-form per-particle detection probability, where one exists.
pub fn closed_form_per_particle(attack: &AttackSpec) -> Option<f64> {
    match attack {
        AttackSpec::None => Some(0.0),
        AttackSpec::MeasureResend { .. } => Some(3.0 / 16.0),
        AttackSpec::InterceptResend { .. } => Some(13.0 / 32.0),
        AttackSpec::DoubleCnotSingle { .. } | AttackSpec::DoubleCnotTwice => Some(0.0),
        AttackSpec::EntangleMeasure(_) => None,
    }
}

/// Probability that at least one of the 8(n+τ) attacked rounds triggers a
/// detection, treating rounds as independent: 1 − (1−p)^{8(n+τ)}.
pub fn cumulative_detection(per_particle: f64, n: u32, tau: u32) -> f64 {
    let rounds = 8 * (n as i32 + tau as i32);
    1.0 - (1.0 - per_particle).powi(rounds)
}

/// A binomial Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub sessions: u64,
    pub detected: u64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Fraction of sessions in which the security check catches the attack on
/// the first pass of 8(n+τ) rounds (abort threshold zero). Sessions run
/// independently under seeds derived from `root_seed`, so the estimate is
/// reproducible and order-independent.
///
/// Only error-rate halts count, and only on the initial attempt: a sift
/// shortfall is not a detection, and the rounds of a restarted exchange are
/// extra detection opportunities the single-pass closed form
/// 1 − (1−p)^{8(n+τ)} does not model. A first-pass detection is exactly an
/// error-rate abort with zero restarts, since a check failure ends the
/// session on the spot.
pub fn monte_carlo_detection(
    attack: &AttackSpec,
    n: u32,
    tau: u32,
    sessions: u64,
    root_seed: u64,
) -> Result<MonteCarloEstimate, AnalysisError> {
    let detected = (0..sessions)
        .into_par_iter()
        .map(|i| {
            let config = SessionConfig::new(n, tau, derive_seed(root_seed, i), attack.clone());
            let result = crate::protocol::run_session(&config)?;
            Ok(u64::from(
                result.abort_reason == Some(AbortReason::ErrorRate) && result.restarts == 0,
            ))
        })
        .try_reduce(|| 0u64, |x, y| Ok(x + y))
        .map_err(|e: ProtocolError| AnalysisError::from(e))?;
    let estimate = detected as f64 / sessions as f64;
    let std_error = (estimate * (1.0 - estimate) / sessions as f64).sqrt();
    Ok(MonteCarloEstimate {
        sessions,
        detected,
        estimate,
        std_error,
    })
}

/// Everything the `detect` command reports for one attack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub n: u32,
    pub tau: u32,
    pub per_case_exact: [f64; 4],
    pub per_particle_exact: f64,
    /// Literature closed form for the attack family, when one exists.
    pub per_particle_closed_form: Option<f64>,
    /// 1 − (1 − per_particle_exact)^{8(n+τ)}.
    pub cumulative: f64,
    pub monte_carlo: Option<MonteCarloEstimate>,
}

/// Assemble a [`DetectionReport`]: the exact oracle, the closed form, the
/// cumulative probability at (n, τ) and (for `sessions > 0`) a Monte Carlo
/// cross-check.
pub fn detection_report(
    attack: &AttackSpec,
    n: u32,
    tau: u32,
    sessions: u64,
    root_seed: u64,
) -> Result<DetectionReport, AnalysisError> {
    let exact = exact_detection(attack)?;
    let monte_carlo = if sessions > 0 {
        Some(monte_carlo_detection(attack, n, tau, sessions, root_seed)?)
    } else {
        None
    };
    Ok(DetectionReport {
        n,
        tau,
        per_case_exact: exact.per_case,
        per_particle_exact: exact.per_particle,
        per_particle_closed_form: closed_form_per_particle(attack),
        cumulative: cumulative_detection(exact.per_particle, n, tau),
        monte_carlo,
    })
}

/// Communication-efficiency accounting for one session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub n: u64,
    pub tau: u64,
    /// Key bits established: three n-bit keys.
    pub lk: u64,
    /// Qubits expended in total.
    pub lq: u64,
    /// Qubits prepared at the source: 3 per round.
    pub lq_source: u64,
    /// Expected qubits re-prepared by the two semiquantum parties
    /// (each measures in half the rounds on average).
    pub lq_reprepared: u64,
    /// Classical bits expended, ignoring security-check announcements.
    pub lc: u64,
    /// lk / (lq + lc).
    pub ce: f64,
}

/// CE = LK / (LQ + LC) with the protocol's expected-value accounting:
/// LK = 3n, LQ = 24(n+τ) + 8(n+τ) = 32(n+τ), LC = 0, so
/// CE = 3n / (32(n+τ)).
pub fn efficiency(n: u64, tau: u64) -> EfficiencyReport {
    let rounds = 8 * (n + tau);
    let lq_source = 3 * rounds;
    let lq_reprepared = 2 * (rounds / 2);
    let lk = 3 * n;
    let lq = lq_source + lq_reprepared;
    let lc = 0;
    EfficiencyReport {
        n,
        tau,
        lk,
        lq,
        lq_source,
        lq_reprepared,
        lc,
        ce: lk as f64 / (lq + lc) as f64,
    }
}

/// Statistics of the eavesdropper's probe across sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub sessions: u64,
    pub rounds_observed: u64,
    /// Fidelity of each round's final probe state against the first round's,
    /// minimized / averaged over all rounds of all sessions.
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    /// Plug-in mutual information (bits) between a computational readout of
    /// the probe and the corresponding sifted key bit.
    pub mutual_information_bits: f64,
    /// Number of (probe readout, key bit) pairs behind the estimate.
    pub key_bits_observed: u64,
}

/// Measure how much a probe-leaving attack actually learns: per-round probe
/// fidelity against the first round's probe, and the empirical mutual
/// information between a fixed probe measurement and the key bits the
/// attacked channel contributes.
///
/// Errors for attacks that leave no probe behind.
pub fn probe_information(
    attack: &AttackSpec,
    n: u32,
    tau: u32,
    sessions: u64,
    root_seed: u64,
) -> Result<ProbeReport, AnalysisError> {
    if !attack.has_probe() {
        return Err(AnalysisError::NoProbe);
    }
    struct Partial {
        rounds: u64,
        min_fid: f64,
        sum_fid: f64,
        counts: BTreeMap<(usize, u8), u64>,
    }
    let merged = (0..sessions)
        .into_par_iter()
        .map(|i| {
            let config = SessionConfig::new(n, tau, derive_seed(root_seed, i), attack.clone());
            let (result, eve) = run_session_traced(&config)?;
            let mut part = Partial {
                rounds: 0,
                min_fid: f64::INFINITY,
                sum_fid: 0.0,
                counts: BTreeMap::new(),
            };
            for round in &eve.rounds {
                if let Some(f) = round.probe_fidelity {
                    part.rounds += 1;
                    part.min_fid = part.min_fid.min(f);
                    part.sum_fid += f;
                }
            }
            for r in &result.records {
                if r.case == CaseId::Case2 && !r.checked {
                    if let (Some(bit), Some(outcome)) =
                        (r.bob_z, eve.rounds[r.index].probe_outcome)
                    {
                        *part.counts.entry((outcome, bit)).or_insert(0) += 1;
                    }
                }
            }
            Ok(part)
        })
        .try_reduce(
            || Partial {
                rounds: 0,
                min_fid: f64::INFINITY,
                sum_fid: 0.0,
                counts: BTreeMap::new(),
            },
            |mut x, y| {
                x.rounds += y.rounds;
                x.min_fid = x.min_fid.min(y.min_fid);
                x.sum_fid += y.sum_fid;
                for (k, v) in y.counts {
                    *x.counts.entry(k).or_insert(0) += v;
                }
                Ok(x)
            },
        )
        .map_err(|e: ProtocolError| AnalysisError::from(e))?;

    let key_bits_observed: u64 = merged.counts.values().sum();
    Ok(ProbeReport {
        sessions,
        rounds_observed: merged.rounds,
        min_fidelity: if merged.rounds == 0 {
            f64::NAN
        } else {
            merged.min_fid
        },
        mean_fidelity: if merged.rounds == 0 {
            f64::NAN
        } else {
            merged.sum_fid / merged.rounds as f64
        },
        mutual_information_bits: mutual_information_bits(&merged.counts),
        key_bits_observed,
    })
}

/// Plug-in mutual information (bits) of a discrete joint sample given as
/// (x, y) → count.
pub fn mutual_information_bits(counts: &BTreeMap<(usize, u8), u64>) -> f64 {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut px: BTreeMap<usize, f64> = BTreeMap::new();
    let mut py: BTreeMap<u8, f64> = BTreeMap::new();
    for (&(x, y), &c) in counts {
        *px.entry(x).or_insert(0.0) += c as f64 / n;
        *py.entry(y).or_insert(0.0) += c as f64 / n;
    }
    let mut mi = 0.0;
    for (&(x, y), &c) in counts {
        if c == 0 {
            continue;
        }
        let pxy = c as f64 / n;
        mi += pxy * (pxy / (px[&x] * py[&y])).log2();
    }
    mi.max(0.0)
}
