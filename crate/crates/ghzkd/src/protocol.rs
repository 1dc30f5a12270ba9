//! The three-party round loop and session state machine.
//!
//! Alice (the quantum party) prepares the entangled triple |G₁⟩ on registers
//! (a, b, c), keeps a, and sends b to Bob and c to Charlie. Each semiquantum
//! party independently flips a fair coin between MEASURE-RESEND (measure in
//! Z, send back a fresh particle in the observed state) and REFLECT (return
//! the particle untouched). After all particles are back, modes are
//! announced and each round falls into one of four cases:
//!
//! | case | Bob     | Charlie | Alice measures                       |
//! |------|---------|---------|--------------------------------------|
//! | 1    | measure | measure | Z on a, Z on both returned particles |
//! | 2    | measure | reflect | Z on returned b, Bell on (a, c)      |
//! | 3    | reflect | measure | Z on returned c, Bell on (a, b)      |
//! | 4    | reflect | reflect | GHZ-like on (a, b, c)                |
//!
//! Half of the rounds of cases 1-3 (chosen by Alice) and every case-4 round
//! are consumed as security checks; the surviving case-2 rounds key K_AB,
//! case-3 rounds key K_AC, and case-1 rounds build the shared secret
//! (complement(K_A) = K_B ⊕ K_C, forced by the support of |G₁⟩).
//!
//! Attacks only ever see particles in transit. Mode announcements happen
//! after Alice confirms receipt of everything, which the types enforce: the
//! attack hooks receive the transit state and nothing else.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitXor, Not};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AttackError, AttackSpec, Channel, CompiledAttack, EveLog, EveRound, RoundScratch, Transit};
use crate::qstate::{ghz_like_state, Basis, Ket, QStateError, RegisterLabel, PHI_PLUS, PSI_PLUS};
use crate::rng::{rng_from_seed, SimRng};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("round record is missing {0} for its case")]
    MissingField(&'static str),
    #[error("insufficient sifted rounds in case {case}: have {have}, need {need}")]
    InsufficientSift {
        case: usize,
        have: usize,
        need: usize,
    },
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    State(#[from] QStateError),
}

pub fn reg_a() -> RegisterLabel {
    RegisterLabel::qubit("a")
}

pub fn reg_b() -> RegisterLabel {
    RegisterLabel::qubit("b")
}

pub fn reg_c() -> RegisterLabel {
    RegisterLabel::qubit("c")
}

/// A fresh source triple |G₁⟩ with both particles about to leave Alice.
pub fn fresh_transit() -> Result<Transit, ProtocolError> {
    Ok(Transit {
        ket: ghz_like_state(1, [reg_a(), reg_b(), reg_c()])?,
        wire_b: reg_b(),
        wire_c: reg_c(),
    })
}

/// A semiquantum party's per-round action.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundMode {
    MeasureResend,
    Reflect,
}

impl RoundMode {
    fn flip(rng: &mut SimRng) -> Self {
        if rng.gen::<bool>() {
            RoundMode::MeasureResend
        } else {
            RoundMode::Reflect
        }
    }
}

/// The four-way sifting outcome of a round.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    Case1,
    Case2,
    Case3,
    Case4,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Case1, CaseId::Case2, CaseId::Case3, CaseId::Case4];

    /// 1-based case number.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    /// 0-based array index.
    pub fn index(self) -> usize {
        match self {
            CaseId::Case1 => 0,
            CaseId::Case2 => 1,
            CaseId::Case3 => 2,
            CaseId::Case4 => 3,
        }
    }

    /// Probability that a round of this case is selected for checking:
    /// half of cases 1-3, every case-4 round.
    pub fn check_probability(self) -> f64 {
        match self {
            CaseId::Case4 => 1.0,
            _ => 0.5,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case{}", self.number())
    }
}

/// Sifting: the case is a function of the two announced modes alone.
pub fn classify_case(bob: RoundMode, charlie: RoundMode) -> CaseId {
    match (bob, charlie) {
        (RoundMode::MeasureResend, RoundMode::MeasureResend) => CaseId::Case1,
        (RoundMode::MeasureResend, RoundMode::Reflect) => CaseId::Case2,
        (RoundMode::Reflect, RoundMode::MeasureResend) => CaseId::Case3,
        (RoundMode::Reflect, RoundMode::Reflect) => CaseId::Case4,
    }
}

/// Alice's measurement results, shaped by the round's case.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AliceOutcome {
    /// Case 1: Z on the returned b, the returned c, and her own a.
    TripleZ { b_return: u8, c_return: u8, own_a: u8 },
    /// Case 2: Z on the returned b, Bell on (a, returned c).
    ZAndBell { b_return: u8, bell_ac: usize },
    /// Case 3: Z on the returned c, Bell on (a, returned b).
    BellAndZ { c_return: u8, bell_ab: usize },
    /// Case 4: GHZ-like on (a, returned b, returned c).
    GhzLike { index: usize },
}

/// Full life cycle of one source triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub bob_mode: RoundMode,
    pub charlie_mode: RoundMode,
    pub case: CaseId,
    /// Bob's Z result; present iff he chose MEASURE-RESEND.
    pub bob_z: Option<u8>,
    /// Charlie's Z result; present iff they chose MEASURE-RESEND.
    pub charlie_z: Option<u8>,
    pub alice: AliceOutcome,
    /// Whether Alice selected this round for the security check.
    pub checked: bool,
    /// Check verdict; only defined for checked rounds.
    pub consistent: Option<bool>,
}

/// Verdict of the security comparison for one checked round.
///
/// Case 1 requires Alice's own bit to complement the XOR of the announced
/// bits and her readouts of the returned particles to echo the
/// announcements; cases 2 and 3 require the returned-particle bit to echo
/// the announcement and the Bell outcome to match it (0 ⇒ ψ⁺, 1 ⇒ φ⁺);
/// case 4 requires the GHZ-like outcome to be index 1.
pub fn consistency_check(record: &RoundRecord) -> Result<bool, ProtocolError> {
    match (record.case, &record.alice) {
        (CaseId::Case1, AliceOutcome::TripleZ { b_return, c_return, own_a }) => {
            let s = record.bob_z.ok_or(ProtocolError::MissingField("bob_z"))?;
            let t = record
                .charlie_z
                .ok_or(ProtocolError::MissingField("charlie_z"))?;
            Ok(*own_a == 1 - (s ^ t) && *b_return == s && *c_return == t)
        }
        (CaseId::Case2, AliceOutcome::ZAndBell { b_return, bell_ac }) => {
            let s = record.bob_z.ok_or(ProtocolError::MissingField("bob_z"))?;
            let expected = if s == 0 { PSI_PLUS } else { PHI_PLUS };
            Ok(*b_return == s && *bell_ac == expected)
        }
        (CaseId::Case3, AliceOutcome::BellAndZ { c_return, bell_ab }) => {
            let t = record
                .charlie_z
                .ok_or(ProtocolError::MissingField("charlie_z"))?;
            let expected = if t == 0 { PSI_PLUS } else { PHI_PLUS };
            Ok(*c_return == t && *bell_ab == expected)
        }
        (CaseId::Case4, AliceOutcome::GhzLike { index }) => Ok(*index == 1),
        _ => Err(ProtocolError::MissingField("alice outcome shape")),
    }
}

/// Everything a finished round produces.
pub struct RoundOutput {
    pub record: RoundRecord,
    pub eve: EveRound,
    /// Global post-measurement state (protocol registers collapsed, any
    /// adversary registers still live).
    pub final_state: Ket,
}

/// Execute one full round: transit out (through the attack), the parties'
/// actions, transit back (through the attack), then Alice's case-dependent
/// measurements.
pub fn run_round(
    index: usize,
    attack: &CompiledAttack,
    bob_mode: RoundMode,
    charlie_mode: RoundMode,
    rng: &mut SimRng,
) -> Result<RoundOutput, ProtocolError> {
    let mut transit = fresh_transit()?;
    let mut scratch = RoundScratch::default();

    attack.outbound(&mut transit, Channel::B, &mut scratch, rng)?;
    attack.outbound(&mut transit, Channel::C, &mut scratch, rng)?;

    // MEASURE-RESEND is modeled as a projective Z measurement of the wire
    // register: the fresh particle a party prepares is exactly the collapsed
    // Z eigenstate, so re-using the register is equivalent.
    let mut bob_z = None;
    if bob_mode == RoundMode::MeasureResend {
        let wire = transit.wire(Channel::B).clone();
        let m = transit.ket.measure(Basis::Z, &[&wire], rng)?;
        bob_z = Some(m.value as u8);
        transit.ket = m.post_state;
    }
    let mut charlie_z = None;
    if charlie_mode == RoundMode::MeasureResend {
        let wire = transit.wire(Channel::C).clone();
        let m = transit.ket.measure(Basis::Z, &[&wire], rng)?;
        charlie_z = Some(m.value as u8);
        transit.ket = m.post_state;
    }

    attack.inbound(&mut transit, Channel::B, &mut scratch)?;
    attack.inbound(&mut transit, Channel::C, &mut scratch)?;

    let case = classify_case(bob_mode, charlie_mode);
    let a = reg_a();
    let wb = transit.wire_b.clone();
    let wc = transit.wire_c.clone();
    let mut ket = transit.ket;
    let alice = match case {
        CaseId::Case1 => {
            let mb = ket.measure(Basis::Z, &[&wb], rng)?;
            ket = mb.post_state;
            let mc = ket.measure(Basis::Z, &[&wc], rng)?;
            ket = mc.post_state;
            let ma = ket.measure(Basis::Z, &[&a], rng)?;
            ket = ma.post_state;
            AliceOutcome::TripleZ {
                b_return: mb.value as u8,
                c_return: mc.value as u8,
                own_a: ma.value as u8,
            }
        }
        CaseId::Case2 => {
            let mb = ket.measure(Basis::Z, &[&wb], rng)?;
            ket = mb.post_state;
            let bell = ket.measure(Basis::Bell, &[&a, &wc], rng)?;
            ket = bell.post_state;
            AliceOutcome::ZAndBell {
                b_return: mb.value as u8,
                bell_ac: bell.value,
            }
        }
        CaseId::Case3 => {
            let mc = ket.measure(Basis::Z, &[&wc], rng)?;
            ket = mc.post_state;
            let bell = ket.measure(Basis::Bell, &[&a, &wb], rng)?;
            ket = bell.post_state;
            AliceOutcome::BellAndZ {
                c_return: mc.value as u8,
                bell_ab: bell.value,
            }
        }
        CaseId::Case4 => {
            let ghz = ket.measure(Basis::GhzLike, &[&a, &wb, &wc], rng)?;
            ket = ghz.post_state;
            AliceOutcome::GhzLike { index: ghz.value }
        }
    };

    Ok(RoundOutput {
        record: RoundRecord {
            index,
            bob_mode,
            charlie_mode,
            case,
            bob_z,
            charlie_z,
            alice,
            checked: false,
            consistent: None,
        },
        eve: EveRound {
            intercepted_bit: scratch.intercepted_bit,
            fake_bit: scratch.fake_bit,
            probe_fidelity: None,
            probe_outcome: None,
        },
        final_state: ket,
    })
}

/// Alice's check selection: exactly ⌊count/2⌋ rounds of each of cases 1-3,
/// chosen uniformly without replacement, plus every case-4 round.
pub fn select_check_positions(records: &[RoundRecord], rng: &mut SimRng) -> BTreeSet<usize> {
    let mut chosen = BTreeSet::new();
    for case in [CaseId::Case1, CaseId::Case2, CaseId::Case3] {
        let pool: Vec<usize> = records
            .iter()
            .filter(|r| r.case == case)
            .map(|r| r.index)
            .collect();
        let k = pool.len() / 2;
        if k > 0 {
            for pick in sample(rng, pool.len(), k) {
                chosen.insert(pool[pick]);
            }
        }
    }
    chosen.extend(
        records
            .iter()
            .filter(|r| r.case == CaseId::Case4)
            .map(|r| r.index),
    );
    chosen
}

/// A bit string, stored one bit per byte and serialized as "0101…".
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

impl Not for &BitString {
    type Output = BitString;
    fn not(self) -> BitString {
        BitString(self.0.iter().map(|b| 1 - b).collect())
    }
}

impl BitXor for &BitString {
    type Output = BitString;
    fn bitxor(self, rhs: &BitString) -> BitString {
        assert_eq!(self.0.len(), rhs.0.len(), "bit string length mismatch");
        BitString(self.0.iter().zip(&rhs.0).map(|(x, y)| x ^ y).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut bits = Vec::with_capacity(text.len());
        for ch in text.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(serde::de::Error::custom("bit strings contain only 0/1")),
            }
        }
        Ok(BitString(bits))
    }
}

/// Both parties' copies of one established key. The copies are derived
/// independently (each side reads its own measurement results) and agree
/// whenever the channel was undisturbed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub alice: BitString,
    pub peer: BitString,
}

impl KeyPair {
    pub fn agree(&self) -> bool {
        self.alice == self.peer
    }
}

/// The three keys a completed session establishes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    /// Key between Alice and Bob (case-2 rounds).
    pub k_ab: KeyPair,
    /// Key between Alice and Charlie (case-3 rounds).
    pub k_ac: KeyPair,
    /// Alice's shared secret (her own case-1 bits).
    pub k_a: BitString,
    /// Bob's shadow of `k_a`.
    pub k_b: BitString,
    /// Charlie's shadow of `k_a`.
    pub k_c: BitString,
}

impl KeyMaterial {
    /// complement(K_A) = K_B ⊕ K_C: the cooperation requirement that makes
    /// `k_a` a shared secret.
    pub fn secret_sharing_holds(&self) -> bool {
        !&self.k_a == &self.k_b ^ &self.k_c
    }
}

/// Derive the session keys from the unchecked rounds, taking the first `n`
/// of each relevant case in ascending round order.
pub fn derive_keys(records: &[RoundRecord], n: usize) -> Result<KeyMaterial, ProtocolError> {
    let mut ab_alice = Vec::new();
    let mut ab_bob = Vec::new();
    let mut ac_alice = Vec::new();
    let mut ac_charlie = Vec::new();
    let mut k_a = Vec::new();
    let mut k_b = Vec::new();
    let mut k_c = Vec::new();
    for r in records.iter().filter(|r| !r.checked) {
        match (r.case, &r.alice) {
            (CaseId::Case2, AliceOutcome::ZAndBell { b_return, .. }) if ab_bob.len() < n => {
                ab_bob.push(r.bob_z.ok_or(ProtocolError::MissingField("bob_z"))?);
                ab_alice.push(*b_return);
            }
            (CaseId::Case3, AliceOutcome::BellAndZ { c_return, .. }) if ac_charlie.len() < n => {
                ac_charlie.push(
                    r.charlie_z
                        .ok_or(ProtocolError::MissingField("charlie_z"))?,
                );
                ac_alice.push(*c_return);
            }
            (CaseId::Case1, AliceOutcome::TripleZ { own_a, .. }) if k_a.len() < n => {
                k_a.push(*own_a);
                k_b.push(r.bob_z.ok_or(ProtocolError::MissingField("bob_z"))?);
                k_c.push(
                    r.charlie_z
                        .ok_or(ProtocolError::MissingField("charlie_z"))?,
                );
            }
            _ => {}
        }
    }
    for (case, have) in [(2usize, ab_bob.len()), (3, ac_charlie.len()), (1, k_a.len())] {
        if have < n {
            return Err(ProtocolError::InsufficientSift {
                case,
                have,
                need: n,
            });
        }
    }
    Ok(KeyMaterial {
        k_ab: KeyPair {
            alice: BitString::new(ab_alice),
            peer: BitString::new(ab_bob),
        },
        k_ac: KeyPair {
            alice: BitString::new(ac_alice),
            peer: BitString::new(ac_charlie),
        },
        k_a: BitString::new(k_a),
        k_b: BitString::new(k_b),
        k_c: BitString::new(k_c),
    })
}

/// Why a session halted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortReason {
    /// Some case's checked error rate exceeded the configured threshold.
    ErrorRate,
    /// Fewer than n unchecked rounds survived in some key-bearing case.
    InsufficientSift,
}

/// Session parameters. A session runs 8(n+τ) rounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Key length.
    pub n: u32,
    /// Round-count padding; must be ≥ 1.
    pub tau: u32,
    pub seed: u64,
    pub attack: AttackSpec,
    /// Per-case checked error rate above which the session aborts.
    /// Zero (the default) tolerates nothing, which is exact for the
    /// noiseless channels simulated here.
    pub abort_threshold: f64,
}

impl SessionConfig {
    pub fn new(n: u32, tau: u32, seed: u64, attack: AttackSpec) -> Self {
        Self {
            n,
            tau,
            seed,
            attack,
            abort_threshold: 0.0,
        }
    }

    pub fn rounds(&self) -> usize {
        8 * (self.n as usize + self.tau as usize)
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        if self.n < 1 {
            return Err(ProtocolError::InvalidConfig("n must be >= 1".into()));
        }
        if self.tau < 1 {
            return Err(ProtocolError::InvalidConfig("tau must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) {
            return Err(ProtocolError::InvalidConfig(
                "abort_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// When a clean attempt leaves some key pool short of n bits, the whole
/// exchange restarts from scratch (fresh states, fresh coins) rather than
/// truncating keys. Honest restarts are common when τ is small relative to
/// the sift fluctuations; a run that restarts this many times without either
/// finishing or failing a check gives up.
pub const MAX_RESTARTS: u32 = 64;

/// Outcome of a full session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub records: Vec<RoundRecord>,
    /// Established keys; absent when the session aborted.
    pub keys: Option<KeyMaterial>,
    pub aborted: bool,
    pub abort_reason: Option<AbortReason>,
    /// How many clean-but-short attempts were thrown away before this
    /// result (see [`MAX_RESTARTS`]).
    pub restarts: u32,
    /// Checked-round error rate per case (0 when nothing was checked).
    pub error_rates: [f64; 4],
    pub case_counts: [usize; 4],
    pub checked_counts: [usize; 4],
    pub inconsistent_counts: [usize; 4],
    /// How many particles Bob re-prepared (his MEASURE-RESEND rounds).
    pub bob_resend_count: usize,
    /// How many particles Charlie re-prepared.
    pub charlie_resend_count: usize,
}

impl SessionResult {
    /// True if any checked round was inconsistent (the detection event the
    /// closed-form attack analyses count).
    pub fn detected(&self) -> bool {
        self.inconsistent_counts.iter().any(|&k| k > 0)
    }
}

/// Run a complete session.
pub fn run_session(config: &SessionConfig) -> Result<SessionResult, ProtocolError> {
    run_session_traced(config).map(|(result, _)| result)
}

/// Run a complete session and also return the eavesdropper's records
/// (per-round intercepted bits, probe fidelities and probe readouts).
///
/// A failed security check aborts. A clean attempt whose sift pools are too
/// short to key n bits is discarded and the whole exchange restarts (up to
/// [`MAX_RESTARTS`] times) on the same random stream; the returned records
/// and attack trace belong to the final attempt.
pub fn run_session_traced(config: &SessionConfig) -> Result<(SessionResult, EveLog), ProtocolError> {
    config.validate()?;
    let attack = CompiledAttack::new(config.attack.clone())?;
    let probes = attack.probe_registers();
    let mut rng = rng_from_seed(config.seed);

    let mut restarts = 0u32;
    loop {
        let mut records = Vec::with_capacity(config.rounds());
        let mut eve = EveLog::default();
        for index in 0..config.rounds() {
            let bob_mode = RoundMode::flip(&mut rng);
            let charlie_mode = RoundMode::flip(&mut rng);
            let mut out = run_round(index, &attack, bob_mode, charlie_mode, &mut rng)?;
            if !probes.is_empty() {
                eve.record_probe(&mut out.eve, &out.final_state, &probes, &mut rng)?;
            }
            eve.push(out.eve);
            records.push(out.record);
        }

        for index in select_check_positions(&records, &mut rng) {
            let verdict = consistency_check(&records[index])?;
            records[index].checked = true;
            records[index].consistent = Some(verdict);
        }

        let mut case_counts = [0usize; 4];
        let mut checked_counts = [0usize; 4];
        let mut inconsistent_counts = [0usize; 4];
        for r in &records {
            case_counts[r.case.index()] += 1;
            if r.checked {
                checked_counts[r.case.index()] += 1;
                if r.consistent == Some(false) {
                    inconsistent_counts[r.case.index()] += 1;
                }
            }
        }
        let mut error_rates = [0.0f64; 4];
        for i in 0..4 {
            if checked_counts[i] > 0 {
                error_rates[i] = inconsistent_counts[i] as f64 / checked_counts[i] as f64;
            }
        }

        let bob_resend_count = records
            .iter()
            .filter(|r| r.bob_mode == RoundMode::MeasureResend)
            .count();
        let charlie_resend_count = records
            .iter()
            .filter(|r| r.charlie_mode == RoundMode::MeasureResend)
            .count();

        let mut result = SessionResult {
            records,
            keys: None,
            aborted: false,
            abort_reason: None,
            restarts,
            error_rates,
            case_counts,
            checked_counts,
            inconsistent_counts,
            bob_resend_count,
            charlie_resend_count,
        };

        if error_rates.iter().any(|&e| e > config.abort_threshold) {
            result.aborted = true;
            result.abort_reason = Some(AbortReason::ErrorRate);
            return Ok((result, eve));
        }
        match derive_keys(&result.records, config.n as usize) {
            Ok(keys) => {
                result.keys = Some(keys);
                return Ok((result, eve));
            }
            Err(ProtocolError::InsufficientSift { .. }) if restarts < MAX_RESTARTS => {
                restarts += 1;
            }
            Err(ProtocolError::InsufficientSift { .. }) => {
                result.aborted = true;
                result.abort_reason = Some(AbortReason::InsufficientSift);
                return Ok((result, eve));
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn honest(n: u32, tau: u32, seed: u64) -> SessionConfig {
        SessionConfig::new(n, tau, seed, AttackSpec::None)
    }

    #[test]
    fn case_table() {
        use RoundMode::*;
        assert_eq!(classify_case(MeasureResend, MeasureResend), CaseId::Case1);
        assert_eq!(classify_case(MeasureResend, Reflect), CaseId::Case2);
        assert_eq!(classify_case(Reflect, MeasureResend), CaseId::Case3);
        assert_eq!(classify_case(Reflect, Reflect), CaseId::Case4);
    }

    fn record(case: CaseId, bob_z: Option<u8>, charlie_z: Option<u8>, alice: AliceOutcome) -> RoundRecord {
        RoundRecord {
            index: 0,
            bob_mode: RoundMode::MeasureResend,
            charlie_mode: RoundMode::MeasureResend,
            case,
            bob_z,
            charlie_z,
            alice,
            checked: true,
            consistent: None,
        }
    }

    #[test]
    fn consistency_rules() {
        // Case 2 with Bob = 1: expects the returned bit 1 and φ⁺.
        let ok = record(
            CaseId::Case2,
            Some(1),
            None,
            AliceOutcome::ZAndBell {
                b_return: 1,
                bell_ac: PHI_PLUS,
            },
        );
        assert!(consistency_check(&ok).unwrap());
        // Case 4 with the right GHZ index.
        let ok4 = record(CaseId::Case4, None, None, AliceOutcome::GhzLike { index: 1 });
        assert!(consistency_check(&ok4).unwrap());
        // Case 1 with (a, b, c) = (0, 0, 0): |000⟩ is outside the source
        // support, so this must flag.
        let bad = record(
            CaseId::Case1,
            Some(0),
            Some(0),
            AliceOutcome::TripleZ {
                b_return: 0,
                c_return: 0,
                own_a: 0,
            },
        );
        assert!(!consistency_check(&bad).unwrap());
        // Missing announced bit is an error, not a verdict.
        let missing = record(
            CaseId::Case2,
            None,
            None,
            AliceOutcome::ZAndBell {
                b_return: 0,
                bell_ac: PSI_PLUS,
            },
        );
        assert!(matches!(
            consistency_check(&missing),
            Err(ProtocolError::MissingField("bob_z"))
        ));
    }

    #[test]
    fn honest_round_case1_respects_source_support() {
        let attack = CompiledAttack::new(AttackSpec::None).unwrap();
        let mut rng = rng_from_seed(99);
        for i in 0..64 {
            let out = run_round(i, &attack, RoundMode::MeasureResend, RoundMode::MeasureResend, &mut rng)
                .unwrap();
            let r = out.record;
            let (s, t) = (r.bob_z.unwrap(), r.charlie_z.unwrap());
            if let AliceOutcome::TripleZ { b_return, c_return, own_a } = r.alice {
                assert_eq!(own_a, 1 - (s ^ t));
                assert_eq!(b_return, s);
                assert_eq!(c_return, t);
            } else {
                panic!("wrong outcome shape");
            }
        }
    }

    #[test]
    fn honest_round_case2_bell_follows_bob() {
        let attack = CompiledAttack::new(AttackSpec::None).unwrap();
        let mut rng = rng_from_seed(7);
        for i in 0..64 {
            let out = run_round(i, &attack, RoundMode::MeasureResend, RoundMode::Reflect, &mut rng).unwrap();
            let s = out.record.bob_z.unwrap();
            if let AliceOutcome::ZAndBell { b_return, bell_ac } = out.record.alice {
                assert_eq!(b_return, s);
                assert_eq!(bell_ac, if s == 0 { PSI_PLUS } else { PHI_PLUS });
            } else {
                panic!("wrong outcome shape");
            }
        }
    }

    #[test]
    fn honest_round_case4_reads_the_source_index() {
        let attack = CompiledAttack::new(AttackSpec::None).unwrap();
        let mut rng = rng_from_seed(12);
        for i in 0..16 {
            let out = run_round(i, &attack, RoundMode::Reflect, RoundMode::Reflect, &mut rng).unwrap();
            assert_eq!(out.record.alice, AliceOutcome::GhzLike { index: 1 });
        }
    }

    #[test]
    fn rounds_replay_under_a_shared_stream() {
        let attack = CompiledAttack::new(AttackSpec::None).unwrap();
        let run = |seed| {
            let mut rng = rng_from_seed(seed);
            run_round(0, &attack, RoundMode::MeasureResend, RoundMode::Reflect, &mut rng)
                .unwrap()
                .record
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a.bob_z, b.bob_z);
        assert_eq!(a.alice, b.alice);
    }

    #[test]
    fn check_selection_takes_floor_half_and_all_case4() {
        // Build a synthetic record list: 10 of case 2, 7 of case 3, 3 of case 4.
        let mut records = Vec::new();
        let mut push = |case: CaseId, idx: usize| {
            records.push(RoundRecord {
                index: idx,
                bob_mode: RoundMode::Reflect,
                charlie_mode: RoundMode::Reflect,
                case,
                bob_z: None,
                charlie_z: None,
                alice: AliceOutcome::GhzLike { index: 1 },
                checked: false,
                consistent: None,
            });
        };
        let mut idx = 0;
        for _ in 0..10 {
            push(CaseId::Case2, idx);
            idx += 1;
        }
        for _ in 0..7 {
            push(CaseId::Case3, idx);
            idx += 1;
        }
        for _ in 0..3 {
            push(CaseId::Case4, idx);
            idx += 1;
        }
        let mut rng = rng_from_seed(0);
        let chosen = select_check_positions(&records, &mut rng);
        let count = |case: CaseId| {
            records
                .iter()
                .filter(|r| r.case == case && chosen.contains(&r.index))
                .count()
        };
        assert_eq!(count(CaseId::Case2), 5);
        assert_eq!(count(CaseId::Case3), 3);
        assert_eq!(count(CaseId::Case4), 3);
        assert_eq!(count(CaseId::Case1), 0);
    }

    #[test]
    fn honest_session_establishes_consistent_keys() {
        for seed in 0..10 {
            let (result, _) = run_session_traced(&honest(8, 1, seed)).unwrap();
            assert!(!result.aborted, "seed {seed} aborted");
            assert_eq!(result.error_rates, [0.0; 4]);
            let keys = result.keys.unwrap();
            assert!(keys.k_ab.agree());
            assert!(keys.k_ac.agree());
            assert!(keys.secret_sharing_holds());
            assert_eq!(keys.k_a.len(), 8);
            for r in &result.records {
                if r.checked {
                    assert_eq!(r.consistent, Some(true));
                }
            }
        }
    }

    #[test]
    fn key_derivation_uses_first_unchecked_rounds() {
        // One unchecked round per key-bearing case; the case-1 round has
        // (b, c) = (1, 1), which forces a = 1 on the source support.
        let records = vec![
            record(
                CaseId::Case1,
                Some(1),
                Some(1),
                AliceOutcome::TripleZ {
                    b_return: 1,
                    c_return: 1,
                    own_a: 1,
                },
            ),
            RoundRecord {
                index: 1,
                bob_mode: RoundMode::MeasureResend,
                charlie_mode: RoundMode::Reflect,
                case: CaseId::Case2,
                bob_z: Some(0),
                charlie_z: None,
                alice: AliceOutcome::ZAndBell {
                    b_return: 0,
                    bell_ac: PSI_PLUS,
                },
                checked: false,
                consistent: None,
            },
            RoundRecord {
                index: 2,
                bob_mode: RoundMode::Reflect,
                charlie_mode: RoundMode::MeasureResend,
                case: CaseId::Case3,
                bob_z: None,
                charlie_z: Some(1),
                alice: AliceOutcome::BellAndZ {
                    c_return: 1,
                    bell_ab: PHI_PLUS,
                },
                checked: false,
                consistent: None,
            },
        ];
        let mut records = records;
        records[0].checked = false;
        let keys = derive_keys(&records, 1).unwrap();
        assert_eq!(keys.k_a.bits(), &[1]);
        assert_eq!(keys.k_b.bits(), &[1]);
        assert_eq!(keys.k_c.bits(), &[1]);
        assert!(keys.secret_sharing_holds());
        assert_eq!(keys.k_ab.peer.bits(), &[0]);
        // Short pools signal the abort path.
        assert!(matches!(
            derive_keys(&records, 2),
            Err(ProtocolError::InsufficientSift { .. })
        ));
    }

    #[test]
    fn session_respects_round_budget_and_mode_balance() {
        let (result, _) = run_session_traced(&honest(16, 2, 3)).unwrap();
        assert_eq!(result.records.len(), 144);
        let total: usize = result.case_counts.iter().sum();
        assert_eq!(total, 144);
        // Checked counts: floor(half) for cases 1-3, all of case 4.
        for i in 0..3 {
            assert_eq!(result.checked_counts[i], result.case_counts[i] / 2);
        }
        assert_eq!(result.checked_counts[3], result.case_counts[3]);
    }

    #[test]
    fn config_validation() {
        assert!(run_session(&honest(0, 1, 0)).is_err());
        assert!(run_session(&honest(1, 0, 0)).is_err());
        let mut cfg = honest(1, 1, 0);
        cfg.abort_threshold = 1.5;
        assert!(run_session(&cfg).is_err());
    }

    #[test]
    fn bitstring_ops() {
        let x = BitString::new(vec![0, 1, 1, 0]);
        let y = BitString::new(vec![1, 1, 0, 0]);
        assert_eq!((&x ^ &y).bits(), &[1, 0, 1, 0]);
        assert_eq!((!&x).bits(), &[1, 0, 0, 1]);
        assert_eq!(x.to_string(), "0110");
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, "\"0110\"");
        let back: BitString = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }
}
