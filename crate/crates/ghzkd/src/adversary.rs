//! Channel attacks against the protocol's four transit legs.
//!
//! An attack intercepts particles in transit: once on each outbound leg
//! (source to Bob, source to Charlie) and once on each return leg. Five
//! strategies are implemented besides the null attack:
//!
//! - **measure-resend**: measure the outbound particle in Z and forward the
//!   collapsed particle;
//! - **intercept-resend**: keep the genuine outbound particle and forward a
//!   fresh fake prepared in the Z basis;
//! - **double-CNOT (single channel)**: CNOT the outbound particle into a
//!   fresh ancilla, then CNOT the returning particle into the same ancilla;
//! - **double-CNOT (both channels)**: the same with one ancilla per channel;
//! - **entangle-measure**: attach a d-dimensional probe to each outbound
//!   particle through an isometry U_E, then act on both returning particles
//!   and all probes jointly with a unitary U_F.
//!
//! Attacks never see the parties' mode choices: the hook signatures carry
//! only the in-transit state, which is what makes the mode announcements in
//! the protocol meaningful as a security check.

use std::fmt;
use std::path::Path;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{Basis, CMat, Ket, QStateError, RegisterLabel, MATRIX_TOL, NORM_TOL};
use crate::rng::SimRng;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("gamma row {0} is not normalized: |γ|² = {1}")]
    GammaNotNormalized(usize, f64),
    #[error("probe ket {0} is not normalized: |χ|² = {1}")]
    ChiNotNormalized(usize, f64),
    #[error("U_E must be a (2*d) x 2 matrix, got {0}x{1}")]
    UeShape(usize, usize),
    #[error("U_F must be a (4*d*d) x (4*d*d) matrix for probe dimension {d}, got {rows}x{cols}")]
    UfShape { d: usize, rows: usize, cols: usize },
    #[error("attack leaves no probe register")]
    NoProbe,
    #[error("matrix file: {0}")]
    MatrixFile(String),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which transit channel an attack targets.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    B,
    C,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::B => write!(f, "b"),
            Channel::C => write!(f, "c"),
        }
    }
}

/// The Z-basis state of the fake particle forwarded by intercept-resend.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FakeBit {
    Zero,
    One,
    /// Fresh coin flip per round.
    Random,
}

/// Configuration of the eavesdropper, one variant per attack family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackSpec {
    None,
    MeasureResend {
        target: Channel,
    },
    InterceptResend {
        target: Channel,
        fake: FakeBit,
    },
    DoubleCnotSingle {
        target: Channel,
    },
    DoubleCnotTwice,
    EntangleMeasure(Box<EntangleMeasureSpec>),
}

impl AttackSpec {
    /// Some attacks keep an ancilla/probe register entangled (or not) with
    /// the protocol particles after the round ends.
    pub fn has_probe(&self) -> bool {
        matches!(
            self,
            AttackSpec::DoubleCnotSingle { .. }
                | AttackSpec::DoubleCnotTwice
                | AttackSpec::EntangleMeasure(_)
        )
    }
}

/// Entangle-measure attack data: per-channel isometries and the joint
/// return-leg unitary, acting on (qubit_b ⊗ qubit_c ⊗ probe_b ⊗ probe_c).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntangleMeasureSpec {
    pub ue_b: CMat,
    pub ue_c: CMat,
    pub uf: CMat,
    pub probe_dim: usize,
}

impl EntangleMeasureSpec {
    pub fn new(ue_b: CMat, ue_c: CMat, uf: CMat) -> Result<Self, AttackError> {
        if ue_b.cols() != 2 || ue_b.rows() % 2 != 0 || ue_b.rows() == 0 {
            return Err(AttackError::UeShape(ue_b.rows(), ue_b.cols()));
        }
        let d = ue_b.rows() / 2;
        if ue_c.rows() != 2 * d || ue_c.cols() != 2 {
            return Err(AttackError::UeShape(ue_c.rows(), ue_c.cols()));
        }
        let jf = 4 * d * d;
        if uf.rows() != jf || uf.cols() != jf {
            return Err(AttackError::UfShape {
                d,
                rows: uf.rows(),
                cols: uf.cols(),
            });
        }
        if !ue_b.is_isometry(MATRIX_TOL) {
            return Err(QStateError::NotAnIsometry(ue_b.gram_deviation()).into());
        }
        if !ue_c.is_isometry(MATRIX_TOL) {
            return Err(QStateError::NotAnIsometry(ue_c.gram_deviation()).into());
        }
        if !uf.is_unitary(MATRIX_TOL) {
            return Err(QStateError::NotUnitary(uf.gram_deviation()).into());
        }
        Ok(Self {
            ue_b,
            ue_c,
            uf,
            probe_dim: d,
        })
    }

    /// The undetectable reference attack: U_E attaches the same probe ket to
    /// both channels without touching the qubits, and U_F is the identity.
    pub fn compliant(probe_dim: usize) -> Self {
        let chi = unit_vector(probe_dim, 0);
        let gamma = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        let ue = build_ue(gamma, [&chi, &chi, &chi, &chi]).expect("identity attachment is an isometry");
        let uf = CMat::identity(4 * probe_dim * probe_dim);
        Self::new(ue.clone(), ue, uf).expect("compliant attack is well formed")
    }

    /// A bit-mixing attack: γ = (cos θ, sin θ, sin θ, cos θ) with four
    /// mutually orthonormal probe kets. Detectable for θ away from 0.
    pub fn rotation(theta: f64, probe_dim: usize) -> Result<Self, AttackError> {
        assert!(probe_dim >= 4, "rotation attack needs probe dimension >= 4");
        let (s, c) = theta.sin_cos();
        let gamma = [
            C64::new(c, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ];
        let chi: Vec<Vec<C64>> = (0..4).map(|k| unit_vector(probe_dim, k)).collect();
        let ue = build_ue(gamma, [&chi[0], &chi[1], &chi[2], &chi[3]])?;
        let uf = CMat::identity(4 * probe_dim * probe_dim);
        Self::new(ue.clone(), ue, uf)
    }

    /// A probe-marking attack: the qubits pass untouched but |0⟩ and |1⟩ are
    /// tagged with orthogonal probe kets. Invisible when both parties
    /// measure, detected whenever a particle is reflected.
    pub fn marking(chi_00: Vec<C64>, chi_11: Vec<C64>) -> Result<Self, AttackError> {
        let d = chi_00.len();
        let gamma = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        let filler = unit_vector(d, 0);
        let ue = build_ue(gamma, [&chi_00, &filler, &filler, &chi_11])?;
        let uf = CMat::identity(4 * d * d);
        Self::new(ue.clone(), ue, uf)
    }
}

fn unit_vector(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Build the U_E isometry of an entangle-measure attack from its defining
/// action |0⟩ ↦ γ00|0⟩|χ00⟩ + γ01|1⟩|χ01⟩, |1⟩ ↦ γ10|0⟩|χ10⟩ + γ11|1⟩|χ11⟩.
///
/// `gamma` is (γ00, γ01, γ10, γ11); `chi` holds the four probe kets in the
/// same index order, each of the common probe dimension. Rows of γ must be
/// normalized and the resulting columns orthonormal (the caller must choose
/// compatible probe kets).
pub fn build_ue(gamma: [C64; 4], chi: [&[C64]; 4]) -> Result<CMat, AttackError> {
    let d = chi[0].len();
    for (k, x) in chi.iter().enumerate() {
        if x.len() != d {
            return Err(AttackError::UeShape(x.len(), d));
        }
        let n: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(AttackError::ChiNotNormalized(k, n));
        }
    }
    for row in 0..2 {
        let n = gamma[2 * row].norm_sqr() + gamma[2 * row + 1].norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(AttackError::GammaNotNormalized(row, n));
        }
    }
    let mut m = CMat::zeros(2 * d, 2);
    for col in 0..2 {
        for out_bit in 0..2 {
            let g = gamma[2 * col + out_bit];
            let x = chi[2 * col + out_bit];
            for k in 0..d {
                m.set(out_bit * d + k, col, g * x[k]);
            }
        }
    }
    if !m.is_isometry(MATRIX_TOL) {
        return Err(QStateError::NotAnIsometry(m.gram_deviation()).into());
    }
    Ok(m)
}

/// A protocol particle triple in flight: the global state plus the labels of
/// whatever currently travels on each channel (an interception may swap the
/// genuine register for a fake one).
#[derive(Clone, Debug)]
pub struct Transit {
    pub ket: Ket,
    pub wire_b: RegisterLabel,
    pub wire_c: RegisterLabel,
}

impl Transit {
    pub fn wire(&self, ch: Channel) -> &RegisterLabel {
        match ch {
            Channel::B => &self.wire_b,
            Channel::C => &self.wire_c,
        }
    }

    fn set_wire(&mut self, ch: Channel, label: RegisterLabel) {
        match ch {
            Channel::B => self.wire_b = label,
            Channel::C => self.wire_c = label,
        }
    }
}

/// Per-round attack bookkeeping owned by the session loop.
#[derive(Clone, Debug, Default)]
pub struct RoundScratch {
    pub intercepted_bit: Option<u8>,
    pub fake_bit: Option<u8>,
    uf_applied: bool,
}

/// An [`AttackSpec`] with its matrices validated once up front.
#[derive(Clone, Debug)]
pub struct CompiledAttack {
    spec: AttackSpec,
}

impl CompiledAttack {
    pub fn new(spec: AttackSpec) -> Result<Self, AttackError> {
        if let AttackSpec::EntangleMeasure(em) = &spec {
            // Re-validate: specs can arrive from files or hand-built values.
            EntangleMeasureSpec::new(em.ue_b.clone(), em.ue_c.clone(), em.uf.clone())?;
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &AttackSpec {
        &self.spec
    }

    pub fn has_probe(&self) -> bool {
        self.spec.has_probe()
    }

    /// Labels of Eve's post-round registers, in the order used for joint
    /// probe outcomes.
    pub fn probe_registers(&self) -> Vec<RegisterLabel> {
        match &self.spec {
            AttackSpec::DoubleCnotSingle { .. } => vec![ancilla_e()],
            AttackSpec::DoubleCnotTwice => vec![ancilla_e(), ancilla_f()],
            AttackSpec::EntangleMeasure(em) => {
                vec![probe_reg(Channel::B, em.probe_dim), probe_reg(Channel::C, em.probe_dim)]
            }
            _ => Vec::new(),
        }
    }

    /// Outbound hook (source → party), sampling form.
    pub fn outbound(
        &self,
        transit: &mut Transit,
        ch: Channel,
        scratch: &mut RoundScratch,
        rng: &mut SimRng,
    ) -> Result<(), AttackError> {
        match &self.spec {
            AttackSpec::None => Ok(()),
            AttackSpec::MeasureResend { target } => {
                if *target == ch {
                    let wire = transit.wire(ch).clone();
                    let out = transit.ket.measure(Basis::Z, &[&wire], rng)?;
                    scratch.intercepted_bit = Some(out.value as u8);
                    transit.ket = out.post_state;
                }
                Ok(())
            }
            AttackSpec::InterceptResend { target, fake } => {
                if *target == ch {
                    let bit = match fake {
                        FakeBit::Zero => 0,
                        FakeBit::One => 1,
                        FakeBit::Random => u8::from(rng.gen::<bool>()),
                    };
                    intercept_with_fake(transit, ch, bit)?;
                    scratch.fake_bit = Some(bit);
                }
                Ok(())
            }
            AttackSpec::DoubleCnotSingle { target } => {
                if *target == ch {
                    attach_cnot_ancilla(transit, ch, ancilla_e())?;
                }
                Ok(())
            }
            AttackSpec::DoubleCnotTwice => {
                let ancilla = match ch {
                    Channel::B => ancilla_e(),
                    Channel::C => ancilla_f(),
                };
                attach_cnot_ancilla(transit, ch, ancilla)
            }
            AttackSpec::EntangleMeasure(em) => attach_em_probe(transit, ch, em),
        }
    }

    /// Outbound hook, enumeration form: every stochastic choice becomes an
    /// explicit branch with its exact probability. Used by the detection
    /// oracle instead of sampling.
    pub fn outbound_branches(
        &self,
        transit: &Transit,
        ch: Channel,
        scratch: &RoundScratch,
    ) -> Result<Vec<(f64, Transit, RoundScratch)>, AttackError> {
        match &self.spec {
            AttackSpec::MeasureResend { target } if *target == ch => {
                let wire = transit.wire(ch).clone();
                let dist = transit.ket.outcome_distribution(Basis::Z, &[&wire])?;
                let mut branches = Vec::new();
                for (value, p) in dist {
                    let (_, post) = transit.ket.project(Basis::Z, &[&wire], value)?;
                    let mut t = transit.clone();
                    t.ket = post;
                    let mut s = scratch.clone();
                    s.intercepted_bit = Some(value as u8);
                    branches.push((p, t, s));
                }
                Ok(branches)
            }
            AttackSpec::InterceptResend { target, fake } if *target == ch => {
                let bits: Vec<(f64, u8)> = match fake {
                    FakeBit::Zero => vec![(1.0, 0)],
                    FakeBit::One => vec![(1.0, 1)],
                    FakeBit::Random => vec![(0.5, 0), (0.5, 1)],
                };
                let mut branches = Vec::new();
                for (p, bit) in bits {
                    let mut t = transit.clone();
                    intercept_with_fake(&mut t, ch, bit)?;
                    let mut s = scratch.clone();
                    s.fake_bit = Some(bit);
                    branches.push((p, t, s));
                }
                Ok(branches)
            }
            _ => {
                // Everything else is deterministic; reuse the sampling form
                // with an rng that is never consulted.
                let mut t = transit.clone();
                let mut s = scratch.clone();
                let mut unused = crate::rng::rng_from_seed(0);
                self.outbound(&mut t, ch, &mut s, &mut unused)?;
                Ok(vec![(1.0, t, s)])
            }
        }
    }

    /// Inbound hook (party → source). Deterministic for every attack family:
    /// measure/intercept-resend act only outbound, the CNOT attacks apply
    /// their second CNOT, and entangle-measure applies U_F exactly once when
    /// the first returning particle passes (both returns are in transit by
    /// then).
    pub fn inbound(
        &self,
        transit: &mut Transit,
        ch: Channel,
        scratch: &mut RoundScratch,
    ) -> Result<(), AttackError> {
        match &self.spec {
            AttackSpec::None
            | AttackSpec::MeasureResend { .. }
            | AttackSpec::InterceptResend { .. } => Ok(()),
            AttackSpec::DoubleCnotSingle { target } => {
                if *target == ch {
                    let wire = transit.wire(ch).clone();
                    transit.ket = transit.ket.apply_cnot(&wire, &ancilla_e())?;
                }
                Ok(())
            }
            AttackSpec::DoubleCnotTwice => {
                let wire = transit.wire(ch).clone();
                let ancilla = match ch {
                    Channel::B => ancilla_e(),
                    Channel::C => ancilla_f(),
                };
                transit.ket = transit.ket.apply_cnot(&wire, &ancilla)?;
                Ok(())
            }
            AttackSpec::EntangleMeasure(em) => {
                if !scratch.uf_applied {
                    let targets = [
                        transit.wire_b.clone(),
                        transit.wire_c.clone(),
                        probe_reg(Channel::B, em.probe_dim),
                        probe_reg(Channel::C, em.probe_dim),
                    ];
                    let refs: Vec<&RegisterLabel> = targets.iter().collect();
                    transit.ket = transit.ket.apply_unitary(&refs, &em.uf)?;
                    scratch.uf_applied = true;
                }
                Ok(())
            }
        }
    }
}

fn ancilla_e() -> RegisterLabel {
    RegisterLabel::qubit("E")
}

fn ancilla_f() -> RegisterLabel {
    RegisterLabel::qubit("F")
}

fn probe_reg(ch: Channel, dim: usize) -> RegisterLabel {
    match ch {
        Channel::B => RegisterLabel::new("E1", dim),
        Channel::C => RegisterLabel::new("E2", dim),
    }
}

fn fake_reg(ch: Channel) -> RegisterLabel {
    match ch {
        Channel::B => RegisterLabel::qubit("fb"),
        Channel::C => RegisterLabel::qubit("fc"),
    }
}

fn attach_cnot_ancilla(
    transit: &mut Transit,
    ch: Channel,
    ancilla: RegisterLabel,
) -> Result<(), AttackError> {
    let zero = Ket::qubit(ancilla.clone(), 0)?;
    let wire = transit.wire(ch).clone();
    transit.ket = transit.ket.tensor(&zero)?.apply_cnot(&wire, &ancilla)?;
    Ok(())
}

fn attach_em_probe(
    transit: &mut Transit,
    ch: Channel,
    em: &EntangleMeasureSpec,
) -> Result<(), AttackError> {
    let wire = transit.wire(ch).clone();
    let probe = probe_reg(ch, em.probe_dim);
    let ue = match ch {
        Channel::B => &em.ue_b,
        Channel::C => &em.ue_c,
    };
    transit.ket = transit
        .ket
        .apply_isometry(&wire, &[wire.clone(), probe], ue)?;
    Ok(())
}

/// Keep the genuine particle (it stays in the state, in Eve's hands) and put
/// a fresh fake on the wire.
fn intercept_with_fake(transit: &mut Transit, ch: Channel, bit: u8) -> Result<(), AttackError> {
    let fake = fake_reg(ch);
    let fake_ket = Ket::qubit(fake.clone(), bit)?;
    transit.ket = transit.ket.tensor(&fake_ket)?;
    transit.set_wire(ch, fake);
    Ok(())
}

/// Eve's view of one protocol round.
#[derive(Clone, Debug, Default)]
pub struct EveRound {
    /// Z result of a measure-resend interception.
    pub intercepted_bit: Option<u8>,
    /// The fake bit forwarded by intercept-resend.
    pub fake_bit: Option<u8>,
    /// Fidelity of the round's final probe state against the reference
    /// (first-round) probe state.
    pub probe_fidelity: Option<f64>,
    /// Joint computational outcome of measuring all probe registers after
    /// the round.
    pub probe_outcome: Option<usize>,
}

/// Accumulated per-round attack records plus the reference probe state used
/// for fidelity comparisons.
#[derive(Clone, Debug, Default)]
pub struct EveLog {
    pub rounds: Vec<EveRound>,
    reference_probe: Option<Vec<C64>>,
}

impl EveLog {
    /// Reference probe ket (dominant eigenvector of the first recorded
    /// round's probe density), if any probe rounds were recorded.
    pub fn reference_probe(&self) -> Option<&[C64]> {
        self.reference_probe.as_deref()
    }

    /// Record the probe part of a finished round: fidelity against the
    /// reference, then a computational-basis readout of every probe register.
    pub fn record_probe(
        &mut self,
        round: &mut EveRound,
        final_ket: &Ket,
        probes: &[RegisterLabel],
        rng: &mut SimRng,
    ) -> Result<(), AttackError> {
        let refs: Vec<&RegisterLabel> = probes.iter().collect();
        let rho = final_ket.reduced_density(&refs)?;
        let reference = self
            .reference_probe
            .get_or_insert_with(|| rho.top_eigenvector());
        round.probe_fidelity = Some(rho.expectation(reference));

        let mut outcome = 0usize;
        let mut ket = final_ket.clone();
        for p in probes {
            let m = ket.measure(Basis::Z, &[p], rng)?;
            outcome = outcome * p.dim() + m.value;
            ket = m.post_state;
        }
        round.probe_outcome = Some(outcome);
        Ok(())
    }

    pub fn push(&mut self, round: EveRound) {
        self.rounds.push(round);
    }
}

/// Eve's best guess at each bit of K_AB, given her per-round records and the
/// public transcript (announced modes and check selections). The guess list
/// is aligned with the key: its k-th entry targets the k-th unchecked case-2
/// round in ascending order, up to `n` bits.
///
/// Measure-resend on channel b read the very qubit Bob later measures, so
/// the intercepted bit is the key bit. Intercept-resend decided Bob's bit
/// outright (he measured the fake). The probe-leaving attacks fall back to
/// the parity of the probe readout, which for the undetectable constructions
/// is a constant and therefore worth exactly a coin flip.
pub fn eve_guess(
    attack: &AttackSpec,
    eve: &EveLog,
    records: &[crate::protocol::RoundRecord],
    n: usize,
) -> Vec<u8> {
    records
        .iter()
        .filter(|r| !r.checked && r.case == crate::protocol::CaseId::Case2)
        .take(n)
        .map(|r| {
            let round = &eve.rounds[r.index];
            match attack {
                AttackSpec::MeasureResend { target: Channel::B } => {
                    round.intercepted_bit.unwrap_or(0)
                }
                AttackSpec::InterceptResend { target: Channel::B, .. } => {
                    round.fake_bit.unwrap_or(0)
                }
                AttackSpec::DoubleCnotSingle { .. }
                | AttackSpec::DoubleCnotTwice
                | AttackSpec::EntangleMeasure(_) => {
                    round.probe_outcome.map(|o| (o % 2) as u8).unwrap_or(0)
                }
                _ => 0,
            }
        })
        .collect()
}

/// Parse an entangle-measure matrix file.
///
/// The file holds three matrices in order U_E(b), U_E(c), U_F. Each block
/// starts with a `rows cols` header line followed by `rows` lines of
/// whitespace-separated `re,im` entries. Blank lines and `#` comments are
/// ignored. The probe dimension is inferred from the U_E row count.
pub fn load_entangle_measure(path: &Path) -> Result<EntangleMeasureSpec, AttackError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut read_matrix = |what: &str| -> Result<CMat, AttackError> {
        let header = lines
            .next()
            .ok_or_else(|| AttackError::MatrixFile(format!("missing {what} header")))?;
        let mut it = header.split_whitespace();
        let rows: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| AttackError::MatrixFile(format!("bad {what} header `{header}`")))?;
        let cols: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| AttackError::MatrixFile(format!("bad {what} header `{header}`")))?;
        let mut m = CMat::zeros(rows, cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| AttackError::MatrixFile(format!("{what}: missing row {r}")))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(AttackError::MatrixFile(format!(
                    "{what} row {r}: expected {cols} entries, got {}",
                    entries.len()
                )));
            }
            for (c, e) in entries.iter().enumerate() {
                let (re, im) = e.split_once(',').ok_or_else(|| {
                    AttackError::MatrixFile(format!("{what} row {r}: entry `{e}` is not re,im"))
                })?;
                let re: f64 = re.trim().parse().map_err(|_| {
                    AttackError::MatrixFile(format!("{what} row {r}: bad real part `{re}`"))
                })?;
                let im: f64 = im.trim().parse().map_err(|_| {
                    AttackError::MatrixFile(format!("{what} row {r}: bad imaginary part `{im}`"))
                })?;
                m.set(r, c, C64::new(re, im));
            }
        }
        Ok(m)
    };
    let ue_b = read_matrix("U_E(b)")?;
    let ue_c = read_matrix("U_E(c)")?;
    let uf = read_matrix("U_F")?;
    EntangleMeasureSpec::new(ue_b, ue_c, uf)
}

/// Render an [`EntangleMeasureSpec`] in the matrix file format.
pub fn format_entangle_measure(em: &EntangleMeasureSpec) -> String {
    let mut out = String::new();
    for (name, m) in [("U_E(b)", &em.ue_b), ("U_E(c)", &em.ue_c), ("U_F", &em.uf)] {
        out.push_str(&format!("# {name}\n{} {}\n", m.rows(), m.cols()));
        for r in 0..m.rows() {
            let row: Vec<String> = (0..m.cols())
                .map(|c| {
                    let v = m.get(r, c);
                    format!("{},{}", v.re, v.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::fresh_transit;
    use crate::rng::rng_from_seed;

    #[test]
    fn ue_builder_validates_gamma_rows() {
        let chi = unit_vector(4, 0);
        let bad = [
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        assert!(matches!(
            build_ue(bad, [&chi, &chi, &chi, &chi]),
            Err(AttackError::GammaNotNormalized(0, _))
        ));
    }

    #[test]
    fn ue_builder_rejects_incompatible_columns() {
        // γ = (1, 0, 0, 1) with χ00 = χ11 gives parallel columns? No: the
        // columns land in orthogonal qubit sectors, so this is fine. An
        // actually bad case: rotation gammas with all-equal probe kets.
        let chi = unit_vector(4, 0);
        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let gamma = [
            C64::new(c, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ];
        assert!(matches!(
            build_ue(gamma, [&chi, &chi, &chi, &chi]),
            Err(AttackError::State(QStateError::NotAnIsometry(_)))
        ));
        // With orthonormal probe kets the same gammas are accepted.
        let chis: Vec<Vec<C64>> = (0..4).map(|k| unit_vector(4, k)).collect();
        assert!(build_ue(gamma, [&chis[0], &chis[1], &chis[2], &chis[3]]).is_ok());
    }

    #[test]
    fn double_cnot_outbound_matches_hand_state() {
        let attack = CompiledAttack::new(AttackSpec::DoubleCnotSingle { target: Channel::B }).unwrap();
        let mut transit = fresh_transit().unwrap();
        let mut scratch = RoundScratch::default();
        let mut rng = rng_from_seed(0);
        attack
            .outbound(&mut transit, Channel::B, &mut scratch, &mut rng)
            .unwrap();
        // (|0010⟩+|0101⟩+|1000⟩+|1111⟩)_abcE / 2
        let expect = [0b0010usize, 0b0101, 0b1000, 0b1111];
        for (idx, amp) in transit.ket.amplitudes().iter().enumerate() {
            if expect.contains(&idx) {
                assert!((amp.re - 0.5).abs() < 1e-12);
            } else {
                assert!(amp.norm_sqr() < 1e-24);
            }
        }
    }

    #[test]
    fn twice_double_cnot_outbound_matches_hand_state() {
        let attack = CompiledAttack::new(AttackSpec::DoubleCnotTwice).unwrap();
        let mut transit = fresh_transit().unwrap();
        let mut scratch = RoundScratch::default();
        let mut rng = rng_from_seed(0);
        attack
            .outbound(&mut transit, Channel::B, &mut scratch, &mut rng)
            .unwrap();
        attack
            .outbound(&mut transit, Channel::C, &mut scratch, &mut rng)
            .unwrap();
        // (|00101⟩+|01010⟩+|10000⟩+|11111⟩)_abcEF / 2
        let expect = [0b00101usize, 0b01010, 0b10000, 0b11111];
        for (idx, amp) in transit.ket.amplitudes().iter().enumerate() {
            if expect.contains(&idx) {
                assert!((amp.re - 0.5).abs() < 1e-12, "idx {idx:05b}");
            } else {
                assert!(amp.norm_sqr() < 1e-24, "idx {idx:05b}");
            }
        }
    }

    #[test]
    fn second_cnot_clears_ancilla_in_case_four() {
        // Reflect/reflect: after both CNOTs the ancilla is exactly |0⟩ and
        // the protocol state is back to the initial entangled triple.
        let attack = CompiledAttack::new(AttackSpec::DoubleCnotSingle { target: Channel::B }).unwrap();
        let mut transit = fresh_transit().unwrap();
        let reference = transit.ket.clone();
        let mut scratch = RoundScratch::default();
        let mut rng = rng_from_seed(0);
        attack
            .outbound(&mut transit, Channel::B, &mut scratch, &mut rng)
            .unwrap();
        attack
            .outbound(&mut transit, Channel::C, &mut scratch, &mut rng)
            .unwrap();
        attack.inbound(&mut transit, Channel::B, &mut scratch).unwrap();
        attack.inbound(&mut transit, Channel::C, &mut scratch).unwrap();
        let e = ancilla_e();
        let dist = transit.ket.outcome_distribution(Basis::Z, &[&e]).unwrap();
        assert!((dist[&0] - 1.0).abs() < 1e-12);
        let (_, collapsed) = transit.ket.project(Basis::Z, &[&e], 0).unwrap();
        let expected = reference.tensor(&Ket::qubit(e, 0).unwrap()).unwrap();
        let overlap = expected.inner(&collapsed).unwrap();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ue_action_on_single_qubit() {
        // |0⟩|χ⟩ ↦ γ00|0⟩|χ00⟩ + γ01|1⟩|χ01⟩ entry by entry.
        let theta: f64 = 0.4;
        let (s, c) = theta.sin_cos();
        let gamma = [
            C64::new(c, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ];
        let chis: Vec<Vec<C64>> = (0..4).map(|k| unit_vector(4, k)).collect();
        let ue = build_ue(gamma, [&chis[0], &chis[1], &chis[2], &chis[3]]).unwrap();
        let b = RegisterLabel::qubit("b");
        let e1 = RegisterLabel::new("E1", 4);
        for bit in 0..2u8 {
            let out = Ket::qubit(b.clone(), bit)
                .unwrap()
                .apply_isometry(&b, &[b.clone(), e1.clone()], &ue)
                .unwrap();
            // Amplitude at (qubit = q, probe = 2*bit + q) is γ_{bit,q}.
            for q in 0..2usize {
                let idx = q * 4 + (2 * bit as usize + q);
                let got = out.amplitudes()[idx];
                let want = gamma[2 * bit as usize + q];
                assert!((got - want).norm() < 1e-12, "bit {bit} q {q}");
            }
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_resend_collapses_to_bell_times_bit() {
        let attack = CompiledAttack::new(AttackSpec::MeasureResend { target: Channel::B }).unwrap();
        let transit = fresh_transit().unwrap();
        let branches = attack
            .outbound_branches(&transit, Channel::B, &RoundScratch::default())
            .unwrap();
        assert_eq!(branches.len(), 2);
        for (p, t, s) in branches {
            assert!((p - 0.5).abs() < 1e-12);
            let bit = s.intercepted_bit.unwrap();
            let a = RegisterLabel::qubit("a");
            let c = RegisterLabel::qubit("c");
            let dist = t.ket.outcome_distribution(Basis::Bell, &[&a, &c]).unwrap();
            let expected = if bit == 0 {
                crate::qstate::PSI_PLUS
            } else {
                crate::qstate::PHI_PLUS
            };
            assert!((dist[&expected] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn intercept_resend_swaps_the_wire() {
        let attack = CompiledAttack::new(AttackSpec::InterceptResend {
            target: Channel::B,
            fake: FakeBit::Zero,
        })
        .unwrap();
        let mut transit = fresh_transit().unwrap();
        let mut scratch = RoundScratch::default();
        let mut rng = rng_from_seed(3);
        attack
            .outbound(&mut transit, Channel::B, &mut scratch, &mut rng)
            .unwrap();
        assert_eq!(transit.wire_b.name(), "fb");
        assert_eq!(scratch.fake_bit, Some(0));
        // genuine b is still part of the state
        assert_eq!(transit.ket.registers().len(), 4);
        let dist = transit
            .ket
            .outcome_distribution(Basis::Z, &[&transit.wire_b])
            .unwrap();
        assert!((dist[&0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn em_probe_expansion_matches_closed_form_products() {
        // Apply the same U_E to both channels and compare each computational
        // component's probe factor against the closed-form products.
        let theta: f64 = 0.3;
        let (s, c) = theta.sin_cos();
        let gamma = [
            C64::new(c, 0.0),
            C64::new(s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ];
        let chis: Vec<Vec<C64>> = (0..4).map(|k| unit_vector(4, k)).collect();
        let ue = build_ue(gamma, [&chis[0], &chis[1], &chis[2], &chis[3]]).unwrap();
        let em = EntangleMeasureSpec::new(ue.clone(), ue, CMat::identity(64)).unwrap();
        let attack = CompiledAttack::new(AttackSpec::EntangleMeasure(Box::new(em))).unwrap();
        let mut transit = fresh_transit().unwrap();
        let mut scratch = RoundScratch::default();
        let mut rng = rng_from_seed(0);
        attack
            .outbound(&mut transit, Channel::B, &mut scratch, &mut rng)
            .unwrap();
        attack
            .outbound(&mut transit, Channel::C, &mut scratch, &mut rng)
            .unwrap();

        // e_rst = amplitude vector over (E1, E2) attached to |r s t⟩: for the
        // initial triple, e_rst = Σ over source terms; with the diagonal χ
        // choice each (s_src, t_src) input pair contributes
        // γ_{s_src s} γ_{t_src t} |χ_{s_src s}⟩|χ_{t_src t}⟩ / 2.
        let canonical = transit
            .ket
            .permuted(&[
                RegisterLabel::qubit("a"),
                RegisterLabel::qubit("b"),
                RegisterLabel::qubit("c"),
                RegisterLabel::new("E1", 4),
                RegisterLabel::new("E2", 4),
            ])
            .unwrap();
        let g = |i: usize, j: usize| gamma[2 * i + j];
        let support = [0b001usize, 0b010, 0b100, 0b111];
        for r in 0..2 {
            for s in 0..2 {
                for t in 0..2 {
                    let mut expected = vec![C64::new(0.0, 0.0); 16];
                    for &src in &support {
                        if (src >> 2) & 1 != r {
                            continue;
                        }
                        let s_src = (src >> 1) & 1;
                        let t_src = src & 1;
                        // χ_{ij} = unit vector with index 2i+j
                        let pb = 2 * s_src + s;
                        let pc = 2 * t_src + t;
                        expected[pb * 4 + pc] += g(s_src, s) * g(t_src, t) * 0.5;
                    }
                    for (k, &want) in expected.iter().enumerate() {
                        let idx = (((r * 2 + s) * 2 + t) * 4 + k / 4) * 4 + k % 4;
                        let got = canonical.amplitudes()[idx];
                        assert!(
                            (got - want).norm() < 1e-12,
                            "component rst={r}{s}{t} probe {k}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn matrix_file_roundtrip() {
        let em = EntangleMeasureSpec::rotation(0.4, 4).unwrap();
        let text = format_entangle_measure(&em);
        let dir = std::env::temp_dir().join("ghzkd-test-matrix");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("em.mat");
        std::fs::write(&path, text).unwrap();
        let loaded = load_entangle_measure(&path).unwrap();
        assert_eq!(loaded.probe_dim, 4);
        for r in 0..em.ue_b.rows() {
            for c in 0..em.ue_b.cols() {
                assert!((loaded.ue_b.get(r, c) - em.ue_b.get(r, c)).norm() < 1e-12);
            }
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn matrix_file_errors_are_reported() {
        let dir = std::env::temp_dir().join("ghzkd-test-matrix");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.mat");
        std::fs::write(&path, "2 2\n1,0 0,0\n").unwrap();
        assert!(matches!(
            load_entangle_measure(&path),
            Err(AttackError::MatrixFile(_))
        ));
        std::fs::remove_file(&path).ok();
    }
}
