//! Exact pure-state simulation of small labeled-register quantum systems.
//!
//! States are complex amplitude vectors over an ordered list of named
//! registers (qubits for the protocol parties, d-dimensional registers for
//! eavesdropper probes). All operations are exact up to f64 rounding and
//! return new values; nothing mutates in place. Registers are addressed by
//! label rather than wire position, so reordering subscripts (e.g. working
//! on the `aEbc` system after an interception) never permutes amplitudes
//! behind your back.
//!
//! Three measurement bases are supported:
//! - `Z`: computational basis on a single register,
//! - `Bell`: the four two-qubit states φ⁺, φ⁻, ψ⁺, ψ⁻ (indices 0-3),
//! - `GhzLike`: the eight three-qubit states G₀…G₇ (indices 0-7).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for normalization and orthogonality of internally produced data.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance when validating user-supplied isometry/unitary matrices.
pub const MATRIX_TOL: f64 = 1e-8;
/// Below this projection weight an outcome is treated as impossible.
const ZERO_PROB: f64 = 1e-15;

/// Bell outcome index for φ⁺ = (|00⟩+|11⟩)/√2.
pub const PHI_PLUS: usize = 0;
/// Bell outcome index for φ⁻ = (|00⟩−|11⟩)/√2.
pub const PHI_MINUS: usize = 1;
/// Bell outcome index for ψ⁺ = (|01⟩+|10⟩)/√2.
pub const PSI_PLUS: usize = 2;
/// Bell outcome index for ψ⁻ = (|01⟩−|10⟩)/√2.
pub const PSI_MINUS: usize = 3;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("duplicate register label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown register label `{0}`")]
    UnknownLabel(String),
    #[error("register `{0}` is not a qubit (dimension {1})")]
    NotAQubit(String, usize),
    #[error("basis {basis:?} takes {expected} target(s), got {got}")]
    ArityMismatch {
        basis: Basis,
        expected: usize,
        got: usize,
    },
    #[error("state index {0} out of range (limit {1})")]
    IndexOutOfRange(usize, usize),
    #[error("amplitude vector has length {got}, register dimensions require {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("state is not normalized: |amplitudes|^2 = {0}")]
    NotNormalized(f64),
    #[error("matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("matrix columns are not orthonormal (max |M†M - I| = {0:.3e})")]
    NotAnIsometry(f64),
    #[error("matrix is not unitary (max |U†U - I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("outcome {0} has probability {1:.3e}; cannot collapse onto it")]
    ImpossibleOutcome(usize, f64),
    #[error("register label sets differ: {0}")]
    LabelSetMismatch(String),
}

/// A named register with a fixed dimension (2 for qubits).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterLabel {
    name: String,
    dim: usize,
}

impl RegisterLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        let dim = dim.max(1);
        Self {
            name: name.into(),
            dim,
        }
    }

    pub fn qubit(name: impl Into<String>) -> Self {
        Self::new(name, 2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_qubit(&self) -> bool {
        self.dim == 2
    }
}

impl fmt::Display for RegisterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Measurement basis selector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis on one register; outcomes 0..dim.
    Z,
    /// Bell basis on two qubits; outcomes 0-3 (φ⁺, φ⁻, ψ⁺, ψ⁻).
    Bell,
    /// GHZ-like basis on three qubits; outcomes 0-7 (G₀…G₇).
    GhzLike,
}

impl Basis {
    fn arity(self) -> usize {
        match self {
            Basis::Z => 1,
            Basis::Bell => 2,
            Basis::GhzLike => 3,
        }
    }
}

/// Result of a projective measurement.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub basis: Basis,
    pub value: usize,
    /// Squared norm of the projected component before renormalization.
    pub probability: f64,
    /// Renormalized post-measurement state.
    pub post_state: Ket,
}

/// Sign patterns of the GHZ-like basis over the four support kets of each
/// parity sector, listed in ascending binary order. Even indices live on
/// {000, 011, 101, 110}, odd indices on {001, 010, 100, 111}.
const GHZ_SIGNS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, 1.0, -1.0, -1.0],
];
const GHZ_SUPPORT_EVEN: [usize; 4] = [0b000, 0b011, 0b101, 0b110];
const GHZ_SUPPORT_ODD: [usize; 4] = [0b001, 0b010, 0b100, 0b111];

fn ghz_amplitudes(index: usize) -> [C64; 8] {
    let support = if index % 2 == 0 {
        GHZ_SUPPORT_EVEN
    } else {
        GHZ_SUPPORT_ODD
    };
    let signs = GHZ_SIGNS[index / 2];
    let mut amps = [C64::new(0.0, 0.0); 8];
    for (k, &pos) in support.iter().enumerate() {
        amps[pos] = C64::new(0.5 * signs[k], 0.0);
    }
    amps
}

fn bell_amplitudes(index: usize) -> [C64; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = [C64::new(0.0, 0.0); 4];
    match index {
        PHI_PLUS => {
            amps[0b00] = C64::new(r, 0.0);
            amps[0b11] = C64::new(r, 0.0);
        }
        PHI_MINUS => {
            amps[0b00] = C64::new(r, 0.0);
            amps[0b11] = C64::new(-r, 0.0);
        }
        PSI_PLUS => {
            amps[0b01] = C64::new(r, 0.0);
            amps[0b10] = C64::new(r, 0.0);
        }
        PSI_MINUS => {
            amps[0b01] = C64::new(r, 0.0);
            amps[0b10] = C64::new(-r, 0.0);
        }
        _ => unreachable!("bell index checked by caller"),
    }
    amps
}

/// A pure state: complex amplitudes over the product of the listed registers.
///
/// The first register is the most significant digit of the amplitude index,
/// so for qubit registers `[a, b, c]` the amplitude of |r s t⟩ sits at index
/// `4r + 2s + t`, matching the usual ket-string reading order.
#[derive(Clone, Debug)]
pub struct Ket {
    regs: Vec<RegisterLabel>,
    amps: Vec<C64>,
}

impl Ket {
    /// Build a state from explicit amplitudes. The vector must have length
    /// equal to the product of register dimensions and unit norm.
    pub fn from_amplitudes(regs: Vec<RegisterLabel>, amps: Vec<C64>) -> Result<Self, QStateError> {
        check_unique(&regs)?;
        let expected: usize = regs.iter().map(|r| r.dim()).product();
        if amps.len() != expected {
            return Err(QStateError::LengthMismatch {
                got: amps.len(),
                expected,
            });
        }
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(QStateError::NotNormalized(n));
        }
        Ok(Self { regs, amps })
    }

    /// Computational basis ket |digits⟩ over the given registers.
    pub fn basis_ket(regs: Vec<RegisterLabel>, digits: &[usize]) -> Result<Self, QStateError> {
        check_unique(&regs)?;
        if digits.len() != regs.len() {
            return Err(QStateError::LengthMismatch {
                got: digits.len(),
                expected: regs.len(),
            });
        }
        let dim: usize = regs.iter().map(|r| r.dim()).product();
        let mut idx = 0usize;
        for (reg, &d) in regs.iter().zip(digits) {
            if d >= reg.dim() {
                return Err(QStateError::IndexOutOfRange(d, reg.dim()));
            }
            idx = idx * reg.dim() + d;
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { regs, amps })
    }

    /// Single-qubit ket |bit⟩.
    pub fn qubit(label: RegisterLabel, bit: u8) -> Result<Self, QStateError> {
        Self::basis_ket(vec![label], &[bit as usize])
    }

    pub fn registers(&self) -> &[RegisterLabel] {
        &self.regs
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn find(&self, label: &RegisterLabel) -> Result<usize, QStateError> {
        self.regs
            .iter()
            .position(|r| r.name() == label.name())
            .ok_or_else(|| QStateError::UnknownLabel(label.name().to_string()))
    }

    /// Stride of each register in the flat amplitude index.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.regs.len()];
        for i in (0..self.regs.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.regs[i + 1].dim();
        }
        strides
    }

    /// Tensor product; register label sets must be disjoint.
    pub fn tensor(&self, other: &Ket) -> Result<Ket, QStateError> {
        for r in &other.regs {
            if self.regs.iter().any(|s| s.name() == r.name()) {
                return Err(QStateError::DuplicateLabel(r.name().to_string()));
            }
        }
        let mut regs = self.regs.clone();
        regs.extend(other.regs.iter().cloned());
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for &x in &self.amps {
            for &y in &other.amps {
                amps.push(x * y);
            }
        }
        Ok(Ket { regs, amps })
    }

    /// Inner product ⟨self|other⟩. Both states must carry the same register
    /// labels; `other` is aligned to `self`'s register order first.
    pub fn inner(&self, other: &Ket) -> Result<C64, QStateError> {
        let aligned = other.permuted(&self.regs)?;
        Ok(self
            .amps
            .iter()
            .zip(&aligned.amps)
            .map(|(x, y)| x.conj() * y)
            .sum())
    }

    /// Reorder registers. `order` must be a permutation of the current labels.
    pub fn permuted(&self, order: &[RegisterLabel]) -> Result<Ket, QStateError> {
        if order.len() != self.regs.len() {
            return Err(QStateError::LabelSetMismatch(format!(
                "{} labels vs {}",
                order.len(),
                self.regs.len()
            )));
        }
        let positions: Vec<usize> = order
            .iter()
            .map(|l| self.find(l))
            .collect::<Result<_, _>>()?;
        {
            let mut seen = positions.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != positions.len() {
                return Err(QStateError::LabelSetMismatch(
                    "order repeats a label".to_string(),
                ));
            }
        }
        let old_strides = self.strides();
        let new_regs: Vec<RegisterLabel> = positions.iter().map(|&p| self.regs[p].clone()).collect();
        let mut new = Ket {
            regs: new_regs,
            amps: vec![C64::new(0.0, 0.0); self.amps.len()],
        };
        let new_strides = new.strides();
        for (old_idx, &amp) in self.amps.iter().enumerate() {
            let mut new_idx = 0usize;
            for (k, &p) in positions.iter().enumerate() {
                let digit = (old_idx / old_strides[p]) % self.regs[p].dim();
                new_idx += digit * new_strides[k];
            }
            new.amps[new_idx] = amp;
        }
        Ok(new)
    }

    /// Gather target registers into the leading axis: returns (D, R) matrix
    /// `m[t * rest_dim + r]` plus index bookkeeping for scattering back.
    fn gather(&self, targets: &[&RegisterLabel]) -> Result<Gathered, QStateError> {
        let mut tpos = Vec::with_capacity(targets.len());
        for t in targets {
            let p = self.find(t)?;
            if tpos.contains(&p) {
                return Err(QStateError::DuplicateLabel(t.name().to_string()));
            }
            tpos.push(p);
        }
        let strides = self.strides();
        let rpos: Vec<usize> = (0..self.regs.len()).filter(|p| !tpos.contains(p)).collect();
        let tdim: usize = tpos.iter().map(|&p| self.regs[p].dim()).product();
        let rdim: usize = rpos.iter().map(|&p| self.regs[p].dim()).product();
        let mut m = vec![C64::new(0.0, 0.0); tdim * rdim];
        let mut back = vec![0usize; tdim * rdim];
        for (idx, &amp) in self.amps.iter().enumerate() {
            let mut t = 0usize;
            for &p in &tpos {
                t = t * self.regs[p].dim() + (idx / strides[p]) % self.regs[p].dim();
            }
            let mut r = 0usize;
            for &p in &rpos {
                r = r * self.regs[p].dim() + (idx / strides[p]) % self.regs[p].dim();
            }
            let slot = t * rdim + r;
            m[slot] = amp;
            back[slot] = idx;
        }
        Ok(Gathered {
            m,
            back,
            tdim,
            rdim,
        })
    }

    fn basis_vectors(&self, basis: Basis, targets: &[&RegisterLabel]) -> Result<Vec<Vec<C64>>, QStateError> {
        if targets.len() != basis.arity() {
            return Err(QStateError::ArityMismatch {
                basis,
                expected: basis.arity(),
                got: targets.len(),
            });
        }
        match basis {
            Basis::Z => {
                let label = targets[0];
                let pos = self.find(label)?;
                let d = self.regs[pos].dim();
                Ok((0..d)
                    .map(|v| {
                        let mut e = vec![C64::new(0.0, 0.0); d];
                        e[v] = C64::new(1.0, 0.0);
                        e
                    })
                    .collect())
            }
            Basis::Bell => {
                self.require_qubits(targets)?;
                Ok((0..4).map(|i| bell_amplitudes(i).to_vec()).collect())
            }
            Basis::GhzLike => {
                self.require_qubits(targets)?;
                Ok((0..8).map(|i| ghz_amplitudes(i).to_vec()).collect())
            }
        }
    }

    fn require_qubits(&self, targets: &[&RegisterLabel]) -> Result<(), QStateError> {
        for t in targets {
            let pos = self.find(t)?;
            let reg = &self.regs[pos];
            if !reg.is_qubit() {
                return Err(QStateError::NotAQubit(reg.name().to_string(), reg.dim()));
            }
        }
        Ok(())
    }

    /// Exact Born-rule probabilities of every outcome of the given basis
    /// measurement. Zero-probability outcomes are omitted. Values sum to 1
    /// within [`NORM_TOL`].
    pub fn outcome_distribution(
        &self,
        basis: Basis,
        targets: &[&RegisterLabel],
    ) -> Result<BTreeMap<usize, f64>, QStateError> {
        let vectors = self.basis_vectors(basis, targets)?;
        let g = self.gather(targets)?;
        let mut dist = BTreeMap::new();
        for (value, v) in vectors.iter().enumerate() {
            let p = g.projection_weight(v);
            if p > 0.0 {
                dist.insert(value, p);
            }
        }
        Ok(dist)
    }

    /// Project onto a specific outcome: returns the outcome probability and
    /// the renormalized post-measurement state. Errors if the outcome has
    /// (numerically) zero probability.
    pub fn project(
        &self,
        basis: Basis,
        targets: &[&RegisterLabel],
        value: usize,
    ) -> Result<(f64, Ket), QStateError> {
        let vectors = self.basis_vectors(basis, targets)?;
        if value >= vectors.len() {
            return Err(QStateError::IndexOutOfRange(value, vectors.len()));
        }
        let g = self.gather(targets)?;
        let v = &vectors[value];
        let p = g.projection_weight(v);
        if p < ZERO_PROB {
            return Err(QStateError::ImpossibleOutcome(value, p));
        }
        let mut post = self.clone();
        for a in post.amps.iter_mut() {
            *a = C64::new(0.0, 0.0);
        }
        let scale = 1.0 / p.sqrt();
        for r in 0..g.rdim {
            let mut overlap = C64::new(0.0, 0.0);
            for t in 0..g.tdim {
                overlap += v[t].conj() * g.m[t * g.rdim + r];
            }
            if overlap.norm_sqr() == 0.0 {
                continue;
            }
            for t in 0..g.tdim {
                let idx = g.back[t * g.rdim + r];
                post.amps[idx] = v[t] * overlap * scale;
            }
        }
        Ok((p, post))
    }

    /// Sample one measurement outcome with Born-rule probability and collapse.
    /// Consumes exactly one `f64` draw from `rng`, so replaying the same
    /// stream reproduces the outcome.
    pub fn measure<R: Rng>(
        &self,
        basis: Basis,
        targets: &[&RegisterLabel],
        rng: &mut R,
    ) -> Result<MeasurementOutcome, QStateError> {
        let vectors = self.basis_vectors(basis, targets)?;
        let g = self.gather(targets)?;
        let probs: Vec<f64> = vectors.iter().map(|v| g.projection_weight(v)).collect();
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        let mut value = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                value = k;
                break;
            }
        }
        // Guard against landing on a zero-probability tail through rounding.
        while probs[value] < ZERO_PROB {
            value -= 1;
        }
        let (p, post) = self.project(basis, targets, value)?;
        Ok(MeasurementOutcome {
            basis,
            value,
            probability: p,
            post_state: post,
        })
    }

    /// Standard CNOT on two qubit registers.
    pub fn apply_cnot(
        &self,
        control: &RegisterLabel,
        target: &RegisterLabel,
    ) -> Result<Ket, QStateError> {
        self.require_qubits(&[control, target])?;
        let mut m = CMat::zeros(4, 4);
        m.set(0, 0, C64::new(1.0, 0.0));
        m.set(1, 1, C64::new(1.0, 0.0));
        m.set(2, 3, C64::new(1.0, 0.0));
        m.set(3, 2, C64::new(1.0, 0.0));
        self.apply_unitary(&[control, target], &m)
    }

    /// Apply a unitary to the listed registers (first register = most
    /// significant digit of the matrix index). Rejects non-unitary input.
    pub fn apply_unitary(
        &self,
        targets: &[&RegisterLabel],
        matrix: &CMat,
    ) -> Result<Ket, QStateError> {
        let mut d = 1usize;
        for t in targets {
            let pos = self.find(t)?;
            d *= self.regs[pos].dim();
        }
        if matrix.rows != d || matrix.cols != d {
            return Err(QStateError::MatrixShape {
                rows: matrix.rows,
                cols: matrix.cols,
                want_rows: d,
                want_cols: d,
            });
        }
        let dev = matrix.gram_deviation();
        if dev > MATRIX_TOL {
            return Err(QStateError::NotUnitary(dev));
        }
        let g = self.gather(targets)?;
        let mut out = self.clone();
        for r in 0..g.rdim {
            for row in 0..g.tdim {
                let mut acc = C64::new(0.0, 0.0);
                for col in 0..g.tdim {
                    acc += matrix.get(row, col) * g.m[col * g.rdim + r];
                }
                out.amps[g.back[row * g.rdim + r]] = acc;
            }
        }
        Ok(out)
    }

    /// Replace `input` with the `outputs` registers under an isometry whose
    /// column count equals `dim(input)` and row count equals the product of
    /// the output dimensions. Columns must be orthonormal within
    /// [`MATRIX_TOL`]. Output labels may reuse the input's own name.
    pub fn apply_isometry(
        &self,
        input: &RegisterLabel,
        outputs: &[RegisterLabel],
        matrix: &CMat,
    ) -> Result<Ket, QStateError> {
        let in_pos = self.find(input)?;
        let din = self.regs[in_pos].dim();
        let dout: usize = outputs.iter().map(|r| r.dim()).product();
        if matrix.rows != dout || matrix.cols != din {
            return Err(QStateError::MatrixShape {
                rows: matrix.rows,
                cols: matrix.cols,
                want_rows: dout,
                want_cols: din,
            });
        }
        let dev = matrix.gram_deviation();
        if dev > MATRIX_TOL {
            return Err(QStateError::NotAnIsometry(dev));
        }
        let mut new_regs: Vec<RegisterLabel> = Vec::with_capacity(self.regs.len() - 1 + outputs.len());
        new_regs.extend(self.regs[..in_pos].iter().cloned());
        new_regs.extend(outputs.iter().cloned());
        new_regs.extend(self.regs[in_pos + 1..].iter().cloned());
        check_unique(&new_regs)?;

        let strides = self.strides();
        let hi = strides[in_pos] * din; // block size above the input register
        let lo = strides[in_pos]; // block size below it
        let new_dim = self.amps.len() / din * dout;
        let mut amps = vec![C64::new(0.0, 0.0); new_dim];
        for (idx, &amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let upper = idx / hi;
            let u = (idx / lo) % din;
            let lower = idx % lo;
            for o in 0..dout {
                let coeff = matrix.get(o, u);
                if coeff.norm_sqr() == 0.0 {
                    continue;
                }
                let new_idx = (upper * dout + o) * lo + lower;
                amps[new_idx] += coeff * amp;
            }
        }
        Ok(Ket {
            regs: new_regs,
            amps,
        })
    }

    /// Reduced density matrix of the listed registers (partial trace over
    /// everything else), as a dense `D x D` Hermitian matrix.
    pub fn reduced_density(&self, targets: &[&RegisterLabel]) -> Result<CMat, QStateError> {
        let g = self.gather(targets)?;
        let mut rho = CMat::zeros(g.tdim, g.tdim);
        for i in 0..g.tdim {
            for j in 0..g.tdim {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..g.rdim {
                    acc += g.m[i * g.rdim + r] * g.m[j * g.rdim + r].conj();
                }
                rho.set(i, j, acc);
            }
        }
        Ok(rho)
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strides = self.strides();
        let mut first = true;
        for (idx, amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() < 1e-24 {
                continue;
            }
            let digits: String = self
                .regs
                .iter()
                .zip(&strides)
                .map(|(reg, &s)| char::from_digit(((idx / s) % reg.dim()) as u32, 36).unwrap_or('?'))
                .collect();
            if !first {
                write!(f, " + ")?;
            }
            if amp.im.abs() < 1e-12 {
                write!(f, "{:+.4}|{}⟩", amp.re, digits)?;
            } else {
                write!(f, "({:+.4}{:+.4}i)|{}⟩", amp.re, amp.im, digits)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        let names: Vec<&str> = self.regs.iter().map(|r| r.name()).collect();
        write!(f, "  [{}]", names.join(","))
    }
}

struct Gathered {
    m: Vec<C64>,
    back: Vec<usize>,
    tdim: usize,
    rdim: usize,
}

impl Gathered {
    fn projection_weight(&self, v: &[C64]) -> f64 {
        let mut p = 0.0;
        for r in 0..self.rdim {
            let mut overlap = C64::new(0.0, 0.0);
            for t in 0..self.tdim {
                overlap += v[t].conj() * self.m[t * self.rdim + r];
            }
            p += overlap.norm_sqr();
        }
        p
    }
}

fn check_unique(regs: &[RegisterLabel]) -> Result<(), QStateError> {
    for (i, r) in regs.iter().enumerate() {
        if regs[i + 1..].iter().any(|s| s.name() == r.name()) {
            return Err(QStateError::DuplicateLabel(r.name().to_string()));
        }
    }
    Ok(())
}

/// One of the eight GHZ-like basis states over three distinct qubit labels.
///
/// Index 0 is (|000⟩+|011⟩+|101⟩+|110⟩)/2, index 1 is
/// (|001⟩+|010⟩+|100⟩+|111⟩)/2, and so on through index 7; even indices have
/// even bit parity, odd indices odd parity.
pub fn ghz_like_state(index: usize, labels: [RegisterLabel; 3]) -> Result<Ket, QStateError> {
    if index > 7 {
        return Err(QStateError::IndexOutOfRange(index, 8));
    }
    for l in &labels {
        if !l.is_qubit() {
            return Err(QStateError::NotAQubit(l.name().to_string(), l.dim()));
        }
    }
    Ket::from_amplitudes(labels.to_vec(), ghz_amplitudes(index).to_vec())
}

/// One of the four Bell states over two distinct qubit labels; see
/// [`PHI_PLUS`], [`PHI_MINUS`], [`PSI_PLUS`], [`PSI_MINUS`] for the indexing.
pub fn bell_state(index: usize, labels: [RegisterLabel; 2]) -> Result<Ket, QStateError> {
    if index > 3 {
        return Err(QStateError::IndexOutOfRange(index, 4));
    }
    for l in &labels {
        if !l.is_qubit() {
            return Err(QStateError::NotAQubit(l.name().to_string(), l.dim()));
        }
    }
    Ket::from_amplitudes(labels.to_vec(), bell_amplitudes(index).to_vec())
}

/// Small dense complex matrix, row-major. Just enough linear algebra for
/// isometry validation, density matrices and probe-state extraction; the
/// systems here never exceed a few hundred dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, QStateError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for row in &rows {
            if row.len() != c {
                return Err(QStateError::MatrixShape {
                    rows: r,
                    cols: row.len(),
                    want_rows: r,
                    want_cols: c,
                });
            }
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    /// max |(M†M − I)_{ij}|; zero for isometries and unitaries.
    pub fn gram_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.cols {
            for j in 0..self.cols {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.rows {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((acc - C64::new(target, 0.0)).norm());
            }
        }
        dev
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.gram_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.rows == self.cols && self.gram_deviation() <= tol
    }

    /// Trace (sum of diagonal entries); only meaningful for square matrices.
    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// ⟨v|M|v⟩ as a real number (valid for Hermitian M such as densities).
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                row += self.get(i, j) * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc.re
    }

    /// Dominant eigenvector of a PSD Hermitian matrix by power iteration,
    /// phase-fixed so the largest-magnitude component is real positive.
    pub fn top_eigenvector(&self) -> Vec<C64> {
        let n = self.rows;
        // Start from the basis vector with the largest diagonal weight.
        let start = (0..n)
            .max_by(|&i, &j| {
                self.get(i, i)
                    .re
                    .partial_cmp(&self.get(j, j).re)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[start] = C64::new(1.0, 0.0);
        for _ in 0..200 {
            let mut w = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += self.get(i, j) * v[j];
                }
            }
            let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            for x in w.iter_mut() {
                *x /= norm;
            }
            v = w;
        }
        // Fix the global phase.
        if let Some(k) = (0..n).max_by(|&i, &j| {
            v[i].norm_sqr()
                .partial_cmp(&v[j].norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
        }) {
            let phase = v[k] / v[k].norm();
            if phase.norm() > 0.0 {
                for x in v.iter_mut() {
                    *x /= phase;
                }
            }
        }
        v
    }
}
