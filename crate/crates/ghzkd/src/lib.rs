//! Exact simulator and analysis toolkit for a hybrid semiquantum
//! key-distribution / secret-sharing protocol built on GHZ-like states.
//!
//! One fully quantum party (Alice) distributes entangled triples to two
//! semiquantum parties (Bob and Charlie) who can only measure or reflect in
//! the classical basis. A completed session yields three keys at once: a
//! pairwise key with each semiquantum party, and a secret of Alice's that
//! Bob and Charlie can reconstruct only by cooperating.
//!
//! The crate is organized in layers:
//!
//! - [`qstate`]: exact state vectors over labeled registers, with Z / Bell /
//!   GHZ-like projective measurement;
//! - [`protocol`]: the round loop, sifting cases, security checking and key
//!   derivation;
//! - [`adversary`]: pluggable channel attacks (measure-resend,
//!   intercept-resend, double-CNOT, parameterized entangle-measure);
//! - [`analysis`]: an exact detection-probability oracle by full branch
//!   enumeration, Monte Carlo estimators, probe statistics and the
//!   communication-efficiency metric;
//! - [`report`] and [`cli`]: machine-readable JSON/CSV reports and the
//!   command-line front end;
//! - [`verify`]: the self-check suite the CLI's `verify` command runs.
//!
//! Start with the `examples/` directory; each example exercises one
//! capability end to end.

// Dense small-matrix code reads better with explicit strided indices.
#![allow(clippy::needless_range_loop, clippy::manual_is_multiple_of)]

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod protocol;
pub mod qstate;
pub mod report;
pub mod rng;
pub mod verify;
