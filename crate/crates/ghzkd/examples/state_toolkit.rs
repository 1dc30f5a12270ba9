//! Tour of the state layer: the GHZ-like basis, Bell-pair conditioning and
//! reproducible projective measurement.
//!
//! ```bash
//! cargo run -p ghzkd --example state_toolkit
//! ```

use ghzkd::qstate::{bell_state, ghz_like_state, Basis, Ket, RegisterLabel, PSI_PLUS};
use ghzkd::rng::rng_from_seed;

fn main() {
    let a = RegisterLabel::qubit("a");
    let b = RegisterLabel::qubit("b");
    let c = RegisterLabel::qubit("c");

    println!("The eight GHZ-like basis states:");
    for i in 0..8 {
        let g = ghz_like_state(i, [a.clone(), b.clone(), c.clone()]).unwrap();
        println!("  G{i}: {g}");
    }

    // Conditioning the source state on a Z readout of any register leaves
    // the other two in a Bell eigenstate: 0 pairs with ψ⁺, 1 with φ⁺.
    let g1 = ghz_like_state(1, [a.clone(), b.clone(), c.clone()]).unwrap();
    println!("\nZ-conditioning G1 on register b:");
    for bit in 0..2 {
        let (p, post) = g1.project(Basis::Z, &[&b], bit).unwrap();
        let bell = post.outcome_distribution(Basis::Bell, &[&a, &c]).unwrap();
        println!("  b = {bit} (p = {p:.3}) leaves (a,c) Bell distribution {bell:?}");
    }

    // Measurement is seeded and replayable.
    let mut rng = rng_from_seed(7);
    let samples: Vec<usize> = (0..16)
        .map(|_| g1.measure(Basis::Z, &[&a], &mut rng).unwrap().value)
        .collect();
    let mut rng = rng_from_seed(7);
    let replay: Vec<usize> = (0..16)
        .map(|_| g1.measure(Basis::Z, &[&a], &mut rng).unwrap().value)
        .collect();
    println!("\nSeeded Z samples on a: {samples:?}");
    println!("Replay with same seed:  {replay:?} (identical: {})", samples == replay);

    // A Bell eigenstate measures deterministically.
    let psi = bell_state(PSI_PLUS, [a.clone(), c.clone()]).unwrap();
    let state = psi.tensor(&Ket::qubit(b.clone(), 0).unwrap()).unwrap();
    let dist = state.outcome_distribution(Basis::Bell, &[&a, &c]).unwrap();
    println!("\nBell distribution of ψ⁺(a,c) ⊗ |0⟩_b on (a,c): {dist:?}");

    // The same state is an even mix of two GHZ-like basis states.
    let ghz = state
        .outcome_distribution(Basis::GhzLike, &[&a, &b, &c])
        .unwrap();
    println!("GHZ-like distribution of the same state: {ghz:?}");
}
