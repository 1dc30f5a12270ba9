//! One honest protocol session end to end: round records, sifting cases,
//! security checks and the three established keys.
//!
//! ```bash
//! cargo run -p ghzkd --example honest_session
//! ```

use ghzkd::adversary::AttackSpec;
use ghzkd::protocol::{run_session, SessionConfig};

fn main() {
    let config = SessionConfig::new(16, 2, 42, AttackSpec::None);
    println!(
        "Running an honest session: n = {}, tau = {}, {} rounds, seed {}",
        config.n,
        config.tau,
        config.rounds(),
        config.seed
    );

    let result = run_session(&config).expect("session runs");
    println!("\ncase counts      : {:?}", result.case_counts);
    println!("checked per case : {:?}", result.checked_counts);
    println!("error rates      : {:?}", result.error_rates);
    println!("sift restarts    : {}", result.restarts);
    println!("aborted          : {}", result.aborted);

    println!("\nFirst six rounds:");
    for r in result.records.iter().take(6) {
        println!(
            "  #{:>3} {:?}  bob={:?} charlie={:?} alice={:?} checked={}",
            r.index, r.case, r.bob_z, r.charlie_z, r.alice, r.checked
        );
    }

    let keys = result.keys.expect("honest sessions complete");
    println!("\nEstablished keys:");
    println!("  K_AB (Alice's copy) : {}", keys.k_ab.alice);
    println!("  K_AB (Bob's copy)   : {}", keys.k_ab.peer);
    println!("  K_AC (Alice's copy) : {}", keys.k_ac.alice);
    println!("  K_AC (Charlie's)    : {}", keys.k_ac.peer);
    println!("  K_A                 : {}", keys.k_a);
    println!("  K_B                 : {}", keys.k_b);
    println!("  K_C                 : {}", keys.k_c);
    println!("  K_B xor K_C         : {}", &keys.k_b ^ &keys.k_c);
    println!("  not K_A             : {}", !&keys.k_a);

    assert!(keys.k_ab.agree() && keys.k_ac.agree());
    assert!(keys.secret_sharing_holds());
    println!("\nPairwise keys agree and not(K_A) = K_B xor K_C: Bob and Charlie");
    println!("can reconstruct Alice's secret only by combining their shadows.");
}
