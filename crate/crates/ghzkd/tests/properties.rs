//! Cross-module invariants: property tests over the state layer, seeded
//! statistical agreement between the samplers and the exact oracles, and
//! the protocol-level relations that must survive every non-aborting attack.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use ghzkd::adversary::{eve_guess, AttackSpec, Channel, EntangleMeasureSpec, FakeBit};
use ghzkd::analysis::{cumulative_detection, exact_detection, monte_carlo_detection};
use ghzkd::protocol::{run_session_traced, SessionConfig};
use ghzkd::qstate::{bell_state, ghz_like_state, Basis, CMat, Ket, RegisterLabel};
use ghzkd::rng::rng_from_seed;

fn qubit(name: &str) -> RegisterLabel {
    RegisterLabel::qubit(name)
}

fn abc() -> [RegisterLabel; 3] {
    [qubit("a"), qubit("b"), qubit("c")]
}

/// Arbitrary normalized three-qubit states.
fn arb_ket() -> impl Strategy<Value = Ket> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)
        .prop_filter_map("norm too small", |parts| {
            let norm_sqr: f64 = parts.iter().map(|(re, im)| re * re + im * im).sum();
            if norm_sqr < 1e-3 {
                return None;
            }
            let scale = norm_sqr.sqrt();
            let amps: Vec<C64> = parts
                .iter()
                .map(|&(re, im)| C64::new(re / scale, im / scale))
                .collect();
            Ket::from_amplitudes(abc().to_vec(), amps).ok()
        })
}

proptest! {
    /// Every operation returns a unit-norm state.
    #[test]
    fn operations_preserve_normalization(ket in arb_ket(), seed in 0u64..1 << 32) {
        let [a, b, c] = abc();
        prop_assert!((ket.norm_sqr() - 1.0).abs() < 1e-10);

        let after_cnot = ket.apply_cnot(&b, &c).unwrap();
        prop_assert!((after_cnot.norm_sqr() - 1.0).abs() < 1e-10);

        let probe = Ket::basis_ket(vec![RegisterLabel::new("E", 4)], &[0]).unwrap();
        let joined = ket.tensor(&probe).unwrap();
        prop_assert!((joined.norm_sqr() - 1.0).abs() < 1e-10);

        let em = EntangleMeasureSpec::rotation(0.4, 4).unwrap();
        let attached = ket
            .apply_isometry(&b, &[b.clone(), RegisterLabel::new("P", 4)], &em.ue_b)
            .unwrap();
        prop_assert!((attached.norm_sqr() - 1.0).abs() < 1e-10);

        let mut rng = rng_from_seed(seed);
        let outcome = ket.measure(Basis::Z, &[&a], &mut rng).unwrap();
        prop_assert!((outcome.post_state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    /// Each basis is complete: outcome probabilities sum to one and the
    /// post-states of distinct outcomes are orthogonal.
    #[test]
    fn bases_are_complete(ket in arb_ket()) {
        let [a, b, c] = abc();
        for (basis, targets) in [
            (Basis::Z, vec![&a]),
            (Basis::Bell, vec![&a, &c]),
            (Basis::GhzLike, vec![&a, &b, &c]),
        ] {
            let dist = ket.outcome_distribution(basis, &targets).unwrap();
            let total: f64 = dist.values().sum();
            prop_assert!((total - 1.0).abs() < 1e-10, "{basis:?}: total {total}");
            let posts: Vec<Ket> = dist
                .keys()
                .map(|&v| ket.project(basis, &targets, v).unwrap().1)
                .collect();
            for i in 0..posts.len() {
                for j in 0..i {
                    let overlap = posts[i].inner(&posts[j]).unwrap().norm();
                    prop_assert!(overlap < 1e-8, "{basis:?}: outcomes {i},{j} overlap {overlap}");
                }
            }
        }
    }

    /// Matrices that are measurably non-isometric are rejected.
    #[test]
    fn non_isometries_are_rejected(entries in proptest::collection::vec(-1.0f64..1.0, 16)) {
        let mut m = CMat::zeros(8, 2);
        for (k, &x) in entries.iter().enumerate() {
            m.set(k / 2, k % 2, C64::new(x, 0.0));
        }
        prop_assume!(m.gram_deviation() > 1e-6);
        let ket = Ket::qubit(qubit("b"), 0).unwrap();
        let out = ket.apply_isometry(&qubit("b"), &[qubit("b"), RegisterLabel::new("E", 4)], &m);
        prop_assert!(out.is_err());
    }

    /// Bit strings survive serialization.
    #[test]
    fn bitstring_roundtrip(bits in proptest::collection::vec(0u8..2, 0..64)) {
        let s = ghzkd::protocol::BitString::new(bits);
        let json = serde_json::to_string(&s).unwrap();
        let back: ghzkd::protocol::BitString = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, s);
    }
}

/// Empirical measurement frequencies agree with the exact distribution
/// within four standard errors (20 000 trials per basis).
#[test]
fn sampling_matches_exact_distribution() {
    let [a, b, c] = abc();
    let g1 = ghz_like_state(1, abc()).unwrap();
    // A state with a genuinely mixed GHZ-like spectrum: ψ⁺ on (a, c) with a
    // spectator |0⟩ on b splits evenly between two basis states.
    let psi_b0 = bell_state(ghzkd::qstate::PSI_PLUS, [a.clone(), c.clone()])
        .unwrap()
        .tensor(&Ket::qubit(b.clone(), 0).unwrap())
        .unwrap();

    let trials = 20_000usize;
    let mut rng = rng_from_seed(0x5A);
    for (label, state, basis, targets) in [
        ("Z on b of G1", &g1, Basis::Z, vec![&b]),
        ("Bell on (a,c) of G1", &g1, Basis::Bell, vec![&a, &c]),
        ("GHZ-like of psi+ x |0>", &psi_b0, Basis::GhzLike, vec![&a, &b, &c]),
    ] {
        let exact = state.outcome_distribution(basis, &targets).unwrap();
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for _ in 0..trials {
            let out = state.measure(basis, &targets, &mut rng).unwrap();
            *counts.entry(out.value).or_insert(0) += 1;
        }
        for (&value, &p) in &exact {
            let freq = counts.get(&value).copied().unwrap_or(0) as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt().max(1e-9);
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "{label}: outcome {value} freq {freq} vs exact {p} (4se = {})",
                4.0 * se
            );
        }
        for &value in counts.keys() {
            assert!(exact.contains_key(&value), "{label}: impossible outcome {value}");
        }
    }
}

/// Pooled case counts over 100 sessions pass a 99% chi-square test against
/// the uniform four-way split. Parameters keep sift restarts negligible so
/// the pooled counts are an unconditioned multinomial sample.
#[test]
fn case_distribution_is_uniform() {
    let mut counts = [0u64; 4];
    let mut rounds = 0u64;
    for seed in 0..100 {
        let config = SessionConfig::new(8, 8, seed, AttackSpec::None);
        let (result, _) = run_session_traced(&config).unwrap();
        assert_eq!(result.restarts, 0, "seed {seed} restarted; pick roomier parameters");
        for (i, &k) in result.case_counts.iter().enumerate() {
            counts[i] += k as u64;
        }
        rounds += result.records.len() as u64;
    }
    let expected = rounds as f64 / 4.0;
    let chi2: f64 = counts
        .iter()
        .map(|&k| {
            let d = k as f64 - expected;
            d * d / expected
        })
        .sum();
    // 99th percentile of chi-square with 3 degrees of freedom.
    assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
}

/// The sampled first-pass detection rate tracks the exact oracle through
/// the cumulative closed form at several session sizes.
#[test]
fn monte_carlo_tracks_exact_oracle() {
    let attacks = [
        AttackSpec::MeasureResend { target: Channel::B },
        AttackSpec::InterceptResend {
            target: Channel::B,
            fake: FakeBit::Zero,
        },
    ];
    let sessions = 10_000u64;
    for attack in attacks {
        let exact = exact_detection(&attack).unwrap();
        for (n, tau, seed) in [(1u32, 1u32, 0x11u64), (2, 2, 0x22), (4, 4, 0x44)] {
            let target = cumulative_detection(exact.per_particle, n, tau);
            let mc = monte_carlo_detection(&attack, n, tau, sessions, seed).unwrap();
            let se = (target * (1.0 - target) / sessions as f64).sqrt().max(1e-9);
            assert!(
                (mc.estimate - target).abs() <= 4.0 * se,
                "{attack:?} at n+tau={}: mc {} vs {} (4se = {})",
                n + tau,
                mc.estimate,
                target,
                4.0 * se
            );
        }
    }
    // Undetectable attacks never abort a session.
    for attack in [
        AttackSpec::None,
        AttackSpec::DoubleCnotSingle { target: Channel::B },
        AttackSpec::DoubleCnotTwice,
    ] {
        let mc = monte_carlo_detection(&attack, 2, 2, 500, 9).unwrap();
        assert_eq!(mc.detected, 0, "{attack:?}");
    }
}

/// complement(K_A) = K_B ⊕ K_C and pairwise key agreement hold in every
/// completed session for each attack whose announcements come from genuine
/// source particles.
#[test]
fn completed_sessions_satisfy_key_relations() {
    let attacks = [
        AttackSpec::None,
        AttackSpec::DoubleCnotSingle { target: Channel::B },
        AttackSpec::DoubleCnotSingle { target: Channel::C },
        AttackSpec::DoubleCnotTwice,
        AttackSpec::EntangleMeasure(Box::new(EntangleMeasureSpec::compliant(4))),
    ];
    for attack in attacks {
        for seed in 0..20 {
            let config = SessionConfig::new(6, 2, seed, attack.clone());
            let (result, _) = run_session_traced(&config).unwrap();
            assert!(!result.aborted, "{attack:?} seed {seed} aborted");
            let keys = result.keys.unwrap();
            assert!(keys.k_ab.agree(), "{attack:?} seed {seed}");
            assert!(keys.k_ac.agree(), "{attack:?} seed {seed}");
            assert!(keys.secret_sharing_holds(), "{attack:?} seed {seed}");
        }
    }
    // Measure-resend leaves announcements tied to the genuine collapsed
    // state, so the shared-secret relation also holds in the rare sessions
    // that survive its checks.
    let mut survivors = 0;
    for seed in 0..400 {
        let config = SessionConfig::new(1, 1, seed, AttackSpec::MeasureResend { target: Channel::B });
        let (result, _) = run_session_traced(&config).unwrap();
        if !result.aborted {
            let keys = result.keys.unwrap();
            assert!(keys.secret_sharing_holds(), "seed {seed}");
            survivors += 1;
        }
    }
    assert!(survivors > 0, "no measure-resend session survived; weaker test than intended");
}

/// Honest completeness is not a small-n accident: every checked round stays
/// consistent across key lengths up to 64.
#[test]
fn honest_completeness_across_sizes() {
    for n in [1u32, 2, 17, 64] {
        for seed in 0..5 {
            let config = SessionConfig::new(n, 2, seed, AttackSpec::None);
            let (result, _) = run_session_traced(&config).unwrap();
            assert!(!result.aborted, "n={n} seed={seed}");
            assert!(
                result.records.iter().all(|r| r.consistent != Some(false)),
                "n={n} seed={seed}"
            );
            let keys = result.keys.unwrap();
            assert_eq!(keys.k_a.len(), n as usize);
            assert!(keys.k_ab.agree() && keys.k_ac.agree());
            assert!(keys.secret_sharing_holds());
        }
    }
}

/// A measure-resend interceptor on channel b knows every K_AB bit: she
/// collapsed the very qubit Bob later measured.
#[test]
fn measure_resend_guesses_are_perfect() {
    for seed in 0..10 {
        let mut config = SessionConfig::new(
            8,
            2,
            seed,
            AttackSpec::MeasureResend { target: Channel::B },
        );
        // Tolerate the inevitable check failures so key material still forms.
        config.abort_threshold = 1.0;
        let (result, eve) = run_session_traced(&config).unwrap();
        let keys = result.keys.expect("threshold 1.0 never error-aborts");
        let guesses = eve_guess(&config.attack, &eve, &result.records, 8);
        assert_eq!(guesses, keys.k_ab.peer.bits(), "seed {seed}");
    }
}

/// Exact detection is symmetric across the two channels and under flipping
/// the intercept-resend fake bit.
#[test]
fn detection_symmetries() {
    let mr_b = exact_detection(&AttackSpec::MeasureResend { target: Channel::B }).unwrap();
    let mr_c = exact_detection(&AttackSpec::MeasureResend { target: Channel::C }).unwrap();
    assert!((mr_b.per_particle - mr_c.per_particle).abs() < 1e-12);

    let ir = |fake| {
        exact_detection(&AttackSpec::InterceptResend {
            target: Channel::B,
            fake,
        })
        .unwrap()
        .per_particle
    };
    let zero = ir(FakeBit::Zero);
    assert!((zero - ir(FakeBit::One)).abs() < 1e-12);
    assert!((zero - ir(FakeBit::Random)).abs() < 1e-12);
}
