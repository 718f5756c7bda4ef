use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, NegativeBinomial};

use qsynth::circuit::Circuit;
use qsynth::dataset::random_circuit;
use qsynth::gates::{GateInstance, GateVocabulary, KindSet};
use qsynth::search::{random_search, verify_circuit, SearchConfig};
use qsynth::state::circuit_unitary;
use qsynth::target::TargetStates;

/// Two-sided p-value of observing `k` under a discrete distribution.
fn two_sided<D: DiscreteCDF<u64, f64>>(d: &D, k: u64) -> f64 {
    let at_least = if k == 0 { 1.0 } else { d.sf(k - 1) };
    (2.0 * d.cdf(k).min(at_least)).min(1.0)
}

#[test]
fn cost_one_circuits_are_uniform_over_the_vocabulary() {
    let vocab = GateVocabulary::new(4, KindSet::SYNTHESIS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 36_000;
    let mut counts = vec![0usize; vocab.len()];
    for _ in 0..draws {
        let c = random_circuit(&vocab, 1, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        counts[vocab.index_of(&c.gates()[0]).unwrap()] += 1;
    }
    let expected = draws as f64 / vocab.len() as f64;
    let chi2: f64 = counts.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((vocab.len() - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 {chi2}, p {p}");
}

/// Random search with one gate per attempt on a cost-1 target: every attempt
/// succeeds independently with probability 1/36.
#[test]
fn planted_cost_one_target_follows_the_geometric_law() {
    let vocab = GateVocabulary::new(4, KindSet::SYNTHESIS).unwrap();
    let planted = Circuit::from_gates(4, vec![GateInstance::cx(0, 1)]).unwrap();
    let target = TargetStates::from_table(circuit_unitary(&planted).unwrap()).unwrap();
    let cfg = SearchConfig {
        max_depth: 1,
        max_restarts: 100_000,
        ..SearchConfig::default()
    };
    let p = 1.0 / 36.0;
    let runs = 200u64;
    let mut first_try = 0u64;
    let mut failures = 0u64;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_search(&target, &vocab, &cfg, &mut rng).unwrap();
        let c = r.circuit.expect("found");
        assert!(verify_circuit(&c, &target, 1e-9, false).unwrap().is_empty());
        assert_eq!(c.gates(), planted.gates());
        first_try += (r.restarts_used == 0) as u64;
        failures += r.restarts_used as u64;
    }

    let first = Binomial::new(p, runs).unwrap();
    let p_first = two_sided(&first, first_try);
    assert!(p_first > 0.001, "first-attempt successes {first_try}, p {p_first}");

    let total = NegativeBinomial::new(runs as f64, p).unwrap();
    let p_total = two_sided(&total, failures);
    assert!(p_total > 0.001, "failures {failures}, p {p_total}");
}
