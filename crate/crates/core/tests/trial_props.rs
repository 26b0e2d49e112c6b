use proptest::prelude::*;

use untangle_core::bench::{run_benchmark, summarize};
use untangle_core::diagram::{knot_template, KnotSpec, TemplateName};
use untangle_core::executor::{run_trial, Event, MoveKind, Policy, SimConfig};

fn knot() -> impl Strategy<Value = KnotSpec> {
    (0..TemplateName::ALL.len(), any::<bool>()).prop_map(|(i, dense)| KnotSpec { name: TemplateName::ALL[i], dense })
}

fn policy() -> impl Strategy<Value = Policy> {
    prop::sample::select(Policy::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trials_are_deterministic(spec in knot(), seed in any::<u64>(), p in policy()) {
        let d = knot_template(spec, seed, 6.0).unwrap();
        let cfg = SimConfig::default();
        let a = run_trial(&d, p, &cfg, seed);
        prop_assert_eq!(&a, &run_trial(&d, p, &cfg, seed));
        prop_assert_eq!(a.log_jsonl(), run_trial(&d, p, &cfg, seed).log_jsonl());
    }

    #[test]
    fn log_invariants(spec in knot(), seed in any::<u64>(), p in policy()) {
        let d = knot_template(spec, seed, 6.0).unwrap();
        let r = run_trial(&d, p, &SimConfig::default(), seed);
        let mut crossings = r.initial_crossings;
        let mut t_prime = 0;
        for rec in &r.log {
            if rec.kind == MoveKind::NodeDeletion {
                t_prime += 1;
            }
            prop_assert_eq!(rec.t_prime, t_prime);
            // the lift itself is rigid; only falling curls change the count
            let curls: usize = rec.events.iter().map(|e| match e { Event::CurlsRemoved { count } => *count, _ => 0 }).sum();
            if matches!(rec.kind, MoveKind::ReposingTranslation | MoveKind::ReposingRotation) {
                prop_assert!(rec.crossings_after + curls >= crossings && rec.crossings_after <= crossings);
                if curls == 0 {
                    prop_assert_eq!(rec.crossings_after, crossings);
                }
            }
            for a in [rec.left, rec.right].into_iter().flatten() {
                if a.grasp_flag == 0 || a.is_hold() {
                    prop_assert_eq!(a.dtheta, 0.0);
                }
            }
            crossings = rec.crossings_after;
        }
        prop_assert_eq!(r.final_crossings, crossings);
        prop_assert_eq!(r.success, r.final_crossings <= 1 && r.failure_mode.is_none());
        prop_assert_eq!(r.total_actions, r.log.len());
    }
}

#[test]
fn every_policy_untangles_tier_one_without_noise() {
    let c = run_benchmark(&[1], &Policy::ALL, 20, &SimConfig::oracle(), 3).unwrap();
    for row in &c.table.rows {
        assert_eq!(row.successes, row.trials, "{}", row.policy);
    }
}

#[test]
fn medians_ignore_failures() {
    let c = run_benchmark(&[3], &[Policy::HLS], 30, &SimConfig::default(), 9).unwrap();
    let all: Vec<_> = c.trials.iter().map(|t| &t.result).collect();
    let wins: Vec<_> = all.iter().copied().filter(|r| r.success).collect();
    assert!(!wins.is_empty() && wins.len() < all.len());
    let (a, w) = (summarize(3, Policy::HLS, &all), summarize(3, Policy::HLS, &wins));
    assert_eq!(
        (a.median_node_deletions, a.median_recovery_actions, a.median_total_actions),
        (w.median_node_deletions, w.median_recovery_actions, w.median_total_actions)
    );
}
