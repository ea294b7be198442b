mod common;

use common::Q;
use covergame::equilibrium::enumerate_bne;
use covergame::instances::{gen_random, PolicyKind, RandomParams};
use covergame::metrics::{w_star, WelfareSummary};
use covergame::model::expected_welfare_by_state;
use covergame::partition::{all_policies, bell, SetPartitions};
use covergame::{ExactBundle, SignalingPolicy};
use num_traits::Zero;
use proptest::prelude::*;

fn bundle(seed: u64, agents: usize, resources: usize, support: usize, small_actions: bool) -> ExactBundle {
    gen_random(&RandomParams {
        n_agents: agents,
        n_resources: resources,
        max_actions: 3,
        max_action_size: small_actions.then_some(1),
        support_size: support,
        max_value: 2,
        max_denominator: 6,
        policy: PolicyKind::RandomPartition,
        seed,
        ..RandomParams::default()
    })
    .expect("valid parameters")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // best uninformed equilibrium <= sum_k p_k W*(posterior_k) = best informed
    // equilibrium, under marginal contribution
    #[test]
    fn jensen_chain(seed in any::<u64>(), agents in 1usize..=3, resources in 1usize..=4,
                    support in 1usize..=4, small in any::<bool>()) {
        let b = bundle(seed, agents, resources, support, small);
        let s = WelfareSummary::new(&b.game, &b.dist, &b.policy, &b.rule, &Default::default()).unwrap();
        let mut by_cells = Q::zero();
        for cell in b.policy.cells() {
            let mean = b.dist.posterior_mean(cell).unwrap();
            by_cells += b.dist.cell_probability(cell).unwrap() * w_star(&b.game, &mean).unwrap().0;
        }
        prop_assert!(s.uninformed_best <= by_cells);
        prop_assert_eq!(&s.informed_best, &by_cells);
        prop_assert_eq!(&s.uninformed_best, &w_star(&b.game, &b.dist.prior_mean()).unwrap().0);
    }

    // a finer partition never lowers the best informed welfare
    #[test]
    fn refinement_monotonicity(seed in any::<u64>(), agents in 1usize..=3, resources in 1usize..=4,
                               support in 1usize..=4, small in any::<bool>()) {
        let b = bundle(seed, agents, resources, support, small);
        let policies = all_policies(b.dist.len(), 4).unwrap();
        let best: Vec<Q> = policies
            .iter()
            .map(|p| enumerate_bne(&b.game, &b.dist, p, &b.rule).unwrap().best_expected_welfare().unwrap())
            .collect();
        for (i, fine) in policies.iter().enumerate() {
            for (j, coarse) in policies.iter().enumerate() {
                if fine.refines(coarse) {
                    prop_assert!(best[i] >= best[j], "{} vs {}", fine, coarse);
                }
            }
        }
    }

    // the per-cell and per-state welfare of any equilibrium agree
    #[test]
    fn welfare_by_cell_matches_by_state(seed in any::<u64>(), agents in 1usize..=3, support in 1usize..=3) {
        let b = bundle(seed, agents, 3, support, false);
        let set = enumerate_bne(&b.game, &b.dist, &b.policy, &b.rule).unwrap();
        for (s, w) in set.materialize_default().unwrap() {
            prop_assert_eq!(w, expected_welfare_by_state(&b.game, &b.dist, &b.policy, &s).unwrap());
        }
    }

    #[test]
    fn partitions_are_counted_by_bell(n in 0usize..=7) {
        let labels: Vec<Vec<usize>> = SetPartitions::new(n).collect();
        prop_assert_eq!(labels.len() as u128, bell(n));
        if n > 0 {
            for l in &labels {
                prop_assert!(SignalingPolicy::from_labels(l).is_ok());
            }
        }
    }
}
