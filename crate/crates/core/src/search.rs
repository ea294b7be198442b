//! Brute-force search over deterministic signaling policies.
//!
//! Every partition of the support is scored by the expected welfare of its
//! best or worst Bayes-Nash equilibrium. Per-cell equilibrium extremes are
//! cached by cell, since the same cell shows up in many partitions.

use std::collections::HashMap;

use crate::equilibrium::{enumerate_nash_with, NashOptions};
use crate::error::Result;
use crate::model::{CoverageGame, SignalingPolicy, UtilityRule, ValueDistribution};
use crate::scalar::Scalar;

/// Largest support searched (Bell(10) = 115975 partitions).
pub const MAX_SEARCH_SUPPORT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    BestCase,
    WorstCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPolicy<S> {
    /// Competition rank by objective value: tied policies share a rank.
    pub rank: usize,
    pub policy: SignalingPolicy,
    pub objective: S,
    pub informed_best: S,
    pub informed_worst: S,
}

/// Scores all partitions of the support and sorts them: higher objective
/// first, then fewer cells, then lexicographic order of the cells.
pub fn rank_policies<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    f: &UtilityRule<S>,
    objective: Objective,
    opts: &NashOptions,
) -> Result<Vec<RankedPolicy<S>>> {
    let policies = crate::partition::all_policies(dist.len(), MAX_SEARCH_SUPPORT)?;
    // validate shapes once through the regular path
    crate::equilibrium::enumerate_bne_with(game, dist, &SignalingPolicy::no_information(dist.len()), f, opts)?;

    let mut cache: HashMap<Vec<usize>, (S, S)> = HashMap::new();
    let mut scored = Vec::with_capacity(policies.len());
    for policy in policies {
        let mut best = S::zero();
        let mut worst = S::zero();
        for cell in policy.cells() {
            let (b, w) = match cache.get(cell) {
                Some(x) => x.clone(),
                None => {
                    let p = dist.cell_probability(cell)?;
                    let ne = enumerate_nash_with(game, &dist.posterior_mean(cell)?, f, opts)?;
                    let b = p.clone() * ne.best().expect("nonempty Nash set").1.clone();
                    let w = p * ne.worst().expect("nonempty Nash set").1.clone();
                    cache.insert(cell.clone(), (b.clone(), w.clone()));
                    (b, w)
                }
            };
            best = best + b;
            worst = worst + w;
        }
        let value = match objective {
            Objective::BestCase => best.clone(),
            Objective::WorstCase => worst.clone(),
        };
        scored.push(RankedPolicy { rank: 0, policy, objective: value, informed_best: best, informed_worst: worst });
    }

    scored.sort_by(|a, b| {
        b.objective
            .partial_cmp(&a.objective)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.policy.len().cmp(&b.policy.len()))
            .then(a.policy.cmp(&b.policy))
    });
    for i in 0..scored.len() {
        scored[i].rank = if i > 0 && scored[i].objective == scored[i - 1].objective {
            scored[i - 1].rank
        } else {
            i + 1
        };
    }
    Ok(scored)
}

/// Number of policies [`rank_policies`] will score for a support of size `n`.
pub fn policy_count(n: usize) -> u128 {
    crate::partition::bell(n)
}
