//! Pure Nash equilibria, best-response dynamics and Bayes-Nash equilibria.
//!
//! Nash sets are found by exhaustive search over the joint action space after
//! iterated removal of strictly dominated actions. Removal is driven by a
//! bound that never discards an action that is a best response to some
//! profile of the surviving opponent actions, so the equilibrium set is
//! unchanged; every surviving profile is still checked against all of each
//! agent's original actions.
//!
//! Bayes-Nash equilibria are assembled cell by cell: a signal-contingent
//! strategy is an equilibrium exactly when each cell's allocation is a Nash
//! equilibrium of the game played at that cell's posterior mean values.
//! [`verify_bne`] checks the expected-utility condition directly instead, and
//! serves as the independent cross-check.

use std::fmt;

use crate::error::{CoverError, Result};
use crate::model::{
    covered_value, Allocation, CoverageGame, JointStrategy, Odometer, SignalingPolicy, UtilityRule,
    ValueDistribution, ValueVector,
};
use crate::scalar::Scalar;
use crate::{DEFAULT_JOINT_CAP, DEFAULT_STRATEGY_CAP};

/// Search knobs for Nash enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NashOptions {
    /// Largest joint action space (after pruning) searched exhaustively.
    pub cap: u64,
    /// Remove strictly dominated actions before searching.
    pub prune: bool,
}

impl Default for NashOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_JOINT_CAP, prune: true }
    }
}

impl NashOptions {
    pub fn with_cap(cap: u64) -> Self {
        Self { cap, ..Self::default() }
    }
}

/// `share[r][c] = v_r * f(c)` for every resource and coverage count.
struct ShareTable<S> {
    share: Vec<Vec<S>>,
}

impl<S: Scalar> ShareTable<S> {
    fn new(game: &CoverageGame, v: &[S], f: &UtilityRule<S>) -> Self {
        let n = game.n_agents();
        let share = v
            .iter()
            .map(|x| (0..=n).map(|c| x.clone() * f.share(c)).collect())
            .collect();
        Self { share }
    }

    /// Utility of playing `action` when `counts` already includes it.
    fn utility_in_place(&self, action: &[usize], counts: &[usize]) -> S {
        action
            .iter()
            .fold(S::zero(), |acc, &r| acc + self.share[r][counts[r]].clone())
    }

    /// Utility of switching to `action`, where `counts` includes the current
    /// action marked in `current`.
    fn utility_after_switch(&self, action: &[usize], counts: &[usize], current: &[bool]) -> S {
        action.iter().fold(S::zero(), |acc, &r| {
            let c = if current[r] { counts[r] } else { counts[r] + 1 };
            acc + self.share[r][c].clone()
        })
    }
}

fn check_inputs<S: Scalar>(game: &CoverageGame, v: &ValueVector<S>, f: &UtilityRule<S>) -> Result<()> {
    if v.len() != game.n_resources() {
        return Err(CoverError::DimensionMismatch { expected: game.n_resources(), got: v.len() });
    }
    if f.n_agents() != game.n_agents() {
        return Err(CoverError::DimensionMismatch { expected: game.n_agents(), got: f.n_agents() });
    }
    Ok(())
}

/// Per-agent action indices that survive iterated elimination of strictly
/// dominated actions.
///
/// Action `a` of agent `i` is removed when some surviving `b` beats it against
/// every profile of the others' surviving actions. The test is conservative:
/// coverage counts on each resource are bounded independently, using agents
/// that must (every surviving action) or may (some surviving action) cover it.
pub fn undominated_actions<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
) -> Result<Vec<Vec<usize>>> {
    check_inputs(game, v, f)?;
    let n = game.n_agents();
    let n_res = game.n_resources();
    let vals = v.as_slice();
    let mut alive: Vec<Vec<usize>> = (0..n).map(|i| (0..game.actions(i).len()).collect()).collect();

    // per agent: how many surviving actions contain each resource
    let tally = |alive: &Vec<Vec<usize>>, j: usize| -> Vec<usize> {
        let mut t = vec![0usize; n_res];
        for &a in &alive[j] {
            for &r in game.action(j, a) {
                t[r] += 1;
            }
        }
        t
    };

    loop {
        let mut changed = false;
        for i in 0..n {
            if alive[i].len() <= 1 {
                continue;
            }
            let mut must = vec![0usize; n_res];
            let mut may = vec![0usize; n_res];
            for j in (0..n).filter(|&j| j != i) {
                let t = tally(&alive, j);
                for r in 0..n_res {
                    if t[r] == alive[j].len() {
                        must[r] += 1;
                    }
                    if t[r] > 0 {
                        may[r] += 1;
                    }
                }
            }
            // best and worst per-resource payoff for agent i if it covers r
            let mut best = Vec::with_capacity(n_res);
            let mut worst = Vec::with_capacity(n_res);
            for r in 0..n_res {
                let mut hi = f.share(must[r] + 1);
                let mut lo = hi.clone();
                for c in must[r] + 2..=may[r] + 1 {
                    let s = f.share(c);
                    if s > hi {
                        hi = s.clone();
                    }
                    if s < lo {
                        lo = s;
                    }
                }
                best.push(vals[r].clone() * hi);
                worst.push(vals[r].clone() * lo);
            }

            let mut k = 0;
            while k < alive[i].len() {
                let a = alive[i][k];
                let act_a = game.action(i, a);
                let dominated = alive[i].iter().any(|&b| {
                    if b == a {
                        return false;
                    }
                    let act_b = game.action(i, b);
                    let upside = act_a
                        .iter()
                        .filter(|r| act_b.binary_search(r).is_err())
                        .fold(S::zero(), |acc, &r| acc + best[r].clone());
                    let floor = act_b
                        .iter()
                        .filter(|r| act_a.binary_search(r).is_err())
                        .fold(S::zero(), |acc, &r| acc + worst[r].clone());
                    upside < floor
                });
                if dominated {
                    alive[i].remove(k);
                    changed = true;
                } else {
                    k += 1;
                }
            }
        }
        if !changed {
            return Ok(alive);
        }
    }
}

/// All pure Nash equilibria of one deterministic game, in lexicographic order
/// of action indices, with their welfare.
#[derive(Debug, Clone, PartialEq)]
pub struct NashSet<S> {
    values: ValueVector<S>,
    rule: UtilityRule<S>,
    equilibria: Vec<Allocation>,
    welfare: Vec<S>,
}

impl<S: Scalar> NashSet<S> {
    pub fn values(&self) -> &ValueVector<S> {
        &self.values
    }

    pub fn rule(&self) -> &UtilityRule<S> {
        &self.rule
    }

    pub fn equilibria(&self) -> &[Allocation] {
        &self.equilibria
    }

    pub fn welfare(&self) -> &[S] {
        &self.welfare
    }

    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn contains(&self, alloc: &Allocation) -> bool {
        self.equilibria.binary_search(alloc).is_ok()
    }

    /// Highest-welfare equilibrium (first in order among ties).
    pub fn best(&self) -> Option<(&Allocation, &S)> {
        self.extreme(|cand, cur| cand > cur)
    }

    /// Lowest-welfare equilibrium (first in order among ties).
    pub fn worst(&self) -> Option<(&Allocation, &S)> {
        self.extreme(|cand, cur| cand < cur)
    }

    fn extreme(&self, better: impl Fn(&S, &S) -> bool) -> Option<(&Allocation, &S)> {
        let mut out: Option<(&Allocation, &S)> = None;
        for (a, w) in self.equilibria.iter().zip(&self.welfare) {
            match out {
                Some((_, cur)) if !better(w, cur) => {}
                _ => out = Some((a, w)),
            }
        }
        out
    }
}

/// `true` if no agent gains by a unilateral switch (weak inequality).
pub fn is_nash<S: Scalar>(
    game: &CoverageGame,
    alloc: &Allocation,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
) -> Result<bool> {
    check_inputs(game, v, f)?;
    game.check_allocation(alloc)?;
    let table = ShareTable::new(game, v.as_slice(), f);
    let counts = game.coverage_counts(alloc);
    let mut mark = vec![false; game.n_resources()];
    Ok(no_profitable_switch(game, &table, alloc, &counts, &mut mark))
}

fn no_profitable_switch<S: Scalar>(
    game: &CoverageGame,
    table: &ShareTable<S>,
    alloc: &Allocation,
    counts: &[usize],
    mark: &mut [bool],
) -> bool {
    for (i, &a) in alloc.0.iter().enumerate() {
        let own = game.action(i, a);
        let here = table.utility_in_place(own, counts);
        own.iter().for_each(|&r| mark[r] = true);
        let beaten = game
            .actions(i)
            .iter()
            .enumerate()
            .filter(|&(b, _)| b != a)
            .any(|(_, alt)| table.utility_after_switch(alt, counts, mark) > here);
        own.iter().for_each(|&r| mark[r] = false);
        if beaten {
            return false;
        }
    }
    true
}

/// All pure Nash equilibria with default options.
pub fn enumerate_nash<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
) -> Result<NashSet<S>> {
    enumerate_nash_with(game, v, f, &NashOptions::default())
}

pub fn enumerate_nash_with<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
    opts: &NashOptions,
) -> Result<NashSet<S>> {
    check_inputs(game, v, f)?;
    let candidates = if opts.prune {
        undominated_actions(game, v, f)?
    } else {
        (0..game.n_agents()).map(|i| (0..game.actions(i).len()).collect()).collect()
    };
    let size = candidates
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128));
    if size > opts.cap as u128 {
        return Err(CoverError::CapExceeded { what: "joint action space", size, cap: opts.cap });
    }

    let table = ShareTable::new(game, v.as_slice(), f);
    let mut mark = vec![false; game.n_resources()];
    let mut equilibria = Vec::new();
    let mut welfare = Vec::new();
    let radices = candidates.iter().map(Vec::len).collect();
    for digits in Odometer::new(radices) {
        let alloc = Allocation(digits.iter().zip(&candidates).map(|(&d, c)| c[d]).collect());
        let counts = game.coverage_counts(&alloc);
        if no_profitable_switch(game, &table, &alloc, &counts, &mut mark) {
            welfare.push(covered_value(&counts, v.as_slice()));
            equilibria.push(alloc);
        }
    }
    Ok(NashSet { values: v.clone(), rule: f.clone(), equilibria, welfare })
}

/// Order in which agents get to move.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Agents `0, 1, ..., n-1`, repeated.
    #[default]
    RoundRobin,
    /// A custom cyclic order; must mention every agent.
    Cyclic(Vec<usize>),
}

/// Which best response to take when several are equally good.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BrdConfig {
    pub schedule: Schedule,
    pub tie_break: TieBreak,
}

/// Allocations visited by best-response dynamics and the potential at each.
#[derive(Debug, Clone, PartialEq)]
pub struct BrdTrace<S> {
    pub path: Vec<Allocation>,
    pub potentials: Vec<S>,
}

impl<S> BrdTrace<S> {
    pub fn last(&self) -> &Allocation {
        self.path.last().expect("trace holds the initial allocation")
    }
}

/// Runs best-response dynamics to a fixed point.
///
/// An agent moves only on strict improvement, so the potential rises at every
/// move and the process stops at a Nash equilibrium.
pub fn best_response_dynamics<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
    init: &Allocation,
    config: &BrdConfig,
) -> Result<Allocation> {
    Ok(best_response_trace(game, v, f, init, config)?.last().clone())
}

pub fn best_response_trace<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
    init: &Allocation,
    config: &BrdConfig,
) -> Result<BrdTrace<S>> {
    check_inputs(game, v, f)?;
    game.check_allocation(init)?;
    let n = game.n_agents();
    let order: Vec<usize> = match &config.schedule {
        Schedule::RoundRobin => (0..n).collect(),
        Schedule::Cyclic(order) => {
            if let Some(&i) = order.iter().find(|&&i| i >= n) {
                return Err(CoverError::AgentOutOfRange { agent: i, n_agents: n });
            }
            if let Some(i) = (0..n).find(|i| !order.contains(i)) {
                return Err(CoverError::BadParams(format!("schedule never moves agent {i}")));
            }
            order.clone()
        }
    };

    let table = ShareTable::new(game, v.as_slice(), f);
    let mut mark = vec![false; game.n_resources()];
    let mut alloc = init.clone();
    let mut counts = game.coverage_counts(&alloc);
    let mut trace = BrdTrace {
        path: vec![alloc.clone()],
        potentials: vec![crate::model::potential(game, &alloc, v, f)?],
    };
    // stop after a full cycle of the schedule without a move
    let mut idle = 0;
    let mut pos = 0;
    while idle < order.len() {
        let i = order[pos];
        pos = (pos + 1) % order.len();
        let a = alloc.0[i];
        let own = game.action(i, a);
        let here = table.utility_in_place(own, &counts);
        own.iter().for_each(|&r| mark[r] = true);
        let mut best: Option<(usize, S)> = None;
        for (b, alt) in game.actions(i).iter().enumerate() {
            if b == a {
                continue;
            }
            let u = table.utility_after_switch(alt, &counts, &mark);
            let take = match &best {
                None => true,
                Some((_, cur)) => u > *cur || (u == *cur && config.tie_break == TieBreak::HighestIndex),
            };
            if take {
                best = Some((b, u));
            }
        }
        own.iter().for_each(|&r| mark[r] = false);
        match best {
            Some((b, u)) if u > here => {
                for &r in game.action(i, a) {
                    counts[r] -= 1;
                }
                for &r in game.action(i, b) {
                    counts[r] += 1;
                }
                alloc.0[i] = b;
                trace.potentials.push(crate::model::potential(game, &alloc, v, f)?);
                trace.path.push(alloc.clone());
                idle = 0;
            }
            _ => idle += 1,
        }
    }
    Ok(trace)
}

/// Equilibria of one signal's game, played at the posterior mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CellEquilibria<S> {
    pub cell: Vec<usize>,
    pub probability: S,
    pub nash: NashSet<S>,
}

impl<S: Scalar> CellEquilibria<S> {
    pub fn posterior_mean(&self) -> &ValueVector<S> {
        self.nash.values()
    }
}

/// Bayes-Nash equilibria of `(game, prior, policy, rule)`, held as the
/// per-cell Nash sets whose Cartesian product is the full set.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNashSet<S> {
    policy: SignalingPolicy,
    cells: Vec<CellEquilibria<S>>,
}

impl<S: Scalar> BayesNashSet<S> {
    pub fn policy(&self) -> &SignalingPolicy {
        &self.policy
    }

    pub fn cells(&self) -> &[CellEquilibria<S>] {
        &self.cells
    }

    /// Number of equilibrium strategies, `prod_k |NE_k|`.
    pub fn count(&self) -> u128 {
        self.cells
            .iter()
            .fold(1u128, |acc, c| acc.saturating_mul(c.nash.len() as u128))
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, strategy: &JointStrategy) -> bool {
        strategy.0.len() == self.cells.len()
            && strategy.0.iter().zip(&self.cells).all(|(a, c)| c.nash.contains(a))
    }

    /// `sum_k p_k W(alpha(pi_k); E[v | pi_k])` over the chosen per-cell
    /// equilibrium welfare.
    fn weighted(&self, pick: impl Fn(&NashSet<S>) -> Option<S>) -> Option<S> {
        self.cells.iter().try_fold(S::zero(), |acc, c| {
            pick(&c.nash).map(|w| acc + c.probability.clone() * w)
        })
    }

    pub fn best_expected_welfare(&self) -> Option<S> {
        self.weighted(|n| n.best().map(|(_, w)| w.clone()))
    }

    pub fn worst_expected_welfare(&self) -> Option<S> {
        self.weighted(|n| n.worst().map(|(_, w)| w.clone()))
    }

    /// Strategy attaining the best expected welfare.
    pub fn best_strategy(&self) -> Option<JointStrategy> {
        self.cells
            .iter()
            .map(|c| c.nash.best().map(|(a, _)| a.clone()))
            .collect::<Option<Vec<_>>>()
            .map(JointStrategy)
    }

    pub fn worst_strategy(&self) -> Option<JointStrategy> {
        self.cells
            .iter()
            .map(|c| c.nash.worst().map(|(a, _)| a.clone()))
            .collect::<Option<Vec<_>>>()
            .map(JointStrategy)
    }

    /// Lazily walks every equilibrium strategy with its expected welfare, in
    /// lexicographic order (cell 0 most significant).
    pub fn strategies(&self) -> impl Iterator<Item = (JointStrategy, S)> + '_ {
        let radices = self.cells.iter().map(|c| c.nash.len()).collect();
        Odometer::new(radices).map(move |digits| {
            let mut total = S::zero();
            let mut per_cell = Vec::with_capacity(digits.len());
            for (c, &d) in self.cells.iter().zip(&digits) {
                total = total + c.probability.clone() * c.nash.welfare()[d].clone();
                per_cell.push(c.nash.equilibria()[d].clone());
            }
            (JointStrategy(per_cell), total)
        })
    }

    /// Collects [`Self::strategies`], refusing when more than `cap` exist.
    pub fn materialize(&self, cap: u64) -> Result<Vec<(JointStrategy, S)>> {
        let size = self.count();
        if size > cap as u128 {
            return Err(CoverError::CapExceeded { what: "Bayes-Nash strategy set", size, cap });
        }
        Ok(self.strategies().collect())
    }

    pub fn materialize_default(&self) -> Result<Vec<(JointStrategy, S)>> {
        self.materialize(DEFAULT_STRATEGY_CAP)
    }
}

impl<S: Scalar> fmt::Display for BayesNashSet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BNE over {} with {} strategies", self.policy, self.count())
    }
}

fn check_bayesian<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
) -> Result<()> {
    dist.check_game(game)?;
    policy.check_distribution(dist)?;
    f.check_game(game)
}

pub fn enumerate_bne<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
) -> Result<BayesNashSet<S>> {
    enumerate_bne_with(game, dist, policy, f, &NashOptions::default())
}

/// Builds the Bayes-Nash set from each cell's Nash set at its posterior mean.
pub fn enumerate_bne_with<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
    opts: &NashOptions,
) -> Result<BayesNashSet<S>> {
    check_bayesian(game, dist, policy, f)?;
    let cells = policy
        .cells()
        .iter()
        .map(|cell| {
            let probability = dist.cell_probability(cell)?;
            let mean = dist.posterior_mean(cell)?;
            let nash = enumerate_nash_with(game, &mean, f, opts)?;
            Ok(CellEquilibria { cell: cell.clone(), probability, nash })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BayesNashSet { policy: policy.clone(), cells })
}

/// Expected welfare as the probability-weighted welfare of each cell's
/// allocation at the cell's posterior mean.
pub fn expected_welfare_by_cells<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    strategy: &JointStrategy,
) -> Result<S> {
    dist.check_game(game)?;
    policy.check_distribution(dist)?;
    strategy.check(game, policy)?;
    let mut total = S::zero();
    for (cell, alloc) in policy.cells().iter().zip(strategy.per_cell()) {
        let mean = dist.posterior_mean(cell)?;
        let w = covered_value(&game.coverage_counts(alloc), mean.as_slice());
        total = total + dist.cell_probability(cell)? * w;
    }
    Ok(total)
}

/// Checks the Bayes-Nash condition directly: no agent can raise its
/// prior-expected utility with any signal-contingent deviation.
///
/// Expected utilities are summed state by state over the support and every
/// deviation in `A_i^Pi` is tried, so this does not rely on the per-cell
/// characterization used by [`enumerate_bne`].
pub fn verify_bne<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
    strategy: &JointStrategy,
) -> Result<bool> {
    check_bayesian(game, dist, policy, f)?;
    strategy.check(game, policy)?;
    let n_states = dist.len();
    let m = policy.len();
    let signal: Vec<usize> = (0..n_states)
        .map(|k| policy.cell_of(k).expect("policy covers the support"))
        .collect();
    let tables: Vec<ShareTable<S>> = dist
        .support()
        .iter()
        .map(|x| ShareTable::new(game, x.as_slice(), f))
        .collect();
    let counts_per_cell: Vec<Vec<usize>> = strategy.0.iter().map(|a| game.coverage_counts(a)).collect();
    let mut mark = vec![false; game.n_resources()];

    for i in 0..game.n_agents() {
        let n_actions = game.actions(i).len();
        // payoff[k][b]: agent i's utility in state k when playing b against
        // the others' play under that state's signal
        let mut payoff: Vec<Vec<S>> = Vec::with_capacity(n_states);
        for k in 0..n_states {
            let alloc = &strategy.0[signal[k]];
            let counts = &counts_per_cell[signal[k]];
            let own = game.action(i, alloc.0[i]);
            own.iter().for_each(|&r| mark[r] = true);
            let row = (0..n_actions)
                .map(|b| {
                    if b == alloc.0[i] {
                        tables[k].utility_in_place(own, counts)
                    } else {
                        tables[k].utility_after_switch(game.action(i, b), counts, &mark)
                    }
                })
                .collect();
            own.iter().for_each(|&r| mark[r] = false);
            payoff.push(row);
        }
        let expected = |plan: &[usize]| -> S {
            (0..n_states).fold(S::zero(), |acc, k| {
                acc + dist.probs()[k].clone() * payoff[k][plan[signal[k]]].clone()
            })
        };
        let current: Vec<usize> = strategy.0.iter().map(|a| a.0[i]).collect();
        let baseline = expected(&current);
        if Odometer::new(vec![n_actions; m]).any(|plan| expected(&plan) > baseline) {
            return Ok(false);
        }
    }
    Ok(true)
}
