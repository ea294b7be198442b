//! Coverage games, uncertain resource values, signaling policies and utility
//! rules, plus the welfare, utility and potential evaluations built on them.
//!
//! Resources and agents are 0-based throughout. An action is a set of resource
//! indices, stored sorted and duplicate-free.

use std::fmt;

use crate::error::{CoverError, Result};
use crate::scalar::{factorial, Scalar};

/// A set of resource indices, sorted ascending.
pub type Action = Vec<usize>;

/// Agents, resources and per-agent admissible actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoverageGame {
    n_resources: usize,
    action_sets: Vec<Vec<Action>>,
}

impl CoverageGame {
    /// Builds a game from raw action lists.
    ///
    /// Duplicate resources inside one action collapse. Fails if an action
    /// references a resource `>= n_resources`, an agent has no actions, or two
    /// actions of one agent coincide as sets.
    pub fn new(n_resources: usize, action_sets: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if n_resources == 0 {
            return Err(CoverError::InvalidGame("at least one resource is required".into()));
        }
        if action_sets.is_empty() {
            return Err(CoverError::InvalidGame("at least one agent is required".into()));
        }
        let mut canonical = Vec::with_capacity(action_sets.len());
        for (agent, actions) in action_sets.into_iter().enumerate() {
            if actions.is_empty() {
                return Err(CoverError::InvalidGame(format!("agent {agent} has no actions")));
            }
            let mut set: Vec<Action> = Vec::with_capacity(actions.len());
            for mut action in actions {
                action.sort_unstable();
                action.dedup();
                if let Some(&r) = action.iter().find(|&&r| r >= n_resources) {
                    return Err(CoverError::InvalidGame(format!(
                        "agent {agent} references resource {r} but the game has {n_resources} resources"
                    )));
                }
                if set.contains(&action) {
                    return Err(CoverError::InvalidGame(format!(
                        "agent {agent} lists the action {action:?} twice"
                    )));
                }
                set.push(action);
            }
            canonical.push(set);
        }
        Ok(Self { n_resources, action_sets: canonical })
    }

    pub fn n_agents(&self) -> usize {
        self.action_sets.len()
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    pub fn actions(&self, agent: usize) -> &[Action] {
        &self.action_sets[agent]
    }

    pub fn action_sets(&self) -> &[Vec<Action>] {
        &self.action_sets
    }

    pub fn action(&self, agent: usize, index: usize) -> &[usize] {
        &self.action_sets[agent][index]
    }

    /// `prod_i |A_i|`, saturating at `u128::MAX`.
    pub fn joint_action_space_size(&self) -> u128 {
        self.action_sets
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }

    /// Every allocation in lexicographic order of action indices.
    pub fn allocations(&self) -> impl Iterator<Item = Allocation> + '_ {
        let radices: Vec<usize> = self.action_sets.iter().map(Vec::len).collect();
        Odometer::new(radices).map(Allocation)
    }

    pub fn check_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.0.len() != self.n_agents() {
            return Err(CoverError::DimensionMismatch { expected: self.n_agents(), got: alloc.0.len() });
        }
        for (agent, &a) in alloc.0.iter().enumerate() {
            if a >= self.action_sets[agent].len() {
                return Err(CoverError::InvalidAllocation(format!(
                    "agent {agent} has {} actions, got index {a}",
                    self.action_sets[agent].len()
                )));
            }
        }
        Ok(())
    }

    fn check_values<S: Scalar>(&self, v: &ValueVector<S>) -> Result<()> {
        if v.len() != self.n_resources {
            return Err(CoverError::DimensionMismatch { expected: self.n_resources, got: v.len() });
        }
        Ok(())
    }

    /// Number of agents covering each resource (`|a|_r`).
    pub fn coverage_counts(&self, alloc: &Allocation) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_resources];
        for (agent, &a) in alloc.0.iter().enumerate() {
            for &r in &self.action_sets[agent][a] {
                counts[r] += 1;
            }
        }
        counts
    }

    /// The allocation with `agent`'s action removed: counts over the others.
    pub fn coverage_counts_without(&self, alloc: &Allocation, agent: usize) -> Vec<usize> {
        let mut counts = self.coverage_counts(alloc);
        for &r in self.action(agent, alloc.0[agent]) {
            counts[r] -= 1;
        }
        counts
    }
}

/// Mixed-radix counter over `radices`, least significant digit last.
#[derive(Debug, Clone)]
pub(crate) struct Odometer {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Odometer {
    pub(crate) fn new(radices: Vec<usize>) -> Self {
        let current = if radices.contains(&0) { None } else { Some(vec![0; radices.len()]) };
        Self { radices, current }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < self.radices[pos] {
                break;
            }
            cur[pos] = 0;
        }
        Some(out)
    }
}

/// Nonnegative per-resource values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueVector<S>(Vec<S>);

impl<S: Scalar> ValueVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| x.is_negative_value()) {
            return Err(CoverError::InvalidValues(format!("entry {i} is negative")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![S::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    /// `lambda * self`; `lambda` must be nonnegative.
    pub fn scale(&self, lambda: &S) -> Result<Self> {
        if lambda.is_negative_value() {
            return Err(CoverError::InvalidValues("negative scale factor".into()));
        }
        Ok(Self(self.0.iter().map(|x| x.clone() * lambda.clone()).collect()))
    }

    /// `weight * self + (1 - weight) * other`, for `weight` in `[0, 1]`.
    pub fn convex_combination(&self, other: &Self, weight: &S) -> Result<Self> {
        if self.len() != other.len() {
            return Err(CoverError::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        if weight.is_negative_value() || *weight > S::one() {
            return Err(CoverError::InvalidValues("convex weight outside [0, 1]".into()));
        }
        let rest = S::one() - weight.clone();
        Ok(Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() * weight.clone() + b.clone() * rest.clone())
                .collect(),
        ))
    }

    /// Elementwise `self >= other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

/// Discrete prior over value vectors: a support with strictly positive
/// probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueDistribution<S> {
    support: Vec<ValueVector<S>>,
    probs: Vec<S>,
}

impl<S: Scalar> ValueDistribution<S> {
    pub fn new(support: Vec<ValueVector<S>>, probs: Vec<S>) -> Result<Self> {
        if support.is_empty() {
            return Err(CoverError::InvalidDistribution("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(CoverError::InvalidDistribution(format!(
                "{} support points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let dim = support[0].len();
        if let Some(k) = support.iter().position(|x| x.len() != dim) {
            return Err(CoverError::InvalidDistribution(format!(
                "support point {k} has length {} but point 0 has length {dim}",
                support[k].len()
            )));
        }
        if let Some(k) = probs.iter().position(|p| *p <= S::zero()) {
            return Err(CoverError::InvalidDistribution(format!(
                "support point {k} has nonpositive probability"
            )));
        }
        let total = crate::scalar::sum(&probs);
        let sums_to_one = if S::EXACT {
            total == S::one()
        } else {
            (total.approx_f64() - 1.0).abs() <= 1e-9
        };
        if !sums_to_one {
            return Err(CoverError::InvalidDistribution(format!(
                "probabilities sum to {total:?}, not 1"
            )));
        }
        for i in 0..support.len() {
            for j in i + 1..support.len() {
                if support[i] == support[j] {
                    return Err(CoverError::InvalidDistribution(format!(
                        "support points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { support, probs })
    }

    /// Uniform prior over `support`.
    pub fn uniform(support: Vec<ValueVector<S>>) -> Result<Self> {
        let n = support.len().max(1);
        let p = S::one() / S::from_count(n);
        let probs = vec![p; support.len()];
        Self::new(support, probs)
    }

    /// Point mass at `v`.
    pub fn deterministic(v: ValueVector<S>) -> Self {
        Self { support: vec![v], probs: vec![S::one()] }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn n_resources(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[ValueVector<S>] {
        &self.support
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    /// Total prior mass of the support indices in `cell`.
    pub fn cell_probability(&self, cell: &[usize]) -> Result<S> {
        self.check_cell(cell)?;
        Ok(cell.iter().fold(S::zero(), |acc, &k| acc + self.probs[k].clone()))
    }

    fn check_cell(&self, cell: &[usize]) -> Result<()> {
        if cell.is_empty() {
            return Err(CoverError::InvalidPolicy("empty cell".into()));
        }
        if let Some(&k) = cell.iter().find(|&&k| k >= self.len()) {
            return Err(CoverError::InvalidPolicy(format!(
                "support index {k} out of range for {} support points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Conditional mean `E[v | v in cell]`.
    pub fn posterior_mean(&self, cell: &[usize]) -> Result<ValueVector<S>> {
        let mass = self.cell_probability(cell)?;
        let mut mean = vec![S::zero(); self.n_resources()];
        for &k in cell {
            for (m, x) in mean.iter_mut().zip(self.support[k].as_slice()) {
                *m = m.clone() + self.probs[k].clone() * x.clone();
            }
        }
        Ok(ValueVector(mean.into_iter().map(|m| m / mass.clone()).collect()))
    }

    pub fn prior_mean(&self) -> ValueVector<S> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.posterior_mean(&all).expect("full support is a valid cell")
    }

    pub(crate) fn check_game(&self, game: &CoverageGame) -> Result<()> {
        if self.n_resources() != game.n_resources() {
            return Err(CoverError::DimensionMismatch {
                expected: game.n_resources(),
                got: self.n_resources(),
            });
        }
        Ok(())
    }
}

/// Deterministic signaling policy: a partition of the support indices.
///
/// Cells are stored sorted, and ordered by their smallest element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalingPolicy {
    cells: Vec<Vec<usize>>,
}

impl SignalingPolicy {
    pub fn new(cells: Vec<Vec<usize>>, support_len: usize) -> Result<Self> {
        if cells.is_empty() {
            return Err(CoverError::InvalidPolicy("a policy needs at least one cell".into()));
        }
        let mut seen = vec![false; support_len];
        let mut canonical = Vec::with_capacity(cells.len());
        for mut cell in cells {
            if cell.is_empty() {
                return Err(CoverError::InvalidPolicy("cells must be nonempty".into()));
            }
            cell.sort_unstable();
            for &k in &cell {
                if k >= support_len {
                    return Err(CoverError::InvalidPolicy(format!(
                        "support index {k} out of range for {support_len} support points"
                    )));
                }
                if seen[k] {
                    return Err(CoverError::InvalidPolicy(format!("support index {k} appears twice")));
                }
                seen[k] = true;
            }
            canonical.push(cell);
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(CoverError::InvalidPolicy(format!("support index {k} is not covered")));
        }
        canonical.sort();
        Ok(Self { cells: canonical })
    }

    /// Every support point gets its own signal.
    pub fn full_revelation(support_len: usize) -> Self {
        Self { cells: (0..support_len).map(|k| vec![k]).collect() }
    }

    /// A single signal: agents learn nothing beyond the prior.
    pub fn no_information(support_len: usize) -> Self {
        Self { cells: vec![(0..support_len).collect()] }
    }

    /// Builds a policy from a restricted-growth labelling (`labels[k]` is the
    /// block of support point `k`).
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let m = labels.iter().max().map_or(0, |&x| x + 1);
        let mut cells = vec![Vec::new(); m];
        for (k, &l) in labels.iter().enumerate() {
            cells[l].push(k);
        }
        cells.retain(|c| !c.is_empty());
        Self::new(cells, labels.len())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn support_len(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Index of the cell holding support point `state`.
    pub fn cell_of(&self, state: usize) -> Option<usize> {
        self.cells.iter().position(|c| c.binary_search(&state).is_ok())
    }

    /// `true` if every cell of `self` lies inside some cell of `coarser`.
    pub fn refines(&self, coarser: &SignalingPolicy) -> bool {
        self.cells.iter().all(|cell| {
            coarser.cells.iter().any(|big| cell.iter().all(|k| big.binary_search(k).is_ok()))
        })
    }

    pub(crate) fn check_distribution<S: Scalar>(&self, dist: &ValueDistribution<S>) -> Result<()> {
        if self.support_len() != dist.len() {
            return Err(CoverError::InvalidPolicy(format!(
                "policy partitions {} support points but the distribution has {}",
                self.support_len(),
                dist.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SignalingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, cell) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            write!(f, "{{")?;
            for (j, k) in cell.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// Which named family a utility table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Marginal contribution, `f(x) = 1{x = 1}`.
    Mc,
    /// The price-of-anarchy maximizing rule for `n` agents.
    G,
    Other,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Mc => "mc",
            RuleKind::G => "g",
            RuleKind::Other => "other",
        })
    }
}

/// Shared per-resource payoff share `f(1), ..., f(n)`; `f(0) = 0` implicitly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UtilityRule<S> {
    table: Vec<S>,
}

impl<S: Scalar> UtilityRule<S> {
    pub fn new(table: Vec<S>) -> Result<Self> {
        if table.is_empty() {
            return Err(CoverError::InvalidRule("table must cover at least one agent".into()));
        }
        if let Some(i) = table.iter().position(|x| x.is_negative_value()) {
            return Err(CoverError::InvalidRule(format!("f({}) is negative", i + 1)));
        }
        Ok(Self { table })
    }

    /// Marginal contribution rule.
    pub fn marginal_contribution(n_agents: usize) -> Result<Self> {
        if n_agents == 0 {
            return Err(CoverError::InvalidRule("n_agents must be at least 1".into()));
        }
        let mut table = vec![S::zero(); n_agents];
        table[0] = S::one();
        Ok(Self { table })
    }

    /// The price-of-anarchy maximizing rule for coverage games with
    /// `n_agents` players:
    ///
    /// `f(x) = (x-1)! (c + sum_{i=x}^{n-1} 1/i!) / (c + sum_{i=1}^{n-1} 1/i!)`
    /// with `c = 1 / ((n-1) (n-1)!)`.
    pub fn gairing(n_agents: usize) -> Result<Self> {
        if n_agents < 2 {
            return Err(CoverError::InvalidRule(format!(
                "the price-of-anarchy maximizing rule needs at least 2 agents, got {n_agents}"
            )));
        }
        let n = n_agents;
        let c = S::one() / (S::from_count(n - 1) * factorial::<S>(n - 1));
        // tail[x] = sum_{i=x}^{n-1} 1/i!
        let mut tail = vec![S::zero(); n + 1];
        for i in (1..n).rev() {
            tail[i] = tail[i + 1].clone() + S::one() / factorial::<S>(i);
        }
        let denom = c.clone() + tail[1].clone();
        let table = (1..=n)
            .map(|x| factorial::<S>(x - 1) * (c.clone() + tail[x].clone()) / denom.clone())
            .collect();
        Ok(Self { table })
    }

    /// `(1 - lambda) * a + lambda * b`.
    pub fn interpolate(a: &Self, b: &Self, lambda: &S) -> Result<Self> {
        if a.table.len() != b.table.len() {
            return Err(CoverError::DimensionMismatch { expected: a.table.len(), got: b.table.len() });
        }
        if lambda.is_negative_value() || *lambda > S::one() {
            return Err(CoverError::InvalidRule("interpolation weight outside [0, 1]".into()));
        }
        let rest = S::one() - lambda.clone();
        Self::new(
            a.table
                .iter()
                .zip(&b.table)
                .map(|(x, y)| rest.clone() * x.clone() + lambda.clone() * y.clone())
                .collect(),
        )
    }

    pub fn n_agents(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    /// `f(count)`, with `f(0) = 0`.
    pub fn share(&self, count: usize) -> S {
        if count == 0 {
            S::zero()
        } else {
            self.table[count - 1].clone()
        }
    }

    /// Classifies the table by comparing it to the named rules of its size.
    pub fn kind(&self) -> RuleKind {
        let n = self.n_agents();
        if Self::marginal_contribution(n).is_ok_and(|mc| mc == *self) {
            RuleKind::Mc
        } else if Self::gairing(n).is_ok_and(|g| g == *self) {
            RuleKind::G
        } else {
            RuleKind::Other
        }
    }

    pub(crate) fn check_game(&self, game: &CoverageGame) -> Result<()> {
        if self.n_agents() != game.n_agents() {
            return Err(CoverError::DimensionMismatch { expected: game.n_agents(), got: self.n_agents() });
        }
        Ok(())
    }
}

/// `f^mc` for `n_agents` agents.
pub fn make_fmc<S: Scalar>(n_agents: usize) -> Result<UtilityRule<S>> {
    UtilityRule::marginal_contribution(n_agents)
}

/// `f^g` for `n_agents` agents.
pub fn make_fg<S: Scalar>(n_agents: usize) -> Result<UtilityRule<S>> {
    UtilityRule::gairing(n_agents)
}

/// One action index per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation(pub Vec<usize>);

impl Allocation {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// `self` with agent `agent` switched to action `action`.
    pub fn with(&self, agent: usize, action: usize) -> Self {
        let mut next = self.0.clone();
        next[agent] = action;
        Allocation(next)
    }
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Signal-contingent play: one allocation per policy cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointStrategy(pub Vec<Allocation>);

impl JointStrategy {
    pub fn per_cell(&self) -> &[Allocation] {
        &self.0
    }

    pub fn check(&self, game: &CoverageGame, policy: &SignalingPolicy) -> Result<()> {
        if self.0.len() != policy.len() {
            return Err(CoverError::DimensionMismatch { expected: policy.len(), got: self.0.len() });
        }
        self.0.iter().try_for_each(|a| game.check_allocation(a))
    }
}

/// Total value of resources covered by at least one agent.
pub fn welfare<S: Scalar>(game: &CoverageGame, alloc: &Allocation, v: &ValueVector<S>) -> Result<S> {
    game.check_allocation(alloc)?;
    game.check_values(v)?;
    Ok(covered_value(&game.coverage_counts(alloc), v.as_slice()))
}

pub(crate) fn covered_value<S: Scalar>(counts: &[usize], v: &[S]) -> S {
    counts
        .iter()
        .zip(v)
        .filter(|(&c, _)| c > 0)
        .fold(S::zero(), |acc, (_, x)| acc + x.clone())
}

/// `U_i(a; v) = sum_{r in a_i} v_r f(|a|_r)`.
pub fn utility<S: Scalar>(
    game: &CoverageGame,
    alloc: &Allocation,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
    agent: usize,
) -> Result<S> {
    if agent >= game.n_agents() {
        return Err(CoverError::AgentOutOfRange { agent, n_agents: game.n_agents() });
    }
    game.check_allocation(alloc)?;
    game.check_values(v)?;
    f.check_game(game)?;
    let counts = game.coverage_counts(alloc);
    Ok(game
        .action(agent, alloc.0[agent])
        .iter()
        .fold(S::zero(), |acc, &r| acc + v.0[r].clone() * f.share(counts[r])))
}

/// Congestion-game potential `sum_r v_r sum_{j=1}^{|a|_r} f(j)`.
pub fn potential<S: Scalar>(
    game: &CoverageGame,
    alloc: &Allocation,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
) -> Result<S> {
    game.check_allocation(alloc)?;
    game.check_values(v)?;
    f.check_game(game)?;
    let counts = game.coverage_counts(alloc);
    Ok(counts.iter().zip(v.as_slice()).fold(S::zero(), |acc, (&c, x)| {
        let cumulative = (1..=c).fold(S::zero(), |s, j| s + f.share(j));
        acc + x.clone() * cumulative
    }))
}

/// `E[v | v in cell]`.
pub fn posterior_mean<S: Scalar>(dist: &ValueDistribution<S>, cell: &[usize]) -> Result<ValueVector<S>> {
    dist.posterior_mean(cell)
}

/// Expected welfare of a signal-contingent strategy, computed state by state
/// as `sum_x mu0(x) W(alpha(signal(x)); x)`.
pub fn expected_welfare_by_state<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    strategy: &JointStrategy,
) -> Result<S> {
    dist.check_game(game)?;
    policy.check_distribution(dist)?;
    strategy.check(game, policy)?;
    let mut total = S::zero();
    for (k, (x, p)) in dist.support().iter().zip(dist.probs()).enumerate() {
        let cell = policy.cell_of(k).expect("policy covers the support");
        total = total + p.clone() * welfare(game, &strategy.0[cell], x)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_fraction(n, d)
    }

    fn vv(xs: &[(i64, i64)]) -> ValueVector<Rational> {
        ValueVector::new(xs.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    fn voim_game() -> CoverageGame {
        CoverageGame::new(3, vec![vec![vec![0], vec![1]], vec![vec![1], vec![2]]]).unwrap()
    }

    #[test]
    fn game_rejects_out_of_range_resource() {
        let err = CoverageGame::new(2, vec![vec![vec![0, 2]]]).unwrap_err();
        assert!(matches!(err, CoverError::InvalidGame(_)));
    }

    #[test]
    fn game_rejects_agent_without_actions() {
        assert!(CoverageGame::new(2, vec![vec![vec![0]], vec![]]).is_err());
    }

    #[test]
    fn game_rejects_duplicate_actions_after_dedup() {
        assert!(CoverageGame::new(3, vec![vec![vec![0, 1], vec![1, 0, 1]]]).is_err());
        let g = CoverageGame::new(3, vec![vec![vec![2, 0, 2]]]).unwrap();
        assert_eq!(g.action(0, 0), &[0, 2]);
    }

    #[test]
    fn allocations_are_lexicographic() {
        let g = voim_game();
        let all: Vec<_> = g.allocations().collect();
        assert_eq!(
            all,
            vec![
                Allocation(vec![0, 0]),
                Allocation(vec![0, 1]),
                Allocation(vec![1, 0]),
                Allocation(vec![1, 1])
            ]
        );
        assert_eq!(g.joint_action_space_size(), 4);
    }

    #[test]
    fn welfare_examples() {
        let g = CoverageGame::new(3, vec![vec![vec![0]], vec![vec![2], vec![0]]]).unwrap();
        let v = vv(&[(1, 1), (2, 1), (3, 1)]);
        assert_eq!(welfare(&g, &Allocation(vec![0, 0]), &v).unwrap(), q(4, 1));
        assert_eq!(welfare(&g, &Allocation(vec![0, 1]), &ValueVector::<Rational>::zeros(3)).unwrap(), q(0, 1));

        let g = voim_game();
        let v = vv(&[(1, 1), (7, 8), (0, 1)]);
        assert_eq!(welfare(&g, &Allocation(vec![0, 0]), &v).unwrap(), q(15, 8));
    }

    #[test]
    fn welfare_dimension_mismatch() {
        let g = voim_game();
        let err = welfare(&g, &Allocation(vec![0, 0]), &vv(&[(1, 1)])).unwrap_err();
        assert_eq!(err, CoverError::DimensionMismatch { expected: 3, got: 1 });
    }

    #[test]
    fn utility_examples() {
        let solo = CoverageGame::new(1, vec![vec![vec![0]]]).unwrap();
        let mc1 = make_fmc::<Rational>(1).unwrap();
        assert_eq!(utility(&solo, &Allocation(vec![0]), &vv(&[(5, 1)]), &mc1, 0).unwrap(), q(5, 1));

        let shared = CoverageGame::new(1, vec![vec![vec![0]], vec![vec![0]]]).unwrap();
        let v = vv(&[(1, 1)]);
        let mc2 = make_fmc::<Rational>(2).unwrap();
        assert_eq!(utility(&shared, &Allocation(vec![0, 0]), &v, &mc2, 0).unwrap(), q(0, 1));
        let g2 = make_fg::<Rational>(2).unwrap();
        assert_eq!(utility(&shared, &Allocation(vec![0, 0]), &v, &g2, 0).unwrap(), q(1, 2));

        let err = utility(&shared, &Allocation(vec![0, 0]), &v, &g2, 2).unwrap_err();
        assert_eq!(err, CoverError::AgentOutOfRange { agent: 2, n_agents: 2 });
    }

    #[test]
    fn potential_examples() {
        let solo = CoverageGame::new(1, vec![vec![vec![0]]]).unwrap();
        let mc1 = make_fmc::<Rational>(1).unwrap();
        assert_eq!(potential(&solo, &Allocation(vec![0]), &vv(&[(3, 1)]), &mc1).unwrap(), q(3, 1));

        let shared = CoverageGame::new(1, vec![vec![vec![0]], vec![vec![0]]]).unwrap();
        let v = vv(&[(1, 1)]);
        let a = Allocation(vec![0, 0]);
        assert_eq!(potential(&shared, &a, &v, &make_fmc(2).unwrap()).unwrap(), q(1, 1));
        assert_eq!(potential(&shared, &a, &v, &make_fg(2).unwrap()).unwrap(), q(3, 2));
    }

    #[test]
    fn fmc_tables() {
        assert_eq!(make_fmc::<Rational>(1).unwrap().table(), &[q(1, 1)]);
        assert_eq!(make_fmc::<Rational>(3).unwrap().table(), &[q(1, 1), q(0, 1), q(0, 1)]);
        assert!(make_fmc::<Rational>(0).is_err());
    }

    #[test]
    fn fg_tables() {
        assert_eq!(make_fg::<Rational>(2).unwrap().table(), &[q(1, 1), q(1, 2)]);
        assert_eq!(make_fg::<Rational>(3).unwrap().table(), &[q(1, 1), q(3, 7), q(2, 7)]);
        assert!(matches!(make_fg::<Rational>(1), Err(CoverError::InvalidRule(_))));
        for n in 2..=15 {
            let t = make_fg::<Rational>(n).unwrap();
            assert_eq!(t.share(1), q(1, 1));
            assert!(t.table().iter().all(|x| *x > q(0, 1)));
            assert_eq!(t.kind(), RuleKind::G);
        }
    }

    #[test]
    fn rule_kinds() {
        assert_eq!(make_fmc::<Rational>(3).unwrap().kind(), RuleKind::Mc);
        let custom = UtilityRule::new(vec![q(1, 1), q(1, 3)]).unwrap();
        assert_eq!(custom.kind(), RuleKind::Other);
        let mc = make_fmc::<Rational>(2).unwrap();
        let g = make_fg::<Rational>(2).unwrap();
        assert_eq!(UtilityRule::interpolate(&mc, &g, &q(0, 1)).unwrap().kind(), RuleKind::Mc);
        assert_eq!(UtilityRule::interpolate(&mc, &g, &q(1, 1)).unwrap().kind(), RuleKind::G);
        assert_eq!(UtilityRule::interpolate(&mc, &g, &q(1, 2)).unwrap().table(), &[q(1, 1), q(1, 4)]);
    }

    #[test]
    fn rule_rejects_negative_entries() {
        assert!(UtilityRule::new(vec![q(1, 1), q(-1, 2)]).is_err());
        assert!(UtilityRule::<Rational>::new(vec![]).is_err());
    }

    #[test]
    fn distribution_invariants() {
        let a = vv(&[(1, 1)]);
        let b = vv(&[(2, 1)]);
        assert!(ValueDistribution::new(vec![a.clone(), b.clone()], vec![q(1, 2), q(2, 5)]).is_err());
        assert!(ValueDistribution::new(vec![a.clone(), b.clone()], vec![q(1, 1), q(0, 1)]).is_err());
        assert!(ValueDistribution::new(vec![a.clone(), a.clone()], vec![q(1, 2), q(1, 2)]).is_err());
        assert!(ValueDistribution::new(vec![a.clone(), vv(&[(1, 1), (0, 1)])], vec![q(1, 2), q(1, 2)]).is_err());
        assert!(ValueDistribution::new(vec![a, b], vec![q(1, 2), q(1, 2)]).is_ok());
    }

    #[test]
    fn value_vector_rejects_negative() {
        assert!(ValueVector::new(vec![q(1, 1), q(-1, 3)]).is_err());
    }

    #[test]
    fn posterior_mean_examples() {
        let eps = q(1, 2);
        let p = q(1, 2);
        let low = ValueVector::new(vec![q(1, 1), q(1, 1) - eps.clone(), q(0, 1)]).unwrap();
        let high = ValueVector::new(vec![
            q(1, 1),
            q(1, 1) + eps.clone() * (q(1, 1) - p.clone()),
            q(0, 1),
        ])
        .unwrap();
        let dist = ValueDistribution::new(vec![low.clone(), high], vec![q(1, 1) - p.clone(), p]).unwrap();
        assert_eq!(posterior_mean(&dist, &[0]).unwrap(), low);
        let mean = posterior_mean(&dist, &[0, 1]).unwrap();
        assert_eq!(mean, dist.prior_mean());
        // 1 - eps (1 - p)^2
        assert_eq!(mean.as_slice()[1], q(7, 8));
        assert!(posterior_mean(&dist, &[]).is_err());
        assert!(posterior_mean(&dist, &[2]).is_err());
    }

    #[test]
    fn policy_invariants() {
        assert!(SignalingPolicy::new(vec![vec![0], vec![0, 1]], 2).is_err());
        assert!(SignalingPolicy::new(vec![vec![0]], 2).is_err());
        assert!(SignalingPolicy::new(vec![vec![0, 1], vec![]], 2).is_err());
        assert!(SignalingPolicy::new(vec![], 0).is_err());
        let p = SignalingPolicy::new(vec![vec![2], vec![1, 0]], 3).unwrap();
        assert_eq!(p.cells(), &[vec![0, 1], vec![2]]);
        assert_eq!(p.cell_of(2), Some(1));
        assert_eq!(p.to_string(), "{0,1}|{2}");
        assert!(SignalingPolicy::full_revelation(3).refines(&p));
        assert!(p.refines(&SignalingPolicy::no_information(3)));
        assert!(!SignalingPolicy::no_information(3).refines(&p));
        assert_eq!(SignalingPolicy::from_labels(&[0, 1, 0]).unwrap().cells(), &[vec![0, 2], vec![1]]);
    }

    #[test]
    fn float_backend_runs_the_same_formulas() {
        let t = make_fg::<f64>(3).unwrap();
        assert!((t.share(2) - 3.0 / 7.0).abs() < 1e-12);
        let dist = ValueDistribution::uniform(vec![
            ValueVector::new(vec![1.0, 0.0]).unwrap(),
            ValueVector::new(vec![0.0, 1.0]).unwrap(),
            ValueVector::new(vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        assert!((dist.prior_mean().as_slice()[0] - 0.5f64).abs() < 1e-12);
    }

    fn small_game() -> impl Strategy<Value = CoverageGame> {
        (1usize..=4, 1usize..=3).prop_flat_map(|(r, n)| {
            let mask = 1u32..(1u32 << r);
            let actions = proptest::collection::btree_set(mask, 1..=3);
            proptest::collection::vec(actions, n).prop_map(move |sets| {
                let sets = sets
                    .into_iter()
                    .map(|s| {
                        s.into_iter()
                            .map(|m| (0..r).filter(|b| m >> b & 1 == 1).collect())
                            .collect()
                    })
                    .collect();
                CoverageGame::new(r, sets).unwrap()
            })
        })
    }

    fn values(r: usize) -> impl Strategy<Value = ValueVector<Rational>> {
        proptest::collection::vec((0i64..=20, 1i64..=6), r)
            .prop_map(|xs| ValueVector::new(xs.into_iter().map(|(n, d)| q(n, d)).collect()).unwrap())
    }

    fn game_and_values() -> impl Strategy<Value = (CoverageGame, ValueVector<Rational>)> {
        small_game().prop_flat_map(|g| {
            let r = g.n_resources();
            (Just(g), values(r))
        })
    }

    proptest! {
        #[test]
        fn marginal_contribution_identity((g, v) in game_and_values()) {
            let f = make_fmc::<Rational>(g.n_agents()).unwrap();
            for alloc in g.allocations() {
                let w = welfare(&g, &alloc, &v).unwrap();
                for i in 0..g.n_agents() {
                    let without = covered_value(&g.coverage_counts_without(&alloc, i), v.as_slice());
                    prop_assert_eq!(utility(&g, &alloc, &v, &f, i).unwrap(), w.clone() - without);
                }
            }
        }

        #[test]
        fn potential_tracks_unilateral_deviations(
            (g, v) in game_and_values(),
            table in proptest::collection::vec((0i64..=10, 1i64..=5), 3),
            pick in any::<proptest::sample::Index>(),
        ) {
            let f = UtilityRule::new(
                table[..g.n_agents()].iter().map(|&(n, d)| q(n, d)).collect()
            ).unwrap();
            let all: Vec<_> = g.allocations().collect();
            let a = pick.get(&all);
            for i in 0..g.n_agents() {
                for alt in 0..g.actions(i).len() {
                    let b = a.with(i, alt);
                    let d_phi = potential(&g, &b, &v, &f).unwrap() - potential(&g, a, &v, &f).unwrap();
                    let d_u = utility(&g, &b, &v, &f, i).unwrap() - utility(&g, a, &v, &f, i).unwrap();
                    prop_assert_eq!(d_phi, d_u);
                }
            }
        }

        #[test]
        fn posterior_means_decompose_prior(
            pts in proptest::collection::btree_set(proptest::collection::vec(0i64..=9, 3), 1..=5),
            weights in proptest::collection::vec(1i64..=7, 5),
            labels in proptest::collection::vec(0usize..5, 5),
        ) {
            let support: Vec<_> = pts.into_iter().map(|p| {
                ValueVector::new(p.into_iter().map(|x| q(x, 1)).collect()).unwrap()
            }).collect();
            let m = support.len();
            let total: i64 = weights[..m].iter().sum();
            let probs = weights[..m].iter().map(|&w| q(w, total)).collect();
            let dist = ValueDistribution::new(support, probs).unwrap();
            // relabel into a restricted-growth string so every label is used
            let mut seen: Vec<usize> = Vec::new();
            let rg: Vec<usize> = labels[..m].iter().map(|l| {
                match seen.iter().position(|s| s == l) {
                    Some(i) => i,
                    None => { seen.push(*l); seen.len() - 1 }
                }
            }).collect();
            let policy = SignalingPolicy::from_labels(&rg).unwrap();
            let mut acc = vec![q(0, 1); 3];
            let mut reversed = vec![q(0, 1); 3];
            for cell in policy.cells() {
                let pk = dist.cell_probability(cell).unwrap();
                let mean = dist.posterior_mean(cell).unwrap();
                for (a, x) in acc.iter_mut().zip(mean.as_slice()) {
                    *a = a.clone() + pk.clone() * x.clone();
                }
            }
            for cell in policy.cells().iter().rev() {
                let pk = dist.cell_probability(cell).unwrap();
                let mean = dist.posterior_mean(cell).unwrap();
                for (a, x) in reversed.iter_mut().zip(mean.as_slice()) {
                    *a = a.clone() + pk.clone() * x.clone();
                }
            }
            let prior = dist.prior_mean();
            prop_assert_eq!(&acc[..], prior.as_slice());
            prop_assert_eq!(acc, reversed);
        }
    }
}
