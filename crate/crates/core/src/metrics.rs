//! Optimal welfare, price of anarchy and stability, the value of informing,
//! and the bound checks that go with them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{enumerate_bne_with, enumerate_nash_with, BayesNashSet, NashOptions, NashSet};
use crate::error::{CoverError, Result};
use crate::model::{
    Allocation, CoverageGame, RuleKind, SignalingPolicy, UtilityRule, ValueDistribution,
    ValueVector,
};
use crate::scalar::Scalar;
use crate::DEFAULT_JOINT_CAP;

/// Optimal welfare `W*(v)` and one optimal allocation, with the default
/// search-node cap.
pub fn w_star<S: Scalar>(game: &CoverageGame, v: &ValueVector<S>) -> Result<(S, Allocation)> {
    w_star_with(game, v, DEFAULT_JOINT_CAP)
}

/// Branch and bound over agents, fewest actions first. The bound is the
/// smaller of two overestimates of what the unplaced agents can still add:
/// the sum of their best marginal coverages (valid since coverage is
/// submodular) and the total uncovered value they can reach at all.
///
/// `node_cap` limits the number of search nodes expanded.
pub fn w_star_with<S: Scalar>(game: &CoverageGame, v: &ValueVector<S>, node_cap: u64) -> Result<(S, Allocation)> {
    if v.len() != game.n_resources() {
        return Err(CoverError::DimensionMismatch { expected: game.n_resources(), got: v.len() });
    }
    let n = game.n_agents();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| game.actions(i).len());
    // reach[d]: resources some agent at depth >= d can cover
    let mut reach = vec![Vec::new(); n + 1];
    let mut seen = vec![false; game.n_resources()];
    for d in (0..n).rev() {
        for action in game.actions(order[d]) {
            for &r in action {
                seen[r] = true;
            }
        }
        reach[d] = (0..game.n_resources()).filter(|&r| seen[r]).collect();
    }
    let mut search = Search {
        game,
        v: v.as_slice(),
        order,
        reach,
        covered: vec![0usize; game.n_resources()],
        chosen: Vec::with_capacity(n),
        best: None,
        nodes: 0,
        cap: node_cap,
    };
    search.greedy_incumbent();
    search.descend(S::zero())?;
    let (w, by_depth) = search.best.expect("greedy incumbent always exists");
    let mut alloc = vec![0; n];
    for (d, a) in by_depth.into_iter().enumerate() {
        alloc[search.order[d]] = a;
    }
    Ok((w, Allocation(alloc)))
}

struct Search<'a, S> {
    game: &'a CoverageGame,
    v: &'a [S],
    order: Vec<usize>,
    reach: Vec<Vec<usize>>,
    covered: Vec<usize>,
    /// Action index per depth.
    chosen: Vec<usize>,
    best: Option<(S, Vec<usize>)>,
    nodes: u64,
    cap: u64,
}

impl<S: Scalar> Search<'_, S> {
    fn marginal(&self, agent: usize, action: usize) -> S {
        self.game
            .action(agent, action)
            .iter()
            .filter(|&&r| self.covered[r] == 0)
            .fold(S::zero(), |acc, &r| acc + self.v[r].clone())
    }

    fn best_marginal(&self, agent: usize) -> S {
        (0..self.game.actions(agent).len())
            .map(|a| self.marginal(agent, a))
            .fold(S::zero(), |m, x| if x > m { x } else { m })
    }

    fn reachable(&self, depth: usize) -> S {
        self.reach[depth]
            .iter()
            .filter(|&&r| self.covered[r] == 0)
            .fold(S::zero(), |acc, &r| acc + self.v[r].clone())
    }

    fn place(&mut self, depth: usize, action: usize) {
        for &r in self.game.action(self.order[depth], action) {
            self.covered[r] += 1;
        }
        self.chosen.push(action);
    }

    fn unplace(&mut self, depth: usize) {
        let action = self.chosen.pop().unwrap();
        for &r in self.game.action(self.order[depth], action) {
            self.covered[r] -= 1;
        }
    }

    fn greedy_incumbent(&mut self) {
        let mut total = S::zero();
        for depth in 0..self.game.n_agents() {
            let agent = self.order[depth];
            let mut pick = 0;
            let mut gain = self.marginal(agent, 0);
            for a in 1..self.game.actions(agent).len() {
                let g = self.marginal(agent, a);
                if g > gain {
                    pick = a;
                    gain = g;
                }
            }
            total = total + gain;
            self.place(depth, pick);
        }
        let alloc = self.chosen.clone();
        for depth in (0..self.game.n_agents()).rev() {
            self.unplace(depth);
        }
        self.best = Some((total, alloc));
    }

    fn descend(&mut self, value: S) -> Result<()> {
        let depth = self.chosen.len();
        let n = self.game.n_agents();
        if depth == n {
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.chosen.clone()));
            }
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(CoverError::CapExceeded {
                what: "optimal-welfare search",
                size: self.nodes as u128,
                cap: self.cap,
            });
        }
        let by_agent = (depth..n).fold(S::zero(), |acc, d| acc + self.best_marginal(self.order[d]));
        let by_reach = self.reachable(depth);
        let rest = if by_reach < by_agent { by_reach } else { by_agent };
        if let Some((b, _)) = &self.best {
            if value.clone() + rest <= *b {
                return Ok(());
            }
        }
        let agent = self.order[depth];
        let mut options: Vec<(usize, S)> =
            (0..self.game.actions(agent).len()).map(|a| (a, self.marginal(agent, a))).collect();
        // largest gain first; stable sort keeps index order among ties
        options.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal));
        for (a, gain) in options {
            self.place(depth, a);
            let r = self.descend(value.clone() + gain);
            self.unplace(depth);
            r?;
        }
        Ok(())
    }
}

/// `(PoA, PoS)`: worst and best equilibrium welfare over optimal welfare.
pub fn poa_pos<S: Scalar>(game: &CoverageGame, v: &ValueVector<S>, f: &UtilityRule<S>) -> Result<(S, S)> {
    poa_pos_with(game, v, f, &NashOptions::default())
}

pub fn poa_pos_with<S: Scalar>(
    game: &CoverageGame,
    v: &ValueVector<S>,
    f: &UtilityRule<S>,
    opts: &NashOptions,
) -> Result<(S, S)> {
    let ne = enumerate_nash_with(game, v, f, opts)?;
    let (opt, _) = w_star_with(game, v, opts.cap)?;
    ratios_from(&ne, &opt)
}

fn ratios_from<S: Scalar>(ne: &NashSet<S>, opt: &S) -> Result<(S, S)> {
    if *opt == S::zero() {
        return Err(CoverError::ZeroOptimalWelfare);
    }
    let worst = ne.worst().expect("coverage games always have a pure equilibrium").1.clone();
    let best = ne.best().expect("coverage games always have a pure equilibrium").1.clone();
    Ok((worst / opt.clone(), best / opt.clone()))
}

/// Best and worst equilibrium welfare with and without signaling.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareSummary<S> {
    pub uninformed: NashSet<S>,
    pub informed: BayesNashSet<S>,
    pub uninformed_best: S,
    pub uninformed_worst: S,
    pub informed_best: S,
    pub informed_worst: S,
}

impl<S: Scalar> WelfareSummary<S> {
    pub fn new(
        game: &CoverageGame,
        dist: &ValueDistribution<S>,
        policy: &SignalingPolicy,
        f: &UtilityRule<S>,
        opts: &NashOptions,
    ) -> Result<Self> {
        let informed = enumerate_bne_with(game, dist, policy, f, opts)?;
        let uninformed = enumerate_nash_with(game, &dist.prior_mean(), f, opts)?;
        let uninformed_best = uninformed.best().expect("nonempty Nash set").1.clone();
        let uninformed_worst = uninformed.worst().expect("nonempty Nash set").1.clone();
        let informed_best = informed.best_expected_welfare().expect("nonempty Nash sets");
        let informed_worst = informed.worst_expected_welfare().expect("nonempty Nash sets");
        Ok(Self { uninformed, informed, uninformed_best, uninformed_worst, informed_best, informed_worst })
    }

    pub fn voi_plus(&self) -> Result<S> {
        ratio(&self.informed_best, &self.uninformed_best, "VoI+")
    }

    pub fn voi_minus(&self) -> Result<S> {
        ratio(&self.informed_worst, &self.uninformed_worst, "VoI-")
    }
}

fn ratio<S: Scalar>(num: &S, den: &S, what: &'static str) -> Result<S> {
    if *den == S::zero() {
        Err(CoverError::UndefinedRatio(what))
    } else {
        Ok(num.clone() / den.clone())
    }
}

/// `(VoI+, VoI-)`.
pub fn voi<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
) -> Result<(S, S)> {
    let summary = WelfareSummary::new(game, dist, policy, f, &NashOptions::default())?;
    Ok((summary.voi_plus()?, summary.voi_minus()?))
}

/// Sampled upper bounds on the infima of PoS and PoA over the convex hull of
/// the support.
#[derive(Debug, Clone, PartialEq)]
pub struct HullEstimate<S> {
    pub psi: S,
    pub rho: S,
    /// Points whose PoA/PoS were evaluated.
    pub evaluated: usize,
    /// Points skipped because optimal welfare was zero there.
    pub skipped_degenerate: usize,
    /// `true` when the hull is a single point, so the values are exact.
    pub exact: bool,
}

/// Minimum PoS and PoA over every support point plus
/// `n_samples - |support|` random convex combinations (integer weights in
/// `0..=1000`, normalized).
pub fn hull_infimum_estimate<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    f: &UtilityRule<S>,
    n_samples: usize,
    seed: u64,
) -> Result<HullEstimate<S>> {
    hull_infimum_estimate_with(game, dist, f, n_samples, seed, &NashOptions::default())
}

pub fn hull_infimum_estimate_with<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    f: &UtilityRule<S>,
    n_samples: usize,
    seed: u64,
    opts: &NashOptions,
) -> Result<HullEstimate<S>> {
    let m = dist.len();
    if n_samples < m {
        return Err(CoverError::BadParams(format!(
            "need at least {m} samples to include every support point, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<ValueVector<S>> = dist.support().to_vec();
    let mut skipped = 0;
    for _ in m..n_samples {
        let weights: Vec<usize> = (0..m).map(|_| rng.random_range(0..=1000usize)).collect();
        let total: usize = weights.iter().sum();
        if total == 0 {
            skipped += 1;
            continue;
        }
        let mut point = vec![S::zero(); dist.n_resources()];
        for (x, &w) in dist.support().iter().zip(&weights) {
            let w = S::from_count(w) / S::from_count(total);
            for (p, xi) in point.iter_mut().zip(x.as_slice()) {
                *p = p.clone() + w.clone() * xi.clone();
            }
        }
        points.push(ValueVector::new(point)?);
    }

    let mut psi: Option<S> = None;
    let mut rho: Option<S> = None;
    let mut evaluated = 0;
    for v in &points {
        match poa_pos_with(game, v, f, opts) {
            Ok((poa, pos)) => {
                evaluated += 1;
                if rho.as_ref().is_none_or(|r| poa < *r) {
                    rho = Some(poa);
                }
                if psi.as_ref().is_none_or(|p| pos < *p) {
                    psi = Some(pos);
                }
            }
            Err(CoverError::ZeroOptimalWelfare) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    match (psi, rho) {
        (Some(psi), Some(rho)) => Ok(HullEstimate { psi, rho, evaluated, skipped_degenerate: skipped, exact: m == 1 }),
        _ => Err(CoverError::UndefinedRatio("every sampled hull point has zero optimal welfare")),
    }
}

/// Lower end of the certified enclosure `2.7182818284 < e < 2.7182818285`.
pub fn e_lower<S: Scalar>() -> S {
    S::from_fraction(27_182_818_284, 10_000_000_000)
}

pub fn e_upper<S: Scalar>() -> S {
    S::from_fraction(27_182_818_285, 10_000_000_000)
}

/// Decides `x >= 1 - 1/e`, i.e. `e (1 - x) <= 1`, from the rational
/// enclosure of `e`.
pub fn at_least_one_minus_inv_e<S: Scalar>(x: &S) -> Outcome {
    let gap = S::one() - x.clone();
    if gap <= S::zero() || e_upper::<S>() * gap.clone() <= S::one() {
        Outcome::Pass
    } else if e_lower::<S>() * gap > S::one() {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    }
}

/// Result of one bound check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Could not be decided: the `e` enclosure is too coarse, or the check
    /// rests on a sampled estimate that only bounds the true constant.
    Inconclusive,
    /// The ratio under test is undefined (zero denominator).
    Undefined,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
            Outcome::Undefined => "undefined",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub outcome: Outcome,
    /// Informational checks never count as failures.
    pub informational: bool,
}

/// Full analysis of one `(game, prior, policy, rule)` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport<S> {
    pub n_cells: usize,
    pub rule_kind: RuleKind,
    pub uninformed_best: S,
    pub uninformed_worst: S,
    pub informed_best: S,
    pub informed_worst: S,
    pub uninformed_ne_count: usize,
    pub bne_count: u128,
    /// `W*` at the prior mean.
    pub w_star_uninformed: S,
    /// `W*` at each cell's posterior mean.
    pub w_star_cells: Vec<S>,
    /// Price of anarchy at the prior mean; `None` when `W* = 0`.
    pub poa: Option<S>,
    pub pos: Option<S>,
    /// `None` when the uninformed best equilibrium welfare is zero.
    pub voi_plus: Option<S>,
    pub voi_minus: Option<S>,
    pub hull: Option<HullEstimate<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalysisOptions {
    pub nash: NashOptions,
    /// Hull sample budget (support points included); `None` skips the
    /// estimate.
    pub hull_samples: Option<usize>,
    pub seed: u64,
}

/// Runs the whole pipeline on one configuration.
pub fn analyze<S: Scalar>(
    game: &CoverageGame,
    dist: &ValueDistribution<S>,
    policy: &SignalingPolicy,
    f: &UtilityRule<S>,
    opts: &AnalysisOptions,
) -> Result<MetricReport<S>> {
    let summary = WelfareSummary::new(game, dist, policy, f, &opts.nash)?;
    let (w_star_uninformed, _) = w_star_with(game, summary.uninformed.values(), opts.nash.cap)?;
    let w_star_cells = summary
        .informed
        .cells()
        .iter()
        .map(|c| w_star_with(game, c.posterior_mean(), opts.nash.cap).map(|(w, _)| w))
        .collect::<Result<Vec<_>>>()?;
    let (poa, pos) = match ratios_from(&summary.uninformed, &w_star_uninformed) {
        Ok((a, s)) => (Some(a), Some(s)),
        Err(CoverError::ZeroOptimalWelfare) => (None, None),
        Err(e) => return Err(e),
    };
    let hull = match opts.hull_samples {
        Some(n) => Some(hull_infimum_estimate_with(game, dist, f, n, opts.seed, &opts.nash)?),
        None => None,
    };
    Ok(MetricReport {
        n_cells: policy.len(),
        rule_kind: f.kind(),
        voi_plus: summary.voi_plus().ok(),
        voi_minus: summary.voi_minus().ok(),
        uninformed_ne_count: summary.uninformed.len(),
        bne_count: summary.informed.count(),
        uninformed_best: summary.uninformed_best,
        uninformed_worst: summary.uninformed_worst,
        informed_best: summary.informed_best,
        informed_worst: summary.informed_worst,
        w_star_uninformed,
        w_star_cells,
        poa,
        pos,
        hull,
    })
}

/// Checks the value-of-informing bounds that apply to `kind`.
///
/// * marginal contribution: `1 <= VoI+ <= |Pi|` and `1/2 <= VoI- <= 2|Pi|`;
/// * price-of-anarchy maximizing rule: `VoI+, VoI- >= 1 - 1/e`;
/// * any rule with a hull estimate: `psi <= VoI+ <= |Pi|/psi` and
///   `rho <= VoI- <= |Pi|/rho`. The estimates overshoot the true infima, so
///   these only ever pass; otherwise they are reported as inconclusive
///   unless the hull is a single point.
pub fn check_theorem_bounds<S: Scalar>(report: &MetricReport<S>, n_cells: usize, kind: RuleKind) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let cells = S::from_count(n_cells);
    let decide = |x: &Option<S>, test: &dyn Fn(&S) -> Outcome| match x {
        Some(x) => test(x),
        None => Outcome::Undefined,
    };
    let one = S::one();
    let half = S::from_fraction(1, 2);
    let two = S::from_count(2);
    match kind {
        RuleKind::Mc => {
            out.push(BoundCheck {
                name: "voi+>=1",
                outcome: decide(&report.voi_plus, &|x| Outcome::from_bool(*x >= one)),
                informational: false,
            });
            out.push(BoundCheck {
                name: "voi+<=|Pi|",
                outcome: decide(&report.voi_plus, &|x| Outcome::from_bool(*x <= cells)),
                informational: false,
            });
            out.push(BoundCheck {
                name: "voi->=1/2",
                outcome: decide(&report.voi_minus, &|x| Outcome::from_bool(*x >= half)),
                informational: false,
            });
            out.push(BoundCheck {
                name: "voi-<=2|Pi|",
                outcome: decide(&report.voi_minus, &|x| Outcome::from_bool(*x <= two.clone() * cells.clone())),
                informational: false,
            });
        }
        RuleKind::G => {
            out.push(BoundCheck {
                name: "voi+>=1-1/e",
                outcome: decide(&report.voi_plus, &|x| at_least_one_minus_inv_e(x)),
                informational: false,
            });
            out.push(BoundCheck {
                name: "voi->=1-1/e",
                outcome: decide(&report.voi_minus, &|x| at_least_one_minus_inv_e(x)),
                informational: false,
            });
        }
        RuleKind::Other => {}
    }
    if let Some(h) = &report.hull {
        let soft = |ok: bool| {
            if ok {
                Outcome::Pass
            } else if h.exact {
                Outcome::Fail
            } else {
                Outcome::Inconclusive
            }
        };
        let upper = |c: &S, x: &S| *c == S::zero() || x.clone() * c.clone() <= cells.clone();
        out.push(BoundCheck {
            name: "psi<=voi+",
            outcome: decide(&report.voi_plus, &|x| soft(h.psi <= *x)),
            informational: !h.exact,
        });
        out.push(BoundCheck {
            name: "voi+<=|Pi|/psi",
            outcome: decide(&report.voi_plus, &|x| soft(upper(&h.psi, x))),
            informational: !h.exact,
        });
        out.push(BoundCheck {
            name: "rho<=voi-",
            outcome: decide(&report.voi_minus, &|x| soft(h.rho <= *x)),
            informational: !h.exact,
        });
        out.push(BoundCheck {
            name: "voi-<=|Pi|/rho",
            outcome: decide(&report.voi_minus, &|x| soft(upper(&h.rho, x))),
            informational: !h.exact,
        });
    }
    out
}

/// `true` when no non-informational check failed or was undefined.
pub fn all_bounds_hold(checks: &[BoundCheck]) -> bool {
    checks
        .iter()
        .filter(|c| !c.informational)
        .all(|c| c.outcome == Outcome::Pass || c.outcome == Outcome::Inconclusive)
}
