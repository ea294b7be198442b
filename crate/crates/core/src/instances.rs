//! Tight constructions for the value-of-informing bounds and seeded random
//! instance families.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoverError, Result};
use crate::metrics::{analyze, AnalysisOptions, MetricReport};
use crate::model::{CoverageGame, RuleKind, SignalingPolicy, UtilityRule, ValueDistribution, ValueVector};
use crate::scalar::Scalar;

/// A complete configuration `(game, prior, policy, rule)` with a label
/// naming where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceBundle<S> {
    pub game: CoverageGame,
    pub dist: ValueDistribution<S>,
    pub policy: SignalingPolicy,
    pub rule: UtilityRule<S>,
    pub label: String,
}

impl<S: Scalar> InstanceBundle<S> {
    /// Assembles a bundle after checking that the parts fit together.
    pub fn new(
        game: CoverageGame,
        dist: ValueDistribution<S>,
        policy: SignalingPolicy,
        rule: UtilityRule<S>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(CoverError::BadParams("bundle label must be nonempty".into()));
        }
        dist.check_game(&game)?;
        policy.check_distribution(&dist)?;
        rule.check_game(&game)?;
        Ok(Self { game, dist, policy, rule, label })
    }

    pub fn with_policy(mut self, policy: SignalingPolicy) -> Result<Self> {
        policy.check_distribution(&self.dist)?;
        self.policy = policy;
        Ok(self)
    }

    pub fn with_rule(mut self, rule: UtilityRule<S>) -> Result<Self> {
        rule.check_game(&self.game)?;
        self.rule = rule;
        Ok(self)
    }

    pub fn analyze(&self, opts: &AnalysisOptions) -> Result<MetricReport<S>> {
        analyze(&self.game, &self.dist, &self.policy, &self.rule, opts)
    }
}

/// One agent choosing one of `r` resources; exactly one resource is worth 1,
/// uniformly at random, and the signal reveals which.
pub fn gen_voip_tight<S: Scalar>(r: usize) -> Result<InstanceBundle<S>> {
    if r == 0 {
        return Err(CoverError::BadParams("need at least one resource".into()));
    }
    let game = CoverageGame::new(r, vec![(0..r).map(|k| vec![k]).collect()])?;
    let support = (0..r)
        .map(|k| {
            let mut x = vec![S::zero(); r];
            x[k] = S::one();
            ValueVector::new(x)
        })
        .collect::<Result<Vec<_>>>()?;
    InstanceBundle::new(
        game,
        ValueDistribution::uniform(support)?,
        SignalingPolicy::full_revelation(r),
        UtilityRule::marginal_contribution(1)?,
        format!("voip-tight(R={r})"),
    )
}

/// Two agents over three resources (`A_1 = {r1, r2}`, `A_2 = {r2, r3}`) with
/// `v1 = 1`, `v3 = 0` and `v2` equal to `1 - eps` w.p. `1 - p` or
/// `1 + eps (1 - p)` w.p. `p`; full revelation, marginal contribution rule.
pub fn gen_voim_tight<S: Scalar>(eps: &S, p: &S) -> Result<InstanceBundle<S>> {
    let zero = S::zero();
    let one = S::one();
    if *eps <= zero || *eps >= one || *p <= zero || *p >= one {
        return Err(CoverError::BadParams(format!(
            "voim-tight needs 0 < eps < 1 and 0 < p < 1, got eps={eps}, p={p}"
        )));
    }
    let game = CoverageGame::new(3, vec![vec![vec![0], vec![1]], vec![vec![1], vec![2]]])?;
    let low = ValueVector::new(vec![one.clone(), one.clone() - eps.clone(), zero.clone()])?;
    let high = ValueVector::new(vec![
        one.clone(),
        one.clone() + eps.clone() * (one.clone() - p.clone()),
        zero,
    ])?;
    let dist = ValueDistribution::new(vec![low, high], vec![one - p.clone(), p.clone()])?;
    InstanceBundle::new(
        game,
        dist,
        SignalingPolicy::full_revelation(2),
        UtilityRule::marginal_contribution(2)?,
        format!("voim-tight(eps={eps},p={p})"),
    )
}

/// Closed-form worst-case value of informing for [`gen_voim_tight`]:
/// `((1-p)(2-eps) + p(1 + eps(1-p))) / (2 - eps(1-p)^2)`.
pub fn voim_tight_closed_form<S: Scalar>(eps: &S, p: &S) -> S {
    let one = S::one();
    let two = S::from_count(2);
    let q = one.clone() - p.clone();
    let num = q.clone() * (two.clone() - eps.clone()) + p.clone() * (one + eps.clone() * q.clone());
    let den = two - eps.clone() * q.clone() * q;
    num / den
}

/// Number of shared resources, `ceil(1 / (f^g(n) - eps))`, in the
/// construction of [`gen_gairing_tight`].
pub fn gairing_shared_count<S: Scalar>(n: usize, eps: &S) -> Result<usize> {
    let fg_n = UtilityRule::<S>::gairing(n)?.share(n);
    if *eps <= S::zero() || *eps >= fg_n {
        return Err(CoverError::BadParams(format!(
            "gairing-tight needs 0 < eps < f^g({n}) = {fg_n}, got {eps}"
        )));
    }
    let private = fg_n - eps.clone();
    let z = Scalar::ceil(&(S::one() / private.clone()));
    let z = z
        .to_usize()
        .ok_or_else(|| CoverError::BadParams(format!("shared resource count {z} is not representable")))?;
    if S::one() / S::from_count(z) >= private {
        return Err(CoverError::BadParams(format!(
            "1/z = 1/{z} must be strictly below f^g({n}) - eps = {private}"
        )));
    }
    Ok(z)
}

/// Closed-form value of informing for [`gen_gairing_tight`]:
/// `1 / (1 + (n-1)(f^g(n) - eps))`.
pub fn gairing_tight_closed_form<S: Scalar>(n: usize, eps: &S) -> Result<S> {
    let fg_n = UtilityRule::<S>::gairing(n)?.share(n);
    Ok(S::one() / (S::one() + S::from_count(n - 1) * (fg_n - eps.clone())))
}

/// `n - 1` agents each choose a single shared resource or their own private
/// one (value `f^g(n) - eps`); the last agent covers all `z` shared resources
/// at once. Exactly one shared resource is worth 1, uniformly at random; the
/// signal reveals which. Rule `f^g`.
///
/// Resource layout: private resources `0..n-1`, shared `n-1..n-1+z`.
pub fn gen_gairing_tight<S: Scalar>(n: usize, eps: &S) -> Result<InstanceBundle<S>> {
    if n < 2 {
        return Err(CoverError::BadParams(format!("gairing-tight needs n >= 2, got {n}")));
    }
    let z = gairing_shared_count(n, eps)?;
    let rule = UtilityRule::<S>::gairing(n)?;
    let private = rule.share(n) - eps.clone();
    let n_res = n - 1 + z;
    let shared: Vec<usize> = (n - 1..n_res).collect();
    let mut actions: Vec<Vec<Vec<usize>>> = (0..n - 1)
        .map(|i| {
            let mut a: Vec<Vec<usize>> = shared.iter().map(|&s| vec![s]).collect();
            a.push(vec![i]);
            a
        })
        .collect();
    actions.push(vec![shared.clone()]);
    let game = CoverageGame::new(n_res, actions)?;
    let support = shared
        .iter()
        .map(|&hot| {
            let mut x = vec![private.clone(); n - 1];
            x.extend(shared.iter().map(|&s| if s == hot { S::one() } else { S::zero() }));
            ValueVector::new(x)
        })
        .collect::<Result<Vec<_>>>()?;
    InstanceBundle::new(
        game,
        ValueDistribution::uniform(support)?,
        SignalingPolicy::full_revelation(z),
        rule,
        format!("gairing-tight(n={n},eps={eps})"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorKind {
    #[default]
    Uniform,
    /// Integer weights in `1..=100`, normalized.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    #[default]
    FullRevelation,
    NoInformation,
    /// A random partition of the support (each point gets a uniform label).
    RandomPartition,
}

/// Parameters for [`gen_random`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomParams {
    pub n_agents: usize,
    pub n_resources: usize,
    /// Each agent gets between 1 and this many distinct nonempty actions.
    pub max_actions: usize,
    /// Largest number of resources in one action; `None` allows any size.
    pub max_action_size: Option<usize>,
    pub support_size: usize,
    /// Values lie in `[0, max_value]`.
    pub max_value: u32,
    pub max_denominator: u32,
    pub prior: PriorKind,
    pub policy: PolicyKind,
    pub rule: RuleKind,
    pub seed: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            n_agents: 2,
            n_resources: 3,
            max_actions: 3,
            max_action_size: None,
            support_size: 2,
            max_value: 1,
            max_denominator: 1000,
            prior: PriorKind::Uniform,
            policy: PolicyKind::FullRevelation,
            rule: RuleKind::Mc,
            seed: 0,
        }
    }
}

/// Seeded random instance.
pub fn gen_random<S: Scalar>(params: &RandomParams) -> Result<InstanceBundle<S>> {
    let RandomParams { n_agents, n_resources, max_actions, support_size, .. } = *params;
    if n_agents == 0 || n_resources == 0 || max_actions == 0 || support_size == 0 {
        return Err(CoverError::BadParams("sizes must be positive".into()));
    }
    if n_resources > 20 {
        return Err(CoverError::BadParams("random actions support at most 20 resources".into()));
    }
    if params.max_denominator == 0 {
        return Err(CoverError::BadParams("max_denominator must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let size_cap = params.max_action_size.unwrap_or(n_resources);
    if size_cap == 0 {
        return Err(CoverError::BadParams("max_action_size must be positive".into()));
    }
    let masks: Vec<usize> = (1usize..1 << n_resources).filter(|m| m.count_ones() as usize <= size_cap).collect();
    let action_sets = (0..n_agents)
        .map(|_| {
            let k = rng.random_range(1..=max_actions.min(masks.len()));
            let mut picks = sample(&mut rng, masks.len(), k).into_vec();
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|i| (0..n_resources).filter(|b| masks[i] >> b & 1 == 1).collect())
                .collect()
        })
        .collect();
    let game = CoverageGame::new(n_resources, action_sets)?;

    let mut support: Vec<ValueVector<S>> = Vec::with_capacity(support_size);
    let mut attempts = 0;
    while support.len() < support_size {
        attempts += 1;
        if attempts > 1000 * support_size {
            return Err(CoverError::BadParams(
                "could not draw enough distinct value vectors; widen max_value or max_denominator".into(),
            ));
        }
        let x = (0..n_resources)
            .map(|_| {
                let den = rng.random_range(1..=params.max_denominator) as u64;
                let num = rng.random_range(0..=params.max_value as u64 * den);
                S::from_u64(num).expect("integer conversion") / S::from_u64(den).expect("integer conversion")
            })
            .collect();
        let x = ValueVector::new(x)?;
        if !support.contains(&x) {
            support.push(x);
        }
    }

    let dist = match params.prior {
        PriorKind::Uniform => ValueDistribution::uniform(support)?,
        PriorKind::Random => {
            let w: Vec<usize> = (0..support_size).map(|_| rng.random_range(1..=100usize)).collect();
            let total = S::from_count(w.iter().sum());
            ValueDistribution::new(support, w.into_iter().map(|x| S::from_count(x) / total.clone()).collect())?
        }
    };

    let policy = match params.policy {
        PolicyKind::FullRevelation => SignalingPolicy::full_revelation(support_size),
        PolicyKind::NoInformation => SignalingPolicy::no_information(support_size),
        PolicyKind::RandomPartition => {
            let labels: Vec<usize> = (0..support_size).map(|_| rng.random_range(0..support_size)).collect();
            SignalingPolicy::from_labels(&labels)?
        }
    };

    let rule = match params.rule {
        RuleKind::Mc => UtilityRule::marginal_contribution(n_agents)?,
        RuleKind::G => UtilityRule::gairing(n_agents)?,
        RuleKind::Other => {
            return Err(CoverError::BadParams("random instances use the mc or g rule".into()));
        }
    };

    InstanceBundle::new(
        game,
        dist,
        policy,
        rule,
        format!(
            "random(seed={},n={},R={},support={})",
            params.seed, n_agents, n_resources, support_size
        ),
    )
}
