use std::fmt::Write as _;

use covergame::equilibrium::{enumerate_nash_with, NashOptions};
use covergame::instances::{
    gairing_tight_closed_form, gen_gairing_tight, gen_random, gen_voim_tight, gen_voip_tight, voim_tight_closed_form,
    PolicyKind, PriorKind, RandomParams,
};
use covergame::metrics::{
    at_least_one_minus_inv_e, check_theorem_bounds, AnalysisOptions, BoundCheck, MetricReport, Outcome,
};
use covergame::search::{rank_policies, Objective};
use covergame::{
    CoverError, ErrorKind, ExactBundle, ExactRule, Rational, RuleKind, Scalar, SignalingPolicy, UtilityRule,
};
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::args::{
    AnalyzeArgs, Family, GenerateArgs, GenerateKind, ObjectiveArg, PolicyArg, PriorArg, RandomArgs, RuleArg,
    SearchArgs, SweepArgs,
};
use crate::error::{CliError, CliResult};
use crate::gamefile::{format_rational, parse_rational, GameFile};
use crate::report::{outcome_str, pair, ReportRow};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Common {
    pub seed: u64,
    pub cap: u64,
}

impl Common {
    fn nash(&self) -> NashOptions {
        NashOptions::with_cap(self.cap)
    }

    fn analysis(&self, samples: Option<usize>) -> AnalysisOptions {
        AnalysisOptions { nash: self.nash(), hull_samples: samples, seed: self.seed }
    }
}

pub struct Output {
    pub rows: Vec<ReportRow>,
    /// Human-readable text for the error stream.
    pub summary: String,
}

fn status_of(e: &CoverError) -> &'static str {
    match e.kind() {
        ErrorKind::Cap => "cap-exceeded",
        ErrorKind::Invariant => "invariant",
        ErrorKind::BadParams => "bad-params",
    }
}

pub fn parse_policy_override(spec: &str, support_len: usize) -> CliResult<SignalingPolicy> {
    match spec {
        "full" => Ok(SignalingPolicy::full_revelation(support_len)),
        "none" => Ok(SignalingPolicy::no_information(support_len)),
        _ => {
            let labels = spec
                .strip_prefix("labels:")
                .ok_or_else(|| CliError::Parse(format!("unknown policy override {spec:?}")))?;
            let labels = labels
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|e| CliError::Parse(format!("bad label {t:?}: {e}"))))
                .collect::<CliResult<Vec<_>>>()?;
            if labels.len() != support_len {
                return Err(CoverError::DimensionMismatch { expected: support_len, got: labels.len() }.into());
            }
            Ok(SignalingPolicy::from_labels(&labels)?)
        }
    }
}

pub fn parse_rule_override(spec: &str, n_agents: usize) -> CliResult<ExactRule> {
    match spec {
        "mc" => Ok(UtilityRule::marginal_contribution(n_agents)?),
        "g" => Ok(UtilityRule::gairing(n_agents)?),
        _ => {
            if let Some(w) = spec.strip_prefix("interp:") {
                Ok(interpolated_rule(n_agents, &parse_rational(w)?)?)
            } else if let Some(t) = spec.strip_prefix("table:") {
                let table = t.split(',').map(parse_rational).collect::<CliResult<Vec<_>>>()?;
                Ok(UtilityRule::new(table)?)
            } else {
                Err(CliError::Parse(format!("unknown rule override {spec:?}")))
            }
        }
    }
}

/// `(1 - w) f^mc + w f^g` for `n_agents` agents.
pub fn interpolated_rule(n_agents: usize, w: &Rational) -> covergame::Result<ExactRule> {
    UtilityRule::interpolate(&UtilityRule::marginal_contribution(n_agents)?, &UtilityRule::gairing(n_agents)?, w)
}

fn describe(label: &str, r: &MetricReport<Rational>, checks: &[BoundCheck]) -> String {
    let opt = |x: &Option<Rational>| x.as_ref().map(format_rational).unwrap_or_else(|| "undefined".into());
    let mut s = String::new();
    let _ = writeln!(s, "{label}: {} cell(s), rule {}", r.n_cells, r.rule_kind);
    let _ = writeln!(
        s,
        "  uninformed Nash welfare   best {}  worst {}  ({} equilibria)",
        format_rational(&r.uninformed_best),
        format_rational(&r.uninformed_worst),
        r.uninformed_ne_count
    );
    let _ = writeln!(
        s,
        "  informed Bayes-Nash welfare  best {}  worst {}  ({} equilibria)",
        format_rational(&r.informed_best),
        format_rational(&r.informed_worst),
        r.bne_count
    );
    let _ = writeln!(s, "  VoI+ {}  VoI- {}  PoA {}  PoS {}", opt(&r.voi_plus), opt(&r.voi_minus), opt(&r.poa), opt(&r.pos));
    if let Some(h) = &r.hull {
        let _ = writeln!(
            s,
            "  hull estimates  psi {}  rho {}  ({} points, {} degenerate skipped)",
            format_rational(&h.psi),
            format_rational(&h.rho),
            h.evaluated,
            h.skipped_degenerate
        );
    }
    for c in checks {
        let note = if c.informational { " (informational)" } else { "" };
        let _ = writeln!(s, "  check {:<16} {}{note}", c.name, c.outcome.as_str());
    }
    s
}

fn analyze_bundle(b: &ExactBundle, opts: &AnalysisOptions) -> covergame::Result<(ReportRow, String)> {
    let report = b.analyze(opts)?;
    let checks = check_theorem_bounds(&report, report.n_cells, report.rule_kind);
    Ok((ReportRow::from_report(&b.label, &report, &checks), describe(&b.label, &report, &checks)))
}

pub fn analyze(args: &AnalyzeArgs, common: Common) -> CliResult<Output> {
    let mut bundle = GameFile::read(&args.input)?.to_bundle()?;
    if let Some(spec) = &args.policy_override {
        let policy = parse_policy_override(spec, bundle.dist.len())?;
        bundle = bundle.with_policy(policy)?;
    }
    if let Some(spec) = &args.rule_override {
        let rule = parse_rule_override(spec, bundle.game.n_agents())?;
        bundle = bundle.with_rule(rule)?;
    }
    let (row, summary) = analyze_bundle(&bundle, &common.analysis(args.samples))?;
    Ok(Output { rows: vec![row], summary })
}

pub fn random_params(r: &RandomArgs, seed: u64) -> RandomParams {
    RandomParams {
        n_agents: r.agents,
        n_resources: r.resources,
        max_actions: r.max_actions,
        max_action_size: r.max_action_size,
        support_size: r.support,
        max_value: r.max_value,
        max_denominator: r.max_denominator,
        prior: match r.prior {
            PriorArg::Uniform => PriorKind::Uniform,
            PriorArg::Random => PriorKind::Random,
        },
        policy: match r.policy {
            PolicyArg::Full => PolicyKind::FullRevelation,
            PolicyArg::None => PolicyKind::NoInformation,
            PolicyArg::Random => PolicyKind::RandomPartition,
        },
        rule: match r.rule {
            RuleArg::Mc => RuleKind::Mc,
            RuleArg::G => RuleKind::G,
        },
        seed,
    }
}

fn required<'a>(x: &'a Option<Rational>, name: &str) -> CliResult<&'a Rational> {
    x.as_ref().ok_or_else(|| CoverError::BadParams(format!("--{name} is required")).into())
}

pub fn generate(args: &GenerateArgs, common: Common) -> CliResult<GameFile> {
    let bundle: ExactBundle = match args.kind {
        GenerateKind::VoipTight => gen_voip_tight(args.r)?,
        GenerateKind::VoimTight => gen_voim_tight(required(&args.eps, "eps")?, required(&args.p, "p")?)?,
        GenerateKind::GairingTight => gen_gairing_tight(args.n, required(&args.eps, "eps")?)?,
        GenerateKind::Random => gen_random(&random_params(&args.random, common.seed))?,
    };
    Ok(GameFile::from_bundle(&bundle))
}

pub fn sweep(args: &SweepArgs, common: Common) -> CliResult<Output> {
    match args.family {
        Family::RuleInterpolation => sweep_rules(args, common),
        Family::VoimTightGrid => sweep_voim(args, common),
        Family::GairingGrid => sweep_gairing(args, common),
    }
}

fn nonempty<T>(xs: &[T], what: &str) -> CliResult<()> {
    if xs.is_empty() {
        return Err(CoverError::BadParams(format!("{what} grid is empty")).into());
    }
    Ok(())
}

fn run_or_flag(label: &str, job: impl FnOnce() -> covergame::Result<ReportRow>) -> ReportRow {
    job().unwrap_or_else(|e| ReportRow::failed(label, status_of(&e)))
}

fn sweep_rules(args: &SweepArgs, common: Common) -> CliResult<Output> {
    nonempty(&args.lambdas, "lambda")?;
    if args.battery == 0 {
        return Err(CoverError::BadParams("battery must contain at least one instance".into()).into());
    }
    let n = args.random.agents;
    let rules = args.lambdas.iter().map(|w| interpolated_rule(n, w)).collect::<covergame::Result<Vec<_>>>()?;
    let battery = (0..args.battery)
        .map(|i| gen_random::<Rational>(&random_params(&args.random, common.seed.wrapping_add(i as u64))))
        .collect::<covergame::Result<Vec<_>>>()?;

    let opts = common.analysis(None);
    let jobs: Vec<(usize, usize)> = (0..rules.len()).flat_map(|l| (0..battery.len()).map(move |b| (l, b))).collect();
    let rows: Vec<ReportRow> = jobs
        .par_iter()
        .map(|&(l, b)| {
            let label = format!("{}#{b}", battery[b].label);
            let mut row = run_or_flag(&label, || {
                let bundle = battery[b].clone().with_rule(rules[l].clone())?;
                Ok(analyze_bundle(&bundle, &opts)?.0)
            });
            row.label = label;
            row.param = format_rational(&args.lambdas[l]);
            row.rule_kind = rules[l].kind().to_string();
            row
        })
        .collect();

    let mut out = Vec::with_capacity(rows.len() + rules.len());
    let mut summary = String::new();
    for (l, chunk) in rows.chunks(battery.len()).enumerate() {
        out.extend_from_slice(chunk);
        let agg = aggregate_row(&args.lambdas[l], rules[l].kind(), chunk);
        let _ = writeln!(
            summary,
            "lambda {}: min VoI+ {}  min VoI- {}  ({} of {} analyzed)",
            agg.param,
            if agg.voi_plus.is_empty() { "undefined" } else { &agg.voi_plus },
            if agg.voi_minus.is_empty() { "undefined" } else { &agg.voi_minus },
            chunk.iter().filter(|r| r.status == "ok").count(),
            chunk.len()
        );
        out.push(agg);
    }
    Ok(Output { rows: out, summary })
}

/// Per-weight minimum of VoI+ and VoI- over the rows that were analyzed,
/// with the lower bounds that hold for every instance of the named rules.
fn aggregate_row(weight: &Rational, kind: RuleKind, rows: &[ReportRow]) -> ReportRow {
    let min_of = |col: fn(&ReportRow) -> &str| {
        rows.iter()
            .filter(|r| r.status == "ok" && !col(r).is_empty())
            .map(|r| parse_rational(col(r)).expect("rows carry exact rationals"))
            .min()
    };
    let voi_plus = min_of(|r| &r.voi_plus);
    let voi_minus = min_of(|r| &r.voi_minus);
    let analyzed = rows.iter().filter(|r| r.status == "ok").count();
    let mut row = ReportRow {
        row_kind: "aggregate".into(),
        label: format!("battery-min(analyzed={analyzed}/{})", rows.len()),
        param: format_rational(weight),
        rule_kind: kind.to_string(),
        status: if analyzed == rows.len() { "ok".into() } else { "partial".into() },
        ..Default::default()
    };
    (row.voi_plus, row.voi_plus_dec) = pair(voi_plus.as_ref());
    (row.voi_minus, row.voi_minus_dec) = pair(voi_minus.as_ref());

    let decide = |x: &Option<Rational>, f: &dyn Fn(&Rational) -> Outcome| match x {
        Some(x) => f(x),
        None => Outcome::Undefined,
    };
    let mut outcomes = Vec::new();
    match kind {
        RuleKind::Mc => {
            let plus = decide(&voi_plus, &|x| Outcome::from_bool(*x >= Rational::one()));
            let minus = decide(&voi_minus, &|x| Outcome::from_bool(*x >= Rational::from_fraction(1, 2)));
            row.chk_voi_plus_ge_1 = outcome_str(plus);
            row.chk_voi_minus_ge_half = outcome_str(minus);
            outcomes.extend([plus, minus]);
        }
        RuleKind::G => {
            let plus = decide(&voi_plus, &|x| at_least_one_minus_inv_e(x));
            let minus = decide(&voi_minus, &|x| at_least_one_minus_inv_e(x));
            row.chk_voi_plus_ge_1_minus_inv_e = outcome_str(plus);
            row.chk_voi_minus_ge_1_minus_inv_e = outcome_str(minus);
            outcomes.extend([plus, minus]);
        }
        RuleKind::Other => {}
    }
    row.bounds_ok = outcomes.iter().all(|o| matches!(o, Outcome::Pass | Outcome::Inconclusive)).to_string();
    row
}

fn closed_form_columns(row: &mut ReportRow, closed: &Rational, value: Option<&Rational>) {
    (row.closed_form, row.closed_form_dec) = pair(Some(closed));
    row.closed_form_match = (value == Some(closed)).to_string();
}

fn sweep_voim(args: &SweepArgs, common: Common) -> CliResult<Output> {
    nonempty(&args.eps, "eps")?;
    nonempty(&args.p, "p")?;
    let points: Vec<(&Rational, &Rational)> = args.eps.iter().flat_map(|e| args.p.iter().map(move |p| (e, p))).collect();
    let opts = common.analysis(None);
    let rows: Vec<ReportRow> = points
        .par_iter()
        .map(|&(eps, p)| {
            let label = format!("voim-tight(eps={eps},p={p})");
            let mut row = run_or_flag(&label, || {
                let (mut row, _) = analyze_bundle(&gen_voim_tight(eps, p)?, &opts)?;
                let closed = voim_tight_closed_form(eps, p);
                let value = row.voi_minus_exact();
                closed_form_columns(&mut row, &closed, value.as_ref());
                Ok(row)
            });
            row.param = format!("eps={},p={}", format_rational(eps), format_rational(p));
            row
        })
        .collect();
    let matched = rows.iter().filter(|r| r.closed_form_match == "true").count();
    let summary = format!("{matched} of {} grid points match the closed form\n", rows.len());
    Ok(Output { rows, summary })
}

fn sweep_gairing(args: &SweepArgs, common: Common) -> CliResult<Output> {
    nonempty(&args.eps_fractions, "eps-fractions")?;
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(CoverError::BadParams(format!(
            "need 2 <= n-min <= n-max, got {}..{}",
            args.n_min, args.n_max
        ))
        .into());
    }
    let points: Vec<(usize, &Rational)> =
        args.eps_fractions.iter().flat_map(|fr| (args.n_min..=args.n_max).map(move |n| (n, fr))).collect();
    let opts = common.analysis(None);
    let rows: Vec<ReportRow> = points
        .par_iter()
        .map(|&(n, fr)| {
            let label = format!("gairing-tight(n={n},fraction={fr})");
            let mut row = run_or_flag(&label, || {
                let eps = UtilityRule::<Rational>::gairing(n)?.share(n) * fr.clone();
                let (mut row, _) = analyze_bundle(&gen_gairing_tight(n, &eps)?, &opts)?;
                let closed = gairing_tight_closed_form(n, &eps)?;
                let value = row.voi_plus_exact();
                closed_form_columns(&mut row, &closed, value.as_ref());
                if row.voi_minus_exact().as_ref() != Some(&closed) {
                    row.closed_form_match = "false".into();
                }
                Ok(row)
            });
            row.param = format!("n={n},fraction={}", format_rational(fr));
            row
        })
        .collect();
    let matched = rows.iter().filter(|r| r.closed_form_match == "true").count();
    let summary = format!("{matched} of {} grid points match the closed form\n", rows.len());
    Ok(Output { rows, summary })
}

pub fn search_signaling(args: &SearchArgs, common: Common) -> CliResult<Output> {
    let bundle = GameFile::read(&args.input)?.to_bundle()?;
    let objective = match args.objective {
        ObjectiveArg::BestCase => Objective::BestCase,
        ObjectiveArg::WorstCase => Objective::WorstCase,
    };
    let nash = common.nash();
    let ranked = rank_policies(&bundle.game, &bundle.dist, &bundle.rule, objective, &nash)?;
    let uninformed = enumerate_nash_with(&bundle.game, &bundle.dist.prior_mean(), &bundle.rule, &nash)?;
    let u_best = uninformed.best().expect("nonempty Nash set").1.clone();
    let u_worst = uninformed.worst().expect("nonempty Nash set").1.clone();
    let ratio = |num: &Rational, den: &Rational| (!den.is_zero()).then(|| num / den);

    let rows: Vec<ReportRow> = ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = ReportRow {
                row_kind: "policy".into(),
                label: bundle.label.clone(),
                param: match objective {
                    Objective::BestCase => "best-case".into(),
                    Objective::WorstCase => "worst-case".into(),
                },
                rank: r.rank.to_string(),
                top: (i == 0).to_string(),
                policy: r.policy.to_string(),
                n_cells: r.policy.len().to_string(),
                rule_kind: bundle.rule.kind().to_string(),
                status: "ok".into(),
                ..Default::default()
            };
            (row.uninformed_best, row.uninformed_best_dec) = pair(Some(&u_best));
            (row.uninformed_worst, row.uninformed_worst_dec) = pair(Some(&u_worst));
            (row.informed_best, row.informed_best_dec) = pair(Some(&r.informed_best));
            (row.informed_worst, row.informed_worst_dec) = pair(Some(&r.informed_worst));
            (row.voi_plus, row.voi_plus_dec) = pair(ratio(&r.informed_best, &u_best).as_ref());
            (row.voi_minus, row.voi_minus_dec) = pair(ratio(&r.informed_worst, &u_worst).as_ref());
            row
        })
        .collect();
    let top = &ranked[0];
    let summary = format!(
        "{}: {} policies ranked; top {} with expected welfare {}\n",
        bundle.label,
        ranked.len(),
        top.policy,
        format_rational(&top.objective)
    );
    Ok(Output { rows, summary })
}

impl ReportRow {
    fn voi_plus_exact(&self) -> Option<Rational> {
        (!self.voi_plus.is_empty()).then(|| parse_rational(&self.voi_plus).expect("exact column"))
    }

    fn voi_minus_exact(&self) -> Option<Rational> {
        (!self.voi_minus.is_empty()).then(|| parse_rational(&self.voi_minus).expect("exact column"))
    }
}
