//! JSON game files. Every number that is not a count or an index is a
//! rational string such as `"3/4"` or `"2"`; float literals are rejected.

use std::str::FromStr;

use covergame::{
    CoverageGame, ExactBundle, ExactRule, Rational, RuleKind, SignalingPolicy, UtilityRule, ValueDistribution,
    ValueVector,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n_resources: usize,
    /// Per agent, the list of actions; an action is a list of resources.
    pub agents: Vec<Vec<Vec<usize>>>,
    pub support: Vec<SupportPoint>,
    /// Cells of the signaling partition, as support indices.
    pub policy: Vec<Vec<usize>>,
    pub rule: RuleSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportPoint {
    pub values: Vec<String>,
    pub prob: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Mc,
    G,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub kind: RuleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<String>>,
}

/// Parses `"p/q"` or `"p"` exactly.
pub fn parse_rational(s: &str) -> CliResult<Rational> {
    let t = s.trim();
    if t.is_empty() || t.contains(['.', 'e', 'E']) {
        return Err(CliError::Parse(format!("not an exact rational: {s:?}")));
    }
    Rational::from_str(t).map_err(|e| CliError::Parse(format!("bad rational {s:?}: {e}")))
}

/// Always `"p/q"`, integers included (`"1/1"`).
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn parse_all(xs: &[String]) -> CliResult<Vec<Rational>> {
    xs.iter().map(|s| parse_rational(s)).collect()
}

impl GameFile {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("game files always serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &std::path::Path) -> CliResult<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Validates the file into an analyzable bundle. Syntax problems are
    /// parse errors; everything the model rejects keeps its own kind.
    pub fn to_bundle(&self) -> CliResult<ExactBundle> {
        let game = CoverageGame::new(self.n_resources, self.agents.clone())?;
        let mut support = Vec::with_capacity(self.support.len());
        let mut probs = Vec::with_capacity(self.support.len());
        for point in &self.support {
            support.push(ValueVector::new(parse_all(&point.values)?)?);
            probs.push(parse_rational(&point.prob)?);
        }
        let dist = ValueDistribution::new(support, probs)?;
        let policy = SignalingPolicy::new(self.policy.clone(), dist.len())?;
        let n = game.n_agents();
        let rule: ExactRule = match (self.rule.kind, &self.rule.table) {
            (RuleName::Mc, None) => UtilityRule::marginal_contribution(n)?,
            (RuleName::G, None) => UtilityRule::gairing(n)?,
            (RuleName::Custom, Some(t)) => UtilityRule::new(parse_all(t)?)?,
            (RuleName::Custom, None) => return Err(CliError::Parse("custom rule needs a \"table\"".into())),
            (_, Some(_)) => return Err(CliError::Parse("only custom rules take a \"table\"".into())),
        };
        let label = self.label.clone().unwrap_or_else(|| "unnamed".to_string());
        Ok(ExactBundle::new(game, dist, policy, rule, label)?)
    }

    pub fn from_bundle(b: &ExactBundle) -> Self {
        let rule = match b.rule.kind() {
            RuleKind::Mc => RuleSpec { kind: RuleName::Mc, table: None },
            RuleKind::G => RuleSpec { kind: RuleName::G, table: None },
            RuleKind::Other => RuleSpec {
                kind: RuleName::Custom,
                table: Some(b.rule.table().iter().map(format_rational).collect()),
            },
        };
        GameFile {
            label: Some(b.label.clone()),
            n_resources: b.game.n_resources(),
            agents: b.game.action_sets().to_vec(),
            support: b
                .dist
                .support()
                .iter()
                .zip(b.dist.probs())
                .map(|(x, p)| SupportPoint {
                    values: x.as_slice().iter().map(format_rational).collect(),
                    prob: format_rational(p),
                })
                .collect(),
            policy: b.policy.cells().to_vec(),
            rule,
        }
    }
}
