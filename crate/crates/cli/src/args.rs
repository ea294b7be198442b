use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covergame::Rational;

use crate::gamefile::parse_rational;

#[derive(Debug, Parser)]
#[command(name = "covergame", version, about = "Value of informing in multi-agent coverage games")]
pub struct Cli {
    /// Seed for every random choice (battery members, hull samples).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Limit on the joint action space enumerated per game.
    #[arg(long, global = true, env = "COVERGAME_CAP")]
    pub cap: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze one game file and emit a report row.
    Analyze(AnalyzeArgs),
    /// Write a generated game file.
    Generate(GenerateArgs),
    /// Analyze a grid of configurations.
    Sweep(SweepArgs),
    /// Rank every deterministic signaling policy of a game file.
    SearchSignaling(SearchArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// `full`, `none` or `labels:L0,L1,...` (one cell label per support point).
    #[arg(long)]
    pub policy_override: Option<String>,
    /// `mc`, `g`, `interp:W` (mc toward g by weight W) or `table:F1,F2,...`.
    #[arg(long)]
    pub rule_override: Option<String>,
    /// Sample budget for the hull infimum estimates; skipped when absent.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    VoipTight,
    VoimTight,
    GairingTight,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Uniform,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Full,
    None,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Mc,
    G,
}

#[derive(Debug, Clone, Args)]
pub struct RandomArgs {
    #[arg(long, default_value_t = 2)]
    pub agents: usize,
    #[arg(long, default_value_t = 3)]
    pub resources: usize,
    #[arg(long, default_value_t = 3)]
    pub max_actions: usize,
    /// Largest number of resources in one action (no limit when absent).
    #[arg(long)]
    pub max_action_size: Option<usize>,
    /// Number of support points.
    #[arg(long, default_value_t = 2)]
    pub support: usize,
    #[arg(long, default_value_t = 1)]
    pub max_value: u32,
    #[arg(long, default_value_t = 1000)]
    pub max_denominator: u32,
    #[arg(long, value_enum, default_value_t = PriorArg::Uniform)]
    pub prior: PriorArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Random)]
    pub policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = RuleArg::Mc)]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GenerateKind,
    /// Resource count for voip-tight.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    /// Perturbation for voim-tight and gairing-tight.
    #[arg(long, value_parser = rational_arg)]
    pub eps: Option<Rational>,
    /// High-state probability for voim-tight.
    #[arg(long, value_parser = rational_arg)]
    pub p: Option<Rational>,
    /// Agent count for gairing-tight.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[command(flatten)]
    pub random: RandomArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    RuleInterpolation,
    VoimTightGrid,
    GairingGrid,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Interpolation weights for rule-interpolation.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg, default_value = "0,1/4,1/2,3/4,1")]
    pub lambdas: Vec<Rational>,
    /// Battery size for rule-interpolation.
    #[arg(long, default_value_t = 20)]
    pub battery: usize,
    #[command(flatten)]
    pub random: RandomArgs,
    /// Perturbations for voim-tight-grid.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg, default_value = "1/10,1/4,1/2,3/4,9/10")]
    pub eps: Vec<Rational>,
    /// High-state probabilities for voim-tight-grid.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg, default_value = "1/10,1/4,1/2,3/4,9/10")]
    pub p: Vec<Rational>,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    /// For gairing-grid, eps as fractions of the last agent's share.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg, default_value = "1/10,1/10000")]
    pub eps_fractions: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    BestCase,
    WorstCase,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::BestCase)]
    pub objective: ObjectiveArg,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}
