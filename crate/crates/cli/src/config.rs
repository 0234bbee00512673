//! TOML run configuration. One optional table per subcommand plus a few
//! global keys; unknown keys are rejected with the line they appear on.

use std::path::{Path, PathBuf};

use aniso_core::activation::Activation;
use aniso_core::constants::LedgerInputs;
use aniso_core::shallownet::{ModelKind, TrainProtocol};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    pub norms: Option<NormsConfig>,
    pub verify: Option<VerifyConfig>,
    pub domains: Option<DomainsConfig>,
    pub constants: Option<ConstantsConfig>,
    pub train: Option<TrainConfig>,
    pub reproduce: Option<ReproduceConfig>,
    pub rate: Option<RateConfig>,
}

/// Window `[lower, upper)` on every axis and the resolution ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub window: (f64, f64),
    pub ladder: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { window: (-8.0, 8.0), ladder: vec![256, 512] }
    }
}

fn default_split() -> (usize, usize) {
    (1, 1)
}

fn default_order() -> (usize, usize) {
    (1, 1)
}

fn default_draws() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub weight: String,
    /// Any of `gaussian`, `mixture`, `trig`.
    pub family: Vec<String>,
    #[serde(default = "default_split")]
    pub split: (usize, usize),
    #[serde(default = "default_norm_exponents")]
    pub exponents: Vec<(f64, f64)>,
    #[serde(default = "default_order")]
    pub sobolev_order: (usize, usize),
    pub u: Option<String>,
    pub v: Option<String>,
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_norm_exponents() -> Vec<(f64, f64)> {
    vec![(1.0, 1.0), (2.0, 2.0)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub u: String,
    pub v: String,
    pub weight: String,
    pub family: Vec<String>,
    #[serde(default = "default_order")]
    pub sobolev_order: (usize, usize),
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    /// `(p1, p2)` pairs for the high-degree inclusion.
    #[serde(default = "default_high_p")]
    pub high_p: Vec<(f64, f64)>,
    #[serde(default = "default_high_t")]
    pub high_t: Vec<f64>,
    #[serde(default = "default_low_p")]
    pub low_p: Vec<f64>,
    #[serde(default = "default_low_t")]
    pub low_t: Vec<(f64, f64)>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_random_draws")]
    pub random_draws: usize,
}

fn default_checks() -> Vec<String> {
    ["high_degree", "low_degree", "holder", "embedding"].map(String::from).to_vec()
}

fn default_high_p() -> Vec<(f64, f64)> {
    vec![(2.0, 2.0), (2.0, 4.0), (4.0, 4.0)]
}

fn default_high_t() -> Vec<f64> {
    vec![1.0, 1.2, 1.5, 1.8]
}

fn default_low_p() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}

fn default_low_t() -> Vec<(f64, f64)> {
    vec![(1.0, 1.0), (1.5, 1.0), (2.0, 1.5), (2.0, 2.0)]
}

fn default_random_draws() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainsConfig {
    pub shapes: Vec<String>,
    pub s: Vec<f64>,
    /// Points per axis for 1-, 2- and 3-dimensional domains.
    #[serde(default = "default_domain_points")]
    pub points: (usize, usize, usize),
    /// Symmetric window half-width; domains must fit inside.
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_domain_points() -> (usize, usize, usize) {
    (1024, 256, 32)
}

fn default_half_width() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    pub activation: Activation,
    pub theta: String,
    pub inputs: LedgerInputs,
    pub d_max: usize,
    pub delta: f64,
    pub p: f64,
    pub q: f64,
    pub tau: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            activation: Activation::Gaussian,
            theta: "product_bessel(2,2)".into(),
            inputs: LedgerInputs::two_block_experiment(),
            d_max: 12,
            delta: 1.0,
            p: 2.0,
            q: 2.0,
            tau: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Heat,
    Gaussian,
}

fn heat() -> TargetKind {
    TargetKind::Heat
}

fn gaussian() -> TargetKind {
    TargetKind::Gaussian
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub width: Option<usize>,
    pub budget: Option<usize>,
    #[serde(default = "heat")]
    pub target: TargetKind,
    #[serde(default)]
    pub protocol: TrainProtocol,
    #[serde(default = "one")]
    pub trace_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproduceConfig {
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub protocol: TrainProtocol,
    pub trace_every: usize,
    pub contour_points: usize,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig { budgets: vec![201, 401], seeds: 10, protocol: TrainProtocol::default(), trace_every: 10, contour_points: 65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub model: ModelKind,
    pub widths: Vec<usize>,
    pub restarts: usize,
    #[serde(default = "gaussian")]
    pub target: TargetKind,
    pub protocol: TrainProtocol,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            model: ModelKind::TwoBlock,
            widths: vec![4, 8, 16, 32, 64, 128],
            restarts: 3,
            target: TargetKind::Gaussian,
            protocol: TrainProtocol::default(),
        }
    }
}

/// Parsed configuration with the original text, which is copied verbatim into the output.
pub struct Loaded {
    pub config: Config,
    pub text: String,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<Loaded> {
    let Some(path) = path else {
        let config = Config::default();
        let text = toml::to_string(&config)?;
        return Ok(Loaded { config, text });
    };
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    Ok(Loaded { config, text })
}

pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
    toml::from_str(text)
}

/// Required keys per subcommand table, for the error raised when the table is missing.
pub fn required_fields(table: &str) -> &'static [&'static str] {
    match table {
        "norms" => &["weight", "family"],
        "verify" => &["u", "v", "weight", "family"],
        "domains" => &["shapes", "s"],
        "train" => &["model", "width or budget"],
        _ => &[],
    }
}

/// The subcommand's table, or a usage error naming the keys it needs.
pub fn require<T: Clone>(section: &Option<T>, table: &str) -> anyhow::Result<T> {
    section.clone().ok_or_else(|| {
        UsageError(format!("config has no [{table}] table; required fields: {}", required_fields(table).join(", "))).into()
    })
}
