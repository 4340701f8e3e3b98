//! Experiment configuration: TOML parsing plus semantic validation.
//!
//! A config describes one market (explicit or randomly sampled), one
//! mechanism, a dynamics block and output options. Unknown keys are
//! rejected, all money fields are decimal strings that must land on the
//! declared grids, and parse → serialize → parse is the identity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use efmarket::market::Market;
use efmarket::mechanisms::MechanismId;
use efmarket::money::GridSpec;
use efmarket::sampling::{sample_market, test_rng, SamplerConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_market: Option<RandomMarketBlock>,
    pub mechanism: MechanismBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibria: Option<EquilibriaBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<PropertiesBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

/// An explicit market: all money values as decimal strings on the grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    pub supply: u64,
    pub budgets: Vec<String>,
    pub valuations: Vec<String>,
    pub base_unit: String,
    pub epsilon: String,
    pub delta: String,
}

/// A randomly sampled market; `markets` controls how many are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMarketBlock {
    pub buyers: usize,
    pub supply: u64,
    pub base_unit: String,
    pub epsilon: String,
    pub delta: String,
    pub budget_range: [String; 2],
    pub valuation_range: [String; 2],
    pub seed: u64,
    #[serde(default = "one")]
    pub markets: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismBlock {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_order: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSpec {
    /// "truth" or "random".
    Named(String),
    /// An explicit report vector.
    Profile(Vec<String>),
}

impl Default for StartSpec {
    fn default() -> Self {
        StartSpec::Named("truth".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsBlock {
    #[serde(default)]
    pub start: StartSpec,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_cap: Option<String>,
    /// Number of runs when the start is "random".
    #[serde(default = "one")]
    pub starts: usize,
}

fn default_policy() -> String {
    "round-robin".to_string()
}

fn default_max_steps() -> usize {
    10_000
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        DynamicsBlock {
            start: StartSpec::default(),
            policy: default_policy(),
            seed: 0,
            max_steps: default_max_steps(),
            report_cap: None,
            starts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaBlock {
    pub report_cap: String,
    #[serde(default)]
    pub only_non_overbidding: bool,
    #[serde(default = "default_enum_limit")]
    pub limit: u64,
}

fn default_enum_limit() -> u64 {
    efmarket::dynamics::DEFAULT_ENUM_LIMIT as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesBlock {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_name() -> String {
    "run".to_string()
}

fn default_format() -> String {
    "both".to_string()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { name: default_name(), format: default_format() }
    }
}

/// Parses and semantically validates a TOML experiment config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.market, &self.random_market) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "specify either [market] or [random_market], not both".into(),
                ))
            }
            (None, None) => {
                return Err(ConfigError::Invalid(
                    "a [market] or [random_market] block is required".into(),
                ))
            }
            _ => {}
        }
        // Building the markets exercises every grid/range check.
        self.build_markets(None)?;
        if let Some(d) = &self.dynamics {
            match &d.start {
                StartSpec::Named(s) if s == "truth" || s == "random" => {}
                StartSpec::Named(s) => {
                    return Err(ConfigError::Invalid(format!(
                        "dynamics.start must be \"truth\", \"random\" or a report vector, got {s:?}"
                    )))
                }
                StartSpec::Profile(_) => {}
            }
            if !matches!(d.policy.as_str(), "round-robin" | "lex-first" | "random") {
                return Err(ConfigError::Invalid(format!(
                    "dynamics.policy must be round-robin, lex-first or random, got {:?}",
                    d.policy
                )));
            }
            if d.starts == 0 {
                return Err(ConfigError::Invalid("dynamics.starts must be positive".into()));
            }
        }
        if let Some(o) = &self.output {
            if !matches!(o.format.as_str(), "csv" | "json" | "both") {
                return Err(ConfigError::Invalid(format!(
                    "output.format must be csv, json or both, got {:?}",
                    o.format
                )));
            }
        }
        let n_hint = self.market.as_ref().map(|m| m.valuations.len());
        self.build_mechanism(n_hint.unwrap_or(2))?;
        Ok(())
    }

    fn grid_of(base: &str, eps: &str, delta: &str) -> Result<GridSpec, ConfigError> {
        GridSpec::from_decimals(base, eps, delta)
            .map_err(|e| ConfigError::Invalid(format!("grid: {e}")))
    }

    /// Builds the configured market(s). `seed_override` replaces the random
    /// block's seed when given.
    pub fn build_markets(&self, seed_override: Option<u64>) -> Result<Vec<Market>, ConfigError> {
        if let Some(m) = &self.market {
            let grid = Self::grid_of(&m.base_unit, &m.epsilon, &m.delta)?;
            let budgets = m
                .budgets
                .iter()
                .map(|s| {
                    grid.parse_money(s)
                        .map_err(|e| ConfigError::Invalid(format!("market.budgets: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let valuations = m
                .valuations
                .iter()
                .map(|s| {
                    grid.parse_money(s)
                        .map_err(|e| ConfigError::Invalid(format!("market.valuations: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if valuations.iter().any(|&v| !grid.is_input_multiple(v)) {
                return Err(ConfigError::Invalid(
                    "market.valuations: value is off the input grid".into(),
                ));
            }
            let market = Market::new(m.supply, budgets, valuations, grid)
                .map_err(|e| ConfigError::Invalid(format!("market: {e}")))?;
            return Ok(vec![market]);
        }
        let r = self.random_market.as_ref().expect("validated");
        if r.buyers == 0 || r.markets == 0 {
            return Err(ConfigError::Invalid("random_market sizes must be positive".into()));
        }
        let grid = Self::grid_of(&r.base_unit, &r.epsilon, &r.delta)?;
        let money = |field: &str, s: &str| {
            grid.parse_money(s).map_err(|e| ConfigError::Invalid(format!("{field}: {e}")))
        };
        let b_lo = money("random_market.budget_range", &r.budget_range[0])?;
        let b_hi = money("random_market.budget_range", &r.budget_range[1])?;
        let v_lo = money("random_market.valuation_range", &r.valuation_range[0])?;
        let v_hi = money("random_market.valuation_range", &r.valuation_range[1])?;
        if b_lo <= 0 || b_hi < b_lo || v_lo <= 0 || v_hi < v_lo {
            return Err(ConfigError::Invalid("random_market ranges must be positive and ordered".into()));
        }
        let eps = grid.input_step();
        if v_lo % eps != 0 {
            return Err(ConfigError::Invalid(
                "random_market.valuation_range must start on the input grid".into(),
            ));
        }
        let seed = seed_override.unwrap_or(r.seed);
        let mut rng = test_rng(seed);
        // Sample via the shared sampler, shifting ranges to the configured
        // bounds: valuations from input-grid multiples in [v_lo, v_hi],
        // budgets from base-unit multiples in [b_lo, b_hi].
        let cfg = SamplerConfig {
            min_buyers: r.buyers,
            max_buyers: r.buyers,
            max_supply: r.supply,
            grid: grid.clone(),
            max_valuation: v_hi - v_lo + eps,
            max_budget: b_hi - b_lo + 1,
        };
        let markets = (0..r.markets)
            .map(|_| {
                let raw = sample_market(&cfg, &mut rng);
                let budgets = raw.budgets().iter().map(|b| b + b_lo - 1).collect();
                let valuations = raw.valuations().iter().map(|v| v + v_lo - eps).collect();
                Market::new(r.supply, budgets, valuations, grid.clone())
                    .map_err(|e| ConfigError::Invalid(format!("random market: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(markets)
    }

    pub fn build_mechanism(&self, buyers: usize) -> Result<MechanismId, ConfigError> {
        let tie_order = Some(
            self.mechanism.tie_order.clone().unwrap_or_else(|| (0..buyers).collect()),
        );
        MechanismId::by_name(&self.mechanism.id, tie_order)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown mechanism {:?}", self.mechanism.id)))
    }

    pub fn dynamics(&self) -> DynamicsBlock {
        self.dynamics.clone().unwrap_or_default()
    }

    pub fn output(&self) -> OutputBlock {
        self.output.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[market]
supply = 3
budgets = ["1", "1"]
valuations = ["1.1", "1.1"]
base_unit = "0.1"
epsilon = "0.1"
delta = "0.1"

[mechanism]
id = "AllOrNothing"

[dynamics]
start = "truth"
"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        let markets = cfg.build_markets(None).unwrap();
        assert_eq!(markets.len(), 1);
        assert_eq!(markets[0].buyer_count(), 2);
        assert_eq!(cfg.dynamics().policy, "round-robin");
    }

    #[test]
    fn off_grid_value_is_rejected_with_field_name() {
        let bad = MINIMAL.replace("\"1.1\", \"1.1\"", "\"1.05\", \"1.1\"");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("valuations"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\n[output]\nname = \"x\"\nbogus = 1\n");
        let err = parse_config(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)));
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn zero_buyers_rejected() {
        let bad = MINIMAL
            .replace("budgets = [\"1\", \"1\"]", "budgets = []")
            .replace("valuations = [\"1.1\", \"1.1\"]", "valuations = []");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn figure_style_random_market_parses() {
        let text = r#"
[random_market]
buyers = 25
supply = 20
base_unit = "0.5"
epsilon = "0.5"
delta = "0.5"
budget_range = ["1", "125"]
valuation_range = ["0.5", "10"]
seed = 7

[mechanism]
id = "AllOrNothing"

[dynamics]
start = "random"
starts = 100
report_cap = "10"
"#;
        let cfg = parse_config(text).unwrap();
        let markets = cfg.build_markets(None).unwrap();
        assert_eq!(markets.len(), 1);
        let m = &markets[0];
        assert_eq!(m.buyer_count(), 25);
        assert_eq!(m.supply(), 20);
        let (b_lo, b_hi) = (m.grid().parse_money("1").unwrap(), m.grid().parse_money("125").unwrap());
        assert!(m.budgets().iter().all(|&b| b >= b_lo && b <= b_hi));
        let v_hi = m.grid().parse_money("10").unwrap();
        assert!(m.valuations().iter().all(|&v| v >= 1 && v <= v_hi));
        // Seeded: rebuilding yields the identical market.
        assert_eq!(cfg.build_markets(None).unwrap(), markets);
        assert_ne!(cfg.build_markets(Some(8)).unwrap(), markets);
    }

    #[test]
    fn parse_serialize_roundtrip() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn explicit_profile_start_parses() {
        let text = format!(
            "{}\n",
            MINIMAL.replace("start = \"truth\"", "start = [\"0.1\", \"0.3\"]")
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(
            cfg.dynamics().start,
            StartSpec::Profile(vec!["0.1".into(), "0.3".into()])
        );
    }
}
