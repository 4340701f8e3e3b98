//! Named experiment presets with documented default configurations.

use crate::config::{
    DynamicsBlock, ExperimentConfig, MarketBlock, MechanismBlock, OutputBlock, RandomMarketBlock,
    StartSpec,
};

/// One preset: a name, a human description and the configs it expands to.
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<(String, ExperimentConfig)>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn base_config(mechanism: &str) -> ExperimentConfig {
    ExperimentConfig {
        market: None,
        random_market: None,
        mechanism: MechanismBlock { id: mechanism.to_string(), tie_order: None },
        dynamics: Some(DynamicsBlock::default()),
        equilibria: None,
        properties: None,
        output: Some(OutputBlock::default()),
    }
}

/// Convergence of the all-or-nothing mechanism on one random 25-buyer,
/// 20-unit market with budgets uniform on [1, 125], from 100 random starting
/// profiles. Valuations are drawn uniformly from the grid in [0.5, 10]
/// (the valuation distribution is configurable; only n, m and the budget
/// range are pinned).
fn figure_convergence(seed: u64) -> Preset {
    let mut cfg = base_config("AllOrNothing");
    cfg.random_market = Some(RandomMarketBlock {
        buyers: 25,
        supply: 20,
        base_unit: "0.5".into(),
        epsilon: "0.5".into(),
        delta: "0.5".into(),
        budget_range: ["1".into(), "125".into()],
        valuation_range: ["0.5".into(), "10".into()],
        seed,
        markets: 1,
    });
    cfg.dynamics = Some(DynamicsBlock {
        start: StartSpec::Named("random".into()),
        policy: "round-robin".into(),
        seed,
        max_steps: 5000,
        report_cap: Some("10".into()),
        starts: 100,
    });
    cfg.output = Some(OutputBlock { name: "figure-convergence".into(), format: "both".into() });
    Preset {
        name: "figure-convergence",
        description: "all-or-nothing dynamics from 100 random starts on a 25-buyer, 20-unit market with budgets uniform on [1,125]",
        configs: vec![("figure-convergence".into(), cfg)],
    }
}

/// The two-buyer price-table mechanism cycling through four profiles when
/// started from (0.1, 0.3) with alternating deviators.
fn cycle_demo() -> Preset {
    let mut cfg = base_config("CycleAdversarial");
    cfg.market = Some(MarketBlock {
        supply: 2,
        budgets: strings(&["1.5", "1.5"]),
        valuations: strings(&["1", "2"]),
        base_unit: "0.1".into(),
        epsilon: "0.1".into(),
        delta: "0.1".into(),
    });
    cfg.dynamics = Some(DynamicsBlock {
        start: StartSpec::Profile(strings(&["0.1", "0.3"])),
        policy: "lex-first".into(),
        seed: 0,
        max_steps: 100,
        report_cap: Some("3".into()),
        starts: 1,
    });
    cfg.output = Some(OutputBlock { name: "cycle-demo".into(), format: "both".into() });
    Preset {
        name: "cycle-demo",
        description: "best-response cycle of the adversarial two-buyer price table from (0.1, 0.3)",
        configs: vec![("cycle-demo".into(), cfg)],
    }
}

/// Truth-started almost-top dynamics on the two-buyer chain family
/// (valuations (1+ε, 1), unit budgets, four units) for ε in
/// {0.1, 0.05, 0.02, 0.01}: the chain length grows linearly in 1/ε.
fn lower_bound_chain() -> Preset {
    let mut configs = Vec::new();
    for eps in ["0.1", "0.05", "0.02", "0.01"] {
        let mut cfg = base_config("AlmostTop");
        let grid = efmarket::money::GridSpec::uniform(eps).expect("valid grid");
        let one_plus = grid.render_money(grid.parse_money("1").unwrap() + grid.input_step());
        cfg.market = Some(MarketBlock {
            supply: 4,
            budgets: strings(&["1", "1"]),
            valuations: vec![one_plus, "1".into()],
            base_unit: eps.into(),
            epsilon: eps.into(),
            delta: eps.into(),
        });
        cfg.dynamics = Some(DynamicsBlock {
            start: StartSpec::Named("truth".into()),
            policy: "round-robin".into(),
            seed: 0,
            max_steps: 100_000,
            report_cap: None,
            starts: 1,
        });
        let name = format!("lower-bound-chain.eps{eps}");
        cfg.output = Some(OutputBlock { name: name.clone(), format: "both".into() });
        configs.push((name, cfg));
    }
    Preset {
        name: "lower-bound-chain",
        description: "almost-top convergence chains whose length grows linearly in the inverse grid step",
        configs,
    }
}

/// The revenue-maximizing mechanism on the one-unit market with valuations
/// (4, 1) and budgets (4, 4) on integer grids: truth revenue 4, equilibrium
/// revenue 1.
fn bad_revenue() -> Preset {
    let mut cfg = base_config("MaxRevenue");
    cfg.market = Some(MarketBlock {
        supply: 1,
        budgets: strings(&["4", "4"]),
        valuations: strings(&["4", "1"]),
        base_unit: "1".into(),
        epsilon: "1".into(),
        delta: "1".into(),
    });
    cfg.dynamics = Some(DynamicsBlock {
        start: StartSpec::Named("truth".into()),
        policy: "round-robin".into(),
        seed: 0,
        max_steps: 100,
        report_cap: Some("5".into()),
        starts: 1,
    });
    cfg.output = Some(OutputBlock { name: "bad-revenue".into(), format: "both".into() });
    Preset {
        name: "bad-revenue",
        description: "revenue collapse of a revenue-maximizing mechanism under one dominant budget",
        configs: vec![("bad-revenue".into(), cfg)],
    }
}

/// 1000 random two-buyer markets, each run once from a random profile under
/// the all-or-nothing mechanism; every run converges.
fn aon_two_buyer(seed: u64) -> Preset {
    let mut cfg = base_config("AllOrNothing");
    cfg.random_market = Some(RandomMarketBlock {
        buyers: 2,
        supply: 6,
        base_unit: "0.25".into(),
        epsilon: "0.25".into(),
        delta: "0.25".into(),
        budget_range: ["0.25".into(), "4".into()],
        valuation_range: ["0.25".into(), "3".into()],
        seed,
        markets: 1000,
    });
    cfg.dynamics = Some(DynamicsBlock {
        start: StartSpec::Named("random".into()),
        policy: "round-robin".into(),
        seed,
        max_steps: 10_000,
        report_cap: Some("3".into()),
        starts: 1,
    });
    cfg.output = Some(OutputBlock { name: "aon-two-buyer-convergence".into(), format: "json".into() });
    Preset {
        name: "aon-two-buyer-convergence",
        description: "all-or-nothing dynamics from random two-buyer starts: convergence census over 1000 markets",
        configs: vec![("aon-two-buyer-convergence".into(), cfg)],
    }
}

/// Truth-started dynamics for each general mechanism over random markets,
/// with welfare/revenue bound verdicts in every run summary.
fn theorem_validation(seed: u64) -> Preset {
    let mut configs = Vec::new();
    for mech in [
        "AllOrNothing",
        "AlmostTop",
        "MaxRevenue",
        "MaxWelfareGreedy",
        "SecondHighestGreedy",
        "LowestEFValuation",
    ] {
        let mut cfg = base_config(mech);
        cfg.random_market = Some(RandomMarketBlock {
            buyers: 3,
            supply: 6,
            base_unit: "0.25".into(),
            epsilon: "0.25".into(),
            delta: "0.25".into(),
            budget_range: ["0.25".into(), "4".into()],
            valuation_range: ["0.25".into(), "3".into()],
            seed,
            markets: 80,
        });
        cfg.dynamics = Some(DynamicsBlock {
            start: StartSpec::Named("truth".into()),
            policy: "round-robin".into(),
            seed,
            max_steps: 10_000,
            report_cap: None,
            starts: 1,
        });
        let name = format!("theorem-validation.{}", mech.to_lowercase());
        cfg.output = Some(OutputBlock { name: name.clone(), format: "json".into() });
        configs.push((name, cfg));
    }
    Preset {
        name: "theorem-validation",
        description: "truth-started runs of every general mechanism with welfare and revenue bound verdicts",
        configs,
    }
}

/// All presets in a fixed order. `seed` feeds the randomized ones.
pub fn presets(seed: u64) -> Vec<Preset> {
    vec![
        figure_convergence(seed),
        cycle_demo(),
        lower_bound_chain(),
        bad_revenue(),
        aon_two_buyer(seed),
        theorem_validation(seed),
    ]
}

pub fn preset_by_name(name: &str, seed: u64) -> Option<Preset> {
    presets(seed).into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn exactly_six_presets() {
        let all = presets(7);
        assert_eq!(all.len(), 6);
        let names: Vec<&str> = all.iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            vec![
                "figure-convergence",
                "cycle-demo",
                "lower-bound-chain",
                "bad-revenue",
                "aon-two-buyer-convergence",
                "theorem-validation",
            ]
        );
    }

    #[test]
    fn preset_configs_validate_and_roundtrip() {
        for preset in presets(7) {
            for (name, cfg) in &preset.configs {
                cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
                let text = toml::to_string(cfg).unwrap();
                let again = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(cfg, &again, "{name} does not round-trip");
            }
        }
    }

    #[test]
    fn figure_defaults_match_contract() {
        let p = figure_convergence(7);
        let cfg = &p.configs[0].1;
        let r = cfg.random_market.as_ref().unwrap();
        assert_eq!((r.buyers, r.supply), (25, 20));
        assert_eq!(r.budget_range, ["1".to_string(), "125".to_string()]);
        assert_eq!(cfg.dynamics.as_ref().unwrap().starts, 100);
    }

    #[test]
    fn chain_preset_sweeps_four_grids() {
        let p = lower_bound_chain();
        assert_eq!(p.configs.len(), 4);
        let eps: Vec<String> =
            p.configs.iter().map(|(_, c)| c.market.as_ref().unwrap().epsilon.clone()).collect();
        assert_eq!(eps, vec!["0.1", "0.05", "0.02", "0.01"]);
    }
}
