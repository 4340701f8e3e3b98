//! Experiment execution and deterministic artifact emission.
//!
//! Every run writes a trace CSV (columns: step, deviator_index, new_report,
//! price, revenue, welfare, profile) and a summary JSON. Money is emitted as
//! exact decimal strings of grid multiples and ratios as exact decimals or
//! `p/q`, so identical (config, seed) pairs produce byte-identical files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use efmarket::analysis::{check_revenue_bound, check_welfare_bound, BoundCheck};
use efmarket::dynamics::{
    default_report_cap, enumerate_equilibria, run_dynamics, validate_aon_two_buyer, validate_trace,
    OrderPolicy, Trace, TraceStatus,
};
use efmarket::market::{Market, Profile};
use efmarket::mechanisms::{MechanismId, PricingMechanism};
use efmarket::money::render_ratio;
use efmarket::pricing::{max_envy_free_revenue, optimal_ef_welfare, revenue, social_welfare};
use efmarket::sampling::{sample_profile, test_rng};

use crate::config::{ConfigError, ExperimentConfig, StartSpec};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dynamics error: {0}")]
    Dynamics(#[from] efmarket::dynamics::DynamicsError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), RunError> {
    let io_err = |source| RunError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|source| RunError::Io { path: tmp.clone(), source })?;
    fs::rename(&tmp, path).map_err(io_err)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BoundJson {
    pub bound: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
    pub vacuous: bool,
}

fn bound_json(market: &Market, check: &BoundCheck) -> BoundJson {
    BoundJson {
        bound: check.bound.clone(),
        lhs: render_money_ratio(market, check.lhs),
        rhs: render_money_ratio(market, check.rhs),
        holds: check.holds,
        vacuous: check.vacuous,
    }
}

/// Renders an atom-denominated rational as an exact money string.
fn render_money_ratio(market: &Market, value: Ratio<i64>) -> String {
    let base = market.grid().base_unit();
    let v = Ratio::new(*value.numer() as i128, *value.denom() as i128)
        * Ratio::new(*base.numer() as i128, *base.denom() as i128);
    render_ratio(v)
}

fn render_plain_ratio(value: Ratio<i64>) -> String {
    render_ratio(Ratio::new(*value.numer() as i128, *value.denom() as i128))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SummaryMetrics {
    pub sw_truth: String,
    pub sw_final: String,
    pub rev_truth: String,
    pub rev_final: String,
    /// Budget share α = B*/REV(M); absent when REV(M) = 0.
    pub alpha: Option<String>,
    /// β = REV_mech(truth)/REV(M); absent when REV(M) = 0.
    pub beta_instance: Option<String>,
    pub max_budget: String,
    pub max_ef_revenue: String,
    pub optimal_welfare: String,
    pub welfare_bound: BoundJson,
    pub revenue_bound: BoundJson,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub run: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleJson>,
    pub steps: usize,
    pub final_profile: Vec<String>,
    pub final_price: String,
    pub metrics: SummaryMetrics,
    pub trace_valid: Option<bool>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CycleJson {
    pub entry: usize,
    pub length: usize,
}

/// One executed run plus its rendered artifacts.
#[derive(Debug)]
pub struct RunResult {
    pub name: String,
    pub market: Market,
    pub trace: Trace,
    pub summary: RunSummary,
    pub csv: String,
}

pub fn trace_to_csv(trace: &Trace, market: &Market) -> String {
    let grid = market.grid();
    let mut out = String::from("step,deviator_index,new_report,price,revenue,welfare,profile\n");
    let metrics = trace.step_metrics(market);
    let profiles = trace.profiles();
    for (i, m) in metrics.iter().enumerate() {
        let (deviator, new_report) = if i == 0 {
            (String::new(), String::new())
        } else {
            let s = &trace.steps[i - 1];
            (s.deviator.to_string(), grid.render_money(s.new_report))
        };
        let profile = profiles[i]
            .reports()
            .iter()
            .map(|&r| grid.render_money(r))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            i,
            deviator,
            new_report,
            grid.render_money(m.price),
            grid.render_money(m.revenue),
            grid.render_money(m.welfare),
            profile,
        ));
    }
    out
}

fn status_string(status: &TraceStatus) -> (String, Option<CycleJson>) {
    match status {
        TraceStatus::Converged => ("converged".into(), None),
        TraceStatus::CycleDetected { entry, length } => {
            ("cycle".into(), Some(CycleJson { entry: *entry, length: *length }))
        }
        TraceStatus::StepLimit => ("step_limit".into(), None),
    }
}

/// Summarizes one trace: final state, metrics against the mechanism's
/// truth-telling outcome, and the γ=1 welfare/revenue bound verdicts.
pub fn summarize_run(
    name: &str,
    market: &Market,
    mech: &MechanismId,
    trace: &Trace,
    validate: bool,
) -> Result<RunSummary, RunError> {
    let grid = market.grid();
    let truth = market.truth_profile();
    let truth_outcome = mech
        .run(&truth, &market.params())
        .map_err(efmarket::dynamics::DynamicsError::Mechanism)?;
    let final_outcome = trace.final_outcome();
    let (_, rev_m) = max_envy_free_revenue(&truth, &market.params());
    let (alpha, beta) = if rev_m > 0 {
        (
            Some(render_plain_ratio(Ratio::new(market.max_budget(), rev_m))),
            Some(render_plain_ratio(Ratio::new(revenue(&truth_outcome), rev_m))),
        )
    } else {
        (None, None)
    };
    let metrics = SummaryMetrics {
        sw_truth: grid.render_money(social_welfare(market.valuations(), &truth_outcome)),
        sw_final: grid.render_money(social_welfare(market.valuations(), final_outcome)),
        rev_truth: grid.render_money(revenue(&truth_outcome)),
        rev_final: grid.render_money(revenue(final_outcome)),
        alpha,
        beta_instance: beta,
        max_budget: grid.render_money(market.max_budget()),
        max_ef_revenue: grid.render_money(rev_m),
        optimal_welfare: grid.render_money(optimal_ef_welfare(market)),
        welfare_bound: bound_json(market, &check_welfare_bound(market, &truth_outcome, final_outcome, 1)),
        revenue_bound: bound_json(market, &check_revenue_bound(market, &truth_outcome, final_outcome, 1)),
    };
    let trace_valid = if validate {
        let mut ok = validate_trace(trace, market).is_ok();
        if *mech == MechanismId::AllOrNothing && market.buyer_count() == 2 {
            ok = ok && validate_aon_two_buyer(trace, market).is_ok();
        }
        Some(ok)
    } else {
        None
    };
    let (status, cycle) = status_string(&trace.status);
    Ok(RunSummary {
        run: name.to_string(),
        status,
        cycle,
        steps: trace.steps.len(),
        final_profile: trace
            .final_profile()
            .reports()
            .iter()
            .map(|&r| grid.render_money(r))
            .collect(),
        final_price: grid.render_money(final_outcome.price()),
        metrics,
        trace_valid,
    })
}

struct RunSpec {
    name: String,
    market: Market,
    start: Profile,
    policy: OrderPolicy,
}

fn policy_of(name: &str, seed: u64) -> OrderPolicy {
    match name {
        "lex-first" => OrderPolicy::LexFirstImproving,
        "random" => OrderPolicy::RandomSeeded(seed),
        _ => OrderPolicy::RoundRobin,
    }
}

/// Executes a dynamics experiment: every configured (market, start) pair is
/// run independently (in parallel, results ordered by run index) and the
/// artifacts are written under `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Vec<RunResult>, RunError> {
    let results = execute_dynamics(config, seed_override)?;
    write_artifacts(config, out_dir, &results)?;
    Ok(results)
}

/// Runs the configured dynamics without touching the filesystem.
pub fn execute_dynamics(
    config: &ExperimentConfig,
    seed_override: Option<u64>,
) -> Result<Vec<RunResult>, RunError> {
    let markets = config.build_markets(seed_override)?;
    let dyn_block = config.dynamics();
    let seed = seed_override.unwrap_or(dyn_block.seed);
    let multi = markets.len() * dyn_block.starts > 1;

    let mut specs = Vec::new();
    let mut rng = test_rng(seed);
    for (mi, market) in markets.iter().enumerate() {
        let cap = report_cap_for(config, market)?;
        for si in 0..dyn_block.starts {
            let start = match &dyn_block.start {
                StartSpec::Named(s) if s == "truth" => market.truth_profile(),
                StartSpec::Named(_) => sample_profile(market, cap, &mut rng),
                StartSpec::Profile(reports) => {
                    let strs: Vec<&str> = reports.iter().map(|s| s.as_str()).collect();
                    market
                        .profile_from_decimals(&strs)
                        .map_err(|e| ConfigError::Invalid(format!("dynamics.start: {e}")))?
                }
            };
            let name = if multi {
                format!("{}.run{:04}", config.output().name, mi * dyn_block.starts + si)
            } else {
                config.output().name.clone()
            };
            let policy_seed = seed.wrapping_add((mi * dyn_block.starts + si) as u64);
            specs.push(RunSpec {
                name,
                market: market.clone(),
                start,
                policy: policy_of(&dyn_block.policy, policy_seed),
            });
        }
    }

    let truth_start = matches!(&dyn_block.start, StartSpec::Named(s) if s == "truth");
    let results: Result<Vec<RunResult>, RunError> = specs
        .par_iter()
        .map(|spec| {
            let cap = report_cap_for(config, &spec.market)?;
            let mech = config.build_mechanism(spec.market.buyer_count())?;
            let trace = run_dynamics(
                &mech,
                &spec.market,
                &spec.start,
                spec.policy,
                dyn_block.max_steps,
                cap,
            )?;
            let summary = summarize_run(&spec.name, &spec.market, &mech, &trace, truth_start)?;
            let csv = trace_to_csv(&trace, &spec.market);
            Ok(RunResult { name: spec.name.clone(), market: spec.market.clone(), trace, summary, csv })
        })
        .collect();
    results
}

fn report_cap_for(config: &ExperimentConfig, market: &Market) -> Result<i64, RunError> {
    match &config.dynamics().report_cap {
        Some(s) => market
            .grid()
            .parse_money(s)
            .map_err(|e| ConfigError::Invalid(format!("dynamics.report_cap: {e}")).into()),
        None => {
            let start_hint = market.truth_profile();
            Ok(default_report_cap(market, &start_hint))
        }
    }
}

fn write_artifacts(
    config: &ExperimentConfig,
    out_dir: &Path,
    results: &[RunResult],
) -> Result<(), RunError> {
    let output = config.output();
    let want_csv = matches!(output.format.as_str(), "csv" | "both");
    let want_json = matches!(output.format.as_str(), "json" | "both");
    for r in results {
        if want_csv {
            write_atomic(&out_dir.join(format!("{}.trace.csv", r.name)), &r.csv)?;
        }
    }
    if want_json {
        let path = out_dir.join(format!("{}.summary.json", output.name));
        let text = if results.len() == 1 {
            serde_json::to_string_pretty(&results[0].summary).expect("serializable")
        } else {
            let summaries: Vec<&RunSummary> = results.iter().map(|r| &r.summary).collect();
            let converged = summaries.iter().filter(|s| s.status == "converged").count();
            let aggregate = AggregateSummary {
                runs: summaries.len(),
                converged,
                cycles: summaries.iter().filter(|s| s.status == "cycle").count(),
                step_limited: summaries.iter().filter(|s| s.status == "step_limit").count(),
                welfare_bound_failures: summaries
                    .iter()
                    .filter(|s| !s.metrics.welfare_bound.holds)
                    .count(),
                revenue_bound_failures: summaries
                    .iter()
                    .filter(|s| !s.metrics.revenue_bound.holds)
                    .count(),
                summaries: summaries.into_iter().cloned().collect(),
            };
            serde_json::to_string_pretty(&aggregate).expect("serializable")
        };
        write_atomic(&path, &(text + "\n"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AggregateSummary {
    runs: usize,
    converged: usize,
    cycles: usize,
    step_limited: usize,
    welfare_bound_failures: usize,
    revenue_bound_failures: usize,
    summaries: Vec<RunSummary>,
}

#[derive(Debug, Serialize)]
struct EquilibriumJson {
    profile: Vec<String>,
    price: String,
    allocation: Vec<u64>,
    is_overbidding: bool,
    social_welfare: String,
    revenue: String,
}

/// Exhaustive equilibrium enumeration driven by the `[equilibria]` block.
pub fn run_equilibria(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<String, RunError> {
    let block = config.equilibria.clone().ok_or_else(|| {
        ConfigError::Invalid("an [equilibria] block is required for this command".into())
    })?;
    let markets = config.build_markets(seed_override)?;
    let market = &markets[0];
    let mech = config.build_mechanism(market.buyer_count())?;
    let cap = market
        .grid()
        .parse_money(&block.report_cap)
        .map_err(|e| ConfigError::Invalid(format!("equilibria.report_cap: {e}")))?;
    let found = enumerate_equilibria(
        &mech,
        market,
        cap,
        block.only_non_overbidding,
        block.limit as u128,
    )?;
    let grid = market.grid();
    let rows: Vec<EquilibriumJson> = found
        .iter()
        .map(|e| EquilibriumJson {
            profile: e.profile.reports().iter().map(|&r| grid.render_money(r)).collect(),
            price: grid.render_money(e.outcome.price()),
            allocation: e.outcome.allocation().to_vec(),
            is_overbidding: e.is_overbidding,
            social_welfare: grid.render_money(e.social_welfare),
            revenue: grid.render_money(e.revenue),
        })
        .collect();
    let text = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
    write_atomic(&out_dir.join(format!("{}.equilibria.json", config.output().name)), &text)?;
    Ok(text)
}

#[derive(Debug, Serialize)]
struct PropertyJson {
    property: String,
    holds: bool,
    samples: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessJson>,
}

#[derive(Debug, Serialize)]
struct WitnessJson {
    profiles: Vec<Vec<String>>,
    detail: String,
}

/// Runs the five property checkers for the configured mechanism and writes
/// one JSON report. Returns (rendered JSON, all-hold flag).
pub fn run_properties(
    config: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<(String, bool), RunError> {
    use efmarket::analysis as an;
    let block = config.properties.clone().unwrap_or(crate::config::PropertiesBlock {
        trials: 2000,
        seed: 0,
    });
    let seed = seed_override.unwrap_or(block.seed);
    let markets = config.build_markets(seed_override)?;
    let market = markets[0].clone();
    let mech = config.build_mechanism(market.buyer_count())?;
    let cap = market.max_valuation() + market.grid().input_step();
    let mut source = move |rng: &mut efmarket::sampling::SampleRng| {
        let profile = sample_profile(&market, cap, rng);
        (market.clone(), profile)
    };

    let reports = vec![
        an::check_price_monotone(&mech, &mut source, block.trials, seed),
        an::check_supply_monotone(&mech, &mut source, block.trials, seed),
        an::check_non_wasteful(&mech, &mut source, block.trials, seed),
        an::check_consistent(&mech, &mut source, block.trials, seed),
        an::check_truthful(&mech, &mut source, block.trials, seed),
    ];
    let grid = config.build_markets(seed_override)?[0].grid().clone();
    let rows: Vec<PropertyJson> = reports
        .iter()
        .map(|r| PropertyJson {
            property: r.property.clone(),
            holds: r.holds(),
            samples: r.samples,
            seed: r.seed,
            witness: match &r.verdict {
                an::PropertyVerdict::Holds => None,
                an::PropertyVerdict::Violated(w) => Some(WitnessJson {
                    profiles: w
                        .profiles
                        .iter()
                        .map(|p| p.reports().iter().map(|&x| grid.render_money(x)).collect())
                        .collect(),
                    detail: w.detail.clone(),
                }),
            },
        })
        .collect();
    let all_hold = rows.iter().all(|r| r.holds);
    let text = serde_json::to_string_pretty(&rows).expect("serializable") + "\n";
    write_atomic(&out_dir.join(format!("{}.properties.json", config.output().name)), &text)?;
    Ok((text, all_hold))
}
