//! Best-response dynamics over pricing mechanisms.
//!
//! A best response scans every input-grid report in `[0, report_cap]` and
//! keeps the one maximizing the deviator's true utility, provided it
//! strictly beats the current utility. Ties resolve toward the lowest
//! resulting price and then the lowest report, which makes runs
//! deterministic given the order policy and reproduces the adversarial
//! cycle construction exactly.
//!
//! The dynamics loop records a full [`Trace`] and stops on convergence, on a
//! repeated profile (exact arithmetic makes profile hashing a sound cycle
//! detector) or on a step limit. Validators check the structural invariants
//! a truth-started run must satisfy, and the tighter two-buyer state machine
//! of the all-or-nothing mechanism.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::market::{Interest, Market, Outcome, Profile};
use crate::mechanisms::{run_all_or_nothing, MechanismError, PricingMechanism};
use crate::money::Utility;
use crate::pricing::{buyer_statuses, revenue, social_welfare, utility};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("report cap must cover the current reports and the true valuations")]
    CapTooSmall,
    #[error("profile space of ~{estimate} points exceeds the enumeration limit of {limit}")]
    ExplosionLimit { estimate: u128, limit: u128 },
}

/// Deviator selection for the dynamics loop. Every policy is deterministic;
/// `RandomSeeded` draws from a seeded ChaCha stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderPolicy {
    /// Buyers take turns in cyclic order, skipping those without an
    /// improving move.
    RoundRobin,
    /// Always the lowest-indexed buyer with an improving move.
    LexFirstImproving,
    /// A uniformly random buyer among those with improving moves.
    RandomSeeded(u64),
}

/// One applied deviation: who moved, to what report, and the outcome of the
/// resulting profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub deviator: usize,
    pub new_report: i64,
    pub profile: Profile,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    CycleDetected { entry: usize, length: usize },
    StepLimit,
}

/// Per-step price/revenue/welfare metrics, welfare under true valuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepMetrics {
    pub price: i64,
    pub revenue: i64,
    pub welfare: i64,
}

/// A full best-response history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub start: Profile,
    pub start_outcome: Outcome,
    pub steps: Vec<TraceStep>,
    pub status: TraceStatus,
}

impl Trace {
    pub fn final_profile(&self) -> &Profile {
        self.steps.last().map(|s| &s.profile).unwrap_or(&self.start)
    }

    pub fn final_outcome(&self) -> &Outcome {
        self.steps.last().map(|s| &s.outcome).unwrap_or(&self.start_outcome)
    }

    /// Profiles visited, starting with the start profile.
    pub fn profiles(&self) -> Vec<&Profile> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.profile)).collect()
    }

    /// Metrics for the start state followed by every step.
    pub fn step_metrics(&self, market: &Market) -> Vec<StepMetrics> {
        std::iter::once(&self.start_outcome)
            .chain(self.steps.iter().map(|s| &s.outcome))
            .map(|o| StepMetrics {
                price: o.price(),
                revenue: revenue(o),
                welfare: social_welfare(market.valuations(), o),
            })
            .collect()
    }
}

fn check_cap(market: &Market, profile: &Profile, report_cap: i64) -> Result<(), DynamicsError> {
    if report_cap < profile.max_report() || report_cap < market.max_valuation() {
        return Err(DynamicsError::CapTooSmall);
    }
    Ok(())
}

/// Default deviation cap: one input step above the larger of the truthful
/// valuations and the current reports.
pub fn default_report_cap(market: &Market, profile: &Profile) -> i64 {
    market.max_valuation().max(profile.max_report()) + market.grid().input_step()
}

/// The report in `[0, report_cap]` maximizing buyer `buyer`'s true utility,
/// if any strictly improves on the current outcome. Ties prefer the lowest
/// resulting price, then the lowest report.
pub fn best_response(
    mech: &dyn PricingMechanism,
    market: &Market,
    profile: &Profile,
    buyer: usize,
    report_cap: i64,
) -> Result<Option<(i64, Outcome)>, DynamicsError> {
    check_cap(market, profile, report_cap)?;
    let params = market.params();
    let v = market.valuations()[buyer];
    let b = market.budgets()[buyer];
    let current = mech.run(profile, &params)?;
    let current_u = utility(v, b, current.price(), current.units_of(buyer));

    let eps = market.grid().input_step();
    let mut best: Option<(i64, Outcome, Utility)> = None;
    for k in 0..=(report_cap / eps) {
        let r = k * eps;
        if r == profile.report(buyer) {
            continue;
        }
        let out = mech.run(&profile.with_report(buyer, r), &params)?;
        let u = utility(v, b, out.price(), out.units_of(buyer));
        let admit = match &best {
            None => u > current_u,
            Some((_, best_out, best_u)) => {
                u > *best_u || (u == *best_u && out.price() < best_out.price())
            }
        };
        if admit {
            best = Some((r, out, u));
        }
    }
    Ok(best.map(|(r, o, _)| (r, o)))
}

/// Runs the best-response dynamic from `start` until no buyer improves, a
/// profile repeats, or `max_steps` is reached.
pub fn run_dynamics(
    mech: &dyn PricingMechanism,
    market: &Market,
    start: &Profile,
    policy: OrderPolicy,
    max_steps: usize,
    report_cap: i64,
) -> Result<Trace, DynamicsError> {
    let params = market.params();
    let start_outcome = mech.run(start, &params)?;
    let n = market.buyer_count();
    let mut rng = match policy {
        OrderPolicy::RandomSeeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };

    let mut seen: HashMap<Profile, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut profile = start.clone();
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut rr_next = 0usize;

    let status = loop {
        if steps.len() >= max_steps {
            break TraceStatus::StepLimit;
        }
        let picked = match policy {
            OrderPolicy::RoundRobin => {
                let mut found = None;
                for offset in 0..n {
                    let i = (rr_next + offset) % n;
                    if let Some(br) = best_response(mech, market, &profile, i, report_cap)? {
                        rr_next = (i + 1) % n;
                        found = Some((i, br));
                        break;
                    }
                }
                found
            }
            OrderPolicy::LexFirstImproving => {
                let mut found = None;
                for i in 0..n {
                    if let Some(br) = best_response(mech, market, &profile, i, report_cap)? {
                        found = Some((i, br));
                        break;
                    }
                }
                found
            }
            OrderPolicy::RandomSeeded(_) => {
                let mut improving = Vec::new();
                for i in 0..n {
                    if let Some(br) = best_response(mech, market, &profile, i, report_cap)? {
                        improving.push((i, br));
                    }
                }
                if improving.is_empty() {
                    None
                } else {
                    let pick = rng.as_mut().expect("seeded rng").gen_range(0..improving.len());
                    Some(improving.swap_remove(pick))
                }
            }
        };
        let (buyer, (report, outcome)) = match picked {
            None => break TraceStatus::Converged,
            Some(p) => p,
        };
        profile = profile.with_report(buyer, report);
        steps.push(TraceStep { deviator: buyer, new_report: report, profile: profile.clone(), outcome });
        let now = steps.len();
        if let Some(&entry) = seen.get(&profile) {
            break TraceStatus::CycleDetected { entry, length: now - entry };
        }
        seen.insert(profile.clone(), now);
    };

    Ok(Trace { start: start.clone(), start_outcome, steps, status })
}

/// A profile is a pure Nash equilibrium when no buyer has a strictly
/// improving report in `[0, report_cap]`.
pub fn is_pure_nash(
    mech: &dyn PricingMechanism,
    market: &Market,
    profile: &Profile,
    report_cap: i64,
) -> Result<bool, DynamicsError> {
    for i in 0..market.buyer_count() {
        if best_response(mech, market, profile, i, report_cap)?.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A pure Nash equilibrium found by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub profile: Profile,
    pub outcome: Outcome,
    pub is_overbidding: bool,
    pub social_welfare: i64,
    pub revenue: i64,
}

pub const DEFAULT_ENUM_LIMIT: u128 = 100_000;

/// Exhaustively scans every grid profile in `[0, report_cap]^n` and returns
/// the pure Nash equilibria. Refuses profile spaces larger than `limit`.
pub fn enumerate_equilibria(
    mech: &dyn PricingMechanism,
    market: &Market,
    report_cap: i64,
    only_non_overbidding: bool,
    limit: u128,
) -> Result<Vec<EquilibriumReport>, DynamicsError> {
    let eps = market.grid().input_step();
    let steps_per_buyer = report_cap / eps;
    let n = market.buyer_count();
    let estimate = (steps_per_buyer as u128 + 1).saturating_pow(n as u32);
    if estimate > limit {
        return Err(DynamicsError::ExplosionLimit { estimate, limit });
    }

    let params = market.params();
    let mut indices = vec![0i64; n];
    let mut results = Vec::new();
    loop {
        let reports: Vec<i64> = indices.iter().map(|&k| k * eps).collect();
        let profile = market.profile(reports).expect("grid profile is valid");
        let overbids = profile
            .reports()
            .iter()
            .zip(market.valuations())
            .any(|(&s, &v)| s > v);
        if !(only_non_overbidding && overbids) && is_pure_nash(mech, market, &profile, report_cap)? {
            let outcome = mech.run(&profile, &params)?;
            results.push(EquilibriumReport {
                social_welfare: social_welfare(market.valuations(), &outcome),
                revenue: revenue(&outcome),
                is_overbidding: overbids,
                profile,
                outcome,
            });
        }
        // Odometer increment over [0, steps_per_buyer]^n.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(results);
            }
            pos -= 1;
            if indices[pos] < steps_per_buyer {
                indices[pos] += 1;
                for idx in indices.iter_mut().skip(pos + 1) {
                    *idx = 0;
                }
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Violations a trace validator can flag. Step indices are 1-based over the
/// applied deviations; step 0 is the start state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    StartNotTruth,
    PriceNotDecreasing { step: usize },
    ApparentHungryNotTrulyHungry { step: usize, buyer: usize },
    ApparentSemiHungryDishonest { step: usize, buyer: usize },
    DeviatorSemiHungryBelowValue { step: usize, buyer: usize },
    ApparentUninterestedDishonest { step: usize, buyer: usize },
    ReportUnchanged { step: usize },
    ProfileEditedOutsideDeviator { step: usize },
    NotStrictImprovement { step: usize, buyer: usize },
    FinalUtilityBelowTruthful { buyer: usize },
    UnitsLostByNonLastDeviator { buyer: usize },
    NotTwoBuyers,
    OutcomeMismatch { step: usize },
    PlusBuyerDeviated { step: usize, buyer: usize },
    ConsecutiveDeviations { step: usize, buyer: usize },
    MinusDeviationNotToZero { step: usize, buyer: usize },
    MinusDeviationRaisedPrice { step: usize, buyer: usize },
    ZeroDeviationNotToPlus { step: usize, buyer: usize },
    ZeroDeviationLoweredPrice { step: usize, buyer: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReport {
    pub violations: Vec<TraceViolation>,
}

impl TraceReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the invariants of a truth-started best-response trace: strictly
/// decreasing prices; apparent hungry buyers truly hungry, apparent
/// uninterested and semi-hungry buyers honest (the current deviator may
/// appear semi-hungry with a true value at or above the price); and, on
/// convergence, final utilities at least truthful ones with units weakly
/// larger except possibly for the last deviator.
pub fn validate_trace(trace: &Trace, market: &Market) -> TraceReport {
    let mut violations = Vec::new();
    let params = market.params();
    let truth = market.truth_profile();
    if trace.start != truth {
        violations.push(TraceViolation::StartNotTruth);
    }

    let mut prev_profile = trace.start.clone();
    let mut prev_outcome = trace.start_outcome.clone();
    for (idx, step) in trace.steps.iter().enumerate() {
        let k = idx + 1;
        let price = step.outcome.price();
        if price >= prev_outcome.price() {
            violations.push(TraceViolation::PriceNotDecreasing { step: k });
        }

        // The recorded profile must equal the previous one with exactly the
        // deviator's report replaced.
        if step.profile.report(step.deviator) == prev_profile.report(step.deviator) {
            violations.push(TraceViolation::ReportUnchanged { step: k });
        }
        if step.profile != prev_profile.with_report(step.deviator, step.new_report) {
            violations.push(TraceViolation::ProfileEditedOutsideDeviator { step: k });
        }

        // Apparent statuses under the reports vs. true valuations.
        for (i, status) in buyer_statuses(&step.profile, &params, price).iter().enumerate() {
            let v = market.valuations()[i];
            let honest = step.profile.report(i) == v;
            match status.interest {
                Interest::Hungry => {
                    if v <= price {
                        violations
                            .push(TraceViolation::ApparentHungryNotTrulyHungry { step: k, buyer: i });
                    }
                }
                Interest::SemiHungry => {
                    if i == step.deviator {
                        if v < price {
                            violations.push(TraceViolation::DeviatorSemiHungryBelowValue {
                                step: k,
                                buyer: i,
                            });
                        }
                    } else if !honest {
                        violations
                            .push(TraceViolation::ApparentSemiHungryDishonest { step: k, buyer: i });
                    }
                }
                Interest::Uninterested => {
                    if !honest {
                        violations
                            .push(TraceViolation::ApparentUninterestedDishonest { step: k, buyer: i });
                    }
                }
            }
        }

        // Each deviation must strictly improve the deviator's true utility.
        let d = step.deviator;
        let before = utility(
            market.valuations()[d],
            market.budgets()[d],
            prev_outcome.price(),
            prev_outcome.units_of(d),
        );
        let after =
            utility(market.valuations()[d], market.budgets()[d], price, step.outcome.units_of(d));
        if after <= before {
            violations.push(TraceViolation::NotStrictImprovement { step: k, buyer: d });
        }

        prev_profile = step.profile.clone();
        prev_outcome = step.outcome.clone();
    }

    if trace.status == TraceStatus::Converged {
        let last_deviator = trace.steps.last().map(|s| s.deviator);
        let final_outcome = trace.final_outcome();
        for i in 0..market.buyer_count() {
            let v = market.valuations()[i];
            let b = market.budgets()[i];
            let truthful =
                utility(v, b, trace.start_outcome.price(), trace.start_outcome.units_of(i));
            let final_u = utility(v, b, final_outcome.price(), final_outcome.units_of(i));
            if final_u < truthful {
                violations.push(TraceViolation::FinalUtilityBelowTruthful { buyer: i });
            }
            if Some(i) != last_deviator
                && final_outcome.units_of(i) < trace.start_outcome.units_of(i)
            {
                violations.push(TraceViolation::UnitsLostByNonLastDeviator { buyer: i });
            }
        }
    }

    TraceReport { violations }
}

/// Sign of a buyer's true utility at an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignType {
    Plus,
    Zero,
    Minus,
}

pub fn sign_type(buyer: usize, outcome: &Outcome, market: &Market) -> SignType {
    let u = utility(
        market.valuations()[buyer],
        market.budgets()[buyer],
        outcome.price(),
        outcome.units_of(buyer),
    );
    match u {
        Utility::Bottom => SignType::Minus,
        Utility::Value(v) if v > 0 => SignType::Plus,
        Utility::Value(v) if v < 0 => SignType::Minus,
        Utility::Value(_) => SignType::Zero,
    }
}

/// Validates a two-buyer all-or-nothing trace against the sign-type state
/// machine: outcomes match a re-run of the mechanism, nobody deviates twice
/// in a row, positive-utility buyers never deviate, negative-utility buyers
/// deviate only into zero utility without raising the price, and
/// zero-utility buyers deviate only into positive utility without lowering
/// the price.
pub fn validate_aon_two_buyer(trace: &Trace, market: &Market) -> TraceReport {
    let mut violations = Vec::new();
    if market.buyer_count() != 2 {
        violations.push(TraceViolation::NotTwoBuyers);
        return TraceReport { violations };
    }
    let params = market.params();

    let check_outcome = |profile: &Profile, outcome: &Outcome, step: usize, v: &mut Vec<TraceViolation>| {
        match run_all_or_nothing(profile, &params) {
            Ok(expected) if &expected == outcome => {}
            _ => v.push(TraceViolation::OutcomeMismatch { step }),
        }
    };

    check_outcome(&trace.start, &trace.start_outcome, 0, &mut violations);

    let mut prev_outcome = &trace.start_outcome;
    let mut prev_deviator: Option<usize> = None;
    for (idx, step) in trace.steps.iter().enumerate() {
        let k = idx + 1;
        let d = step.deviator;
        check_outcome(&step.profile, &step.outcome, k, &mut violations);
        if prev_deviator == Some(d) {
            violations.push(TraceViolation::ConsecutiveDeviations { step: k, buyer: d });
        }
        let before = sign_type(d, prev_outcome, market);
        let after = sign_type(d, &step.outcome, market);
        let price_before = prev_outcome.price();
        let price_after = step.outcome.price();
        match before {
            SignType::Plus => violations.push(TraceViolation::PlusBuyerDeviated { step: k, buyer: d }),
            SignType::Minus => {
                if after != SignType::Zero {
                    violations.push(TraceViolation::MinusDeviationNotToZero { step: k, buyer: d });
                }
                if price_after > price_before {
                    violations.push(TraceViolation::MinusDeviationRaisedPrice { step: k, buyer: d });
                }
            }
            SignType::Zero => {
                if after != SignType::Plus {
                    violations.push(TraceViolation::ZeroDeviationNotToPlus { step: k, buyer: d });
                }
                if price_after < price_before {
                    violations.push(TraceViolation::ZeroDeviationLoweredPrice { step: k, buyer: d });
                }
            }
        }
        prev_outcome = &step.outcome;
        prev_deviator = Some(d);
    }

    TraceReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Market;
    use crate::mechanisms::MechanismId;
    use crate::money::GridSpec;

    fn tenth() -> GridSpec {
        GridSpec::uniform("0.1").unwrap()
    }

    /// Two buyers with true values (1, 2), budgets (1.5, 1.5), two units.
    fn cycle_market() -> Market {
        Market::from_decimals(2, &["1.5", "1.5"], &["1", "2"], tenth()).unwrap()
    }

    /// Three buyers, three units, values (1.1, 1.1, 1), budgets (2.2, 2.2, 1).
    fn allocation_loss_market() -> Market {
        Market::from_decimals(3, &["2.2", "2.2", "1"], &["1.1", "1.1", "1"], tenth()).unwrap()
    }

    fn lowest_ef() -> MechanismId {
        MechanismId::LowestEfValuation { tie_order: vec![0, 2, 1] }
    }

    #[test]
    fn best_response_in_cycle_table() {
        let market = cycle_market();
        let start = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        let cap = market.grid().parse_money("3").unwrap();
        let br = best_response(&MechanismId::CycleAdversarial, &market, &start, 0, cap)
            .unwrap()
            .expect("alice improves");
        assert_eq!(br.0, 30);
        assert_eq!(br.1.price(), 9);
    }

    #[test]
    fn best_response_none_at_aon_truth() {
        let market = allocation_loss_market();
        let cap = default_report_cap(&market, &market.truth_profile());
        for buyer in 0..3 {
            let br = best_response(&MechanismId::AllOrNothing, &market, &market.truth_profile(), buyer, cap)
                .unwrap();
            assert!(br.is_none(), "buyer {buyer} should not improve on truth");
        }
    }

    #[test]
    fn best_response_in_revenue_maximizer() {
        let unit = GridSpec::uniform("1").unwrap();
        let market = Market::from_decimals(1, &["4", "4"], &["4", "1"], unit).unwrap();
        let truth = market.truth_profile();
        let br = best_response(&MechanismId::MaxRevenue, &market, &truth, 0, 5)
            .unwrap()
            .expect("buyer 1 improves");
        assert_eq!(br.0, 1);
        assert_eq!(br.1.price(), 1);
        assert_eq!(br.1.allocation(), &[1, 0]);
    }

    #[test]
    fn cap_precondition_enforced() {
        let market = cycle_market();
        let start = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        assert_eq!(
            best_response(&MechanismId::CycleAdversarial, &market, &start, 0, 10),
            Err(DynamicsError::CapTooSmall)
        );
    }

    #[test]
    fn cycle_regression() {
        let market = cycle_market();
        let start = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        let cap = market.grid().parse_money("3").unwrap();
        let trace = run_dynamics(
            &MechanismId::CycleAdversarial,
            &market,
            &start,
            OrderPolicy::LexFirstImproving,
            100,
            cap,
        )
        .unwrap();
        assert_eq!(trace.status, TraceStatus::CycleDetected { entry: 0, length: 4 });
        let prices: Vec<i64> = trace.steps.iter().map(|s| s.outcome.price()).collect();
        assert_eq!(prices, vec![9, 15, 5, 2]);
        assert_eq!(trace.start_outcome.price(), 2);
        let orbit: Vec<Vec<i64>> =
            trace.steps.iter().map(|s| s.profile.reports().to_vec()).collect();
        assert_eq!(orbit, vec![vec![30, 3], vec![30, 20], vec![1, 20], vec![1, 3]]);
        assert_eq!(
            trace.steps.iter().map(|s| s.deviator).collect::<Vec<_>>(),
            vec![0, 1, 0, 1]
        );
    }

    #[test]
    fn cycle_detection_replays_exactly() {
        let market = cycle_market();
        let start = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        let cap = market.grid().parse_money("3").unwrap();
        let trace = run_dynamics(
            &MechanismId::CycleAdversarial,
            &market,
            &start,
            OrderPolicy::LexFirstImproving,
            100,
            cap,
        )
        .unwrap();
        let TraceStatus::CycleDetected { entry, length } = trace.status else {
            panic!("expected a cycle");
        };
        let profiles = trace.profiles();
        assert_eq!(profiles[entry], profiles[entry + length]);
        // Replaying the recorded deviations from the cycle entry reproduces
        // the recorded outcomes.
        let mut profile = profiles[entry].clone();
        for step in &trace.steps[entry..entry + length] {
            profile = profile.with_report(step.deviator, step.new_report);
            assert_eq!(profile, step.profile);
            let out = MechanismId::CycleAdversarial.run(&profile, &market.params()).unwrap();
            assert_eq!(out, step.outcome);
        }
        assert_eq!(&profile, profiles[entry]);
    }

    #[test]
    fn allocation_loss_dynamics_and_validator() {
        let market = allocation_loss_market();
        let truth = market.truth_profile();
        let cap = default_report_cap(&market, &truth);
        let trace =
            run_dynamics(&lowest_ef(), &market, &truth, OrderPolicy::RoundRobin, 100, cap).unwrap();
        assert_eq!(trace.status, TraceStatus::Converged);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.final_profile().reports(), &[10, 11, 10]);
        assert_eq!(trace.final_outcome().price(), 10);
        assert_eq!(trace.final_outcome().allocation(), &[1, 2, 0]);
        // Alice (buyer 0) is the last deviator and drops from 2 units to 1;
        // the validator allows exactly that.
        let report = validate_trace(&trace, &market);
        assert!(report.is_ok(), "violations: {:?}", report.violations);
        assert_eq!(trace.start_outcome.units_of(0), 2);
        assert_eq!(trace.final_outcome().units_of(0), 1);
    }

    #[test]
    fn truthful_mechanism_converges_in_zero_steps() {
        let market = allocation_loss_market();
        let truth = market.truth_profile();
        let cap = default_report_cap(&market, &truth);
        let trace =
            run_dynamics(&MechanismId::AllOrNothing, &market, &truth, OrderPolicy::RoundRobin, 100, cap)
                .unwrap();
        assert_eq!(trace.status, TraceStatus::Converged);
        assert!(trace.steps.is_empty());
        assert!(validate_trace(&trace, &market).is_ok());
    }

    #[test]
    fn validator_flags_price_increase() {
        let market = allocation_loss_market();
        let truth = market.truth_profile();
        let params = market.params();
        let start_outcome = MechanismId::AllOrNothing.run(&truth, &params).unwrap();
        // Hand-built step that raises the price.
        let profile = truth.with_report(0, 20);
        let outcome = Outcome::new(20, vec![0, 0, 0]);
        let trace = Trace {
            start: truth,
            start_outcome,
            steps: vec![TraceStep { deviator: 0, new_report: 20, profile, outcome }],
            status: TraceStatus::Converged,
        };
        let report = validate_trace(&trace, &market);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, TraceViolation::PriceNotDecreasing { step: 1 })));
    }

    #[test]
    fn pure_nash_examples() {
        let market = cycle_market();
        let start = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        let cap = market.grid().parse_money("3").unwrap();
        assert!(!is_pure_nash(&MechanismId::CycleAdversarial, &market, &start, cap).unwrap());

        let unit = GridSpec::uniform("1").unwrap();
        let bad_rev = Market::from_decimals(1, &["4", "4"], &["4", "1"], unit).unwrap();
        let eq = bad_rev.profile_from_decimals(&["1", "1"]).unwrap();
        assert!(is_pure_nash(&MechanismId::MaxRevenue, &bad_rev, &eq, 5).unwrap());
    }

    #[test]
    fn cycle_orbit_states_are_not_equilibria() {
        let market = cycle_market();
        let cap = market.grid().parse_money("3").unwrap();
        for reports in [["0.1", "0.3"], ["3", "0.3"], ["3", "2"], ["0.1", "2"]] {
            let p = market.profile_from_decimals(&reports).unwrap();
            assert!(
                !is_pure_nash(&MechanismId::CycleAdversarial, &market, &p, cap).unwrap(),
                "{reports:?} should admit an improving deviation"
            );
        }
    }

    #[test]
    fn enumeration_contains_truth_for_truthful_mechanism() {
        let half = GridSpec::uniform("0.5").unwrap();
        let market = Market::from_decimals(2, &["1", "1"], &["1", "0.5"], half).unwrap();
        let cap = market.grid().parse_money("1.5").unwrap();
        let eqs =
            enumerate_equilibria(&MechanismId::AllOrNothing, &market, cap, false, DEFAULT_ENUM_LIMIT)
                .unwrap();
        assert!(eqs.iter().any(|e| e.profile == market.truth_profile()));
        for e in &eqs {
            assert_eq!(
                e.is_overbidding,
                e.profile.reports().iter().zip(market.valuations()).any(|(&s, &v)| s > v)
            );
        }
        let sane = enumerate_equilibria(&MechanismId::AllOrNothing, &market, cap, true, DEFAULT_ENUM_LIMIT)
            .unwrap();
        assert!(sane.iter().all(|e| !e.is_overbidding));
    }

    #[test]
    fn enumeration_respects_explosion_limit() {
        let market = allocation_loss_market();
        let err = enumerate_equilibria(&MechanismId::AllOrNothing, &market, 30, false, 100)
            .unwrap_err();
        assert!(matches!(err, DynamicsError::ExplosionLimit { limit: 100, .. }));
    }

    #[test]
    fn aon_two_buyer_validator_minus_plus_converges_fast() {
        let half = GridSpec::uniform("0.5").unwrap();
        let market = Market::from_decimals(2, &["2", "2"], &["0.5", "3"], half).unwrap();
        let start = market.profile_from_decimals(&["3", "3"]).unwrap();
        let start_outcome = MechanismId::AllOrNothing.run(&start, &market.params()).unwrap();
        // (minus, plus) start state: buyer 0 pays above value, buyer 1 gains.
        assert_eq!(sign_type(0, &start_outcome, &market), SignType::Minus);
        assert_eq!(sign_type(1, &start_outcome, &market), SignType::Plus);
        let cap = market.grid().parse_money("3").unwrap();
        let trace =
            run_dynamics(&MechanismId::AllOrNothing, &market, &start, OrderPolicy::RoundRobin, 100, cap)
                .unwrap();
        assert_eq!(trace.status, TraceStatus::Converged);
        assert!(trace.steps.len() <= 1);
        let report = validate_aon_two_buyer(&trace, &market);
        assert!(report.is_ok(), "violations: {:?}", report.violations);
    }

    #[test]
    fn aon_validator_passes_zero_step_truth_trace() {
        let market = cycle_market();
        let truth = market.truth_profile();
        let cap = default_report_cap(&market, &truth);
        let trace =
            run_dynamics(&MechanismId::AllOrNothing, &market, &truth, OrderPolicy::RoundRobin, 100, cap)
                .unwrap();
        assert!(trace.steps.is_empty());
        assert!(validate_aon_two_buyer(&trace, &market).is_ok());
        assert!(validate_trace(&trace, &market).is_ok());
    }

    #[test]
    fn random_policy_is_reproducible() {
        let market = allocation_loss_market();
        let truth = market.truth_profile();
        let cap = default_report_cap(&market, &truth);
        let a = run_dynamics(&lowest_ef(), &market, &truth, OrderPolicy::RandomSeeded(42), 100, cap)
            .unwrap();
        let b = run_dynamics(&lowest_ef(), &market, &truth, OrderPolicy::RandomSeeded(42), 100, cap)
            .unwrap();
        assert_eq!(a, b);
    }
}
