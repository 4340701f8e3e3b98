//! Empirical property checkers and theorem-bound validators.
//!
//! The mechanism classes checked here (price-monotone, supply-monotone,
//! non-wasteful, consistent, truthful) are semantic, so the checkers verify
//! them by seeded sampling and report either `Holds` over N samples or a
//! concrete witness that re-checks as a violation deterministically. They
//! never claim a proof.

use num_rational::Ratio;
use rand::Rng;

use crate::market::{Interest, Market, MarketParams, Outcome, Profile};
use crate::mechanisms::PricingMechanism;
use crate::pricing::{
    buyer_statuses, max_envy_free_revenue, revenue, social_welfare, utility,
};
use crate::sampling::{sample_dominated, test_rng, SampleRng};

/// A market/profile source for the samplers. Checkers draw markets through
/// this so callers can pin a fixed market (needed e.g. for the two-buyer
/// cycle construction) or use the default random one.
pub type SampleSource<'a> = dyn FnMut(&mut SampleRng) -> (Market, Profile) + 'a;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyWitness {
    pub market: Market,
    pub profiles: Vec<Profile>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyVerdict {
    Holds,
    Violated(PropertyWitness),
}

/// Outcome of an empirical property check, reproducible from (seed, trials).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyReport {
    pub property: String,
    pub samples: usize,
    pub seed: u64,
    pub verdict: PropertyVerdict,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        matches!(self.verdict, PropertyVerdict::Holds)
    }
}

fn report(property: &str, samples: usize, seed: u64, verdict: PropertyVerdict) -> PropertyReport {
    PropertyReport { property: property.to_string(), samples, seed, verdict }
}

/// Price-monotonicity: coordinate-wise lower reports never raise the price.
/// Samples dominated profile pairs `v' ≤ v` and compares prices.
pub fn check_price_monotone(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut rng = test_rng(seed);
    let mut checked = 0;
    for _ in 0..trials {
        let (market, profile) = sample(&mut rng);
        let lower = sample_dominated(&market, &profile, &mut rng);
        let params = market.params();
        let (Ok(high), Ok(low)) = (mech.run(&profile, &params), mech.run(&lower, &params)) else {
            continue;
        };
        checked += 1;
        if low.price() > high.price() {
            let detail = format!(
                "price {} under the dominated profile exceeds {} under the original",
                market.grid().render_money(low.price()),
                market.grid().render_money(high.price()),
            );
            return report(
                "price-monotone",
                checked,
                seed,
                PropertyVerdict::Violated(PropertyWitness {
                    market,
                    profiles: vec![lower, profile],
                    detail,
                }),
            );
        }
    }
    report("price-monotone", checked, seed, PropertyVerdict::Holds)
}

/// Supply-monotonicity: with the price unchanged and fewer interested
/// competitors, a buyer never receives fewer units. Sampling is targeted:
/// other interested buyers are dropped to a zero report and only
/// equal-price pairs are compared (uniform sampling almost never produces
/// them).
pub fn check_supply_monotone(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut rng = test_rng(seed);
    let mut checked = 0;
    for _ in 0..trials {
        let (market, profile) = sample(&mut rng);
        let params = market.params();
        let Ok(base) = mech.run(&profile, &params) else { continue };
        let price = base.price();
        let statuses = buyer_statuses(&profile, &params, price);
        // Fix a buyer and free supply by silencing other interested buyers.
        let focus = (0..profile.len()).find(|&i| base.units_of(i) > 0);
        let Some(focus) = focus else { continue };
        let mut reports = profile.reports().to_vec();
        let mut dropped = false;
        for (j, s) in statuses.iter().enumerate() {
            if j != focus && s.is_interested() && rng.gen_bool(0.5) {
                reports[j] = 0;
                dropped = true;
            }
        }
        if !dropped {
            continue;
        }
        let freed = market.profile(reports).expect("valid reports");
        let Ok(after) = mech.run(&freed, &params) else { continue };
        if after.price() != price {
            continue; // not a comparable pair
        }
        checked += 1;
        if after.units_of(focus) < base.units_of(focus) {
            let detail = format!(
                "buyer {focus} drops from {} to {} units at unchanged price {}",
                base.units_of(focus),
                after.units_of(focus),
                market.grid().render_money(price),
            );
            return report(
                "supply-monotone",
                checked,
                seed,
                PropertyVerdict::Violated(PropertyWitness {
                    market,
                    profiles: vec![profile, freed],
                    detail,
                }),
            );
        }
    }
    report("supply-monotone", checked, seed, PropertyVerdict::Holds)
}

/// Non-wastefulness: semi-hungry buyers are filled to the maximum of their
/// demand sets unless the supply is exhausted.
pub fn check_non_wasteful(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut rng = test_rng(seed);
    let mut checked = 0;
    for _ in 0..trials {
        let (market, profile) = sample(&mut rng);
        let params = market.params();
        let Ok(out) = mech.run(&profile, &params) else { continue };
        checked += 1;
        let leftover = params.supply - out.total_units();
        if leftover == 0 {
            continue;
        }
        let statuses = buyer_statuses(&profile, &params, out.price());
        if let Some((i, s)) = statuses
            .iter()
            .enumerate()
            .find(|(i, s)| s.interest == Interest::SemiHungry && out.units_of(*i) < s.max_units)
        {
            let detail = format!(
                "{leftover} units stranded while semi-hungry buyer {i} holds {} of {}",
                out.units_of(i),
                s.max_units,
            );
            return report(
                "non-wasteful",
                checked,
                seed,
                PropertyVerdict::Violated(PropertyWitness { market, profiles: vec![profile], detail }),
            );
        }
    }
    report("non-wasteful", checked, seed, PropertyVerdict::Holds)
}

/// Consistency: the output depends only on the hungry and semi-hungry sets
/// at the posted price. Perturbs non-pivotal reports (hungry stay above the
/// price, uninterested stay below, semi-hungry stay fixed) and requires an
/// identical outcome.
pub fn check_consistent(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut rng = test_rng(seed);
    let mut checked = 0;
    for _ in 0..trials {
        let (market, profile) = sample(&mut rng);
        let params = market.params();
        let Ok(out) = mech.run(&profile, &params) else { continue };
        let price = out.price();
        let eps = market.grid().input_step();
        let statuses = buyer_statuses(&profile, &params, price);
        let mut reports = profile.reports().to_vec();
        let mut changed = false;
        for (i, s) in statuses.iter().enumerate() {
            match s.interest {
                Interest::Hungry => {
                    // Any grid report strictly above the price.
                    let lowest_above = (price / eps + 1) * eps;
                    let r = lowest_above + rng.gen_range(0..=8) * eps;
                    if r != reports[i] {
                        reports[i] = r;
                        changed = true;
                    }
                }
                Interest::Uninterested => {
                    // Any grid report strictly below the price.
                    let steps_below = (price - 1) / eps;
                    let r = rng.gen_range(0..=steps_below) * eps;
                    if r != reports[i] {
                        reports[i] = r;
                        changed = true;
                    }
                }
                Interest::SemiHungry => {}
            }
        }
        if !changed {
            continue;
        }
        let perturbed = market.profile(reports).expect("valid reports");
        let Ok(out2) = mech.run(&perturbed, &params) else { continue };
        checked += 1;
        if out2 != out {
            let detail = format!(
                "same hungry/semi-hungry sets at price {} but output changed",
                market.grid().render_money(price),
            );
            return report(
                "consistent",
                checked,
                seed,
                PropertyVerdict::Violated(PropertyWitness {
                    market,
                    profiles: vec![profile, perturbed],
                    detail,
                }),
            );
        }
    }
    report("consistent", checked, seed, PropertyVerdict::Holds)
}

/// Truthfulness: sampled unilateral deviations never beat truth-telling.
pub fn check_truthful(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> PropertyReport {
    let mut rng = test_rng(seed);
    let mut checked = 0;
    for _ in 0..trials {
        let (market, _) = sample(&mut rng);
        let truth = market.truth_profile();
        let params = market.params();
        let Ok(truth_out) = mech.run(&truth, &params) else { continue };
        let eps = market.grid().input_step();
        let buyer = rng.gen_range(0..market.buyer_count());
        let cap_steps = market.max_valuation() / eps + 4;
        let deviation = rng.gen_range(0..=cap_steps) * eps;
        if deviation == truth.report(buyer) {
            continue;
        }
        let deviated = truth.with_report(buyer, deviation);
        let Ok(dev_out) = mech.run(&deviated, &params) else { continue };
        checked += 1;
        let v = market.valuations()[buyer];
        let b = market.budgets()[buyer];
        let u_truth = utility(v, b, truth_out.price(), truth_out.units_of(buyer));
        let u_dev = utility(v, b, dev_out.price(), dev_out.units_of(buyer));
        if u_dev > u_truth {
            let detail = format!(
                "buyer {buyer} gains by misreporting {}",
                market.grid().render_money(deviation),
            );
            return report(
                "truthful",
                checked,
                seed,
                PropertyVerdict::Violated(PropertyWitness {
                    market,
                    profiles: vec![truth, deviated],
                    detail,
                }),
            );
        }
    }
    report("truthful", checked, seed, PropertyVerdict::Holds)
}

/// Number of semi-hungry buyers left with a partial allocation: strictly
/// between zero and the maximum of their demand set.
pub fn count_partial(outcome: &Outcome, profile: &Profile, params: &MarketParams<'_>) -> usize {
    buyer_statuses(profile, params, outcome.price())
        .iter()
        .enumerate()
        .filter(|(i, s)| {
            s.interest == Interest::SemiHungry
                && outcome.units_of(*i) > 0
                && outcome.units_of(*i) < s.max_units
        })
        .count()
}

/// Empirical lower bound for γ: the maximum number of partially allocated
/// semi-hungry buyers observed over the sampled inputs.
pub fn estimate_gamma(
    mech: &dyn PricingMechanism,
    sample: &mut SampleSource<'_>,
    trials: usize,
    seed: u64,
) -> usize {
    let mut rng = test_rng(seed);
    let mut gamma = 0;
    for _ in 0..trials {
        let (market, profile) = sample(&mut rng);
        let params = market.params();
        if let Ok(out) = mech.run(&profile, &params) {
            gamma = gamma.max(count_partial(&out, &profile, &params));
        }
    }
    gamma
}

/// One theorem-bound verdict; `holds` means `lhs ≥ rhs`. Degenerate bounds
/// (non-positive right-hand side for the revenue approximations) are marked
/// vacuous and count as holding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub bound: String,
    pub lhs: Ratio<i64>,
    pub rhs: Ratio<i64>,
    pub holds: bool,
    pub vacuous: bool,
}

/// Welfare bound: the welfare lost against the mechanism's truth-telling
/// outcome is at most `gamma` times the maximum budget. Oriented as
/// `γ·B* ≥ SW_truth − SW_eq`.
pub fn check_welfare_bound(
    market: &Market,
    truth_outcome: &Outcome,
    eq_outcome: &Outcome,
    gamma: u64,
) -> BoundCheck {
    let sw_truth = social_welfare(market.valuations(), truth_outcome);
    let sw_eq = social_welfare(market.valuations(), eq_outcome);
    let lhs = Ratio::from_integer(gamma as i64 * market.max_budget());
    let rhs = Ratio::from_integer(sw_truth - sw_eq);
    BoundCheck { bound: format!("welfare-loss<={gamma}*B"), lhs, rhs, holds: lhs >= rhs, vacuous: false }
}

/// Revenue bound: the equilibrium revenue is at least
/// `((β − γ·α)/2)·REV(M) = (REV_truth − γ·B*)/2`. Vacuous when the
/// right-hand side is non-positive.
pub fn check_revenue_bound(
    market: &Market,
    truth_outcome: &Outcome,
    eq_outcome: &Outcome,
    gamma: u64,
) -> BoundCheck {
    let lhs = Ratio::from_integer(revenue(eq_outcome));
    let rhs = Ratio::new(revenue(truth_outcome) - gamma as i64 * market.max_budget(), 2);
    let vacuous = rhs <= Ratio::from_integer(0);
    BoundCheck {
        bound: format!("revenue>=(beta-{gamma}*alpha)/2*REV"),
        lhs,
        rhs,
        holds: vacuous || lhs >= rhs,
        vacuous,
    }
}

/// Truth-telling revenue bound for the all-or-nothing mechanism:
/// `REV_truth ≥ min(1/2, 1 − α)·REV(M)`.
pub fn check_aon_truth_revenue(market: &Market, truth_outcome: &Outcome) -> BoundCheck {
    let (_, rev_m) = max_envy_free_revenue(&market.truth_profile(), &market.params());
    let lhs = Ratio::from_integer(revenue(truth_outcome));
    let rhs = Ratio::new(rev_m, 2).min(Ratio::from_integer(rev_m - market.max_budget()));
    let vacuous = rhs <= Ratio::from_integer(0);
    BoundCheck {
        bound: "aon-truth-revenue>=min(1/2,1-alpha)*REV".to_string(),
        lhs,
        rhs,
        holds: vacuous || lhs >= rhs,
        vacuous,
    }
}

/// Default sampler: random market from `cfg`, uniform profile on the input
/// grid up to one step above the largest valuation.
pub fn default_source(cfg: crate::sampling::SamplerConfig) -> impl FnMut(&mut SampleRng) -> (Market, Profile) {
    move |rng| {
        let market = crate::sampling::sample_market(&cfg, rng);
        let cap = market.max_valuation() + market.grid().input_step();
        let profile = crate::sampling::sample_profile(&market, cap, rng);
        (market, profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Market;
    use crate::mechanisms::{MechanismError, MechanismId};
    use crate::money::GridSpec;
    use crate::pricing::min_envy_free_price;
    use crate::sampling::SamplerConfig;

    fn source() -> impl FnMut(&mut SampleRng) -> (Market, Profile) {
        default_source(SamplerConfig::default())
    }

    fn two_buyer_source() -> impl FnMut(&mut SampleRng) -> (Market, Profile) {
        default_source(SamplerConfig::default().with_buyers(2, 5))
    }

    #[test]
    fn aon_is_price_monotone() {
        let mut src = source();
        let rep = check_price_monotone(&MechanismId::AllOrNothing, &mut src, 2000, 7);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);
        assert!(rep.samples > 1500);
    }

    #[test]
    fn almost_top_is_price_monotone() {
        let mut src = source();
        let rep = check_price_monotone(&MechanismId::AlmostTop, &mut src, 2000, 7);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);
    }

    fn cycle_market() -> Market {
        Market::from_decimals(2, &["1.5", "1.5"], &["1", "2"], GridSpec::uniform("0.1").unwrap())
            .unwrap()
    }

    #[test]
    fn cycle_adversarial_violates_price_monotonicity() {
        let market = cycle_market();
        let m = market.clone();
        let mut src = move |rng: &mut SampleRng| {
            let cap = m.grid().parse_money("3.5").unwrap();
            let profile = crate::sampling::sample_profile(&m, cap, rng);
            (m.clone(), profile)
        };
        let rep = check_price_monotone(&MechanismId::CycleAdversarial, &mut src, 5000, 3);
        let PropertyVerdict::Violated(w) = &rep.verdict else {
            panic!("expected a violation");
        };
        // The stored witness re-checks deterministically.
        let params = w.market.params();
        let low = MechanismId::CycleAdversarial.run(&w.profiles[0], &params).unwrap();
        let high = MechanismId::CycleAdversarial.run(&w.profiles[1], &params).unwrap();
        assert!(low.price() > high.price());

        // The canonical dominated pair: (0.1, 0.2) falls into the fallback
        // branch at price 100.2 while (0.1, 0.3) prices at 0.2.
        let params = market.params();
        let lo = market.profile_from_decimals(&["0.1", "0.2"]).unwrap();
        let hi = market.profile_from_decimals(&["0.1", "0.3"]).unwrap();
        let p_lo = MechanismId::CycleAdversarial.run(&lo, &params).unwrap().price();
        let p_hi = MechanismId::CycleAdversarial.run(&hi, &params).unwrap().price();
        assert_eq!((p_lo, p_hi), (1002, 2));
    }

    #[test]
    fn aon_and_greedy_are_supply_monotone() {
        for mech in [MechanismId::AllOrNothing, MechanismId::MaxWelfareGreedy] {
            let mut src = source();
            let rep = check_supply_monotone(&mech, &mut src, 4000, 11);
            assert!(rep.holds(), "{}: {:?}", mech.base_name(), rep.verdict);
            assert!(rep.samples > 100, "{}: too few comparable pairs", mech.base_name());
        }
    }

    /// Posts the top report as the price and zeroes the semi-hungry fill as
    /// soon as any buyer is uninterested: a deliberately supply-perverse but
    /// envy-free allocation rule, used as a negative control.
    struct SupplyPerverse;

    impl PricingMechanism for SupplyPerverse {
        fn name(&self) -> String {
            "SupplyPerverse".to_string()
        }

        fn run(
            &self,
            profile: &Profile,
            params: &MarketParams<'_>,
        ) -> Result<Outcome, MechanismError> {
            let top = profile.max_report();
            if top <= 0 {
                return Ok(Outcome::new(params.grid.output_step(), vec![0; profile.len()]));
            }
            let price = params.grid.round_up_to_output(top);
            let statuses = buyer_statuses(profile, params, price);
            let everyone_in = statuses.iter().all(|s| s.is_interested());
            let mut alloc = vec![0u64; profile.len()];
            if everyone_in {
                let mut remaining = params.supply;
                for (i, s) in statuses.iter().enumerate() {
                    if s.interest == Interest::SemiHungry {
                        let take = s.max_units.min(remaining);
                        alloc[i] = take;
                        remaining -= take;
                    }
                }
            }
            Ok(Outcome::new(price, alloc))
        }
    }

    #[test]
    fn broken_mechanism_fails_supply_monotonicity() {
        let grid = GridSpec::uniform("0.5").unwrap();
        let market = Market::from_decimals(5, &["2", "2", "2"], &["1", "1", "1"], grid).unwrap();
        let m = market.clone();
        let mut src = move |_rng: &mut SampleRng| (m.clone(), m.truth_profile());
        let rep = check_supply_monotone(&SupplyPerverse, &mut src, 50, 5);
        let PropertyVerdict::Violated(w) = &rep.verdict else {
            panic!("expected a violation");
        };
        let params = w.market.params();
        let before = SupplyPerverse.run(&w.profiles[0], &params).unwrap();
        let after = SupplyPerverse.run(&w.profiles[1], &params).unwrap();
        assert_eq!(before.price(), after.price());
        assert!((0..w.market.buyer_count())
            .any(|i| after.units_of(i) < before.units_of(i)));
    }

    #[test]
    fn greedy_is_non_wasteful_and_aon_is_not() {
        let mut src = source();
        let rep = check_non_wasteful(&MechanismId::MaxWelfareGreedy, &mut src, 3000, 13);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);

        // All-or-nothing strands supply when a semi-hungry target exceeds
        // the remainder. Directed instance: at price 1, buyer 1 is hungry
        // for 2 of 5 units; buyer 2's target of 5 exceeds the remaining 3
        // and is zeroed; buyer 3 takes 1, leaving 2 stranded.
        let grid = GridSpec::uniform("1").unwrap();
        let market = Market::from_decimals(5, &["2", "5", "1"], &["2", "1", "1"], grid).unwrap();
        let m = market.clone();
        let mut src = move |_rng: &mut SampleRng| (m.clone(), m.truth_profile());
        let rep = check_non_wasteful(&MechanismId::AllOrNothing, &mut src, 10, 1);
        let PropertyVerdict::Violated(w) = &rep.verdict else {
            panic!("expected a violation");
        };
        let out = MechanismId::AllOrNothing.run(&w.profiles[0], &w.market.params()).unwrap();
        assert_eq!(out.allocation(), &[2, 0, 1]);
        assert!(out.total_units() < w.market.supply());
    }

    #[test]
    fn consistency_verdicts() {
        // Second-highest pricing depends only on the top two reports, and
        // the minimum envy-free price only on the buyer classes at each
        // price, so both mechanisms pass the consistency check.
        let mut src = two_buyer_source();
        let rep = check_consistent(&MechanismId::SecondHighestGreedy, &mut src, 3000, 17);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);
        assert!(rep.samples > 1000);

        let mut src = source();
        let rep = check_consistent(&MechanismId::AllOrNothing, &mut src, 3000, 17);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);

        // Mechanisms whose price tracks report values or report-dependent
        // objectives are not consistent.
        for mech in [MechanismId::AlmostTop, MechanismId::MaxRevenue] {
            let mut src = source();
            let rep = check_consistent(&mech, &mut src, 3000, 17);
            let PropertyVerdict::Violated(w) = &rep.verdict else {
                panic!("{} unexpectedly passed consistency", mech.base_name());
            };
            // Witness re-checks deterministically.
            let params = w.market.params();
            let a = mech.run(&w.profiles[0], &params).unwrap();
            let b = mech.run(&w.profiles[1], &params).unwrap();
            assert_ne!(a, b, "{}", mech.base_name());
        }
    }

    #[test]
    fn aon_is_truthful_second_highest_is_not() {
        let mut src = source();
        let rep = check_truthful(&MechanismId::AllOrNothing, &mut src, 4000, 19);
        assert!(rep.holds(), "witness: {:?}", rep.verdict);

        let mut src = two_buyer_source();
        let rep = check_truthful(&MechanismId::SecondHighestGreedy, &mut src, 4000, 19);
        assert!(!rep.holds(), "second-highest pricing is manipulable");
    }

    #[test]
    fn partial_allocation_counts() {
        // All-or-nothing never leaves partial allocations; greedy fills
        // leave at most one.
        let mut src = source();
        let gamma_aon = estimate_gamma(&MechanismId::AllOrNothing, &mut src, 3000, 23);
        assert_eq!(gamma_aon, 0);

        for mech in [
            MechanismId::MaxWelfareGreedy,
            MechanismId::AlmostTop,
            MechanismId::MaxRevenue,
        ] {
            let mut src = source();
            let gamma = estimate_gamma(&mech, &mut src, 3000, 23);
            assert!(gamma <= 1, "{} has gamma {gamma}", mech.base_name());
        }

        let grid = GridSpec::uniform("1").unwrap();
        let market = Market::from_decimals(3, &["2", "2"], &["1", "1"], grid).unwrap();
        let out = MechanismId::MaxWelfareGreedy.run(&market.truth_profile(), &market.params()).unwrap();
        // Price 1: both semi-hungry with target 2; greedy gives (2, 1).
        assert_eq!(out.allocation(), &[2, 1]);
        assert_eq!(count_partial(&out, &market.truth_profile(), &market.params()), 1);
        let empty = Outcome::new(1, vec![0, 0]);
        assert_eq!(count_partial(&empty, &market.truth_profile(), &market.params()), 0);
    }

    #[test]
    fn welfare_bound_on_allocation_loss_instance() {
        let grid = GridSpec::uniform("0.1").unwrap();
        let market =
            Market::from_decimals(3, &["2.2", "2.2", "1"], &["1.1", "1.1", "1"], grid).unwrap();
        let mech = MechanismId::LowestEfValuation { tie_order: vec![0, 2, 1] };
        let truth_out = mech.run(&market.truth_profile(), &market.params()).unwrap();
        let eq_profile = market.profile_from_decimals(&["1", "1.1", "1"]).unwrap();
        let eq_out = mech.run(&eq_profile, &market.params()).unwrap();
        let check = check_welfare_bound(&market, &truth_out, &eq_out, 1);
        assert!(check.holds);
        // Both outcomes reach welfare 3.3: zero loss against B* = 2.2.
        assert_eq!(check.rhs, Ratio::from_integer(0));
        assert_eq!(check.lhs, Ratio::from_integer(22));
    }

    #[test]
    fn revenue_bound_degenerates_under_full_budget_share() {
        let grid = GridSpec::uniform("1").unwrap();
        let market = Market::from_decimals(1, &["4", "4"], &["4", "1"], grid).unwrap();
        let truth_out = MechanismId::MaxRevenue.run(&market.truth_profile(), &market.params()).unwrap();
        let eq_profile = market.profile_from_decimals(&["1", "1"]).unwrap();
        let eq_out = MechanismId::MaxRevenue.run(&eq_profile, &market.params()).unwrap();
        let check = check_revenue_bound(&market, &truth_out, &eq_out, 1);
        // β = 1 and α = 1: the guarantee collapses, recorded as vacuous.
        assert!(check.vacuous);
        assert!(check.holds);
        assert_eq!(revenue(&eq_out), 1);
    }

    #[test]
    fn aon_truth_revenue_bound() {
        let grid = GridSpec::from_decimals("0.1", "0.1", "0.5").unwrap();
        let market = Market::from_decimals(
            10,
            &["2", "2", "6", "1", "2"],
            &["2", "2", "1", "0.5", "0.5"],
            grid,
        )
        .unwrap();
        let truth_out = MechanismId::AllOrNothing.run(&market.truth_profile(), &market.params()).unwrap();
        let check = check_aon_truth_revenue(&market, &truth_out);
        assert!(check.holds && !check.vacuous);
        // REV(M) = 10 with α = 0.6: the bound demands at least 4.
        assert_eq!(check.rhs, Ratio::from_integer(40));
        assert_eq!(check.lhs, Ratio::from_integer(100));
    }

    #[test]
    fn checker_verdicts_reproducible() {
        let run = || {
            let mut src = source();
            check_price_monotone(&MechanismId::AllOrNothing, &mut src, 500, 99)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn ef_sanity_for_min_price_under_sampled_profiles() {
        // The consistency perturbation keeps buyers strictly classed, which
        // relies on min_envy_free_price never returning a non-positive
        // price.
        let mut rng = test_rng(31);
        let mut src = source();
        for _ in 0..200 {
            let (market, profile) = src(&mut rng);
            assert!(min_envy_free_price(&profile, &market.params()) > 0);
        }
    }
}
