//! Envy-free pricing primitives: demand, utility, feasibility, minimum
//! envy-free price, revenue/welfare optima and the budget share.
//!
//! A price `p` is envy-free for a profile when the hungry buyers' total
//! demand fits in the supply (semi-hungry buyers may always receive zero).
//! Envy-free feasibility is monotone in the price: raising the price only
//! shrinks hungry sets and affordable bundle sizes, so the envy-free prices
//! form an upward-closed set on the output grid. `min_envy_free_price`
//! exploits this with a binary search; the oracle module re-derives the same
//! quantities by linear scan.

use num_rational::Ratio;
use thiserror::Error;

use crate::market::{BuyerStatus, Interest, Market, MarketParams, MetricsReport, Outcome, Profile};
use crate::money::Utility;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PricingError {
    #[error("price must be strictly positive")]
    NonPositivePrice,
    #[error("price is not on the output grid")]
    PriceOffGrid,
    #[error("allocation length does not match the number of buyers")]
    DimensionMismatch,
    #[error("price is not envy-free for this profile")]
    PriceNotEnvyFree,
    #[error("the market admits no positive envy-free revenue")]
    ZeroMaxRevenue,
}

/// Demand of a single buyer at a positive price: interest class plus the
/// largest element of the demand set. The full demand set is `{max_units}`
/// for a hungry buyer, `{0..=max_units}` for a semi-hungry one and `{0}`
/// otherwise.
pub fn demand(report: i64, budget: i64, price: i64, supply: u64) -> Result<BuyerStatus, PricingError> {
    if price <= 0 {
        return Err(PricingError::NonPositivePrice);
    }
    Ok(demand_unchecked(report, budget, price, supply))
}

pub(crate) fn demand_unchecked(report: i64, budget: i64, price: i64, supply: u64) -> BuyerStatus {
    debug_assert!(price > 0);
    let interest = match report.cmp(&price) {
        std::cmp::Ordering::Greater => Interest::Hungry,
        std::cmp::Ordering::Equal => Interest::SemiHungry,
        std::cmp::Ordering::Less => Interest::Uninterested,
    };
    let max_units = match interest {
        Interest::Uninterested => 0,
        _ => ((budget / price) as u64).min(supply),
    };
    BuyerStatus { interest, max_units }
}

/// Statuses of every buyer in a profile at a price.
pub fn buyer_statuses(profile: &Profile, params: &MarketParams<'_>, price: i64) -> Vec<BuyerStatus> {
    profile
        .reports()
        .iter()
        .zip(params.budgets)
        .map(|(&r, &b)| demand_unchecked(r, b, price, params.supply))
        .collect()
}

/// Buyer utility for `units` at `price` under a true per-unit value:
/// `(v - p)·k` when affordable, bottom otherwise.
pub fn utility(true_value: i64, budget: i64, price: i64, units: u64) -> Utility {
    let cost = price as i128 * units as i128;
    if cost > budget as i128 {
        Utility::Bottom
    } else {
        Utility::Value((true_value as i128 - price as i128) * units as i128)
    }
}

fn hungry_demand(profile: &Profile, params: &MarketParams<'_>, price: i64) -> u64 {
    let mut total: u64 = 0;
    for (&r, &b) in profile.reports().iter().zip(params.budgets) {
        if r > price {
            total = total.saturating_add(((b / price) as u64).min(params.supply));
        }
    }
    total
}

pub(crate) fn is_envy_free_unchecked(profile: &Profile, params: &MarketParams<'_>, price: i64) -> bool {
    hungry_demand(profile, params, price) <= params.supply
}

/// Whether `price` (a positive output-grid point) is envy-free for the
/// profile: the hungry buyers' total demand fits in the supply.
pub fn is_envy_free_price(
    profile: &Profile,
    params: &MarketParams<'_>,
    price: i64,
) -> Result<bool, PricingError> {
    if price <= 0 {
        return Err(PricingError::NonPositivePrice);
    }
    if !params.grid.is_output_multiple(price) {
        return Err(PricingError::PriceOffGrid);
    }
    Ok(is_envy_free_unchecked(profile, params, price))
}

/// Smallest positive output-grid price that is envy-free for the profile.
/// Binary search over the grid using feasibility monotonicity; always
/// succeeds because any grid point at or above the maximum report leaves no
/// hungry buyers.
pub fn min_envy_free_price(profile: &Profile, params: &MarketParams<'_>) -> i64 {
    let delta = params.grid.output_step();
    let max_report = profile.max_report();
    if max_report <= 0 {
        return delta;
    }
    let mut lo: i64 = 1;
    let mut hi: i64 = params.grid.round_up_to_output(max_report) / delta;
    debug_assert!(is_envy_free_unchecked(profile, params, hi * delta));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if is_envy_free_unchecked(profile, params, mid * delta) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo * delta
}

/// Whether `(price, allocation)` is an envy-free outcome for the profile:
/// the total allocation fits in the supply and every buyer receives a bundle
/// from its demand set at the price.
pub fn validate_outcome(
    profile: &Profile,
    params: &MarketParams<'_>,
    outcome: &Outcome,
) -> Result<bool, PricingError> {
    if outcome.allocation().len() != profile.len() || profile.len() != params.buyer_count() {
        return Err(PricingError::DimensionMismatch);
    }
    let price = outcome.price();
    if price <= 0 || !params.grid.is_output_multiple(price) {
        return Ok(false);
    }
    if outcome.total_units() > params.supply {
        return Ok(false);
    }
    for (i, status) in buyer_statuses(profile, params, price).iter().enumerate() {
        let x = outcome.units_of(i);
        let ok = match status.interest {
            Interest::Hungry => x == status.max_units,
            Interest::SemiHungry => x <= status.max_units,
            Interest::Uninterested => x == 0,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Social welfare of an outcome under the given (true) per-unit valuations.
pub fn social_welfare(valuations: &[i64], outcome: &Outcome) -> i64 {
    assert_eq!(valuations.len(), outcome.allocation().len());
    let total: i128 = valuations
        .iter()
        .zip(outcome.allocation())
        .map(|(&v, &x)| v as i128 * x as i128)
        .sum();
    i64::try_from(total).expect("welfare fits in i64 atoms")
}

/// Revenue of an outcome: price times units sold.
pub fn revenue(outcome: &Outcome) -> i64 {
    let total = outcome.price() as i128 * outcome.total_units() as i128;
    i64::try_from(total).expect("revenue fits in i64 atoms")
}

/// Least and largest revenue attainable at an envy-free price: the least
/// serves only the hungry buyers, the largest additionally fills the
/// semi-hungry ones up to the supply.
pub fn revenue_bounds_at_price(
    profile: &Profile,
    params: &MarketParams<'_>,
    price: i64,
) -> Result<(i64, i64), PricingError> {
    if price <= 0 {
        return Err(PricingError::NonPositivePrice);
    }
    if !params.grid.is_output_multiple(price) {
        return Err(PricingError::PriceOffGrid);
    }
    if !is_envy_free_unchecked(profile, params, price) {
        return Err(PricingError::PriceNotEnvyFree);
    }
    let statuses = buyer_statuses(profile, params, price);
    let hungry: u64 = statuses
        .iter()
        .filter(|s| s.interest == Interest::Hungry)
        .map(|s| s.max_units)
        .sum();
    let interested: u64 = statuses
        .iter()
        .filter(|s| s.is_interested())
        .fold(0u64, |acc, s| acc.saturating_add(s.max_units));
    let sellable = interested.min(params.supply);
    let rev = |units: u64| i64::try_from(price as i128 * units as i128).expect("revenue fits");
    Ok((rev(hungry), rev(sellable)))
}

/// Maximum envy-free revenue over output-grid prices in `(0, max report]`,
/// with ties broken toward the highest price. Prices above the maximum
/// report sell nothing; markets with no interested buyer at any positive
/// grid price yield the canonical `(output_step, 0)`.
pub fn max_envy_free_revenue(profile: &Profile, params: &MarketParams<'_>) -> (i64, i64) {
    let delta = params.grid.output_step();
    let max_report = profile.max_report();
    if max_report <= 0 {
        return (delta, 0);
    }
    let lo = min_envy_free_price(profile, params);
    let hi = params.grid.round_down_to_output(max_report);
    let mut best = (delta, 0i64);
    let mut price = lo;
    while price <= hi {
        let (_, rev_max) = revenue_bounds_at_price(profile, params, price)
            .expect("prices at or above the minimum envy-free price are envy-free");
        if rev_max >= best.1 {
            best = (price, rev_max);
        }
        price += delta;
    }
    best
}

/// Best welfare over envy-free output-grid pricings at the truth profile:
/// hungry buyers contribute their full demand at true value, the leftover
/// supply goes to semi-hungry buyers (whose value equals the price).
pub fn optimal_ef_welfare(market: &Market) -> i64 {
    let params = market.params();
    let profile = market.truth_profile();
    let delta = params.grid.output_step();
    let max_val = market.max_valuation();
    if max_val <= 0 {
        return 0;
    }
    let lo = min_envy_free_price(&profile, &params);
    let hi = params.grid.round_down_to_output(max_val);
    let mut best: i128 = 0;
    let mut price = lo;
    while price <= hi {
        let statuses = buyer_statuses(&profile, &params, price);
        let mut hungry_units: u64 = 0;
        let mut hungry_value: i128 = 0;
        let mut semi_units: u64 = 0;
        for (i, s) in statuses.iter().enumerate() {
            match s.interest {
                Interest::Hungry => {
                    hungry_units += s.max_units;
                    hungry_value += market.valuations()[i] as i128 * s.max_units as i128;
                }
                Interest::SemiHungry => semi_units = semi_units.saturating_add(s.max_units),
                Interest::Uninterested => {}
            }
        }
        let leftover = params.supply - hungry_units;
        let welfare = hungry_value + price as i128 * semi_units.min(leftover) as i128;
        best = best.max(welfare);
        price += delta;
    }
    i64::try_from(best).expect("welfare fits in i64 atoms")
}

/// Budget share α = B* / REV(M): the fraction of the maximum envy-free
/// revenue a single budget can account for. Undefined when the market has no
/// positive envy-free revenue.
pub fn budget_share(market: &Market) -> Result<Ratio<i64>, PricingError> {
    let (_, rev) = max_envy_free_revenue(&market.truth_profile(), &market.params());
    if rev == 0 {
        return Err(PricingError::ZeroMaxRevenue);
    }
    Ok(Ratio::new(market.max_budget(), rev))
}

/// Metrics of `outcome` relative to the market optima, with the per-instance
/// revenue ratio β taken from the mechanism's truth-telling outcome.
pub fn compute_metrics(
    market: &Market,
    truth_outcome: &Outcome,
    outcome: &Outcome,
) -> Result<MetricsReport, PricingError> {
    let (_, max_rev) = max_envy_free_revenue(&market.truth_profile(), &market.params());
    if max_rev == 0 {
        return Err(PricingError::ZeroMaxRevenue);
    }
    Ok(MetricsReport {
        social_welfare: social_welfare(market.valuations(), outcome),
        revenue: revenue(outcome),
        optimal_welfare: optimal_ef_welfare(market),
        max_ef_revenue: max_rev,
        budget_share: Ratio::new(market.max_budget(), max_rev),
        max_budget: market.max_budget(),
        beta_instance: Ratio::new(revenue(truth_outcome), max_rev),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::GridSpec;
    use proptest::prelude::*;

    fn tenth() -> GridSpec {
        GridSpec::uniform("0.1").unwrap()
    }

    /// m=3, v=(1.1, 1.1), B=(1, 1): the market where no envy-free price
    /// clears all three units.
    fn tight_market() -> Market {
        Market::from_decimals(3, &["1", "1"], &["1.1", "1.1"], tenth()).unwrap()
    }

    /// m=10 with budgets (2,2,6,1,2); price examples use a 0.5 output grid.
    fn five_buyer_market() -> Market {
        let grid = GridSpec::from_decimals("0.1", "0.1", "0.5").unwrap();
        Market::from_decimals(10, &["2", "2", "6", "1", "2"], &["2", "2", "1", "0.5", "0.5"], grid)
            .unwrap()
    }

    #[test]
    fn demand_examples() {
        let g = tenth();
        let s = demand(g.parse_money("1.1").unwrap(), 10, 5, 3).unwrap();
        assert_eq!((s.interest, s.max_units), (Interest::Hungry, 2));

        let s = demand(10, 60, 20, 10).unwrap();
        assert_eq!((s.interest, s.max_units), (Interest::Uninterested, 0));

        let s = demand(10, 60, 10, 10).unwrap();
        assert_eq!((s.interest, s.max_units), (Interest::SemiHungry, 6));

        assert_eq!(demand(10, 60, 0, 10), Err(PricingError::NonPositivePrice));
        assert_eq!(demand(10, 60, -1, 10), Err(PricingError::NonPositivePrice));
    }

    #[test]
    fn utility_examples() {
        // Atoms at base 0.1: (2 - 0.2)·2 = 3.6.
        assert_eq!(utility(20, 15, 2, 2), Utility::Value(36));
        // (1 - 1.5)·1 = -0.5, exactly affordable.
        assert_eq!(utility(10, 15, 15, 1), Utility::Value(-5));
        // Two units at price 1 exceed budget 1.
        assert_eq!(utility(50, 10, 10, 2), Utility::Bottom);
        assert_eq!(utility(50, 10, 10, 0), Utility::Value(0));
    }

    #[test]
    fn envy_free_price_examples() {
        let m = tight_market();
        let p = m.truth_profile();
        assert!(!is_envy_free_price(&p, &m.params(), 5).unwrap());
        assert!(is_envy_free_price(&p, &m.params(), 6).unwrap());
        assert!(is_envy_free_price(&p, &m.params(), 12).unwrap());
        assert_eq!(is_envy_free_price(&p, &m.params(), 0), Err(PricingError::NonPositivePrice));
    }

    #[test]
    fn min_envy_free_price_examples() {
        let m = tight_market();
        assert_eq!(min_envy_free_price(&m.truth_profile(), &m.params()), 6);

        // On the 0.5 output grid the minimum envy-free price is 1.
        let m5 = five_buyer_market();
        assert_eq!(min_envy_free_price(&m5.truth_profile(), &m5.params()), 10);

        // On a 0.1 output grid the same market clears hungry demand already
        // at 0.9 (2 + 2 + 6 units ≤ 10).
        let m1 = Market::from_decimals(
            10,
            &["2", "2", "6", "1", "2"],
            &["2", "2", "1", "0.5", "0.5"],
            tenth(),
        )
        .unwrap();
        assert_eq!(min_envy_free_price(&m1.truth_profile(), &m1.params()), 9);

        let single = Market::from_decimals(1, &["2"], &["2"], tenth()).unwrap();
        assert_eq!(min_envy_free_price(&single.truth_profile(), &single.params()), 1);
    }

    #[test]
    fn binary_search_matches_linear_scan() {
        let mut rng = crate::sampling::test_rng(11);
        for _ in 0..1000 {
            let market = crate::sampling::sample_market(&crate::sampling::SamplerConfig::default(), &mut rng);
            let profile = crate::sampling::sample_profile(&market, market.max_valuation() + market.grid().input_step(), &mut rng);
            let params = market.params();
            let fast = min_envy_free_price(&profile, &params);
            // Naive scan from the first grid point upward.
            let delta = params.grid.output_step();
            let mut p = delta;
            while !is_envy_free_unchecked(&profile, &params, p) {
                p += delta;
            }
            assert_eq!(fast, p);
            // Feasibility is monotone above the minimum.
            assert!(is_envy_free_unchecked(&profile, &params, fast + delta));
        }
    }

    #[test]
    fn validate_outcome_examples() {
        let g = tenth();
        let m = Market::from_decimals(3, &["2.2", "2.2", "1"], &["1.1", "1.1", "1"], g).unwrap();
        let p = m.truth_profile();
        let good = Outcome::new(11, vec![2, 1, 0]);
        assert!(validate_outcome(&p, &m.params(), &good).unwrap());

        let tight = tight_market();
        let bad = Outcome::new(5, vec![2, 2]);
        assert!(!validate_outcome(&tight.truth_profile(), &tight.params(), &bad).unwrap());

        assert_eq!(
            validate_outcome(&p, &m.params(), &Outcome::new(11, vec![2, 1])),
            Err(PricingError::DimensionMismatch)
        );
    }

    #[test]
    fn welfare_and_revenue_examples() {
        let g = tenth();
        let vals = [11, 11, 10];
        let out = Outcome::new(11, vec![2, 1, 0]);
        assert_eq!(social_welfare(&vals, &out), 33);
        assert_eq!(revenue(&out), 33);
        assert_eq!(g.render_money(33), "3.3");

        let empty = Outcome::new(11, vec![0, 0, 0]);
        assert_eq!(social_welfare(&vals, &empty), 0);
        assert_eq!(revenue(&empty), 0);

        // Integer grid: v=(4,1), one unit sold at price 4.
        let unit = GridSpec::uniform("1").unwrap();
        let out = Outcome::new(4, vec![1, 0]);
        assert_eq!(social_welfare(&[4, 1], &out), 4);
        assert_eq!(revenue(&out), 4);
        assert_eq!(unit.render_money(4), "4");
    }

    #[test]
    fn revenue_bounds_examples() {
        let m5 = five_buyer_market();
        let p5 = m5.truth_profile();
        assert_eq!(revenue_bounds_at_price(&p5, &m5.params(), 10).unwrap(), (40, 100));

        let tight = tight_market();
        assert_eq!(revenue_bounds_at_price(&tight.truth_profile(), &tight.params(), 12).unwrap(), (0, 0));
        assert_eq!(
            revenue_bounds_at_price(&tight.truth_profile(), &tight.params(), 5),
            Err(PricingError::PriceNotEnvyFree)
        );

        let unit = GridSpec::uniform("1").unwrap();
        let m = Market::from_decimals(1, &["4", "4"], &["4", "1"], unit).unwrap();
        assert_eq!(revenue_bounds_at_price(&m.truth_profile(), &m.params(), 4).unwrap(), (0, 4));
    }

    #[test]
    fn max_envy_free_revenue_examples() {
        let m5 = five_buyer_market();
        assert_eq!(max_envy_free_revenue(&m5.truth_profile(), &m5.params()), (10, 100));

        // The 0.1 output grid exposes more candidate prices but the optimum
        // stays at price 1 with all ten units sold.
        let m1 = Market::from_decimals(
            10,
            &["2", "2", "6", "1", "2"],
            &["2", "2", "1", "0.5", "0.5"],
            tenth(),
        )
        .unwrap();
        assert_eq!(max_envy_free_revenue(&m1.truth_profile(), &m1.params()), (10, 100));

        let unit = GridSpec::uniform("1").unwrap();
        let m = Market::from_decimals(1, &["4", "4"], &["4", "1"], unit).unwrap();
        assert_eq!(max_envy_free_revenue(&m.truth_profile(), &m.params()), (4, 4));

        let idle = Market::from_decimals(1, &["1"], &["0"], tenth()).unwrap();
        assert_eq!(max_envy_free_revenue(&idle.truth_profile(), &idle.params()), (1, 0));
    }

    #[test]
    fn optimal_ef_welfare_examples() {
        let m5 = five_buyer_market();
        // 2·2 + 2·2 + 1·6 = 14.0 → 140 atoms.
        assert_eq!(optimal_ef_welfare(&m5), 140);

        let tight = tight_market();
        assert_eq!(optimal_ef_welfare(&tight), 22);

        let idle = Market::from_decimals(1, &["1"], &["0"], tenth()).unwrap();
        assert_eq!(optimal_ef_welfare(&idle), 0);
    }

    #[test]
    fn budget_share_examples() {
        let m5 = five_buyer_market();
        assert_eq!(budget_share(&m5).unwrap(), Ratio::new(3, 5));

        let single = Market::from_decimals(1, &["2"], &["2"], tenth()).unwrap();
        assert_eq!(budget_share(&single).unwrap(), Ratio::new(1, 1));

        let unit = GridSpec::uniform("1").unwrap();
        let twin = Market::from_decimals(2, &["2", "2"], &["2", "2"], unit).unwrap();
        assert_eq!(budget_share(&twin).unwrap(), Ratio::new(1, 2));

        let idle = Market::from_decimals(1, &["1"], &["0"], tenth()).unwrap();
        assert_eq!(budget_share(&idle), Err(PricingError::ZeroMaxRevenue));
    }

    #[test]
    fn revenue_bounds_are_ordered_and_budget_capped() {
        let mut rng = crate::sampling::test_rng(23);
        for _ in 0..500 {
            let market = crate::sampling::sample_market(&crate::sampling::SamplerConfig::default(), &mut rng);
            let profile = crate::sampling::sample_profile(&market, market.max_valuation(), &mut rng);
            let params = market.params();
            let delta = params.grid.output_step();
            let lo = min_envy_free_price(&profile, &params);
            let budget_total: i64 = params.budgets.iter().sum();
            let mut p = lo;
            let top = params.grid.round_up_to_output(profile.max_report().max(lo));
            while p <= top {
                let (rmin, rmax) = revenue_bounds_at_price(&profile, &params, p).unwrap();
                assert!(rmin <= rmax);
                assert!(rmax <= budget_total);
                p += delta;
            }
        }
    }

    proptest! {
        // Demand trichotomy: exactly one interest class holds, and the
        // largest affordable bundle never exceeds the budget.
        #[test]
        fn demand_trichotomy(report in 0i64..400, budget in 1i64..400, price in 1i64..400, supply in 1u64..30) {
            let s = demand(report, budget, price, supply).unwrap();
            let expected = match report.cmp(&price) {
                std::cmp::Ordering::Greater => Interest::Hungry,
                std::cmp::Ordering::Equal => Interest::SemiHungry,
                std::cmp::Ordering::Less => Interest::Uninterested,
            };
            prop_assert_eq!(s.interest, expected);
            prop_assert!(s.max_units as i128 * price as i128 <= budget as i128);
            prop_assert!(s.max_units <= supply);
            if s.is_interested() && s.max_units < supply {
                // One more unit would break the budget.
                prop_assert!((s.max_units as i128 + 1) * price as i128 > budget as i128);
            }
        }

        // Utility is bottom exactly when the bundle is unaffordable.
        #[test]
        fn utility_bottom_iff_unaffordable(v in 0i64..400, b in 1i64..400, p in 1i64..400, k in 0u64..50) {
            let u = utility(v, b, p, k);
            let affordable = p as i128 * k as i128 <= b as i128;
            prop_assert_eq!(u == Utility::Bottom, !affordable);
            if let Utility::Value(val) = u {
                prop_assert_eq!(val, (v as i128 - p as i128) * k as i128);
            }
        }
    }
}
