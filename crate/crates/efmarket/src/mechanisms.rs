//! The envy-free pricing mechanisms.
//!
//! Every mechanism deterministically maps a reported profile plus the public
//! market parameters (budgets, supply, grids) to an envy-free outcome. True
//! valuations are not part of the input type, so a mechanism cannot read
//! them even by accident.
//!
//! Hungry buyers always receive exactly their demand and uninterested buyers
//! nothing; mechanisms differ in the price rule and in how leftover supply
//! is split among the semi-hungry buyers (greedy fills versus the
//! all-or-nothing rule).

use thiserror::Error;

use crate::market::{BuyerStatus, Interest, MarketParams, Outcome, Profile};
use crate::pricing::{
    buyer_statuses, is_envy_free_unchecked, min_envy_free_price, revenue_bounds_at_price,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MechanismError {
    #[error("profile has {got} reports but the market has {expected} buyers")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mechanism requires at least {needs} buyers")]
    TooFewBuyers { needs: usize },
    #[error("mechanism posts reported values as prices and needs the input grid to refine the output grid")]
    GridMismatch,
    #[error("tie order must be a permutation of the buyer indices")]
    BadTieOrder,
    #[error("unsupported market: {0}")]
    UnsupportedMarket(String),
}

/// A deterministic map from reports to an envy-free outcome.
pub trait PricingMechanism {
    fn name(&self) -> String;
    fn run(&self, profile: &Profile, params: &MarketParams<'_>) -> Result<Outcome, MechanismError>;
}

/// The concrete mechanisms, addressable by name in configs and on the CLI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MechanismId {
    AllOrNothing,
    AlmostTop,
    MaxRevenue,
    MaxWelfareGreedy,
    SecondHighestGreedy,
    LowestEfValuation { tie_order: Vec<usize> },
    CycleAdversarial,
}

impl MechanismId {
    pub fn base_name(&self) -> &'static str {
        match self {
            MechanismId::AllOrNothing => "AllOrNothing",
            MechanismId::AlmostTop => "AlmostTop",
            MechanismId::MaxRevenue => "MaxRevenue",
            MechanismId::MaxWelfareGreedy => "MaxWelfareGreedy",
            MechanismId::SecondHighestGreedy => "SecondHighestGreedy",
            MechanismId::LowestEfValuation { .. } => "LowestEFValuation",
            MechanismId::CycleAdversarial => "CycleAdversarial",
        }
    }

    /// Resolves a mechanism by CLI/config name. `tie_order` (0-based buyer
    /// indices) is required by `LowestEFValuation` and ignored elsewhere.
    pub fn by_name(name: &str, tie_order: Option<Vec<usize>>) -> Option<MechanismId> {
        match name {
            "AllOrNothing" => Some(MechanismId::AllOrNothing),
            "AlmostTop" => Some(MechanismId::AlmostTop),
            "MaxRevenue" => Some(MechanismId::MaxRevenue),
            "MaxWelfareGreedy" => Some(MechanismId::MaxWelfareGreedy),
            "SecondHighestGreedy" => Some(MechanismId::SecondHighestGreedy),
            "LowestEFValuation" => Some(MechanismId::LowestEfValuation {
                tie_order: tie_order.unwrap_or_default(),
            }),
            "CycleAdversarial" => Some(MechanismId::CycleAdversarial),
            _ => None,
        }
    }

    /// The six mechanisms defined for arbitrary markets (everything but the
    /// two-buyer cycle construction). `n` sizes the default tie order.
    pub fn general_mechanisms(n: usize) -> Vec<MechanismId> {
        vec![
            MechanismId::AllOrNothing,
            MechanismId::AlmostTop,
            MechanismId::MaxRevenue,
            MechanismId::MaxWelfareGreedy,
            MechanismId::SecondHighestGreedy,
            MechanismId::LowestEfValuation { tie_order: (0..n).collect() },
        ]
    }
}

impl PricingMechanism for MechanismId {
    fn name(&self) -> String {
        self.base_name().to_string()
    }

    fn run(&self, profile: &Profile, params: &MarketParams<'_>) -> Result<Outcome, MechanismError> {
        if profile.len() != params.buyer_count() {
            return Err(MechanismError::DimensionMismatch {
                expected: params.buyer_count(),
                got: profile.len(),
            });
        }
        match self {
            MechanismId::AllOrNothing => run_all_or_nothing(profile, params),
            MechanismId::AlmostTop => run_almost_top(profile, params),
            MechanismId::MaxRevenue => run_max_revenue(profile, params),
            MechanismId::MaxWelfareGreedy => run_max_welfare_greedy(profile, params),
            MechanismId::SecondHighestGreedy => run_second_highest_greedy(profile, params),
            MechanismId::LowestEfValuation { tie_order } => {
                run_lowest_ef_valuation(profile, params, tie_order)
            }
            MechanismId::CycleAdversarial => run_cycle_adversarial(profile, params),
        }
    }
}

/// Hungry buyers get their demand; semi-hungry buyers are filled greedily in
/// the given order, each receiving as many units as the leftover supply
/// allows.
fn greedy_fill(statuses: &[BuyerStatus], order: &[usize], supply: u64) -> Vec<u64> {
    let mut alloc = vec![0u64; statuses.len()];
    let mut remaining = supply;
    for (i, s) in statuses.iter().enumerate() {
        if s.interest == Interest::Hungry {
            alloc[i] = s.max_units;
            remaining -= s.max_units;
        }
    }
    for &i in order {
        if statuses[i].interest == Interest::SemiHungry {
            let take = statuses[i].max_units.min(remaining);
            alloc[i] = take;
            remaining -= take;
        }
    }
    alloc
}

/// Hungry buyers get their demand; semi-hungry buyers, in index order, get
/// their full target or nothing. Processing continues past buyers that
/// receive zero.
fn all_or_nothing_fill(statuses: &[BuyerStatus], supply: u64) -> Vec<u64> {
    let mut alloc = vec![0u64; statuses.len()];
    let mut remaining = supply;
    for (i, s) in statuses.iter().enumerate() {
        if s.interest == Interest::Hungry {
            alloc[i] = s.max_units;
            remaining -= s.max_units;
        }
    }
    for (i, s) in statuses.iter().enumerate() {
        if s.interest == Interest::SemiHungry && s.max_units <= remaining {
            alloc[i] = s.max_units;
            remaining -= s.max_units;
        }
    }
    alloc
}

fn canonical_idle(params: &MarketParams<'_>) -> Outcome {
    Outcome::new(params.grid.output_step(), vec![0; params.buyer_count()])
}

/// Minimum envy-free price; semi-hungry buyers receive their full affordable
/// bundle or nothing, in index order.
pub fn run_all_or_nothing(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    let price = min_envy_free_price(profile, params);
    let statuses = buyer_statuses(profile, params, price);
    Ok(Outcome::new(price, all_or_nothing_fill(&statuses, params.supply)))
}

/// Price equals the top report, lowered by one input step when that stays a
/// positive envy-free price; greedy fill in index order.
pub fn run_almost_top(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    if !params.grid.input_refines_output() {
        return Err(MechanismError::GridMismatch);
    }
    let top = profile.max_report();
    if top <= 0 {
        return Ok(canonical_idle(params));
    }
    let candidate = top - params.grid.input_step();
    let price = if candidate >= params.grid.output_step()
        && is_envy_free_unchecked(profile, params, candidate)
    {
        candidate
    } else {
        top
    };
    let statuses = buyer_statuses(profile, params, price);
    let order: Vec<usize> = (0..profile.len()).collect();
    Ok(Outcome::new(price, greedy_fill(&statuses, &order, params.supply)))
}

/// Highest envy-free grid price in `(0, max report]` maximizing the
/// attainable revenue; semi-hungry buyers are filled lexicographically, each
/// up to its full bundle, which realizes that revenue while allocating to as
/// few buyers as the ordering allows.
pub fn run_max_revenue(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    let delta = params.grid.output_step();
    let max_report = profile.max_report();
    if max_report <= 0 {
        return Ok(canonical_idle(params));
    }
    let lo = min_envy_free_price(profile, params);
    let hi = params.grid.round_down_to_output(max_report);
    if lo > hi {
        // No envy-free grid price sells anything; post the lowest one.
        let statuses = buyer_statuses(profile, params, lo);
        let order: Vec<usize> = (0..profile.len()).collect();
        return Ok(Outcome::new(lo, greedy_fill(&statuses, &order, params.supply)));
    }
    let mut best = (lo, 0i64);
    let mut price = lo;
    while price <= hi {
        let (_, rev_max) = revenue_bounds_at_price(profile, params, price)
            .expect("price at or above the minimum envy-free price");
        if rev_max >= best.1 {
            best = (price, rev_max);
        }
        price += delta;
    }
    let statuses = buyer_statuses(profile, params, best.0);
    let order: Vec<usize> = (0..profile.len()).collect();
    Ok(Outcome::new(best.0, greedy_fill(&statuses, &order, params.supply)))
}

/// Lowest envy-free grid price maximizing report-welfare (hungry buyers at
/// full demand, leftover supply to semi-hungry buyers); greedy fill in index
/// order.
pub fn run_max_welfare_greedy(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    let delta = params.grid.output_step();
    let max_report = profile.max_report();
    if max_report <= 0 {
        return Ok(canonical_idle(params));
    }
    let lo = min_envy_free_price(profile, params);
    let hi = params.grid.round_down_to_output(max_report);
    let mut best_price = lo;
    let mut best_welfare = i128::MIN;
    let mut price = lo;
    while price <= hi {
        let statuses = buyer_statuses(profile, params, price);
        let mut hungry_units: u64 = 0;
        let mut welfare: i128 = 0;
        let mut semi_units: u64 = 0;
        for (i, s) in statuses.iter().enumerate() {
            match s.interest {
                Interest::Hungry => {
                    hungry_units += s.max_units;
                    welfare += profile.report(i) as i128 * s.max_units as i128;
                }
                Interest::SemiHungry => semi_units = semi_units.saturating_add(s.max_units),
                Interest::Uninterested => {}
            }
        }
        let leftover = params.supply - hungry_units;
        welfare += price as i128 * semi_units.min(leftover) as i128;
        if welfare > best_welfare {
            best_welfare = welfare;
            best_price = price;
        }
        price += delta;
    }
    let statuses = buyer_statuses(profile, params, best_price);
    let order: Vec<usize> = (0..profile.len()).collect();
    Ok(Outcome::new(best_price, greedy_fill(&statuses, &order, params.supply)))
}

/// Price equals the second-highest report, rounded up to the smallest
/// feasible output-grid price; greedy fill in index order.
pub fn run_second_highest_greedy(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    if profile.len() < 2 {
        return Err(MechanismError::TooFewBuyers { needs: 2 });
    }
    let mut sorted: Vec<i64> = profile.reports().to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let second = sorted[1];
    // Smallest envy-free output-grid price at or above the second-highest
    // report (envy-free prices are upward closed).
    let price = params.grid.round_up_to_output(second).max(min_envy_free_price(profile, params));
    let statuses = buyer_statuses(profile, params, price);
    let order: Vec<usize> = (0..profile.len()).collect();
    Ok(Outcome::new(price, greedy_fill(&statuses, &order, params.supply)))
}

/// Price equals the lowest reported valuation that is an envy-free price
/// (the highest report always qualifies); greedy fill in the fixed tie
/// order.
pub fn run_lowest_ef_valuation(
    profile: &Profile,
    params: &MarketParams<'_>,
    tie_order: &[usize],
) -> Result<Outcome, MechanismError> {
    if !params.grid.input_refines_output() {
        return Err(MechanismError::GridMismatch);
    }
    let n = profile.len();
    let mut seen = vec![false; n];
    if tie_order.len() != n {
        return Err(MechanismError::BadTieOrder);
    }
    for &i in tie_order {
        if i >= n || seen[i] {
            return Err(MechanismError::BadTieOrder);
        }
        seen[i] = true;
    }
    let mut candidates: Vec<i64> = profile.reports().iter().copied().filter(|&r| r > 0).collect();
    if candidates.is_empty() {
        return Ok(canonical_idle(params));
    }
    candidates.sort_unstable();
    candidates.dedup();
    let price = candidates
        .iter()
        .copied()
        .find(|&c| is_envy_free_unchecked(profile, params, c))
        .unwrap_or(profile.max_report());
    let statuses = buyer_statuses(profile, params, price);
    Ok(Outcome::new(price, greedy_fill(&statuses, tie_order, params.supply)))
}

/// The fixed two-buyer price table that makes best responses cycle from
/// non-truthful profiles; outside the table the price is the top report plus
/// 100, where nobody is interested.
pub fn run_cycle_adversarial(
    profile: &Profile,
    params: &MarketParams<'_>,
) -> Result<Outcome, MechanismError> {
    if profile.len() != 2 {
        return Err(MechanismError::TooFewBuyers { needs: 2 });
    }
    if !params.grid.input_refines_output() {
        return Err(MechanismError::GridMismatch);
    }
    let money = |s: &str| {
        params
            .grid
            .parse_money(s)
            .map_err(|_| MechanismError::UnsupportedMarket(format!("grid cannot express {s}")))
    };
    let b = money("1.5")?;
    if params.budgets != [b, b] {
        return Err(MechanismError::UnsupportedMarket("budgets must be (1.5, 1.5)".into()));
    }
    if params.supply < 2 {
        return Err(MechanismError::UnsupportedMarket("supply must be at least 2".into()));
    }
    let table = [
        ((money("0.1")?, money("0.3")?), money("0.2")?),
        ((money("3")?, money("0.3")?), money("0.9")?),
        ((money("3")?, money("2")?), money("1.5")?),
        ((money("0.1")?, money("2")?), money("0.5")?),
    ];
    let key = (profile.report(0), profile.report(1));
    let price = match table.iter().find(|(k, _)| *k == key) {
        Some((_, p)) => *p,
        None => profile.max_report() + money("100")?,
    };
    if !params.grid.is_output_multiple(price) {
        return Err(MechanismError::UnsupportedMarket("price table is off the output grid".into()));
    }
    let statuses = buyer_statuses(profile, params, price);
    let order: Vec<usize> = (0..profile.len()).collect();
    Ok(Outcome::new(price, greedy_fill(&statuses, &order, params.supply)))
}
