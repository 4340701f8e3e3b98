//! Brute-force reference implementations.
//!
//! These re-derive best responses, equilibrium sets and the maximum
//! envy-free revenue with literal linear scans and first-principles utility
//! arithmetic, sharing none of the search shortcuts of the optimized paths
//! (no binary search, no feasibility-monotonicity pruning). They exist so a
//! bug in a clever path cannot hide: the test suite requires exact agreement
//! on every in-budget input. Inputs larger than the configured budgets are
//! refused rather than approximated.

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::market::{Market, MarketParams, Profile};
use crate::mechanisms::PricingMechanism;
use crate::money::Utility;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Size limits beyond which the oracle refuses to run.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_profiles: u128,
    pub max_grid_points: i64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_profiles: 1_000_000, max_grid_points: 100_000 }
    }
}

/// Utility recomputed from first principles, independently of the pricing
/// module.
fn raw_utility(true_value: i64, budget: i64, price: i64, units: u64) -> Utility {
    if (price as i128) * (units as i128) > budget as i128 {
        Utility::Bottom
    } else {
        Utility::Value((true_value as i128 - price as i128) * units as i128)
    }
}

/// Literal scan of every input-grid report in `[0, cap]` for buyer `buyer`,
/// returning the strictly improving report with maximal utility (ties to
/// the lowest resulting price, then the lowest report) together with that
/// utility.
pub fn oracle_best_response(
    mech: &dyn PricingMechanism,
    market: &Market,
    profile: &Profile,
    buyer: usize,
    cap: i64,
    budget: &OracleBudget,
) -> Result<Option<(i64, Utility)>, OracleError> {
    let eps = market.grid().input_step();
    if cap / eps + 1 > budget.max_grid_points {
        return Err(OracleError::BudgetExceeded(format!("{} grid reports", cap / eps + 1)));
    }
    let params = market.params();
    let v = market.valuations()[buyer];
    let b = market.budgets()[buyer];

    let current_out = mech
        .run(profile, &params)
        .map_err(|e| OracleError::Dynamics(DynamicsError::Mechanism(e)))?;
    let current = raw_utility(v, b, current_out.price(), current_out.units_of(buyer));

    let mut best: Option<(i64, i64, Utility)> = None; // (report, price, utility)
    let mut r = 0;
    while r <= cap {
        if r != profile.report(buyer) {
            let out = mech
                .run(&profile.with_report(buyer, r), &params)
                .map_err(|e| OracleError::Dynamics(DynamicsError::Mechanism(e)))?;
            let u = raw_utility(v, b, out.price(), out.units_of(buyer));
            let admit = match &best {
                None => u > current,
                Some((_, bp, bu)) => u > *bu || (u == *bu && out.price() < *bp),
            };
            if admit {
                best = Some((r, out.price(), u));
            }
        }
        r += eps;
    }
    Ok(best.map(|(r, _, u)| (r, u)))
}

/// Full cartesian scan of the profile space `[0, cap]^n`, checking every
/// unilateral deviation of every buyer directly. Returns the pure Nash
/// equilibria.
pub fn oracle_equilibria(
    mech: &dyn PricingMechanism,
    market: &Market,
    cap: i64,
    budget: &OracleBudget,
) -> Result<Vec<Profile>, OracleError> {
    let eps = market.grid().input_step();
    let n = market.buyer_count();
    let per = (cap / eps + 1) as u128;
    let total = per.saturating_pow(n as u32);
    if total > budget.max_profiles {
        return Err(OracleError::BudgetExceeded(format!("{total} profiles")));
    }
    let params = market.params();
    let run = |p: &Profile| {
        mech.run(p, &params).map_err(|e| OracleError::Dynamics(DynamicsError::Mechanism(e)))
    };

    let mut results = Vec::new();
    let mut indices = vec![0i64; n];
    'outer: loop {
        let profile =
            market.profile(indices.iter().map(|&k| k * eps).collect()).expect("grid profile");
        let mut is_nash = true;
        'buyers: for i in 0..n {
            let v = market.valuations()[i];
            let b = market.budgets()[i];
            let here = run(&profile)?;
            let u_here = raw_utility(v, b, here.price(), here.units_of(i));
            let mut r = 0;
            while r <= cap {
                if r != profile.report(i) {
                    let out = run(&profile.with_report(i, r))?;
                    if raw_utility(v, b, out.price(), out.units_of(i)) > u_here {
                        is_nash = false;
                        break 'buyers;
                    }
                }
                r += eps;
            }
        }
        if is_nash {
            results.push(profile);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            if (indices[pos] + 1) * eps <= cap {
                indices[pos] += 1;
                for idx in indices.iter_mut().skip(pos + 1) {
                    *idx = 0;
                }
                break;
            }
            indices[pos] = 0;
        }
    }
    Ok(results)
}

/// Linear scan of every output-grid price in `(0, max report]`, recomputing
/// envy-freeness and the attainable revenue from scratch at each point.
/// Ties go to the highest price; a market with no interested buyer at any
/// candidate yields `(output_step, 0)`.
pub fn oracle_max_revenue(
    profile: &Profile,
    params: &MarketParams<'_>,
    budget: &OracleBudget,
) -> Result<(i64, i64), OracleError> {
    let delta = params.grid.output_step();
    let max_report = profile.max_report();
    if max_report / delta + 1 > budget.max_grid_points {
        return Err(OracleError::BudgetExceeded(format!("{} grid prices", max_report / delta + 1)));
    }
    let mut best = (delta, 0i64);
    let mut price = delta;
    while price <= max_report {
        let mut hungry_units: u64 = 0;
        let mut interested_units: u64 = 0;
        for (&r, &b) in profile.reports().iter().zip(params.budgets) {
            let afford = ((b / price) as u64).min(params.supply);
            if r > price {
                hungry_units += afford;
                interested_units = interested_units.saturating_add(afford);
            } else if r == price {
                interested_units = interested_units.saturating_add(afford);
            }
        }
        if hungry_units <= params.supply {
            let units = interested_units.min(params.supply);
            let rev = i64::try_from(price as i128 * units as i128).expect("revenue fits");
            if rev >= best.1 {
                best = (price, rev);
            }
        }
        price += delta;
    }
    Ok(best)
}
