//! Market, profile and outcome types.

use num_rational::Ratio;

use crate::money::{GridSpec, MoneyError};

/// How a buyer relates to a posted price under its reported valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interest {
    /// Report strictly above the price: demands the maximum affordable bundle.
    Hungry,
    /// Report equal to the price: indifferent among all affordable bundles.
    SemiHungry,
    /// Report strictly below the price: demands nothing.
    Uninterested,
}

/// A buyer's demand at a price: its interest class plus the largest element
/// of its demand set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuyerStatus {
    pub interest: Interest,
    pub max_units: u64,
}

impl BuyerStatus {
    pub fn is_interested(&self) -> bool {
        !matches!(self.interest, Interest::Uninterested)
    }
}

/// The ground truth an experiment runs against: supply, budgets, true
/// valuations and the money grids. All money fields are in atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Market {
    supply: u64,
    budgets: Vec<i64>,
    valuations: Vec<i64>,
    grid: GridSpec,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error(transparent)]
    Money(#[from] MoneyError),
    #[error("a market needs at least one buyer and one unit of supply")]
    Empty,
    #[error("budgets and valuations must have the same length")]
    LengthMismatch,
    #[error("budgets must be positive")]
    NonPositiveBudget,
    #[error("valuation {0} is not on the input grid")]
    ValuationOffGrid(String),
    #[error("report {0} is not on the input grid")]
    ReportOffGrid(String),
    #[error("profile has {got} reports but the market has {expected} buyers")]
    ProfileLength { expected: usize, got: usize },
}

impl Market {
    /// Budgets and valuations are in atoms; valuations must sit on the input
    /// grid.
    pub fn new(
        supply: u64,
        budgets: Vec<i64>,
        valuations: Vec<i64>,
        grid: GridSpec,
    ) -> Result<Self, MarketError> {
        if supply == 0 || budgets.is_empty() {
            return Err(MarketError::Empty);
        }
        if budgets.len() != valuations.len() {
            return Err(MarketError::LengthMismatch);
        }
        if budgets.iter().any(|&b| b <= 0) {
            return Err(MarketError::NonPositiveBudget);
        }
        if let Some(&v) = valuations.iter().find(|&&v| v < 0 || !grid.is_input_multiple(v)) {
            return Err(MarketError::ValuationOffGrid(grid.render_money(v)));
        }
        Ok(Market { supply, budgets, valuations, grid })
    }

    /// Convenience constructor from decimal literals.
    pub fn from_decimals(
        supply: u64,
        budgets: &[&str],
        valuations: &[&str],
        grid: GridSpec,
    ) -> Result<Self, MarketError> {
        let b = budgets.iter().map(|s| grid.parse_money(s)).collect::<Result<Vec<_>, _>>()?;
        let v = valuations.iter().map(|s| grid.parse_money(s)).collect::<Result<Vec<_>, _>>()?;
        Market::new(supply, b, v, grid)
    }

    pub fn buyer_count(&self) -> usize {
        self.budgets.len()
    }

    pub fn supply(&self) -> u64 {
        self.supply
    }

    pub fn budgets(&self) -> &[i64] {
        &self.budgets
    }

    pub fn valuations(&self) -> &[i64] {
        &self.valuations
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn max_budget(&self) -> i64 {
        *self.budgets.iter().max().expect("non-empty")
    }

    pub fn max_valuation(&self) -> i64 {
        *self.valuations.iter().max().expect("non-empty")
    }

    /// The public side of the market: everything a mechanism may read.
    pub fn params(&self) -> MarketParams<'_> {
        MarketParams { supply: self.supply, budgets: &self.budgets, grid: &self.grid }
    }

    /// The truth-telling profile `s = v`.
    pub fn truth_profile(&self) -> Profile {
        Profile { reports: self.valuations.clone() }
    }

    pub fn profile(&self, reports: Vec<i64>) -> Result<Profile, MarketError> {
        if reports.len() != self.buyer_count() {
            return Err(MarketError::ProfileLength {
                expected: self.buyer_count(),
                got: reports.len(),
            });
        }
        if let Some(&r) = reports.iter().find(|&&r| r < 0 || !self.grid.is_input_multiple(r)) {
            return Err(MarketError::ReportOffGrid(self.grid.render_money(r)));
        }
        Ok(Profile { reports })
    }

    pub fn profile_from_decimals(&self, reports: &[&str]) -> Result<Profile, MarketError> {
        let r = reports.iter().map(|s| self.grid.parse_money(s)).collect::<Result<Vec<_>, _>>()?;
        self.profile(r)
    }
}

/// The mechanism-visible market parameters. True valuations are deliberately
/// absent: a mechanism only ever sees reports, budgets, supply and grids.
#[derive(Debug, Clone, Copy)]
pub struct MarketParams<'a> {
    pub supply: u64,
    pub budgets: &'a [i64],
    pub grid: &'a GridSpec,
}

impl MarketParams<'_> {
    pub fn buyer_count(&self) -> usize {
        self.budgets.len()
    }
}

/// The reported valuations currently on the table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    reports: Vec<i64>,
}

impl Profile {
    pub fn reports(&self) -> &[i64] {
        &self.reports
    }

    pub fn report(&self, buyer: usize) -> i64 {
        self.reports[buyer]
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn max_report(&self) -> i64 {
        *self.reports.iter().max().expect("non-empty")
    }

    /// The same profile with buyer `i`'s report replaced. The caller is
    /// responsible for keeping the report on the input grid.
    pub fn with_report(&self, buyer: usize, report: i64) -> Profile {
        let mut reports = self.reports.clone();
        reports[buyer] = report;
        Profile { reports }
    }
}

/// A unit price plus an allocation vector, as produced by a mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    price: i64,
    allocation: Vec<u64>,
}

impl Outcome {
    pub fn new(price: i64, allocation: Vec<u64>) -> Self {
        debug_assert!(price > 0);
        Outcome { price, allocation }
    }

    /// Price in atoms.
    pub fn price(&self) -> i64 {
        self.price
    }

    pub fn allocation(&self) -> &[u64] {
        &self.allocation
    }

    pub fn units_of(&self, buyer: usize) -> u64 {
        self.allocation[buyer]
    }

    pub fn total_units(&self) -> u64 {
        self.allocation.iter().sum()
    }
}

/// Welfare/revenue metrics of an outcome against the market-wide optima.
/// Money fields are in atoms; the two ratios are exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsReport {
    pub social_welfare: i64,
    pub revenue: i64,
    /// Best welfare achievable over envy-free pricings at the truth profile.
    pub optimal_welfare: i64,
    /// Maximum envy-free revenue of the market (at the truth profile).
    pub max_ef_revenue: i64,
    /// Budget share α = B* / REV(M).
    pub budget_share: Ratio<i64>,
    pub max_budget: i64,
    /// Per-instance revenue ratio β = REV_mech(truth) / REV(M).
    pub beta_instance: Ratio<i64>,
}
