//! Exact-arithmetic simulation toolkit for envy-free unit pricing in linear
//! multi-unit markets with hard budgets.
//!
//! A seller brings `m` identical units; each buyer has a known budget and a
//! private per-unit valuation. A pricing mechanism elicits reported
//! valuations and posts a single unit price together with an allocation in
//! which every buyer receives a bundle size from its demand set (an
//! *envy-free* outcome). On top of that core the crate provides:
//!
//! - the classic mechanisms studied for this setting ([`mechanisms`]),
//! - best-response dynamics, cycle detection, pure Nash checks and
//!   exhaustive equilibrium enumeration ([`dynamics`]),
//! - empirical property checkers (price/supply monotonicity, wastefulness,
//!   consistency, truthfulness) and welfare/revenue bound validators
//!   ([`analysis`]),
//! - deliberately naive brute-force reference implementations used to
//!   certify the optimized paths ([`oracle`]).
//!
//! All money is represented as integer multiples of a global base unit, so
//! every computation is exact and reruns are bit-identical. Floating point
//! is not used anywhere.

pub mod analysis;
pub mod dynamics;
pub mod market;
pub mod mechanisms;
pub mod money;
pub mod oracle;
pub mod pricing;
pub mod sampling;

pub use market::{BuyerStatus, Interest, Market, MarketParams, MetricsReport, Outcome, Profile};
pub use mechanisms::{MechanismId, PricingMechanism};
pub use money::{GridSpec, MoneyError, Utility};
pub use pricing::PricingError;
