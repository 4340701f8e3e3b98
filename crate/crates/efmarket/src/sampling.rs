//! Seeded random market and profile generation.
//!
//! Everything samples from a ChaCha8 stream, so any (seed, config) pair
//! reproduces the same markets bit-for-bit across runs and platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::market::{Market, Profile};
use crate::money::GridSpec;

pub type SampleRng = ChaCha8Rng;

pub fn test_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ranges for random markets. Money bounds are in atoms of the grid's base
/// unit; valuations are drawn from the input grid, budgets from the base
/// grid.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub min_buyers: usize,
    pub max_buyers: usize,
    pub max_supply: u64,
    pub grid: GridSpec,
    /// Valuations are drawn from input-grid multiples in `[input_step, max]`.
    pub max_valuation: i64,
    /// Budgets are drawn from base-unit multiples in `[1, max]`.
    pub max_budget: i64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        // Coarse quarter grids keep best-response scans small.
        let grid = GridSpec::uniform("0.25").expect("valid grid");
        SamplerConfig {
            min_buyers: 1,
            max_buyers: 5,
            max_supply: 8,
            grid,
            max_valuation: 12, // 3.0
            max_budget: 16,    // 4.0
        }
    }
}

impl SamplerConfig {
    pub fn with_buyers(mut self, min: usize, max: usize) -> Self {
        self.min_buyers = min;
        self.max_buyers = max;
        self
    }
}

pub fn sample_market(cfg: &SamplerConfig, rng: &mut SampleRng) -> Market {
    let n = rng.gen_range(cfg.min_buyers..=cfg.max_buyers);
    let supply = rng.gen_range(1..=cfg.max_supply);
    let eps = cfg.grid.input_step();
    let val_steps = (cfg.max_valuation / eps).max(1);
    let valuations: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=val_steps) * eps).collect();
    let budgets: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=cfg.max_budget)).collect();
    Market::new(supply, budgets, valuations, cfg.grid.clone()).expect("sampled market is valid")
}

/// A uniformly random profile on the market's input grid with every report
/// in `[0, cap]`.
pub fn sample_profile(market: &Market, cap: i64, rng: &mut SampleRng) -> Profile {
    let eps = market.grid().input_step();
    let steps = (cap / eps).max(0);
    let reports: Vec<i64> =
        (0..market.buyer_count()).map(|_| rng.gen_range(0..=steps) * eps).collect();
    market.profile(reports).expect("sampled profile is valid")
}

/// A profile dominated by `profile`: every report independently lowered to a
/// uniformly random grid point at or below the original.
pub fn sample_dominated(market: &Market, profile: &Profile, rng: &mut SampleRng) -> Profile {
    let eps = market.grid().input_step();
    let reports: Vec<i64> = profile
        .reports()
        .iter()
        .map(|&r| {
            let steps = r / eps;
            rng.gen_range(0..=steps) * eps
        })
        .collect();
    market.profile(reports).expect("dominated profile is valid")
}
