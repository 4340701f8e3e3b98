//! Exact money representation.
//!
//! Every monetary quantity in the system is an integer number of *atoms*,
//! where one atom is worth `base_unit` (a positive rational, typically a
//! decimal like 0.1). Reported valuations live on the input grid (multiples
//! of `input_step` atoms) and prices on the output grid (multiples of
//! `output_step` atoms). Keeping everything in integer atoms makes all
//! arithmetic exact and deterministic.

use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyError {
    #[error("invalid decimal literal `{0}`")]
    BadDecimal(String),
    #[error("`{value}` is not a non-negative multiple of the base unit")]
    OffBaseGrid { value: String },
    #[error("grid steps must be positive multiples of the base unit")]
    BadGridStep,
    #[error("base unit must be positive")]
    BadBaseUnit,
    #[error("monetary value out of range")]
    Overflow,
}

/// Parses a non-negative decimal literal such as `"1.25"` into an exact
/// rational.
pub fn parse_decimal(s: &str) -> Result<Ratio<i64>, MoneyError> {
    let bad = || MoneyError::BadDecimal(s.to_string());
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits_ok = |t: &str| t.chars().all(|c| c.is_ascii_digit());
    if !digits_ok(int_part) || !digits_ok(frac_part) || frac_part.len() > 12 {
        return Err(bad());
    }
    let int_val: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let mut den: i64 = 1;
    let mut num: i64 = int_val;
    for c in frac_part.chars() {
        let d = c.to_digit(10).unwrap() as i64;
        num = num.checked_mul(10).and_then(|n| n.checked_add(d)).ok_or(MoneyError::Overflow)?;
        den = den.checked_mul(10).ok_or(MoneyError::Overflow)?;
    }
    Ok(Ratio::new(num, den))
}

/// Renders an exact rational as a decimal string when its reduced
/// denominator is of the form 2^a·5^b, falling back to `num/den` otherwise.
pub fn render_ratio(value: Ratio<i128>) -> String {
    let num = *value.numer();
    let den = *value.denom();
    debug_assert!(den > 0);
    let mut d = den;
    let mut twos: u32 = 0;
    let mut fives: u32 = 0;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{num}/{den}");
    }
    let pow10 = twos.max(fives);
    // Scale numerator so the denominator becomes 10^pow10.
    let mut scaled = num;
    for _ in 0..pow10.saturating_sub(twos) {
        scaled *= 2;
    }
    for _ in 0..pow10.saturating_sub(fives) {
        scaled *= 5;
    }
    let sign = if scaled < 0 { "-" } else { "" };
    let mag = scaled.unsigned_abs();
    let base = 10u128.pow(pow10);
    let int_part = mag / base;
    let frac_part = mag % base;
    if frac_part == 0 {
        return format!("{sign}{int_part}");
    }
    let frac = format!("{frac_part:0width$}", width = pow10 as usize);
    let frac = frac.trim_end_matches('0');
    format!("{sign}{int_part}.{frac}")
}

/// Money grids: the base unit plus the input (report) and output (price)
/// step sizes, both integer multiples of the base unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    base_unit: Ratio<i64>,
    input_step: i64,
    output_step: i64,
}

impl GridSpec {
    /// `input_step` and `output_step` are given in atoms.
    pub fn new(base_unit: Ratio<i64>, input_step: i64, output_step: i64) -> Result<Self, MoneyError> {
        if *base_unit.numer() <= 0 || *base_unit.denom() <= 0 {
            return Err(MoneyError::BadBaseUnit);
        }
        if input_step <= 0 || output_step <= 0 {
            return Err(MoneyError::BadGridStep);
        }
        Ok(GridSpec { base_unit, input_step, output_step })
    }

    /// Builds a grid from decimal literals, e.g. `("0.1", "0.1", "0.5")`.
    pub fn from_decimals(base_unit: &str, input_step: &str, output_step: &str) -> Result<Self, MoneyError> {
        let base = parse_decimal(base_unit)?;
        if *base.numer() <= 0 {
            return Err(MoneyError::BadBaseUnit);
        }
        let eps = ratio_to_atoms(parse_decimal(input_step)?, base)
            .ok_or(MoneyError::BadGridStep)?;
        let delta = ratio_to_atoms(parse_decimal(output_step)?, base)
            .ok_or(MoneyError::BadGridStep)?;
        GridSpec::new(base, eps, delta)
    }

    /// A grid where base unit, input step and output step all coincide.
    pub fn uniform(step: &str) -> Result<Self, MoneyError> {
        GridSpec::from_decimals(step, step, step)
    }

    pub fn base_unit(&self) -> Ratio<i64> {
        self.base_unit
    }

    /// Input grid step (ε) in atoms.
    pub fn input_step(&self) -> i64 {
        self.input_step
    }

    /// Output grid step (δ) in atoms.
    pub fn output_step(&self) -> i64 {
        self.output_step
    }

    /// Whether the input grid is a refinement of the output grid, i.e. every
    /// report is also a valid price. Mechanisms that post a reported value
    /// as the price require this.
    pub fn input_refines_output(&self) -> bool {
        self.input_step % self.output_step == 0
    }

    pub fn is_input_multiple(&self, atoms: i64) -> bool {
        atoms % self.input_step == 0
    }

    pub fn is_output_multiple(&self, atoms: i64) -> bool {
        atoms % self.output_step == 0
    }

    /// Smallest output-grid value ≥ `atoms` (and ≥ one output step).
    pub fn round_up_to_output(&self, atoms: i64) -> i64 {
        let d = self.output_step;
        let q = (atoms.max(d) + d - 1) / d;
        q * d
    }

    /// Largest output-grid value ≤ `atoms`, or 0 if none is positive.
    pub fn round_down_to_output(&self, atoms: i64) -> i64 {
        (atoms / self.output_step) * self.output_step
    }

    /// Parses a decimal money literal into atoms, rejecting values that do
    /// not land on the base-unit grid.
    pub fn parse_money(&self, s: &str) -> Result<i64, MoneyError> {
        let v = parse_decimal(s)?;
        ratio_to_atoms(v, self.base_unit).ok_or(MoneyError::OffBaseGrid { value: s.to_string() })
    }

    /// Renders an atom count as an exact decimal string.
    pub fn render_money(&self, atoms: i64) -> String {
        let v = Ratio::new(atoms as i128, 1)
            * Ratio::new(*self.base_unit.numer() as i128, *self.base_unit.denom() as i128);
        render_ratio(v)
    }
}

/// value / base, provided the quotient is a non-negative integer.
fn ratio_to_atoms(value: Ratio<i64>, base: Ratio<i64>) -> Option<i64> {
    let q = value / base;
    if *q.denom() == 1 && *q.numer() >= 0 {
        Some(*q.numer())
    } else {
        None
    }
}

/// Buyer utility: `(v - p)·k` when the bundle is affordable, and a
/// distinguished bottom element (comparing below every value) otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Utility {
    Bottom,
    Value(i128),
}

impl Utility {
    pub fn value(self) -> Option<i128> {
        match self {
            Utility::Bottom => None,
            Utility::Value(v) => Some(v),
        }
    }
}
