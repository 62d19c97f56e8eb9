//! Exact money on the ε-grid.
//!
//! Every price, value and revenue in the engine is a whole number of grid
//! units; one unit is ε = 1/`denom` of a currency unit. Nothing in here ever
//! touches floating point.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// A non-negative amount of money, counted in ε-units.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub u64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn units(self) -> u64 {
        self.0
    }

    /// Subtraction that fails instead of wrapping below zero.
    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn saturating_sub(self, rhs: Money) -> Money {
        Money(self.0.saturating_sub(rhs.0))
    }

    /// Signed difference `self - rhs`.
    pub fn diff(self, rhs: Money) -> i128 {
        self.0 as i128 - rhs.0 as i128
    }

    /// The amount in currency units, `units / denom`.
    pub fn to_currency(self, denom: u64) -> Ratio<u64> {
        Ratio::new(self.0, denom)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

/// Panics on underflow; use [`Money::checked_sub`] where that can happen.
impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0.checked_sub(rhs.0).expect("money underflow"))
    }
}

impl Mul<u64> for Money {
    type Output = Money;
    fn mul(self, rhs: u64) -> Money {
        Money(self.0 * rhs)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

impl From<u64> for Money {
    fn from(units: u64) -> Self {
        Money(units)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ε", self.0)
    }
}

/// The price grid: ε = 1/`denom`, and a ceiling on every price.
///
/// The cap is at least every value in a valid instance. With the default cap,
/// one unit above the largest value, a price at the cap is the engine's
/// "not offered": such a unit never sells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub denom: u64,
    pub price_cap: Money,
}

impl GridSpec {
    pub fn new(denom: u64, price_cap: Money) -> Self {
        GridSpec { denom, price_cap }
    }

    /// Grid whose cap is one unit above `max_value`.
    pub fn with_default_cap(denom: u64, max_value: Money) -> Self {
        GridSpec {
            denom,
            price_cap: Money(max_value.0 + 1),
        }
    }

    /// Number of admissible prices, `0..=price_cap`.
    pub fn points(&self) -> u64 {
        self.price_cap.0 + 1
    }

    /// All grid prices in increasing order.
    pub fn prices(&self) -> impl DoubleEndedIterator<Item = Money> + Clone {
        (0..=self.price_cap.0).map(Money)
    }

    /// Converts a currency amount to grid units, if it lies on the grid.
    pub fn units_of(&self, amount: Ratio<u64>) -> Option<Money> {
        let scaled = amount * self.denom;
        scaled.is_integer().then(|| Money(scaled.to_integer()))
    }

    /// Largest grid amount not exceeding `amount`.
    pub fn floor_units(&self, amount: Ratio<u64>) -> Money {
        Money((amount * self.denom).floor().to_integer())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_conversions_are_exact() {
        let grid = GridSpec::new(2, Money(11));
        assert_eq!(grid.units_of(Ratio::new(5, 2)), Some(Money(5)));
        assert_eq!(grid.units_of(Ratio::new(1, 3)), None);
        assert_eq!(grid.floor_units(Ratio::new(1, 3)), Money(0));
        assert_eq!(grid.points(), 12);
        assert_eq!(Money(7).to_currency(2), Ratio::new(7, 2));
    }

    #[test]
    fn checked_sub_refuses_negative() {
        assert_eq!(Money(3).checked_sub(Money(4)), None);
        assert_eq!(Money(3).diff(Money(4)), -1);
        assert_eq!(Money(3).saturating_sub(Money(4)), Money::ZERO);
    }
}
