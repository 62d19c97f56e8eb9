//! Homogeneous valuations with decreasing marginals.

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::money::Money;

/// A buyer valuation over `0..=n` identical units, stored as its marginals
/// `m_1 ≥ m_2 ≥ … ≥ m_n`. `v(0) = 0` is implicit.
///
/// Construction does not enforce the ordering; [`Valuation::violations`]
/// reports it so instance validation can list every problem at once.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Money>", into = "Vec<Money>")]
pub struct Valuation {
    marginals: Vec<Money>,
    prefix: Vec<Money>,
}

impl Valuation {
    pub fn new(marginals: Vec<Money>) -> Self {
        let mut prefix = Vec::with_capacity(marginals.len() + 1);
        let mut acc = Money::ZERO;
        prefix.push(acc);
        for &m in &marginals {
            acc += m;
            prefix.push(acc);
        }
        Valuation { marginals, prefix }
    }

    pub fn from_units(units: &[u64]) -> Self {
        Self::new(units.iter().copied().map(Money).collect())
    }

    /// Number of units `n` the valuation is defined over.
    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn marginals(&self) -> &[Money] {
        &self.marginals
    }

    /// The `k`-th marginal, 1-based. Positions past `n` are worth nothing.
    pub fn marginal(&self, k: usize) -> Money {
        debug_assert!(k >= 1);
        self.marginals.get(k - 1).copied().unwrap_or(Money::ZERO)
    }

    /// `v(q) = m_1 + … + m_q`.
    pub fn value_at(&self, q: usize) -> Result<Money, DomainError> {
        self.prefix
            .get(q)
            .copied()
            .ok_or(DomainError::QuantityOutOfRange { q, n: self.len() })
    }

    /// `v(ℓ | q) = v(q + ℓ) − v(q)`.
    pub fn conditional_value(&self, extra: usize, base: usize) -> Result<Money, DomainError> {
        let top = base
            .checked_add(extra)
            .filter(|&t| t <= self.len())
            .ok_or(DomainError::QuantityOutOfRange {
                q: base.saturating_add(extra),
                n: self.len(),
            })?;
        Ok(self.prefix[top] - self.prefix[base])
    }

    /// `v(1)`, or zero for the empty valuation.
    pub fn top_marginal(&self) -> Money {
        self.marginals.first().copied().unwrap_or(Money::ZERO)
    }

    pub fn total(&self) -> Money {
        *self.prefix.last().expect("prefix always holds v(0)")
    }

    pub fn is_non_increasing(&self) -> bool {
        self.marginals.windows(2).all(|w| w[0] >= w[1])
    }
}

impl From<Vec<Money>> for Valuation {
    fn from(marginals: Vec<Money>) -> Self {
        Valuation::new(marginals)
    }
}

impl From<Valuation> for Vec<Money> {
    fn from(v: Valuation) -> Self {
        v.marginals
    }
}
