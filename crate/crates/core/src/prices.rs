//! Posted prices and the buyer's purchases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::market::{Holding, MarketInstance};
use crate::money::Money;

/// One price per unit (or item) for every seller.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceProfile {
    prices: Vec<Vec<Money>>,
}

impl PriceProfile {
    pub fn new(prices: Vec<Vec<Money>>) -> Self {
        PriceProfile { prices }
    }

    pub fn from_units(prices: &[&[u64]]) -> Self {
        PriceProfile::new(
            prices
                .iter()
                .map(|p| p.iter().copied().map(Money).collect())
                .collect(),
        )
    }

    /// Every seller prices everything at `price`.
    pub fn uniform(market: &MarketInstance, price: Money) -> Self {
        PriceProfile::new(
            market
                .sellers
                .iter()
                .map(|s| vec![price; s.supply()])
                .collect(),
        )
    }

    /// Everything at the price cap: nothing is offered.
    pub fn at_cap(market: &MarketInstance) -> Self {
        Self::uniform(market, market.grid.price_cap)
    }

    pub fn seller_count(&self) -> usize {
        self.prices.len()
    }

    pub fn seller(&self, i: usize) -> &[Money] {
        &self.prices[i]
    }

    pub fn sellers(&self) -> &[Vec<Money>] {
        &self.prices
    }

    pub fn set_seller(&mut self, i: usize, prices: Vec<Money>) {
        self.prices[i] = prices;
    }

    /// A copy with seller `i`'s prices replaced.
    pub fn with_seller(&self, i: usize, prices: Vec<Money>) -> Self {
        let mut out = self.clone();
        out.set_seller(i, prices);
        out
    }

    pub fn is_uniform(&self, i: usize) -> bool {
        self.prices[i].windows(2).all(|w| w[0] == w[1])
    }

    pub fn max_price(&self) -> Money {
        self.prices
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(Money::ZERO)
    }

    /// Checks shape against the market and that every price is on the grid
    /// (at most the cap).
    pub fn check(&self, market: &MarketInstance) -> Result<(), DomainError> {
        if self.prices.len() != market.seller_count() {
            return Err(DomainError::NoSuchSeller(self.prices.len()));
        }
        for (i, p) in self.prices.iter().enumerate() {
            if p.len() != market.supply(i) {
                return Err(DomainError::PriceShape {
                    seller: i,
                    got: p.len(),
                    expected: market.supply(i),
                });
            }
            if let Some(idx) = p.iter().position(|&x| x > market.grid.price_cap) {
                return Err(DomainError::NoSuchUnit {
                    seller: i,
                    index: idx,
                });
            }
        }
        Ok(())
    }

    /// Canonical form: homogeneous sellers' prices sorted non-decreasing;
    /// heterogeneous sellers' prices sorted within each group of equally
    /// valued items. The buyer's outcome (welfare, per-seller revenue and
    /// quantity) is invariant under this rewriting.
    pub fn canonical(&self, market: &MarketInstance) -> Self {
        let mut out = self.clone();
        out.canonicalize(market);
        out
    }

    pub fn canonicalize(&mut self, market: &MarketInstance) {
        for (prices, seller) in self.prices.iter_mut().zip(&market.sellers) {
            match &seller.holding {
                Holding::Units(_) => prices.sort_unstable(),
                Holding::Items(values) => canonicalize_items(prices, values),
            }
        }
    }
}

fn canonicalize_items(prices: &mut [Money], values: &[Money]) {
    let mut groups: BTreeMap<Money, Vec<usize>> = BTreeMap::new();
    for (j, &v) in values.iter().enumerate() {
        groups.entry(v).or_default().push(j);
    }
    for idx in groups.values().filter(|g| g.len() > 1) {
        let mut ps: Vec<Money> = idx.iter().map(|&j| prices[j]).collect();
        ps.sort_unstable();
        for (&j, p) in idx.iter().zip(ps) {
            prices[j] = p;
        }
    }
}

/// What the buyer bought: for each seller, the indices (into that seller's
/// price vector) of the units or items taken, in buying order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Purchase {
    bought: Vec<Vec<usize>>,
}

impl Purchase {
    pub fn empty(sellers: usize) -> Self {
        Purchase {
            bought: vec![Vec::new(); sellers],
        }
    }

    pub fn from_indices(bought: Vec<Vec<usize>>) -> Self {
        Purchase { bought }
    }

    pub fn push(&mut self, seller: usize, index: usize) {
        self.bought[seller].push(index);
    }

    pub fn seller(&self, i: usize) -> &[usize] {
        &self.bought[i]
    }

    pub fn quantity(&self, i: usize) -> usize {
        self.bought[i].len()
    }

    pub fn quantities(&self) -> Vec<usize> {
        self.bought.iter().map(Vec::len).collect()
    }

    /// `|X|`.
    pub fn total(&self) -> usize {
        self.bought.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn seller_count(&self) -> usize {
        self.bought.len()
    }

    /// Revenue of seller `i`: sum of the prices it was paid.
    pub fn revenue(&self, prices: &PriceProfile, i: usize) -> Money {
        self.bought[i].iter().map(|&j| prices.seller(i)[j]).sum()
    }

    pub fn revenues(&self, prices: &PriceProfile) -> Vec<Money> {
        (0..self.bought.len())
            .map(|i| self.revenue(prices, i))
            .collect()
    }

    pub fn payment(&self, prices: &PriceProfile) -> Money {
        self.revenues(prices).into_iter().sum()
    }

    /// Same bundle, ignoring the order items were taken in.
    pub fn same_bundle(&self, other: &Purchase) -> bool {
        self.bought.len() == other.bought.len()
            && self.bought.iter().zip(&other.bought).all(|(a, b)| {
                let mut a = a.clone();
                let mut b = b.clone();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            })
    }
}
