//! Seller best responses.
//!
//! A full-information homogeneous seller searches uniform prices over the
//! whole grid. A heterogeneous seller searches per-item prices over a pruned
//! candidate set. An uncertain-demand seller maximizes expected revenue over
//! arbitrary price vectors with a dynamic program over its units.
//!
//! All three break ties the same way: higher revenue, then uniform pricing,
//! then more units sold, then the lexicographically smallest price vector.

mod hetero;
mod uncertain;

pub use hetero::{best_response_k_additive, hetero_candidates};
pub use uncertain::{best_response_uncertain, uncertain_candidates, UncertainResponse};

use serde::Serialize;

use crate::error::DomainError;
use crate::market::{Buyer, MarketInstance};
use crate::money::Money;
use crate::prices::PriceProfile;
use crate::valuation::Valuation;

/// A seller's chosen prices and what they earn against the others' prices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestResponse {
    pub prices: Vec<Money>,
    pub revenue: Money,
    pub units: usize,
}

/// `μ_i`: units a monopolist sells at its best uniform price to a buyer who
/// already holds `n − n_i` units, ties toward the larger quantity. This is
/// the largest `k ≤ n_i` maximizing `k · m_{n − n_i + k}`.
pub fn monopolist_quantity(v: &Valuation, n: usize, n_i: usize) -> usize {
    let base = n - n_i;
    let mut best = (0u64, 0usize);
    for k in 1..=n_i {
        let revenue = v.marginal(base + k).units() * k as u64;
        if revenue >= best.0 {
            best = (revenue, k);
        }
    }
    best.1
}

/// `min_i (n − n_i + μ_i)`: the quantity full-information dynamics
/// eventually never sell less than.
pub fn sold_quantity_floor(market: &MarketInstance) -> Result<usize, DomainError> {
    let v = market.valuation()?;
    let n = market.total_supply();
    Ok((0..market.seller_count())
        .map(|i| {
            let n_i = market.supply(i);
            n - n_i + monopolist_quantity(v, n, n_i)
        })
        .min()
        .unwrap_or(0))
}

/// Other sellers' units in the buyer's order, `(price, seller)`.
#[derive(Clone, Debug)]
pub(crate) struct CompetitorBook {
    units: Vec<(Money, usize)>,
    mover: usize,
}

impl CompetitorBook {
    pub(crate) fn new(p: &PriceProfile, mover: usize) -> Self {
        let mut units: Vec<(Money, usize)> = p
            .sellers()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != mover)
            .flat_map(|(i, ps)| ps.iter().map(move |&x| (x, i)))
            .collect();
        units.sort_unstable();
        CompetitorBook { units, mover }
    }

    pub(crate) fn len(&self) -> usize {
        self.units.len()
    }

    /// Price of the `r`-th competitor unit, 1-based.
    pub(crate) fn price(&self, r: usize) -> Money {
        self.units[r - 1].0
    }

    /// Competitor units the buyer considers before a mover's unit at `q`.
    pub(crate) fn before(&self, q: Money) -> usize {
        self.units.partition_point(|&u| u < (q, self.mover))
    }

    /// Longest prefix of competitor units the buyer accepts when none of the
    /// mover's units precede them.
    fn accepted_prefix(&self, v: &Valuation) -> usize {
        self.units
            .iter()
            .enumerate()
            .take_while(|(r, (p, _))| *p <= v.marginal(r + 1))
            .count()
    }
}

/// Units seller `i` sells at uniform price `q` for each `q` on the grid.
fn uniform_sales(v: &Valuation, book: &CompetitorBook, n_i: usize, q: Money, ok: usize) -> usize {
    let c = book.before(q);
    if c > ok {
        return 0;
    }
    (1..=n_i).take_while(|&j| q <= v.marginal(c + j)).count()
}

/// Best uniform price for a full-information homogeneous seller, searched
/// over every grid price up to the cap.
pub fn best_response_homogeneous(
    v: &Valuation,
    p: &PriceProfile,
    seller: usize,
    n_i: usize,
    cap: Money,
) -> BestResponse {
    let book = CompetitorBook::new(p, seller);
    let ok = book.accepted_prefix(v);
    let mut best: Option<(Money, usize, Money)> = None;
    for q in (0..=cap.units()).map(Money) {
        let units = uniform_sales(v, &book, n_i, q, ok);
        let revenue = q * units as u64;
        let better = match best {
            None => true,
            Some((r, u, _)) => (revenue, units) > (r, u),
        };
        if better {
            best = Some((revenue, units, q));
        }
    }
    let (revenue, units, q) = best.expect("grid has at least one price");
    BestResponse {
        prices: vec![q; n_i],
        revenue,
        units,
    }
}

/// Full-information best response of `seller` to the others' prices in `p`
/// (its own entry in `p` is ignored).
pub fn best_response_full_info(
    market: &MarketInstance,
    seller: usize,
    p: &PriceProfile,
) -> BestResponse {
    match &market.buyer {
        Buyer::Homogeneous(v) => best_response_homogeneous(
            v,
            p,
            seller,
            market.supply(seller),
            market.grid.price_cap,
        ),
        Buyer::KAdditive { .. } => best_response_k_additive(market, seller, p),
    }
}

/// Revenue seller `i` earns at `p` from a buyer with valuation `v`.
pub fn revenue_under(v: &Valuation, p: &PriceProfile, seller: usize) -> Money {
    crate::demand::greedy_homogeneous(v, p).revenue(p, seller)
}

/// The seller the buyer visits last when every seller prices uniformly:
/// highest price, ties toward the least preferred seller.
pub fn last_considered_seller(p: &PriceProfile) -> Option<usize> {
    p.sellers()
        .iter()
        .enumerate()
        .filter_map(|(i, ps)| ps.first().map(|&x| (x, i)))
        .max()
        .map(|(_, i)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::greedy_homogeneous;

    fn example() -> Valuation {
        Valuation::from_units(&[5, 5, 3, 1])
    }

    #[test]
    fn monopolist_quantity_examples() {
        assert_eq!(monopolist_quantity(&example(), 4, 2), 1);
        assert_eq!(monopolist_quantity(&example(), 4, 4), 2);
        assert_eq!(monopolist_quantity(&Valuation::from_units(&[3, 3, 3]), 3, 3), 3);
    }

    #[test]
    fn example_floor_is_three() {
        let m = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
        assert_eq!(sold_quantity_floor(&m).unwrap(), 3);
    }

    /// Reference: try every grid price, evaluate with the buyer directly.
    fn grid_oracle(v: &Valuation, p: &PriceProfile, i: usize, cap: u64) -> (Money, usize, Money) {
        let n_i = p.seller(i).len();
        let mut best = (Money(0), 0, Money(0));
        for q in 0..=cap {
            let trial = p.with_seller(i, vec![Money(q); n_i]);
            let x = greedy_homogeneous(v, &trial);
            let key = (x.revenue(&trial, i), x.quantity(i));
            if key > (best.0, best.1) {
                best = (key.0, key.1, Money(q));
            }
        }
        best
    }

    #[test]
    fn example_best_response_against_three() {
        // ε = 0.5, marginals (10,10,6,2); seller 2 at 3.0 = 6 units
        let v = Valuation::from_units(&[10, 10, 6, 2]);
        let p = PriceProfile::from_units(&[&[11, 11], &[6, 6]]);
        let br = best_response_homogeneous(&v, &p, 0, 2, Money(11));
        assert_eq!(br.prices, vec![Money(6), Money(6)]);
        assert_eq!(br.revenue, Money(12));
        assert_eq!(grid_oracle(&v, &p, 0, 11), (Money(12), 2, Money(6)));
    }

    #[test]
    fn monopolist_prices_at_five() {
        let v = example();
        let p = PriceProfile::from_units(&[&[6, 6, 6, 6]]);
        let br = best_response_homogeneous(&v, &p, 0, 4, Money(6));
        assert_eq!((br.prices[0], br.units, br.revenue), (Money(5), 2, Money(10)));
    }

    #[test]
    fn prices_at_best_residual_marginal() {
        let v = example();
        let p = PriceProfile::from_units(&[&[6, 6], &[0, 0]]);
        let br = best_response_homogeneous(&v, &p, 0, 2, Money(6));
        assert_eq!((br.prices[0], br.units, br.revenue), (Money(3), 1, Money(3)));
    }

    #[test]
    fn last_considered_breaks_ties_to_higher_index() {
        let p = PriceProfile::from_units(&[&[3, 3], &[3, 3]]);
        assert_eq!(last_considered_seller(&p), Some(1));
        let p = PriceProfile::from_units(&[&[4, 4], &[3, 3]]);
        assert_eq!(last_considered_seller(&p), Some(0));
    }
}
