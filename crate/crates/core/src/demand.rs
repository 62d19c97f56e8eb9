//! The buyer's greedy demand for both buyer models.
//!
//! Ties are broken deterministically. Homogeneous units are visited by
//! `(price, seller, unit)` ascending. Heterogeneous items are ranked by
//! utility descending, then seller ascending, then price descending, then
//! item index ascending. Items of zero utility are always taken.

use std::cmp::Reverse;

use crate::error::DomainError;
use crate::market::{Buyer, MarketInstance};
use crate::money::Money;
use crate::prices::{PriceProfile, Purchase};
use crate::valuation::Valuation;

/// Units in the order the homogeneous buyer considers them.
pub(crate) fn unit_order(p: &PriceProfile) -> Vec<(Money, usize, usize)> {
    let mut units: Vec<(Money, usize, usize)> = p
        .sellers()
        .iter()
        .enumerate()
        .flat_map(|(i, ps)| ps.iter().enumerate().map(move |(j, &x)| (x, i, j)))
        .collect();
    units.sort_unstable();
    units
}

/// Greedy purchase of a homogeneous buyer: the longest prefix of the unit
/// order in which the `q`-th unit costs at most `m_q`.
pub fn greedy_homogeneous(v: &Valuation, p: &PriceProfile) -> Purchase {
    let mut out = Purchase::empty(p.seller_count());
    for (q, (price, seller, unit)) in unit_order(p).into_iter().enumerate() {
        if q >= v.len() || price > v.marginal(q + 1) {
            break;
        }
        out.push(seller, unit);
    }
    out
}

/// Greedy purchase of a `k`-additive buyer. `values[i][j]` is the buyer's
/// value for seller `i`'s item `j`, priced at `prices.seller(i)[j]`.
pub fn greedy_k_additive(values: &[Vec<Money>], prices: &PriceProfile, k: usize) -> Purchase {
    let mut ranked: Vec<(Reverse<i128>, usize, Reverse<Money>, usize)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, vs)| {
            vs.iter().enumerate().filter_map(move |(j, &v)| {
                let price = prices.seller(i)[j];
                let utility = v.diff(price);
                (utility >= 0).then_some((Reverse(utility), i, Reverse(price), j))
            })
        })
        .collect();
    ranked.sort_unstable();
    let mut out = Purchase::empty(values.len());
    for (_, i, _, j) in ranked.into_iter().take(k) {
        out.push(i, j);
    }
    out
}

/// The buyer's purchase at `p` under the market's true buyer.
pub fn demand(market: &MarketInstance, p: &PriceProfile) -> Purchase {
    match &market.buyer {
        Buyer::Homogeneous(v) => greedy_homogeneous(v, p),
        Buyer::KAdditive { k } => greedy_k_additive(&item_table(market), p, *k),
    }
}

/// Per-seller item values of a heterogeneous market (empty rows otherwise).
pub fn item_table(market: &MarketInstance) -> Vec<Vec<Money>> {
    market
        .sellers
        .iter()
        .map(|s| s.item_values().map(<[Money]>::to_vec).unwrap_or_default())
        .collect()
}

/// Buyer's value for a bundle: `v(|X|)` or the sum of the `k` best items.
pub fn bundle_value(market: &MarketInstance, x: &Purchase) -> Result<Money, DomainError> {
    check_feasible(market, x)?;
    match &market.buyer {
        Buyer::Homogeneous(v) => v.value_at(x.total()),
        Buyer::KAdditive { k } => {
            let mut vals: Vec<Money> = (0..x.seller_count())
                .flat_map(|i| {
                    let items = market.sellers[i].item_values().unwrap_or(&[]);
                    x.seller(i).iter().map(move |&j| items[j])
                })
                .collect();
            vals.sort_unstable_by(|a, b| b.cmp(a));
            Ok(vals.into_iter().take(*k).sum())
        }
    }
}

/// Social welfare of a purchase: the buyer's value for it (payments cancel).
pub fn welfare(market: &MarketInstance, x: &Purchase) -> Money {
    bundle_value(market, x).expect("purchase produced by the buyer is feasible")
}

/// Value of the purchase minus what the buyer paid for it.
pub fn buyer_utility(
    market: &MarketInstance,
    x: &Purchase,
    p: &PriceProfile,
) -> Result<i128, DomainError> {
    let value = bundle_value(market, x)?;
    Ok(value.diff(x.payment(p)))
}

fn check_feasible(market: &MarketInstance, x: &Purchase) -> Result<(), DomainError> {
    if x.seller_count() != market.seller_count() {
        return Err(DomainError::NoSuchSeller(x.seller_count()));
    }
    for i in 0..x.seller_count() {
        let supply = market.supply(i);
        let mut seen = vec![false; supply];
        for &j in x.seller(i) {
            match seen.get_mut(j) {
                Some(s) if !*s => *s = true,
                _ => return Err(DomainError::NoSuchUnit { seller: i, index: j }),
            }
        }
    }
    if let Buyer::KAdditive { k } = market.buyer {
        if x.total() > k {
            return Err(DomainError::ExceedsDemand {
                bought: x.total(),
                k,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(units: &[u64]) -> Vec<Money> {
        units.iter().copied().map(Money).collect()
    }

    #[test]
    fn homogeneous_tie_goes_to_lower_seller() {
        let v = Valuation::from_units(&[5, 5, 3, 1]);
        let p = PriceProfile::from_units(&[&[3, 3], &[3, 3]]);
        let x = greedy_homogeneous(&v, &p);
        assert_eq!(x.quantities(), vec![2, 1]);
        assert_eq!(x.total(), 3);
    }

    #[test]
    fn homogeneous_cheaper_seller_first() {
        // ε = 0.5: marginals (10,10,6,2), seller 1 at 5.0, seller 2 at 4.5
        let v = Valuation::from_units(&[10, 10, 6, 2]);
        let p = PriceProfile::from_units(&[&[10, 10], &[9, 9]]);
        assert_eq!(greedy_homogeneous(&v, &p).quantities(), vec![0, 2]);
    }

    #[test]
    fn zero_prices_buy_everything() {
        let v = Valuation::from_units(&[4, 2, 0]);
        let p = PriceProfile::from_units(&[&[0, 0], &[0]]);
        assert_eq!(greedy_homogeneous(&v, &p).total(), 3);
    }

    #[test]
    fn k_additive_fact_instance() {
        let values = vec![m(&[1]), m(&[2, 2, 2])];
        let p = PriceProfile::from_units(&[&[1], &[2, 2, 2]]);
        let x = greedy_k_additive(&values, &p, 3);
        assert_eq!(x.quantities(), vec![1, 2]);
    }

    #[test]
    fn k_additive_zero_limit_buys_nothing() {
        let values = vec![m(&[1]), m(&[2])];
        let p = PriceProfile::from_units(&[&[0], &[0]]);
        assert!(greedy_k_additive(&values, &p, 0).is_empty());
    }

    #[test]
    fn k_additive_prefers_higher_utility() {
        let values = vec![m(&[10]), m(&[10])];
        let p = PriceProfile::from_units(&[&[10], &[9]]);
        let x = greedy_k_additive(&values, &p, 1);
        assert_eq!(x.quantities(), vec![0, 1]);
    }

    #[test]
    fn k_additive_same_seller_prefers_expensive() {
        let values = vec![m(&[3, 5])];
        let p = PriceProfile::from_units(&[&[1, 3]]);
        let x = greedy_k_additive(&values, &p, 1);
        assert_eq!(x.seller(0), &[1]);
    }

    #[test]
    fn utility_of_example_steady_state() {
        let market = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
        let p = PriceProfile::from_units(&[&[6, 6], &[6, 6]]);
        let x = demand(&market, &p);
        assert_eq!(x.total(), 3);
        // 13 − 9 in currency, 26 − 18 in half-units
        assert_eq!(buyer_utility(&market, &x, &p).unwrap(), 8);
        assert_eq!(
            buyer_utility(&market, &Purchase::empty(2), &p).unwrap(),
            0
        );
    }

    #[test]
    fn infeasible_purchase_rejected() {
        let market = MarketInstance::homogeneous(1, &[1], Valuation::from_units(&[3]));
        let p = PriceProfile::from_units(&[&[1]]);
        let x = Purchase::from_indices(vec![vec![0, 0]]);
        assert!(buyer_utility(&market, &x, &p).is_err());
    }
}
