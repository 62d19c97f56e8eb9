//! Exhaustive reference searches.
//!
//! These try every bundle or every price vector and exist to validate the
//! fast paths: the greedy buyer, the uniform-price search, and the pruned
//! candidate searches. They refuse instances beyond small size guards.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::belief::Belief;
use crate::demand::{greedy_homogeneous, greedy_k_additive, item_table, unit_order};
use crate::error::{Error, Result, SearchError};
use crate::market::{Buyer, MarketInstance};
use crate::money::Money;
use crate::prices::{PriceProfile, Purchase};
use crate::valuation::Valuation;

/// Most units (or items) the bundle oracle enumerates subsets of.
pub const MAX_BUNDLE_ITEMS: usize = 12;
/// Most units a seller may hold for the best-response oracle.
pub const MAX_RESPONSE_UNITS: usize = 4;
/// Highest price cap, in grid units, for the best-response oracle.
pub const MAX_RESPONSE_CAP: u64 = 64;

fn too_large(estimate: u128, limit: u128) -> Error {
    Error::Search(SearchError::TooLarge { estimate, limit })
}

/// The buyer's optimal bundle at `p`, by trying every subset.
///
/// Among utility maximizers the largest is chosen, and among those the one
/// whose members come earliest in the buyer's preference order.
pub fn oracle_optimal_bundle(market: &MarketInstance, p: &PriceProfile) -> Result<Purchase> {
    let n = market.total_supply();
    if n > MAX_BUNDLE_ITEMS {
        return Err(too_large(1 << n, 1 << MAX_BUNDLE_ITEMS));
    }
    match &market.buyer {
        Buyer::Homogeneous(v) => Ok(bundle_homogeneous(v, p)),
        Buyer::KAdditive { k } => Ok(bundle_k_additive(&item_table(market), p, *k)),
    }
}

/// Compares `(utility, size)` and then prefers the member list (ranks in
/// preference order, sorted) that is lexicographically smaller.
fn better(key: (i128, usize), members: &[usize], best: &Option<((i128, usize), Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((k, m)) => key > *k || (key == *k && members < m.as_slice()),
    }
}

fn bundle_homogeneous(v: &Valuation, p: &PriceProfile) -> Purchase {
    let units = unit_order(p);
    let mut best: Option<((i128, usize), Vec<usize>)> = None;
    for mask in 0u32..(1 << units.len()) {
        let members: Vec<usize> = (0..units.len()).filter(|r| mask >> r & 1 == 1).collect();
        let Ok(value) = v.value_at(members.len()) else {
            continue;
        };
        let paid: Money = members.iter().map(|&r| units[r].0).sum();
        let key = (value.diff(paid), members.len());
        if better(key, &members, &best) {
            best = Some((key, members));
        }
    }
    let mut out = Purchase::empty(p.seller_count());
    for r in best.map(|b| b.1).unwrap_or_default() {
        out.push(units[r].1, units[r].2);
    }
    out
}

fn bundle_k_additive(values: &[Vec<Money>], p: &PriceProfile, k: usize) -> Purchase {
    // every item in the buyer's preference order
    let mut items: Vec<(std::cmp::Reverse<i128>, usize, std::cmp::Reverse<Money>, usize)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, vs)| {
            vs.iter().enumerate().map(move |(j, &v)| {
                let price = p.seller(i)[j];
                (std::cmp::Reverse(v.diff(price)), i, std::cmp::Reverse(price), j)
            })
        })
        .collect();
    items.sort_unstable();
    let mut best: Option<((i128, usize), Vec<usize>)> = None;
    for mask in 0u32..(1 << items.len()) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let members: Vec<usize> = (0..items.len()).filter(|r| mask >> r & 1 == 1).collect();
        let utility: i128 = members.iter().map(|&r| items[r].0 .0).sum();
        let key = (utility, members.len());
        if better(key, &members, &best) {
            best = Some((key, members));
        }
    }
    let mut out = Purchase::empty(values.len());
    for r in best.map(|b| b.1).unwrap_or_default() {
        out.push(items[r].1, items[r].3);
    }
    out
}

/// What the exhaustive best-response search found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResponse {
    /// Maximum (expected) revenue over every price vector on the grid.
    pub revenue: BigRational,
    /// Maximum (expected) revenue over uniform price vectors only.
    pub uniform_revenue: BigRational,
    /// Whether some revenue maximizer is uninformative for the seller's
    /// support (always true with a single valuation).
    pub uninformative_max: bool,
    /// Whether some revenue maximizer is uniform and uninformative.
    pub uniform_uninformative_max: bool,
    /// The maximizer preferred by the tie cascade: uniform and uninformative,
    /// then uninformative, then more (expected) units, then the
    /// lexicographically smallest vector.
    pub prices: Vec<Money>,
}

/// Best response of `seller` by trying every price vector up to the cap.
///
/// A homogeneous seller's vectors are enumerated in sorted form (its own
/// unit order does not matter to the buyer); item sellers try every vector.
/// With `belief`, revenue is the expectation over the seller's support;
/// otherwise the market's true buyer is used.
pub fn oracle_best_response(
    market: &MarketInstance,
    seller: usize,
    p: &PriceProfile,
    belief: Option<&Belief>,
) -> Result<OracleResponse> {
    let n_i = market.supply(seller);
    let cap = market.grid.price_cap.units();
    if n_i > MAX_RESPONSE_UNITS || cap > MAX_RESPONSE_CAP {
        return Err(too_large(
            u128::from(cap + 1).pow(n_i as u32),
            u128::from(MAX_RESPONSE_CAP + 1).pow(MAX_RESPONSE_UNITS as u32),
        ));
    }
    let sorted = market.is_homogeneous();
    // per valuation: (revenue, units the seller sells, total units bought)
    let evaluate: Box<dyn Fn(&PriceProfile) -> Vec<(u64, usize, usize)>> = match (&market.buyer, belief) {
        (Buyer::KAdditive { k }, _) => {
            let values = item_table(market);
            let k = *k;
            Box::new(move |trial| {
                let x = greedy_k_additive(&values, trial, k);
                vec![(x.revenue(trial, seller).units(), x.quantity(seller), x.total())]
            })
        }
        (Buyer::Homogeneous(v), None) => {
            let v = v.clone();
            Box::new(move |trial| {
                let x = greedy_homogeneous(&v, trial);
                vec![(x.revenue(trial, seller).units(), x.quantity(seller), x.total())]
            })
        }
        (Buyer::Homogeneous(_), Some(b)) => {
            let universe = &market
                .uncertainty
                .as_ref()
                .ok_or(crate::error::DomainError::NotUncertain)?
                .universe;
            let vals: Vec<Valuation> = b.support().map(|id| universe[id.0].clone()).collect();
            Box::new(move |trial| {
                vals.iter()
                    .map(|v| {
                        let x = greedy_homogeneous(v, trial);
                        (x.revenue(trial, seller).units(), x.quantity(seller), x.total())
                    })
                    .collect()
            })
        }
    };
    let weights: Vec<u128> = match (&market.buyer, belief) {
        (Buyer::Homogeneous(_), Some(b)) => b.integer_weights(),
        _ => vec![1],
    };
    let score = |trial: &PriceProfile| -> (u128, u128, bool) {
        let outcomes = evaluate(trial);
        let revenue = outcomes.iter().zip(&weights).map(|(o, w)| w * o.0 as u128).sum();
        let units = outcomes.iter().zip(&weights).map(|(o, w)| w * o.1 as u128).sum();
        let uninformative = outcomes.iter().all(|o| o.2 == outcomes[0].2);
        (revenue, units, uninformative)
    };

    type Key = (u128, bool, bool, u128);
    let mut best: Option<(Key, Vec<Money>)> = None;
    let mut best_uniform = 0u128;
    let mut uninformative_max = (0u128, false);
    let mut uniform_uninformative_max = (0u128, false);
    let mut current = vec![0u64; n_i];
    loop {
        let prices: Vec<Money> = current.iter().copied().map(Money).collect();
        let trial = p.with_seller(seller, prices.clone());
        let (revenue, units, uninformative) = score(&trial);
        let uniform = current.windows(2).all(|w| w[0] == w[1]);
        if uniform {
            best_uniform = best_uniform.max(revenue);
        }
        track(&mut uninformative_max, revenue, uninformative);
        track(&mut uniform_uninformative_max, revenue, uniform && uninformative);
        let key = (revenue, uniform && uninformative, uninformative, units);
        let replace = match &best {
            None => true,
            Some((k, v)) => key > *k || (key == *k && prices < *v),
        };
        if replace {
            best = Some((key, prices));
        }
        if !advance(&mut current, cap, sorted) {
            break;
        }
    }
    let (key, prices) = best.expect("at least one vector");
    let total: u128 = weights.iter().sum();
    let ratio = |x: u128| BigRational::new(BigInt::from(x), BigInt::from(total));
    Ok(OracleResponse {
        revenue: ratio(key.0),
        uniform_revenue: ratio(best_uniform),
        uninformative_max: uninformative_max.1 && uninformative_max.0 == key.0,
        uniform_uninformative_max: uniform_uninformative_max.1
            && uniform_uninformative_max.0 == key.0,
        prices,
    })
}

/// Records the best revenue seen among vectors satisfying a predicate.
fn track(slot: &mut (u128, bool), revenue: u128, ok: bool) {
    if ok && (!slot.1 || revenue > slot.0) {
        *slot = (revenue, true);
    }
}

/// Next vector over `0..=cap` in lexicographic order; sorted vectors only
/// when `sorted`. Returns false after the last one.
fn advance(v: &mut [u64], cap: u64, sorted: bool) -> bool {
    for pos in (0..v.len()).rev() {
        if v[pos] < cap {
            v[pos] += 1;
            let fill = if sorted { v[pos] } else { 0 };
            for x in &mut v[pos + 1..] {
                *x = fill;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_oracle_matches_example() {
        let m = MarketInstance::homogeneous(1, &[2, 2], Valuation::from_units(&[5, 5, 3, 1]));
        let p = PriceProfile::from_units(&[&[3, 3], &[3, 3]]);
        assert_eq!(oracle_optimal_bundle(&m, &p).unwrap().quantities(), vec![2, 1]);
    }

    #[test]
    fn bundle_oracle_buys_nothing_at_cap() {
        let m = MarketInstance::homogeneous(1, &[2, 1], Valuation::from_units(&[5, 3, 1]));
        let p = PriceProfile::at_cap(&m);
        assert!(oracle_optimal_bundle(&m, &p).unwrap().is_empty());
    }

    #[test]
    fn bundle_oracle_refuses_large_instances() {
        let m = MarketInstance::homogeneous(1, &[13], Valuation::from_units(&[1; 13]));
        let p = PriceProfile::at_cap(&m);
        assert!(oracle_optimal_bundle(&m, &p).is_err());
    }

    #[test]
    fn response_oracle_finds_uniform_optimum() {
        let v = Valuation::from_units(&[10, 10, 6, 2]);
        let m = MarketInstance::homogeneous(2, &[2, 2], v);
        let p = PriceProfile::from_units(&[&[11, 11], &[6, 6]]);
        let o = oracle_best_response(&m, 0, &p, None).unwrap();
        assert_eq!(o.revenue, BigRational::from_integer(12.into()));
        assert_eq!(o.uniform_revenue, o.revenue);
        assert_eq!(o.prices, vec![Money(6), Money(6)]);
    }

    #[test]
    fn advance_walks_sorted_vectors() {
        let mut v = vec![0, 0];
        let mut count = 1;
        while advance(&mut v, 3, true) {
            assert!(v[0] <= v[1]);
            count += 1;
        }
        assert_eq!(count, 10);
    }
}
