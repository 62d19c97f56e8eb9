//! Expected-revenue best response under a belief over valuations.
//!
//! Seller `i`'s units, sorted by price, interleave with the competitor units
//! in the buyer's order, and under every valuation the buyer takes a prefix
//! of that merged order. So seller `i`'s `j`-th cheapest unit is bought
//! exactly when the prefix up to it survives. The search walks the seller's
//! units cheapest first, tracking for each valuation in the support whether
//! the buyer is still buying and, if not, how many units it stopped at.
//! Expected revenue and expected units are sums over units, so a memoized
//! recursion over `(unit, last price, uniform so far, buyer status)` finds
//! the exact optimum over the candidate prices.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::belief::Belief;
use crate::market::MarketInstance;
use crate::money::Money;
use crate::prices::PriceProfile;
use crate::valuation::Valuation;

use super::CompetitorBook;

/// Result of an expected-revenue best response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UncertainResponse {
    pub prices: Vec<Money>,
    #[serde(serialize_with = "crate::serde_ratio")]
    pub expected_revenue: BigRational,
    #[serde(serialize_with = "crate::serde_ratio")]
    pub expected_units: BigRational,
    /// Whether valuations in the seller's own support disagree on the total
    /// quantity bought at the chosen prices.
    pub informative: bool,
}

/// `{0} ∪ marginals of the support ∪ {q, q − ε : q a competitor price} ∪ {cap}`,
/// sorted and clipped to the cap.
pub fn uncertain_candidates(
    supports: &[&Valuation],
    p: &PriceProfile,
    seller: usize,
    cap: Money,
) -> Vec<Money> {
    let mut c: BTreeSet<Money> = BTreeSet::from([Money::ZERO, cap]);
    for v in supports {
        c.extend(v.marginals().iter().copied());
    }
    for (i, ps) in p.sellers().iter().enumerate() {
        if i == seller {
            continue;
        }
        for &q in ps {
            c.insert(q);
            if let Some(below) = q.checked_sub(Money(1)) {
                c.insert(below);
            }
        }
    }
    c.into_iter().filter(|&x| x <= cap).collect()
}

const ALIVE: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Score {
    revenue: u128,
    uniform_uninformative: bool,
    uninformative: bool,
    units: u128,
}

impl Score {
    fn plus(self, revenue: u128, units: u128) -> Score {
        Score {
            revenue: self.revenue + revenue,
            units: self.units + units,
            ..self
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    score: Score,
    choice: usize,
}

type Key = (usize, usize, bool, Vec<u32>);

struct Dp<'a> {
    vals: Vec<&'a Valuation>,
    weights: Vec<u128>,
    book: CompetitorBook,
    cands: Vec<Money>,
    before: Vec<usize>,
    n_i: usize,
    memo: HashMap<Key, Node>,
}

impl Dp<'_> {
    /// Runs competitor units `from+1 ..= to` past every live valuation, with
    /// `offset` of the seller's units already ahead of them.
    fn pass_competitors(&self, status: &mut [u32], from: usize, to: usize, offset: usize) {
        for (s, v) in status.iter_mut().zip(&self.vals) {
            if *s != ALIVE {
                continue;
            }
            for r in from + 1..=to {
                let pos = r + offset;
                if self.book.price(r) > v.marginal(pos) {
                    *s = (pos - 1) as u32;
                    break;
                }
            }
        }
    }

    fn terminal(&self, mut status: Vec<u32>, last: usize, uniform: bool) -> Score {
        let from = self.before[last];
        self.pass_competitors(&mut status, from, self.book.len(), self.n_i);
        let n = (self.book.len() + self.n_i) as u32;
        let first = if status[0] == ALIVE { n } else { status[0] };
        let uninformative = status
            .iter()
            .all(|&s| (if s == ALIVE { n } else { s }) == first);
        Score {
            revenue: 0,
            uniform_uninformative: uniform && uninformative,
            uninformative,
            units: 0,
        }
    }

    /// Best completion for units `j..n_i`, given the previous unit's
    /// candidate index (`usize::MAX` before the first unit).
    fn solve(&mut self, j: usize, prev: usize, uniform: bool, status: Vec<u32>) -> Score {
        if j == self.n_i {
            return self.terminal(status, prev, uniform);
        }
        let key = (j, prev, uniform, status);
        if let Some(node) = self.memo.get(&key) {
            return node.score;
        }
        let (_, _, _, status) = &key;
        let start = if prev == usize::MAX { 0 } else { prev };
        let from = if prev == usize::MAX { 0 } else { self.before[prev] };
        let mut best: Option<Node> = None;
        for idx in start..self.cands.len() {
            let q = self.cands[idx];
            let c = self.before[idx];
            let mut next = status.clone();
            self.pass_competitors(&mut next, from, c, j);
            let pos = j + 1 + c;
            let (mut revenue, mut units) = (0u128, 0u128);
            for ((s, v), &w) in next.iter_mut().zip(&self.vals).zip(&self.weights) {
                if *s != ALIVE {
                    continue;
                }
                if q <= v.marginal(pos) {
                    revenue += w * q.units() as u128;
                    units += w;
                } else {
                    *s = (pos - 1) as u32;
                }
            }
            let still_uniform = prev == usize::MAX || (uniform && idx == prev);
            let score = self
                .solve(j + 1, idx, still_uniform, next)
                .plus(revenue, units);
            if best.map_or(true, |b| score > b.score) {
                best = Some(Node { score, choice: idx });
            }
        }
        let node = best.expect("candidate set is never empty");
        self.memo.insert(key, node);
        node.score
    }

    fn reconstruct(&self, mut status: Vec<u32>) -> Vec<Money> {
        let mut prices = Vec::with_capacity(self.n_i);
        let (mut prev, mut uniform) = (usize::MAX, true);
        for j in 0..self.n_i {
            let node = self.memo[&(j, prev, uniform, status.clone())];
            let idx = node.choice;
            let from = if prev == usize::MAX { 0 } else { self.before[prev] };
            let c = self.before[idx];
            self.pass_competitors(&mut status, from, c, j);
            let pos = j + 1 + c;
            for (s, v) in status.iter_mut().zip(&self.vals) {
                if *s == ALIVE && self.cands[idx] > v.marginal(pos) {
                    *s = (pos - 1) as u32;
                }
            }
            uniform = prev == usize::MAX || (uniform && idx == prev);
            prev = idx;
            prices.push(self.cands[idx]);
        }
        prices
    }
}

/// Best response of `seller` maximizing expected revenue under `belief`.
///
/// Ties: among revenue maximizers, a uniform vector that is uninformative
/// for the seller's own support wins, then any uninformative vector, then
/// more expected units, then the lexicographically smallest vector.
pub fn best_response_uncertain(
    market: &MarketInstance,
    seller: usize,
    p: &PriceProfile,
    belief: &Belief,
) -> UncertainResponse {
    let universe = &market
        .uncertainty
        .as_ref()
        .expect("uncertain-demand market")
        .universe;
    let vals: Vec<&Valuation> = belief.support().map(|id| &universe[id.0]).collect();
    let weights = belief.integer_weights();
    let book = CompetitorBook::new(p, seller);
    let cands = uncertain_candidates(&vals, p, seller, market.grid.price_cap);
    let before = cands.iter().map(|&q| book.before(q)).collect();
    let mut dp = Dp {
        vals,
        weights,
        book,
        cands,
        before,
        n_i: market.supply(seller),
        memo: HashMap::new(),
    };
    let start = vec![ALIVE; dp.vals.len()];
    let score = dp.solve(0, usize::MAX, true, start.clone());
    let prices = dp.reconstruct(start);
    let total: u128 = dp.weights.iter().sum();
    let ratio = |x: u128| BigRational::new(BigInt::from(x), BigInt::from(total));
    UncertainResponse {
        prices,
        expected_revenue: ratio(score.revenue),
        expected_units: ratio(score.units),
        informative: !score.uninformative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::ValuationId;
    use crate::market::Uncertainty;
    use crate::money::GridSpec;
    use crate::response::best_response_homogeneous;

    fn market_with(universe: Vec<Valuation>, supplies: &[usize], denom: u64) -> MarketInstance {
        let mut m = MarketInstance::homogeneous(denom, supplies, universe[0].clone());
        let cap = universe.iter().map(|v| v.top_marginal()).max().unwrap();
        m.grid = GridSpec::with_default_cap(denom, cap);
        m.uncertainty = Some(Uncertainty {
            universe,
            true_valuation: ValuationId(0),
            priors: vec![],
        });
        m
    }

    #[test]
    fn monopolist_hedges_with_one_high_price() {
        // 0.99: marginals (1,1,0); 0.01: marginals (10,10,10)
        let m = market_with(
            vec![Valuation::from_units(&[1, 1, 0]), Valuation::from_units(&[10, 10, 10])],
            &[3],
            1,
        );
        let b = Belief::from_fractions(0, &[(0, 99, 100), (1, 1, 100)]);
        let p = PriceProfile::from_units(&[&[11, 11, 11]]);
        let br = best_response_uncertain(&m, 0, &p, &b);
        assert_eq!(br.prices, vec![Money(1), Money(1), Money(10)]);
        assert_eq!(
            br.expected_revenue,
            BigRational::new(BigInt::from(21), BigInt::from(10))
        );
        assert!(br.informative);
    }

    #[test]
    fn point_belief_matches_full_information() {
        let v = Valuation::from_units(&[10, 10, 6, 2]);
        let m = market_with(vec![v.clone()], &[2, 2], 2);
        let b = Belief::certain(0, ValuationId(0));
        for other in 0..=11u64 {
            let p = PriceProfile::from_units(&[&[11, 11], &[other, other]]);
            let full = best_response_homogeneous(&v, &p, 0, 2, Money(11));
            let unc = best_response_uncertain(&m, 0, &p, &b);
            assert_eq!(unc.prices, full.prices, "competitor at {other}");
            assert_eq!(unc.expected_revenue, BigRational::from_integer(full.revenue.units().into()));
        }
    }
}
