use std::collections::BTreeSet;

use crate::demand::item_table;
use crate::market::MarketInstance;
use crate::money::Money;
use crate::prices::PriceProfile;

use super::BestResponse;

/// Candidate prices for each of `seller`'s items.
///
/// Only the utility an item offers relative to competitor items matters to
/// the buyer, so per item the candidates are the prices that put its utility
/// at 0, or level with (or one unit above) a competitor item's non-negative
/// utility, plus price 0 and the cap.
pub fn hetero_candidates(market: &MarketInstance, seller: usize, p: &PriceProfile) -> Vec<Vec<Money>> {
    let table = item_table(market);
    let mut levels: BTreeSet<u64> = BTreeSet::from([0]);
    for (i, values) in table.iter().enumerate() {
        if i == seller {
            continue;
        }
        for (j, &v) in values.iter().enumerate() {
            if let Some(u) = v.checked_sub(p.seller(i)[j]) {
                levels.insert(u.units());
                levels.insert(u.units() + 1);
            }
        }
    }
    let cap = market.grid.price_cap;
    table[seller]
        .iter()
        .map(|&v| {
            let mut c: BTreeSet<Money> = levels
                .iter()
                .filter_map(|&l| v.units().checked_sub(l).map(Money))
                .collect();
            c.insert(Money::ZERO);
            c.insert(cap);
            c.into_iter().filter(|&x| x <= cap).collect()
        })
        .collect()
}

/// Groups of item indices with equal value; within a group only sorted
/// price assignments are canonical.
fn value_groups(values: &[Money]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Money, Vec<usize>)> = Vec::new();
    for (j, &v) in values.iter().enumerate() {
        match groups.iter_mut().find(|(w, _)| *w == v) {
            Some((_, g)) => g.push(j),
            None => groups.push((v, vec![j])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

struct Search<'a> {
    values: &'a [Vec<Money>],
    k: usize,
    seller: usize,
    /// Competitor items the buyer would accept, as `(−utility, seller)` in
    /// the buyer's order. Their prices never tie-break against ours since
    /// sellers differ.
    rivals: Vec<(i128, usize)>,
    candidates: Vec<Vec<Money>>,
    groups: Vec<Vec<usize>>,
    current: Vec<Money>,
    own: Vec<(i128, std::cmp::Reverse<Money>, usize)>,
    best: Option<(Money, bool, usize, Vec<Money>)>,
}

impl Search<'_> {
    /// Revenue and units sold at `current`, without building a purchase.
    fn outcome(&mut self) -> (Money, usize) {
        let values = &self.values[self.seller];
        self.own.clear();
        for (j, (&v, &x)) in values.iter().zip(&self.current).enumerate() {
            let u = v.diff(x);
            if u >= 0 {
                self.own.push((-u, std::cmp::Reverse(x), j));
            }
        }
        self.own.sort_unstable();
        let (mut revenue, mut units) = (Money::ZERO, 0);
        let mut r = 0;
        for &(nu, std::cmp::Reverse(x), _) in &self.own {
            // rivals strictly ahead of this item
            while r < self.rivals.len() && self.rivals[r] < (nu, self.seller) {
                r += 1;
            }
            if r + units >= self.k {
                break;
            }
            revenue += x;
            units += 1;
        }
        (revenue, units)
    }

    fn evaluate(&mut self) {
        let (revenue, units) = self.outcome();
        let uniform = self.current.windows(2).all(|w| w[0] == w[1]);
        let better = match &self.best {
            None => true,
            Some((r, u, n, v)) => {
                (revenue, uniform, units) > (*r, *u, *n)
                    || ((revenue, uniform, units) == (*r, *u, *n) && self.current < *v)
            }
        };
        if better {
            self.best = Some((revenue, uniform, units, self.current.clone()));
        }
    }

    /// Assigns a non-decreasing run of candidate indices to group `g`,
    /// position `pos` onward, with every index at least `min`.
    fn assign(&mut self, g: usize, pos: usize, min: usize) {
        if g == self.groups.len() {
            self.evaluate();
            return;
        }
        if pos == self.groups[g].len() {
            self.assign(g + 1, 0, 0);
            return;
        }
        let item = self.groups[g][pos];
        for c in min..self.candidates[item].len() {
            self.current[item] = self.candidates[item][c];
            self.assign(g, pos + 1, c);
        }
    }
}

/// Best response of a heterogeneous seller facing a `k`-additive buyer.
pub fn best_response_k_additive(
    market: &MarketInstance,
    seller: usize,
    p: &PriceProfile,
) -> BestResponse {
    let k = market.demand_limit().expect("k-additive market");
    let values = item_table(market);
    let candidates = hetero_candidates(market, seller, p);
    let groups = value_groups(&values[seller]);
    let mut rivals: Vec<(i128, usize)> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != seller)
        .flat_map(|(i, vs)| {
            vs.iter()
                .zip(p.seller(i))
                .map(move |(&v, &x)| (-v.diff(x), i))
                .filter(|&(nu, _)| nu <= 0)
        })
        .collect();
    rivals.sort_unstable();
    let mut search = Search {
        values: &values,
        k,
        seller,
        rivals,
        candidates,
        groups,
        current: vec![Money::ZERO; values[seller].len()],
        own: Vec::new(),
        best: None,
    };
    search.assign(0, 0, 0);
    // uniform vectors win ties, so try every one, not just candidates
    for q in market.grid.prices() {
        search.current.iter_mut().for_each(|x| *x = q);
        search.evaluate();
    }
    let (revenue, _, units, prices) = search.best.expect("at least one candidate vector");
    BestResponse {
        prices,
        revenue,
        units,
    }
}
