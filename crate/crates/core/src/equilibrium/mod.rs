//! Pure Nash equilibria by brute force.
//!
//! A profile is an equilibrium when no seller can raise its revenue by
//! changing only its own prices. Deviations are found with the same
//! searches sellers use to best-respond (uniform prices for identical
//! units, pruned per-item prices for heterogeneous items), both validated
//! against exhaustive oracles.

mod checks;

pub use checks::{
    check_k_additive_welfare, check_ne_structure, check_splitting_remark, construct_additive_ne,
    construct_unit_demand_ne, fact_instance, merged_fact_instance, KAdditiveWelfareReport,
    NeStructureReport, SplittingReport,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::{demand, item_table};
use crate::error::{Error, Result, SearchError};
use crate::market::{Buyer, Holding, MarketInstance};
use crate::money::Money;
use crate::prices::PriceProfile;
use crate::response::{best_response_full_info, BestResponse};

/// Default cap on the number of canonical profiles enumerated.
pub const DEFAULT_PROFILE_LIMIT: u128 = 10_000_000;

/// A seller's best deviation from a profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Deviation {
    pub seller: usize,
    pub current_revenue: Money,
    pub best: BestResponse,
}

impl Deviation {
    pub fn gain(&self) -> Money {
        self.best.revenue.saturating_sub(self.current_revenue)
    }

    /// Re-evaluates the deviation against `p` with the buyer directly.
    pub fn replay(&self, market: &MarketInstance, p: &PriceProfile) -> bool {
        let trial = p.with_seller(self.seller, self.best.prices.clone());
        let now = demand(market, p).revenue(p, self.seller);
        let then = demand(market, &trial).revenue(&trial, self.seller);
        now == self.current_revenue && then == self.best.revenue
    }
}

/// Seller `i`'s best deviation from `p` (full information).
pub fn deviation(market: &MarketInstance, p: &PriceProfile, seller: usize) -> Deviation {
    Deviation {
        seller,
        current_revenue: demand(market, p).revenue(p, seller),
        best: best_response_full_info(market, seller, p),
    }
}

/// Best achievable revenue for `seller` against `p_{-i}` minus its current
/// revenue.
pub fn deviation_gain(market: &MarketInstance, p: &PriceProfile, seller: usize) -> Money {
    deviation(market, p, seller).gain()
}

/// The first seller (by index) with a profitable deviation, if any.
pub fn find_witness(market: &MarketInstance, p: &PriceProfile) -> Option<Deviation> {
    (0..market.seller_count())
        .map(|i| deviation(market, p, i))
        .find(|d| d.gain() > Money::ZERO)
}

pub fn is_pure_nash(market: &MarketInstance, p: &PriceProfile) -> bool {
    find_witness(market, p).is_none()
}

#[derive(Clone, Debug, Serialize)]
pub struct NashSearch {
    /// Every equilibrium, canonical form, in enumeration order.
    pub equilibria: Vec<PriceProfile>,
    /// Canonical profiles examined.
    pub profiles: u128,
    /// A profitable deviation for every rejected profile, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<Vec<(PriceProfile, Deviation)>>,
}

#[derive(Clone, Copy, Debug)]
pub struct NashOptions {
    pub limit: u128,
    pub witnesses: bool,
}

impl Default for NashOptions {
    fn default() -> Self {
        NashOptions {
            limit: DEFAULT_PROFILE_LIMIT,
            witnesses: false,
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc.saturating_mul(n - j) / (j + 1))
}

/// Groups of equally valued items: canonical prices are sorted within each.
fn groups_of(market: &MarketInstance, seller: usize) -> Vec<usize> {
    match &market.sellers[seller].holding {
        Holding::Units(n) => vec![*n],
        Holding::Items(values) => {
            let mut sorted = values.clone();
            sorted.sort_unstable();
            sorted.dedup();
            sorted
                .iter()
                .map(|v| values.iter().filter(|w| *w == v).count())
                .collect()
        }
    }
}

/// Number of canonical profiles: `Π_i C(G + n_i − 1, n_i)` for identical
/// units, the product over equal-value groups for items.
pub fn profile_count(market: &MarketInstance) -> u128 {
    let g = market.grid.points() as u128;
    (0..market.seller_count())
        .flat_map(|i| groups_of(market, i))
        .map(|size| binomial(g + size as u128 - 1, size as u128))
        .fold(1u128, |a, b| a.saturating_mul(b))
}

/// All canonical price vectors of one seller.
fn strategies(market: &MarketInstance, seller: usize) -> Vec<Vec<Money>> {
    let cap = market.grid.price_cap.units();
    let sorted_runs = |len: usize| -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        let mut v = vec![0u64; len];
        loop {
            out.push(v.clone());
            let Some(pos) = (0..len).rev().find(|&k| v[k] < cap) else {
                break;
            };
            v[pos] += 1;
            let x = v[pos];
            v[pos + 1..].iter_mut().for_each(|y| *y = x);
        }
        out
    };
    match &market.sellers[seller].holding {
        Holding::Units(n) => sorted_runs(*n)
            .into_iter()
            .map(|v| v.into_iter().map(Money).collect())
            .collect(),
        Holding::Items(values) => {
            // positions of each equal-value group, groups in value order
            let mut keys = values.clone();
            keys.sort_unstable();
            keys.dedup();
            let groups: Vec<Vec<usize>> = keys
                .iter()
                .map(|k| (0..values.len()).filter(|&j| values[j] == *k).collect())
                .collect();
            let mut out: Vec<Vec<Money>> = vec![vec![Money::ZERO; values.len()]];
            for g in &groups {
                let runs = sorted_runs(g.len());
                out = out
                    .into_iter()
                    .flat_map(|base| {
                        runs.iter().map(move |run| {
                            let mut p = base.clone();
                            for (&j, &x) in g.iter().zip(run) {
                                p[j] = Money(x);
                            }
                            p
                        })
                    })
                    .collect();
            }
            out.sort();
            out
        }
    }
}

/// Mixed-radix decoding of a profile index, seller 0 most significant.
fn digits(mut idx: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = idx % radix[k];
        idx /= radix[k];
    }
    out
}

/// The greedy buyer specialized for scanning many profiles: reuses one
/// buffer and reports only per-seller revenue. Same tie order as
/// [`demand`].
enum FastBuyer {
    Homogeneous(Vec<Money>),
    KAdditive(Vec<Vec<Money>>, usize),
}

impl FastBuyer {
    fn new(market: &MarketInstance) -> Self {
        match &market.buyer {
            Buyer::Homogeneous(v) => FastBuyer::Homogeneous(v.marginals().to_vec()),
            Buyer::KAdditive { k } => FastBuyer::KAdditive(item_table(market), *k),
        }
    }

    fn revenues(
        &self,
        strats: &[Vec<Vec<Money>>],
        d: &[usize],
        scratch: &mut Vec<(i128, usize, Money)>,
        out: &mut [Money],
    ) {
        scratch.clear();
        out.iter_mut().for_each(|r| *r = Money::ZERO);
        match self {
            FastBuyer::Homogeneous(marginals) => {
                // unit index order within a seller is implied by the sorted
                // canonical vectors, so (price, seller) suffices
                for (i, &k) in d.iter().enumerate() {
                    scratch.extend(strats[i][k].iter().map(|&x| (x.0 as i128, i, x)));
                }
                scratch.sort_unstable_by_key(|&(x, i, _)| (x, i));
                for (q, &(_, i, x)) in scratch.iter().enumerate() {
                    if q >= marginals.len() || x > marginals[q] {
                        break;
                    }
                    out[i] += x;
                }
            }
            FastBuyer::KAdditive(values, k) => {
                for (i, &kk) in d.iter().enumerate() {
                    for (j, &x) in strats[i][kk].iter().enumerate() {
                        let u = values[i][j].diff(x);
                        if u >= 0 {
                            scratch.push((u, i, x));
                        }
                    }
                }
                // utility desc, seller asc, price desc; item order within a
                // seller does not change revenue
                scratch.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(b.2.cmp(&a.2)));
                for &(_, i, x) in scratch.iter().take(*k) {
                    out[i] += x;
                }
            }
        }
    }
}

/// Every pure Nash equilibrium of a full-information instance, in canonical
/// form. Refuses when the canonical profile space exceeds `options.limit`.
pub fn enumerate_pure_nash(market: &MarketInstance, options: NashOptions) -> Result<NashSearch> {
    let estimate = profile_count(market);
    if estimate > options.limit {
        return Err(Error::Search(SearchError::TooLarge {
            estimate,
            limit: options.limit,
        }));
    }
    let s = market.seller_count();
    let strats: Vec<Vec<Vec<Money>>> = (0..s).map(|i| strategies(market, i)).collect();
    let radix: Vec<usize> = strats.iter().map(Vec::len).collect();
    let profile = |d: &[usize]| {
        PriceProfile::new(d.iter().enumerate().map(|(i, &k)| strats[i][k].clone()).collect())
    };
    // best revenue of seller i against each combination of the others
    let tables: Vec<Vec<Money>> = (0..s)
        .map(|i| {
            let others: Vec<usize> = (0..s).filter(|&j| j != i).map(|j| radix[j]).collect();
            let size: usize = others.iter().product();
            (0..size)
                .into_par_iter()
                .map(|idx| {
                    let od = digits(idx, &others);
                    let mut d = Vec::with_capacity(s);
                    let mut it = od.into_iter();
                    for j in 0..s {
                        d.push(if j == i { 0 } else { it.next().expect("digit") });
                    }
                    best_response_full_info(market, i, &profile(&d)).revenue
                })
                .collect()
        })
        .collect();
    let others_index = |d: &[usize], i: usize| {
        (0..s)
            .filter(|&j| j != i)
            .fold(0usize, |acc, j| acc * radix[j] + d[j])
    };
    let total: usize = radix.iter().product();
    let buyer = FastBuyer::new(market);
    const CHUNK: usize = 1 << 14;
    let equilibria: Vec<usize> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(total));
            let mut d = digits(lo, &radix);
            let mut scratch = Vec::new();
            let mut revenue = vec![Money::ZERO; s];
            let mut found = Vec::new();
            for idx in lo..hi {
                buyer.revenues(&strats, &d, &mut scratch, &mut revenue);
                if (0..s).all(|i| revenue[i] >= tables[i][others_index(&d, i)]) {
                    found.push(idx);
                }
                // next mixed-radix index
                for k in (0..s).rev() {
                    d[k] += 1;
                    if d[k] < radix[k] {
                        break;
                    }
                    d[k] = 0;
                }
            }
            found
        })
        .collect();
    let witnesses = options.witnesses.then(|| {
        let mut ne = equilibria.iter().peekable();
        (0..total)
            .filter(|idx| {
                if ne.peek() == Some(&idx) {
                    ne.next();
                    false
                } else {
                    true
                }
            })
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|idx| {
                let p = profile(&digits(idx, &radix));
                let w = find_witness(market, &p).expect("rejected profile has a deviation");
                (p, w)
            })
            .collect()
    });
    Ok(NashSearch {
        equilibria: equilibria.into_iter().map(|idx| profile(&digits(idx, &radix))).collect(),
        profiles: total as u128,
        witnesses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Valuation;

    fn example() -> MarketInstance {
        // ε = 0.5, cap 5
        let mut m = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
        m.grid.price_cap = Money(10);
        m
    }

    #[test]
    fn example_deviation_from_three() {
        let m = example();
        let p = PriceProfile::from_units(&[&[6, 6], &[6, 6]]);
        let d = deviation(&m, &p, 1);
        assert_eq!(d.current_revenue, Money(6));
        // the best deviation is uniform 2.5 for 5.0; the split (1, 3) sells
        // only its cheap unit
        assert_eq!(d.best.revenue, Money(10));
        assert_eq!(d.gain(), Money(4));
        assert!(d.replay(&m, &p));
        let split = p.with_seller(1, vec![Money(2), Money(6)]);
        assert_eq!(demand(&m, &split).revenue(&split, 1), Money(2));
    }

    #[test]
    fn example_has_no_pure_equilibrium() {
        let m = example();
        let r = enumerate_pure_nash(&m, NashOptions { witnesses: true, ..Default::default() }).unwrap();
        assert_eq!(r.profiles, 66 * 66);
        assert!(r.equilibria.is_empty());
        let w = r.witnesses.unwrap();
        assert_eq!(w.len(), 66 * 66);
        assert!(w.iter().all(|(p, d)| d.gain() > Money::ZERO && d.replay(&m, p)));
    }

    #[test]
    fn single_unit_sellers_price_at_last_marginal() {
        let m = MarketInstance::homogeneous(1, &[1, 1], Valuation::from_units(&[5, 3]));
        let r = enumerate_pure_nash(&m, NashOptions::default()).unwrap();
        assert!(r.equilibria.contains(&PriceProfile::from_units(&[&[3], &[3]])));
        for p in &r.equilibria {
            for i in 0..2 {
                assert_eq!(deviation_gain(&m, p, i), Money::ZERO);
            }
        }
    }

    #[test]
    fn guard_refuses_big_spaces() {
        let m = MarketInstance::homogeneous(1000, &[3, 3], Valuation::from_units(&[5000; 6]));
        assert!(matches!(
            enumerate_pure_nash(&m, NashOptions::default()),
            Err(Error::Search(SearchError::TooLarge { .. }))
        ));
    }

    #[test]
    fn fast_buyer_matches_demand() {
        use crate::scenarios::{sample_random_instance, InstanceKind, SizeCaps};
        for kind in [InstanceKind::Homogeneous, InstanceKind::KAdditive] {
            for seed in 0..40 {
                let m = sample_random_instance(kind, seed, &SizeCaps { max_value: 4, ..Default::default() });
                let strats: Vec<_> = (0..m.seller_count()).map(|i| strategies(&m, i)).collect();
                let radix: Vec<usize> = strats.iter().map(Vec::len).collect();
                let buyer = FastBuyer::new(&m);
                let total: usize = radix.iter().product();
                let mut scratch = Vec::new();
                let mut out = vec![Money::ZERO; m.seller_count()];
                for idx in (0..total).step_by(total / 200 + 1) {
                    let d = digits(idx, &radix);
                    let p = PriceProfile::new(d.iter().enumerate().map(|(i, &k)| strats[i][k].clone()).collect());
                    buyer.revenues(&strats, &d, &mut scratch, &mut out);
                    assert_eq!(out, demand(&m, &p).revenues(&p), "{kind:?} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn item_strategies_are_sorted_within_groups() {
        let m = MarketInstance::k_additive(1, vec![vec![Money(2), Money(1), Money(2)]], 3);
        let st = strategies(&m, 0);
        // cap 3: 4 points; C(5,2) · 4
        assert_eq!(st.len(), 40);
        assert_eq!(profile_count(&m), 40);
        assert!(st.iter().all(|p| p[0] <= p[2]));
    }
}
