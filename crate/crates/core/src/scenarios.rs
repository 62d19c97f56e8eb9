//! Named constructions and random instance samplers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, ValuationId};
use crate::dynamics::{ScheduleKind, Scheduler};
use crate::error::{Error, Result};
use crate::market::{Buyer, MarketInstance, SellerSpec, Uncertainty};
use crate::money::{GridSpec, Money};
use crate::prices::PriceProfile;
use crate::valuation::Valuation;

/// An instance plus the run settings it is meant to be simulated with.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub market: MarketInstance,
    pub scheduler: Scheduler,
    /// `None` starts every seller at the price cap.
    pub initial: Option<PriceProfile>,
    pub horizon_rounds: usize,
}

impl Scenario {
    pub fn initial_prices(&self) -> PriceProfile {
        self.initial
            .clone()
            .unwrap_or_else(|| PriceProfile::at_cap(&self.market))
    }
}

/// Generator names accepted by [`named_scenario`].
pub const GENERATORS: &[&str] = &[
    "example3",
    "lower-bound",
    "theta-n",
    "hetero-cycle",
    "fact-3additive",
    "fact-merged",
];

/// Two sellers with two units each, marginals 5, 5, 3, 1, ε = 1/2, cap 5.
pub fn gen_example3() -> MarketInstance {
    let mut m = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
    m.grid.price_cap = Money(10);
    m
}

/// `lcm(1..=d)` for small `d`, or `lcm(1..=12)` with values rounded down
/// beyond that.
fn harmonic_denominator(d: u64) -> u64 {
    (1..=d.min(12)).fold(1, |a: u64, b| a.lcm(&b))
}

/// Marginals: `2r` units at `1 + ε`, then blocks of `r` units at 1/3, 1/4, …
/// until `n`, where `r = n − n_max`. Requires `n / r > 3`.
pub fn gen_lower_bound(supplies: &[usize]) -> Result<MarketInstance> {
    let n: usize = supplies.iter().sum();
    let n_max = supplies.iter().copied().max().unwrap_or(0);
    let r = n - n_max;
    if r == 0 || n <= 3 * r {
        return Err(Error::Precondition(format!(
            "needs n / (n − n_max) > 3, got n = {n}, n − n_max = {r}"
        )));
    }
    let blocks = (n - 2 * r).div_ceil(r) as u64;
    let d = harmonic_denominator(2 + blocks);
    let mut marginals = vec![Money(d + 1); 2 * r];
    for b in 0..blocks {
        let value = Money(d / (3 + b));
        for _ in 0..r.min(n - marginals.len()) {
            marginals.push(value);
        }
    }
    let v = Valuation::new(marginals);
    if !v.is_non_increasing() || v.marginal(n) == Money::ZERO {
        return Err(Error::Precondition(
            "rounded marginals are not positive and non-increasing".into(),
        ));
    }
    Ok(MarketInstance::homogeneous(d, supplies, v))
}

/// Two sellers holding 1 and `n − 1` units. The true valuation has marginals
/// `1+ε, 1+ε, 1/3, 1/4, …, 1/4`; both sellers believe it with probability
/// `δ` and otherwise believe in `1+ε, 1+ε, 1/3, 1/4, 1/5, …, 1/n`.
/// Values are exact for `n ≤ 12` and rounded down to `ε = 1/27720` beyond.
pub fn gen_theta_n_example(n: usize, delta: BigRational) -> Result<MarketInstance> {
    if !(6..=16).contains(&n) {
        return Err(Error::Precondition(format!("needs 6 ≤ n ≤ 16, got {n}")));
    }
    let zero = BigRational::from_integer(BigInt::from(0));
    let one = BigRational::from_integer(BigInt::from(1));
    if delta <= zero || delta >= one {
        return Err(Error::Precondition("δ must lie strictly between 0 and 1".into()));
    }
    let d = harmonic_denominator(n as u64);
    let head = [Money(d + 1), Money(d + 1), Money(d / 3)];
    let truth: Vec<Money> = head
        .iter()
        .copied()
        .chain(std::iter::repeat(Money(d / 4)).take(n - 3))
        .collect();
    let believed: Vec<Money> = head
        .iter()
        .copied()
        .chain((4..=n as u64).map(|k| Money(d / k)))
        .collect();
    let truth = Valuation::new(truth);
    let believed = Valuation::new(believed);
    if !believed.is_non_increasing() {
        return Err(Error::Precondition("rounded marginals not non-increasing".into()));
    }
    let prior = |owner| {
        Belief::new(
            owner,
            vec![(ValuationId(0), delta.clone()), (ValuationId(1), &one - &delta)],
        )
    };
    let mut m = MarketInstance::homogeneous(d, &[1, n - 1], truth.clone());
    m.uncertainty = Some(Uncertainty {
        universe: vec![truth, believed],
        true_valuation: ValuationId(0),
        priors: vec![prior(0), prior(1)],
    });
    Ok(m)
}

/// `s` sellers and an `s`-additive buyer, ε = 1/s: seller 1 holds one item
/// worth `V`, sellers 2..s−1 one item worth 10 each, seller `s` holds `s`
/// items worth 10. `denom` overrides the grid (decoupling it from `s`).
pub fn gen_hetero_cycle(s: usize, v: u64, denom: Option<u64>) -> Result<MarketInstance> {
    if s < 2 {
        return Err(Error::Precondition("needs at least two sellers".into()));
    }
    let d = denom.unwrap_or(s as u64);
    let mut items = vec![vec![Money(v * d)]];
    for _ in 2..s {
        items.push(vec![Money(10 * d)]);
    }
    items.push(vec![Money(10 * d); s]);
    Ok(MarketInstance::k_additive(d, items, s))
}

/// Looks up a generator by name with its default parameters and settings.
pub fn named_scenario(name: &str) -> Result<Scenario> {
    let half = BigRational::new(BigInt::from(1), BigInt::from(100));
    let (market, scheduler, horizon_rounds) = match name {
        "example3" => (gen_example3(), Scheduler::alternating(), 100),
        "lower-bound" => (gen_lower_bound(&[8, 2])?, Scheduler::round_robin(), 200),
        "theta-n" => (gen_theta_n_example(12, half)?, Scheduler::round_robin(), 500),
        "hetero-cycle" => (
            gen_hetero_cycle(5, 100, None)?,
            Scheduler::new(ScheduleKind::ReverseIndex),
            100,
        ),
        "fact-3additive" => (crate::equilibrium::fact_instance(), Scheduler::round_robin(), 20),
        "fact-merged" => (crate::equilibrium::merged_fact_instance(), Scheduler::round_robin(), 20),
        other => {
            return Err(Error::Precondition(format!(
                "unknown generator {other:?}; known: {}",
                GENERATORS.join(", ")
            )))
        }
    };
    Ok(Scenario {
        name: name.to_string(),
        market,
        scheduler,
        initial: None,
        horizon_rounds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Homogeneous,
    KAdditive,
    Uncertain,
}

/// Size limits for [`sample_random_instance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeCaps {
    pub min_sellers: usize,
    pub max_sellers: usize,
    /// Most units (or items) per seller.
    pub max_supply: usize,
    /// Most units (or items) in total.
    pub max_total: usize,
    /// Values and marginals are drawn from `min_value..=max_value` units.
    pub min_value: u64,
    pub max_value: u64,
    /// Most valuations in the uncertain table.
    pub max_support: usize,
}

impl Default for SizeCaps {
    fn default() -> Self {
        SizeCaps {
            min_sellers: 1,
            max_sellers: 3,
            max_supply: 3,
            max_total: 6,
            min_value: 0,
            max_value: 12,
            max_support: 3,
        }
    }
}

fn sorted_marginals(rng: &mut ChaCha8Rng, n: usize, caps: &SizeCaps) -> Valuation {
    let mut m: Vec<u64> = (0..n)
        .map(|_| rng.gen_range(caps.min_value..=caps.max_value))
        .collect();
    m.sort_unstable_by(|a, b| b.cmp(a));
    Valuation::from_units(&m)
}

fn random_supplies(rng: &mut ChaCha8Rng, caps: &SizeCaps) -> Vec<usize> {
    let s = rng.gen_range(caps.min_sellers..=caps.max_sellers.max(caps.min_sellers));
    let mut supplies = vec![1; s];
    let mut room = caps.max_total.saturating_sub(s);
    for n in supplies.iter_mut() {
        let extra = rng.gen_range(0..=caps.max_supply.saturating_sub(1).min(room));
        *n += extra;
        room -= extra;
    }
    supplies
}

/// A reproducible random instance that passes validation. The grid is
/// ε = 1 with the default cap; values are in units.
pub fn sample_random_instance(kind: InstanceKind, seed: u64, caps: &SizeCaps) -> MarketInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let supplies = random_supplies(&mut rng, caps);
    let n: usize = supplies.iter().sum();
    match kind {
        InstanceKind::Homogeneous => {
            MarketInstance::homogeneous(1, &supplies, sorted_marginals(&mut rng, n, caps))
        }
        InstanceKind::KAdditive => {
            let items: Vec<Vec<Money>> = supplies
                .iter()
                .map(|&c| {
                    (0..c)
                        .map(|_| Money(rng.gen_range(caps.min_value..=caps.max_value)))
                        .collect()
                })
                .collect();
            let k = rng.gen_range(1..=n);
            MarketInstance::k_additive(1, items, k)
        }
        InstanceKind::Uncertain => {
            let size = rng.gen_range(1..=caps.max_support.max(1));
            let universe: Vec<Valuation> =
                (0..size).map(|_| sorted_marginals(&mut rng, n, caps)).collect();
            let priors = (0..supplies.len())
                .map(|owner| {
                    let mut ids: Vec<usize> = (1..size).filter(|_| rng.gen_bool(0.6)).collect();
                    ids.push(0);
                    ids.sort_unstable();
                    let weights: Vec<i64> = ids.iter().map(|_| rng.gen_range(1..=4)).collect();
                    let total: i64 = weights.iter().sum();
                    Belief::new(
                        owner,
                        ids.iter()
                            .zip(&weights)
                            .map(|(&id, &w)| {
                                (ValuationId(id), BigRational::new(BigInt::from(w), BigInt::from(total)))
                            })
                            .collect(),
                    )
                })
                .collect();
            let max = universe.iter().map(Valuation::top_marginal).max().unwrap_or(Money::ZERO);
            MarketInstance {
                grid: GridSpec::with_default_cap(1, max),
                sellers: supplies.iter().map(|&c| SellerSpec::units(c)).collect(),
                buyer: Buyer::Homogeneous(universe[0].clone()),
                uncertainty: Some(Uncertainty {
                    universe,
                    true_valuation: ValuationId(0),
                    priors,
                }),
            }
        }
    }
}

/// A random price profile on the grid (canonical form).
pub fn random_profile(market: &MarketInstance, rng: &mut impl Rng) -> PriceProfile {
    let cap = market.grid.price_cap.units();
    let p = PriceProfile::new(
        market
            .sellers
            .iter()
            .map(|s| (0..s.supply()).map(|_| Money(rng.gen_range(0..=cap))).collect())
            .collect(),
    );
    p.canonical(market)
}

/// A random fair move order over `sellers` sellers: a shuffled round robin.
pub fn random_order(sellers: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sellers).collect();
    order.shuffle(rng);
    order
}
