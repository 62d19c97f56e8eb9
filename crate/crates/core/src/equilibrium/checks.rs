//! Equilibrium structure claims checked by enumeration.

use serde::Serialize;

use crate::demand::{demand, welfare};
use crate::error::{Error, Result};
use crate::market::{Buyer, MarketInstance};
use crate::money::Money;
use crate::prices::PriceProfile;

use super::{enumerate_pure_nash, NashOptions};

#[derive(Clone, Debug, Serialize)]
pub struct NeStructureReport {
    /// `m_n > 0`, at least two sellers and `ε < m_n / (4n)`.
    pub precondition: bool,
    pub note: Option<String>,
    pub equilibria: Vec<PriceProfile>,
    /// The equilibrium set is empty or exactly every seller uniform at
    /// `m_n`, selling all `n` units.
    pub holds: bool,
}

/// Enumerates the equilibria of a homogeneous instance and checks that any
/// equilibrium prices every unit at `m_n` and sells everything.
pub fn check_ne_structure(market: &MarketInstance, limit: u128) -> Result<NeStructureReport> {
    let v = market.valuation()?;
    let n = market.total_supply();
    let m_n = v.marginal(n);
    let precondition = m_n > Money::ZERO
        && market.seller_count() >= 2
        && m_n.units() > 4 * n as u64;
    if !precondition {
        return Ok(NeStructureReport {
            precondition,
            note: Some(format!(
                "skipped: needs m_n > 0, s ≥ 2 and ε < m_n/(4n) (m_n = {m_n} units, n = {n})"
            )),
            equilibria: Vec::new(),
            holds: true,
        });
    }
    let found = enumerate_pure_nash(market, NashOptions { limit, witnesses: false })?;
    let efficient = PriceProfile::uniform(market, m_n);
    let holds = found.equilibria.is_empty()
        || (found.equilibria == [efficient.clone()] && demand(market, &efficient).total() == n);
    Ok(NeStructureReport {
        precondition,
        note: None,
        equilibria: found.equilibria,
        holds,
    })
}

fn item_rows(market: &MarketInstance) -> Result<Vec<Vec<Money>>> {
    (0..market.seller_count())
        .map(|i| Ok(market.item_values(i)?.to_vec()))
        .collect()
}

/// Every item priced at the buyer's value. An equilibrium for an additive
/// buyer (`k` at least the number of items), who then buys everything.
pub fn construct_additive_ne(market: &MarketInstance) -> Result<PriceProfile> {
    let k = market.demand_limit()?;
    if k < market.total_supply() {
        return Err(Error::Precondition(format!(
            "additive buyer needs k ≥ {} items, got k = {k}",
            market.total_supply()
        )));
    }
    Ok(PriceProfile::new(item_rows(market)?))
}

/// Equilibrium for a unit-demand buyer (`k = 1`). The most preferred holder
/// of a most valuable item prices all its items at `v_max − v_2`, where
/// `v_2` is the best item anyone else holds, and the others price at 0.
/// When a more preferred seller holds a `v_2` item the buyer would take
/// that one on the tie, so the price drops by one unit to keep the sale.
pub fn construct_unit_demand_ne(market: &MarketInstance) -> Result<PriceProfile> {
    if market.demand_limit()? != 1 {
        return Err(Error::Precondition("unit-demand buyer needs k = 1".into()));
    }
    let rows = item_rows(market)?;
    let best = |row: &Vec<Money>| row.iter().copied().max().unwrap_or(Money::ZERO);
    let v_max = rows.iter().map(best).max().unwrap_or(Money::ZERO);
    let star = rows.iter().position(|r| best(r) == v_max).expect("some seller");
    let v_2 = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != star)
        .map(|(_, r)| best(r))
        .max()
        .unwrap_or(Money::ZERO);
    let tie_lost = rows[..star].iter().any(|r| best(r) == v_2);
    let mut price = v_max - v_2;
    if tie_lost {
        price = price.saturating_sub(Money(1));
    }
    Ok(PriceProfile::new(
        rows.iter()
            .enumerate()
            .map(|(i, r)| vec![if i == star { price } else { Money::ZERO }; r.len()])
            .collect(),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct KAdditiveWelfareReport {
    pub optimal_welfare: Money,
    pub k: usize,
    /// Welfare of each equilibrium, in order.
    pub welfares: Vec<Money>,
    /// Every equilibrium reaches `OPT − 2kε`.
    pub additive_holds: bool,
    /// `r` with every item value at least `r·ε`, when `r > 2`.
    pub r: Option<u64>,
    /// Every equilibrium reaches `OPT · (r − 2)/r` (vacuous without `r`).
    pub ratio_holds: bool,
}

/// Checks the additive and multiplicative welfare bounds for a `k`-additive
/// buyer over a list of equilibria.
pub fn check_k_additive_welfare(
    market: &MarketInstance,
    equilibria: &[PriceProfile],
) -> Result<KAdditiveWelfareReport> {
    let k = market.demand_limit()?;
    let opt = market.optimal_welfare();
    let welfares: Vec<Money> = equilibria
        .iter()
        .map(|p| welfare(market, &demand(market, p)))
        .collect();
    let loss = 2 * k as u64;
    let additive_holds = welfares.iter().all(|w| w.units() + loss >= opt.units());
    let min_value = item_rows(market)?
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(Money::ZERO)
        .units();
    let r = (min_value > 2).then_some(min_value);
    let ratio_holds = match r {
        Some(r) => welfares
            .iter()
            .all(|w| w.units() as u128 * r as u128 >= opt.units() as u128 * (r - 2) as u128),
        None => true,
    };
    Ok(KAdditiveWelfareReport {
        optimal_welfare: opt,
        k,
        welfares,
        additive_holds,
        r,
        ratio_holds,
    })
}

/// Two sellers, `k = 3`: seller 1 holds one item worth `ε`, seller 2 three
/// items worth `2ε` each.
pub fn fact_instance() -> MarketInstance {
    MarketInstance::k_additive(1, vec![vec![Money(1)], vec![Money(2); 3]], 3)
}

/// The same items held by a single seller.
pub fn merged_fact_instance() -> MarketInstance {
    MarketInstance::k_additive(1, vec![vec![Money(1), Money(2), Money(2), Money(2)]], 3)
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingReport {
    pub merged_equilibria: Vec<PriceProfile>,
    pub merged_welfares: Vec<Money>,
    pub split_equilibria: Vec<PriceProfile>,
    pub split_welfares: Vec<Money>,
    /// Best merged equilibrium welfare minus worst split equilibrium welfare.
    pub welfare_drop: Money,
}

/// Compares equilibrium welfare when one seller's items are split between
/// two sellers.
pub fn check_splitting_remark(merged: &MarketInstance, split: &MarketInstance) -> Result<SplittingReport> {
    if !matches!(merged.buyer, Buyer::KAdditive { .. }) {
        return Err(Error::Precondition("splitting compares k-additive instances".into()));
    }
    let welfares = |m: &MarketInstance, eq: &[PriceProfile]| -> Vec<Money> {
        eq.iter().map(|p| welfare(m, &demand(m, p))).collect()
    };
    let me = enumerate_pure_nash(merged, NashOptions::default())?.equilibria;
    let se = enumerate_pure_nash(split, NashOptions::default())?.equilibria;
    let mw = welfares(merged, &me);
    let sw = welfares(split, &se);
    let best_merged = mw.iter().copied().max().unwrap_or(Money::ZERO);
    let worst_split = sw.iter().copied().min().unwrap_or(Money::ZERO);
    Ok(SplittingReport {
        welfare_drop: best_merged.saturating_sub(worst_split),
        merged_equilibria: me,
        merged_welfares: mw,
        split_equilibria: se,
        split_welfares: sw,
    })
}
