//! Empirical eventual welfare guarantee over a family of schedules.
//!
//! All fair schedules cannot be enumerated, so this is an empirical lower
//! bound on the true guarantee, checked only against the proven upper bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{ewg_bound, le_rel, ratio, REL_TOL};
use crate::error::{Error, Result};
use crate::market::MarketInstance;
use crate::money::Money;
use crate::prices::PriceProfile;
use crate::response::sold_quantity_floor;

use super::{run, CycleReport, RunConfig, ScheduleKind, Scheduler, Trace};

/// One simulated run inside an [`EwgReport`].
#[derive(Clone, Debug, Serialize)]
pub struct EwgRun {
    pub schedule: Scheduler,
    pub initial: PriceProfile,
    /// Step at which the threshold round starts (full information).
    pub threshold_step: Option<usize>,
    /// Least welfare at or after the threshold (full information) or
    /// outside bad rounds (uncertain demand).
    pub min_welfare: Money,
    /// Least quantity at or after the threshold.
    pub min_quantity: usize,
    /// Rounds containing a step that sold fewer than `n − n_max + 1` units.
    pub bad_rounds: usize,
    /// Some bad step lies on the final cycle, so bad rounds never stop.
    pub bad_rounds_recur: bool,
    pub cycle: Option<CycleReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EwgReport {
    pub optimal_welfare: Money,
    pub uncertain: bool,
    /// Full information: `s · v(1)/ε` rounds. Uncertain demand: the bad-round
    /// budget `(s · K/ε) · Σ_i |supp(B_i^0)|`.
    pub threshold_rounds: usize,
    /// `min_i (n − n_i + μ_i)` (full information) or `n − n_max + 1`.
    pub quantity_floor: usize,
    pub min_post_threshold_welfare: Money,
    /// `W* / min welfare`, or `None` when welfare reached zero.
    #[serde(serialize_with = "serialize_alpha")]
    pub empirical_alpha: Option<BigRational>,
    /// Full information: `1 + ln(n / floor)`. Uncertain: `n / (n − n_max + 1)`.
    pub theorem_bound: f64,
    pub within_bound: bool,
    pub bad_round_count: Option<usize>,
    pub runs: Vec<EwgRun>,
}

fn serialize_alpha<S: serde::Serializer>(
    a: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match a {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl EwgReport {
    pub fn alpha_f64(&self) -> Option<f64> {
        let a = self.empirical_alpha.as_ref()?;
        let (n, d) = (a.numer().to_string(), a.denom().to_string());
        Some(n.parse::<f64>().ok()? / d.parse::<f64>().ok()?)
    }
}

/// Round-robin over every seller order (for up to five sellers, otherwise
/// just the identity and reverse orders), alternation for two sellers, and
/// `random` seeded random schedules.
pub fn schedule_family(sellers: usize, random: usize, seed: u64) -> Vec<Scheduler> {
    let mut out: Vec<Scheduler> = if sellers <= 5 {
        permutations(sellers).into_iter().map(Scheduler::with_order).collect()
    } else {
        vec![
            Scheduler::round_robin(),
            Scheduler::new(ScheduleKind::ReverseIndex),
        ]
    };
    if sellers == 2 {
        out.push(Scheduler::alternating());
    }
    out.extend((0..random as u64).map(|k| Scheduler::random(seed.wrapping_add(k))));
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let x = rest.remove(k);
            prefix.push(x);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(k, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    out
}

/// Runs every schedule from every initial profile and reports the worst
/// eventual welfare seen. `horizon_rounds` defaults to the threshold plus
/// ten rounds.
pub fn estimate_ewg(
    market: &MarketInstance,
    schedules: &[Scheduler],
    initials: &[PriceProfile],
    horizon_rounds: Option<usize>,
) -> Result<EwgReport> {
    let v = market.valuation()?;
    let n = market.total_supply();
    let s = market.seller_count();
    let uncertain = market.is_uncertain();
    let optimal = market.optimal_welfare();
    let (threshold, floor) = match &market.uncertainty {
        None => (s * v.top_marginal().units() as usize, sold_quantity_floor(market)?),
        Some(u) => {
            let k = u
                .priors
                .iter()
                .flat_map(|b| b.support())
                .map(|id| u.universe[id.0].top_marginal().units() as usize)
                .max()
                .unwrap_or(0);
            let supports: usize = u.priors.iter().map(|b| b.support_len()).sum();
            (s * k * supports, n - market.max_supply() + 1)
        }
    };
    let horizon = horizon_rounds.unwrap_or(threshold + 10);
    let jobs: Vec<(&Scheduler, &PriceProfile)> = schedules
        .iter()
        .flat_map(|sch| initials.iter().map(move |p| (sch, p)))
        .collect();
    let runs: Vec<EwgRun> = jobs
        .par_iter()
        .map(|(sch, p)| {
            let trace = run(market, sch, p, RunConfig::rounds(horizon))?;
            if uncertain {
                Ok(uncertain_run(sch, &trace, floor))
            } else {
                full_info_run(sch, &trace, threshold)
            }
        })
        .collect::<Result<_>>()?;
    let min = runs.iter().map(|r| r.min_welfare).min().unwrap_or(optimal);
    let alpha = (min > Money::ZERO).then(|| {
        BigRational::new(BigInt::from(optimal.units()), BigInt::from(min.units()))
    });
    let (theorem_bound, within_bound) = if uncertain {
        let good = n - market.max_supply() + 1;
        let exact = min.units() as u128 * n as u128 >= optimal.units() as u128 * good as u128;
        (ratio::<f64>(n as u64, good as u64), exact)
    } else {
        let bound: f64 = ewg_bound(n, floor);
        let ok = match &alpha {
            Some(_) => le_rel(ratio::<f64>(optimal.units(), min.units()), bound, REL_TOL),
            // welfare hit zero: only fine when nothing could be gained
            None => optimal == Money::ZERO,
        };
        (bound, ok)
    };
    Ok(EwgReport {
        optimal_welfare: optimal,
        uncertain,
        threshold_rounds: threshold,
        quantity_floor: floor,
        min_post_threshold_welfare: min,
        empirical_alpha: alpha,
        theorem_bound,
        within_bound,
        bad_round_count: uncertain.then(|| runs.iter().map(|r| r.bad_rounds).max().unwrap_or(0)),
        runs,
    })
}

fn full_info_run(schedule: &Scheduler, trace: &Trace, threshold: usize) -> Result<EwgRun> {
    let start = trace.round_start(threshold).ok_or_else(|| {
        Error::Precondition(format!(
            "trace ended after {} rounds without a cycle, before the threshold of {threshold}",
            trace.rounds.complete()
        ))
    })?;
    let tail = trace.steps_from(start);
    Ok(EwgRun {
        schedule: schedule.clone(),
        initial: trace.initial.clone(),
        threshold_step: Some(start),
        min_welfare: tail.iter().map(|s| s.welfare).min().unwrap_or(Money::ZERO),
        min_quantity: tail.iter().map(|s| s.quantity).min().unwrap_or(0),
        bad_rounds: 0,
        bad_rounds_recur: false,
        cycle: trace.cycle.clone(),
    })
}

fn uncertain_run(schedule: &Scheduler, trace: &Trace, floor: usize) -> EwgRun {
    let b = &trace.rounds.boundaries;
    // the unfinished last round counts as a round of its own
    let mut spans: Vec<(usize, usize)> = b.windows(2).map(|w| (w[0], w[1])).collect();
    let last = *b.last().expect("r_0 exists");
    if last < trace.steps.len() {
        spans.push((last, trace.steps.len()));
    }
    let mut bad_rounds = 0;
    let mut min_welfare: Option<Money> = None;
    let mut min_quantity: Option<usize> = None;
    for (a, z) in spans {
        let steps = &trace.steps[a..z];
        if steps.iter().any(|s| s.quantity < floor) {
            bad_rounds += 1;
        } else {
            for s in steps {
                min_welfare = Some(min_welfare.map_or(s.welfare, |m| m.min(s.welfare)));
                min_quantity = Some(min_quantity.map_or(s.quantity, |m| m.min(s.quantity)));
            }
        }
    }
    let bad_rounds_recur = trace
        .cycle
        .as_ref()
        .is_some_and(|c| trace.steps_from(c.prefix).iter().any(|s| s.quantity < floor));
    EwgRun {
        schedule: schedule.clone(),
        initial: trace.initial.clone(),
        threshold_step: None,
        min_welfare: min_welfare.unwrap_or(Money::ZERO),
        min_quantity: min_quantity.unwrap_or(0),
        bad_rounds,
        bad_rounds_recur,
        cycle: trace.cycle.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::monopolist_quantity;
    use crate::valuation::Valuation;

    #[test]
    fn example_alpha_is_fourteen_thirteenths() {
        let m = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
        let initials = vec![PriceProfile::at_cap(&m), PriceProfile::from_units(&[&[0, 0], &[0, 0]])];
        let r = estimate_ewg(&m, &[Scheduler::alternating()], &initials, None).unwrap();
        assert_eq!(r.threshold_rounds, 20);
        assert_eq!(r.quantity_floor, 3);
        assert_eq!(
            r.empirical_alpha,
            Some(BigRational::new(BigInt::from(14), BigInt::from(13)))
        );
        assert!(r.within_bound);
    }

    #[test]
    fn monopolist_alpha_is_value_over_mu_value() {
        let v = Valuation::from_units(&[5, 5, 3, 1]);
        let m = MarketInstance::homogeneous(1, &[4], v.clone());
        let mu = monopolist_quantity(&v, 4, 4);
        let r = estimate_ewg(&m, &schedule_family(1, 2, 7), &[PriceProfile::at_cap(&m)], None).unwrap();
        assert_eq!(r.min_post_threshold_welfare, v.value_at(mu).unwrap());
    }

    #[test]
    fn family_sizes() {
        assert_eq!(schedule_family(3, 0, 0).len(), 6);
        assert_eq!(schedule_family(2, 3, 0).len(), 2 + 1 + 3);
    }
}
