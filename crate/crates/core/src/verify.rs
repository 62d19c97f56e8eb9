//! Self-checking suites, one per reproduced claim.
//!
//! Every suite builds its instances from fixed seeds, runs the engine, and
//! reports a list of named checks with enough detail to see why one failed.
//! Comparisons are exact integer arithmetic except the logarithmic bounds,
//! which use a `1e-12` relative tolerance.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::Belief;
use crate::bounds::{ewg_bound, le_rel, lower_bound_growth, ratio, REL_TOL};
use crate::demand::{demand, welfare};
use crate::dynamics::{
    estimate_ewg, run, schedule_family, Engine, RunConfig, ScheduleKind, Scheduler, Trace,
};
use crate::equilibrium::{
    check_k_additive_welfare, check_ne_structure, construct_additive_ne, construct_unit_demand_ne,
    enumerate_pure_nash, fact_instance, is_pure_nash, merged_fact_instance, NashOptions,
    DEFAULT_PROFILE_LIMIT,
};
use crate::error::{Error, Result};
use crate::market::{MarketInstance, Uncertainty};
use crate::money::Money;
use crate::oracle::{oracle_best_response, oracle_optimal_bundle};
use crate::prices::PriceProfile;
use crate::response::{best_response_full_info, best_response_uncertain, sold_quantity_floor};
use crate::scenarios::{
    gen_example3, gen_hetero_cycle, gen_lower_bound, gen_theta_n_example, random_profile,
    sample_random_instance, InstanceKind, SizeCaps,
};

/// Default base seed for the randomized suites.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// `(id, name, summary)` of every suite, in order.
pub const SUITES: &[(u8, &str, &str)] = &[
    (1, "example3-nash", "two-seller example has no pure equilibrium"),
    (2, "example3-dynamics", "two-seller example settles at 3 units, 13/14 of optimal"),
    (3, "main-ewg", "sold-quantity floor and logarithmic welfare bound"),
    (4, "lower-bound", "lower-bound construction never sells more than 2r units"),
    (5, "uncertain-bound", "bad rounds are bounded under uncertain demand"),
    (6, "theta-n", "uninformed sellers stay stuck at low welfare"),
    (7, "bayes", "belief updates are monotone, consistent and exact"),
    (8, "oracles", "fast buyer and best responses equal exhaustive search"),
    (9, "ne-structure", "equilibria are empty or all units at m_n"),
    (10, "hetero-facts", "additive, unit-demand and 3-additive equilibria"),
    (11, "hetero-cycle", "heterogeneous dynamics cycle and sell V rarely"),
    (12, "k-additive-welfare", "k-additive equilibrium welfare bounds"),
];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub id: u8,
    pub name: String,
    pub summary: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub elapsed_ms: u128,
}

impl SuiteReport {
    /// `PASS [3] main-ewg: …` followed by the failed checks, if any.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} [{}] {}: {} ({} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.summary,
            self.elapsed_ms
        );
        for c in self.checks.iter().filter(|c| !c.passed) {
            s.push_str(&format!("\n    failed {}: {}", c.name, c.detail));
        }
        s
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Runs the suite called `name` (or numbered `name`).
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    let &(id, name, summary) = SUITES
        .iter()
        .find(|(id, n, _)| *n == name || id.to_string() == name)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "unknown suite {name:?}; known: {}",
                SUITES.iter().map(|s| s.1).collect::<Vec<_>>().join(", ")
            ))
        })?;
    let started = Instant::now();
    let mut c = Checks::default();
    match id {
        1 => example3_nash(&mut c)?,
        2 => example3_dynamics(&mut c, seed)?,
        3 => main_ewg(&mut c, seed)?,
        4 => lower_bound(&mut c, seed)?,
        5 => uncertain_bound(&mut c, seed)?,
        6 => theta_n(&mut c)?,
        7 => bayes(&mut c, seed)?,
        8 => oracles(&mut c, seed)?,
        9 => ne_structure(&mut c, seed)?,
        10 => hetero_facts(&mut c, seed)?,
        11 => hetero_cycle(&mut c)?,
        12 => k_additive_welfare(&mut c, seed)?,
        _ => unreachable!("suite table and dispatch agree"),
    }
    Ok(SuiteReport {
        id,
        name: name.to_string(),
        summary: summary.to_string(),
        seed,
        passed: c.0.iter().all(|x| x.passed),
        checks: c.0,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

/// Every suite in order.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run_suite(s.1, seed)).collect()
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn rational(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Up to three round-robin orders plus random schedules, five in all.
fn five_schedules(sellers: usize, seed: u64) -> Vec<Scheduler> {
    let mut out: Vec<Scheduler> = schedule_family(sellers, 0, 0)
        .into_iter()
        .filter(|s| !matches!(s.kind, ScheduleKind::Alternating))
        .take(3)
        .collect();
    let fill = 5 - out.len();
    out.extend((0..fill as u64).map(|k| Scheduler::random(seed.wrapping_add(k))));
    out
}

fn example3_nash(c: &mut Checks) -> Result<()> {
    let m = gen_example3();
    let r = enumerate_pure_nash(&m, NashOptions { limit: DEFAULT_PROFILE_LIMIT, witnesses: true })?;
    let bound = 15u128.pow(4);
    c.add(
        "profile space",
        r.profiles <= bound,
        format!("{} canonical profiles (bound {bound})", r.profiles),
    );
    c.add(
        "no pure equilibrium",
        r.equilibria.is_empty(),
        format!("{} equilibria", r.equilibria.len()),
    );
    let witnesses = r.witnesses.unwrap_or_default();
    let bad = witnesses
        .iter()
        .filter(|(p, d)| d.gain() == Money::ZERO || !d.replay(&m, p))
        .count();
    c.add(
        "every witness deviation replays",
        bad == 0 && witnesses.len() as u128 == r.profiles,
        format!("{} witnesses, {bad} failed replay", witnesses.len()),
    );
    Ok(())
}

fn example3_dynamics(c: &mut Checks, seed: u64) -> Result<()> {
    let m = gen_example3();
    let v = m.valuation()?;
    let n = m.total_supply();
    let threshold = m.seller_count() * v.top_marginal().units() as usize;
    let floor = sold_quantity_floor(&m)?;
    let mut r = rng(seed, 2);
    let initials: Vec<PriceProfile> = (0..20).map(|_| random_profile(&m, &mut r)).collect();
    let traces: Vec<Trace> = initials
        .par_iter()
        .map(|p| run(&m, &Scheduler::alternating(), p, RunConfig::rounds(threshold + 10)))
        .collect::<Result<_>>()?;
    let opt = m.optimal_welfare();
    let mut settle_worst = 0;
    let mut all_three = true;
    let mut all_cycles = true;
    let mut steady = true;
    for t in &traces {
        let Some(cycle) = &t.cycle else {
            all_cycles = false;
            continue;
        };
        all_cycles &= cycle.verified;
        let start = t.round_start(threshold).expect("cycle extends the trace");
        all_three &= t.steps_from(start).iter().all(|s| s.quantity == 3);
        steady &= t
            .steps_from(cycle.prefix)
            .iter()
            .all(|s| s.welfare.units() * 14 == opt.units() * 13);
        // first round after which every step sells 3
        let last_off = t.steps[..cycle.prefix + cycle.state_period]
            .iter()
            .rposition(|s| s.quantity != 3);
        let settle = last_off.map_or(0, |k| t.rounds.round_of(k).map_or(0, |r| r + 1));
        settle_worst = settle_worst.max(settle);
    }
    c.add("floor is 3 units", floor == 3, format!("min_i(n − n_i + μ_i) = {floor}"));
    c.add(
        "quantity 3 after the threshold",
        all_three,
        format!("threshold s·v(1)/ε = {threshold} rounds; settled within {settle_worst} rounds"),
    );
    c.add("cycle found and replayed", all_cycles, format!("{} runs", traces.len()));
    c.add(
        "steady welfare is 13/14 of optimal",
        steady,
        format!("OPT = {opt} units"),
    );
    let bound: f64 = ewg_bound(n, floor);
    c.add(
        "14/13 within 1 + ln(4/3)",
        le_rel(ratio::<f64>(14, 13), bound, REL_TOL),
        format!("14/13 = {:.6}, bound = {bound:.6}", 14.0 / 13.0),
    );
    Ok(())
}

fn main_ewg(c: &mut Checks, seed: u64) -> Result<()> {
    let caps = SizeCaps {
        min_sellers: 1,
        max_sellers: 3,
        max_supply: 4,
        max_total: 8,
        min_value: 0,
        max_value: 62,
        max_support: 1,
    };
    let results: Vec<(u64, String, bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let m = sample_random_instance(InstanceKind::Homogeneous, seed.wrapping_add(k), &caps);
            let mut r = rng(seed, 300 + k);
            let initial = random_profile(&m, &mut r);
            let schedules = five_schedules(m.seller_count(), seed.wrapping_add(k));
            let report = estimate_ewg(&m, &schedules, &[initial], None)?;
            let quantity_ok = report.runs.iter().all(|x| x.min_quantity >= report.quantity_floor);
            let detail = format!(
                "seed {}: supplies {:?}, floor {}, min quantity {}, alpha {:?} vs bound {:.6}",
                seed.wrapping_add(k),
                m.supplies(),
                report.quantity_floor,
                report.runs.iter().map(|x| x.min_quantity).min().unwrap_or(0),
                report.alpha_f64(),
                report.theorem_bound
            );
            Ok((k, detail, quantity_ok, report.within_bound))
        })
        .collect::<Result<_>>()?;
    let first_bad = |f: fn(&(u64, String, bool, bool)) -> bool| {
        results.iter().find(|x| !f(x)).map_or("100 instances × 5 schedules".to_string(), |x| x.1.clone())
    };
    c.add(
        "quantity floor reached by s·v(1)/ε rounds and kept",
        results.iter().all(|x| x.2),
        first_bad(|x| x.2),
    );
    c.add(
        "post-threshold welfare ≥ v(n)/(1 + ln(n/floor))",
        results.iter().all(|x| x.3),
        first_bad(|x| x.3),
    );
    Ok(())
}

fn lower_bound(c: &mut Checks, seed: u64) -> Result<()> {
    let m = gen_lower_bound(&[8, 2])?;
    let v = m.valuation()?;
    let n = m.total_supply();
    let r = n - m.max_supply();
    let mut schedules = schedule_family(2, 0, 0);
    schedules.extend((0..2).map(|k| Scheduler::random(seed.wrapping_add(k))));
    let traces: Vec<Trace> = schedules
        .par_iter()
        .map(|s| run(&m, s, &PriceProfile::at_cap(&m), RunConfig::rounds(200)))
        .collect::<Result<_>>()?;
    let max_q = traces
        .iter()
        .flat_map(|t| t.steps_from(0))
        .map(|s| s.quantity)
        .max()
        .unwrap_or(0);
    let max_w = traces
        .iter()
        .flat_map(|t| t.steps_from(0))
        .map(|s| s.welfare)
        .max()
        .unwrap_or(Money::ZERO);
    let opt = m.optimal_welfare();
    c.add(
        "at most 2r units ever sold",
        max_q <= 2 * r,
        format!("{} schedules; max quantity {max_q}, 2r = {}", schedules.len(), 2 * r),
    );
    // 2r(1 + ε) in units is 2r · m_1
    let cap = 2 * r as u64 * v.top_marginal().units();
    c.add(
        "welfare ≤ 2r(1+ε)",
        max_w.units() <= cap,
        format!("max welfare {max_w}, 2r(1+ε) = {cap}, OPT = {opt} units"),
    );
    let growth: f64 = lower_bound_growth(n, m.max_supply());
    let alpha = ratio::<f64>(opt.units(), max_w.units().max(1));
    c.add(
        "empirical ratio consistent with the lower bound",
        le_rel(growth, alpha, REL_TOL),
        format!("OPT/welfare ≥ {alpha:.4} vs (1/5)(ln(n/(n−n_max))−1) = {growth:.4}"),
    );
    Ok(())
}

fn uncertain_bound(c: &mut Checks, seed: u64) -> Result<()> {
    let caps = SizeCaps {
        min_sellers: 1,
        max_sellers: 3,
        max_supply: 3,
        max_total: 6,
        min_value: 1,
        max_value: 6,
        max_support: 3,
    };
    let results: Vec<(String, bool, bool)> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let m = sample_random_instance(InstanceKind::Uncertain, seed.wrapping_add(k), &caps);
            let mut r = rng(seed, 500 + k);
            let initial = random_profile(&m, &mut r);
            let mut schedules = vec![Scheduler::round_robin()];
            schedules.push(Scheduler::random(seed.wrapping_add(k)));
            let report = estimate_ewg(&m, &schedules, &[initial], None)?;
            let bad = report.bad_round_count.unwrap_or(0);
            let bounded = bad <= report.threshold_rounds && report.runs.iter().all(|x| !x.bad_rounds_recur);
            let detail = format!(
                "seed {}: {bad} bad rounds vs budget {}, welfare {} vs OPT {} (n − n_max + 1 = {})",
                seed.wrapping_add(k),
                report.threshold_rounds,
                report.min_post_threshold_welfare,
                report.optimal_welfare,
                report.quantity_floor
            );
            Ok((detail, bounded, report.within_bound))
        })
        .collect::<Result<_>>()?;
    let first_bad = |f: fn(&(String, bool, bool)) -> bool| {
        results.iter().find(|x| !f(x)).map_or("50 instances × 2 schedules".to_string(), |x| x.0.clone())
    };
    c.add("bad rounds within budget", results.iter().all(|x| x.1), first_bad(|x| x.1));
    c.add(
        "welfare outside bad rounds ≥ v*(n)(n − n_max + 1)/n",
        results.iter().all(|x| x.2),
        first_bad(|x| x.2),
    );
    Ok(())
}

fn theta_n(c: &mut Checks) -> Result<()> {
    let delta = rational(1, 100);
    let runs: Vec<(usize, MarketInstance, Trace)> = [8usize, 12, 16]
        .par_iter()
        .map(|&n| {
            let m = gen_theta_n_example(n, delta.clone())?;
            let t = run(&m, &Scheduler::round_robin(), &PriceProfile::at_cap(&m), RunConfig::rounds(500))?;
            Ok((n, m, t))
        })
        .collect::<Result<_>>()?;
    let (_, m12, t12) = &runs[1];
    let v3 = m12.uncertainty.as_ref().expect("uncertain").universe[0].value_at(3)?;
    let max_w = t12.steps_from(0).iter().map(|s| s.welfare).max().unwrap_or(Money::ZERO);
    c.add(
        "welfare below v*(3) at every step (n = 12)",
        max_w < v3,
        format!("max welfare {max_w} vs v*(3) = {v3} (ε = 1/{})", m12.grid.denom),
    );
    let stuck = t12
        .steps_from(0)
        .iter()
        .all(|s| !s.informative && s.support_sizes.as_ref().is_some_and(|z| z.iter().all(|&x| x == 2)));
    c.add(
        "supports stay size 2, no informative price (n = 12)",
        stuck,
        format!("{} steps, cycle {:?}", t12.steps.len(), t12.cycle.as_ref().map(|x| x.state_period)),
    );
    // OPT / best welfare ever reached, as an exact fraction
    let ratios: Vec<BigRational> = runs
        .iter()
        .map(|(_, m, t)| {
            let w = t.steps_from(0).iter().map(|s| s.welfare).max().unwrap_or(Money::ZERO);
            rational(m.optimal_welfare().units(), w.units().max(1))
        })
        .collect();
    let grows = ratios.windows(2).all(|w| w[0] < w[1]);
    let shown: Vec<String> = ratios
        .iter()
        .zip(&runs)
        .map(|(r, (n, _, _))| {
            let f = r.numer().to_string().parse::<f64>().unwrap_or(0.0)
                / r.denom().to_string().parse::<f64>().unwrap_or(1.0);
            format!("n={n}: {f:.3}")
        })
        .collect();
    c.add("OPT/welfare grows with n", grows, shown.join(", "));
    Ok(())
}

/// `market` with every seller certain of the true valuation, and the
/// matching full-information market.
fn singleton_pair(m: &MarketInstance) -> (MarketInstance, MarketInstance) {
    let u = m.uncertainty.as_ref().expect("uncertain");
    let truth = u.true_valuation;
    let mut certain = m.clone();
    certain.uncertainty = Some(Uncertainty {
        universe: u.universe.clone(),
        true_valuation: truth,
        priors: (0..m.seller_count()).map(|i| Belief::certain(i, truth)).collect(),
    });
    let mut full = m.clone();
    full.uncertainty = None;
    (certain, full)
}

fn bayes(c: &mut Checks, seed: u64) -> Result<()> {
    let caps = SizeCaps {
        min_sellers: 1,
        max_sellers: 3,
        max_supply: 3,
        max_total: 5,
        min_value: 0,
        max_value: 6,
        max_support: 3,
    };
    #[derive(Default, Clone, Copy)]
    struct Tally {
        monotone: bool,
        truth_kept: bool,
        quiet_unchanged: bool,
        informative_bounded: bool,
        singleton_exact: bool,
    }
    let tallies: Vec<(u64, Tally)> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let case = seed.wrapping_add(k);
            let m = sample_random_instance(InstanceKind::Uncertain, case, &caps);
            let u = m.uncertainty.as_ref().expect("uncertain");
            let sched = if k % 2 == 0 { Scheduler::round_robin() } else { Scheduler::random(case) };
            let mut r = rng(seed, 700 + k);
            let initial = random_profile(&m, &mut r);
            let mut engine = Engine::new(&m, &sched, &initial)?;
            let mut t = Tally {
                monotone: true,
                truth_kept: true,
                quiet_unchanged: true,
                informative_bounded: true,
                singleton_exact: true,
            };
            let budget: usize = u.priors.iter().map(|b| b.support_len() - 1).sum();
            let mut informative = 0;
            let steps = 8 * m.seller_count();
            for _ in 0..steps {
                let before: Vec<Belief> = engine.beliefs().expect("uncertain").to_vec();
                let step = engine.step()?;
                let after = engine.beliefs().expect("uncertain");
                for (b, a) in before.iter().zip(after) {
                    t.monotone &= a.support_len() <= b.support_len();
                    t.truth_kept &= a.support().any(|id| id == u.true_valuation);
                }
                if step.informative {
                    informative += 1;
                } else {
                    t.quiet_unchanged &= before.as_slice() == after;
                }
            }
            t.informative_bounded = informative <= budget;
            let (certain, full) = singleton_pair(&m);
            let a = run(&certain, &sched, &initial, RunConfig::full(6))?;
            let b = run(&full, &sched, &initial, RunConfig::full(6))?;
            t.singleton_exact = a.steps.len() == b.steps.len()
                && a.steps.iter().zip(&b.steps).all(|(x, y)| {
                    x.prices == y.prices
                        && x.purchase == y.purchase
                        && x.welfare == y.welfare
                        && x.mover == y.mover
                        && !x.informative
                });
            Ok((case, t))
        })
        .collect::<Result<_>>()?;
    let mut report = |name: &str, f: fn(&Tally) -> bool| {
        let bad: Vec<u64> = tallies.iter().filter(|x| !f(&x.1)).map(|x| x.0).collect();
        c.add(
            name,
            bad.is_empty(),
            match bad.first() {
                None => "1000 cases".to_string(),
                Some(s) => format!("{} failing cases, first seed {s}", bad.len()),
            },
        );
    };
    report("support non-increasing", |t| t.monotone);
    report("true valuation never eliminated", |t| t.truth_kept);
    report("uninformative step leaves beliefs unchanged", |t| t.quiet_unchanged);
    report("informative steps ≤ Σ(|supp| − 1)", |t| t.informative_bounded);
    report("singleton beliefs reproduce full information", |t| t.singleton_exact);
    Ok(())
}

fn oracles(c: &mut Checks, seed: u64) -> Result<()> {
    let small = SizeCaps {
        min_sellers: 1,
        max_sellers: 4,
        max_supply: 4,
        max_total: 10,
        min_value: 0,
        max_value: 9,
        max_support: 3,
    };
    // greedy buyer against every subset
    for (kind, label) in [(InstanceKind::Homogeneous, "homogeneous"), (InstanceKind::KAdditive, "k-additive")] {
        let bad: Vec<u64> = (0..1000u64)
            .into_par_iter()
            .filter_map(|k| {
                let case = seed.wrapping_add(k);
                let m = sample_random_instance(kind, case, &small);
                let p = random_profile(&m, &mut rng(seed, 800 + k));
                let fast = demand(&m, &p);
                let slow = oracle_optimal_bundle(&m, &p).ok()?;
                (!fast.same_bundle(&slow)).then_some(case)
            })
            .collect();
        c.add(
            &format!("greedy buyer = bundle oracle ({label})"),
            bad.is_empty(),
            format!("1000 cases, {} mismatches {:?}", bad.len(), bad.first()),
        );
    }
    let tiny = SizeCaps {
        max_sellers: 3,
        max_supply: 3,
        max_total: 6,
        max_value: 8,
        ..small
    };
    let response_cases = |kind: InstanceKind, count: u64, salt: u64| -> Vec<u64> {
        (0..count)
            .into_par_iter()
            .filter_map(|k| {
                let case = seed.wrapping_add(salt + k);
                let m = sample_random_instance(kind, case, &tiny);
                let mut r = rng(seed, salt + k);
                let p = random_profile(&m, &mut r);
                let i = (k as usize) % m.seller_count();
                let ok = match &m.uncertainty {
                    None => {
                        let fast = best_response_full_info(&m, i, &p);
                        let slow = oracle_best_response(&m, i, &p, None).ok()?;
                        slow.revenue == BigRational::from_integer(BigInt::from(fast.revenue.units()))
                            && slow.prices == fast.prices
                    }
                    Some(u) => {
                        let b = &u.priors[i];
                        let fast = best_response_uncertain(&m, i, &p, b);
                        let slow = oracle_best_response(&m, i, &p, Some(b)).ok()?;
                        slow.revenue == fast.expected_revenue && slow.prices == fast.prices
                    }
                };
                (!ok).then_some(case)
            })
            .collect()
    };
    for (kind, count, label) in [
        (InstanceKind::Homogeneous, 500, "uniform full-information response"),
        (InstanceKind::KAdditive, 200, "pruned heterogeneous response"),
        (InstanceKind::Uncertain, 200, "uncertain response"),
    ] {
        let bad = response_cases(kind, count, 10_000);
        c.add(
            &format!("{label} = response oracle"),
            bad.is_empty(),
            format!("{count} cases, {} mismatches {:?}", bad.len(), bad.first()),
        );
    }
    Ok(())
}

fn ne_structure(c: &mut Checks, seed: u64) -> Result<()> {
    let caps = SizeCaps {
        min_sellers: 2,
        max_sellers: 3,
        max_supply: 2,
        max_total: 4,
        min_value: 17,
        max_value: 24,
        max_support: 1,
    };
    let results: Vec<(u64, bool, bool, usize)> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let case = seed.wrapping_add(k);
            let m = sample_random_instance(InstanceKind::Homogeneous, case, &caps);
            let r = check_ne_structure(&m, DEFAULT_PROFILE_LIMIT)?;
            Ok((case, r.precondition, r.holds, r.equilibria.len()))
        })
        .collect::<Result<_>>()?;
    let pre = results.iter().all(|x| x.1);
    c.add("ε < m_n/(4n) on every instance", pre, format!("{} instances", results.len()));
    let bad: Vec<u64> = results.iter().filter(|x| !x.2).map(|x| x.0).collect();
    let nonempty = results.iter().filter(|x| x.3 > 0).count();
    c.add(
        "equilibria empty or exactly all units at m_n",
        bad.is_empty(),
        format!("{nonempty} instances with an equilibrium; failing seeds {bad:?}"),
    );
    Ok(())
}

fn hetero_facts(c: &mut Checks, seed: u64) -> Result<()> {
    let caps = SizeCaps {
        min_sellers: 2,
        max_sellers: 3,
        max_supply: 3,
        max_total: 6,
        min_value: 0,
        max_value: 12,
        max_support: 1,
    };
    let with_k = |case: u64, k: Option<usize>| {
        let mut m = sample_random_instance(InstanceKind::KAdditive, case, &caps);
        let k = k.unwrap_or(m.total_supply());
        m.buyer = crate::market::Buyer::KAdditive { k };
        m
    };
    let verdict = |m: &MarketInstance, p: &PriceProfile| {
        is_pure_nash(m, p) && welfare(m, &demand(m, p)) == m.optimal_welfare()
    };
    let additive: Vec<u64> = (0..20u64)
        .filter_map(|k| {
            let m = with_k(seed.wrapping_add(k), None);
            let p = construct_additive_ne(&m).ok()?;
            (!verdict(&m, &p)).then_some(seed.wrapping_add(k))
        })
        .collect();
    c.add(
        "additive profile is an efficient equilibrium",
        additive.is_empty(),
        format!("20 instances, failing seeds {additive:?}"),
    );
    let unit: Vec<u64> = (0..20u64)
        .filter_map(|k| {
            let m = with_k(seed.wrapping_add(100 + k), Some(1));
            let p = construct_unit_demand_ne(&m).ok()?;
            (!verdict(&m, &p)).then_some(seed.wrapping_add(100 + k))
        })
        .collect();
    c.add(
        "unit-demand profile is an efficient equilibrium",
        unit.is_empty(),
        format!("20 instances, failing seeds {unit:?}"),
    );
    let fact = fact_instance();
    let eqs = enumerate_pure_nash(&fact, NashOptions::default())?.equilibria;
    let target = PriceProfile::from_units(&[&[1], &[2, 2, 2]]);
    let w = welfare(&fact, &demand(&fact, &target));
    c.add(
        "3-additive instance: equilibrium with welfare 5ε vs OPT 6ε",
        eqs.contains(&target) && w == Money(5) && fact.optimal_welfare() == Money(6),
        format!("{} equilibria; target welfare {w}, OPT {}", eqs.len(), fact.optimal_welfare()),
    );
    let merged = merged_fact_instance();
    let meqs = enumerate_pure_nash(&merged, NashOptions::default())?.equilibria;
    let best = meqs
        .iter()
        .map(|p| welfare(&merged, &demand(&merged, p)))
        .max()
        .unwrap_or(Money::ZERO);
    c.add(
        "merged monopolist reaches 6ε",
        best == Money(6),
        format!("{} equilibria, best welfare {best}", meqs.len()),
    );
    Ok(())
}

/// The reduced cycling instance brute-forced for equilibria: three sellers,
/// five items, ε = 1/3 and V = 12.
pub fn reduced_hetero_cycle() -> MarketInstance {
    gen_hetero_cycle(3, 12, None).expect("valid parameters")
}

fn hetero_cycle(c: &mut Checks) -> Result<()> {
    let s = 5;
    let m = gen_hetero_cycle(s, 100, None)?;
    let t = run(
        &m,
        &Scheduler::new(ScheduleKind::ReverseIndex),
        &PriceProfile::at_cap(&m),
        RunConfig::rounds(100),
    )?;
    match &t.cycle {
        None => c.add("trace cycles", false, format!("no cycle in {} steps", t.steps.len())),
        Some(cycle) => {
            c.add(
                "trace cycles",
                cycle.verified,
                format!("prefix {}, period {}", cycle.prefix, cycle.period),
            );
            let steps = t.steps_from(cycle.prefix);
            let v_bought: Vec<bool> = steps.iter().map(|x| x.purchase.quantity(0) == 1).collect();
            let after_first: Vec<bool> = steps.iter().map(|x| x.mover == 0).collect();
            let extra = v_bought.iter().zip(&after_first).filter(|(b, f)| **b && !**f).count();
            let missed = v_bought.iter().zip(&after_first).filter(|(b, f)| !**b && **f).count();
            c.add(
                "V-item bought exactly after the first seller moves",
                extra == 0 && missed == 0,
                format!("{extra} purchases after other movers, {missed} first-seller moves without one"),
            );
            let bought = v_bought.iter().filter(|&&b| b).count();
            let frac = rational(bought as u64, steps.len() as u64);
            c.add(
                "fraction of steps with V bought ≤ 1/s",
                frac <= rational(1, s as u64),
                format!("{frac} of the cycle vs 1/{s}"),
            );
        }
    }
    let reduced = reduced_hetero_cycle();
    let r = enumerate_pure_nash(&reduced, NashOptions { limit: 20_000_000, witnesses: false })?;
    c.add(
        "reduced variant has no pure equilibrium",
        r.equilibria.is_empty(),
        format!("{} profiles, {} equilibria", r.profiles, r.equilibria.len()),
    );
    Ok(())
}

fn k_additive_welfare(c: &mut Checks, seed: u64) -> Result<()> {
    let any = SizeCaps {
        min_sellers: 1,
        max_sellers: 3,
        max_supply: 2,
        max_total: 4,
        min_value: 0,
        max_value: 8,
        max_support: 1,
    };
    let high = SizeCaps {
        min_value: 5,
        max_value: 9,
        ..any
    };
    let results: Vec<(u64, bool, Option<bool>, bool)> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let case = seed.wrapping_add(k);
            let caps = if k % 2 == 0 { any } else { high };
            let m = sample_random_instance(InstanceKind::KAdditive, case, &caps);
            let eqs = enumerate_pure_nash(&m, NashOptions::default())?.equilibria;
            let r = check_k_additive_welfare(&m, &eqs)?;
            let all_high = r.r.is_some_and(|r| r >= 5);
            let opt = r.optimal_welfare.units();
            let three_fifths = all_high.then(|| r.welfares.iter().all(|w| 5 * w.units() >= 3 * opt));
            Ok((case, r.additive_holds, three_fifths, r.ratio_holds))
        })
        .collect::<Result<_>>()?;
    let bad_add: Vec<u64> = results.iter().filter(|x| !x.1).map(|x| x.0).collect();
    c.add(
        "welfare ≥ OPT − 2kε",
        bad_add.is_empty(),
        format!("100 instances, failing seeds {bad_add:?}"),
    );
    let high_cases = results.iter().filter(|x| x.2.is_some()).count();
    let bad_ratio: Vec<u64> = results.iter().filter(|x| x.2 == Some(false)).map(|x| x.0).collect();
    c.add(
        "values ≥ 5ε ⇒ welfare ≥ (3/5)·OPT",
        bad_ratio.is_empty() && high_cases > 0,
        format!("{high_cases} instances with all values ≥ 5ε, failing seeds {bad_ratio:?}"),
    );
    let bad_r: Vec<u64> = results.iter().filter(|x| !x.3).map(|x| x.0).collect();
    c.add(
        "welfare ≥ OPT·(r − 2)/r",
        bad_r.is_empty(),
        format!("failing seeds {bad_r:?}"),
    );
    Ok(())
}

/// A sampled uncertain instance whose sellers all hold the true valuation
/// with certainty; used by the Bayesian suite and its tests.
pub fn certain_variant(m: &MarketInstance) -> MarketInstance {
    singleton_pair(m).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_table_is_numbered_in_order() {
        for (k, s) in SUITES.iter().enumerate() {
            assert_eq!(s.0 as usize, k + 1);
        }
        assert!(run_suite("no-such-suite", 0).is_err());
    }

    #[test]
    fn five_schedules_has_five() {
        for s in 1..=4 {
            assert_eq!(five_schedules(s, 3).len(), 5);
        }
    }

    #[test]
    fn reduced_instance_shape() {
        let m = reduced_hetero_cycle();
        assert_eq!((m.seller_count(), m.total_supply(), m.grid.denom), (3, 5, 3));
    }
}
