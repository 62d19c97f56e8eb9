//! The repeated pricing game.
//!
//! At every time-step one seller, picked by the scheduler, replaces its
//! prices with a best response to everyone else's current prices; the buyer
//! then purchases greedily and, with uncertain demand, every seller updates
//! its belief on what the buyer bought. A simulation is strictly sequential
//! and fully determined by the instance, the schedule and the starting
//! prices.

mod ewg;
mod rounds;
mod scheduler;

pub use ewg::{estimate_ewg, schedule_family, EwgReport, EwgRun};
pub use rounds::{segment_rounds, Rounds};
pub use scheduler::{ScheduleKind, ScheduleState, Scheduler};

use std::collections::HashMap;

use serde::Serialize;

use crate::belief::{bayes_update, classify_informative, Belief};
use crate::demand::{demand, welfare};
use crate::error::Result;
use crate::market::MarketInstance;
use crate::money::Money;
use crate::prices::{PriceProfile, Purchase};
use crate::response::{best_response_full_info, best_response_uncertain, last_considered_seller};

/// One time-step of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub t: usize,
    pub mover: usize,
    /// Prices after the mover's response, in canonical form.
    pub prices: PriceProfile,
    pub purchase: Purchase,
    pub quantity: usize,
    pub welfare: Money,
    pub revenues: Vec<Money>,
    /// Belief support sizes after this step's update (uncertain demand only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_sizes: Option<Vec<usize>>,
    /// Whether the posted prices were informative for some seller.
    pub informative: bool,
    /// The seller the buyer visits last, when every seller prices uniformly.
    pub last_considered: Option<usize>,
}

/// A recurrence of the full dynamic state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    /// Steps before the cycle is entered.
    pub prefix: usize,
    /// Smallest period of the observable sequence (prices and purchases)
    /// within the cycle; a fixed point has period 1.
    pub period: usize,
    /// Period of the full state, which also includes the scheduler phase
    /// and the beliefs.
    pub state_period: usize,
    /// One further period was simulated and reproduced the cycle exactly.
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub initial: PriceProfile,
    pub steps: Vec<TraceStep>,
    pub rounds: Rounds,
    pub cycle: Option<CycleReport>,
}

impl Trace {
    pub fn moves(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.mover).collect()
    }

    /// The step taken at time `t`, following the cycle past the end of the
    /// recorded steps. `None` past the end when no cycle was found.
    pub fn step_at(&self, t: usize) -> Option<&TraceStep> {
        if t < self.steps.len() {
            return Some(&self.steps[t]);
        }
        let c = self.cycle.as_ref()?;
        Some(&self.steps[c.prefix + (t - c.prefix) % c.state_period])
    }

    /// Every distinct step occurring at some time `≥ t`: the recorded tail,
    /// plus the whole cycle when one was found (it recurs forever).
    pub fn steps_from(&self, t: usize) -> &[TraceStep] {
        match &self.cycle {
            Some(c) => {
                let end = c.prefix + c.state_period;
                &self.steps[t.min(c.prefix)..end]
            }
            None => &self.steps[t.min(self.steps.len())..],
        }
    }

    /// Step index where round `r` starts (`r = 0` is step 0), extending the
    /// move sequence through the cycle if needed. `None` if the sequence
    /// ends first.
    pub fn round_start(&self, r: usize) -> Option<usize> {
        if let Some(&b) = self.rounds.boundaries.get(r) {
            return Some(b);
        }
        self.cycle.as_ref()?;
        let sellers = self.initial.seller_count();
        let mut boundary = *self.rounds.boundaries.last().expect("r_0 exists");
        let mut count = self.rounds.complete();
        let mut seen = vec![false; sellers];
        let mut missing = sellers;
        let mut t = boundary;
        while count < r {
            let m = self.step_at(t).expect("cycle extends the trace").mover;
            if !seen[m] {
                seen[m] = true;
                missing -= 1;
            }
            t += 1;
            if missing == 0 {
                count += 1;
                boundary = t;
                seen.iter_mut().for_each(|s| *s = false);
                missing = sellers;
            }
        }
        Some(boundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    /// Complete rounds to simulate.
    pub horizon_rounds: usize,
    /// End the run once a cycle has been found and replayed.
    pub stop_on_cycle: bool,
}

impl RunConfig {
    pub fn rounds(horizon_rounds: usize) -> Self {
        RunConfig {
            horizon_rounds,
            stop_on_cycle: true,
        }
    }

    pub fn full(horizon_rounds: usize) -> Self {
        RunConfig {
            horizon_rounds,
            stop_on_cycle: false,
        }
    }
}

type StateKey = (PriceProfile, usize, Option<Vec<Belief>>);

/// A live simulation.
#[derive(Clone, Debug)]
pub struct Engine<'a> {
    market: &'a MarketInstance,
    schedule: ScheduleState,
    prices: PriceProfile,
    beliefs: Option<Vec<Belief>>,
    t: usize,
}

impl<'a> Engine<'a> {
    pub fn new(
        market: &'a MarketInstance,
        scheduler: &Scheduler,
        initial: &PriceProfile,
    ) -> Result<Self> {
        initial.check(market)?;
        Ok(Engine {
            market,
            schedule: scheduler.start(market.seller_count())?,
            prices: initial.canonical(market),
            beliefs: market.uncertainty.as_ref().map(|u| u.priors.clone()),
            t: 0,
        })
    }

    pub fn prices(&self) -> &PriceProfile {
        &self.prices
    }

    pub fn beliefs(&self) -> Option<&[Belief]> {
        self.beliefs.as_deref()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// The full state, when the schedule is periodic.
    fn state_key(&self) -> Option<StateKey> {
        let phase = self.schedule.phase()?;
        Some((self.prices.clone(), phase, self.beliefs.clone()))
    }

    /// One time-step: the scheduled seller best-responds, the buyer buys,
    /// beliefs update.
    pub fn step(&mut self) -> Result<TraceStep> {
        let market = self.market;
        let mover = self.schedule.next_mover()?;
        let response = match &self.beliefs {
            Some(beliefs) => best_response_uncertain(market, mover, &self.prices, &beliefs[mover]).prices,
            None => best_response_full_info(market, mover, &self.prices).prices,
        };
        self.prices.set_seller(mover, response);
        self.prices.canonicalize(market);
        let purchase = demand(market, &self.prices);
        let mut informative = false;
        let mut support_sizes = None;
        if let (Some(beliefs), Some(u)) = (&mut self.beliefs, &market.uncertainty) {
            informative = classify_informative(beliefs, &u.universe, &self.prices).any;
            for b in beliefs.iter_mut() {
                *b = bayes_update(b, &u.universe, &self.prices, &purchase)?;
            }
            support_sizes = Some(beliefs.iter().map(Belief::support_len).collect());
        }
        let all_uniform = (0..market.seller_count()).all(|i| self.prices.is_uniform(i));
        let step = TraceStep {
            t: self.t,
            mover,
            quantity: purchase.total(),
            welfare: welfare(market, &purchase),
            revenues: purchase.revenues(&self.prices),
            prices: self.prices.clone(),
            purchase,
            support_sizes,
            informative,
            last_considered: if all_uniform && market.is_homogeneous() {
                last_considered_seller(&self.prices)
            } else {
                None
            },
        };
        self.t += 1;
        Ok(step)
    }
}

/// Simulates from `initial` for `config.horizon_rounds` complete rounds,
/// watching for a recurrence of the full state.
pub fn run(
    market: &MarketInstance,
    scheduler: &Scheduler,
    initial: &PriceProfile,
    config: RunConfig,
) -> Result<Trace> {
    let sellers = market.seller_count();
    let mut engine = Engine::new(market, scheduler, initial)?;
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut seen: HashMap<StateKey, usize> = HashMap::new();
    let mut cycle: Option<CycleReport> = None;
    let mut watching = !scheduler.is_random();
    let (mut complete, mut in_round, mut missing) = (0, vec![false; sellers], sellers);
    while complete < config.horizon_rounds {
        if watching {
            if let Some(key) = engine.state_key() {
                if let Some(&t0) = seen.get(&key) {
                    let state_period = engine.t - t0;
                    let verified = replay(&engine, &steps[t0..], &key)?;
                    cycle = Some(CycleReport {
                        prefix: t0,
                        period: observable_period(&steps[t0..]),
                        state_period,
                        verified,
                    });
                    watching = false;
                    seen.clear();
                    if config.stop_on_cycle {
                        break;
                    }
                } else {
                    seen.insert(key, engine.t);
                }
            }
        }
        let step = engine.step()?;
        if !in_round[step.mover] {
            in_round[step.mover] = true;
            missing -= 1;
        }
        if missing == 0 {
            complete += 1;
            in_round.iter_mut().for_each(|x| *x = false);
            missing = sellers;
        }
        steps.push(step);
    }
    let rounds = segment_rounds(&steps.iter().map(|s| s.mover).collect::<Vec<_>>(), sellers);
    Ok(Trace {
        initial: initial.canonical(market),
        steps,
        rounds,
        cycle,
    })
}

/// Simulates one more period from a recurring state and checks that it
/// reproduces the recorded period step for step and returns to the state.
fn replay(engine: &Engine<'_>, period: &[TraceStep], key: &StateKey) -> Result<bool> {
    let mut probe = engine.clone();
    for recorded in period {
        let mut again = probe.step()?;
        again.t = recorded.t;
        if again != *recorded {
            return Ok(false);
        }
    }
    Ok(probe.state_key().as_ref() == Some(key))
}

/// Smallest `p` dividing the cycle length such that prices and purchases
/// repeat with period `p`.
fn observable_period(cycle: &[TraceStep]) -> usize {
    let len = cycle.len();
    (1..=len)
        .filter(|p| len % p == 0)
        .find(|&p| {
            (0..len).all(|k| {
                let (a, b) = (&cycle[k], &cycle[(k + p) % len]);
                a.prices == b.prices && a.purchase == b.purchase
            })
        })
        .unwrap_or(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::Valuation;

    fn example() -> MarketInstance {
        MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]))
    }

    #[test]
    fn example_settles_at_three_units_and_cycles() {
        let m = example();
        let trace = run(&m, &Scheduler::alternating(), &PriceProfile::at_cap(&m), RunConfig::rounds(50)).unwrap();
        let c = trace.cycle.clone().expect("cycle");
        assert!(c.verified);
        assert!(c.period > 1);
        for s in trace.steps_from(c.prefix) {
            assert_eq!(s.quantity, 3);
        }
    }

    #[test]
    fn monopolist_is_stationary_after_one_move() {
        let m = MarketInstance::homogeneous(1, &[4], Valuation::from_units(&[5, 5, 3, 1]));
        let trace = run(&m, &Scheduler::round_robin(), &PriceProfile::at_cap(&m), RunConfig::rounds(10)).unwrap();
        let c = trace.cycle.expect("fixed point");
        assert_eq!((c.prefix, c.period, c.state_period), (1, 1, 1));
        assert_eq!(trace.steps[0].prices.seller(0), &[Money(5); 4]);
    }

    #[test]
    fn full_runs_keep_going_past_the_cycle() {
        let m = example();
        let trace = run(&m, &Scheduler::alternating(), &PriceProfile::at_cap(&m), RunConfig::full(30)).unwrap();
        assert_eq!(trace.rounds.complete(), 30);
        assert!(trace.cycle.is_some());
        for t in 0..trace.steps.len() {
            assert_eq!(trace.step_at(t), Some(&trace.steps[t]));
        }
    }

    #[test]
    fn cycle_extrapolation_matches_longer_runs() {
        let m = example();
        let p0 = PriceProfile::from_units(&[&[3, 7], &[0, 10]]);
        let short = run(&m, &Scheduler::alternating(), &p0, RunConfig::rounds(40)).unwrap();
        let long = run(&m, &Scheduler::alternating(), &p0, RunConfig::full(40)).unwrap();
        for t in 0..long.steps.len() {
            let mut a = short.step_at(t).unwrap().clone();
            a.t = t;
            assert_eq!(a, long.steps[t]);
        }
        for r in 0..=40 {
            assert_eq!(short.round_start(r), long.round_start(r));
        }
    }
}
