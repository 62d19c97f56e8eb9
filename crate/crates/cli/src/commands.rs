//! The five subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pricewars::dynamics::{
    estimate_ewg, run, schedule_family, CycleReport, EwgReport, RunConfig, ScheduleKind, Scheduler, Trace,
};
use pricewars::equilibrium::{enumerate_pure_nash, NashOptions};
use pricewars::scenarios::{
    gen_hetero_cycle, gen_lower_bound, gen_theta_n_example, named_scenario, random_profile, Scenario,
};
use pricewars::verify::{run_all, run_suite, SuiteReport, DEFAULT_SEED};
use pricewars::{GridSpec, MarketInstance, Money, PriceProfile};

use crate::scenario::ScenarioFile;
use crate::{
    env_seed, EwgArgs, Failure, GenArgs, NashArgs, ScheduleArg, SimulateArgs, VerifyArgs,
};

/// Identifies the code that produced an output, for replay.
pub const VERSION_TAG: &str = concat!("pricewars ", env!("CARGO_PKG_VERSION"));

fn load(path: &Path) -> Result<Scenario, Failure> {
    Ok(ScenarioFile::read(path)?.into_scenario()?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Usage(e.into())
}

/// The seed in effect: `PRICEWARS_SEED`, then the flag, then the file.
fn effective_seed(flag: Option<u64>, file: Option<u64>) -> Result<Option<u64>, Failure> {
    Ok(env_seed()?.or(flag).or(file))
}

fn scheduler_seed(s: &Scheduler) -> Option<u64> {
    match s.kind {
        ScheduleKind::Random { seed } => Some(seed),
        _ => None,
    }
}

#[derive(Serialize)]
struct GridSummary {
    denom: u64,
    price_cap_units: u64,
}

impl From<&GridSpec> for GridSummary {
    fn from(g: &GridSpec) -> Self {
        GridSummary {
            denom: g.denom,
            price_cap_units: g.price_cap.units(),
        }
    }
}

#[derive(Serialize)]
struct RoundsSummary {
    boundaries: Vec<usize>,
    complete: usize,
    unfair: bool,
}

#[derive(Serialize)]
struct Steady {
    min_quantity: usize,
    max_quantity: usize,
    min_welfare_units: u64,
    max_welfare_units: u64,
}

#[derive(Serialize)]
struct SimulationSummary {
    version: &'static str,
    scenario: String,
    seed: Option<u64>,
    grid: GridSummary,
    scheduler: Scheduler,
    horizon_rounds: usize,
    steps: usize,
    rounds: RoundsSummary,
    cycle: Option<CycleReport>,
    /// Quantity and welfare over the cycle, when one was found.
    steady: Option<Steady>,
    optimal_welfare_units: u64,
    final_prices: Option<PriceProfile>,
    ewg: Option<EwgReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ewg_note: Option<String>,
}

fn steady(trace: &Trace) -> Option<Steady> {
    let c = trace.cycle.as_ref()?;
    let steps = trace.steps_from(c.prefix);
    Some(Steady {
        min_quantity: steps.iter().map(|s| s.quantity).min()?,
        max_quantity: steps.iter().map(|s| s.quantity).max()?,
        min_welfare_units: steps.iter().map(|s| s.welfare.units()).min()?,
        max_welfare_units: steps.iter().map(|s| s.welfare.units()).max()?,
    })
}

fn write_trace(path: &Path, trace: &Trace) -> Result<(), Failure> {
    let mut w = create(path)?;
    for s in &trace.steps {
        serde_json::to_writer(&mut w, s).map_err(|e| Failure::Usage(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_plot(path: &Path, trace: &Trace) -> Result<(), Failure> {
    let mut w = create(path)?;
    writeln!(w, "t,mover,max_price_units,quantity,welfare_units").map_err(io)?;
    for s in &trace.steps {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.t,
            s.mover,
            s.prices.max_price().units(),
            s.quantity,
            s.welfare.units()
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.into()))? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut sc = load(&a.scenario)?;
    if let Some(kind) = a.schedule {
        sc.scheduler = match kind {
            ScheduleArg::RoundRobin => Scheduler::round_robin(),
            ScheduleArg::Alternating => Scheduler::alternating(),
            ScheduleArg::ReverseIndex => Scheduler::new(ScheduleKind::ReverseIndex),
            ScheduleArg::Random => Scheduler::random(DEFAULT_SEED),
        };
    }
    if let Some(order) = a.order {
        sc.scheduler = Scheduler::with_order(order);
    }
    let seed = effective_seed(a.seed, scheduler_seed(&sc.scheduler))?;
    if let (ScheduleKind::Random { seed: s }, Some(x)) = (&mut sc.scheduler.kind, seed) {
        *s = x;
    }
    let seed = scheduler_seed(&sc.scheduler).or(seed);
    let horizon = a.rounds.unwrap_or(sc.horizon_rounds);
    let config = if a.full { RunConfig::full(horizon) } else { RunConfig::rounds(horizon) };
    let initial = sc.initial_prices();
    let trace = run(&sc.market, &sc.scheduler, &initial, config).map_err(|e| Failure::Usage(e.into()))?;
    if let Some(p) = &a.trace {
        write_trace(p, &trace)?;
    }
    if let Some(p) = &a.plot {
        write_plot(p, &trace)?;
    }
    let (ewg, ewg_note) = if sc.market.is_homogeneous() {
        match estimate_ewg(&sc.market, &[sc.scheduler.clone()], &[initial], Some(horizon)) {
            Ok(mut r) => {
                r.runs.clear();
                (Some(r), None)
            }
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("eventual welfare bounds apply to homogeneous goods only".into()))
    };
    let summary = SimulationSummary {
        version: VERSION_TAG,
        scenario: sc.name.clone(),
        seed,
        grid: (&sc.market.grid).into(),
        scheduler: sc.scheduler.clone(),
        horizon_rounds: horizon,
        steps: trace.steps.len(),
        rounds: RoundsSummary {
            boundaries: trace.rounds.boundaries.clone(),
            complete: trace.rounds.complete(),
            unfair: trace.rounds.unfair,
        },
        steady: steady(&trace),
        cycle: trace.cycle.clone(),
        optimal_welfare_units: sc.market.optimal_welfare().units(),
        final_prices: trace.steps.last().map(|s| s.prices.clone()),
        ewg,
        ewg_note,
    };
    emit_json(&summary, a.summary.as_deref())
}

fn show(p: &PriceProfile) -> String {
    let rows: Vec<String> = p
        .sellers()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| x.units().to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("[{}]", rows.join(","))
}

pub fn nash(a: NashArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    if sc.market.is_uncertain() {
        return Err(Failure::Usage(anyhow!("equilibria are defined for full-information instances")));
    }
    let r = enumerate_pure_nash(
        &sc.market,
        NashOptions {
            limit: a.limit,
            witnesses: a.witnesses,
        },
    )
    .map_err(|e| Failure::Usage(e.into()))?;
    if a.json {
        #[derive(Serialize)]
        struct Out<'a> {
            version: &'static str,
            scenario: &'a str,
            #[serde(flatten)]
            search: &'a pricewars::equilibrium::NashSearch,
        }
        return emit_json(
            &Out {
                version: VERSION_TAG,
                scenario: &sc.name,
                search: &r,
            },
            None,
        );
    }
    if r.equilibria.is_empty() {
        println!("no pure Nash equilibrium ({} canonical profiles checked)", r.profiles);
    } else {
        println!("{} pure Nash equilibria ({} canonical profiles checked):", r.equilibria.len(), r.profiles);
        for p in &r.equilibria {
            println!("  {}", show(p));
        }
    }
    if let Some(ws) = &r.witnesses {
        for (p, d) in ws {
            println!(
                "  {} : seller {} deviates to {} earning {} (was {})",
                show(p),
                d.seller,
                show(&PriceProfile::new(vec![d.best.prices.clone()])),
                d.best.revenue.units(),
                d.current_revenue.units()
            );
        }
    }
    Ok(())
}

pub fn ewg(a: EwgArgs) -> Result<(), Failure> {
    let sc = load(&a.scenario)?;
    if !sc.market.is_homogeneous() {
        return Err(Failure::Usage(anyhow!("eventual welfare bounds apply to homogeneous goods only")));
    }
    let seed = effective_seed(a.seed, None)?.unwrap_or(DEFAULT_SEED);
    let schedules = schedule_family(sc.market.seller_count(), a.random, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut initials = vec![sc.initial_prices()];
    initials.extend((0..a.initials).map(|_| random_profile(&sc.market, &mut rng)));
    let mut report =
        estimate_ewg(&sc.market, &schedules, &initials, a.horizon).map_err(|e| Failure::Usage(e.into()))?;
    let bad_ok = !report.uncertain
        || (report.bad_round_count.unwrap_or(0) <= report.threshold_rounds
            && report.runs.iter().all(|r| !r.bad_rounds_recur));
    let holds = report.within_bound && bad_ok;
    if !a.runs {
        report.runs.clear();
    }
    #[derive(Serialize)]
    struct Out<'a> {
        version: &'static str,
        scenario: &'a str,
        seed: u64,
        schedules: usize,
        initial_profiles: usize,
        holds: bool,
        report: &'a EwgReport,
    }
    emit_json(
        &Out {
            version: VERSION_TAG,
            scenario: &sc.name,
            seed,
            schedules: schedules.len(),
            initial_profiles: initials.len(),
            holds,
            report: &report,
        },
        None,
    )?;
    if holds {
        Ok(())
    } else {
        Err(Failure::Check("eventual welfare bound violated".into()))
    }
}

pub fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let seed = effective_seed(a.seed, None)?.unwrap_or(DEFAULT_SEED);
    let reports: Vec<SuiteReport> = if a.suite == "all" {
        run_all(seed)
    } else {
        run_suite(&a.suite, seed).map(|r| vec![r])
    }
    .map_err(|e| Failure::Usage(e.into()))?;
    if a.json {
        emit_json(&reports, None)?;
    } else {
        for r in &reports {
            println!("{}", r.line());
        }
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("suite(s) failed: {}", failed.join(", "))))
    }
}

pub fn gen(a: GenArgs) -> Result<(), Failure> {
    let mut sc = named_scenario(&a.name).map_err(|e| Failure::Usage(e.into()))?;
    let rebuilt: Option<MarketInstance> = match a.name.as_str() {
        "lower-bound" => a.supplies.as_deref().map(gen_lower_bound).transpose(),
        "theta-n" if a.n.is_some() || a.delta.is_some() => {
            let delta = match &a.delta {
                Some(d) => d
                    .parse()
                    .map_err(|_| Failure::Usage(anyhow!("--delta {d:?} is not \"num/den\"")))?,
                None => crate::scenario::ratio(1, 100),
            };
            gen_theta_n_example(a.n.unwrap_or(12), delta).map(Some)
        }
        "hetero-cycle" if a.sellers.is_some() || a.value.is_some() || a.denom.is_some() => {
            gen_hetero_cycle(a.sellers.unwrap_or(5), a.value.unwrap_or(100), a.denom).map(Some)
        }
        _ => Ok(None),
    }
    .map_err(|e| Failure::Usage(e.into()))?;
    if let Some(m) = rebuilt {
        sc.market = m;
    }
    let text = ScenarioFile::from_scenario(&sc).to_json();
    match &a.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn unused(_: Money) {}
