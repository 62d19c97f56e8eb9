//! Who moves when.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ScheduleError;

/// The family of move orders. Seller indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Cycle through `order` (default `0, 1, …, s−1`).
    RoundRobin {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<Vec<usize>>,
    },
    /// Two sellers taking turns, the second one first: `1, 0, 1, 0, …`.
    Alternating,
    /// An explicit move list, optionally repeated forever.
    FixedList { moves: Vec<usize>, repeat: bool },
    /// Uniformly random movers from a seeded stream, kept fair by forcing
    /// any seller about to exceed the fairness horizon.
    Random { seed: u64 },
    /// Cycle through `s−1, …, 1, 0`.
    ReverseIndex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheduler {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    /// Every seller must move at least once in every window of this many
    /// steps. Defaults to `4·s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness_horizon: Option<usize>,
}

impl Scheduler {
    pub fn new(kind: ScheduleKind) -> Self {
        Scheduler {
            kind,
            fairness_horizon: None,
        }
    }

    pub fn round_robin() -> Self {
        Scheduler::new(ScheduleKind::RoundRobin { order: None })
    }

    pub fn alternating() -> Self {
        Scheduler::new(ScheduleKind::Alternating)
    }

    pub fn random(seed: u64) -> Self {
        Scheduler::new(ScheduleKind::Random { seed })
    }

    pub fn with_order(order: Vec<usize>) -> Self {
        Scheduler::new(ScheduleKind::RoundRobin { order: Some(order) })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.fairness_horizon = Some(horizon);
        self
    }

    pub fn horizon(&self, sellers: usize) -> usize {
        self.fairness_horizon.unwrap_or(4 * sellers).max(1)
    }

    /// Whether the move sequence depends on a random stream (and so has no
    /// finite phase to fold into a recurring state).
    pub fn is_random(&self) -> bool {
        matches!(self.kind, ScheduleKind::Random { .. })
    }

    /// Starts the move sequence for a market with `sellers` sellers.
    pub fn start(&self, sellers: usize) -> Result<ScheduleState, ScheduleError> {
        let check = |moves: &[usize]| -> Result<(), ScheduleError> {
            match moves.iter().find(|&&m| m >= sellers) {
                Some(&seller) => Err(ScheduleError::UnknownSeller { seller, sellers }),
                None => Ok(()),
            }
        };
        let cycle = match &self.kind {
            ScheduleKind::RoundRobin { order: Some(order) } => {
                if order.is_empty() {
                    return Err(ScheduleError::Invalid("empty round-robin order".into()));
                }
                check(order)?;
                Some(order.clone())
            }
            ScheduleKind::RoundRobin { order: None } => Some((0..sellers).collect()),
            ScheduleKind::Alternating => {
                if sellers > 2 {
                    return Err(ScheduleError::Invalid(format!(
                        "alternating needs at most 2 sellers, market has {sellers}"
                    )));
                }
                Some((0..sellers).rev().collect())
            }
            ScheduleKind::ReverseIndex => Some((0..sellers).rev().collect()),
            ScheduleKind::FixedList { moves, .. } => {
                if moves.is_empty() {
                    return Err(ScheduleError::Invalid("empty move list".into()));
                }
                check(moves)?;
                None
            }
            ScheduleKind::Random { .. } => None,
        };
        let horizon = self.horizon(sellers);
        if matches!(self.kind, ScheduleKind::Random { .. }) && horizon < sellers {
            return Err(ScheduleError::Invalid(format!(
                "fairness horizon {horizon} is shorter than the {sellers} sellers"
            )));
        }
        Ok(ScheduleState {
            kind: self.kind.clone(),
            cycle,
            rng: match self.kind {
                ScheduleKind::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
                _ => None,
            },
            horizon,
            last: vec![None; sellers],
            t: 0,
        })
    }

    /// The first `steps` movers, without running any market.
    pub fn moves(&self, sellers: usize, steps: usize) -> Result<Vec<usize>, ScheduleError> {
        let mut state = self.start(sellers)?;
        (0..steps).map(|_| state.next_mover()).collect()
    }
}

/// A running move sequence.
#[derive(Clone, Debug)]
pub struct ScheduleState {
    kind: ScheduleKind,
    cycle: Option<Vec<usize>>,
    rng: Option<ChaCha8Rng>,
    horizon: usize,
    last: Vec<Option<usize>>,
    t: usize,
}

impl ScheduleState {
    /// Position within a periodic sequence, or `None` when the sequence has
    /// no period (random, or a one-shot list, where the step count is used).
    pub fn phase(&self) -> Option<usize> {
        match (&self.cycle, &self.kind) {
            (Some(c), _) => Some(self.t % c.len()),
            (None, ScheduleKind::FixedList { moves, repeat: true }) => Some(self.t % moves.len()),
            _ => None,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    /// The next mover. Fails if some seller would go unmoved for longer
    /// than the fairness horizon, or a one-shot list has run out.
    pub fn next_mover(&mut self) -> Result<usize, ScheduleError> {
        let t = self.t;
        let mover = match &self.kind {
            ScheduleKind::FixedList { moves, repeat } => {
                if !repeat && t >= moves.len() {
                    return Err(ScheduleError::Exhausted(t));
                }
                moves[t % moves.len()]
            }
            ScheduleKind::Random { .. } => self.random_mover(),
            _ => {
                let c = self.cycle.as_ref().expect("periodic kinds carry their cycle");
                c[t % c.len()]
            }
        };
        self.last[mover] = Some(t);
        for (seller, last) in self.last.iter().enumerate() {
            // must have moved within the window (t − horizon, t]
            let overdue = match last {
                Some(l) => t - l >= self.horizon,
                None => t + 1 > self.horizon,
            };
            if overdue {
                return Err(ScheduleError::FairnessViolation {
                    seller,
                    waited: last.map_or(t + 1, |l| t - l),
                    horizon: self.horizon,
                });
            }
        }
        self.t += 1;
        Ok(mover)
    }

    /// Earliest-deadline-first once any deadline is within `s` steps,
    /// uniform otherwise. The random draw happens every step so the stream
    /// stays aligned whether or not a move is forced.
    fn random_mover(&mut self) -> usize {
        let s = self.last.len();
        let draw = self.rng.as_mut().expect("random kind carries its rng").gen_range(0..s);
        let deadline = |l: &Option<usize>| l.map_or(self.horizon - 1, |l| l + self.horizon);
        let (urgent, due) = self
            .last
            .iter()
            .enumerate()
            .map(|(i, l)| (deadline(l), i))
            .min()
            .map(|(d, i)| (i, d))
            .expect("at least one seller");
        if due < self.t + s {
            urgent
        } else {
            draw
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_starts_with_second_seller() {
        assert_eq!(Scheduler::alternating().moves(2, 4).unwrap(), vec![1, 0, 1, 0]);
    }

    #[test]
    fn reverse_index_cycles_downward() {
        let s = Scheduler::new(ScheduleKind::ReverseIndex);
        assert_eq!(s.moves(3, 6).unwrap(), vec![2, 1, 0, 2, 1, 0]);
    }

    #[test]
    fn unfair_list_is_caught() {
        let s = Scheduler::new(ScheduleKind::FixedList {
            moves: vec![0, 1],
            repeat: true,
        })
        .with_horizon(5);
        assert!(matches!(
            s.moves(3, 10),
            Err(ScheduleError::FairnessViolation { seller: 2, .. })
        ));
    }

    #[test]
    fn one_shot_list_runs_out() {
        let s = Scheduler::new(ScheduleKind::FixedList {
            moves: vec![0, 1],
            repeat: false,
        });
        let mut st = s.start(2).unwrap();
        st.next_mover().unwrap();
        st.next_mover().unwrap();
        assert_eq!(st.next_mover(), Err(ScheduleError::Exhausted(2)));
    }

    #[test]
    fn random_is_seeded_and_fair() {
        for seed in 0..50 {
            let s = Scheduler::random(seed).with_horizon(4);
            let a = s.moves(4, 400).unwrap();
            assert_eq!(a, s.moves(4, 400).unwrap());
            for w in a.windows(4) {
                let mut seen = [false; 4];
                w.iter().for_each(|&m| seen[m] = true);
                assert!(seen.iter().all(|&x| x), "seed {seed}");
            }
        }
    }

    #[test]
    fn unknown_seller_rejected() {
        assert!(Scheduler::with_order(vec![0, 3]).start(2).is_err());
        assert!(Scheduler::alternating().start(3).is_err());
    }
}
