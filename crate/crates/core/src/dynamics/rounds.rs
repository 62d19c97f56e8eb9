//! Rounds: minimal intervals in which every seller moves at least once.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rounds {
    /// `r_0 = 0 < r_1 < … < r_L`: round `ℓ` is `[r_{ℓ−1}, r_ℓ)`. Only complete
    /// rounds are delimited; steps from `r_L` on form an unfinished round.
    pub boundaries: Vec<usize>,
    /// Some seller never moves at all in the sequence.
    pub unfair: bool,
}

impl Rounds {
    /// Number of complete rounds.
    pub fn complete(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Start of each complete round.
    pub fn starts(&self) -> &[usize] {
        &self.boundaries[..self.complete()]
    }

    /// Index of the round containing step `t`, if that round is complete.
    pub fn round_of(&self, t: usize) -> Option<usize> {
        let r = self.boundaries.partition_point(|&b| b <= t);
        (r < self.boundaries.len()).then(|| r - 1)
    }
}

/// Splits a move sequence into rounds, each ending at the step where the
/// last seller to appear in it first moves.
pub fn segment_rounds(moves: &[usize], sellers: usize) -> Rounds {
    let mut boundaries = vec![0];
    let mut seen = vec![false; sellers];
    let mut missing = sellers;
    let mut ever = vec![false; sellers];
    for (t, &m) in moves.iter().enumerate() {
        ever[m] = true;
        if !seen[m] {
            seen[m] = true;
            missing -= 1;
        }
        if missing == 0 {
            boundaries.push(t + 1);
            seen.iter_mut().for_each(|s| *s = false);
            missing = sellers;
        }
    }
    Rounds {
        boundaries,
        unfair: ever.iter().any(|&e| !e),
    }
}
