//! Seller beliefs over a finite table of buyer valuations.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::demand::greedy_homogeneous;
use crate::error::BeliefError;
use crate::prices::{PriceProfile, Purchase};
use crate::valuation::Valuation;

/// Index into the valuation table of an uncertain-demand instance.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ValuationId(pub usize);

impl fmt::Display for ValuationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A finite-support distribution over valuation ids, held by one seller.
/// Probabilities are exact rationals; entries are kept sorted by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Belief {
    owner: usize,
    support: Vec<(ValuationId, BigRational)>,
}

impl Belief {
    /// Builds a belief as given; [`crate::market::validate_instance`] checks
    /// positivity and normalization.
    pub fn new(owner: usize, mut support: Vec<(ValuationId, BigRational)>) -> Self {
        support.sort_by_key(|(id, _)| *id);
        Belief { owner, support }
    }

    /// Point mass on `id`.
    pub fn certain(owner: usize, id: ValuationId) -> Self {
        Belief::new(owner, vec![(id, BigRational::one())])
    }

    /// Belief from `(id, numerator, denominator)` triples.
    pub fn from_fractions(owner: usize, entries: &[(usize, i64, i64)]) -> Self {
        Belief::new(
            owner,
            entries
                .iter()
                .map(|&(id, n, d)| {
                    (
                        ValuationId(id),
                        BigRational::new(BigInt::from(n), BigInt::from(d)),
                    )
                })
                .collect(),
        )
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn entries(&self) -> impl Iterator<Item = (ValuationId, &BigRational)> {
        self.support.iter().map(|(id, p)| (*id, p))
    }

    pub fn support(&self) -> impl Iterator<Item = ValuationId> + '_ {
        self.support.iter().map(|(id, _)| *id)
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn probability(&self, id: ValuationId) -> BigRational {
        self.support
            .iter()
            .find(|(x, _)| *x == id)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Probabilities scaled by their common denominator to integer weights
    /// (same order as [`Belief::entries`]). Comparing weighted sums of these
    /// is an exact comparison of expectations.
    pub fn integer_weights(&self) -> Vec<u128> {
        let lcm = self
            .support
            .iter()
            .fold(BigInt::one(), |acc, (_, p)| num_integer::lcm(acc, p.denom().clone()));
        self.support
            .iter()
            .map(|(_, p)| {
                let w = p.numer() * (&lcm / p.denom());
                u128::try_from(w).expect("belief weights fit in 128 bits")
            })
            .collect()
    }
}

/// Bayesian update on an observed purchase: every valuation in the support
/// that would not have produced exactly `observed` at `prices` is dropped,
/// and the rest renormalized.
pub fn bayes_update(
    belief: &Belief,
    universe: &[Valuation],
    prices: &PriceProfile,
    observed: &Purchase,
) -> Result<Belief, BeliefError> {
    let kept: Vec<(ValuationId, BigRational)> = belief
        .support
        .iter()
        .filter(|(id, _)| greedy_homogeneous(&universe[id.0], prices).same_bundle(observed))
        .cloned()
        .collect();
    if kept.len() == belief.support.len() {
        return Ok(belief.clone());
    }
    let total: BigRational = kept.iter().map(|(_, p)| p.clone()).sum();
    if total.is_zero() {
        return Err(BeliefError::InconsistentObservation {
            owner: belief.owner,
        });
    }
    Ok(Belief {
        owner: belief.owner,
        support: kept.into_iter().map(|(id, p)| (id, p / &total)).collect(),
    })
}

/// Which sellers could learn something from the buyer's response to `prices`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Informativeness {
    pub per_seller: Vec<bool>,
    pub any: bool,
}

/// Seller `i` is flagged when two valuations in its support buy different
/// quantities at `prices`.
pub fn classify_informative(
    beliefs: &[Belief],
    universe: &[Valuation],
    prices: &PriceProfile,
) -> Informativeness {
    let mut cache: Vec<Option<usize>> = vec![None; universe.len()];
    let mut quantity = |id: ValuationId| {
        *cache[id.0].get_or_insert_with(|| greedy_homogeneous(&universe[id.0], prices).total())
    };
    let per_seller: Vec<bool> = beliefs
        .iter()
        .map(|b| {
            let mut qs = b.support().map(&mut quantity);
            match qs.next() {
                Some(first) => qs.any(|q| q != first),
                None => false,
            }
        })
        .collect();
    let any = per_seller.iter().any(|&f| f);
    Informativeness { per_seller, any }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> (Vec<Valuation>, Belief) {
        let universe = vec![
            Valuation::from_units(&[5, 5, 3, 1]),
            Valuation::from_units(&[5, 5, 0, 0]),
        ];
        let b = Belief::from_fractions(0, &[(0, 1, 4), (1, 3, 4)]);
        (universe, b)
    }

    #[test]
    fn uninformative_observation_keeps_belief() {
        let (u, b) = two_point();
        let p = PriceProfile::from_units(&[&[4, 4], &[4, 4]]);
        let x = greedy_homogeneous(&u[0], &p);
        assert_eq!(bayes_update(&b, &u, &p, &x).unwrap(), b);
    }

    #[test]
    fn informative_observation_concentrates() {
        let (u, b) = two_point();
        let p = PriceProfile::from_units(&[&[2, 2], &[2, 2]]);
        let x = greedy_homogeneous(&u[0], &p);
        let post = bayes_update(&b, &u, &p, &x).unwrap();
        assert_eq!(post.support_len(), 1);
        assert_eq!(post.probability(ValuationId(0)), BigRational::one());
    }

    #[test]
    fn impossible_observation_errors() {
        let (u, b) = two_point();
        let p = PriceProfile::from_units(&[&[2, 2], &[2, 2]]);
        let x = Purchase::from_indices(vec![vec![0], vec![]]);
        assert_eq!(
            bayes_update(&b, &u, &p, &x),
            Err(BeliefError::InconsistentObservation { owner: 0 })
        );
    }

    #[test]
    fn classify_flags_disagreeing_supports() {
        let (u, b) = two_point();
        let single = Belief::certain(1, ValuationId(0));
        let cheap = PriceProfile::from_units(&[&[2, 2], &[2, 2]]);
        let flags = classify_informative(&[b.clone(), single.clone()], &u, &cheap);
        assert_eq!(flags.per_seller, vec![true, false]);
        assert!(flags.any);
        let dear = PriceProfile::from_units(&[&[5, 5], &[5, 5]]);
        assert!(!classify_informative(&[b, single], &u, &dear).any);
    }

    #[test]
    fn weights_are_scaled_probabilities() {
        let b = Belief::from_fractions(0, &[(0, 1, 100), (1, 99, 100)]);
        assert_eq!(b.integer_weights(), vec![1, 99]);
        let c = Belief::from_fractions(0, &[(0, 1, 3), (1, 1, 6), (2, 1, 2)]);
        assert_eq!(c.integer_weights(), vec![2, 1, 3]);
    }
}
