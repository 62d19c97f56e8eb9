//! Market instances: sellers, buyer model, optional seller beliefs.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, ValuationId};
use crate::error::{DomainError, Error};
use crate::money::{GridSpec, Money};
use crate::valuation::Valuation;

/// What a seller holds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Holding {
    /// `n_i` identical units.
    Units(usize),
    /// Heterogeneous items, each with the buyer's value for it.
    Items(Vec<Money>),
}

/// One seller. Its position in [`MarketInstance::sellers`] is its
/// lexicographic rank: lower index means the buyer prefers it on ties.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SellerSpec {
    pub holding: Holding,
}

impl SellerSpec {
    pub fn units(n: usize) -> Self {
        SellerSpec {
            holding: Holding::Units(n),
        }
    }

    pub fn items(values: Vec<Money>) -> Self {
        SellerSpec {
            holding: Holding::Items(values),
        }
    }

    /// Number of units or items held.
    pub fn supply(&self) -> usize {
        match &self.holding {
            Holding::Units(n) => *n,
            Holding::Items(v) => v.len(),
        }
    }

    pub fn item_values(&self) -> Option<&[Money]> {
        match &self.holding {
            Holding::Items(v) => Some(v),
            Holding::Units(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Buyer {
    /// Identical units valued by a decreasing-marginal valuation.
    Homogeneous(Valuation),
    /// Heterogeneous items; a bundle is worth its `k` most valuable items.
    KAdditive { k: usize },
}

/// The uncertain-demand layer: a table of candidate valuations, the true
/// one, and each seller's prior over the table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Uncertainty {
    pub universe: Vec<Valuation>,
    pub true_valuation: ValuationId,
    pub priors: Vec<Belief>,
}

impl Uncertainty {
    pub fn valuation(&self, id: ValuationId) -> &Valuation {
        &self.universe[id.0]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance {
    pub grid: GridSpec,
    pub sellers: Vec<SellerSpec>,
    pub buyer: Buyer,
    pub uncertainty: Option<Uncertainty>,
}

impl MarketInstance {
    /// Full-information homogeneous market with the default price cap.
    pub fn homogeneous(denom: u64, supplies: &[usize], valuation: Valuation) -> Self {
        let grid = GridSpec::with_default_cap(denom, valuation.top_marginal());
        MarketInstance {
            grid,
            sellers: supplies.iter().map(|&n| SellerSpec::units(n)).collect(),
            buyer: Buyer::Homogeneous(valuation),
            uncertainty: None,
        }
    }

    /// Full-information heterogeneous market with a `k`-additive buyer.
    pub fn k_additive(denom: u64, items: Vec<Vec<Money>>, k: usize) -> Self {
        let max = items.iter().flatten().copied().max().unwrap_or(Money::ZERO);
        MarketInstance {
            grid: GridSpec::with_default_cap(denom, max),
            sellers: items.into_iter().map(SellerSpec::items).collect(),
            buyer: Buyer::KAdditive { k },
            uncertainty: None,
        }
    }

    pub fn seller_count(&self) -> usize {
        self.sellers.len()
    }

    pub fn supply(&self, seller: usize) -> usize {
        self.sellers[seller].supply()
    }

    pub fn supplies(&self) -> Vec<usize> {
        self.sellers.iter().map(SellerSpec::supply).collect()
    }

    /// Total supply `n`.
    pub fn total_supply(&self) -> usize {
        self.sellers.iter().map(SellerSpec::supply).sum()
    }

    /// `n_max`, the largest single supply.
    pub fn max_supply(&self) -> usize {
        self.sellers.iter().map(SellerSpec::supply).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.buyer, Buyer::Homogeneous(_))
    }

    pub fn is_uncertain(&self) -> bool {
        self.uncertainty.is_some()
    }

    /// The buyer's true homogeneous valuation.
    pub fn valuation(&self) -> Result<&Valuation, DomainError> {
        match &self.buyer {
            Buyer::Homogeneous(v) => Ok(v),
            Buyer::KAdditive { .. } => Err(DomainError::WrongBuyerModel("homogeneous")),
        }
    }

    pub fn demand_limit(&self) -> Result<usize, DomainError> {
        match self.buyer {
            Buyer::KAdditive { k } => Ok(k),
            Buyer::Homogeneous(_) => Err(DomainError::WrongBuyerModel("k-additive")),
        }
    }

    /// Item values of seller `i` (heterogeneous markets only).
    pub fn item_values(&self, seller: usize) -> Result<&[Money], DomainError> {
        self.sellers[seller]
            .item_values()
            .ok_or(DomainError::WrongBuyerModel("k-additive"))
    }

    /// Optimal welfare: `v(n)` for homogeneous buyers, the `k` most valuable
    /// items otherwise.
    pub fn optimal_welfare(&self) -> Money {
        match &self.buyer {
            Buyer::Homogeneous(v) => v.total(),
            Buyer::KAdditive { k } => {
                let mut values: Vec<Money> = self
                    .sellers
                    .iter()
                    .filter_map(SellerSpec::item_values)
                    .flatten()
                    .copied()
                    .collect();
                values.sort_unstable_by(|a, b| b.cmp(a));
                values.into_iter().take(*k).sum()
            }
        }
    }

    /// Largest marginal or item value anywhere in the instance, beliefs included.
    pub fn max_value(&self) -> Money {
        let mut max = match &self.buyer {
            Buyer::Homogeneous(v) => v.top_marginal(),
            Buyer::KAdditive { .. } => self
                .sellers
                .iter()
                .filter_map(SellerSpec::item_values)
                .flatten()
                .copied()
                .max()
                .unwrap_or(Money::ZERO),
        };
        if let Some(u) = &self.uncertainty {
            for v in &u.universe {
                max = max.max(v.top_marginal());
            }
        }
        max
    }

    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let violations = validate_instance(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Like [`MarketInstance::validate`] but as a crate [`Error`].
    pub fn validated(self) -> Result<Self, Error> {
        self.validate().map_err(Error::Invalid)?;
        Ok(self)
    }
}

/// One broken invariant in a [`MarketInstance`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    ZeroDenominator,
    NoSellers,
    EmptySupply { seller: usize },
    HoldingMismatch { seller: usize },
    MarginalsNotNonIncreasing { valuation: Option<usize> },
    ValuationLength { valuation: Option<usize>, expected: usize, got: usize },
    CapBelowValue { cap: Money, value: Money },
    ZeroDemandLimit,
    UncertainNeedsHomogeneous,
    TrueValuationUnknown { id: usize },
    TrueValuationMismatch,
    PriorCount { expected: usize, got: usize },
    PriorOwner { seller: usize, owner: usize },
    UnknownValuation { seller: usize, id: usize },
    DuplicateSupport { seller: usize, id: usize },
    NonPositiveProbability { seller: usize, id: usize },
    ProbabilitiesDoNotSumToOne { seller: usize, sum: String },
    InconsistentPrior { seller: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        let which = |v: &Option<usize>| match v {
            Some(id) => format!(" (valuation {id})"),
            None => String::new(),
        };
        match self {
            ZeroDenominator => write!(f, "grid denominator must be at least 1"),
            NoSellers => write!(f, "market has no sellers"),
            EmptySupply { seller } => write!(f, "seller {seller} holds nothing"),
            HoldingMismatch { seller } => {
                write!(f, "seller {seller}'s holding does not match the buyer model")
            }
            MarginalsNotNonIncreasing { valuation } => {
                write!(f, "marginals not non-increasing{}", which(valuation))
            }
            ValuationLength {
                valuation,
                expected,
                got,
            } => write!(
                f,
                "valuation length {got} does not match total supply {expected}{}",
                which(valuation)
            ),
            CapBelowValue { cap, value } => {
                write!(f, "price cap {cap} is below value {value}")
            }
            ZeroDemandLimit => write!(f, "k-additive buyer needs k ≥ 1"),
            UncertainNeedsHomogeneous => {
                write!(f, "uncertain demand is only defined for homogeneous goods")
            }
            TrueValuationUnknown { id } => write!(f, "true valuation {id} is not in the table"),
            TrueValuationMismatch => {
                write!(f, "buyer valuation differs from the table's true valuation")
            }
            PriorCount { expected, got } => {
                write!(f, "expected {expected} priors, one per seller, got {got}")
            }
            PriorOwner { seller, owner } => {
                write!(f, "prior at position {seller} claims owner {owner}")
            }
            UnknownValuation { seller, id } => {
                write!(f, "seller {seller}'s prior names unknown valuation {id}")
            }
            DuplicateSupport { seller, id } => {
                write!(f, "seller {seller}'s prior lists valuation {id} twice")
            }
            NonPositiveProbability { seller, id } => write!(
                f,
                "seller {seller}'s prior gives non-positive probability to valuation {id}"
            ),
            ProbabilitiesDoNotSumToOne { seller, sum } => write!(
                f,
                "seller {seller}'s prior probabilities sum to {sum}, not 1"
            ),
            InconsistentPrior { seller } => write!(
                f,
                "inconsistent prior: seller {seller} gives zero probability to the true valuation"
            ),
        }
    }
}

/// Collects every invariant violation of `m`. Never panics.
pub fn validate_instance(m: &MarketInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if m.grid.denom == 0 {
        out.push(Violation::ZeroDenominator);
    }
    if m.sellers.is_empty() {
        out.push(Violation::NoSellers);
    }
    let homogeneous = m.is_homogeneous();
    for (i, s) in m.sellers.iter().enumerate() {
        if s.supply() == 0 {
            out.push(Violation::EmptySupply { seller: i });
        }
        if matches!(s.holding, Holding::Units(_)) != homogeneous {
            out.push(Violation::HoldingMismatch { seller: i });
        }
    }
    let n = m.total_supply();
    match &m.buyer {
        Buyer::Homogeneous(v) => check_valuation(v, n, None, &mut out),
        Buyer::KAdditive { k } => {
            if *k == 0 {
                out.push(Violation::ZeroDemandLimit);
            }
        }
    }
    let max = m.max_value();
    if m.grid.price_cap < max {
        out.push(Violation::CapBelowValue {
            cap: m.grid.price_cap,
            value: max,
        });
    }
    if let Some(u) = &m.uncertainty {
        validate_uncertainty(m, u, n, &mut out);
    }
    out
}

fn check_valuation(v: &Valuation, n: usize, id: Option<usize>, out: &mut Vec<Violation>) {
    if !v.is_non_increasing() {
        out.push(Violation::MarginalsNotNonIncreasing { valuation: id });
    }
    if v.len() != n {
        out.push(Violation::ValuationLength {
            valuation: id,
            expected: n,
            got: v.len(),
        });
    }
}

fn validate_uncertainty(m: &MarketInstance, u: &Uncertainty, n: usize, out: &mut Vec<Violation>) {
    let Buyer::Homogeneous(buyer_v) = &m.buyer else {
        out.push(Violation::UncertainNeedsHomogeneous);
        return;
    };
    for (id, v) in u.universe.iter().enumerate() {
        check_valuation(v, n, Some(id), out);
    }
    match u.universe.get(u.true_valuation.0) {
        None => out.push(Violation::TrueValuationUnknown {
            id: u.true_valuation.0,
        }),
        Some(v) if v != buyer_v => out.push(Violation::TrueValuationMismatch),
        Some(_) => {}
    }
    if u.priors.len() != m.sellers.len() {
        out.push(Violation::PriorCount {
            expected: m.sellers.len(),
            got: u.priors.len(),
        });
    }
    for (i, b) in u.priors.iter().enumerate() {
        if b.owner() != i {
            out.push(Violation::PriorOwner {
                seller: i,
                owner: b.owner(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut sum = num_rational::BigRational::zero();
        for (id, p) in b.entries() {
            if id.0 >= u.universe.len() {
                out.push(Violation::UnknownValuation { seller: i, id: id.0 });
            }
            if !seen.insert(id.0) {
                out.push(Violation::DuplicateSupport { seller: i, id: id.0 });
            }
            if !p.is_positive() {
                out.push(Violation::NonPositiveProbability { seller: i, id: id.0 });
            }
            sum += p;
        }
        if !sum.is_one() {
            out.push(Violation::ProbabilitiesDoNotSumToOne {
                seller: i,
                sum: sum.to_string(),
            });
        }
        if b.probability(u.true_valuation).is_zero() {
            out.push(Violation::InconsistentPrior { seller: i });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rejects_increasing_marginals() {
        let m = MarketInstance::homogeneous(1, &[1, 1], Valuation::from_units(&[3, 5]));
        let v = validate_instance(&m);
        assert!(v.contains(&Violation::MarginalsNotNonIncreasing { valuation: None }));
        assert!(v[0].to_string().contains("marginals not non-increasing"));
    }

    #[test]
    fn accepts_example_instance() {
        let m = MarketInstance::homogeneous(2, &[2, 2], Valuation::from_units(&[10, 10, 6, 2]));
        assert_eq!(validate_instance(&m), vec![]);
    }

    #[test]
    fn rejects_prior_without_true_valuation() {
        let mut m = MarketInstance::homogeneous(1, &[1], Valuation::from_units(&[2]));
        m.uncertainty = Some(Uncertainty {
            universe: vec![Valuation::from_units(&[2]), Valuation::from_units(&[1])],
            true_valuation: ValuationId(0),
            priors: vec![Belief::new(0, vec![(ValuationId(1), ratio(1, 1))])],
        });
        let v = validate_instance(&m);
        assert!(v.contains(&Violation::InconsistentPrior { seller: 0 }));
        assert!(v
            .iter()
            .any(|x| x.to_string().contains("inconsistent prior")));
    }

    #[test]
    fn rejects_probabilities_not_summing_to_one() {
        let mut m = MarketInstance::homogeneous(1, &[1], Valuation::from_units(&[2]));
        m.uncertainty = Some(Uncertainty {
            universe: vec![Valuation::from_units(&[2]), Valuation::from_units(&[1])],
            true_valuation: ValuationId(0),
            priors: vec![Belief::new(
                0,
                vec![(ValuationId(0), ratio(1, 2)), (ValuationId(1), ratio(49, 100))],
            )],
        });
        assert!(matches!(
            validate_instance(&m).as_slice(),
            [Violation::ProbabilitiesDoNotSumToOne { seller: 0, .. }]
        ));
    }

    #[test]
    fn reports_every_problem() {
        let m = MarketInstance {
            grid: GridSpec::new(0, Money(1)),
            sellers: vec![SellerSpec::units(0)],
            buyer: Buyer::Homogeneous(Valuation::from_units(&[1, 4])),
            uncertainty: None,
        };
        let v = validate_instance(&m);
        assert!(v.len() >= 4, "{v:?}");
    }

    #[test]
    fn k_additive_optimum_takes_top_k() {
        let m = MarketInstance::k_additive(
            1,
            vec![vec![Money(1)], vec![Money(2), Money(2), Money(2)]],
            3,
        );
        assert_eq!(m.optimal_welfare(), Money(6));
        assert_eq!(m.grid.price_cap, Money(3));
    }
}
