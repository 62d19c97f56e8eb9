use thiserror::Error;

use crate::market::Violation;

/// Arithmetic or feasibility errors on the data model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("quantity {q} outside 0..={n}")]
    QuantityOutOfRange { q: usize, n: usize },
    #[error("seller {seller} has no unit or item {index}")]
    NoSuchUnit { seller: usize, index: usize },
    #[error("purchase lists seller {0}, which is not in the instance")]
    NoSuchSeller(usize),
    #[error("purchase of {bought} items exceeds the buyer limit k = {k}")]
    ExceedsDemand { bought: usize, k: usize },
    #[error("price vector for seller {seller} has {got} entries, expected {expected}")]
    PriceShape {
        seller: usize,
        got: usize,
        expected: usize,
    },
    #[error("operation needs a {0} buyer")]
    WrongBuyerModel(&'static str),
    #[error("operation needs an uncertain-demand instance")]
    NotUncertain,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("inconsistent observation: no valuation in seller {owner}'s support produces the observed purchase")]
    InconsistentObservation { owner: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("seller {seller} has not moved for {waited} steps (fairness horizon {horizon})")]
    FairnessViolation {
        seller: usize,
        waited: usize,
        horizon: usize,
    },
    #[error("fixed move list exhausted after {0} steps")]
    Exhausted(usize),
    #[error("scheduler names seller {seller} but the market has {sellers} sellers")]
    UnknownSeller { seller: usize, sellers: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search space of about {estimate} candidates exceeds the limit of {limit}")]
    TooLarge { estimate: u128, limit: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("invalid instance: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
