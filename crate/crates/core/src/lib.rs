//! Repeated posted-price competition on a discrete money grid.
//!
//! Sellers take turns best-responding to each other's posted prices; after
//! every move a greedy buyer purchases. Everything monetary is an exact
//! integer count of the smallest money unit, so trajectories are
//! reproducible bit for bit and cycles can be detected by hashing state.
//!
//! Layout, bottom up:
//!
//! - [`money`], [`valuation`], [`market`], [`prices`]: the data model.
//! - [`demand`]: the greedy buyer for both buyer models.
//! - [`belief`], [`response`]: seller beliefs and best responses.
//! - [`dynamics`]: schedulers, the step engine, rounds, cycles, welfare.
//! - [`equilibrium`]: deviation checks and brute-force pure Nash search.
//! - [`scenarios`]: named constructions and random instance samplers.
//! - [`bounds`]: the logarithmic welfare bounds, evaluated in floating point.
//! - [`oracle`]: exhaustive reference searches used to validate the above.
//! - [`verify`]: one self-checking suite per claim the engine reproduces.

pub mod belief;
pub mod bounds;
pub mod demand;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod market;
pub mod money;
pub mod oracle;
pub mod prices;
pub mod response;
pub mod scenarios;
pub mod valuation;
pub mod verify;

pub use belief::{bayes_update, classify_informative, Belief, Informativeness, ValuationId};
pub use demand::{buyer_utility, demand, greedy_homogeneous, greedy_k_additive, welfare};
pub use error::{Error, Result};
pub use market::{validate_instance, Buyer, Holding, MarketInstance, SellerSpec, Uncertainty, Violation};
pub use money::{GridSpec, Money};
pub use prices::{PriceProfile, Purchase};
pub use valuation::Valuation;

use num_rational::BigRational;

/// Serializes an exact rational as the string `"num/den"` (or `"num"`).
pub fn serde_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}
