//! The JSON scenario file: an instance plus run settings, all money in
//! grid units.

use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use pricewars::dynamics::Scheduler;
use pricewars::scenarios::Scenario;
use pricewars::{
    Belief, Buyer, GridSpec, MarketInstance, Money, PriceProfile, SellerSpec, Uncertainty,
    Valuation, ValuationId,
};

/// Default run length when a file does not set `horizon_rounds`.
pub const DEFAULT_HORIZON: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridFile,
    pub sellers: Vec<SellerFile>,
    pub buyer: BuyerFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<BeliefsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_valuation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<Scheduler>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_prices_units: Option<InitialPrices>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_rounds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    /// `1/ε`.
    pub denom: u64,
    /// Defaults to the largest value plus one unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_cap_units: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SellerFile {
    Units { supply: usize },
    Items { item_values_units: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuyerFile {
    Homogeneous {
        /// Optional with `beliefs`, where the true valuation comes from the
        /// table; must match it when given.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marginals_units: Option<Vec<u64>>,
    },
    KAdditive {
        k: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefsFile {
    /// Marginals of every valuation sellers consider, in units.
    pub valuations: Vec<Vec<u64>>,
    /// One prior per seller, in seller order.
    pub priors: Vec<Vec<PriorEntry>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub valuation: usize,
    /// Exact rational, `"num/den"` or an integer string.
    pub probability: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialPrices {
    /// The string `"cap"`.
    Cap(CapTag),
    Explicit(Vec<Vec<u64>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapTag {
    Cap,
}

fn units(v: &[u64]) -> Vec<Money> {
    v.iter().copied().map(Money).collect()
}

fn raw(v: &[Money]) -> Vec<u64> {
    v.iter().map(|m| m.units()).collect()
}

fn parse_probability(s: &str) -> anyhow::Result<BigRational> {
    BigRational::from_str(s.trim()).map_err(|_| anyhow!("probability {s:?} is not an exact rational \"num/den\""))
}

impl ScenarioFile {
    /// Parses JSON, naming the offending field and line on failure.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            anyhow!("at {path} (line {}, column {}): {inner}", inner.line(), inner.column())
        })
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    /// Builds the instance and settings, then validates the instance.
    pub fn into_scenario(self) -> anyhow::Result<Scenario> {
        let market = self.market()?;
        let problems = pricewars::validate_instance(&market);
        if !problems.is_empty() {
            let list: Vec<String> = problems.iter().map(|v| format!("  - {v}")).collect();
            bail!("invalid instance:\n{}", list.join("\n"));
        }
        let initial = match &self.initial_prices_units {
            None | Some(InitialPrices::Cap(_)) => None,
            Some(InitialPrices::Explicit(rows)) => {
                let p = PriceProfile::new(rows.iter().map(|r| units(r)).collect());
                p.check(&market).context("initial_prices_units")?;
                Some(p)
            }
        };
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            market,
            scheduler: self.scheduler.clone().unwrap_or_else(Scheduler::round_robin),
            initial,
            horizon_rounds: self.horizon_rounds.unwrap_or(DEFAULT_HORIZON),
        })
    }

    fn market(&self) -> anyhow::Result<MarketInstance> {
        let sellers: Vec<SellerSpec> = self
            .sellers
            .iter()
            .map(|s| match s {
                SellerFile::Units { supply } => SellerSpec::units(*supply),
                SellerFile::Items { item_values_units } => SellerSpec::items(units(item_values_units)),
            })
            .collect();
        let uncertainty = match &self.beliefs {
            None => None,
            Some(b) => {
                let universe: Vec<Valuation> = b.valuations.iter().map(|v| Valuation::new(units(v))).collect();
                let priors = b
                    .priors
                    .iter()
                    .enumerate()
                    .map(|(i, entries)| {
                        let support = entries
                            .iter()
                            .map(|e| Ok((ValuationId(e.valuation), parse_probability(&e.probability)?)))
                            .collect::<anyhow::Result<Vec<_>>>()
                            .with_context(|| format!("beliefs.priors[{i}]"))?;
                        Ok(Belief::new(i, support))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let truth = self
                    .true_valuation
                    .ok_or_else(|| anyhow!("true_valuation is required with beliefs"))?;
                Some(Uncertainty {
                    universe,
                    true_valuation: ValuationId(truth),
                    priors,
                })
            }
        };
        let buyer = match (&self.buyer, &uncertainty) {
            (BuyerFile::KAdditive { k }, _) => Buyer::KAdditive { k: *k },
            (BuyerFile::Homogeneous { marginals_units: Some(m) }, _) => Buyer::Homogeneous(Valuation::new(units(m))),
            (BuyerFile::Homogeneous { marginals_units: None }, Some(u)) => {
                let v = u
                    .universe
                    .get(u.true_valuation.0)
                    .ok_or_else(|| anyhow!("true_valuation {} is not in the table", u.true_valuation.0))?;
                Buyer::Homogeneous(v.clone())
            }
            (BuyerFile::Homogeneous { marginals_units: None }, None) => {
                bail!("buyer.marginals_units is required without beliefs")
            }
        };
        let max = match (&buyer, &uncertainty) {
            (_, Some(u)) => u.universe.iter().map(Valuation::top_marginal).max().unwrap_or(Money::ZERO),
            (Buyer::Homogeneous(v), None) => v.top_marginal(),
            (Buyer::KAdditive { .. }, None) => sellers
                .iter()
                .filter_map(|s| s.item_values())
                .flatten()
                .copied()
                .max()
                .unwrap_or(Money::ZERO),
        };
        let grid = match self.grid.price_cap_units {
            Some(cap) => GridSpec::new(self.grid.denom, Money(cap)),
            None => GridSpec::with_default_cap(self.grid.denom, max),
        };
        Ok(MarketInstance {
            grid,
            sellers,
            buyer,
            uncertainty,
        })
    }

    /// The file describing `scenario`, with every field written out.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let m = &scenario.market;
        let sellers = m
            .sellers
            .iter()
            .map(|s| match s.item_values() {
                Some(values) => SellerFile::Items {
                    item_values_units: raw(values),
                },
                None => SellerFile::Units { supply: s.supply() },
            })
            .collect();
        let buyer = match &m.buyer {
            Buyer::Homogeneous(v) => BuyerFile::Homogeneous {
                marginals_units: Some(raw(v.marginals())),
            },
            Buyer::KAdditive { k } => BuyerFile::KAdditive { k: *k },
        };
        let beliefs = m.uncertainty.as_ref().map(|u| BeliefsFile {
            valuations: u.universe.iter().map(|v| raw(v.marginals())).collect(),
            priors: u
                .priors
                .iter()
                .map(|b| {
                    b.entries()
                        .map(|(id, p)| PriorEntry {
                            valuation: id.0,
                            probability: p.to_string(),
                        })
                        .collect()
                })
                .collect(),
        });
        ScenarioFile {
            name: Some(scenario.name.clone()),
            grid: GridFile {
                denom: m.grid.denom,
                price_cap_units: Some(m.grid.price_cap.units()),
            },
            sellers,
            buyer,
            beliefs,
            true_valuation: m.uncertainty.as_ref().map(|u| u.true_valuation.0),
            scheduler: Some(scenario.scheduler.clone()),
            initial_prices_units: Some(match &scenario.initial {
                None => InitialPrices::Cap(CapTag::Cap),
                Some(p) => InitialPrices::Explicit(p.sellers().iter().map(|r| raw(r)).collect()),
            }),
            horizon_rounds: Some(scenario.horizon_rounds),
        }
    }
}

/// Exact rational from integers, for callers building priors.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pricewars::scenarios::{named_scenario, GENERATORS};

    #[test]
    fn named_scenarios_round_trip() {
        for name in GENERATORS {
            let sc = named_scenario(name).unwrap();
            let file = ScenarioFile::from_scenario(&sc);
            let text = file.to_json();
            let back = ScenarioFile::from_json(&text).unwrap();
            assert_eq!(back, file, "{name}");
            let rebuilt = back.into_scenario().unwrap();
            assert_eq!(rebuilt.market, sc.market, "{name}");
            assert_eq!(rebuilt.scheduler, sc.scheduler, "{name}");
            assert_eq!(rebuilt.horizon_rounds, sc.horizon_rounds, "{name}");
        }
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let text = r#"{"grid":{"denom":2},"sellers":[{"supply":2},{"supply":2}],
            "buyer":{"model":"homogeneous","marginals_units":[10,10,6,2]}}"#;
        let sc = ScenarioFile::from_json(text).unwrap().into_scenario().unwrap();
        assert_eq!(sc.market.grid.price_cap, Money(11));
        assert_eq!(sc.horizon_rounds, DEFAULT_HORIZON);
        assert!(sc.initial.is_none());
    }

    #[test]
    fn unknown_fields_name_their_location() {
        let text = r#"{"grid":{"denom":2,"cap":3},"sellers":[],"buyer":{"model":"k_additive","k":1}}"#;
        let err = ScenarioFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("grid"), "{err}");
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn probabilities_must_be_exact() {
        assert_eq!(parse_probability(" 3/4 ").unwrap(), ratio(3, 4));
        assert!(parse_probability("0.75").is_err());
    }
}
