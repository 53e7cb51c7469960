//! Consumer surplus, profits, platform revenue and welfare, and the full
//! per-mechanism equilibrium outcome.
//!
//! Surplus and welfare are per consumer of their channel; totals weight the
//! loyal channel by 1 − λ and the platform by λ. Firm profit is per firm in
//! aggregate measure.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::ValueDistribution;
use crate::equilibria::{self, MarketConfig, PriceBook};
use crate::error::{Error, Result};
use crate::quad::{self, integrate_order, QuadratureSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    NoPlatform,
    Bidding,
    BiddingWithFees,
    #[serde(rename = "best_value")]
    BestValueManaged,
    #[serde(rename = "independent")]
    IndependentManaged,
    #[serde(rename = "privacy")]
    CohortPrivacy,
}

impl Mechanism {
    pub const ALL: [Mechanism; 6] = [
        Mechanism::NoPlatform,
        Mechanism::Bidding,
        Mechanism::BiddingWithFees,
        Mechanism::BestValueManaged,
        Mechanism::IndependentManaged,
        Mechanism::CohortPrivacy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::NoPlatform => "no_platform",
            Mechanism::Bidding => "bidding",
            Mechanism::BiddingWithFees => "bidding_with_fees",
            Mechanism::BestValueManaged => "best_value",
            Mechanism::IndependentManaged => "independent",
            Mechanism::CohortPrivacy => "privacy",
        }
    }

    /// Mechanisms whose firms pay a lump-sum transfer down to Π_O.
    pub fn charges_transfer(self) -> bool {
        !matches!(self, Mechanism::NoPlatform | Mechanism::Bidding)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownName(format!("mechanism '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub mechanism: Mechanism,
    pub posted_price: f64,
    /// Highest price ever charged on the platform.
    pub on_platform_cap: f64,
    pub cs_on: f64,
    pub cs_off: f64,
    pub cs_total: f64,
    /// Net of transfers.
    pub profit_per_firm: f64,
    pub transfer_per_firm: f64,
    /// Auction revenue plus all transfers.
    pub platform_revenue: f64,
    pub producer_surplus: f64,
    pub welfare_total: f64,
}

impl EquilibriumOutcome {
    /// cs_total + producer_surplus − welfare_total.
    pub fn accounting_residual(&self) -> f64 {
        self.cs_total + self.producer_surplus - self.welfare_total
    }
}

fn check_price(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("price", p, "[0, 1]"))
    }
}

fn settings() -> QuadratureSettings {
    QuadratureSettings::default()
}

/// ∫_p (v − p) dF(v).
pub fn cs_off(p: f64, d: &ValueDistribution) -> Result<f64> {
    check_price(p)?;
    integrate_order(|v| Ok(v - p), d, 1, p, 1.0, &[], &settings())
}

/// ∫_p (v − p) dF^J(v).
pub fn cs_on(p: f64, d: &ValueDistribution, j: u32) -> Result<f64> {
    check_price(p)?;
    quad::check_firms(j, 1)?;
    integrate_order(|v| Ok(v - p), d, j, p, 1.0, &[], &settings())
}

/// p (1 − F(p)).
pub fn profit_off(p: f64, d: &ValueDistribution) -> Result<f64> {
    Ok(p * (1.0 - d.cdf(p)?))
}

/// J Ω(p; p).
pub fn profit_on(p: f64, d: &ValueDistribution, j: u32) -> Result<f64> {
    Ok(j as f64 * quad::omega(p, p, d, j, &settings())?)
}

/// Auction revenue R(p) = λ(∫ min(v, p) dF^J − J Ω(p; p)), evaluated as
/// λ J ∫ ∫_{(v−p)+}^v (v' − (v − p)+) dF^{J−1}(v') dF(v).
pub fn platform_revenue_bidding(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    if c.lambda() == 0.0 {
        return Ok(0.0);
    }
    let (d, j, s) = (c.dist(), c.j(), c.settings());
    let inner = s.inner();
    let second = integrate_order(
        |v| {
            let lo = (v - p).max(0.0);
            integrate_order(|w| Ok(w - lo), d, j - 1, lo, v, &[], &inner)
        },
        d,
        1,
        0.0,
        1.0,
        &[p],
        s,
    )?;
    Ok(c.lambda() * j as f64 * second)
}

/// ∫_p v dF(v).
pub fn welfare_off(p: f64, d: &ValueDistribution) -> Result<f64> {
    check_price(p)?;
    integrate_order(Ok, d, 1, p, 1.0, &[], &settings())
}

/// ∫ v dF^J(v).
pub fn welfare_on(d: &ValueDistribution, j: u32) -> Result<f64> {
    quad::check_firms(j, 1)?;
    integrate_order(Ok, d, j, 0.0, 1.0, &[], &settings())
}

/// (1 − λ) p (1 − F(p)) + λ ∫ min(v, cap) dF^J(v).
pub fn producer_surplus(p: f64, cap: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    check_price(cap)?;
    let off = (1.0 - c.lambda()) * p * (1.0 - c.dist().cdf_at(p));
    if c.lambda() == 0.0 {
        return Ok(off);
    }
    let on = integrate_order(
        |v| Ok(v.min(cap)),
        c.dist(),
        c.j(),
        0.0,
        1.0,
        &[cap],
        c.settings(),
    )?;
    Ok(off + c.lambda() * on)
}

/// The prices a single mechanism needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanismPrices {
    pub posted: f64,
    pub cap: f64,
    pub outside_option: f64,
}

impl MechanismPrices {
    pub fn solve(mech: Mechanism, c: &MarketConfig) -> Result<Self> {
        let posted_cap = match mech {
            Mechanism::NoPlatform => {
                let p = equilibria::solve_monopoly_price(c)?.price;
                (p, p)
            }
            Mechanism::Bidding | Mechanism::BiddingWithFees => {
                let p = equilibria::solve_bidding_price(c)?.price;
                (p, p)
            }
            Mechanism::BestValueManaged => {
                let p = equilibria::solve_best_value_price(c)?.price;
                (p, p)
            }
            Mechanism::IndependentManaged => {
                let pc = equilibria::solve_candidate_price(c)?.price;
                let pm = equilibria::solve_monopoly_price(c)?.price;
                let cap = equilibria::price_cap_between(pc, pm, c)?.price;
                (pc.max(pm), cap)
            }
            Mechanism::CohortPrivacy => {
                let p = equilibria::solve_privacy_price(c)?.price;
                (p, p)
            }
        };
        let outside_option = if mech.charges_transfer() {
            equilibria::outside_option(c)?.0
        } else {
            0.0
        };
        Ok(Self {
            posted: posted_cap.0,
            cap: posted_cap.1,
            outside_option,
        })
    }

    pub fn from_book(mech: Mechanism, book: &PriceBook) -> Self {
        let (posted, cap) = match mech {
            Mechanism::NoPlatform => (book.monopoly.price, book.monopoly.price),
            Mechanism::Bidding | Mechanism::BiddingWithFees => {
                (book.bidding.price, book.bidding.price)
            }
            Mechanism::BestValueManaged => (book.best_value.price, book.best_value.price),
            Mechanism::IndependentManaged => (book.independent.price, book.cap.price),
            Mechanism::CohortPrivacy => (book.privacy.price, book.privacy.price),
        };
        Self {
            posted,
            cap,
            outside_option: if mech.charges_transfer() {
                book.outside_profit
            } else {
                0.0
            },
        }
    }
}

pub fn mechanism_outcome(mech: Mechanism, c: &MarketConfig) -> Result<EquilibriumOutcome> {
    assemble_outcome(mech, c, &MechanismPrices::solve(mech, c)?)
}

/// Builds the outcome from already-solved prices.
pub fn assemble_outcome(
    mech: Mechanism,
    c: &MarketConfig,
    prices: &MechanismPrices,
) -> Result<EquilibriumOutcome> {
    let (lambda, j, d) = (c.lambda(), c.j(), c.dist());
    let jf = j as f64;
    let p = prices.posted;
    let cap = prices.cap;
    let s = c.settings();

    if mech == Mechanism::NoPlatform {
        // Every consumer is treated as loyal and faces p_M.
        let cs = cs_off(p, d)?;
        let ps = profit_off(p, d)?;
        return Ok(EquilibriumOutcome {
            mechanism: mech,
            posted_price: p,
            on_platform_cap: p,
            cs_on: cs,
            cs_off: cs,
            cs_total: cs,
            profit_per_firm: ps / jf,
            transfer_per_firm: 0.0,
            platform_revenue: 0.0,
            producer_surplus: ps,
            welfare_total: welfare_off(p, d)?,
        });
    }

    let loyal = c.loyal_share() * p * (1.0 - d.cdf_at(p));
    let cs_off_v = cs_off(p, d)?;
    let w_off = welfare_off(p, d)?;
    let (cs_on_v, w_on) = if mech == Mechanism::CohortPrivacy {
        (cs_on(p, d, j)?, integrate_order(Ok, d, j, p, 1.0, &[], s)?)
    } else {
        (cs_on(cap, d, j)?, welfare_on(d, j)?)
    };

    // Gross per-firm profit and platform revenue before transfers.
    let (gross, base_revenue) = match mech {
        Mechanism::Bidding | Mechanism::BiddingWithFees => {
            let on = if lambda > 0.0 {
                quad::omega(p, p, d, j, s)?
            } else {
                0.0
            };
            (loyal + lambda * on, platform_revenue_bidding(p, c)?)
        }
        Mechanism::BestValueManaged | Mechanism::IndependentManaged => {
            let on = if lambda > 0.0 {
                equilibria::capped_mean(cap, c)?
            } else {
                0.0
            };
            (loyal + lambda * on, 0.0)
        }
        Mechanism::CohortPrivacy => (loyal + lambda * p * (1.0 - d.order_cdf_at(p, j)) / jf, 0.0),
        Mechanism::NoPlatform => unreachable!("handled above"),
    };

    let (profit, transfer) = if mech.charges_transfer() {
        let t = gross - prices.outside_option;
        if t < -1e-9 {
            log::warn!(
                "{mech}: gross profit {gross} is below the outside option {}",
                prices.outside_option
            );
        }
        (prices.outside_option, t)
    } else {
        (gross, 0.0)
    };
    let platform_revenue = base_revenue + jf * transfer;

    Ok(EquilibriumOutcome {
        mechanism: mech,
        posted_price: p,
        on_platform_cap: cap,
        cs_on: cs_on_v,
        cs_off: cs_off_v,
        cs_total: (1.0 - lambda) * cs_off_v + lambda * cs_on_v,
        profit_per_firm: profit,
        transfer_per_firm: transfer,
        platform_revenue,
        producer_surplus: jf * profit + platform_revenue,
        welfare_total: (1.0 - lambda) * w_off + lambda * w_on,
    })
}

/// All requested mechanisms for one market, sharing one price solve.
pub fn all_outcomes(c: &MarketConfig, mechs: &[Mechanism]) -> Result<Vec<EquilibriumOutcome>> {
    let book = PriceBook::solve(c)?;
    mechs
        .iter()
        .map(|&m| assemble_outcome(m, c, &MechanismPrices::from_book(m, &book)))
        .collect()
}
