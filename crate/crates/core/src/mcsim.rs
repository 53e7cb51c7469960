//! Agent-level Monte Carlo: consumers with i.i.d. values, the value-aware
//! second-price auction, and the managed-campaign pricing policies.
//!
//! Draws are addressable. Consumer i reads its values from ChaCha stream i of
//! the run seed, so results do not depend on how consumers are split across
//! workers. Consumers are processed in fixed blocks whose partial sums are
//! merged by a pairwise tree, which keeps floating-point results bit-identical
//! for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::ValueDistribution;
use crate::equilibria::MarketConfig;
use crate::error::{Error, Result};
use crate::welfare::{EquilibriumOutcome, Mechanism, MechanismPrices};

/// Consumers per parallel work unit.
pub const BLOCK: usize = 4096;
/// Slack for comparisons that involve no sampling noise.
const EXACT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    OnPlatform,
    LoyalTo(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsumerDraw {
    pub values: Vec<f64>,
    pub channel: Channel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuctionRecord {
    pub bids: Vec<f64>,
    pub winner: usize,
    /// Second-highest bid; zero for managed campaigns.
    pub payment: f64,
    pub sponsored_price: f64,
    /// The sponsored offer was accepted.
    pub bought: bool,
    /// Posted offer bought instead of a rejected sponsored offer.
    pub alternative: Option<usize>,
    pub consumer_surplus: f64,
    /// Revenue of the selling firm net of its auction payment.
    pub firm_profit: f64,
    pub platform_take: f64,
}

impl AuctionRecord {
    /// Value of whatever the consumer bought, zero if nothing.
    pub fn value_consumed(&self, values: &[f64]) -> f64 {
        if self.bought {
            values[self.winner]
        } else {
            self.alternative.map_or(0.0, |k| values[k])
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Channels drawn independently per consumer.
    Bernoulli,
    /// Exact λ and (1 − λ)/J channel weights.
    #[default]
    Stratified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSettings {
    pub n: u64,
    pub seed: u64,
    pub mode: ChannelMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SimSettings {
    pub fn new(n: u64, seed: u64) -> Self {
        Self {
            n,
            seed,
            mode: ChannelMode::default(),
            threads: None,
        }
    }
}

fn check_dims(values: &[f64], posted: &[f64]) -> Result<()> {
    if values.len() != posted.len() {
        return Err(Error::DimensionMismatch {
            left: values.len(),
            right: posted.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::InvalidConfig("at least one firm is required".into()));
    }
    Ok(())
}

fn check_unit(what: &'static str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(&x) => Err(Error::domain(what, x, "[0, 1]")),
        None => Ok(()),
    }
}

/// Utility floor of firm j: the best posted offer of any rival, (v_k − p̄_k)+.
fn rival_floor(values: &[f64], posted: &[f64], j: usize) -> f64 {
    values
        .iter()
        .zip(posted)
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, (v, p))| (v - p).max(0.0))
        .fold(0.0, f64::max)
}

/// First index of the largest entry.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// b_j = max(min(p̄_j, v_j − u_j), floor) with u_j = max_{k≠j} (v_k − p̄_k)+.
pub fn bid_vector(values: &[f64], posted: &[f64], reserve_floor: f64) -> Result<Vec<f64>> {
    check_dims(values, posted)?;
    check_unit("value", values)?;
    check_unit("posted price", posted)?;
    Ok(bids_unchecked(values, posted, reserve_floor))
}

fn bids_unchecked(values: &[f64], posted: &[f64], floor: f64) -> Vec<f64> {
    (0..values.len())
        .map(|j| {
            posted[j]
                .min(values[j] - rival_floor(values, posted, j))
                .max(floor)
        })
        .collect()
}

/// Best posted offer with nonnegative surplus (lowest index on ties).
fn best_posted(values: &[f64], posted: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (v, p)) in values.iter().zip(posted).enumerate() {
        let u = v - p;
        if u >= 0.0 && best.is_none_or(|(_, b)| u > b) {
            best = Some((k, u));
        }
    }
    best
}

/// Settles the purchase of the sponsored offer at `price` from `winner`.
fn settle(
    values: &[f64],
    posted: &[f64],
    bids: Vec<f64>,
    winner: usize,
    price: f64,
    payment: f64,
) -> AuctionRecord {
    let own = values[winner] - price;
    let floor = rival_floor(values, posted, winner);
    let bought = own >= 0.0 && own >= floor;
    let (alternative, consumer_surplus, firm_revenue) = if bought {
        (None, own, price)
    } else {
        match best_posted(values, posted) {
            Some((k, u)) => (Some(k), u, posted[k]),
            None => (None, 0.0, 0.0),
        }
    };
    AuctionRecord {
        bids,
        winner,
        payment,
        sponsored_price: price,
        bought,
        alternative,
        consumer_surplus,
        firm_profit: firm_revenue - payment,
        platform_take: payment,
    }
}

fn require_on_platform(consumer: &ConsumerDraw) -> Result<()> {
    match consumer.channel {
        Channel::OnPlatform => Ok(()),
        Channel::LoyalTo(j) => Err(Error::InvalidConfig(format!(
            "consumer is loyal to firm {j}, not on the platform"
        ))),
    }
}

/// Second-price auction for the sponsored slot with value-aware bids.
pub fn run_bidding_auction(consumer: &ConsumerDraw, posted: &[f64]) -> Result<AuctionRecord> {
    require_on_platform(consumer)?;
    let bids = bid_vector(&consumer.values, posted, 0.0)?;
    Ok(bidding_unchecked(&consumer.values, posted, bids))
}

fn bidding_unchecked(values: &[f64], posted: &[f64], bids: Vec<f64>) -> AuctionRecord {
    let winner = argmax(&bids);
    let payment = bids
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != winner)
        .map(|(_, &b)| b)
        .fold(0.0, f64::max);
    let price = bids[winner];
    settle(values, posted, bids, winner, price, payment)
}

/// Managed campaign: the platform steers the consumer to the highest-value
/// firm and prices the sponsored offer by the mechanism's policy.
pub fn run_managed(
    consumer: &ConsumerDraw,
    mech: Mechanism,
    posted: &[f64],
    cap: f64,
) -> Result<AuctionRecord> {
    require_on_platform(consumer)?;
    check_dims(&consumer.values, posted)?;
    check_unit("value", &consumer.values)?;
    check_unit("posted price", posted)?;
    if !matches!(
        mech,
        Mechanism::BestValueManaged | Mechanism::IndependentManaged | Mechanism::CohortPrivacy
    ) {
        return Err(Error::UnsupportedMechanism(mech.name().into()));
    }
    Ok(managed_unchecked(&consumer.values, mech, posted, cap))
}

fn managed_unchecked(values: &[f64], mech: Mechanism, posted: &[f64], cap: f64) -> AuctionRecord {
    let w = argmax(values);
    let vw = values[w];
    let price = match mech {
        Mechanism::BestValueManaged => values
            .iter()
            .zip(posted)
            .enumerate()
            .filter(|&(k, _)| k != w)
            .map(|(_, (vk, pk))| vw - vk + pk)
            .fold(vw.min(posted[w]), f64::min),
        Mechanism::CohortPrivacy => posted.iter().copied().fold(f64::INFINITY, f64::min),
        _ => vw.min(cap),
    };
    settle(values, posted, Vec::new(), w, price, 0.0)
}

/// Per-consumer measures accumulated by channel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: f64,
    sum: [f64; MEASURES],
    sumsq: [f64; MEASURES],
}

const MEASURES: usize = 5;
const CS: usize = 0;
const VALUE: usize = 1;
const FIRM: usize = 2;
const TAKE: usize = 3;
/// Firm revenue plus platform take.
const PRODUCER: usize = 4;

impl Moments {
    fn push(&mut self, [cs, value, firm, take]: [f64; 4]) {
        let x = [cs, value, firm, take, firm + take];
        self.n += 1.0;
        for (i, xi) in x.into_iter().enumerate() {
            self.sum[i] += xi;
            self.sumsq[i] += xi * xi;
        }
    }

    fn merge(&self, o: &Self) -> Self {
        let mut m = *self;
        m.n += o.n;
        for i in 0..MEASURES {
            m.sum[i] += o.sum[i];
            m.sumsq[i] += o.sumsq[i];
        }
        m
    }

    fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n
    }

    /// Variance of the sample mean.
    fn mean_var(&self, i: usize) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.mean(i);
        let var = ((self.sumsq[i] - self.n * m * m) / (self.n - 1.0)).max(0.0);
        var / self.n
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Tally {
    on: Moments,
    off: Moments,
    records: u64,
    efficiency: u64,
    showrooming: u64,
    poaching: u64,
}

impl Tally {
    fn merge(&self, o: &Self) -> Self {
        Self {
            on: self.on.merge(&o.on),
            off: self.off.merge(&o.off),
            records: self.records + o.records,
            efficiency: self.efficiency + o.efficiency,
            showrooming: self.showrooming + o.showrooming,
            poaching: self.poaching + o.poaching,
        }
    }
}

fn tree_reduce(mut parts: Vec<Tally>) -> Tally {
    if parts.is_empty() {
        return Tally::default();
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| {
                if c.len() == 2 {
                    c[0].merge(&c[1])
                } else {
                    c[0]
                }
            })
            .collect();
    }
    parts[0]
}

/// Draws consumer `i` of a run: J values from stream i, then (Bernoulli mode
/// only) one more uniform for the channel.
pub fn draw_consumer(
    i: u64,
    seed: u64,
    n: u64,
    lambda: f64,
    j: usize,
    d: &ValueDistribution,
    mode: ChannelMode,
) -> ConsumerDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    let values: Vec<f64> = (0..j).map(|_| d.sample(&mut rng)).collect();
    let u = match mode {
        ChannelMode::Stratified => (i as f64 + 0.5) / n as f64,
        ChannelMode::Bernoulli => rng.random::<f64>(),
    };
    let channel = if u < lambda {
        Channel::OnPlatform
    } else {
        let seg = ((u - lambda) / (1.0 - lambda) * j as f64) as usize;
        Channel::LoyalTo(seg.min(j - 1))
    };
    ConsumerDraw { values, channel }
}

struct Run<'a> {
    mech: Mechanism,
    posted: Vec<f64>,
    cap: f64,
    lambda: f64,
    dist: &'a ValueDistribution,
    settings: &'a SimSettings,
}

impl Run<'_> {
    fn block(&self, b: u64) -> Tally {
        let s = self.settings;
        let j = self.posted.len();
        let lo = b * BLOCK as u64;
        let hi = (lo + BLOCK as u64).min(s.n);
        let mut t = Tally::default();
        for i in lo..hi {
            let c = draw_consumer(i, s.seed, s.n, self.lambda, j, self.dist, s.mode);
            let v = &c.values;
            let loyal_to = match (c.channel, self.mech) {
                (Channel::LoyalTo(k), _) => Some(k),
                // Without a platform everyone shops like a loyal consumer.
                (Channel::OnPlatform, Mechanism::NoPlatform) => Some((i % j as u64) as usize),
                _ => None,
            };
            if let Some(k) = loyal_to {
                let p = self.posted[k];
                let x = if v[k] >= p {
                    [v[k] - p, v[k], p, 0.0]
                } else {
                    [0.0; 4]
                };
                if c.channel == Channel::OnPlatform {
                    t.on.push(x);
                } else {
                    t.off.push(x);
                }
                continue;
            }
            let r = match self.mech {
                Mechanism::Bidding | Mechanism::BiddingWithFees => {
                    let bids = bids_unchecked(v, &self.posted, 0.0);
                    bidding_unchecked(v, &self.posted, bids)
                }
                m => managed_unchecked(v, m, &self.posted, self.cap),
            };
            t.records += 1;
            if v[r.winner] < v[argmax(v)] {
                t.efficiency += 1;
            }
            if r.sponsored_price > self.posted[r.winner] {
                t.showrooming += 1;
            }
            if self.mech == Mechanism::BestValueManaged
                && r.bought
                && r.consumer_surplus < rival_floor(v, &self.posted, r.winner)
            {
                t.poaching += 1;
            }
            t.on.push([
                r.consumer_surplus,
                r.value_consumed(v),
                r.firm_profit,
                r.platform_take,
            ]);
        }
        t
    }

    fn tally(&self) -> Tally {
        let blocks = self.settings.n.div_ceil(BLOCK as u64);
        let parts: Vec<Tally> = (0..blocks).into_par_iter().map(|b| self.block(b)).collect();
        tree_reduce(parts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedOutcome {
    pub mechanism: Mechanism,
    pub n: u64,
    pub seed: u64,
    pub mode: ChannelMode,
    pub posted_price: f64,
    pub on_platform_cap: f64,
    pub cs_on: Estimate,
    pub cs_off: Estimate,
    pub cs_total: Estimate,
    pub profit_per_firm: Estimate,
    pub transfer_per_firm: Estimate,
    pub platform_revenue: Estimate,
    pub producer_surplus: Estimate,
    pub welfare_total: Estimate,
    pub on_platform_records: u64,
    pub efficiency_violations: u64,
    pub showrooming_violations: u64,
    pub poaching_violations: u64,
}

/// Simulates `mech` at its equilibrium prices.
pub fn estimate_outcome(
    mech: Mechanism,
    c: &MarketConfig,
    n: u64,
    seed: u64,
    mode: ChannelMode,
) -> Result<SimulatedOutcome> {
    let prices = MechanismPrices::solve(mech, c)?;
    let settings = SimSettings {
        mode,
        ..SimSettings::new(n, seed)
    };
    estimate_outcome_with(mech, c, &prices, &settings)
}

/// Simulates `mech` at the given prices. Π_O enters as an analytic input.
pub fn estimate_outcome_with(
    mech: Mechanism,
    c: &MarketConfig,
    prices: &MechanismPrices,
    s: &SimSettings,
) -> Result<SimulatedOutcome> {
    if s.n == 0 {
        return Err(Error::InvalidConfig(
            "sample size n must be at least 1".into(),
        ));
    }
    let j = c.j() as usize;
    let run = Run {
        mech,
        posted: vec![prices.posted; j],
        cap: prices.cap,
        lambda: c.lambda(),
        dist: c.dist(),
        settings: s,
    };
    let t = match s.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run.tally()),
        None => run.tally(),
    };
    Ok(summarize(mech, c, prices, s, &t))
}

fn summarize(
    mech: Mechanism,
    c: &MarketConfig,
    prices: &MechanismPrices,
    s: &SimSettings,
    t: &Tally,
) -> SimulatedOutcome {
    let lambda = c.lambda();
    let jf = c.j() as f64;
    let channel = |m: &Moments, i: usize| {
        if m.n == 0.0 {
            Estimate {
                mean: f64::NAN,
                se: f64::NAN,
            }
        } else {
            Estimate {
                mean: m.mean(i),
                se: m.mean_var(i).sqrt(),
            }
        }
    };
    // Population mean of measure i, optionally scaled.
    let total = |i: usize, scale: f64| -> Estimate {
        match s.mode {
            ChannelMode::Stratified => {
                let mut mean = 0.0;
                let mut var = 0.0;
                for (w, m) in [(lambda, &t.on), (1.0 - lambda, &t.off)] {
                    if w > 0.0 && m.n > 0.0 {
                        mean += w * m.mean(i);
                        var += w * w * m.mean_var(i);
                    }
                }
                Estimate {
                    mean: scale * mean,
                    se: scale * var.sqrt(),
                }
            }
            ChannelMode::Bernoulli => {
                let all = t.on.merge(&t.off);
                Estimate {
                    mean: scale * all.mean(i),
                    se: scale * all.mean_var(i).sqrt(),
                }
            }
        }
    };
    let gross = total(FIRM, 1.0 / jf);
    let take = total(TAKE, 1.0);
    let exact = |x: f64| Estimate { mean: x, se: 0.0 };
    let (profit, transfer) = if mech.charges_transfer() {
        let o = prices.outside_option;
        (
            exact(o),
            Estimate {
                mean: gross.mean - o,
                se: gross.se,
            },
        )
    } else {
        (gross, exact(0.0))
    };
    // With fees, revenue = take + J·(gross − Π_O) = (firm + take) − J·Π_O.
    let ps = total(PRODUCER, 1.0);
    let revenue = if mech.charges_transfer() {
        Estimate {
            mean: ps.mean - jf * prices.outside_option,
            se: ps.se,
        }
    } else {
        take
    };

    SimulatedOutcome {
        mechanism: mech,
        n: s.n,
        seed: s.seed,
        mode: s.mode,
        posted_price: prices.posted,
        on_platform_cap: prices.cap,
        cs_on: channel(&t.on, CS),
        cs_off: channel(&t.off, CS),
        cs_total: total(CS, 1.0),
        profit_per_firm: profit,
        transfer_per_firm: transfer,
        platform_revenue: revenue,
        producer_surplus: ps,
        welfare_total: total(VALUE, 1.0),
        on_platform_records: t.records,
        efficiency_violations: t.efficiency,
        showrooming_violations: t.showrooming,
        poaching_violations: t.poaching,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Flag,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub analytic: f64,
    pub estimate: f64,
    pub se: f64,
    /// |estimate − analytic| / se; `None` for noise-free quantities.
    pub z: Option<f64>,
    pub verdict: Verdict,
}

/// Compares every welfare quantity with its analytic value: pass within 3
/// standard errors, flag up to 4, fail beyond.
pub fn compare(sim: &SimulatedOutcome, analytic: &EquilibriumOutcome) -> Vec<Comparison> {
    let pairs = [
        ("cs_on", sim.cs_on, analytic.cs_on),
        ("cs_off", sim.cs_off, analytic.cs_off),
        ("cs_total", sim.cs_total, analytic.cs_total),
        (
            "profit_per_firm",
            sim.profit_per_firm,
            analytic.profit_per_firm,
        ),
        (
            "transfer_per_firm",
            sim.transfer_per_firm,
            analytic.transfer_per_firm,
        ),
        (
            "platform_revenue",
            sim.platform_revenue,
            analytic.platform_revenue,
        ),
        (
            "producer_surplus",
            sim.producer_surplus,
            analytic.producer_surplus,
        ),
        ("welfare_total", sim.welfare_total, analytic.welfare_total),
    ];
    pairs
        .into_iter()
        .filter(|(_, e, _)| e.mean.is_finite())
        .map(|(name, e, a)| {
            let diff = (e.mean - a).abs();
            let (z, verdict) = if e.se > 0.0 {
                let z = diff / e.se;
                let v = if z <= 3.0 {
                    Verdict::Pass
                } else if z <= 4.0 {
                    Verdict::Flag
                } else {
                    Verdict::Fail
                };
                (Some(z), v)
            } else if diff <= EXACT_TOL {
                (None, Verdict::Pass)
            } else {
                (None, Verdict::Fail)
            };
            Comparison {
                quantity: name.to_string(),
                analytic: a,
                estimate: e.mean,
                se: e.se,
                z,
                verdict,
            }
        })
        .collect()
}
