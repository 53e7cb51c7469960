//! Invariant suites over a grid of markets: price orderings, comparative
//! statics, accounting closure, vertical-integration optimality, revenue
//! rankings, figure shapes and Monte Carlo agreement.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::ValueDistribution;
use crate::equilibria::{self, MarketConfig, PriceBook};
use crate::error::Result;
use crate::mcsim::{self, SimSettings, Verdict};
use crate::quad::{self, QuadratureSettings};
use crate::sweep::{self, LambdaGrid, SweepSpec};
use crate::welfare::{self, EquilibriumOutcome, Mechanism, MechanismPrices};

/// Slack for price inequalities.
pub const PRICE_SLACK: f64 = 1e-7;
/// Slack for accounting identities and welfare comparisons.
pub const VALUE_SLACK: f64 = 1e-6;

pub type PriceFn = fn(&MarketConfig) -> Result<f64>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Collects violations of one named invariant.
struct Tracker {
    suite: &'static str,
    name: String,
    cases: usize,
    violations: Vec<String>,
}

impl Tracker {
    fn new(suite: &'static str, name: impl Into<String>) -> Self {
        Self {
            suite,
            name: name.into(),
            cases: 0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.violations.push(what());
        }
    }

    /// Drops invariants that no case in the grid exercised.
    fn finish_if_exercised(self) -> Option<Check> {
        (self.cases > 0).then(|| self.finish())
    }

    fn finish(self) -> Check {
        let detail = if self.violations.is_empty() {
            format!("{} cases", self.cases)
        } else {
            let shown: Vec<&str> = self.violations.iter().take(3).map(String::as_str).collect();
            format!(
                "{} of {} cases violate; first: {}",
                self.violations.len(),
                self.cases,
                shown.join("; ")
            )
        };
        Check {
            suite: self.suite,
            name: self.name,
            passed: self.violations.is_empty() && self.cases > 0,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TestGrid {
    pub lambdas: Vec<f64>,
    pub js: Vec<u32>,
    pub families: Vec<ValueDistribution>,
    /// Points per axis of the Ω casework grid.
    pub omega_points: usize,
    pub mc_samples: u64,
}

impl TestGrid {
    pub fn full() -> Self {
        Self {
            lambdas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            js: vec![2, 3, 5, 7],
            families: shipped_families(),
            omega_points: 21,
            mc_samples: 1_000_000,
        }
    }

    /// Every axis coarsened about fourfold.
    pub fn quick() -> Self {
        Self {
            lambdas: vec![0.1, 0.5, 0.9],
            js: vec![2, 3, 7],
            families: shipped_families(),
            omega_points: 6,
            mc_samples: 100_000,
        }
    }
}

pub fn shipped_families() -> Vec<ValueDistribution> {
    vec![
        ValueDistribution::Uniform,
        ValueDistribution::power(0.75).expect("0.75 is a valid exponent"),
    ]
}

fn tag(c: &MarketConfig) -> String {
    format!("lambda={} J={} {}", c.lambda(), c.j(), c.dist().label())
}

/// All prices and outcomes of one market.
#[derive(Clone, Debug)]
pub struct MarketSolution {
    pub config: MarketConfig,
    pub book: PriceBook,
    /// Indexed like [`Mechanism::ALL`].
    pub outcomes: Vec<EquilibriumOutcome>,
}

impl MarketSolution {
    pub fn solve(config: MarketConfig) -> Result<Self> {
        let book = PriceBook::solve(&config)?;
        let outcomes = Mechanism::ALL
            .iter()
            .map(|&m| welfare::assemble_outcome(m, &config, &MechanismPrices::from_book(m, &book)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            book,
            outcomes,
        })
    }

    pub fn outcome(&self, m: Mechanism) -> &EquilibriumOutcome {
        let i = Mechanism::ALL
            .iter()
            .position(|&x| x == m)
            .expect("mechanism listed in ALL");
        &self.outcomes[i]
    }
}

pub fn solve_markets(
    lambdas: &[f64],
    js: &[u32],
    families: &[ValueDistribution],
) -> Result<Vec<MarketSolution>> {
    let configs = lambdas
        .iter()
        .flat_map(|&l| {
            js.iter().flat_map(move |&j| {
                families
                    .iter()
                    .map(move |d| MarketConfig::new(l, j, d.clone()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    configs.into_par_iter().map(MarketSolution::solve).collect()
}

/// Lemma-1 equivalence of the simplified and casework forms of Ω.
pub fn omega_suite(grid: &TestGrid) -> Result<Vec<Check>> {
    let s = QuadratureSettings::default();
    let n = grid.omega_points.max(2);
    let pts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut out = Vec::new();
    let cases: Vec<(ValueDistribution, u32)> = grid
        .families
        .iter()
        .flat_map(|d| [2u32, 3, 5].map(|j| (d.clone(), j)))
        .collect();
    let worst = cases
        .par_iter()
        .map(|(d, j)| -> Result<(f64, String)> {
            let mut worst = (0.0, String::new());
            for &p in &pts {
                let simple = quad::omega(p, 0.0, d, *j, &s)?;
                for &q in &pts {
                    let err = (quad::omega_casework(p, q, d, *j, &s)? - simple).abs();
                    if err > worst.0 {
                        worst = (err, format!("{} J={j} p={p} p'={q}", d.label()));
                    }
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let (err, at) = worst
        .into_iter()
        .fold((0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    out.push(Check {
        suite: "omega",
        name: "casework equals simplified form".into(),
        passed: err < 1e-7,
        detail: format!("max |diff| = {err:.3e} at {at}"),
    });

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut conc = Tracker::new("omega", "concave and nondecreasing in p");
    for (d, j) in &cases {
        for k in 1..=19 {
            let p = k as f64 / 20.0;
            let fd = (quad::omega(p + h, 0.0, d, *j, &s)? - quad::omega(p - h, 0.0, d, *j, &s)?)
                / (2.0 * h);
            worst = worst.max((quad::omega_deriv(p, d, *j, &s)? - fd).abs());
        }
        let vals = (0..=40)
            .map(|k| quad::omega(k as f64 / 40.0, 0.0, d, *j, &s))
            .collect::<Result<Vec<_>>>()?;
        for w in vals.windows(3) {
            conc.check(
                w[2] - 2.0 * w[1] + w[0] <= 1e-8 && w[1] >= w[0] - 1e-12,
                || format!("{} J={j}", d.label()),
            );
        }
    }
    out.push(Check {
        suite: "omega",
        name: "derivative matches central differences".into(),
        passed: worst < 1e-4,
        detail: format!("max |diff| = {worst:.3e}"),
    });
    out.push(conc.finish());
    Ok(out)
}

/// Price orderings. `bidding` replaces the bidding-price solver.
pub fn ordering_suite(markets: &[MarketSolution], bidding: Option<PriceFn>) -> Result<Vec<Check>> {
    let mut mb = Tracker::new("ordering", "p_M <= p_B <= p_V");
    let mut iv = Tracker::new("ordering", "p_I <= p_V");
    let mut pp = Tracker::new("ordering", "p_M < p_P < p_V");
    let mut collapse = Tracker::new("ordering", "p_I = p_M for Uniform, J >= 4");
    let mut convex = Tracker::new("ordering", "convexity ranking of p_I and p_B");
    for m in markets {
        let c = &m.config;
        let b = &m.book;
        let p_b = match bidding {
            Some(f) => f(c)?,
            None => b.bidding.price,
        };
        let (p_m, p_v, p_i, p_p) = (
            b.monopoly.price,
            b.best_value.price,
            b.independent.price,
            b.privacy.price,
        );
        let t = tag(c);
        mb.check(p_m <= p_b + PRICE_SLACK && p_b <= p_v + PRICE_SLACK, || {
            format!("{t}: p_M={p_m:.9} p_B={p_b:.9} p_V={p_v:.9}")
        });
        iv.check(p_i <= p_v + PRICE_SLACK, || {
            format!("{t}: p_I={p_i:.9} p_V={p_v:.9}")
        });
        pp.check(p_m < p_p && p_p < p_v, || {
            format!("{t}: p_M={p_m:.9} p_P={p_p:.9} p_V={p_v:.9}")
        });
        let uniform = matches!(c.dist(), ValueDistribution::Uniform);
        if uniform && c.j() >= 4 {
            collapse.check((p_i - p_m).abs() <= PRICE_SLACK, || {
                format!("{t}: p_I={p_i:.9}")
            });
        }
        match (c.dist(), c.j()) {
            (ValueDistribution::Power { .. }, 3) => convex.check(p_i <= p_b + PRICE_SLACK, || {
                format!("{t}: p_I={p_i:.9} > p_B={p_b:.9}")
            }),
            (ValueDistribution::Power { .. }, 2) => convex.check(p_b <= p_i + PRICE_SLACK, || {
                format!("{t}: p_B={p_b:.9} > p_I={p_i:.9}")
            }),
            (ValueDistribution::Uniform, 2) => {
                let p_c = b.candidate.price;
                convex.check((p_b - p_c).abs() < 1e-9, || {
                    format!("{t}: p_B={p_b:.12} p_C={p_c:.12}")
                })
            }
            _ => {}
        }
    }
    let mut out = vec![mb.finish(), iv.finish(), pp.finish()];
    out.extend(collapse.finish_if_exercised());
    out.extend(convex.finish_if_exercised());
    Ok(out)
}

/// p_B with the sign of the on-platform FOC term flipped, for checking that
/// the ordering suite notices a broken solver.
pub fn sign_flipped_bidding_price(c: &MarketConfig) -> Result<f64> {
    let foc = |p: f64| -> Result<f64> {
        let on = quad::omega_deriv(p, c.dist(), c.j(), c.settings())?;
        Ok(equilibria::foc_bidding(p, c)? - 2.0 * c.lambda() * on)
    };
    Ok(equilibria::solve_foc(foc, c.settings())?.price)
}

/// Threshold J > −1/ln F(1 − p_M) above which p_B falls in J.
pub fn firm_count_threshold(d: &ValueDistribution) -> Result<f64> {
    let c = MarketConfig::new(0.0, 2, d.clone())?;
    let pm = equilibria::solve_monopoly_price(&c)?.price;
    Ok(-1.0 / d.cdf(1.0 - pm)?.ln())
}

/// Comparative statics of the bidding equilibrium in λ and J.
pub fn monotonicity_suite(
    lambdas: &[f64],
    js: &[u32],
    families: &[ValueDistribution],
) -> Result<Vec<Check>> {
    let mut price = Tracker::new("monotonicity", "p_B nondecreasing in lambda");
    let mut cs = Tracker::new(
        "monotonicity",
        "cs_off and cs_on at p_B decreasing in lambda",
    );
    let mut prof_off = Tracker::new("monotonicity", "profit_off at p_B decreasing in lambda");
    let mut prof_on = Tracker::new("monotonicity", "profit_on at p_B increasing in lambda");
    let mut rev = Tracker::new("monotonicity", "bidding revenue increasing in lambda");
    let mut w_off = Tracker::new("monotonicity", "welfare_off at p_B decreasing in lambda");
    let mut price_j = Tracker::new("monotonicity", "p_B nonincreasing in J above the threshold");
    let mut welfare_j = Tracker::new(
        "monotonicity",
        "cs and welfare at p_B increasing in J above the threshold",
    );

    struct Point {
        p: f64,
        cs_off: f64,
        cs_on: f64,
        profit_off: f64,
        profit_on: f64,
        revenue: f64,
        w_off: f64,
        w_total: f64,
    }
    let point = |c: &MarketConfig| -> Result<Point> {
        let p = equilibria::solve_bidding_price(c)?.price;
        let (d, j) = (c.dist(), c.j());
        let w_off = welfare::welfare_off(p, d)?;
        Ok(Point {
            p,
            cs_off: welfare::cs_off(p, d)?,
            cs_on: welfare::cs_on(p, d, j)?,
            profit_off: welfare::profit_off(p, d)?,
            profit_on: welfare::profit_on(p, d, j)?,
            revenue: welfare::platform_revenue_bidding(p, c)?,
            w_off,
            w_total: (1.0 - c.lambda()) * w_off + c.lambda() * welfare::welfare_on(d, j)?,
        })
    };

    for d in families {
        for &j in js {
            let pts = lambdas
                .par_iter()
                .map(|&l| point(&MarketConfig::new(l, j, d.clone())?))
                .collect::<Result<Vec<_>>>()?;
            for (k, w) in pts.windows(2).enumerate() {
                let (a, b) = (&w[0], &w[1]);
                let t = || {
                    format!(
                        "{} J={j} lambda {}->{}",
                        d.label(),
                        lambdas[k],
                        lambdas[k + 1]
                    )
                };
                price.check(b.p >= a.p - PRICE_SLACK, t);
                cs.check(b.cs_off < a.cs_off && b.cs_on < a.cs_on, t);
                prof_off.check(b.profit_off < a.profit_off, t);
                prof_on.check(b.profit_on > a.profit_on, t);
                rev.check(b.revenue > a.revenue, t);
                w_off.check(b.w_off < a.w_off, t);
            }
        }
        let threshold = firm_count_threshold(d)?;
        let j_range: Vec<u32> = (2..=10).filter(|&j| j as f64 > threshold).collect();
        for &l in lambdas {
            let pts = j_range
                .par_iter()
                .map(|&j| point(&MarketConfig::new(l, j, d.clone())?))
                .collect::<Result<Vec<_>>>()?;
            for (k, w) in pts.windows(2).enumerate() {
                let (a, b) = (&w[0], &w[1]);
                let t = || {
                    format!(
                        "{} lambda={l} J {}->{}",
                        d.label(),
                        j_range[k],
                        j_range[k + 1]
                    )
                };
                price_j.check(b.p <= a.p + PRICE_SLACK, t);
                welfare_j.check(
                    b.cs_off > a.cs_off && b.cs_on > a.cs_on && b.w_total > a.w_total,
                    t,
                );
            }
        }
    }
    Ok(vec![
        price.finish(),
        cs.finish(),
        prof_off.finish(),
        prof_on.finish(),
        rev.finish(),
        w_off.finish(),
        price_j.finish(),
        welfare_j.finish(),
    ])
}

/// Accounting, vertical integration, welfare and revenue rankings.
pub fn welfare_suite(markets: &[MarketSolution]) -> Result<Vec<Check>> {
    let mut books = Tracker::new("welfare", "cs_total + producer_surplus = welfare_total");
    let mut held = Tracker::new("welfare", "fee mechanisms hold firms to the outside option");
    let mut transfers = Tracker::new("welfare", "transfers are nonnegative");
    let mut vi = Tracker::new("welfare", "producer surplus peaks at p_V");
    let mut t4 = Tracker::new(
        "welfare",
        "best value lowers cs and welfare relative to bidding",
    );
    let mut ind = Tracker::new(
        "welfare",
        "independent raises cs and welfare relative to best value",
    );
    let mut bv_rev = Tracker::new("revenue", "best value revenue >= bidding with fees");
    let mut sign = Tracker::new(
        "revenue",
        "bidding-with-fees vs independent revenue follows sign(p_B - p_I)",
    );

    let vi_results = markets
        .par_iter()
        .map(|m| -> Result<(f64, f64)> {
            let c = &m.config;
            let n = 10_000;
            let mut best = (f64::MIN, 0.0);
            for i in 0..=n {
                let p = i as f64 / n as f64;
                let v = welfare::producer_surplus(p, p, c)?;
                if v > best.0 {
                    best = (v, p);
                }
            }
            Ok((best.1, m.book.best_value.price))
        })
        .collect::<Result<Vec<_>>>()?;

    for (m, (argmax, pv)) in markets.iter().zip(vi_results) {
        let t = tag(&m.config);
        vi.check((argmax - pv).abs() <= 1e-4 + 1e-12, || {
            format!("{t}: grid argmax {argmax} vs p_V {pv:.9}")
        });
        for o in &m.outcomes {
            books.check(o.accounting_residual().abs() <= VALUE_SLACK, || {
                format!(
                    "{t} {}: residual {:.3e}",
                    o.mechanism,
                    o.accounting_residual()
                )
            });
            transfers.check(o.transfer_per_firm >= -VALUE_SLACK, || {
                format!("{t} {}: transfer {:.3e}", o.mechanism, o.transfer_per_firm)
            });
            if o.mechanism.charges_transfer() {
                held.check(
                    (o.profit_per_firm - m.book.outside_profit).abs() <= VALUE_SLACK,
                    || format!("{t} {}", o.mechanism),
                );
            }
        }
        let bid = m.outcome(Mechanism::Bidding);
        let fees = m.outcome(Mechanism::BiddingWithFees);
        let bv = m.outcome(Mechanism::BestValueManaged);
        let im = m.outcome(Mechanism::IndependentManaged);
        t4.check(
            bv.cs_total <= bid.cs_total + VALUE_SLACK
                && bv.welfare_total <= bid.welfare_total + VALUE_SLACK,
            || t.to_string(),
        );
        ind.check(
            im.cs_total >= bv.cs_total - VALUE_SLACK
                && im.welfare_total >= bv.welfare_total - VALUE_SLACK,
            || t.to_string(),
        );
        bv_rev.check(
            bv.platform_revenue >= fees.platform_revenue - VALUE_SLACK,
            || {
                format!(
                    "{t}: {:.9} < {:.9}",
                    bv.platform_revenue, fees.platform_revenue
                )
            },
        );
        let gap = m.book.bidding.price - m.book.independent.price;
        let diff = fees.platform_revenue - im.platform_revenue;
        if gap.abs() > PRICE_SLACK {
            sign.check(diff * gap.signum() >= -VALUE_SLACK, || {
                format!("{t}: p_B - p_I = {gap:.3e}, revenue gap {diff:.3e}")
            });
        }
    }
    Ok(vec![
        books.finish(),
        held.finish(),
        transfers.finish(),
        vi.finish(),
        t4.finish(),
        ind.finish(),
        bv_rev.finish(),
        sign.finish(),
    ])
}

/// First differences change sign somewhere strictly inside the series.
pub fn has_interior_extremum(ys: &[f64]) -> bool {
    let d: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
    d.windows(2).any(|w| w[0] * w[1] < 0.0)
}

/// Qualitative shapes of the price and welfare curves, checked on sweep output.
pub fn figure_suite() -> Result<Vec<Check>> {
    let spec = SweepSpec {
        j_list: vec![3, 5, 7],
        mechanisms: vec![Mechanism::Bidding],
        ..SweepSpec::default()
    };
    let rows = sweep::run_sweep(&spec)?;
    let series = |j: u32, f: fn(&sweep::SweepRow) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter(|r| r.j == j).filter_map(f).collect()
    };
    let mut rising = Tracker::new(
        "figures",
        "bidding posted price increases in lambda for J = 3, 5, 7",
    );
    for j in [3, 5, 7] {
        let p = series(j, |r| r.posted_price);
        rising.check(p.len() == 20 && p.windows(2).all(|w| w[1] > w[0]), || {
            format!("J={j}")
        });
    }
    let cs = series(3, |r| r.cs_total);
    let profit = series(3, |r| r.profit_per_firm);
    let mut checks = vec![
        rising.finish(),
        Check {
            suite: "figures",
            name: "total cs under bidding is nonmonotone in lambda (Uniform, J = 3)".into(),
            passed: has_interior_extremum(&cs),
            detail: format!("{} points", cs.len()),
        },
        Check {
            suite: "figures",
            name: "firm profit under bidding is nonmonotone in lambda (Uniform, J = 3)".into(),
            passed: has_interior_extremum(&profit),
            detail: format!("{} points", profit.len()),
        },
    ];

    let fig4 = SweepSpec {
        lambda: LambdaGrid {
            start: 0.1,
            stop: 0.9,
            step: 0.2,
        },
        j_list: vec![2, 3],
        families: vec![crate::dist::DistSpec::Power { a: 0.75 }],
        mechanisms: vec![
            Mechanism::BiddingWithFees,
            Mechanism::BestValueManaged,
            Mechanism::IndependentManaged,
        ],
        ..SweepSpec::default()
    };
    let rows = sweep::run_sweep(&fig4)?;
    let rev = |l: f64, j: u32, m: Mechanism| {
        rows.iter()
            .find(|r| r.lambda == l && r.j == j && r.mechanism == m)
            .and_then(|r| r.platform_revenue)
            .unwrap_or(f64::NAN)
    };
    let mut between = Tracker::new(
        "figures",
        "independent revenue lies between bidding with fees and best value (Power 0.75, J = 2)",
    );
    let mut switch = Tracker::new("figures", "bidding-with-fees vs independent revenue order switches between J = 2 and J = 3 (Power 0.75)");
    for l in fig4.lambda.values()? {
        let (f2, b2, i2) = (
            rev(l, 2, Mechanism::BiddingWithFees),
            rev(l, 2, Mechanism::BestValueManaged),
            rev(l, 2, Mechanism::IndependentManaged),
        );
        between.check(f2 <= i2 + VALUE_SLACK && i2 <= b2 + VALUE_SLACK, || {
            format!("lambda={l}: fees {f2:.6} ind {i2:.6} bv {b2:.6}")
        });
        let (f3, i3) = (
            rev(l, 3, Mechanism::BiddingWithFees),
            rev(l, 3, Mechanism::IndependentManaged),
        );
        switch.check(f2 <= i2 + VALUE_SLACK && f3 >= i3 - VALUE_SLACK, || {
            format!(
                "lambda={l}: J=2 fees-ind {:.3e}, J=3 fees-ind {:.3e}",
                f2 - i2,
                f3 - i3
            )
        });
    }
    checks.push(between.finish());
    checks.push(switch.finish());
    Ok(checks)
}

/// Simulated welfare objects against their analytic values, plus the
/// per-record allocation properties.
pub fn monte_carlo_suite(n: u64, seed: u64, threads: Option<usize>) -> Result<Vec<Check>> {
    let mut agree = Tracker::new("monte_carlo", "analytic values within 3 standard errors");
    let mut flagged = Vec::new();
    let mut eff = Tracker::new(
        "monte_carlo",
        "winner has the highest value in every record",
    );
    let mut show = Tracker::new(
        "monte_carlo",
        "sponsored price never exceeds the posted price",
    );
    let mut poach = Tracker::new("monte_carlo", "best value offer beats every posted offer");
    for j in [2, 3] {
        let c = MarketConfig::new(0.5, j, ValueDistribution::Uniform)?;
        let book = PriceBook::solve(&c)?;
        for m in Mechanism::ALL {
            let prices = MechanismPrices::from_book(m, &book);
            let analytic = welfare::assemble_outcome(m, &c, &prices)?;
            let s = SimSettings {
                threads,
                ..SimSettings::new(n, seed)
            };
            let sim = mcsim::estimate_outcome_with(m, &c, &prices, &s)?;
            for cmp in mcsim::compare(&sim, &analytic) {
                let t = || format!("J={j} {m} {}: z={:?}", cmp.quantity, cmp.z);
                if cmp.verdict == Verdict::Flag {
                    flagged.push(t());
                }
                agree.check(cmp.verdict == Verdict::Pass, t);
            }
            eff.check(sim.efficiency_violations == 0, || format!("J={j} {m}"));
            show.check(sim.showrooming_violations == 0, || format!("J={j} {m}"));
            poach.check(sim.poaching_violations == 0, || format!("J={j} {m}"));
        }
    }
    let mut a = agree.finish();
    if !flagged.is_empty() {
        a.detail
            .push_str(&format!("; flagged (3-4 SE): {}", flagged.join(", ")));
    }
    Ok(vec![a, eff.finish(), show.finish(), poach.finish()])
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub grid: TestGrid,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Replaces the bidding-price solver in the ordering suite.
    pub bidding_override: Option<PriceFn>,
}

impl VerifyOptions {
    pub fn new(quick: bool, seed: u64) -> Self {
        Self {
            grid: if quick {
                TestGrid::quick()
            } else {
                TestGrid::full()
            },
            seed,
            threads: None,
            bidding_override: None,
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> Result<Report> {
    let g = &opts.grid;
    let mut checks = Vec::new();
    let mut timed = |name: &str, suite: &mut dyn FnMut() -> Result<Vec<Check>>| -> Result<()> {
        let t = std::time::Instant::now();
        checks.extend(suite()?);
        log::info!("{name} suite: {:.2?}", t.elapsed());
        Ok(())
    };
    let mut markets = Vec::new();
    timed("market solve", &mut || {
        markets = solve_markets(&g.lambdas, &g.js, &g.families)?;
        Ok(Vec::new())
    })?;
    timed("omega", &mut || omega_suite(g))?;
    timed("ordering", &mut || {
        ordering_suite(&markets, opts.bidding_override)
    })?;
    timed("monotonicity", &mut || {
        monotonicity_suite(&g.lambdas, &g.js, &g.families)
    })?;
    timed("welfare", &mut || welfare_suite(&markets))?;
    timed("figures", &mut || figure_suite())?;
    timed("monte carlo", &mut || {
        monte_carlo_suite(g.mc_samples, opts.seed, opts.threads)
    })?;
    Ok(Report { checks })
}
