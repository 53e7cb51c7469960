//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! runtime; the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use admarket::dist::{DistSpec, ValueDistribution};
use admarket::equilibria::{self, MarketConfig};
use admarket::mcsim::{self, SimSettings, Verdict};
use admarket::quad::{self, QuadratureSettings};
use admarket::sweep::{self, SweepSpec};
use admarket::welfare::{self, Mechanism, MechanismPrices};

type Outcome = Result<String, String>;
/// (id, name, runtime budget, check)
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

const LAMBDAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const FIRMS: [u32; 4] = [2, 3, 5, 7];
const SLACK: f64 = 1e-7;
/// Fixed before any run; never tuned.
const MC_SEED: u64 = 0x00AD_5EED;

fn families() -> [ValueDistribution; 2] {
    [
        ValueDistribution::Uniform,
        ValueDistribution::power(0.75).unwrap(),
    ]
}

fn test_grid() -> Vec<MarketConfig> {
    let mut out = Vec::new();
    for &l in &LAMBDAS {
        for &j in &FIRMS {
            for d in families() {
                out.push(MarketConfig::new(l, j, d).unwrap());
            }
        }
    }
    out
}

fn tag(c: &MarketConfig) -> String {
    format!("lambda={} J={} {}", c.lambda(), c.j(), c.dist().label())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{name} = {got:.12}, expected {want:.12} ± {tol:e}")
    })
}

fn uniform(lambda: f64, j: u32) -> MarketConfig {
    MarketConfig::new(lambda, j, ValueDistribution::Uniform).unwrap()
}

fn c1_monopoly_price() -> Outcome {
    let p = equilibria::solve_monopoly_price(&uniform(0.5, 2))
        .map_err(err)?
        .price;
    close("p_M", p, 0.5, 1e-9)?;
    Ok(format!("p_M = {p}"))
}

/// Root of 5p − 2p³ = 2 in (0, 1) by Newton's method from p = 0.5.
fn cubic_root() -> f64 {
    let mut p = 0.5f64;
    for _ in 0..50 {
        p -= (5.0 * p - 2.0 * p.powi(3) - 2.0) / (5.0 - 6.0 * p * p);
    }
    p
}

fn c2_independent_examples() -> Outcome {
    let c2 = uniform(0.5, 2);
    let pc2 = equilibria::solve_candidate_price(&c2).map_err(err)?.price;
    close("p_C (J=2)", pc2, 0.585786, 1e-6)?;
    let c3 = uniform(0.5, 3);
    let pc3 = equilibria::solve_candidate_price(&c3).map_err(err)?.price;
    let root = cubic_root();
    close("p_C (J=3)", pc3, root, 1e-3)?;
    let pi3 = equilibria::solve_independent_price(&c3).map_err(err)?.price;
    close("p_I (J=3)", pi3, 0.5, 1e-9)?;
    Ok(format!(
        "p_C(J=2) = {pc2:.9}, p_C(J=3) = {pc3:.9} (cubic root {root:.9}), p_I(J=3) = {pi3}"
    ))
}

fn c3_closed_forms() -> Outcome {
    let c = uniform(0.5, 2);
    let pb = equilibria::solve_bidding_price(&c).map_err(err)?.price;
    let pv = equilibria::solve_best_value_price(&c).map_err(err)?.price;
    let pp = equilibria::solve_privacy_price(&c).map_err(err)?.price;
    close("p_B", pb, 2.0 - 2f64.sqrt(), 1e-6)?;
    close("p_V", pv, 3f64.sqrt() - 1.0, 1e-6)?;
    close("p_P", pp, (7f64.sqrt() - 1.0) / 3.0, 1e-6)?;
    Ok(format!("p_B = {pb:.9}, p_V = {pv:.9}, p_P = {pp:.9}"))
}

fn c4_omega_casework() -> Outcome {
    let s = QuadratureSettings::default();
    let pts: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let mut worst = 0.0f64;
    for d in families() {
        for j in [2, 3, 5] {
            for &p in &pts {
                let simple = quad::omega(p, 0.0, &d, j, &s).map_err(err)?;
                for &q in &pts {
                    let cw = quad::omega_casework(p, q, &d, j, &s).map_err(err)?;
                    worst = worst.max((cw - simple).abs());
                }
            }
        }
    }
    ensure(worst < 1e-7, || {
        format!("max |casework − omega| = {worst:e}")
    })?;
    Ok(format!(
        "max |casework − omega| = {worst:.2e} over 2646 points"
    ))
}

fn c5_omega_derivative() -> Outcome {
    let s = QuadratureSettings::default();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for d in families() {
        for j in [2, 3, 5] {
            for k in 1..=19 {
                let p = k as f64 / 20.0;
                let up = quad::omega(p + h, 0.0, &d, j, &s).map_err(err)?;
                let down = quad::omega(p - h, 0.0, &d, j, &s).map_err(err)?;
                let exact = quad::omega_deriv(p, &d, j, &s).map_err(err)?;
                worst = worst.max((exact - (up - down) / (2.0 * h)).abs());
            }
        }
    }
    ensure(worst < 1e-4, || format!("max derivative error {worst:e}"))?;
    Ok(format!(
        "max |omega_deriv − central difference| = {worst:.2e}"
    ))
}

fn c6_ordering() -> Outcome {
    let mut cases = 0;
    for c in test_grid() {
        let t = tag(&c);
        let pm = equilibria::solve_monopoly_price(&c).map_err(err)?.price;
        let pb = equilibria::solve_bidding_price(&c).map_err(err)?.price;
        let pv = equilibria::solve_best_value_price(&c).map_err(err)?.price;
        let pi = equilibria::solve_independent_price(&c).map_err(err)?.price;
        let pp = equilibria::solve_privacy_price(&c).map_err(err)?.price;
        ensure(pm <= pb + SLACK && pb <= pv + SLACK, || {
            format!("{t}: p_M={pm} p_B={pb} p_V={pv}")
        })?;
        ensure(pi <= pv + SLACK, || format!("{t}: p_I={pi} p_V={pv}"))?;
        ensure(pm < pp && pp < pv, || {
            format!("{t}: p_M={pm} p_P={pp} p_V={pv}")
        })?;
        if matches!(c.dist(), ValueDistribution::Uniform) && c.j() >= 4 {
            ensure((pi - pm).abs() <= SLACK, || {
                format!("{t}: p_I={pi} differs from p_M={pm}")
            })?;
        }
        cases += 1;
    }
    Ok(format!("{cases} markets"))
}

struct BiddingPoint {
    p: f64,
    cs_off: f64,
    cs_on: f64,
    profit_off: f64,
    profit_on: f64,
    revenue: f64,
    welfare_off: f64,
}

fn bidding_point(c: &MarketConfig) -> Result<BiddingPoint, String> {
    let p = equilibria::solve_bidding_price(c).map_err(err)?.price;
    let (d, j) = (c.dist(), c.j());
    Ok(BiddingPoint {
        p,
        cs_off: welfare::cs_off(p, d).map_err(err)?,
        cs_on: welfare::cs_on(p, d, j).map_err(err)?,
        profit_off: welfare::profit_off(p, d).map_err(err)?,
        profit_on: welfare::profit_on(p, d, j).map_err(err)?,
        revenue: welfare::platform_revenue_bidding(p, c).map_err(err)?,
        welfare_off: welfare::welfare_off(p, d).map_err(err)?,
    })
}

fn c7_monotonicity() -> Outcome {
    let mut steps = 0;
    for d in families() {
        for &j in &FIRMS {
            let pts = LAMBDAS
                .iter()
                .map(|&l| bidding_point(&MarketConfig::new(l, j, d.clone()).unwrap()))
                .collect::<Result<Vec<_>, _>>()?;
            for (k, w) in pts.windows(2).enumerate() {
                let (a, b) = (&w[0], &w[1]);
                let t = format!(
                    "{} J={j} lambda {}→{}",
                    d.label(),
                    LAMBDAS[k],
                    LAMBDAS[k + 1]
                );
                ensure(b.p >= a.p - SLACK, || format!("{t}: p_B fell"))?;
                ensure(b.cs_off < a.cs_off, || format!("{t}: cs_off rose"))?;
                ensure(b.cs_on < a.cs_on, || format!("{t}: cs_on rose"))?;
                ensure(b.profit_off < a.profit_off, || {
                    format!("{t}: profit_off rose")
                })?;
                ensure(b.profit_on > a.profit_on, || format!("{t}: profit_on fell"))?;
                ensure(b.revenue > a.revenue, || format!("{t}: revenue fell"))?;
                ensure(b.welfare_off < a.welfare_off, || {
                    format!("{t}: welfare_off rose")
                })?;
                steps += 1;
            }
        }
        let pm = equilibria::solve_monopoly_price(&MarketConfig::new(0.0, 2, d.clone()).unwrap())
            .map_err(err)?
            .price;
        let threshold = -1.0 / d.cdf(1.0 - pm).map_err(err)?.ln();
        let js: Vec<u32> = (2..=10).filter(|&j| j as f64 > threshold).collect();
        for &l in &LAMBDAS {
            let prices = js
                .iter()
                .map(|&j| {
                    let c = MarketConfig::new(l, j, d.clone()).unwrap();
                    equilibria::solve_bidding_price(&c)
                        .map(|s| s.price)
                        .map_err(err)
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (k, w) in prices.windows(2).enumerate() {
                ensure(w[1] <= w[0] + SLACK, || {
                    format!(
                        "{} lambda={l}: p_B rose from J={} to J={}",
                        d.label(),
                        js[k],
                        js[k + 1]
                    )
                })?;
                steps += 1;
            }
        }
    }
    Ok(format!("{steps} grid steps"))
}

fn c8_vertical_integration() -> Outcome {
    let n = 10_000;
    let mut worst = 0.0f64;
    for c in test_grid() {
        let pv = equilibria::solve_best_value_price(&c).map_err(err)?.price;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=n {
            let p = i as f64 / n as f64;
            let ps = welfare::producer_surplus(p, p, &c).map_err(err)?;
            if ps > best.0 {
                best = (ps, p);
            }
        }
        let gap = (best.1 - pv).abs();
        worst = worst.max(gap);
        ensure(gap <= 1.0 / n as f64, || {
            format!("{}: grid argmax {} vs p_V {pv}", tag(&c), best.1)
        })?;
    }
    Ok(format!("72 markets, max |argmax − p_V| = {worst:.2e}"))
}

fn c9_revenue() -> Outcome {
    let revenue = |m: Mechanism, c: &MarketConfig| {
        welfare::mechanism_outcome(m, c).map(|o| o.platform_revenue)
    };
    let (mut above, mut below) = (0, 0);
    for c in test_grid() {
        let t = tag(&c);
        let fees = revenue(Mechanism::BiddingWithFees, &c).map_err(err)?;
        let bv = revenue(Mechanism::BestValueManaged, &c).map_err(err)?;
        let im = revenue(Mechanism::IndependentManaged, &c).map_err(err)?;
        ensure(bv >= fees - 1e-9, || {
            format!("{t}: best value {bv} < bidding with fees {fees}")
        })?;
        let pb = equilibria::solve_bidding_price(&c).map_err(err)?.price;
        let pi = equilibria::solve_independent_price(&c).map_err(err)?.price;
        if pb > pi + SLACK {
            ensure(fees >= im - 1e-9, || {
                format!("{t}: p_B > p_I but fees {fees} < independent {im}")
            })?;
            above += 1;
        } else if pb < pi - SLACK {
            ensure(fees <= im + 1e-9, || {
                format!("{t}: p_B < p_I but fees {fees} > independent {im}")
            })?;
            below += 1;
        }
        if let ValueDistribution::Power { .. } = c.dist() {
            match c.j() {
                2 => ensure(fees < im, || {
                    format!("{t}: expected independent above bidding with fees")
                })?,
                3 => ensure(fees > im, || {
                    format!("{t}: expected bidding with fees above independent")
                })?,
                _ => {}
            }
        }
    }
    ensure(above > 0 && below > 0, || {
        "both revenue orders must occur".into()
    })?;
    Ok(format!(
        "{above} markets with fees ≥ independent, {below} with fees ≤ independent; Power(0.75) switches between J=2 and J=3"
    ))
}

fn c10_monte_carlo() -> Outcome {
    let mut compared = 0;
    for j in [2, 3] {
        let c = uniform(0.5, j);
        for m in Mechanism::ALL {
            let prices = MechanismPrices::solve(m, &c).map_err(err)?;
            let analytic = welfare::assemble_outcome(m, &c, &prices).map_err(err)?;
            let sim =
                mcsim::estimate_outcome_with(m, &c, &prices, &SimSettings::new(1_000_000, MC_SEED))
                    .map_err(err)?;
            for cmp in mcsim::compare(&sim, &analytic) {
                ensure(cmp.verdict == Verdict::Pass, || {
                    format!(
                        "J={j} {m} {}: analytic {} estimate {} se {} z {:?}",
                        cmp.quantity, cmp.analytic, cmp.estimate, cmp.se, cmp.z
                    )
                })?;
                compared += 1;
            }
            if m != Mechanism::NoPlatform {
                ensure(
                    sim.on_platform_records > 0 && sim.efficiency_violations == 0,
                    || {
                        format!(
                            "J={j} {m}: {} of {} records not won by the top value",
                            sim.efficiency_violations, sim.on_platform_records
                        )
                    },
                )?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
    let draws = 100_000;
    for n in 0..draws {
        let j = rng.random_range(2..=7);
        let values: Vec<f64> = (0..j).map(|_| rng.random::<f64>()).collect();
        let posted: Vec<f64> = (0..j).map(|_| rng.random::<f64>()).collect();
        let bids = mcsim::bid_vector(&values, &posted, 0.0).map_err(err)?;
        for a in 0..j {
            for b in 0..j {
                ensure(values[a] <= values[b] || bids[a] >= bids[b], || {
                    format!("draw {n}: v={values:?} p={posted:?} b={bids:?}")
                })?;
            }
        }
    }
    Ok(format!(
        "{compared} quantities within 3 SE at n = 1e6; bid dominance on {draws} draws"
    ))
}

fn c11_figure_shapes() -> Outcome {
    let spec = SweepSpec {
        j_list: vec![3, 5, 7],
        families: vec![DistSpec::Uniform],
        mechanisms: vec![Mechanism::Bidding],
        ..SweepSpec::default()
    };
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("figure1.csv");
    sweep::emit_csv(&sweep::run_sweep(&spec).map_err(err)?, &path).map_err(err)?;
    let rows = sweep::read_csv(&path).map_err(err)?;
    for j in [3, 5, 7] {
        let prices: Vec<f64> = rows
            .iter()
            .filter(|r| r.j == j)
            .filter_map(|r| r.posted_price)
            .collect();
        ensure(prices.len() == 20, || {
            format!("J={j}: {} rows", prices.len())
        })?;
        ensure(prices.windows(2).all(|w| w[1] > w[0]), || {
            format!("J={j}: posted price not increasing")
        })?;
    }
    let cs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.j == 3)
        .map(|r| (r.lambda, r.cs_total.unwrap_or(f64::NAN)))
        .collect();
    let (k, &(at, top)) = cs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or("empty series")?;
    ensure(k > 0 && k + 1 < cs.len(), || {
        format!("total cs peaks at the grid edge lambda={at}")
    })?;
    Ok(format!("posted price increasing for J = 3, 5, 7; total cs (J=3) peaks at lambda = {at} with {top:.6}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            1,
            "monopoly price, uniform",
            Duration::from_millis(1),
            c1_monopoly_price,
        ),
        (
            2,
            "independent campaign examples",
            Duration::from_millis(100),
            c2_independent_examples,
        ),
        (
            3,
            "closed-form equilibria at lambda = 0.5, J = 2",
            Duration::from_millis(100),
            c3_closed_forms,
        ),
        (
            4,
            "omega casework equivalence",
            Duration::from_secs(30),
            c4_omega_casework,
        ),
        (
            5,
            "omega derivative",
            Duration::from_secs(5),
            c5_omega_derivative,
        ),
        (
            6,
            "price ordering suite",
            Duration::from_secs(60),
            c6_ordering,
        ),
        (
            7,
            "monotonicity suites",
            Duration::from_secs(60),
            c7_monotonicity,
        ),
        (
            8,
            "vertical integration optimality",
            Duration::from_secs(60),
            c8_vertical_integration,
        ),
        (
            9,
            "revenue comparisons",
            Duration::from_secs(30),
            c9_revenue,
        ),
        (
            10,
            "Monte Carlo agreement and bid dominance",
            Duration::from_secs(120),
            c10_monte_carlo,
        ),
        (
            11,
            "figure shapes",
            Duration::from_secs(60),
            c11_figure_shapes,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let t = Instant::now();
        let result = run();
        let elapsed = t.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (
                false,
                format!("{d}; runtime {elapsed:.2?} exceeds {budget:?}"),
            ),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name} [{elapsed:.2?}]: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
