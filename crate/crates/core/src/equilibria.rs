//! First-order conditions and equilibrium prices for each mechanism, the
//! firms' outside option, and the independent campaign's price cap.
//!
//! Every FOC crosses zero once on [0, 1] for the shipped families, so prices
//! are found by bisection on [0, 1]. Maximizations use a coarse grid followed
//! by golden-section refinement.

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};
use crate::quad::{self, integrate_order, try_integrate, QuadratureSettings};
use rayon::prelude::*;
use serde::Serialize;

/// Bisection tolerance in the price argument.
pub const ROOT_TOL: f64 = 1e-10;
pub const MAX_ITER: u32 = 200;
/// Coarse grid size for Π_O and Π_U maximization.
pub const MAX_GRID: usize = 256;
/// Grid size for the sign scan of Π_M − Π_U.
pub const CAP_GRID: usize = 1024;
const GOLDEN_TOL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MarketConfig {
    lambda: f64,
    j: u32,
    dist: ValueDistribution,
    settings: QuadratureSettings,
}

impl MarketConfig {
    pub fn new(lambda: f64, j: u32, dist: ValueDistribution) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::domain("lambda", lambda, "[0, 1)"));
        }
        quad::check_firms(j, 2)?;
        Ok(Self::unchecked(lambda, j, dist))
    }

    /// Skips validation so degenerate limits (λ = 1, J = 1) can be probed.
    pub(crate) fn unchecked(lambda: f64, j: u32, dist: ValueDistribution) -> Self {
        Self {
            lambda,
            j,
            dist,
            settings: QuadratureSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: QuadratureSettings) -> Result<Self> {
        settings.validate()?;
        self.settings = settings;
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn dist(&self) -> &ValueDistribution {
        &self.dist
    }

    pub fn settings(&self) -> &QuadratureSettings {
        &self.settings
    }

    /// Mass of each loyal segment, (1 − λ)/J.
    pub fn loyal_share(&self) -> f64 {
        (1.0 - self.lambda) / self.j as f64
    }

    fn g(&self, v: f64) -> f64 {
        self.dist.order_cdf_at(v.clamp(0.0, 1.0), self.j - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceSolution {
    pub price: f64,
    pub foc_residual: f64,
    pub iterations: u32,
    pub bracket: (f64, f64),
    /// The FOC had no interior sign change and the price came from direct
    /// maximization (or the search interval's end point).
    pub corner: bool,
    /// Price-cap only: p_C ≥ p_M, so the cap is p_C itself.
    pub cap_equals_pc: bool,
}

impl PriceSolution {
    fn exact(price: f64, foc_residual: f64) -> Self {
        Self {
            price,
            foc_residual,
            iterations: 0,
            bracket: (price, price),
            corner: false,
            cap_equals_pc: false,
        }
    }
}

fn check_price(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("price", p, "[0, 1]"))
    }
}

/// Bisection for a root of a decreasing-or-increasing `f` on [lo, hi].
///
/// Fails with [`Error::Bracket`] if `f` has the same strict sign at both ends.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64) -> Result<PriceSolution>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(PriceSolution::exact(a, 0.0));
    }
    if fb == 0.0 {
        return Ok(PriceSolution::exact(b, 0.0));
    }
    if fa.signum() == fb.signum() || !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let sa = fa.signum();
    let mut iterations = 0;
    while b - a > ROOT_TOL && iterations < MAX_ITER {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        iterations += 1;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    let price = 0.5 * (a + b);
    Ok(PriceSolution {
        price,
        foc_residual: f(price)?,
        iterations,
        bracket: (a, b),
        corner: false,
        cap_equals_pc: false,
    })
}

/// Golden-section search for a maximum of `f` on [a, b].
pub fn golden_max<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Global maximum of `f` on [lo, hi]: a `MAX_GRID`-point scan, then golden
/// section inside the best cell's neighbourhood (every near-tied cell is
/// refined). Returns (value, argmax).
pub fn grid_max<F>(mut f: F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if hi <= lo {
        return Ok((f(lo)?, lo));
    }
    let n = MAX_GRID;
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let top = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = (top, xs[ys.iter().position(|&y| y == top).unwrap_or(0)]);
    for (i, &y) in ys.iter().enumerate() {
        if top - y > TIE_TOL {
            continue;
        }
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(n - 1)];
        let (x, fx) = golden_max(&mut f, a, b, GOLDEN_TOL)?;
        if fx > best.0 {
            best = (fx, x);
        }
    }
    Ok(best)
}

/// Maximizes an objective whose derivative is `foc`, by golden section on
/// the antiderivative. Used when the FOC has no sign change on [0, 1].
fn maximize_antiderivative<F>(mut foc: F, s: &QuadratureSettings) -> Result<PriceSolution>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = foc(0.0)?;
    let f1 = foc(1.0)?;
    let mut objective = |p: f64| try_integrate(&mut foc, 0.0, p, &[], s);
    let (_, price) = grid_max(&mut objective, 0.0, 1.0)?;
    log::warn!(
        "FOC has no sign change on [0, 1] (f(0) = {f0}, f(1) = {f1}); price {price} from direct maximization"
    );
    Ok(PriceSolution {
        price,
        foc_residual: foc(price)?,
        iterations: 0,
        bracket: (0.0, 1.0),
        corner: true,
        cap_equals_pc: false,
    })
}

/// Bisects on a strict sign change over [0, 1], otherwise maximizes the
/// antiderivative directly.
pub fn solve_foc<F>(mut foc: F, s: &QuadratureSettings) -> Result<PriceSolution>
where
    F: FnMut(f64) -> Result<f64>,
{
    // A FOC that merely touches zero at an end point (pdf vanishing at 1) is
    // not trusted as a root; direct maximization decides.
    let (f0, f1) = (foc(0.0)?, foc(1.0)?);
    if f0 * f1 < 0.0 {
        bisect(foc, 0.0, 1.0)
    } else {
        maximize_antiderivative(foc, s)
    }
}

/// 1 − F(p) − p f(p).
fn monopoly_term(p: f64, d: &ValueDistribution) -> f64 {
    1.0 - d.cdf_at(p) - d.v_pdf_at(p)
}

pub fn foc_monopoly(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    Ok(monopoly_term(p, &c.dist))
}

/// ((1−λ)/J)(1−F(p)−p f(p)) + λ ∫_p F^{J−1}(v−p) dF(v).
pub fn foc_bidding(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    let on = if c.lambda > 0.0 {
        quad::omega_deriv(p, &c.dist, c.j, &c.settings)?
    } else {
        0.0
    };
    Ok(c.loyal_share() * monopoly_term(p, &c.dist) + c.lambda * on)
}

/// ((1−λ)/J)(1−F(p)−p f(p)) + λ ∫_p F^{J−1}(v) dF(v).
pub fn foc_best_value(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    let on = if c.lambda > 0.0 {
        integrate_order(|v| Ok(c.g(v)), &c.dist, 1, p, 1.0, &[], &c.settings)?
    } else {
        0.0
    };
    Ok(c.loyal_share() * monopoly_term(p, &c.dist) + c.lambda * on)
}

/// ((1−λ)/J)(1−F(p)−p f(p)) + λ ∫_p (F^{J−1}(v) − p (J−1) F^{J−2}(v) f(v)) dF(v).
pub fn foc_candidate(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    let on = if c.lambda > 0.0 {
        let m = c.j - 1;
        let d = &c.dist;
        let mass = integrate_order(|v| Ok(c.g(v)), d, 1, p, 1.0, &[], &c.settings)?;
        if p == 0.0 {
            // The density term enters multiplied by p; for small a it also
            // diverges at 0, so it is never evaluated there.
            return Ok(c.loyal_share() * monopoly_term(p, &c.dist) + c.lambda * mass);
        }
        // ∫_p (J−1) F^{J−2} f² dv under v = t², which turns the v^{−1/2}
        // endpoint singularity of Power(a) at J = 2, a = 3/4 into a constant.
        let mf = m as f64;
        let density = try_integrate(
            |t| {
                let v = t * t;
                let f = d.pdf_at(v);
                Ok(mf * d.order_cdf_at(v, m - 1) * f * f * 2.0 * t)
            },
            p.sqrt(),
            1.0,
            &[],
            &c.settings,
        )?;
        mass - p * density
    } else {
        0.0
    };
    Ok(c.loyal_share() * monopoly_term(p, &c.dist) + c.lambda * on)
}

/// 1 − F^J(p) − J p F^{J−1}(p) f(p).
fn pdagger_term(p: f64, d: &ValueDistribution, j: u32) -> f64 {
    1.0 - d.order_cdf_at(p, j) - j as f64 * d.order_cdf_at(p, j - 1) * d.v_pdf_at(p)
}

/// (1−λ)(1−F(p)−p f(p)) + λ(1 − F^J(p) − J p F^{J−1}(p) f(p)).
pub fn foc_privacy(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    Ok((1.0 - c.lambda) * monopoly_term(p, &c.dist) + c.lambda * pdagger_term(p, &c.dist, c.j))
}

pub fn foc_pdagger(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    Ok(pdagger_term(p, &c.dist, c.j))
}

pub fn solve_monopoly_price(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_monopoly(p, c), &c.settings)
}

pub fn solve_bidding_price(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_bidding(p, c), &c.settings)
}

pub fn solve_best_value_price(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_best_value(p, c), &c.settings)
}

pub fn solve_candidate_price(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_candidate(p, c), &c.settings)
}

/// p_I = max(p_C, p_M).
pub fn solve_independent_price(c: &MarketConfig) -> Result<PriceSolution> {
    let pc = solve_candidate_price(c)?;
    let pm = solve_monopoly_price(c)?;
    Ok(if pc.price >= pm.price { pc } else { pm })
}

pub fn solve_privacy_price(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_privacy(p, c), &c.settings)
}

pub fn solve_pdagger(c: &MarketConfig) -> Result<PriceSolution> {
    solve_foc(|p| foc_pdagger(p, c), &c.settings)
}

/// Firm profit when it deviates to price p and the platform prices every
/// steered offer at zero: ((1−λ)/J) p (1−F(p)) + λ p ∫_p F^{J−1}(v−p) dF(v).
pub fn outside_objective(p: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    let on = if c.lambda > 0.0 {
        p * quad::omega_deriv(p, &c.dist, c.j, &c.settings)?
    } else {
        0.0
    };
    Ok(c.loyal_share() * p * (1.0 - c.dist.cdf_at(p)) + c.lambda * on)
}

/// Π_O and its maximizing price.
pub fn outside_option(c: &MarketConfig) -> Result<(f64, f64)> {
    grid_max(|p| outside_objective(p, c), 0.0, 1.0)
}

/// ∫ min(v, cap) F^{J−1}(v) dF(v).
pub(crate) fn capped_mean(cap: f64, c: &MarketConfig) -> Result<f64> {
    integrate_order(
        |v| Ok(v.min(cap) * c.g(v)),
        &c.dist,
        1,
        0.0,
        1.0,
        &[cap],
        &c.settings,
    )
}

/// ∫_0^p v G(v) dF(v), in closed form for the power family (Uniform is a = 1).
fn truncated_mean(p: f64, c: &MarketConfig) -> Result<f64> {
    let a = match c.dist {
        ValueDistribution::Uniform => 1.0,
        ValueDistribution::Power { a } => a,
        ValueDistribution::Custom(_) => {
            return integrate_order(|v| Ok(v * c.g(v)), &c.dist, 1, 0.0, p, &[], &c.settings)
        }
    };
    let e = a * c.j as f64 + 1.0;
    Ok(a / e * p.powf(e))
}

/// ∫_p^1 G(min(v + p̂ − p, 1)) dF(v).
fn shifted_tail(p: f64, p_hat: f64, c: &MarketConfig) -> Result<f64> {
    let shift = p_hat - p;
    if let ValueDistribution::Uniform = c.dist {
        let j = c.j as i32;
        return Ok((1.0 - p_hat.powi(j)) / c.j as f64 + shift);
    }
    // The integrand is identically 1 above v = 1 − (p̂ − p).
    let kink = (1.0 - shift).max(p);
    let d = &c.dist;
    Ok(
        integrate_order(|v| Ok(c.g(v + shift)), d, 1, p, kink, &[], &c.settings)? + 1.0
            - d.cdf_at(kink),
    )
}

/// Profit from undercutting a cap p̂ with posted price p ≤ p̂.
pub fn undercut_objective(p: f64, p_hat: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p)?;
    check_price(p_hat)?;
    if p > p_hat {
        return Err(Error::InvalidConfig(format!(
            "undercut price {p} exceeds the cap {p_hat}"
        )));
    }
    let loyal = c.loyal_share() * p * (1.0 - c.dist.cdf_at(p));
    if c.lambda == 0.0 {
        return Ok(loyal);
    }
    Ok(loyal + c.lambda * (truncated_mean(p, c)? + p * shifted_tail(p, p_hat, c)?))
}

/// Π_U(p̂) and the maximizing undercut price.
pub fn undercut_profit(p_hat: f64, c: &MarketConfig) -> Result<(f64, f64)> {
    check_price(p_hat)?;
    grid_max(|p| undercut_objective(p, p_hat, c), 0.0, p_hat)
}

/// Π_M(p̂) = ((1−λ)/J) p_M (1−F(p_M)) + λ ∫ min(v, p̂) F^{J−1}(v) dF(v).
pub fn loyal_profit_at_cap(p_hat: f64, c: &MarketConfig) -> Result<f64> {
    check_price(p_hat)?;
    let pm = solve_monopoly_price(c)?.price;
    loyal_profit_with(p_hat, pm, c)
}

fn loyal_profit_with(p_hat: f64, pm: f64, c: &MarketConfig) -> Result<f64> {
    let on = if c.lambda > 0.0 {
        capped_mean(p_hat, c)?
    } else {
        0.0
    };
    Ok(c.loyal_share() * pm * (1.0 - c.dist.cdf_at(pm)) + c.lambda * on)
}

/// Largest p* ∈ [p_C, p_M] with Π_M(p*) ≥ Π_U(p*).
pub fn solve_price_cap(c: &MarketConfig) -> Result<PriceSolution> {
    let pc = solve_candidate_price(c)?.price;
    let pm = solve_monopoly_price(c)?.price;
    price_cap_between(pc, pm, c)
}

pub(crate) fn price_cap_between(pc: f64, pm: f64, c: &MarketConfig) -> Result<PriceSolution> {
    if pc >= pm {
        return Ok(PriceSolution {
            cap_equals_pc: true,
            ..PriceSolution::exact(pc, 0.0)
        });
    }
    let gap =
        |p: f64| -> Result<f64> { Ok(loyal_profit_with(p, pm, c)? - undercut_profit(p, c)?.0) };
    let n = CAP_GRID;
    let step = (pm - pc) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { pm } else { pc + step * i as f64 })
        .collect();
    let ys = xs.par_iter().map(|&x| gap(x)).collect::<Result<Vec<_>>>()?;
    let crossings = ys
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    if crossings > 1 {
        log::warn!(
            "Π_M − Π_U changes sign {crossings} times on [{pc}, {pm}]; using the largest crossing"
        );
    }
    let Some(last) = ys.iter().rposition(|&y| y >= 0.0) else {
        log::warn!("Π_M < Π_U on all of [{pc}, {pm}]; cap falls back to p_C");
        return Ok(PriceSolution {
            corner: true,
            ..PriceSolution::exact(pc, ys[0])
        });
    };
    if last + 1 == n {
        return Ok(PriceSolution {
            corner: true,
            ..PriceSolution::exact(pm, ys[last])
        });
    }
    bisect(gap, xs[last], xs[last + 1])
}

/// Every equilibrium price for one market, solved once.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriceBook {
    pub monopoly: PriceSolution,
    pub bidding: PriceSolution,
    pub best_value: PriceSolution,
    pub candidate: PriceSolution,
    pub independent: PriceSolution,
    pub privacy: PriceSolution,
    /// Cap on on-platform prices in the independent campaign (p_C or p*).
    pub cap: PriceSolution,
    pub outside_profit: f64,
    pub outside_price: f64,
}

impl PriceBook {
    pub fn solve(c: &MarketConfig) -> Result<Self> {
        let monopoly = solve_monopoly_price(c)?;
        let candidate = solve_candidate_price(c)?;
        let independent = if candidate.price >= monopoly.price {
            candidate.clone()
        } else {
            monopoly.clone()
        };
        let cap = price_cap_between(candidate.price, monopoly.price, c)?;
        let (outside_profit, outside_price) = outside_option(c)?;
        Ok(Self {
            bidding: solve_bidding_price(c)?,
            best_value: solve_best_value_price(c)?,
            privacy: solve_privacy_price(c)?,
            monopoly,
            candidate,
            independent,
            cap,
            outside_profit,
            outside_price,
        })
    }
}
