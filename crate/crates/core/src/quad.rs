//! Adaptive Gauss–Legendre quadrature on subintervals of [0, 1] and the
//! on-platform bidding profit Ω(p; p').
//!
//! Every integral against a value law goes through [`integrate_order`], which
//! integrates against dF^m. Kinks whose location is known in closed form are
//! passed in as break points so each panel sees a smooth integrand; adaptive
//! bisection only cleans up what remains.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::dist::ValueDistribution;
use crate::error::{Error, Result};

/// Hard cap on live panels per integral, independent of `max_depth`.
const MAX_PANELS: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Gauss–Legendre points per panel.
    pub base_nodes: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            max_depth: 30,
            base_nodes: 15,
        }
    }
}

impl QuadratureSettings {
    pub fn new(abs_tol: f64, max_depth: u32, base_nodes: usize) -> Result<Self> {
        let s = Self {
            abs_tol,
            max_depth,
            base_nodes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_tol(abs_tol: f64) -> Result<Self> {
        Self::new(
            abs_tol,
            Self::default().max_depth,
            Self::default().base_nodes,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol", self.abs_tol, "(0, inf)"));
        }
        if self.max_depth < 1 {
            return Err(Error::domain(
                "max_depth",
                self.max_depth as f64,
                "[1, inf)",
            ));
        }
        if self.base_nodes < 2 {
            return Err(Error::domain(
                "base_nodes",
                self.base_nodes as f64,
                "[2, inf)",
            ));
        }
        Ok(())
    }

    /// Settings for the inner integral of an iterated double integral.
    pub(crate) fn inner(&self) -> Self {
        Self {
            abs_tol: self.abs_tol * 1e-2,
            ..*self
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug)]
struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Three-term recurrence for P_n(x) and P_{n-1}(x).
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    fn apply<F>(&self, f: &mut F, a: f64, b: f64) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let y = f(mid + half * x)?;
            if !y.is_finite() {
                return Err(Error::domain("integrand value", y, "finite reals"));
            }
            acc += w * y;
        }
        Ok(acc * half)
    }
}

fn rule(n: usize) -> Arc<Rule> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Rule::new(n)))
        .clone()
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
    depth: u32,
}

impl Panel {
    fn build<F>(f: &mut F, r: &Rule, a: f64, b: f64, coarse: f64, depth: u32) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let m = 0.5 * (a + b);
        let left = r.apply(f, a, m)?;
        let right = r.apply(f, m, b)?;
        Ok(Self {
            a,
            b,
            left,
            right,
            err: (coarse - left - right).abs(),
            depth,
        })
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Global adaptive quadrature over the panels delimited by `points`
/// (sorted, at least two entries). The panel with the largest error estimate
/// is bisected until the summed estimate drops below `abs_tol`.
fn adaptive<F>(mut f: F, points: &[f64], s: &QuadratureSettings) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    s.validate()?;
    let r = rule(s.base_nodes);
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            let coarse = r.apply(&mut f, a, b)?;
            heap.push(Panel::build(&mut f, &r, a, b, coarse, 0)?);
        }
    }
    let mut frozen: Vec<Panel> = Vec::new();
    loop {
        let total_err: f64 = heap.iter().chain(&frozen).map(|p| p.err).sum();
        let total: f64 = heap.iter().chain(&frozen).map(Panel::value).sum();
        let tol = s.abs_tol.max(4.0 * f64::EPSILON * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        let mut budget = total_err - tol;
        let mut progressed = false;
        while budget > 0.0 {
            let Some(p) = heap.pop() else { break };
            if p.depth >= s.max_depth || heap.len() + frozen.len() >= MAX_PANELS {
                frozen.push(p);
                continue;
            }
            let m = 0.5 * (p.a + p.b);
            let l = Panel::build(&mut f, &r, p.a, m, p.left, p.depth + 1)?;
            let rt = Panel::build(&mut f, &r, m, p.b, p.right, p.depth + 1)?;
            budget -= p.err - l.err - rt.err;
            heap.push(l);
            heap.push(rt);
            progressed = true;
            // Re-sum periodically rather than trusting the running budget.
            if heap.len() % 64 == 0 {
                break;
            }
        }
        if !progressed && heap.is_empty() {
            return Err(Error::Tolerance {
                estimate: total,
                error_bound: total_err,
            });
        }
    }
}

fn panel_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidConfig(format!(
            "integration interval [{a}, {b}] must be finite with a <= b"
        )));
    }
    Ok(())
}

/// ∫_a^b f, to within `s.abs_tol` for piecewise-smooth `f`.
///
/// The integrand is never evaluated at `a` or `b`.
pub fn integrate<F>(f: F, a: f64, b: f64, s: &QuadratureSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, &[], s)
}

/// Like [`integrate`] for a fallible integrand, with known kink locations
/// `breaks` (entries outside (a, b) are ignored).
pub fn try_integrate<F>(f: F, a: f64, b: f64, breaks: &[f64], s: &QuadratureSettings) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_interval(a, b)?;
    if a == b {
        return Ok(0.0);
    }
    adaptive(f, &panel_points(a, b, breaks), s)
}

/// ∫_a^b g(v) dF^m(v) for 0 <= a <= b <= 1.
///
/// When the density of F^m is unbounded at 0 the integral is taken in
/// probability space, u = F^m(v), where the integrand is bounded.
pub fn integrate_order<G>(
    mut g: G,
    d: &ValueDistribution,
    m: u32,
    a: f64,
    b: f64,
    breaks: &[f64],
    s: &QuadratureSettings,
) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    check_interval(a, b)?;
    if m == 0 || a == b {
        return Ok(0.0);
    }
    if d.singular_order_density(m) {
        let to_u = |v: f64| d.order_cdf_at(v.clamp(0.0, 1.0), m);
        let inv_m = 1.0 / m as f64;
        let to_v = |u: f64| match d {
            ValueDistribution::Power { a } => u.powf(inv_m / a),
            _ => d.quantile_at(u.powf(inv_m)),
        };
        let ub: Vec<f64> = breaks.iter().map(|&x| to_u(x)).collect();
        try_integrate(|u| g(to_v(u)), to_u(a), to_u(b), &ub, s)
    } else {
        try_integrate(|v| Ok(g(v)? * d.order_pdf_at(v, m)), a, b, breaks, s)
    }
}

fn check_price(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("price", p, "[0, 1]"))
    }
}

pub(crate) fn check_firms(j: u32, min: u32) -> Result<()> {
    if j >= min {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "number of firms J = {j} must be at least {min}"
        )))
    }
}

/// Ω(p; p') = ∫∫_{v' < v} min(v − v', p) dF^{J−1}(v') dF(v).
///
/// The simplified form does not depend on the competitors' price; `_p_other`
/// keeps the signature aligned with [`omega_casework`].
pub fn omega(
    p: f64,
    _p_other: f64,
    d: &ValueDistribution,
    j: u32,
    s: &QuadratureSettings,
) -> Result<f64> {
    check_price(p)?;
    check_firms(j, 2)?;
    let inner = s.inner();
    let m = j - 1;
    integrate_order(
        |v| {
            if v <= p {
                integrate_order(|w| Ok(v - w), d, m, 0.0, v, &[], &inner)
            } else {
                integrate_order(|w| Ok((v - w).min(p)), d, m, 0.0, v, &[v - p], &inner)
            }
        },
        d,
        1,
        0.0,
        1.0,
        &[p],
        s,
    )
}

/// Ω(p; p') from the raw bidding casework: the firm's sponsored price net of
/// the concession to the best rival, minus the best rival's bid.
pub fn omega_casework(
    p: f64,
    p_other: f64,
    d: &ValueDistribution,
    j: u32,
    s: &QuadratureSettings,
) -> Result<f64> {
    check_price(p)?;
    check_price(p_other)?;
    check_firms(j, 2)?;
    let q = p_other;
    let inner = s.inner();
    let m = j - 1;
    integrate_order(
        |v| {
            let excess = (v - p).max(0.0);
            let own_bid = |w: f64| (v - (w - q).max(0.0)).min(p);
            let rival_bid = |w: f64| (w - excess).min(q).max(0.0);
            integrate_order(
                |w| Ok(own_bid(w) - rival_bid(w)),
                d,
                m,
                0.0,
                v,
                &[q, v - p, q + v - p, excess, q + excess],
                &inner,
            )
        },
        d,
        1,
        0.0,
        1.0,
        &[p, q, p - q, p + q],
        s,
    )
}

/// ∂Ω/∂p = ∫_p^1 F^{J−1}(v − p) dF(v).
pub fn omega_deriv(p: f64, d: &ValueDistribution, j: u32, s: &QuadratureSettings) -> Result<f64> {
    check_price(p)?;
    check_firms(j, 2)?;
    integrate_order(
        |v| Ok(d.order_cdf_at((v - p).max(0.0), j - 1)),
        d,
        1,
        p,
        1.0,
        &[],
        s,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    fn p075() -> ValueDistribution {
        ValueDistribution::power(0.75).unwrap()
    }

    #[test]
    fn gauss_legendre_rule_is_exact_for_polynomials() {
        let r = Rule::new(15);
        let w: f64 = r.weights.iter().sum();
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-14);
        // Exact through degree 29.
        let mut f = |x: f64| Ok(x.powi(28));
        assert_abs_diff_eq!(
            r.apply(&mut f, -1.0, 1.0).unwrap(),
            2.0 / 29.0,
            epsilon = 1e-14
        );
        assert!(r.nodes.iter().all(|x| x.abs() < 1.0));
    }

    #[test]
    fn integrate_examples() {
        assert_abs_diff_eq!(
            integrate(|v| v, 0.0, 1.0, &s()).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            integrate(|v| v * v, 0.5, 1.0, &s()).unwrap(),
            7.0 / 24.0,
            epsilon = 1e-12
        );
        // Unbounded at the left endpoint; nodes never touch 0.
        let got = integrate(|v| 0.75 * v.powf(-0.25), 0.0, 1.0, &s()).unwrap();
        assert!((got - 1.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn integrate_errors() {
        assert!(integrate(|v| v, 1.0, 0.0, &s()).is_err());
        assert_eq!(integrate(|v| v, 0.3, 0.3, &s()).unwrap(), 0.0);
        let tight = QuadratureSettings::new(1e-14, 2, 15).unwrap();
        match integrate(|v| v.sqrt(), 0.0, 1.0, &tight) {
            Err(Error::Tolerance { estimate, .. }) => assert!((estimate - 2.0 / 3.0).abs() < 1e-4),
            other => panic!("expected tolerance error, got {other:?}"),
        }
        assert!(QuadratureSettings::new(0.0, 30, 15).is_err());
        assert!(QuadratureSettings::new(1e-9, 0, 15).is_err());
    }

    #[test]
    fn breaks_make_kinks_exact() {
        let f = |v: f64| (v - 0.3).abs();
        let got = try_integrate(|v| Ok(f(v)), 0.0, 1.0, &[0.3, 7.0, -1.0], &s()).unwrap();
        assert_abs_diff_eq!(got, 0.5 * (0.09 + 0.49), epsilon = 1e-14);
    }

    #[test]
    fn order_integrals_match_closed_forms() {
        // ∫ v dF^J = aJ / (aJ + 1) for Power(a).
        for (d, a) in [(ValueDistribution::Uniform, 1.0), (p075(), 0.75)] {
            for m in 1..=4u32 {
                let got = integrate_order(Ok, &d, m, 0.0, 1.0, &[], &s()).unwrap();
                let am = a * m as f64;
                assert_abs_diff_eq!(got, am / (am + 1.0), epsilon = 1e-9);
            }
        }
        let zero = integrate_order(Ok, &p075(), 0, 0.0, 1.0, &[], &s()).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn omega_examples() {
        let u = ValueDistribution::Uniform;
        assert_abs_diff_eq!(
            omega(1.0, 0.0, &u, 2, &s()).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(omega(0.0, 0.5, &u, 2, &s()).unwrap(), 0.0, epsilon = 1e-12);
        // ∫_0^.5 v²/2 dv + ∫_.5^1 (0.5 v − 0.125) dv = 7/48
        assert_abs_diff_eq!(
            omega(0.5, 0.5, &u, 2, &s()).unwrap(),
            7.0 / 48.0,
            epsilon = 1e-10
        );
        assert!(omega(1.2, 0.5, &u, 2, &s()).is_err());
        assert!(omega(0.5, 0.5, &u, 1, &s()).is_err());
    }

    #[test]
    fn casework_examples() {
        let u = ValueDistribution::Uniform;
        assert_abs_diff_eq!(
            omega_casework(0.5, 0.5, &u, 2, &s()).unwrap(),
            7.0 / 48.0,
            epsilon = 1e-9
        );
        for (p, q) in [(0.3, 0.8), (0.8, 0.3)] {
            let a = omega_casework(p, q, &u, 2, &s()).unwrap();
            let b = omega(p, q, &u, 2, &s()).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn omega_deriv_examples() {
        let u = ValueDistribution::Uniform;
        assert_abs_diff_eq!(omega_deriv(0.0, &u, 2, &s()).unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(omega_deriv(1.0, &p075(), 3, &s()).unwrap(), 0.0);
        assert_abs_diff_eq!(
            omega_deriv(0.5, &u, 2, &s()).unwrap(),
            0.125,
            epsilon = 1e-12
        );
    }

    #[test]
    fn omega_is_monotone_and_concave() {
        for d in [ValueDistribution::Uniform, p075()] {
            for j in [2, 3] {
                let n = 60;
                let vals: Vec<f64> = (0..=n)
                    .map(|i| omega(i as f64 / n as f64, 0.5, &d, j, &s()).unwrap())
                    .collect();
                for w in vals.windows(2) {
                    assert!(w[1] >= w[0] - 1e-10);
                }
                for w in vals.windows(3) {
                    assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-8, "{}", d.label());
                }
            }
        }
    }
}
