//! Consumer value distributions on [0, 1].
//!
//! Values are i.i.d. across consumers and firms. Two families ship
//! ([`ValueDistribution::Uniform`] and [`ValueDistribution::Power`]); anything
//! else can be plugged in through [`ValueLaw`].

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A user-supplied value law on [0, 1].
///
/// Only `cdf` and `pdf` are required. The default `quantile` inverts the cdf by
/// bisection, which is slow but adequate for the solvers. Log-concavity is not
/// enforced; [`ValueDistribution::custom`] only warns.
pub trait ValueLaw: Send + Sync + fmt::Debug {
    fn cdf(&self, v: f64) -> f64;
    fn pdf(&self, v: f64) -> f64;

    fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Short name used in reports.
    fn label(&self) -> String {
        "custom".to_string()
    }
}

#[derive(Clone, Debug)]
pub enum ValueDistribution {
    /// F(v) = v.
    Uniform,
    /// F(v) = v^a with a > 0. Build with [`ValueDistribution::power`].
    Power {
        a: f64,
    },
    Custom(Arc<dyn ValueLaw>),
}

impl PartialEq for ValueDistribution {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Uniform, Self::Uniform) => true,
            (Self::Power { a }, Self::Power { a: b }) => a == b,
            (Self::Custom(x), Self::Custom(y)) => Arc::ptr_eq(x, y),
            _ => false,
        }
    }
}

fn check_unit(what: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::domain(what, v, "[0, 1]"))
    }
}

impl ValueDistribution {
    pub fn power(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(Self::Power { a })
        } else {
            Err(Error::domain("power exponent a", a, "(0, inf)"))
        }
    }

    /// Wraps a user law. Rejects laws that are not distributions on [0, 1];
    /// a failed log-concavity check only produces a warning.
    pub fn custom(law: Arc<dyn ValueLaw>) -> Result<Self> {
        let (c0, c1) = (law.cdf(0.0), law.cdf(1.0));
        if c0.abs() > 1e-12 || (c1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "custom law must satisfy F(0) = 0 and F(1) = 1, got {c0} and {c1}"
            )));
        }
        let d = Self::Custom(law);
        if !d.is_log_concave() {
            log::warn!("value law {} failed the log-concavity check", d.label());
        }
        Ok(d)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Uniform => "uniform".to_string(),
            Self::Power { a } => format!("power({a})"),
            Self::Custom(law) => law.label(),
        }
    }

    pub fn cdf(&self, v: f64) -> Result<f64> {
        check_unit("value", v)?;
        Ok(self.cdf_at(v))
    }

    /// Density. For `Power(a < 1)` the density at 0 is `+inf`.
    pub fn pdf(&self, v: f64) -> Result<f64> {
        check_unit("value", v)?;
        Ok(self.pdf_at(v))
    }

    /// Cdf of the maximum of `m` independent draws, F(v)^m. `m = 0` gives 1.
    pub fn top_order_cdf(&self, v: f64, m: u32) -> Result<f64> {
        check_unit("value", v)?;
        Ok(self.order_cdf_at(v, m))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_unit("probability", u)?;
        Ok(self.quantile_at(u))
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_at(rng.random::<f64>())
    }

    pub(crate) fn cdf_at(&self, v: f64) -> f64 {
        match self {
            Self::Uniform => v,
            Self::Power { a } => v.powf(*a),
            Self::Custom(law) => law.cdf(v),
        }
    }

    pub(crate) fn pdf_at(&self, v: f64) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Power { a } => {
                if v == 0.0 {
                    if *a < 1.0 {
                        f64::INFINITY
                    } else if *a == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    a * v.powf(a - 1.0)
                }
            }
            Self::Custom(law) => law.pdf(v),
        }
    }

    /// v * f(v), with the 0 * inf case at v = 0 resolved to 0.
    pub(crate) fn v_pdf_at(&self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            v * self.pdf_at(v)
        }
    }

    pub(crate) fn order_cdf_at(&self, v: f64, m: u32) -> f64 {
        match m {
            0 => 1.0,
            1 => self.cdf_at(v),
            _ => match self {
                Self::Power { a } => v.powf(a * m as f64),
                _ => self.cdf_at(v).powi(m as i32),
            },
        }
    }

    /// Density of F^m, that is m F^{m-1} f. Zero for m = 0.
    pub(crate) fn order_pdf_at(&self, v: f64, m: u32) -> f64 {
        match m {
            0 => 0.0,
            1 => self.pdf_at(v),
            _ => m as f64 * self.order_cdf_at(v, m - 1) * self.pdf_at(v),
        }
    }

    pub(crate) fn quantile_at(&self, u: f64) -> f64 {
        match self {
            Self::Uniform => u,
            Self::Power { a } => u.powf(1.0 / a),
            Self::Custom(law) => law.quantile(u),
        }
    }

    /// Whether integrals against dF^m should be taken in probability space
    /// (u = F^m(v)) because the density m F^{m-1} f blows up at 0.
    pub(crate) fn singular_order_density(&self, m: u32) -> bool {
        match self {
            Self::Uniform | Self::Custom(_) => false,
            Self::Power { a } => a * (m as f64) < 1.0,
        }
    }

    /// Second differences of ln f on an interior grid are all <= 1e-9.
    pub fn is_log_concave(&self) -> bool {
        let n = 999;
        let h = 1.0 / (n as f64 + 1.0);
        let ln_f = |v: f64| self.pdf_at(v).ln();
        (2..n).all(|i| {
            let v = i as f64 * h;
            let d2 = ln_f(v + h) - 2.0 * ln_f(v) + ln_f(v - h);
            !d2.is_nan() && d2 <= 1e-9
        })
    }
}

/// Serialized form: `{"family":"uniform"}` or `{"family":"power","a":0.75}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistSpec {
    Uniform,
    Power { a: f64 },
}

impl TryFrom<DistSpec> for ValueDistribution {
    type Error = Error;

    fn try_from(spec: DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Uniform => Ok(ValueDistribution::Uniform),
            DistSpec::Power { a } => ValueDistribution::power(a),
        }
    }
}

impl TryFrom<&ValueDistribution> for DistSpec {
    type Error = Error;

    fn try_from(d: &ValueDistribution) -> Result<Self> {
        match d {
            ValueDistribution::Uniform => Ok(DistSpec::Uniform),
            ValueDistribution::Power { a } => Ok(DistSpec::Power { a: *a }),
            ValueDistribution::Custom(_) => Err(Error::InvalidConfig(
                "custom value laws cannot be serialized".into(),
            )),
        }
    }
}

impl Serialize for ValueDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistSpec::try_from(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ValueDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = DistSpec::deserialize(d)?;
        ValueDistribution::try_from(spec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p075() -> ValueDistribution {
        ValueDistribution::power(0.75).unwrap()
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(ValueDistribution::Uniform.cdf(0.3).unwrap(), 0.3);
        assert_abs_diff_eq!(
            ValueDistribution::power(1.0).unwrap().cdf(0.7).unwrap(),
            0.7,
            epsilon = 1e-15
        );
        // mpmath, 30 digits: 0.5^0.75
        assert_abs_diff_eq!(
            p075().cdf(0.5).unwrap(),
            0.594_603_557_501_360_5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(ValueDistribution::Uniform.pdf(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(p075().pdf(1.0).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(
            p075().pdf(0.25).unwrap(),
            1.060_660_171_779_821_2,
            epsilon = 1e-14
        );
        assert_eq!(p075().pdf(0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn top_order_cdf_examples() {
        let u = ValueDistribution::Uniform;
        assert_eq!(u.top_order_cdf(0.5, 2).unwrap(), 0.25);
        assert_eq!(p075().top_order_cdf(1.0, 7).unwrap(), 1.0);
        assert_eq!(u.top_order_cdf(0.0, 0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            p075().top_order_cdf(0.5, 2).unwrap(),
            0.594_603_557_501_360_5_f64.powi(2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            ValueDistribution::Uniform.cdf(1.5),
            Err(Error::Domain { .. })
        ));
        assert!(p075().pdf(-0.1).is_err());
        assert!(p075().quantile(2.0).is_err());
        assert!(ValueDistribution::power(0.0).is_err());
        assert!(ValueDistribution::power(f64::NAN).is_err());
    }

    #[test]
    fn endpoints_and_quantile_inverse() {
        for d in [
            ValueDistribution::Uniform,
            p075(),
            ValueDistribution::power(2.5).unwrap(),
        ] {
            assert_eq!(d.cdf(0.0).unwrap(), 0.0);
            assert_eq!(d.cdf(1.0).unwrap(), 1.0);
            for i in 1..100 {
                let v = i as f64 / 100.0;
                let back = d.quantile(d.cdf(v).unwrap()).unwrap();
                assert_abs_diff_eq!(back, v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn power_cdf_is_exact_power() {
        let d = ValueDistribution::power(1.7).unwrap();
        for i in 0..=50 {
            let v = i as f64 / 50.0;
            assert_eq!(d.cdf(v).unwrap(), v.powf(1.7));
        }
    }

    #[test]
    fn cdf_derivative_matches_pdf() {
        let h = 1e-5;
        for d in [
            ValueDistribution::Uniform,
            p075(),
            ValueDistribution::power(3.0).unwrap(),
        ] {
            // Truncation error of the central difference grows like f''' near
            // the singular endpoint of Power(a < 1), so that grid stays clear of 0.
            let (lo, hi) = match d {
                ValueDistribution::Power { a } if a < 1.0 => (0.05, 0.95),
                _ => (0.001, 0.999),
            };
            for i in 0..1001 {
                let v = lo + (hi - lo) * i as f64 / 1000.0;
                let fd = (d.cdf_at(v + h) - d.cdf_at(v - h)) / (2.0 * h);
                assert!((fd - d.pdf_at(v)).abs() < 1e-6, "{} at {v}", d.label());
            }
        }
    }

    #[test]
    fn top_order_cdf_is_power_of_cdf() {
        for d in [ValueDistribution::Uniform, p075()] {
            for m in 0..=10u32 {
                for i in 0..=100 {
                    let v = i as f64 / 100.0;
                    let want = d.cdf_at(v).powi(m as i32);
                    assert_abs_diff_eq!(d.top_order_cdf(v, m).unwrap(), want, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn log_concavity() {
        assert!(ValueDistribution::Uniform.is_log_concave());
        assert!(ValueDistribution::power(1.0).unwrap().is_log_concave());
        assert!(ValueDistribution::power(2.0).unwrap().is_log_concave());
        // ln(a v^{a-1}) is convex for a < 1.
        assert!(!p075().is_log_concave());
    }

    #[test]
    fn sampling_is_replayable() {
        let d = ValueDistribution::Uniform;
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..32).map(|_| d.sample(&mut rng)).collect()
        };
        let b: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            (0..32).map(|_| d.sample(&mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn power_samples_pass_ks() {
        let d = p075();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = d.cdf_at(x);
                (c - i as f64 / n as f64)
                    .abs()
                    .max((i as f64 + 1.0) / n as f64 - c)
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn uniform_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| ValueDistribution::Uniform.sample(&mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.002);
    }

    #[test]
    fn serde_shape() {
        let d: ValueDistribution = serde_json::from_str(r#"{"family":"power","a":0.75}"#).unwrap();
        assert_eq!(d, p075());
        assert_eq!(
            serde_json::to_string(&ValueDistribution::Uniform).unwrap(),
            r#"{"family":"uniform"}"#
        );
        assert!(serde_json::from_str::<ValueDistribution>(r#"{"family":"power","a":-1}"#).is_err());
    }

    #[derive(Debug)]
    struct Triangular;

    impl ValueLaw for Triangular {
        fn cdf(&self, v: f64) -> f64 {
            1.0 - (1.0 - v) * (1.0 - v)
        }
        fn pdf(&self, v: f64) -> f64 {
            2.0 * (1.0 - v)
        }
    }

    #[test]
    fn custom_law_default_quantile() {
        let d = ValueDistribution::custom(Arc::new(Triangular)).unwrap();
        assert!(d.is_log_concave());
        let v = d.quantile(0.75).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
    }
}
