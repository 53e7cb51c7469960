//! Comparative statics over grids of λ, J, value families and mechanisms,
//! with deterministic CSV and JSON output.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, ValueDistribution};
use crate::equilibria::MarketConfig;
use crate::error::{Error, Result};
use crate::quad::QuadratureSettings;
use crate::welfare::{self, EquilibriumOutcome, Mechanism};

pub const CSV_HEADER: [&str; 15] = [
    "lambda",
    "J",
    "family",
    "mechanism",
    "posted_price",
    "cap",
    "cs_on",
    "cs_off",
    "cs_total",
    "profit_per_firm",
    "transfer_per_firm",
    "platform_revenue",
    "producer_surplus",
    "welfare_total",
    "error",
];

/// Significant digits for reals in emitted files.
pub const SIG_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 0.95,
            step: 0.05,
        }
    }
}

impl LambdaGrid {
    pub fn single(lambda: f64) -> Self {
        Self {
            start: lambda,
            stop: lambda,
            step: 1.0,
        }
    }

    /// Grid points, rounded to 10 decimals so 0.1 + 0.2 prints as 0.3.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::domain("lambda step", self.step, "(0, inf)"));
        }
        if self.stop < self.start {
            return Err(Error::InvalidConfig(format!(
                "lambda grid stop {} is below start {}",
                self.stop, self.start
            )));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        let vals: Vec<f64> = (0..count)
            .map(|k| ((self.start + k as f64 * self.step) * 1e10).round() / 1e10)
            .collect();
        if let Some(&bad) = vals.iter().find(|l| !(0.0..1.0).contains(*l)) {
            return Err(Error::domain("lambda", bad, "[0, 1)"));
        }
        Ok(vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub lambda: LambdaGrid,
    #[serde(rename = "J")]
    pub j_list: Vec<u32>,
    pub families: Vec<DistSpec>,
    pub mechanisms: Vec<Mechanism>,
    pub abs_tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            lambda: LambdaGrid::default(),
            j_list: vec![3, 5, 7],
            families: vec![DistSpec::Uniform],
            mechanisms: Mechanism::ALL.to_vec(),
            abs_tol: QuadratureSettings::default().abs_tol,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.lambda.values()?;
        if self.j_list.is_empty() || self.families.is_empty() || self.mechanisms.is_empty() {
            return Err(Error::InvalidConfig(
                "sweep needs at least one J, one family and one mechanism".into(),
            ));
        }
        if let Some(&j) = self.j_list.iter().find(|&&j| j < 2) {
            return Err(Error::InvalidConfig(format!(
                "number of firms J = {j} must be at least 2"
            )));
        }
        for f in &self.families {
            ValueDistribution::try_from(*f)?;
        }
        QuadratureSettings::with_tol(self.abs_tol)?;
        Ok(())
    }
}

/// One (λ, J, family, mechanism) cell. Outcome fields are empty when the
/// cell failed, and `error` says why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    #[serde(rename = "J")]
    pub j: u32,
    pub family: String,
    pub mechanism: Mechanism,
    pub posted_price: Option<f64>,
    pub cap: Option<f64>,
    pub cs_on: Option<f64>,
    pub cs_off: Option<f64>,
    pub cs_total: Option<f64>,
    pub profit_per_firm: Option<f64>,
    pub transfer_per_firm: Option<f64>,
    pub platform_revenue: Option<f64>,
    pub producer_surplus: Option<f64>,
    pub welfare_total: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_outcome(lambda: f64, j: u32, family: &str, o: &EquilibriumOutcome) -> Self {
        Self {
            lambda,
            j,
            family: family.to_string(),
            mechanism: o.mechanism,
            posted_price: Some(o.posted_price),
            cap: Some(o.on_platform_cap),
            cs_on: Some(o.cs_on),
            cs_off: Some(o.cs_off),
            cs_total: Some(o.cs_total),
            profit_per_firm: Some(o.profit_per_firm),
            transfer_per_firm: Some(o.transfer_per_firm),
            platform_revenue: Some(o.platform_revenue),
            producer_surplus: Some(o.producer_surplus),
            welfare_total: Some(o.welfare_total),
            error: None,
        }
    }

    pub fn failed(lambda: f64, j: u32, family: &str, mechanism: Mechanism, err: &Error) -> Self {
        Self {
            lambda,
            j,
            family: family.to_string(),
            mechanism,
            posted_price: None,
            cap: None,
            cs_on: None,
            cs_off: None,
            cs_total: None,
            profit_per_firm: None,
            transfer_per_firm: None,
            platform_revenue: None,
            producer_surplus: None,
            welfare_total: None,
            error: Some(err.to_string()),
        }
    }

    pub fn outcome(&self) -> Option<EquilibriumOutcome> {
        Some(EquilibriumOutcome {
            mechanism: self.mechanism,
            posted_price: self.posted_price?,
            on_platform_cap: self.cap?,
            cs_on: self.cs_on?,
            cs_off: self.cs_off?,
            cs_total: self.cs_total?,
            profit_per_firm: self.profit_per_firm?,
            transfer_per_firm: self.transfer_per_firm?,
            platform_revenue: self.platform_revenue?,
            producer_surplus: self.producer_surplus?,
            welfare_total: self.welfare_total?,
        })
    }

    fn reals(&self) -> [Option<f64>; 10] {
        [
            self.posted_price,
            self.cap,
            self.cs_on,
            self.cs_off,
            self.cs_total,
            self.profit_per_firm,
            self.transfer_per_firm,
            self.platform_revenue,
            self.producer_surplus,
            self.welfare_total,
        ]
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.lambda
            .total_cmp(&other.lambda)
            .then(self.j.cmp(&other.j))
            .then_with(|| self.family.cmp(&other.family))
            .then_with(|| self.mechanism.name().cmp(other.mechanism.name()))
    }
}

fn market_rows(lambda: f64, j: u32, family: &DistSpec, spec: &SweepSpec) -> Vec<SweepRow> {
    let built = ValueDistribution::try_from(*family).and_then(|d| {
        let label = d.label();
        let c = MarketConfig::new(lambda, j, d)?
            .with_settings(QuadratureSettings::with_tol(spec.abs_tol)?)?;
        Ok((label, c))
    });
    let (label, c) = match built {
        Ok(x) => x,
        Err(e) => {
            let label = format!("{family:?}").to_lowercase();
            return spec
                .mechanisms
                .iter()
                .map(|&m| SweepRow::failed(lambda, j, &label, m, &e))
                .collect();
        }
    };
    // Per-mechanism solves: only the independent campaign pays for the cap
    // scan, and one failing solver cannot blank the whole market.
    spec.mechanisms
        .iter()
        .map(|&m| match welfare::mechanism_outcome(m, &c) {
            Ok(o) => SweepRow::from_outcome(lambda, j, &label, &o),
            Err(e) => {
                log::warn!("sweep cell lambda={lambda} J={j} {label} {m} failed: {e}");
                SweepRow::failed(lambda, j, &label, m, &e)
            }
        })
        .collect()
}

/// Evaluates every cell of the sweep. Solver failures are captured per row.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let lambdas = spec.lambda.values()?;
    let markets: Vec<(f64, u32, &DistSpec)> = lambdas
        .iter()
        .flat_map(|&l| {
            spec.j_list
                .iter()
                .flat_map(move |&j| spec.families.iter().map(move |f| (l, j, f)))
        })
        .collect();
    let mut rows: Vec<SweepRow> = markets
        .par_iter()
        .flat_map_iter(|&(l, j, f)| market_rows(l, j, f, spec))
        .collect();
    rows.sort_by(SweepRow::key_cmp);
    Ok(rows)
}

/// Formats a real with [`SIG_DIGITS`] significant digits, shortest form.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn nonempty(rows: &[SweepRow]) -> Result<()> {
    if rows.is_empty() {
        Err(Error::EmptyRows)
    } else {
        Ok(())
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    nonempty(rows)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let mut rec: Vec<String> = vec![
            format_real(r.lambda),
            r.j.to_string(),
            r.family.clone(),
            r.mechanism.name().to_string(),
        ];
        rec.extend(
            r.reals()
                .iter()
                .map(|x| x.map(format_real).unwrap_or_default()),
        );
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    nonempty(rows)?;
    write_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn write_json<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    nonempty(rows)?;
    let rounded: Vec<SweepRow> = rows.iter().map(round_row).collect();
    serde_json::to_writer_pretty(&mut out, &rounded)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn emit_json(rows: &[SweepRow], path: &Path) -> Result<()> {
    nonempty(rows)?;
    write_json(rows, BufWriter::new(File::create(path)?))
}

fn round(x: f64) -> f64 {
    format_real(x).parse().unwrap_or(x)
}

/// The row as it appears in emitted files.
pub fn round_row(r: &SweepRow) -> SweepRow {
    let f = |x: Option<f64>| x.map(round);
    SweepRow {
        lambda: round(r.lambda),
        family: r.family.clone(),
        posted_price: f(r.posted_price),
        cap: f(r.cap),
        cs_on: f(r.cs_on),
        cs_off: f(r.cs_off),
        cs_total: f(r.cs_total),
        profit_per_firm: f(r.profit_per_firm),
        transfer_per_firm: f(r.transfer_per_firm),
        platform_revenue: f(r.platform_revenue),
        producer_surplus: f(r.producer_surplus),
        welfare_total: f(r.welfare_total),
        error: r.error.clone(),
        ..*r
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let headers = rd.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header: {headers:?}"
        )));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_json(path: &Path) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        File::open(path)?,
    ))?)
}
