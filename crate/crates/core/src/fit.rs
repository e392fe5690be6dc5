//! The tanh-in-`log q` fit of the optimized landscape,
//!
//! ```text
//! K3max(gamma, q) ~ A(gamma) tanh(B(gamma) log q + C(gamma)) + D(gamma)
//! ```
//!
//! with `A..D` degree-20 polynomials in `gamma`, and residuals of the fit
//! against computed sweeps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgi::SweepResult;

/// Coefficients of `gamma^n`, `n = 0..=20`.
const A: [f64; 21] = [
    6.2848e-1, -4.5638, 2.8757e1, -8.5770e1, 1.2011e2, -3.5672e1, -5.3469e1, -1.8958e1, 3.3930e1,
    6.0866e1, 2.9117e1, -3.4865e1, -7.6905e1, -5.8861e1, 1.1570e1, 7.9796e1, 9.6074e1, 2.7423e1,
    -9.1780e1, -1.3767e2, 1.1125e2,
];
const B: [f64; 21] = [
    -4.9415e-1, 1.9172e-1, -2.1947, -5.1790, 5.0647e1, -6.9839e1, -8.1141e1, 1.5617e2, 5.8249e1,
    -4.2615e1, -5.0256e1, -6.9025e1, -9.0190e1, -6.9937e1, 1.8094e2, 2.6833e2, -3.1101e1,
    -8.2974e1, -1.5270e2, -1.8439e2, 2.1707e2,
];
const C: [f64; 21] = [
    1.7521, -2.9259e1, 1.9281e2, -8.1818e2, 1.8487e3, -1.6438e3, -9.1085e2, 1.8993e3, 6.5620e2,
    -6.3958e2, -8.8019e2, -7.0012e2, -1.3577e2, 9.7489e2, 9.5807e2, 2.4773e2, -4.4073e2,
    -7.7988e2, -3.6510e2, 3.9330e2, 1.6410e2,
];
const D: [f64; 21] = [
    8.7271e-1, 4.8657, -2.7083e1, 7.6357e1, -7.9859e1, -4.6756e1, 1.2943e2, 2.6552e1, -9.2305e1,
    -6.9517e1, 1.6402e1, 7.2005e1, 4.8539e1, 2.0108, -2.0942e1, -5.7441e1, -4.8891e1, 4.1577e1,
    -1.7906e1, 1.1761e2, -7.3519e1,
];

/// Base of `log q` in the fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Selected by [`select_log_base`] on computed landscapes.
    #[default]
    Natural,
    Ten,
}

impl LogBase {
    pub fn log(self, q: f64) -> f64 {
        match self {
            LogBase::Natural => q.ln(),
            LogBase::Ten => q.log10(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Natural => "e",
            LogBase::Ten => "10",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" | "natural" | "ln" => Ok(LogBase::Natural),
            "10" | "ten" | "log10" => Ok(LogBase::Ten),
            other => Err(Error::InvalidParameter(format!("unknown log base {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitCoefficients {
    pub a: [f64; 21],
    pub b: [f64; 21],
    pub c: [f64; 21],
    pub d: [f64; 21],
    pub log_base: LogBase,
}

impl Default for FitCoefficients {
    fn default() -> Self {
        Self::published()
    }
}

/// `A(gamma)`, `B(gamma)`, `C(gamma)`, `D(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomials {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitValue {
    pub value: f64,
    /// `q = 0`: the tanh is replaced by its limit.
    pub saturated: bool,
}

pub const DOMAIN_LOW: (f64, f64) = (0.05, 1.0);
pub const DOMAIN_HIGH: (f64, f64) = (2.0, 5.0);

/// `[0.05, 1) U (2, 5]`.
pub fn in_fit_domain(gamma: f64) -> bool {
    (DOMAIN_LOW.0..DOMAIN_LOW.1).contains(&gamma) || (gamma > DOMAIN_HIGH.0 && gamma <= DOMAIN_HIGH.1)
}

fn horner(coeffs: &[f64; 21], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn naive(coeffs: &[f64; 21], x: f64) -> f64 {
    coeffs.iter().enumerate().map(|(n, &c)| c * x.powi(n as i32)).sum()
}

impl FitCoefficients {
    pub fn published() -> Self {
        Self { a: A, b: B, c: C, d: D, log_base: LogBase::default() }
    }

    pub fn with_base(self, log_base: LogBase) -> Self {
        Self { log_base, ..self }
    }

    fn check(gamma: f64, allow_extrapolation: bool) -> Result<()> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
        }
        if !allow_extrapolation && !in_fit_domain(gamma) {
            return Err(Error::OutOfDomain { gamma });
        }
        Ok(())
    }

    pub fn eval_polynomials(&self, gamma: f64, allow_extrapolation: bool) -> Result<Polynomials> {
        Self::check(gamma, allow_extrapolation)?;
        Ok(Polynomials {
            a: horner(&self.a, gamma),
            b: horner(&self.b, gamma),
            c: horner(&self.c, gamma),
            d: horner(&self.d, gamma),
        })
    }

    /// Power-sum evaluation, kept as an independent check on Horner.
    pub fn eval_polynomials_naive(&self, gamma: f64) -> Polynomials {
        Polynomials {
            a: naive(&self.a, gamma),
            b: naive(&self.b, gamma),
            c: naive(&self.c, gamma),
            d: naive(&self.d, gamma),
        }
    }

    pub fn eval_fit(&self, gamma: f64, q: f64, allow_extrapolation: bool) -> Result<FitValue> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q must lie in [0, 1], got {q}")));
        }
        let p = self.eval_polynomials(gamma, allow_extrapolation)?;
        if q == 0.0 {
            // log q -> -inf
            let limit = if p.b > 0.0 {
                -1.0
            } else if p.b < 0.0 {
                1.0
            } else {
                p.c.tanh()
            };
            return Ok(FitValue { value: p.a * limit + p.d, saturated: true });
        }
        let arg = p.b * self.log_base.log(q) + p.c;
        Ok(FitValue { value: p.a * arg.tanh() + p.d, saturated: false })
    }

    /// CSV with header `n,a,b,c,d`; values use shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# log_base={}\nn,a,b,c,d\n", self.log_base.label());
        for n in 0..21 {
            let _ = writeln!(out, "{n},{:?},{:?},{:?},{:?}", self.a[n], self.b[n], self.c[n], self.d[n]);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidParameter(format!("coefficient table: {m}"));
        let mut out = Self { a: [f64::NAN; 21], b: [f64::NAN; 21], c: [f64::NAN; 21], d: [f64::NAN; 21], log_base: LogBase::default() };
        let mut seen = [false; 21];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                if let Some(b) = meta.trim().strip_prefix("log_base=") {
                    out.log_base = b.parse()?;
                }
                continue;
            }
            if line.starts_with("n,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 fields in {line:?}")));
            }
            let n: usize = fields[0].parse().map_err(|_| bad(format!("bad index {:?}", fields[0])))?;
            if n > 20 {
                return Err(bad(format!("index {n} out of range")));
            }
            let v: Vec<f64> = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(format!("bad number {f:?}"))))
                .collect::<Result<_>>()?;
            out.a[n] = v[0];
            out.b[n] = v[1];
            out.c[n] = v[2];
            out.d[n] = v[3];
            seen[n] = true;
        }
        if let Some(n) = seen.iter().position(|s| !s) {
            return Err(bad(format!("missing row {n}")));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("coefficient JSON: {e}")))
    }
}

/// Residual band of one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Residual below `1e-2`.
    Fine,
    /// Residual in `[1e-2, 1e-1)`.
    Moderate,
    /// Residual at or above `1e-1`.
    Coarse,
    /// `gamma` outside the fit domain.
    Excluded,
    /// The computed value is missing.
    Masked,
}

impl Region {
    pub fn classify(residual: f64) -> Self {
        if residual < 1e-2 {
            Region::Fine
        } else if residual < 1e-1 {
            Region::Moderate
        } else {
            Region::Coarse
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::Fine => "fine",
            Region::Moderate => "moderate",
            Region::Coarse => "coarse",
            Region::Excluded => "excluded",
            Region::Masked => "masked",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualCell {
    pub gamma: f64,
    pub q: f64,
    pub computed: Option<f64>,
    pub fit: Option<f64>,
    pub residual: Option<f64>,
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub count: usize,
    pub max: f64,
    pub median: f64,
    pub p90: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub log_base: LogBase,
    pub cells: Vec<ResidualCell>,
    /// `None` when no cell lies in the fit domain.
    pub summary: Option<ResidualSummary>,
}

/// Quantile by linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(residuals: &[f64]) -> Option<ResidualSummary> {
    if residuals.is_empty() {
        return None;
    }
    let mut s = residuals.to_vec();
    s.sort_by(f64::total_cmp);
    Some(ResidualSummary {
        count: s.len(),
        max: s[s.len() - 1],
        median: quantile(&s, 0.5),
        p90: quantile(&s, 0.9),
        mean: s.iter().sum::<f64>() / s.len() as f64,
    })
}

/// `|fit - computed|` for `(gamma, q, computed)` triples.
pub fn residuals_of(
    points: impl IntoIterator<Item = (f64, f64, Option<f64>)>,
    coeffs: &FitCoefficients,
) -> ResidualReport {
    residuals_with(points, coeffs, false)
}

/// As [`residuals_of`], optionally evaluating the fit outside its domain.
pub fn residuals_with(
    points: impl IntoIterator<Item = (f64, f64, Option<f64>)>,
    coeffs: &FitCoefficients,
    allow_extrapolation: bool,
) -> ResidualReport {
    let cells: Vec<ResidualCell> = points
        .into_iter()
        .map(|(gamma, q, computed)| {
            let fit = coeffs.eval_fit(gamma, q, allow_extrapolation).ok().map(|f| f.value);
            let (residual, region) = match (computed, fit) {
                (_, None) => (None, Region::Excluded),
                (None, Some(_)) => (None, Region::Masked),
                (Some(c), Some(f)) => {
                    let r = (f - c).abs();
                    (Some(r), Region::classify(r))
                }
            };
            ResidualCell { gamma, q, computed, fit, residual, region }
        })
        .collect();
    let rs: Vec<f64> = cells.iter().filter_map(|c| c.residual).collect();
    ResidualReport { log_base: coeffs.log_base, summary: summarize(&rs), cells }
}

pub fn residual_report(sweep: &SweepResult, coeffs: &FitCoefficients) -> ResidualReport {
    residuals_of(sweep.cells.iter().map(|c| (c.gamma, c.q, c.k3_max)), coeffs)
}

/// Evaluates both bases and returns the one with the smaller median residual
/// (natural log on ties), with both reports.
pub fn select_log_base(
    sweep: &SweepResult,
    coeffs: &FitCoefficients,
) -> (LogBase, ResidualReport, ResidualReport) {
    let natural = residual_report(sweep, &coeffs.clone().with_base(LogBase::Natural));
    let ten = residual_report(sweep, &coeffs.clone().with_base(LogBase::Ten));
    let med = |r: &ResidualReport| r.summary.map_or(f64::INFINITY, |s| s.median);
    let base = if med(&ten) < med(&natural) { LogBase::Ten } else { LogBase::Natural };
    (base, natural, ten)
}
