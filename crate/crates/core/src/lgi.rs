//! Leggett-Garg correlators for the sequential `sigma_y` protocol at
//! `t0 = 0, t1 = t, t2 = 2t`, the `K3` landscape and its optimization.
//!
//! The system starts in `|+y>`. After each projective measurement the
//! post-measurement projector is evolved by the unnormalized dynamics and read
//! out in normalized form, which is where the `q < 1` nonlinearity enters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_propagator, evolve_rk4, EvolveConfig};
use crate::error::{Error, Result};
use crate::model::{normalize, sigma_y, DensityMatrix, ModelParams, Outcome, DEFAULT_EPS_TRACE};
use crate::numerics::expm;
use crate::spectrum::build_liouvillian;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Exact,
    Rk4,
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Engine::Exact),
            "rk4" => Ok(Engine::Rk4),
            other => Err(Error::InvalidParameter(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct K3Config {
    pub engine: Engine,
    /// Step of the `rk4` engine.
    pub dt: f64,
    pub eps_trace: f64,
}

impl Default for K3Config {
    fn default() -> Self {
        Self {
            engine: Engine::Exact,
            dt: 1e-3,
            eps_trace: DEFAULT_EPS_TRACE,
        }
    }
}

impl K3Config {
    fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig { eps_trace: self.eps_trace, ..EvolveConfig::rk4(self.dt) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRecord {
    pub t: f64,
    pub c01: f64,
    pub c12: f64,
    pub c02: f64,
    pub k3: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

/// Unnormalized states needed for one interval: `rho(t)` and `rho(2t)` from
/// `P+`, and `rho(t)` from `P-`.
struct Evolved {
    plus_t: DensityMatrix,
    plus_2t: DensityMatrix,
    minus_t: DensityMatrix,
}

fn evolve_three(p: &ModelParams, t: f64, cfg: &K3Config) -> Result<Evolved> {
    let plus = DensityMatrix::plus_y();
    let minus = DensityMatrix::minus_y();
    match cfg.engine {
        Engine::Exact => {
            let e = expm(&build_liouvillian(p), t)?;
            let e2 = e * e;
            Ok(Evolved {
                plus_t: apply_propagator(&e, &plus),
                plus_2t: apply_propagator(&e2, &plus),
                minus_t: apply_propagator(&e, &minus),
            })
        }
        Engine::Rk4 => {
            let ec = cfg.evolve_config();
            let plus_t = evolve_rk4(&plus, p, t, &ec)?.rho;
            let plus_2t = evolve_rk4(&plus_t, p, t, &ec)?.rho;
            let minus_t = evolve_rk4(&minus, p, t, &ec)?.rho;
            Ok(Evolved { plus_t, plus_2t, minus_t })
        }
    }
}

fn record_from(t: f64, ev: &Evolved, eps: f64) -> Result<CorrelatorRecord> {
    let sy = sigma_y();
    let rt = normalize(&ev.plus_t, eps).map_err(|e| e.on_branch("+ at t"))?;
    let r2t = normalize(&ev.plus_2t, eps).map_err(|e| e.on_branch("+ at 2t"))?;
    let rm = normalize(&ev.minus_t, eps).map_err(|e| e.on_branch("- at t"))?;
    let c01 = rt.expectation(&sy);
    let p_plus = rt.expectation(&Outcome::Plus.projector());
    let p_minus = rt.expectation(&Outcome::Minus.projector());
    let c12 = rt.expectation(&sy) * p_plus - rm.expectation(&sy) * p_minus;
    let c02 = r2t.expectation(&sy);
    Ok(CorrelatorRecord { t, c01, c12, c02, k3: c01 + c12 - c02, p_plus, p_minus })
}

fn check_interval(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("interval must be positive, got {t}")));
    }
    Ok(())
}

/// Correlators `C01, C12, C02` and `K3 = C01 + C12 - C02` at interval `t`.
pub fn correlators(p: &ModelParams, t: f64, cfg: &K3Config) -> Result<CorrelatorRecord> {
    p.validate()?;
    check_interval(t)?;
    let ev = evolve_three(p, t, cfg)?;
    record_from(t, &ev, cfg.eps_trace)
}

pub fn k3(p: &ModelParams, t: f64) -> Result<f64> {
    correlators(p, t, &K3Config::default()).map(|r| r.k3)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub t_max: f64,
    /// Grid points `t_k = t_max k / resolution`, `k = 1..=resolution`.
    pub resolution: usize,
    /// Width at which golden-section refinement stops.
    pub tol: f64,
    /// Number of grid local maxima refined.
    pub candidates: usize,
    /// Values within this distance of the maximum count as ties; ties go to
    /// the smallest `t`.
    pub tie_tol: f64,
    pub k3: K3Config,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            t_max: 20.0,
            resolution: 2000,
            tol: 1e-6,
            candidates: 8,
            tie_tol: 1e-9,
            k3: K3Config::default(),
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidParameter("resolution must be at least 2".into()));
        }
        if !(self.tol > 0.0) || self.candidates == 0 {
            return Err(Error::InvalidParameter("tol and candidates must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.resolution as f64;
        (1..=self.resolution).map(|k| self.t_max * k as f64 / n).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    /// Largest `K3` seen on the grid or during refinement.
    pub k3_max: f64,
    pub t_star: f64,
    pub grid_points: usize,
    pub masked_points: usize,
}

/// `K3` on the uniform grid of `cfg`; failed points are `Err`.
pub fn scan(p: &ModelParams, cfg: &OptConfig) -> Result<Vec<(f64, Result<f64>)>> {
    p.validate()?;
    cfg.validate()?;
    let ts = cfg.grid();
    match cfg.k3.engine {
        Engine::Exact => Ok(ts.iter().map(|&t| (t, k3_with(p, t, &cfg.k3))).collect()),
        Engine::Rk4 => scan_rk4(p, &ts, cfg),
    }
}

fn k3_with(p: &ModelParams, t: f64, cfg: &K3Config) -> Result<f64> {
    correlators(p, t, cfg).map(|r| r.k3)
}

// One pass along the grid instead of restarting the integrator at every point.
fn scan_rk4(p: &ModelParams, ts: &[f64], cfg: &OptConfig) -> Result<Vec<(f64, Result<f64>)>> {
    let ec = cfg.k3.evolve_config();
    let n = ts.len();
    let mut plus = Vec::with_capacity(2 * n);
    let mut minus = Vec::with_capacity(n);
    let (mut rp, mut rm) = (DensityMatrix::plus_y(), DensityMatrix::minus_y());
    let mut prev = 0.0;
    let grid2: Vec<f64> = (1..=2 * n).map(|k| cfg.t_max * k as f64 / n as f64).collect();
    for (k, &t) in grid2.iter().enumerate() {
        rp = evolve_rk4(&rp, p, t - prev, &ec)?.rho;
        plus.push(rp);
        if k < n {
            rm = evolve_rk4(&rm, p, t - prev, &ec)?.rho;
            minus.push(rm);
        }
        prev = t;
    }
    Ok(ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let ev = Evolved { plus_t: plus[k], plus_2t: plus[2 * k + 1], minus_t: minus[k] };
            (t, record_from(t, &ev, cfg.k3.eps_trace).map(|r| r.k3))
        })
        .collect())
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `K3(t)` over `(0, t_max]`.
///
/// The grid is scanned, the best local maxima are re-scanned at four times
/// the resolution over their two neighbouring cells and then refined by
/// golden-section search.
pub fn optimize_k3(p: &ModelParams, cfg: &OptConfig) -> Result<OptResult> {
    let grid = scan(p, cfg)?;
    let values: Vec<f64> = grid
        .iter()
        .map(|(_, v)| *v.as_ref().unwrap_or(&f64::NEG_INFINITY))
        .collect();
    let masked = values.iter().filter(|v| !v.is_finite()).count();
    if masked == values.len() {
        let why = grid
            .iter()
            .rev()
            .find_map(|(_, v)| v.as_ref().err().map(|e| e.to_string()))
            .unwrap_or_default();
        return Err(Error::Masked(why));
    }
    let ts: Vec<f64> = grid.iter().map(|(t, _)| *t).collect();

    let n = values.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| {
            let v = values[k];
            v.is_finite()
                && (k == 0 || v >= values[k - 1])
                && (k + 1 == n || v >= values[k + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(cfg.candidates);

    let eval = |t: f64| k3_with(p, t, &cfg.k3).unwrap_or(f64::NEG_INFINITY);
    let mut best: Vec<(f64, f64)> = Vec::with_capacity(peaks.len());
    for &k in &peaks {
        let lo = ts[k.saturating_sub(1)];
        let hi = ts[(k + 1).min(n - 1)];
        best.push(refine(eval, lo, hi, (ts[k], values[k]), cfg.tol));
    }
    let k3_max = best.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let t_star = best
        .iter()
        .filter(|b| b.1 >= k3_max - cfg.tie_tol)
        .map(|b| b.0)
        .fold(f64::INFINITY, f64::min);
    Ok(OptResult { k3_max, t_star, grid_points: n, masked_points: masked })
}

/// Best `(t, value)` found in `[lo, hi]`, never worse than `seed`.
fn refine(f: impl Fn(f64) -> f64, lo: f64, hi: f64, seed: (f64, f64), tol: f64) -> (f64, f64) {
    let mut best = seed;
    let consider = |t: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.1 || (v == best.1 && t < best.0) {
            *best = (t, v);
        }
    };
    if hi <= lo {
        return best;
    }
    const SUB: usize = 8;
    let h = (hi - lo) / SUB as f64;
    let sub: Vec<(f64, f64)> = (0..=SUB)
        .map(|i| {
            let t = lo + h * i as f64;
            (t, f(t))
        })
        .collect();
    let mut j = 0;
    for (i, &(t, v)) in sub.iter().enumerate() {
        if v > sub[j].1 {
            j = i;
        }
        consider(t, v, &mut best);
    }
    let (mut a, mut b) = (sub[j.saturating_sub(1)].0, sub[(j + 1).min(SUB)].0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            consider(d, fd, &mut best);
        }
    }
    best
}

/// One `(gamma, q)` cell of a sweep. Failed cells keep their error message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub q: f64,
    pub k3_max: Option<f64>,
    pub t_star: Option<f64>,
    pub masked_points: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub gammas: Vec<f64>,
    pub qs: Vec<f64>,
    /// Row-major with `gamma` outer and `q` inner.
    pub cells: Vec<SweepCell>,
    pub t_max: f64,
    pub resolution: usize,
}

impl SweepResult {
    pub fn cell(&self, gi: usize, qi: usize) -> &SweepCell {
        &self.cells[gi * self.qs.len() + qi]
    }
}

/// Evaluates [`optimize_k3`] on every cell using `workers` threads.
///
/// The output does not depend on `workers`.
pub fn sweep(
    gammas: &[f64],
    qs: &[f64],
    base: &ModelParams,
    cfg: &OptConfig,
    workers: usize,
) -> Result<SweepResult> {
    if gammas.is_empty() || qs.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be nonempty".into()));
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let coords: Vec<(f64, f64)> = gammas
        .iter()
        .flat_map(|&g| qs.iter().map(move |&q| (g, q)))
        .collect();
    let cells = pool.install(|| {
        coords
            .par_iter()
            .map(|&(gamma, q)| {
                let outcome = ModelParams { gamma, q, ..*base }
                    .validate()
                    .and_then(|_| optimize_k3(&ModelParams { gamma, q, ..*base }, cfg));
                match outcome {
                    Ok(r) => SweepCell {
                        gamma,
                        q,
                        k3_max: Some(r.k3_max),
                        t_star: Some(r.t_star),
                        masked_points: r.masked_points,
                        error: None,
                    },
                    Err(e) => SweepCell {
                        gamma,
                        q,
                        k3_max: None,
                        t_star: None,
                        masked_points: cfg.resolution,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    Ok(SweepResult {
        gammas: gammas.to_vec(),
        qs: qs.to_vec(),
        cells,
        t_max: cfg.t_max,
        resolution: cfg.resolution,
    })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive; both must be positive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "log grid bounds must be positive, got {lo}:{hi}"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut v: Vec<f64> = linspace(a, b, n).into_iter().map(|e| 10f64.powf(e)).collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if n > 1 {
        v[n - 1] = hi;
    }
    Ok(v)
}
