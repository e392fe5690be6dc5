use std::fmt;
use std::path::Path;

use hlgi_core::blochsol::analytic_branch;
use hlgi_core::dynamics::{evolve_exact, evolve_kraus, evolve_rk4, EvolveConfig};
use hlgi_core::fit::{residuals_with, FitCoefficients, LogBase, ResidualReport};
use hlgi_core::lgi::{self, correlators, optimize_k3, sweep, Engine, K3Config, OptConfig};
use hlgi_core::macrorealism::macrorealism_report;
use hlgi_core::model::{bloch_decompose, normalize, Outcome};
use hlgi_core::spectrum::{ep_locus, spectrum, Coalescence};
use hlgi_core::{DensityMatrix, ModelParams, C64};
use serde_json::json;

use crate::args::{
    Common, EngineArg, EvolveArgs, FitCheckArgs, InitialState, K3Args, LogBaseArg, NsitArgs, SamplingArgs, Sign,
};
use crate::table::{Cell, Table};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Extinct(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Extinct(_) => 2,
            Failure::Numeric(_) | Failure::Io(_) => 70,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Extinct(m) => write!(f, "{m}"),
            Failure::Numeric(m) => write!(f, "numeric failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<hlgi_core::Error> for Failure {
    fn from(e: hlgi_core::Error) -> Self {
        use hlgi_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_) | E::InvalidState(_) | E::Unsupported(_) | E::OutOfDomain { .. } => {
                Failure::Usage(msg)
            }
            E::SingularCoefficients(_) => Failure::Usage(msg),
            E::TrajectoryExtinguished { .. } | E::Masked(_) => Failure::Extinct(msg),
            _ => Failure::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// A table and, when the run stopped early, the reason. The table holds every
/// row produced before the stop.
pub struct Run {
    pub table: Table,
    pub stopped: Option<Failure>,
}

impl From<Table> for Run {
    fn from(table: Table) -> Self {
        Self { table, stopped: None }
    }
}

type Outcome_ = Result<Run, Failure>;

fn stopped_at(table: Table, e: hlgi_core::Error, t: f64) -> Run {
    let stopped = match Failure::from(e) {
        Failure::Extinct(m) => Failure::Extinct(format!("{m} at t = {t}")),
        other => other,
    };
    Run { table, stopped: Some(stopped) }
}

fn params(c: &Common) -> Result<ModelParams, Failure> {
    Ok(ModelParams::with_all(c.j, c.theta, c.gamma, c.q)?)
}

fn workers(c: &Common) -> usize {
    c.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn k3_engine(c: &Common) -> Result<Engine, Failure> {
    match c.engine {
        EngineArg::Exact => Ok(Engine::Exact),
        EngineArg::Rk4 => Ok(Engine::Rk4),
        EngineArg::Kraus => Err(Failure::Usage("--engine kraus is only available for evolve".into())),
    }
}

fn k3_config(c: &Common) -> Result<K3Config, Failure> {
    Ok(K3Config { engine: k3_engine(c)?, dt: c.dt, eps_trace: c.eps_trace })
}

fn opt_config(c: &Common) -> Result<OptConfig, Failure> {
    let cfg = OptConfig {
        t_max: c.t_max,
        resolution: c.resolution,
        tol: c.tol,
        k3: k3_config(c)?,
        ..OptConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn no_grids(c: &Common, command: &str) -> Result<(), Failure> {
    if c.grid_gamma.is_some() || c.grid_q.is_some() {
        return Err(Failure::Usage(format!("{command} takes a single point; use --gamma and --q")));
    }
    Ok(())
}

/// Grid axes, each falling back to the single value given by `--gamma`/`--q`.
fn axes(c: &Common) -> (Vec<f64>, Vec<f64>) {
    let gammas = c.grid_gamma.map_or_else(|| vec![c.gamma], |g| g.points());
    let qs = c.grid_q.map_or_else(|| vec![c.q], |g| g.points());
    (gammas, qs)
}

fn sample_times(c: &Common, s: &SamplingArgs) -> Result<Vec<f64>, Failure> {
    if s.samples == 0 || !(c.t_max > 0.0 && c.t_max.is_finite()) {
        return Err(Failure::Usage("need --samples >= 1 and a positive --t-max".into()));
    }
    let n = s.samples as f64;
    Ok((0..=s.samples).map(|k| c.t_max * k as f64 / n).collect())
}

fn tolerances(c: &Common) -> serde_json::Value {
    json!({
        "eps_trace": c.eps_trace,
        "dt": c.dt,
        "resolution": c.resolution,
        "tol": c.tol,
        "tie_tol": OptConfig::default().tie_tol,
        "coalescence_gap": hlgi_core::spectrum::COALESCENCE_GAP,
    })
}

/// Adds the shared metadata block: tool, version, config echo, tolerances.
pub fn stamp(run: &mut Run, command: &str, config: serde_json::Value, c: &Common) {
    let status = run.stopped.as_ref().map_or_else(|| "ok".to_string(), |f| f.to_string());
    let extra = std::mem::take(&mut run.table.meta);
    let t = &mut run.table;
    t.set_meta("tool", json!("hlgi"));
    t.set_meta("version", json!(env!("CARGO_PKG_VERSION")));
    t.set_meta("command", json!(command));
    t.set_meta("config", config);
    t.set_meta("tolerances", tolerances(c));
    t.set_meta("status", json!(status));
    t.meta.extend(extra);
}

fn initial_state(a: &EvolveArgs) -> Result<DensityMatrix, Failure> {
    if let Some(v) = &a.rho {
        let m = hlgi_core::numerics::Matrix2::from_rows([
            [C64::new(v[0], 0.0), C64::new(v[1], v[2])],
            [C64::new(v[1], -v[2]), C64::new(v[3], 0.0)],
        ]);
        return Ok(DensityMatrix::new(m)?);
    }
    Ok(match a.initial {
        InitialState::PlusY => DensityMatrix::plus_y(),
        InitialState::MinusY => DensityMatrix::minus_y(),
        InitialState::Up => DensityMatrix::up(),
        InitialState::Down => DensityMatrix::down(),
    })
}

pub fn evolve(c: &Common, a: &EvolveArgs) -> Outcome_ {
    no_grids(c, "evolve")?;
    let p = params(c)?;
    let rho0 = initial_state(a)?;
    let times = sample_times(c, &a.sampling)?;
    let rk4 = EvolveConfig { eps_trace: c.eps_trace, ..EvolveConfig::rk4(c.dt) };
    rk4.validate()?;
    let mut table = Table::new(&["t", "rho00", "rho01_re", "rho01_im", "rho11", "R", "sx", "sy", "sz"]);
    let mut rho = rho0;
    let mut prev_t = 0.0;
    for &t in &times {
        let step = t - prev_t;
        let next = match c.engine {
            EngineArg::Exact => evolve_exact(&rho0, &p, t),
            _ if step == 0.0 => Ok(rho),
            EngineArg::Rk4 => evolve_rk4(&rho, &p, step, &rk4).map(|r| r.rho),
            EngineArg::Kraus => evolve_kraus(&rho, &p, step, c.dt).map(|r| r.rho),
        };
        prev_t = t;
        let unit = match next.and_then(|r| {
            rho = r;
            normalize(&rho, c.eps_trace)
        }) {
            Ok(u) => u,
            Err(e) => return Ok(stopped_at(table, e, t)),
        };
        let b = bloch_decompose(&unit);
        let m = rho.matrix();
        table.push(vec![
            t.into(),
            m[(0, 0)].re.into(),
            m[(0, 1)].re.into(),
            m[(0, 1)].im.into(),
            m[(1, 1)].re.into(),
            rho.trace().into(),
            b.sx.into(),
            b.sy.into(),
            b.sz.into(),
        ]);
    }
    Ok(table.into())
}

pub fn k3(c: &Common, a: &K3Args) -> Outcome_ {
    no_grids(c, "k3")?;
    let p = params(c)?;
    if let Some(t) = c.t {
        let mut table = Table::new(&["gamma", "q", "t", "c01", "c12", "c02", "k3", "p_plus", "p_minus"]);
        match correlators(&p, t, &k3_config(c)?) {
            Ok(r) => table.push(vec![
                p.gamma.into(),
                p.q.into(),
                r.t.into(),
                r.c01.into(),
                r.c12.into(),
                r.c02.into(),
                r.k3.into(),
                r.p_plus.into(),
                r.p_minus.into(),
            ]),
            Err(e) => return Ok(Run { table, stopped: Some(e.into()) }),
        }
        return Ok(table.into());
    }
    let cfg = opt_config(c)?;
    if a.scan {
        let mut table = Table::new(&["t", "k3", "error"]);
        for (t, v) in lgi::scan(&p, &cfg)? {
            match v {
                Ok(k) => table.push(vec![t.into(), k.into(), Cell::Empty]),
                Err(e) => table.push(vec![t.into(), Cell::Empty, e.to_string().as_str().into()]),
            }
        }
        return Ok(table.into());
    }
    let r = optimize_k3(&p, &cfg)?;
    let mut table = Table::new(&["gamma", "q", "k3_max", "t_star", "grid_points", "masked_points"]);
    table.push(vec![
        p.gamma.into(),
        p.q.into(),
        r.k3_max.into(),
        r.t_star.into(),
        r.grid_points.into(),
        r.masked_points.into(),
    ]);
    Ok(table.into())
}

pub const SWEEP_COLUMNS: [&str; 6] = ["gamma", "q", "k3_max", "t_star", "masked_points", "error"];

pub fn sweep_cmd(c: &Common) -> Outcome_ {
    let base = params(c)?;
    let (gammas, qs) = axes(c);
    let cfg = opt_config(c)?;
    let s = sweep(&gammas, &qs, &base, &cfg, workers(c))?;
    let mut table = Table::new(&SWEEP_COLUMNS);
    for cell in &s.cells {
        table.push(vec![
            cell.gamma.into(),
            cell.q.into(),
            cell.k3_max.into(),
            cell.t_star.into(),
            cell.masked_points.into(),
            cell.error.as_deref().into(),
        ]);
    }
    Ok(table.into())
}

pub fn spectrum_cmd(c: &Common) -> Outcome_ {
    let base = params(c)?;
    let (gammas, qs) = axes(c);
    let mut table = Table::new(&[
        "gamma", "q", "l0_re", "l0_im", "l1_re", "l1_im", "l2_re", "l2_im", "l3_re", "l3_im",
        "exact_root_error", "x0_re", "x0_im", "x1_re", "x1_im", "x2_re", "x2_im", "discriminant",
        "coalescence", "error",
    ]);
    for &gamma in &gammas {
        for &q in &qs {
            let p = ModelParams { gamma, q, ..base };
            let mut row: Vec<Cell> = vec![gamma.into(), q.into()];
            match p.validate().and_then(|_| spectrum(&p)) {
                Ok(r) => {
                    row.extend(r.eigenvalues.iter().flat_map(|l| [l.re.into(), l.im.into()]));
                    row.push(r.exact_root_error.into());
                    match r.cubic_roots {
                        Some(x) => row.extend(x.iter().flat_map(|x| [x.re.into(), x.im.into()])),
                        None => row.extend(std::iter::repeat_n(Cell::Empty, 6)),
                    }
                    row.push(r.discriminant.into());
                    row.push(r.coalescence.map(coalescence_label).into());
                    row.push(Cell::Empty);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(Cell::Empty, 17));
                    row.push(e.to_string().as_str().into());
                }
            }
            table.push(row);
        }
    }
    Ok(table.into())
}

fn coalescence_label(c: Coalescence) -> &'static str {
    match c {
        Coalescence::None => "none",
        Coalescence::Double => "double",
        Coalescence::Triple => "triple",
    }
}

pub fn ep_locus_cmd(c: &Common) -> Outcome_ {
    if c.grid_gamma.is_some() {
        return Err(Failure::Usage("ep-locus scans q only; drop --grid-gamma".into()));
    }
    let qs = c.grid_q.map_or_else(|| lgi::linspace(0.0, 1.0, 101), |g| g.points());
    let mut table = Table::new(&["q", "r_ep", "gamma_ep", "residual"]);
    for pt in ep_locus(&qs)? {
        table.push(vec![pt.q.into(), pt.r_ep.into(), (pt.r_ep * c.j).into(), pt.residual.into()]);
    }
    Ok(table.into())
}

pub fn bloch_traj(c: &Common, s: &SamplingArgs) -> Outcome_ {
    no_grids(c, "bloch-traj")?;
    let p = params(c)?;
    let times = sample_times(c, s)?;
    let mut table = Table::new(&["branch", "t", "R", "sy", "sz"]);
    for branch in Outcome::BOTH {
        let sol = analytic_branch(&p, branch)?;
        for &t in &times {
            match sol.normalized(t) {
                Ok((sy, sz)) => {
                    let r = sol.components(t)[0];
                    table.push(vec![branch.label().into(), t.into(), r.into(), sy.into(), sz.into()]);
                }
                Err(e) => return Ok(stopped_at(table, e, t)),
            }
        }
    }
    Ok(table.into())
}

fn outcome(s: Sign) -> Outcome {
    match s {
        Sign::Plus => Outcome::Plus,
        Sign::Minus => Outcome::Minus,
    }
}

pub fn nsit(c: &Common, a: &NsitArgs) -> Outcome_ {
    let base = params(c)?;
    let (gammas, qs) = axes(c);
    let times: Vec<Result<f64, String>> = match (c.t, a.maximize_over_t) {
        (Some(t), false) => vec![Ok(t); gammas.len() * qs.len()],
        (None, true) => sweep(&gammas, &qs, &base, &opt_config(c)?, workers(c))?
            .cells
            .into_iter()
            .map(|cell| cell.t_star.ok_or_else(|| cell.error.unwrap_or_default()))
            .collect(),
        _ => return Err(Failure::Usage("nsit needs exactly one of --t or --maximize-over-t".into())),
    };
    let (q0, q2) = (outcome(a.q0), outcome(a.q2));
    let mut table =
        Table::new(&["gamma", "q", "t", "delta_01_2", "delta_12", "delta_02", "aot_defect", "error"]);
    let coords = gammas.iter().flat_map(|&g| qs.iter().map(move |&q| (g, q)));
    for ((gamma, q), t) in coords.zip(times) {
        let mut row: Vec<Cell> = vec![gamma.into(), q.into()];
        let rep = t.and_then(|t| {
            let p = ModelParams { gamma, q, ..base };
            p.validate().and_then(|_| macrorealism_report(&p, t)).map_err(|e| e.to_string())
        });
        match rep {
            Ok(r) => {
                row.push(r.t.into());
                row.push(r.delta_0_1_2(q0, q2).into());
                row.push(r.delta_pair(1, 2, q2).into());
                row.push(r.delta_pair(0, 2, q2).into());
                row.push(r.aot.max().into());
                row.push(Cell::Empty);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Empty, 5));
                row.push(e.as_str().into());
            }
        }
        table.push(row);
    }
    Ok(table.into())
}

/// `(gamma, q, k3_max)` rows from a sweep file in either output format.
pub fn read_sweep(path: &Path) -> Result<Vec<(f64, f64, Option<f64>)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let bad = |m: String| Failure::Usage(format!("{}: {m}", path.display()));
    let (columns, rows): (Vec<String>, Vec<Vec<Option<f64>>>) = if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let columns: Vec<String> = serde_json::from_value(v["columns"].clone()).map_err(|e| bad(e.to_string()))?;
        let rows = v["rows"]
            .as_array()
            .ok_or_else(|| bad("missing rows".into()))?
            .iter()
            .map(|r| r.as_array().map(|r| r.iter().map(|x| x.as_f64()).collect()).unwrap_or_default())
            .collect();
        (columns, rows)
    } else {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(|x| x.parse::<f64>().ok()).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        (columns, rows)
    };
    let col = |name: &str| {
        columns.iter().position(|c| c == name).ok_or_else(|| bad(format!("no {name:?} column")))
    };
    let (gi, qi, ki) = (col("gamma")?, col("q")?, col("k3_max")?);
    rows.iter()
        .enumerate()
        .map(|(n, r)| {
            let get = |i: usize| r.get(i).copied().flatten();
            match (get(gi), get(qi)) {
                (Some(g), Some(q)) => Ok((g, q, get(ki))),
                _ => Err(bad(format!("row {} lacks gamma or q", n + 1))),
            }
        })
        .collect()
}

pub fn fit_check(a: &FitCheckArgs) -> Outcome_ {
    let points = read_sweep(&a.input)?;
    let published = FitCoefficients::published();
    let report = |base: LogBase| residuals_with(points.iter().copied(), &published.clone().with_base(base), a.allow_extrapolation);
    let natural = report(LogBase::Natural);
    let ten = report(LogBase::Ten);
    let median = |r: &ResidualReport| r.summary.map_or(f64::INFINITY, |s| s.median);
    let chosen = match a.log_base {
        LogBaseArg::E => &natural,
        LogBaseArg::Ten => &ten,
        LogBaseArg::Auto if median(&ten) < median(&natural) => &ten,
        LogBaseArg::Auto => &natural,
    };
    let mut table = Table::new(&["gamma", "q", "k3_computed", "k3_fit", "residual", "region"]);
    for cell in &chosen.cells {
        table.push(vec![
            cell.gamma.into(),
            cell.q.into(),
            cell.computed.into(),
            cell.fit.into(),
            cell.residual.into(),
            cell.region.label().into(),
        ]);
    }
    table.set_meta("log_base", json!(chosen.log_base.label()));
    table.set_meta("summary_log_e", json!(natural.summary));
    table.set_meta("summary_log_10", json!(ten.summary));
    Ok(table.into())
}
