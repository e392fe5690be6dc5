//! Propagators for the unnormalized hybrid master equation.
//!
//! Three engines share one contract: given `rho(0)` return the unnormalized
//! `rho(t)`. `Exact` exponentiates the vectorized Liouvillian and is the
//! reference for the other two. Normalization happens only at observation
//! points, never inside an integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jump_operator, DensityMatrix, ModelParams, DEFAULT_EPS_TRACE};
use crate::numerics::{expm, Matrix2};
use crate::spectrum::{build_liouvillian, devectorize, vectorize};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Exact,
    Kraus,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "exact" => Ok(Method::Exact),
            "kraus" => Ok(Method::Kraus),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    /// Integration step for `rk4`, or the Kraus step for `kraus`.
    pub dt: f64,
    pub t_max: f64,
    pub eps_trace: f64,
    pub method: Method,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 20.0,
            eps_trace: DEFAULT_EPS_TRACE,
            method: Method::Exact,
        }
    }
}

impl EvolveConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn rk4(dt: f64) -> Self {
        Self {
            dt,
            method: Method::Rk4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be non-negative, got {}",
                self.t_max
            )));
        }
        if !(self.eps_trace >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps_trace must be non-negative, got {}",
                self.eps_trace
            )));
        }
        Ok(())
    }
}

/// Result of an integration run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Propagated {
    pub rho: DensityMatrix,
    /// Largest anti-Hermitian part removed by per-step symmetrization.
    pub hermiticity_defect: f64,
    pub steps: usize,
}

/// Time derivative of the unnormalized state.
pub fn rhs(rho: &Matrix2, p: &ModelParams) -> Matrix2 {
    let h = p.hamiltonian();
    let l = jump_operator();
    let ld = l.adjoint();
    let ldl = ld * l;
    let i = C64::new(0.0, 1.0);
    let comm = (h * *rho - *rho * h) * (-i);
    let recycle = l * *rho * ld * p.q;
    let anti = (ldl * *rho + *rho * ldl) * 0.5;
    comm + (recycle - anti) * (2.0 * p.gamma)
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be finite and non-negative, got {t}"
        )));
    }
    Ok(())
}

/// Classical fourth-order Runge-Kutta with a shortened final step that lands
/// exactly on `t`. The state is re-symmetrized after every step.
pub fn evolve_rk4(
    rho0: &DensityMatrix,
    p: &ModelParams,
    t: f64,
    cfg: &EvolveConfig,
) -> Result<Propagated> {
    check_time(t)?;
    cfg.validate()?;
    let dt = cfg.dt;
    let full = (t / dt).floor();
    let mut remainder = t - full * dt;
    if remainder <= 1e-12 * dt {
        remainder = 0.0;
    }
    let n_full = full as usize;

    let mut rho = *rho0.matrix();
    let mut defect = 0.0f64;
    let step = |rho: &Matrix2, h: f64| -> Matrix2 {
        let k1 = rhs(rho, p);
        let k2 = rhs(&(*rho + k1 * (0.5 * h)), p);
        let k3 = rhs(&(*rho + k2 * (0.5 * h)), p);
        let k4 = rhs(&(*rho + k3 * h), p);
        *rho + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    };
    let total = n_full + usize::from(remainder > 0.0);
    for k in 0..total {
        let h = if k < n_full { dt } else { remainder };
        let next = step(&rho, h);
        if !next.is_finite() {
            return Err(Error::IntegrationDiverged { step: k });
        }
        let d = DensityMatrix::from_matrix_unchecked(next);
        defect = defect.max(d.hermiticity_defect());
        rho = d.symmetrized().into_matrix();
    }
    Ok(Propagated {
        rho: DensityMatrix::from_matrix_unchecked(rho),
        hermiticity_defect: defect,
        steps: total,
    })
}

/// `rho(t) = devec(exp(L t) vec(rho0))` with ordering `(r00, r01, r10, r11)`.
pub fn evolve_exact(rho0: &DensityMatrix, p: &ModelParams, t: f64) -> Result<DensityMatrix> {
    check_time(t)?;
    let prop = expm(&build_liouvillian(p), t)?;
    Ok(apply_propagator(&prop, rho0))
}

pub fn apply_propagator(prop: &crate::numerics::Matrix4, rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_matrix_unchecked(devectorize(&prop.mul_vec(&vectorize(rho.matrix()))))
}

/// First-order Kraus pair for one step `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausPair {
    /// `I - i H_eff dt`.
    pub no_jump: Matrix2,
    /// `sqrt(2 gamma dt) L`.
    pub jump: Matrix2,
    pub dt: f64,
}

impl KrausPair {
    pub fn new(p: &ModelParams, dt: f64) -> Self {
        let i = C64::new(0.0, 1.0);
        let no_jump = Matrix2::identity() - p.effective_hamiltonian() * (i * dt);
        let jump = jump_operator() * (2.0 * p.gamma * dt).sqrt();
        Self { no_jump, jump, dt }
    }

    /// `(|M0^+ M0 + M1^+ M1 - I|_max, |..| / dt^2)`: the defect and its
    /// second-order constant.
    pub fn completeness_defect(&self) -> (f64, f64) {
        let sum = self.no_jump.adjoint() * self.no_jump + self.jump.adjoint() * self.jump;
        let d = (sum - Matrix2::identity()).max_abs();
        (d, d / (self.dt * self.dt))
    }

    /// `M0 rho M0^+ + q M1 rho M1^+`.
    pub fn apply(&self, rho: &Matrix2, q: f64) -> Matrix2 {
        self.no_jump * *rho * self.no_jump.adjoint() + self.jump * *rho * self.jump.adjoint() * q
    }
}

pub fn kraus_step(rho: &DensityMatrix, p: &ModelParams, dt: f64) -> Result<DensityMatrix> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("Kraus step must be positive, got {dt}")));
    }
    let pair = KrausPair::new(p, dt);
    Ok(DensityMatrix::from_matrix_unchecked(pair.apply(rho.matrix(), p.q)))
}

/// Iterates the Kraus map `round(t / dt)` times (the last step is shortened to
/// land on `t`).
pub fn evolve_kraus(rho0: &DensityMatrix, p: &ModelParams, t: f64, dt: f64) -> Result<Propagated> {
    check_time(t)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("Kraus step must be positive, got {dt}")));
    }
    let full = (t / dt).floor();
    let rem = t - full * dt;
    let pair = KrausPair::new(p, dt);
    let mut rho = *rho0.matrix();
    let mut steps = 0usize;
    for k in 0..(full as usize) {
        rho = pair.apply(&rho, p.q);
        if !rho.is_finite() {
            return Err(Error::IntegrationDiverged { step: k });
        }
        steps += 1;
    }
    if rem > 1e-12 * dt {
        rho = KrausPair::new(p, rem).apply(&rho, p.q);
        steps += 1;
    }
    Ok(Propagated {
        rho: DensityMatrix::from_matrix_unchecked(rho),
        hermiticity_defect: 0.0,
        steps,
    })
}

/// Dispatches on `cfg.method`.
pub fn evolve(rho0: &DensityMatrix, p: &ModelParams, t: f64, cfg: &EvolveConfig) -> Result<DensityMatrix> {
    match cfg.method {
        Method::Exact => evolve_exact(rho0, p, t),
        Method::Rk4 => evolve_rk4(rho0, p, t, cfg).map(|r| r.rho),
        Method::Kraus => evolve_kraus(rho0, p, t, cfg.dt).map(|r| r.rho),
    }
}
