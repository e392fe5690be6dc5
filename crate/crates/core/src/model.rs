//! States, parameters and the fixed measurement apparatus.
//!
//! Basis ordering is `(|up>, |down>)`, so the jump operator `L = |up><down|`
//! has its single nonzero entry at `(0, 1)` and `L^+ L = |down><down|`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix2;
use crate::C64;

/// Default normalization guard on `Tr[rho]`.
pub const DEFAULT_EPS_TRACE: f64 = 1e-12;

const HERMITICITY_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity() -> Matrix2 {
    Matrix2::identity()
}

pub fn sigma_x() -> Matrix2 {
    Matrix2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn sigma_y() -> Matrix2 {
    Matrix2::from_rows([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn sigma_z() -> Matrix2 {
    Matrix2::from_real([[1.0, 0.0], [0.0, -1.0]])
}

/// Jump operator `|up><down|`.
pub fn jump_operator() -> Matrix2 {
    Matrix2::from_real([[0.0, 1.0], [0.0, 0.0]])
}

/// Outcome of a projective `sigma_y` measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        }
    }

    /// Projector `|+-y><+-y|` with `|+y> = (|up> + i|down>)/sqrt(2)`.
    pub fn projector(self) -> Matrix2 {
        let s = self.sign();
        Matrix2::from_rows([[c(0.5, 0.0), c(0.0, -0.5 * s)], [c(0.0, 0.5 * s), c(0.5, 0.0)]])
    }
}

/// Model parameters `(J, theta, gamma, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coherent energy scale; time is measured in units of `1/J`.
    pub j: f64,
    /// Hamiltonian orientation in radians.
    pub theta: f64,
    /// Dissipation rate.
    pub gamma: f64,
    /// Detector efficiency: fraction of jump trajectories retained.
    pub q: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            j: 1.0,
            theta: FRAC_PI_2,
            gamma: 0.0,
            q: 1.0,
        }
    }
}

impl ModelParams {
    /// Validated parameters with `J = 1` and `theta = pi/2`.
    pub fn new(gamma: f64, q: f64) -> Result<Self> {
        Self::with_all(1.0, FRAC_PI_2, gamma, q)
    }

    pub fn with_all(j: f64, theta: f64, gamma: f64, q: f64) -> Result<Self> {
        let p = Self { j, theta, gamma, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.j.is_finite() && self.j > 0.0) {
            return bad(format!("J must be positive, got {}", self.j));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return bad(format!("q must lie in [0, 1], got {}", self.q));
        }
        if !(self.theta.is_finite() && (0.0..2.0 * PI).contains(&self.theta)) {
            return bad(format!("theta must lie in [0, 2 pi), got {}", self.theta));
        }
        Ok(())
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_q(self, q: f64) -> Self {
        Self { q, ..self }
    }

    /// `gamma / J`.
    pub fn ratio(&self) -> f64 {
        self.gamma / self.j
    }

    pub fn is_half_pi(&self) -> bool {
        (self.theta - FRAC_PI_2).abs() <= 1e-12
    }

    /// `H = -(J/2)(sin(theta) sx + cos(theta) sz)`.
    pub fn hamiltonian(&self) -> Matrix2 {
        // cos(pi/2) is not exactly zero in floating point
        let (s, c) = if self.theta == FRAC_PI_2 {
            (1.0, 0.0)
        } else {
            self.theta.sin_cos()
        };
        (sigma_x() * s + sigma_z() * c) * (-0.5 * self.j)
    }

    /// `H_eff = H - i gamma L^+ L`.
    pub fn effective_hamiltonian(&self) -> Matrix2 {
        let l = jump_operator();
        self.hamiltonian() - (l.adjoint() * l) * c(0.0, self.gamma)
    }
}

/// 2x2 density matrix, not necessarily of unit trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(Matrix2);

impl DensityMatrix {
    /// Validates Hermiticity, real trace and positivity (up to `1e-9` slack).
    pub fn new(m: Matrix2) -> Result<Self> {
        let rho = Self(m);
        let defect = rho.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let (lo, _) = rho.eigenvalues();
        if lo < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(rho)
    }

    /// Wraps a matrix produced by the propagators without validation.
    pub fn from_matrix_unchecked(m: Matrix2) -> Self {
        Self(m)
    }

    /// Initial state `|+y><+y|`.
    pub fn plus_y() -> Self {
        Self(Outcome::Plus.projector())
    }

    pub fn minus_y() -> Self {
        Self(Outcome::Minus.projector())
    }

    pub fn up() -> Self {
        Self(Matrix2::from_real([[1.0, 0.0], [0.0, 0.0]]))
    }

    pub fn down() -> Self {
        Self(Matrix2::from_real([[0.0, 0.0], [0.0, 1.0]]))
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix2 {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr[rho A]`, real part.
    pub fn expectation(&self, op: &Matrix2) -> f64 {
        (self.0 * *op).trace().re
    }

    /// `max |rho - rho^+| / 2`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).max_abs() * 0.5
    }

    /// `(rho + rho^+) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self((self.0 + self.0.adjoint()) * 0.5)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let h = self.symmetrized().0;
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let off = h[(0, 1)].norm();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        (mid - rad, mid + rad)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0 * s)
    }
}

/// Trace and unnormalized Bloch vector: `rho = (R/2) I + (1/2) S . sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub r: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl BlochState {
    pub fn new(r: f64, sx: f64, sy: f64, sz: f64) -> Result<Self> {
        let b = Self { r, sx, sy, sz };
        if ![r, sx, sy, sz].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite Bloch state {b:?}")));
        }
        if b.length_sq() > r * r + 1e-9 || r < 0.0 {
            return Err(Error::InvalidState(format!(
                "Bloch vector outside the cone |S| <= R: {b:?}"
            )));
        }
        Ok(b)
    }

    pub fn length_sq(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }

    /// Normalized components `S / R`.
    pub fn normalized(&self) -> [f64; 3] {
        [self.sx / self.r, self.sy / self.r, self.sz / self.r]
    }
}

pub fn bloch_decompose(rho: &DensityMatrix) -> BlochState {
    BlochState {
        r: rho.trace(),
        sx: rho.expectation(&sigma_x()),
        sy: rho.expectation(&sigma_y()),
        sz: rho.expectation(&sigma_z()),
    }
}

pub fn bloch_compose(b: &BlochState) -> DensityMatrix {
    let m = identity() * (0.5 * b.r)
        + sigma_x() * (0.5 * b.sx)
        + sigma_y() * (0.5 * b.sy)
        + sigma_z() * (0.5 * b.sz);
    DensityMatrix(m)
}

/// `rho / Tr[rho]`, or a trajectory-extinguished error when the trace is below
/// `eps_trace`.
pub fn normalize(rho: &DensityMatrix, eps_trace: f64) -> Result<DensityMatrix> {
    let tr = rho.trace();
    if !tr.is_finite() || tr < eps_trace {
        return Err(Error::TrajectoryExtinguished {
            trace: tr,
            branch: None,
        });
    }
    Ok(rho.scaled(1.0 / tr))
}
