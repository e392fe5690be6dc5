//! Vectorized Liouvillian, its spectrum, and the exceptional-point locus.
//!
//! Vectorization is row-major, `|rho>> = (r00, r01, r10, r11)`, so that
//! `vec(A rho B) = (A kron B^T) vec(rho)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{identity, jump_operator, DensityMatrix, ModelParams};
use crate::numerics::{
    eigenvalues_4x4, kron2, solve_cubic_cardano, CubicCoefficients, CubicRoots, Matrix2, Matrix4,
};
use crate::C64;

/// Root-gap threshold used to call a coalescence.
pub const COALESCENCE_GAP: f64 = 1e-6;

pub fn vectorize(rho: &Matrix2) -> [C64; 4] {
    [rho[(0, 0)], rho[(0, 1)], rho[(1, 0)], rho[(1, 1)]]
}

pub fn devectorize(v: &[C64; 4]) -> Matrix2 {
    Matrix2::from_rows([[v[0], v[1]], [v[2], v[3]]])
}

/// Generator of the unnormalized dynamics as a 4x4 matrix.
pub fn build_liouvillian(p: &ModelParams) -> Matrix4 {
    let h = p.hamiltonian();
    let l = jump_operator();
    let ldl = l.adjoint() * l;
    let id = identity();
    let i = C64::new(0.0, 1.0);
    let coherent = (kron2(&h, &id) - kron2(&id, &h.transpose())) * (-i);
    let conj_l = Matrix2::from_fn(|r, c| l[(r, c)].conj());
    let recycle = kron2(&l, &conj_l) * p.q;
    let anti = (kron2(&ldl, &id) + kron2(&id, &ldl.transpose())) * 0.5;
    coherent + (recycle - anti) * (2.0 * p.gamma)
}

/// Coefficients `(3r, 2r^2 + 1, r(1 - q))` of the cubic whose roots, times
/// `J`, are the eigenvalues other than `-gamma`.
pub fn characteristic_cubic(r: f64, q: f64) -> CubicCoefficients {
    CubicCoefficients::real(3.0 * r, 2.0 * r * r + 1.0, r * (1.0 - q))
}

/// `4 (r^2 - 1)^3 - 27 q^2 r^2`.
pub fn discriminant(r: f64, q: f64) -> f64 {
    let s = r * r - 1.0;
    4.0 * s * s * s - 27.0 * q * q * r * r
}

/// The same condition in dimensional form, `4 (gamma^2 - J^2)^3 - 27 q^2 gamma^2 J^4`.
pub fn exceptional_boundary(gamma: f64, j: f64, q: f64) -> f64 {
    let s = gamma * gamma - j * j;
    4.0 * s * s * s - 27.0 * q * q * gamma * gamma * j.powi(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpLocusPoint {
    pub q: f64,
    pub r_ep: f64,
    /// `|discriminant(r_ep, q)|`.
    pub residual: f64,
}

/// The unique `r >= 1` where the discriminant vanishes.
pub fn ep_radius(q: f64) -> Result<EpLocusPoint> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q must lie in [0, 1], got {q}")));
    }
    if q == 0.0 {
        return Ok(EpLocusPoint { q, r_ep: 1.0, residual: 0.0 });
    }
    // discriminant(1, q) = -27 q^2 < 0 and grows like 4 r^6
    let mut lo = 1.0f64;
    let mut hi = 1.0 + (108.0 * q * q).cbrt();
    while discriminant(hi, q) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if discriminant(mid, q) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (dl, dh) = (discriminant(lo, q).abs(), discriminant(hi, q).abs());
    let (r_ep, residual) = if dh <= dl { (hi, dh) } else { (lo, dl) };
    Ok(EpLocusPoint { q, r_ep, residual })
}

/// `ep_radius` over a grid; output order follows `qs`.
pub fn ep_locus(qs: &[f64]) -> Result<Vec<EpLocusPoint>> {
    qs.par_iter().map(|&q| ep_radius(q)).collect()
}

/// How many of the three cubic roots sit within [`COALESCENCE_GAP`] of each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coalescence {
    None,
    Double,
    Triple,
}

pub fn coalescence(roots: &[C64; 3], threshold: f64) -> Coalescence {
    let close = |a: C64, b: C64| (a - b).norm() < threshold * a.norm().max(b.norm()).max(1.0);
    let pairs = [
        close(roots[0], roots[1]),
        close(roots[0], roots[2]),
        close(roots[1], roots[2]),
    ];
    match pairs.iter().filter(|&&b| b).count() {
        0 => Coalescence::None,
        1 => Coalescence::Double,
        _ => Coalescence::Triple,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub params: ModelParams,
    /// Eigenvalues of the Liouvillian, sorted by real then imaginary part.
    pub eigenvalues: [C64; 4],
    /// Distance from `-gamma` to the nearest eigenvalue.
    pub exact_root_error: f64,
    pub exact_root: bool,
    /// Roots of the characteristic cubic in units of `J`; `None` unless
    /// `theta = pi/2`.
    pub cubic_roots: Option<[C64; 3]>,
    /// Degeneracy markers for the root pairs `(0,1), (0,2), (1,2)`.
    pub degeneracy: Option<[bool; 3]>,
    pub coalescence: Option<Coalescence>,
    pub discriminant: Option<f64>,
}

pub fn spectrum(p: &ModelParams) -> Result<SpectrumReport> {
    p.validate()?;
    let eigenvalues = eigenvalues_4x4(&build_liouvillian(p))
        .map_err(|e| relabel(e, p))?;
    let target = C64::new(-p.gamma, 0.0);
    let exact_root_error = eigenvalues
        .iter()
        .map(|&l| (l - target).norm())
        .fold(f64::INFINITY, f64::min);
    let scale = p.j.max(p.gamma);
    let (cubic_roots, degeneracy, coal, disc) = if p.is_half_pi() {
        let r = p.ratio();
        let roots: CubicRoots = solve_cubic_cardano(&characteristic_cubic(r, p.q))?;
        (
            Some(roots.roots),
            Some(roots.degenerate),
            Some(coalescence(&roots.roots, COALESCENCE_GAP)),
            Some(discriminant(r, p.q)),
        )
    } else {
        (None, None, None, None)
    };
    Ok(SpectrumReport {
        params: *p,
        eigenvalues,
        exact_root_error,
        exact_root: exact_root_error <= 1e-10 * scale.max(1.0),
        cubic_roots,
        degeneracy,
        coalescence: coal,
        discriminant: disc,
    })
}

fn relabel(e: Error, p: &ModelParams) -> Error {
    match e {
        Error::NoConvergence { iterations, .. } => Error::NoConvergence {
            matrix: format!(
                "Liouvillian(J={}, theta={}, gamma={}, q={})",
                p.j, p.theta, p.gamma, p.q
            ),
            iterations,
        },
        other => other,
    }
}

/// Slowest-decaying eigenmode of the Liouvillian, scaled to unit trace.
///
/// At `q = 1` this is the stationary state; for `q < 1` it is the long-time
/// limit of the normalized state.
pub fn dominant_mode(p: &ModelParams) -> Result<(C64, DensityMatrix)> {
    let l = build_liouvillian(p);
    let eig = eigenvalues_4x4(&l).map_err(|e| relabel(e, p))?;
    let lead = eig
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .expect("four eigenvalues");
    let shifted = l - Matrix4::identity() * lead;
    // replace one equation by the trace constraint, keep the best-conditioned
    let mut best: Option<([C64; 4], f64)> = None;
    for k in 0..4 {
        let mut a = shifted;
        for c in 0..4 {
            a[(k, c)] = C64::new(0.0, 0.0);
        }
        a[(k, 0)] = C64::new(1.0, 0.0);
        a[(k, 3)] = C64::new(1.0, 0.0);
        let mut rhs = [C64::new(0.0, 0.0); 4];
        rhs[k] = C64::new(1.0, 0.0);
        if let Some(v) = solve_vec(&a, &rhs) {
            let res = shifted.mul_vec(&v).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if best.as_ref().is_none_or(|(_, r)| res < *r) {
                best = Some((v, res));
            }
        }
    }
    let (v, _) = best.ok_or_else(|| Error::NoConvergence {
        matrix: "dominant eigenmode".into(),
        iterations: 4,
    })?;
    let rho = DensityMatrix::from_matrix_unchecked(devectorize(&v)).symmetrized();
    Ok((lead, rho))
}

/// Stationary state of the trace-preserving (`q = 1`) dynamics.
pub fn steady_state(p: &ModelParams) -> Result<DensityMatrix> {
    if p.q != 1.0 {
        return Err(Error::Unsupported(format!(
            "a stationary state exists only at q = 1, got q = {}",
            p.q
        )));
    }
    dominant_mode(p).map(|(_, rho)| rho)
}

fn solve_vec(a: &Matrix4, b: &[C64; 4]) -> Option<[C64; 4]> {
    let rhs = Matrix4::from_fn(|i, j| if j == 0 { b[i] } else { C64::new(0.0, 0.0) });
    a.solve(&rhs).map(|x| std::array::from_fn(|i| x[(i, 0)]))
}
