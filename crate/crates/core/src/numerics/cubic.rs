//! Closed-form roots of monic complex cubics by Cardano's method.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root gaps below `DEGENERACY_GAP * max(1, |x|)` are flagged as coalesced.
pub const DEGENERACY_GAP: f64 = 1e-7;

/// Monic cubic `x^3 + a x^2 + b x + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients {
    pub a: C64,
    pub b: C64,
    pub c: C64,
}

/// Intermediates of the Cardano construction, kept for inspection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardanoTerms {
    /// Depressed-cubic linear coefficient `(3b - a^2) / 3`.
    pub p: C64,
    /// Depressed-cubic constant `(2a^3 - 9ab + 27c) / 27`.
    pub q: C64,
    pub u: C64,
    pub v: C64,
    pub omega: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicRoots {
    /// Sorted by real part, then imaginary part.
    pub roots: [C64; 3],
    pub terms: CardanoTerms,
    /// `degenerate[k]` flags the pair `(0,1)`, `(0,2)`, `(1,2)` for `k = 0, 1, 2`.
    pub degenerate: [bool; 3],
    pub min_gap: f64,
}

impl CubicRoots {
    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }
}

impl CubicCoefficients {
    pub fn new(a: C64, b: C64, c: C64) -> Self {
        Self { a, b, c }
    }

    pub fn real(a: f64, b: f64, c: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0))
    }

    pub fn eval(&self, x: C64) -> C64 {
        ((x + self.a) * x + self.b) * x + self.c
    }

    fn is_finite(&self) -> bool {
        [self.a, self.b, self.c]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Coefficients of `(x - r0)(x - r1)(x - r2)`.
    pub fn from_roots(r: &[C64; 3]) -> Self {
        Self {
            a: -(r[0] + r[1] + r[2]),
            b: r[0] * r[1] + r[0] * r[2] + r[1] * r[2],
            c: -(r[0] * r[1] * r[2]),
        }
    }
}

/// Three roots of a monic cubic, `x_k = w^k u + w^{2k} v - a/3` with
/// `w = exp(2 pi i / 3)`.
///
/// `u` is the principal cube root of whichever of `-Q/2 +- sqrt(Q^2/4 + P^3/27)`
/// has larger modulus, and `v` is paired with it through `u v = -P/3`. Taking
/// `v` as an independent cube root picks the wrong branch near a vanishing
/// discriminant.
pub fn solve_cubic_cardano(coeffs: &CubicCoefficients) -> Result<CubicRoots> {
    if !coeffs.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cubic coefficients must be finite, got {coeffs:?}"
        )));
    }
    let CubicCoefficients { a, b, c } = *coeffs;
    let p = (3.0 * b - a * a) / 3.0;
    let q = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 27.0;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let plus = -q / 2.0 + disc;
    let minus = -q / 2.0 - disc;
    let (w_u, w_v) = if plus.norm() >= minus.norm() {
        (plus, minus)
    } else {
        (minus, plus)
    };
    let zero = C64::new(0.0, 0.0);
    let u = if w_u == zero { zero } else { w_u.cbrt() };
    let v = if u == zero {
        zero
    } else {
        // Exact pairing; among the three cube roots of w_v this is the one
        // minimizing |u v + P/3|.
        let paired = -p / (3.0 * u);
        pick_cube_root(w_v, paired)
    };
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let omega2 = omega * omega;
    let shift = a / 3.0;
    let mut roots = [
        u + v - shift,
        omega * u + omega2 * v - shift,
        omega2 * u + omega * v - shift,
    ];
    roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));

    let (degenerate, min_gap) = degeneracy(&roots);
    Ok(CubicRoots {
        roots,
        terms: CardanoTerms {
            p,
            q,
            u,
            v,
            omega,
        },
        degenerate,
        min_gap,
    })
}

/// `paired` is exact in real arithmetic; it is only replaced by a cube root of
/// `w` if that root satisfies the pairing better in floating point.
fn pick_cube_root(w: C64, paired: C64) -> C64 {
    if w == C64::new(0.0, 0.0) {
        return paired;
    }
    let principal = w.cbrt();
    let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
    let candidates = [principal, principal * omega, principal * omega * omega];
    let best = candidates
        .into_iter()
        .min_by(|x, y| (x - paired).norm().total_cmp(&(y - paired).norm()))
        .unwrap_or(principal);
    // The subtraction that produced `w` can lose all relative precision; only
    // trust the candidate when it agrees with the paired value.
    if (best - paired).norm() <= 1e-12 * paired.norm().max(f64::MIN_POSITIVE) {
        best
    } else {
        paired
    }
}

fn degeneracy(roots: &[C64; 3]) -> ([bool; 3], f64) {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut flags = [false; 3];
    let mut min_gap = f64::INFINITY;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let gap = (roots[i] - roots[j]).norm();
        let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
        flags[k] = gap < DEGENERACY_GAP * scale;
        min_gap = min_gap.min(gap);
    }
    (flags, min_gap)
}
