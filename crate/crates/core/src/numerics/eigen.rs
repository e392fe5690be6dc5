//! Eigenvalues of small dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by explicitly
//! shifted QR sweeps (Wilkinson shift, Givens rotations) with deflation from
//! the bottom of the active block. Only eigenvalues are produced, so each
//! sweep acts on the active diagonal block alone.

use num_complex::Complex64 as C64;

use super::matrix::{ComplexMatrix, Matrix4};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of `m` sorted by real part, then imaginary part.
pub fn eigenvalues<const N: usize>(m: &ComplexMatrix<N>) -> Result<[C64; N]> {
    if !m.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "matrix with non-finite entries: {m:?}"
        )));
    }
    let mut h = *m.rows();
    hessenberg(&mut h);
    let norm = m.max_abs().max(f64::MIN_POSITIVE);

    let mut eig = [C64::new(0.0, 0.0); N];
    if N == 0 {
        return Ok(eig);
    }
    let mut hi = N - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        // Look for a negligible subdiagonal entry inside the active block.
        let mut lo = hi;
        while lo > 0 {
            let s = h[lo - 1][lo - 1].norm() + h[lo][lo].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[lo][lo - 1].norm() <= f64::EPSILON * s {
                h[lo][lo - 1] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            sweeps = 0;
            continue;
        }
        if sweeps >= MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::NoConvergence {
                matrix: format!("{N}x{N} matrix {:?}", m.rows()),
                iterations: total,
            });
        }
        let shift = if sweeps > 0 && sweeps.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[hi][hi] + C64::new(h[hi][hi - 1].norm(), 0.0) * 0.75
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        qr_sweep(&mut h, lo, hi, shift);
        sweeps += 1;
        total += 1;
    }
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(eig)
}

/// Eigenvalues of a 4x4 complex matrix, sorted by (real, imaginary).
pub fn eigenvalues_4x4(m: &Matrix4) -> Result<[C64; 4]> {
    eigenvalues(m)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let mu1 = (a + d) * 0.5 + root;
    let mu2 = (a + d) * 0.5 - root;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn hessenberg<const N: usize>(h: &mut [[C64; N]; N]) {
    if N < 3 {
        return;
    }
    for k in 0..(N - 2) {
        let alpha: f64 = ((k + 1)..N).map(|i| h[i][k].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = h[k + 1][k];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let mut v = [C64::new(0.0, 0.0); N];
        for i in (k + 1)..N {
            v[i] = h[i][k];
        }
        v[k + 1] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2 v v^H / |v|^2) H (I - 2 v v^H / |v|^2)
        for j in 0..N {
            let s: C64 = ((k + 1)..N).map(|i| v[i].conj() * h[i][j]).sum();
            let f = s * (2.0 / vnorm2);
            for i in (k + 1)..N {
                h[i][j] -= v[i] * f;
            }
        }
        for row in h.iter_mut() {
            let s: C64 = ((k + 1)..N).map(|j| row[j] * v[j]).sum();
            let f = s * (2.0 / vnorm2);
            for j in (k + 1)..N {
                row[j] -= f * v[j].conj();
            }
        }
        for i in (k + 2)..N {
            h[i][k] = C64::new(0.0, 0.0);
        }
    }
}

/// One shifted QR step `H - mu I = QR`, `H <- RQ + mu I` on rows/cols `lo..=hi`.
fn qr_sweep<const N: usize>(h: &mut [[C64; N]; N], lo: usize, hi: usize, mu: C64) {
    for i in lo..=hi {
        h[i][i] -= mu;
    }
    let mut rotations: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[k][k];
        let y = h[k + 1][k];
        let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        // G = [[conj(c), conj(s)], [-s, c]] maps (x, y) to (r, 0).
        for j in k..=hi {
            let a = h[k][j];
            let b = h[k + 1][j];
            h[k][j] = c.conj() * a + s.conj() * b;
            h[k + 1][j] = -s * a + c * b;
        }
        rotations.push((c, s));
    }
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        // right-multiply by G^H = [[c, -conj(s)], [s, conj(c)]]
        let top = (k + 2).min(hi);
        for row in h.iter_mut().take(top + 1).skip(lo) {
            let a = row[k];
            let b = row[k + 1];
            row[k] = a * c + b * s;
            row[k + 1] = -a * s.conj() + b * c.conj();
        }
    }
    for i in lo..=hi {
        h[i][i] += mu;
    }
}
