//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (Higham 2005, degrees 3 to 13 selected by the 1-norm).

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(M t)`. Returns the identity exactly for `t == 0`.
pub fn expm<const N: usize>(m: &ComplexMatrix<N>, t: f64) -> Result<ComplexMatrix<N>> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagation time must be finite and non-negative, got {t}"
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidParameter(
            "matrix exponential of a non-finite matrix".into(),
        ));
    }
    if t == 0.0 {
        return Ok(ComplexMatrix::identity());
    }
    Ok(expm_unit(&m.scale_real(t)))
}

fn expm_unit<const N: usize>(a: &ComplexMatrix<N>) -> ComplexMatrix<N> {
    let norm = a.norm1();
    let id = ComplexMatrix::<N>::identity();
    let a2 = *a * *a;
    for &(deg, theta) in &THETA {
        if norm <= theta {
            return match deg {
                3 => pade_low(a, &a2, &B3),
                5 => pade_low(a, &a2, &B5),
                7 => pade_low(a, &a2, &B7),
                _ => pade_low(a, &a2, &B9),
            };
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(s));
    let a2 = scaled * scaled;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let b = &B13;
    let u_inner = a6.scale_real(b[13]) + a4.scale_real(b[11]) + a2.scale_real(b[9]);
    let u = scaled
        * (a6 * u_inner
            + a6.scale_real(b[7])
            + a4.scale_real(b[5])
            + a2.scale_real(b[3])
            + id.scale_real(b[1]));
    let v_inner = a6.scale_real(b[12]) + a4.scale_real(b[10]) + a2.scale_real(b[8]);
    let v = a6 * v_inner
        + a6.scale_real(b[6])
        + a4.scale_real(b[4])
        + a2.scale_real(b[2])
        + id.scale_real(b[0]);
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = r * r;
    }
    r
}

/// Degree `m = coeffs.len() - 1` (odd) Padé approximant of `exp(a)`.
fn pade_low<const N: usize>(
    a: &ComplexMatrix<N>,
    a2: &ComplexMatrix<N>,
    coeffs: &[f64],
) -> ComplexMatrix<N> {
    let mut u = ComplexMatrix::<N>::zeros();
    let mut v = ComplexMatrix::<N>::zeros();
    let mut pow = ComplexMatrix::<N>::identity();
    for k in (0..coeffs.len()).step_by(2) {
        v = v + pow.scale_real(coeffs[k]);
        if k + 1 < coeffs.len() {
            u = u + pow.scale_real(coeffs[k + 1]);
        }
        pow = pow * *a2;
    }
    let u = *a * u;
    pade_solve(&u, &v)
}

fn pade_solve<const N: usize>(u: &ComplexMatrix<N>, v: &ComplexMatrix<N>) -> ComplexMatrix<N> {
    let p = *v + *u;
    let q = *v - *u;
    // q is well conditioned for the norms admitted above
    q.solve(&p)
        .unwrap_or_else(|| ComplexMatrix::from_fn(|_, _| C64::new(f64::NAN, f64::NAN)))
}
