use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Dense `N x N` complex matrix stored row-major on the stack.
///
/// Only the small sizes this crate needs (2, 3 and 4) are used in practice,
/// but nothing here depends on that.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix<const N: usize> {
    #[serde(with = "rows")]
    data: [[C64; N]; N],
}

pub type Matrix2 = ComplexMatrix<2>;
pub type Matrix3 = ComplexMatrix<3>;
pub type Matrix4 = ComplexMatrix<4>;

impl<const N: usize> ComplexMatrix<N> {
    pub const DIM: usize = N;

    pub fn zeros() -> Self {
        Self {
            data: [[C64::new(0.0, 0.0); N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.data[i][i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(data: [[C64; N]; N]) -> Self {
        Self { data }
    }

    /// Builds a complex matrix from real entries.
    pub fn from_real(data: [[f64; N]; N]) -> Self {
        Self::from_fn(|i, j| C64::new(data[i][j], 0.0))
    }

    pub fn from_diagonal(diag: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.data[i][i] = d;
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> &[[C64; N]; N] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        self.data.get(i).and_then(|row| row.get(j)).copied()
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.data[i][j] * s)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.data[j][i])
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.data[i][i]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..N)
            .map(|j| (0..N).map(|i| self.data[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul_vec(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [C64::new(0.0, 0.0); N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.data[i][j] * v[j]).sum();
        }
        out
    }

    /// Solves `self * X = rhs` by LU factorisation with partial pivoting.
    /// Returns `None` if a pivot vanishes.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let mut a = self.data;
        let mut b = rhs.data;
        for k in 0..N {
            let piv = (k..N)
                .max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm()))
                .unwrap_or(k);
            if a[piv][k].norm() == 0.0 {
                return None;
            }
            a.swap(k, piv);
            b.swap(k, piv);
            for i in (k + 1)..N {
                let f = a[i][k] / a[k][k];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..N {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
                for j in 0..N {
                    let bkj = b[k][j];
                    b[i][j] -= f * bkj;
                }
            }
        }
        for col in 0..N {
            for i in (0..N).rev() {
                let mut s = b[i][col];
                for j in (i + 1)..N {
                    s -= a[i][j] * b[j][col];
                }
                b[i][col] = s / a[i][i];
            }
        }
        Some(Self { data: b })
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> C64 {
        let mut a = self.data;
        let mut det = C64::new(1.0, 0.0);
        for k in 0..N {
            let piv = (k..N)
                .max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm()))
                .unwrap_or(k);
            if a[piv][k].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if piv != k {
                a.swap(k, piv);
                det = -det;
            }
            det *= a[k][k];
            for i in (k + 1)..N {
                let f = a[i][k] / a[k][k];
                for j in k..N {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
            }
        }
        det
    }
}

impl<const N: usize> Default for ComplexMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for ComplexMatrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for ComplexMatrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i][j]
    }
}

impl<const N: usize> Add for ComplexMatrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] + rhs.data[i][j])
    }
}

impl<const N: usize> Sub for ComplexMatrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.data[i][j] - rhs.data[i][j])
    }
}

impl<const N: usize> Neg for ComplexMatrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.data[i][j])
    }
}

impl<const N: usize> Mul for ComplexMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.data[i][k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..N {
                    out.data[i][j] += a * rhs.data[k][j];
                }
            }
        }
        out
    }
}

impl<const N: usize> Mul<C64> for ComplexMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<f64> for ComplexMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_real(rhs)
    }
}

/// Kronecker product of two 2x2 matrices.
pub fn kron2(a: &Matrix2, b: &Matrix2) -> Matrix4 {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

// serde has no const-generic array support; go through nested Vecs.
mod rows {
    use num_complex::Complex64 as C64;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        data: &[[C64; N]; N],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<C64>> = data.iter().map(|r| r.to_vec()).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<[[C64; N]; N], D::Error> {
        let v: Vec<Vec<C64>> = Vec::deserialize(d)?;
        if v.len() != N || v.iter().any(|r| r.len() != N) {
            return Err(D::Error::custom(format!("expected a {N}x{N} matrix")));
        }
        let mut out = [[C64::new(0.0, 0.0); N]; N];
        for (i, row) in v.into_iter().enumerate() {
            for (j, z) in row.into_iter().enumerate() {
                out[i][j] = z;
            }
        }
        Ok(out)
    }
}
