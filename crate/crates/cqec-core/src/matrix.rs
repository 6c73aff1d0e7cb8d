//! Dense complex matrices and vectors sized for few-qubit Hilbert spaces.
//!
//! Storage is plain row-major `Vec<Complex64>`. Dimensions stay small
//! (2^n with n <= 12), so products are naive triple loops and the Hermitian
//! eigensolver is a cyclic Jacobi sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from explicit rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let dim = rows.len();
        assert!(
            rows.iter().all(|r| r.len() == dim),
            "rows must form a square matrix"
        );
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    dst[j] += a * row[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &CVector) -> CVector {
        assert_eq!(
            self.dim,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        let n = self.dim;
        let mut out = CVector::zeros(n);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            let row = &self.data[i * n..(i + 1) * n];
            for j in 0..n {
                acc += row[j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scaled(&self, k: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// self += k * other, used by the RK4 steppers.
    pub fn add_assign_scaled(&mut self, other: &CMatrix, k: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * k;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of A - A†.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        libm::sqrt(acc)
    }

    /// Frobenius norm of A†A - I.
    pub fn unitarity_residual(&self) -> f64 {
        let mut prod = self.dagger().matmul(self);
        for i in 0..self.dim {
            prod[(i, i)] -= C64::new(1.0, 0.0);
        }
        prod.frobenius_norm()
    }

    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (a, b) = (self.dim, rhs.dim);
        CMatrix::from_fn(a * b, |i, j| self[(i / b, j / b)] * rhs[(i % b, j % b)])
    }

    /// Extract the square sub-block with the given top-left corner and size.
    pub fn block(&self, row0: usize, col0: usize, size: usize) -> CMatrix {
        assert!(row0 + size <= self.dim && col0 + size <= self.dim);
        CMatrix::from_fn(size, |i, j| self[(row0 + i, col0 + j)])
    }

    /// Write a square sub-block at the given top-left corner.
    pub fn set_block(&mut self, row0: usize, col0: usize, b: &CMatrix) {
        assert!(row0 + b.dim <= self.dim && col0 + b.dim <= self.dim);
        for i in 0..b.dim {
            for j in 0..b.dim {
                self[(row0 + i, col0 + j)] = b[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, k: C64) -> CMatrix {
        self.scaled(k)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  [")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.3}{:+.3}i", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

/// Complex column vector.
#[derive(Clone, PartialEq, Debug)]
pub struct CVector {
    pub data: Vec<C64>,
}

impl CVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    /// Computational basis vector |index> of the given length.
    pub fn basis(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.data[index] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_slice(data: &[C64]) -> Self {
        Self {
            data: data.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    pub fn scale_mut(&mut self, k: f64) {
        for z in &mut self.data {
            *z *= k;
        }
    }

    pub fn normalized(&self) -> CVector {
        let mut v = self.clone();
        v.scale_mut(1.0 / self.norm());
        v
    }

    pub fn dot(&self, rhs: &CVector) -> C64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Outer product |self><self|.
    pub fn outer(&self) -> CMatrix {
        CMatrix::from_fn(self.len(), |i, j| self.data[i] * self.data[j].conj())
    }
}

/// acc += w * |v><v|, for ensemble averaging.
pub fn accumulate_outer(acc: &mut CMatrix, v: &CVector, w: f64) {
    let n = v.len();
    assert_eq!(acc.dim(), n);
    for i in 0..n {
        for j in 0..n {
            acc[(i, j)] += v.data[i] * v.data[j].conj() * w;
        }
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// unitary of column eigenvectors, so `A = V diag(w) V†`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-18 * scale {
                    continue;
                }
                // Unitary 2x2 rotation zeroing a_pq: G = [[c, s e^{i phi}],
                // [-s e^{-i phi}, c]] with e^{i phi} the phase of a_pq.
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;

                // A <- G† A G, applied as column then row updates.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * s * phase.conj();
                    a[(i, q)] = aip * s * phase + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * s * phase;
                    a[(q, j)] = apj * s * phase.conj() + aqj * c;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * s * phase.conj();
                    v[(i, q)] = vip * s * phase + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

/// exp(-i H t) for Hermitian H, via the eigendecomposition.
pub fn unitary_evolution(h: &CMatrix, t: f64) -> CMatrix {
    let n = h.dim();
    let (vals, vecs) = hermitian_eigen(h);
    // V diag(e^{-i w t}) V†
    let mut scaled = vecs.clone();
    for j in 0..n {
        let ph = C64::new(libm::cos(vals[j] * t), -libm::sin(vals[j] * t));
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    scaled.matmul(&vecs.dagger())
}
