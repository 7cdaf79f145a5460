//! Small dense complex linear algebra.
//!
//! Everything in the pipeline works on tiny matrices (antenna counts of 2–4,
//! Newton systems of a few hundred rows), so the implementations here are
//! straightforward dense loops: Hermitian Cholesky, cyclic Jacobi
//! eigendecomposition, and a real symmetric solve for Newton steps.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    /// Outer product `h h^H`.
    pub fn outer(h: &[Complex64]) -> Self {
        Self::from_fn(h.len(), h.len(), |i, j| h[i] * h[j].conj())
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(s, 0.0);
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `A B A^H` (congruence transform); used for interference covariances.
    pub fn congruence(&self, inner: &Self) -> Self {
        self.matmul(inner).matmul(&self.adjoint())
    }

    /// Quadratic form `h^H A h`; real part only (exact for Hermitian `A`).
    pub fn quad_form(&self, h: &[Complex64]) -> f64 {
        debug_assert_eq!(self.rows, h.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += h[i].conj() * self[(i, j)] * h[j];
            }
        }
        acc.re
    }

    /// Real inner product `Re tr(self^H · other)`; the Frobenius pairing.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::fmath::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.re.abs().max(z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Symmetrize in place: `(A + A^H)/2`. Cheap guard before factorizations.
    pub fn hermitianize(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
            let d = self[(i, i)].re;
            self[(i, i)] = Complex64::new(d, 0.0);
        }
    }

    /// Cholesky factor `L` with `A = L L^H`; `None` when not positive definite.
    pub fn cholesky(&self) -> Option<Cholesky> {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut sum = self[(j, j)].re;
            for k in 0..j {
                sum -= l[(j, k)].norm_sqr();
            }
            if !(sum > 0.0) || !sum.is_finite() {
                return None;
            }
            let d = crate::fmath::sqrt(sum);
            l[(j, j)] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut acc = self[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = acc / d;
            }
        }
        Some(Cholesky { l })
    }

    /// Hermitian eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matching unit
    /// eigenvectors as the columns of the second value.
    pub fn eigen_hermitian(&self) -> (Vec<f64>, CMat) {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        a.hermitianize();
        let mut v = CMat::identity(n);
        let scale = a.frobenius_norm().max(1.0);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if crate::fmath::sqrt(off) <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let m = apq.norm();
                    if m <= 1e-300 {
                        continue;
                    }
                    let phase = apq / m;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * m);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + crate::fmath::sqrt(1.0 + tau * tau))
                    } else {
                        -1.0 / (-tau + crate::fmath::sqrt(1.0 + tau * tau))
                    };
                    let c = 1.0 / crate::fmath::sqrt(1.0 + t * t);
                    let s = phase * (t * c);
                    // A <- J^H A J with J = I except J[p][p]=c, J[p][q]=s,
                    // J[q][p]=-conj(s), J[q][q]=c.
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * c - akq * s.conj();
                        a[(k, q)] = akp * s + akq * c;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * c - aqk * s;
                        a[(q, k)] = apk * s.conj() + aqk * c;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - vkq * s.conj();
                        v[(k, q)] = vkp * s + vkq * c;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
        (values, vectors)
    }

    /// Minimum eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen_hermitian().0[0]
    }

    /// Hermitian square root via eigendecomposition, clipping tiny negative
    /// eigenvalues to zero.
    pub fn sqrt_psd(&self) -> CMat {
        let (vals, vecs) = self.eigen_hermitian();
        let n = self.rows;
        let mut out = CMat::zeros(n, n);
        for k in 0..n {
            let lam = crate::fmath::sqrt(vals[k].max(0.0));
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj() * lam;
                }
            }
        }
        out
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.l.rows
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                y[i] = y[i] - lik * y[k];
            }
            y[i] /= self.l[(i, i)].re;
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[(k, i)].conj();
                y[i] = y[i] - lki * y[k];
            }
            y[i] /= self.l[(i, i)].re;
        }
        y
    }

    pub fn inverse(&self) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * crate::fmath::ln(self.l[(i, i)].re)).sum()
    }
}

/// In-place Cholesky solve of a dense real symmetric positive-definite system.
///
/// `a` is row-major `n x n` and is overwritten with the factor; `b` is
/// overwritten with the solution. Returns `false` when the matrix is not
/// numerically positive definite.
pub fn solve_sym_pd_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            let l = a[j * n + k];
            d -= l * l;
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = crate::fmath::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut acc = a[i * n + j];
            for k in 0..j {
                acc -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = acc / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i * n + k] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            b[i] -= a[k * n + i] * b[k];
        }
        b[i] /= a[i * n + i];
    }
    true
}

/// Standard normal draw (Box-Muller). Deterministic for a seeded RNG.
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut u1: f64 = rng.gen();
    while u1 <= 1e-300 {
        u1 = rng.gen();
    }
    let u2: f64 = rng.gen();
    crate::fmath::sqrt(-2.0 * crate::fmath::ln(u1)) * crate::fmath::cos(core::f64::consts::TAU * u2)
}

/// Circularly-symmetric complex Gaussian with unit variance, `E|z|^2 = 1`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng)) * core::f64::consts::FRAC_1_SQRT_2
}
