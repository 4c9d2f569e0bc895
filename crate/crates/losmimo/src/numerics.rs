//! Small complex-matrix decompositions and statistics.
//!
//! Everything here is sized for the channel matrices of this problem (at most
//! a handful of antennas per side), so a cyclic Jacobi iteration on the
//! Hermitian Gram matrix is used instead of a general-purpose eigensolver.

use num_complex::Complex;
use num_traits::Float;

use crate::{Error, Result};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Float> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix from nested row slices; panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        for z in &mut out.data {
            *z = *z * c;
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for z in &self.data {
            s = s + z.norm_sqr();
        }
        s.sqrt()
    }

    pub fn max_abs_entry(&self) -> T {
        let mut m = T::zero();
        for z in &self.data {
            let a = z.norm();
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Gram matrix of the smaller dimension: HᴴH if cols <= rows, else HHᴴ.
    pub fn small_gram(&self) -> Self {
        if self.cols <= self.rows {
            self.conj_transpose().mul(self)
        } else {
            self.mul(&self.conj_transpose())
        }
    }

    fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

fn tol<T: Float>(v: f64) -> T {
    T::from(v).expect("tolerance representable in scalar type")
}

/// All eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi with complex plane rotations; convergence when the
/// off-diagonal Frobenius norm drops below 1e-12 of the matrix norm.
pub fn hermitian_eigenvalues<T: Float>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidInput(format!(
            "expected square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("matrix has NaN/Inf entries".into()));
    }
    let scale = a.max_abs_entry().max(T::one());
    if a.hermitian_defect() > tol::<T>(1e-9) * scale {
        return Err(Error::ContractViolation(
            "matrix is not Hermitian to tolerance 1e-9".into(),
        ));
    }
    let n = a.rows();
    let mut m = a.clone();
    let norm = m.frobenius_norm();
    // 1e-12 relative for f64; wider scalars fall back to a few ulps.
    let factor = tol::<T>(1e-12).max(T::epsilon() * tol::<T>(4.0));
    let target = factor * norm;
    let max_sweeps = 100;

    let off_norm = |m: &ComplexMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s = s + m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = norm == T::zero();
    for _ in 0..max_sweeps {
        if off_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g == T::zero() {
                    continue;
                }
                // Phase factor reduces the 2x2 subproblem to a real rotation.
                let u = apq / Complex::new(g, T::zero());
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let two = T::one() + T::one();
                let tau = (aqq - app) / (two * g);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let uc = u.conj();
                // Rows p,q: m <- Jᴴ m
                for j in 0..n {
                    let bp = m[(p, j)];
                    let bq = m[(q, j)];
                    m[(p, j)] = uc * bp * c - bq * s;
                    m[(q, j)] = uc * bp * s + bq * c;
                }
                // Columns p,q: m <- m J
                for i in 0..n {
                    let ap = m[(i, p)];
                    let aq = m[(i, q)];
                    m[(i, p)] = ap * u * c - aq * s;
                    m[(i, q)] = ap * u * s + aq * c;
                }
            }
        }
    }
    if !converged && off_norm(&m) > target {
        return Err(Error::SolverFailure(
            "Jacobi iteration did not converge within 100 sweeps".into(),
        ));
    }
    let mut eig: Vec<T> = (0..n).map(|i| m[(i, i)].re).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eig)
}

/// Singular values of `h`, descending; square roots of the Gram eigenvalues.
pub fn singular_values<T: Float>(h: &ComplexMatrix<T>) -> Result<Vec<T>> {
    if !h.is_finite() {
        return Err(Error::InvalidInput("matrix has NaN/Inf entries".into()));
    }
    let gram = h.small_gram();
    let clamp = tol::<T>(1e-9) * gram.frobenius_norm();
    let mut sv: Vec<T> = hermitian_eigenvalues(&gram)?
        .into_iter()
        .map(|l| {
            // Rank-deficient inputs can round to slightly negative Gram
            // eigenvalues; clamp those to zero.
            if l < T::zero() && l >= -clamp {
                T::zero()
            } else {
                l
            }
        })
        .map(|l| l.max(T::zero()).sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

/// log2(det(A)) for a Hermitian positive semi-definite matrix.
pub fn log_det_hermitian_psd<T: Float>(a: &ComplexMatrix<T>) -> Result<T> {
    let eig = hermitian_eigenvalues(a)?;
    let tolerance = tol::<T>(1e-9) * a.frobenius_norm();
    let floor = T::min_positive_value();
    let mut sum = T::zero();
    for l in eig {
        if l < -tolerance {
            return Err(Error::ContractViolation(
                "matrix has a significantly negative eigenvalue".into(),
            ));
        }
        let v = if l <= T::zero() { floor } else { l };
        sum = sum + v.log2();
    }
    Ok(sum)
}

/// Right-continuous empirical CDF over a sample set.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution<T> {
    values: Vec<T>,
}

impl<T: Float> EmpiricalDistribution<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples <= x.
    pub fn query(&self, x: T) -> T {
        let k = self.values.partition_point(|&v| v <= x);
        T::from(k).unwrap() / T::from(self.values.len()).unwrap()
    }
}

pub fn empirical_cdf<T: Float>(samples: &[T]) -> Result<EmpiricalDistribution<T>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty sample set".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let mut values = samples.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(EmpiricalDistribution { values })
}

/// Pairwise summation; keeps sweep aggregation order-insensitive to rounding.
pub fn pairwise_sum<T: Float>(xs: &[T]) -> T {
    if xs.len() <= 32 {
        let mut s = T::zero();
        for &x in xs {
            s = s + x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn pairwise_mean<T: Float>(xs: &[T]) -> T {
    pairwise_sum(xs) / T::from(xs.len()).unwrap()
}
