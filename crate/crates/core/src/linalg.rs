//! Small linear-algebra kernels: banded matrices with a pivoted banded LU,
//! conjugate gradients, and a cyclic Jacobi eigensolver for the dense
//! Rayleigh–Ritz problems.

use thiserror::Error;

use crate::scalar::{axpy, dot, norm2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {0}")]
    Singular(usize),
    #[error("conjugate gradients did not converge in {iterations} iterations (residual {residual:e})")]
    CgNoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Square matrix with nonzeros only in `|i − j| ≤ bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![T::zero(); n * (2 * bandwidth + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i.abs_diff(j) > self.bw {
            None
        } else {
            Some(i * (2 * self.bw + 1) + j + self.bw - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    /// `A + diag(d)`.
    pub fn plus_diagonal(&self, d: &[T]) -> Self {
        let mut m = self.clone();
        for (i, &di) in d.iter().enumerate() {
            let s = m.slot(i, i).unwrap();
            m.data[s] += di;
        }
        m
    }

    /// `α·A + β·I`.
    pub fn scaled_shifted(&self, alpha: T, beta: T) -> Self {
        let mut m = self.clone();
        for v in m.data.iter_mut() {
            *v *= alpha;
        }
        for i in 0..m.n {
            let s = m.slot(i, i).unwrap();
            m.data[s] += beta;
        }
        m
    }

    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        let w = 2 * self.bw + 1;
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = T::zero();
            for j in lo..=hi {
                acc += row[j + self.bw - i] * x[j];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Lower Gershgorin bound on the spectrum (valid for symmetric matrices).
    pub fn gershgorin_lower(&self) -> T {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                let off: T = (lo..=hi).filter(|&j| j != i).map(|j| self.get(i, j).abs()).sum();
                self.get(i, i) - off
            })
            .fold(T::infinity(), |m, v| m.min(v))
    }

    pub fn lu(&self) -> Result<BandLu<T>, LinalgError> {
        BandLu::factor(self)
    }
}

/// Banded LU factorization with partial pivoting (row interchanges), in the
/// style of LAPACK `gbtrf`: `U` gets upper bandwidth `2·bw`.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    upper: Vec<T>,
    lower: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    pub fn factor(m: &BandMatrix<T>) -> Result<Self, LinalgError> {
        let n = m.n;
        let kl = m.bw;
        let width = 3 * kl + 1;
        // row i holds columns i−kl ..= i+2kl
        let mut a = vec![T::zero(); n * width];
        let at = |i: usize, j: usize| i * width + j + kl - i;
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + kl).min(n - 1);
            for j in lo..=hi {
                a[at(i, j)] = m.get(i, j);
            }
        }
        let mut lower = vec![T::zero(); n * kl.max(1)];
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + 2 * kl).min(n - 1);
            let mut p = k;
            let mut best = a[at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = a[at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if best == T::zero() || !best.is_finite() {
                return Err(LinalgError::Singular(k));
            }
            if p != k {
                for j in k..=last_col {
                    a.swap(at(k, j), at(p, j));
                }
            }
            let pivot = a[at(k, k)];
            for i in k + 1..=last_row {
                let mult = a[at(i, k)] / pivot;
                lower[k * kl + (i - k - 1)] = mult;
                if mult != T::zero() {
                    for j in k + 1..=last_col {
                        let u = a[at(k, j)];
                        a[at(i, j)] -= mult * u;
                    }
                }
            }
        }
        Ok(Self { n, kl, width, upper: a, lower, pivots })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, w) = (self.n, self.kl, self.width);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != T::zero() {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let row = &self.upper[k * w..(k + 1) * w];
            let mut acc = b[k];
            for j in k + 1..=(k + 2 * kl).min(n - 1) {
                acc -= row[j + kl - k] * b[j];
            }
            b[k] = acc / row[kl];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Conjugate gradients for a symmetric positive definite operator given as
/// a matrix-vector product. Stops when `‖r‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient<T: Scalar>(
    apply: impl Fn(&[T], &mut [T]),
    b: &[T],
    x0: Option<&[T]>,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, usize), LinalgError> {
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![T::zero(); n], <[T]>::to_vec);
    let mut ax = vec![T::zero(); n];
    apply(&x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let bnorm = norm2(b).max(T::min_positive_value());
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![T::zero(); n];
    for it in 0..=max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok((x, it));
        }
        if it == max_iter {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(LinalgError::CgNoConvergence { iterations: max_iter, residual: (rr.sqrt() / bnorm).as_f64() })
}

/// Eigen-decomposition of a dense symmetric `p×p` matrix (row-major) by
/// cyclic Jacobi rotations. Returns ascending eigenvalues and the matching
/// eigenvectors as columns of a row-major `p×p` matrix.
pub fn symmetric_eigen<T: Scalar>(mat: &[T], p: usize) -> (Vec<T>, Vec<T>) {
    let mut a = mat.to_vec();
    let mut v = vec![T::zero(); p * p];
    for i in 0..p {
        v[i * p + i] = T::one();
    }
    let frob: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * p + j] * a[i * p + j])
            .sum::<T>()
            .sqrt();
        if off <= T::eps() * frob || off == T::zero() {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                let aij = a[i * p + j];
                if aij == T::zero() {
                    continue;
                }
                let theta = (a[j * p + j] - a[i * p + i]) / (two * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..p {
                    let aki = a[k * p + i];
                    let akj = a[k * p + j];
                    a[k * p + i] = c * aki - s * akj;
                    a[k * p + j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let aik = a[i * p + k];
                    let ajk = a[j * p + k];
                    a[i * p + k] = c * aik - s * ajk;
                    a[j * p + k] = s * aik + c * ajk;
                }
                for k in 0..p {
                    let vki = v[k * p + i];
                    let vkj = v[k * p + j];
                    v[k * p + i] = c * vki - s * vkj;
                    v[k * p + j] = s * vki + c * vkj;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[x * p + x].partial_cmp(&a[y * p + y]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| a[k * p + k]).collect();
    let mut vecs = vec![T::zero(); p * p];
    for (col, &k) in order.iter().enumerate() {
        for r in 0..p {
            vecs[r * p + col] = v[r * p + k];
        }
    }
    (values, vecs)
}

/// Modified Gram–Schmidt, applied twice. Returns `false` if a column
/// collapsed numerically.
pub fn orthonormalize<T: Scalar>(cols: &mut [Vec<T>]) -> bool {
    let mut ok = true;
    for _pass in 0..2 {
        for j in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(j);
            let cj = &mut rest[0];
            for q in done.iter() {
                let r = dot(q, cj);
                axpy(-r, q, cj);
            }
            let nrm = norm2(cj);
            if nrm <= T::eps() * T::lit(1e3) || !nrm.is_finite() {
                ok = false;
                continue;
            }
            for x in cj.iter_mut() {
                *x /= nrm;
            }
        }
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, d: f64, o: f64) -> BandMatrix<f64> {
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, d);
            if i + 1 < n {
                m.set(i, i + 1, o);
                m.set(i + 1, i, o);
            }
        }
        m
    }

    #[test]
    fn lu_solves_spd_and_indefinite() {
        for &(d, o) in &[(2.0, -1.0), (0.1, -1.0), (-3.0, 1.0)] {
            let m = tridiag(17, d, o);
            let x: Vec<f64> = (0..17).map(|i| (i as f64 * 0.7).sin()).collect();
            let b = m.mul_vec(&x);
            let lu = m.lu().unwrap();
            let y = lu.solve(&b);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9, "d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn lu_pivots_on_zero_diagonal() {
        // [[0,1],[1,0]] needs a row interchange
        let mut m = BandMatrix::zeros(2, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let x = m.lu().unwrap().solve(&[3.0, 5.0]);
        assert_eq!(x, vec![5.0, 3.0]);
        assert!(matches!(BandMatrix::<f64>::zeros(3, 1).lu(), Err(LinalgError::Singular(0))));
    }

    #[test]
    fn wide_band_lu() {
        let n = 30;
        let bw = 5;
        let mut m = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                let v = if i == j { 0.3 } else { ((i * 7 + j * 3) % 5) as f64 - 2.0 };
                m.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let b = m.mul_vec(&x);
        let y = m.lu().unwrap().solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
    }

    #[test]
    fn cg_agrees_with_lu() {
        let m = tridiag(50, 2.5, -1.0);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let (x, _) = conjugate_gradient(|v, out| m.mul_vec_into(v, out), &b, None, 1e-13, 200).unwrap();
        let y = m.lu().unwrap().solve(&b);
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-10);
        }
        let err = conjugate_gradient(|v, out| m.mul_vec_into(v, out), &b, None, 1e-13, 2);
        assert!(matches!(err, Err(LinalgError::CgNoConvergence { .. })));
    }

    #[test]
    fn jacobi_eigen_of_tridiagonal() {
        let n = 6;
        let m = tridiag(n, 2.0, -1.0);
        let dense: Vec<f64> = (0..n * n).map(|k| m.get(k / n, k % n)).collect();
        let (vals, vecs) = symmetric_eigen(&dense, n);
        for (k, &v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
            let col: Vec<f64> = (0..n).map(|r| vecs[r * n + k]).collect();
            let mc = m.mul_vec(&col);
            for r in 0..n {
                assert!((mc[r] - v * col[r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gram_schmidt() {
        let mut cols: Vec<Vec<f64>> = vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        assert!(orthonormalize(&mut cols));
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&cols[i], &cols[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let mut dep: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(!orthonormalize(&mut dep));
    }
}
