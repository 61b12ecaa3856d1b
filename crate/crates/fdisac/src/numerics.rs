//! Dense complex linear algebra and root finding.
//!
//! Everything in here is sized for beamformer design: square systems of
//! dimension at most a few dozen, solved by partial-pivot Gaussian
//! elimination. Matrices are row-major over `Complex64`. All functions are
//! pure; no shared state.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Pivot magnitudes at or below this abort the elimination.
pub const PIVOT_EPS: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is singular or near-singular (pivot magnitude {pivot:.3e})")]
    NearSingular { pivot: f64 },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("no sign change on bracket [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")]
    NoSignChange { lo: f64, hi: f64, flo: f64, fhi: f64 },
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Rank-1 outer product u vᴴ.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = CMat::zeros(u.len(), v.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMat) -> Result<CMat, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>, NumericsError> {
        if self.cols != x.len() {
            return Err(NumericsError::DimMismatch(format!(
                "matvec: {}x{} * len {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Aᴴ x without materializing the transpose.
    pub fn matvec_herm(&self, x: &[C64]) -> Result<Vec<C64>, NumericsError> {
        if self.rows != x.len() {
            return Err(NumericsError::DimMismatch(format!(
                "matvec_herm: ({}x{})^H * len {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)].conj() * xi;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &CMat) -> Result<CMat, NumericsError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumericsError::DimMismatch(format!(
                "add: {}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Adds `s` to each diagonal entry in place.
    pub fn add_diag(&mut self, s: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self[(i, i)] += s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    // <a, b> = a^H b
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

pub fn scale_vec(a: &[C64], s: f64) -> Vec<C64> {
    a.iter().map(|z| z * s).collect()
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn solve_linear(a: &CMat, b: &[C64]) -> Result<Vec<C64>, NumericsError> {
    Ok(solve_linear_multi(a, &[b.to_vec()])?.pop().unwrap())
}

/// One factorization, several right-hand sides.
pub fn solve_linear_multi(a: &CMat, rhs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>, NumericsError> {
    let n = a.rows;
    if a.cols != n {
        return Err(NumericsError::DimMismatch(format!("solve: matrix {}x{} not square", a.rows, a.cols)));
    }
    for (k, b) in rhs.iter().enumerate() {
        if b.len() != n {
            return Err(NumericsError::DimMismatch(format!("solve: rhs {k} has len {} != {n}", b.len())));
        }
    }
    let mut m = a.data.clone();
    let mut bs: Vec<Vec<C64>> = rhs.to_vec();
    let at = |m: &[C64], i: usize, j: usize| m[i * n + j];

    for col in 0..n {
        // partial pivot
        let mut piv = col;
        let mut best = at(&m, col, col).norm();
        for r in col + 1..n {
            let mag = at(&m, r, col).norm();
            if mag > best {
                best = mag;
                piv = r;
            }
        }
        if best <= PIVOT_EPS {
            return Err(NumericsError::NearSingular { pivot: best });
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            for b in bs.iter_mut() {
                b.swap(col, piv);
            }
        }
        let d = at(&m, col, col);
        for r in col + 1..n {
            let f = at(&m, r, col) / d;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            m[r * n + col] = C64::new(0.0, 0.0);
            for j in col + 1..n {
                let v = at(&m, col, j);
                m[r * n + j] -= f * v;
            }
            for b in bs.iter_mut() {
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    // back substitution
    for b in bs.iter_mut() {
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= at(&m, i, j) * b[j];
            }
            b[i] = acc / at(&m, i, i);
        }
    }
    Ok(bs)
}

/// Eigenvalues of a Hermitian matrix, ascending, by cyclic Jacobi sweeps.
///
/// Each off-diagonal entry is phase-rotated onto the real axis and then
/// annihilated with a real Givens rotation; the off-diagonal mass shrinks
/// quadratically per sweep. Chosen over power iteration because the solver
/// needs small eigenvalues of matrices whose spectrum is clustered, where
/// power iteration stalls.
pub fn eigvals_hermitian(a: &CMat) -> Result<Vec<f64>, NumericsError> {
    let n = a.rows;
    if a.cols != n {
        return Err(NumericsError::DimMismatch(format!("eig: matrix {}x{} not square", a.rows, a.cols)));
    }
    let dev = a.hermitian_deviation();
    let scale = a.max_abs().max(1.0);
    if dev > 1e-10 * scale {
        return Err(NumericsError::NotHermitian(dev));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m = a.clone();
    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..60 {
        if off(&m) <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let abs = apq.norm();
                if abs <= 1e-300 {
                    continue;
                }
                // rotate the pivot onto the real axis: col q *= conj(phase),
                // row q *= phase (a unitary diagonal similarity)
                let phase = apq / abs;
                for k in 0..n {
                    let v = m[(k, q)] * phase.conj();
                    m[(k, q)] = v;
                }
                for k in 0..n {
                    let v = m[(q, k)] * phase;
                    m[(q, k)] = v;
                }
                // classic real Jacobi rotation zeroing the (p, q) entry
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * abs);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * s;
                    m[(k, q)] = akp * s + akq * c;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * s;
                    m[(q, k)] = apk * s + aqk * c;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(eig)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue_hermitian(a: &CMat) -> Result<f64, NumericsError> {
    let eig = eigvals_hermitian(a)?;
    Ok(eig.last().copied().unwrap_or(0.0))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue_hermitian(a: &CMat) -> Result<f64, NumericsError> {
    let eig = eigvals_hermitian(a)?;
    Ok(eig.first().copied().unwrap_or(0.0))
}

/// Bisection root search on a bracketing interval.
///
/// Stops when |f(mid)| <= tol, the interval width drops to tol, or the
/// midpoint can no longer be distinguished from the endpoints in f64.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumericsError> {
    let (mut lo, mut hi) = (lo, hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(NumericsError::NoSignChange { lo, hi, flo, fhi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm.abs() <= tol || (hi - lo).abs() <= tol {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// Forward DFT: X[k] = sum_n x[n] exp(-j 2 pi k n / M).
///
/// Radix-2 in-place FFT for power-of-two lengths, direct evaluation
/// otherwise.
pub fn dft(x: &[C64]) -> Vec<C64> {
    transform(x, -1.0)
}

/// Inverse DFT with the 1/M factor, so idft(dft(x)) == x.
pub fn idft(x: &[C64]) -> Vec<C64> {
    let m = x.len();
    let mut out = transform(x, 1.0);
    let inv = 1.0 / m as f64;
    for z in out.iter_mut() {
        *z *= inv;
    }
    out
}

fn transform(x: &[C64], sign: f64) -> Vec<C64> {
    let m = x.len();
    if m == 0 {
        return Vec::new();
    }
    if m.is_power_of_two() {
        let mut buf = x.to_vec();
        fft_radix2(&mut buf, sign);
        return buf;
    }
    let mut out = vec![C64::new(0.0, 0.0); m];
    let w = sign * 2.0 * std::f64::consts::PI / m as f64;
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (n, &v) in x.iter().enumerate() {
            let ang = w * (k as f64) * (n as f64);
            acc += v * C64::new(ang.cos(), ang.sin());
        }
        *o = acc;
    }
    out
}

fn fft_radix2(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    // bit reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wl = C64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = C64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wl;
            }
            i += len;
        }
        len <<= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
        let data = (0..rows * cols)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        CMat::from_rows(rows, cols, data)
    }

    #[test]
    fn eigvals_full_spectrum_properties() {
        // random Hermitian A = M + M^H: eigenvalue sums must match the
        // trace and the squared Frobenius norm
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = random_mat(&mut rng, 8, 8);
        let a = m.add(&m.hermitian_transpose()).unwrap();
        let eig = eigvals_hermitian(&a).unwrap();
        let sum: f64 = eig.iter().sum();
        let sum_sq: f64 = eig.iter().map(|x| x * x).sum();
        assert_relative_eq!(sum, a.trace().re, max_relative = 1e-10);
        assert_relative_eq!(sum_sq, a.frobenius_norm().powi(2), max_relative = 1e-10);
        for pair in eig.windows(2) {
            assert!(pair[0] <= pair[1]);
        }
    }

    #[test]
    fn eigvals_two_by_two_analytic() {
        // [[2, i], [-i, 2]] has eigenvalues 2 -/+ 1
        let a = CMat::from_rows(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let eig = eigvals_hermitian(&a).unwrap();
        assert_relative_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn min_eigenvalue_resolves_clustered_spectrum() {
        // a tiny eigenvalue under a dominant, nearly-degenerate shifted
        // cluster: diag(1e3 + tiny perturbations) plus one small direction
        let n = 12;
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = c(1000.0 + 1e-6 * i as f64, 0.0);
        }
        a[(0, 0)] = c(0.09, 0.0);
        a[(0, 1)] = c(0.01, 0.005);
        a[(1, 0)] = c(0.01, -0.005);
        let lambda = min_eigenvalue_hermitian(&a).unwrap();
        // exact smallest eigenvalue of the 2x2 coupled block, to first order
        let b2 = CMat::from_rows(
            2,
            2,
            vec![c(0.09, 0.0), c(0.01, 0.005), c(0.01, -0.005), c(1000.0, 0.0)],
        );
        let expect = eigvals_hermitian(&b2).unwrap()[0];
        assert_relative_eq!(lambda, expect, max_relative = 1e-6);
        assert!((lambda - 0.09).abs() < 1e-3);
    }

    #[test]
    fn matmul_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_mat(&mut rng, 2, 2);
        let i2 = CMat::identity(2);
        assert_eq!(i2.matmul(&m).unwrap(), m);
    }

    #[test]
    fn matmul_zero_and_j_squared() {
        let z = CMat::from_rows(1, 1, vec![c(0.0, 0.0)]);
        let five = CMat::from_rows(1, 1, vec![c(5.0, 0.0)]);
        assert_eq!(z.matmul(&five).unwrap()[(0, 0)], c(0.0, 0.0));

        let jm = CMat::from_rows(1, 1, vec![c(0.0, 1.0)]);
        let prod = jm.matmul(&jm).unwrap();
        assert_relative_eq!(prod[(0, 0)].re, -1.0);
        assert_relative_eq!(prod[(0, 0)].im, 0.0);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = CMat::zeros(2, 3);
        let b = CMat::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(NumericsError::DimMismatch(_))));
    }

    #[test]
    fn hermitian_scalar_conjugate() {
        let m = CMat::from_rows(1, 1, vec![c(1.0, 1.0)]);
        assert_eq!(m.hermitian_transpose()[(0, 0)], c(1.0, -1.0));
    }

    #[test]
    fn hermitian_of_real_symmetric() {
        let m = CMat::from_rows(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(m.hermitian_transpose(), m);
    }

    #[test]
    fn hermitian_product_rule() {
        // (AB)^H = B^H A^H on a random 3x3 pair
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_mat(&mut rng, 3, 3);
        let b = random_mat(&mut rng, 3, 3);
        let lhs = a.matmul(&b).unwrap().hermitian_transpose();
        let rhs = b.hermitian_transpose().matmul(&a.hermitian_transpose()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((lhs[(i, j)] - rhs[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let i2 = CMat::identity(2);
        let b = vec![c(3.0, 1.0), c(-2.0, 0.5)];
        let x = solve_linear(&i2, &b).unwrap();
        assert_eq!(x, b);

        let a = CMat::from_rows(2, 2, vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let b = vec![c(4.0, 0.0), c(6.0, 0.0)];
        let x = solve_linear(&a, &b).unwrap();
        assert_relative_eq!(x[0].re, 2.0);
        assert_relative_eq!(x[1].re, 3.0);
    }

    #[test]
    fn solve_residual_oracle_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut a = random_mat(&mut rng, 8, 8);
            a.add_diag(4.0); // keep it well-conditioned
            let b: Vec<C64> = (0..8).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let x = solve_linear(&a, &b).unwrap();
            let ax = a.matvec(&x).unwrap();
            let res: f64 = ax.iter().zip(b.iter()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            assert!(res / norm(&b) <= 1e-10, "residual {res}");
        }
    }

    #[test]
    fn solve_singular_reports_pivot() {
        let a = CMat::zeros(2, 2);
        let b = vec![c(1.0, 0.0), c(1.0, 0.0)];
        match solve_linear(&a, &b) {
            Err(NumericsError::NearSingular { pivot }) => assert!(pivot <= PIVOT_EPS),
            other => panic!("expected NearSingular, got {other:?}"),
        }
    }

    #[test]
    fn max_eig_diagonal() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = c(1.0, 0.0);
        a[(1, 1)] = c(2.0, 0.0);
        a[(2, 2)] = c(3.0, 0.0);
        assert_relative_eq!(max_eigenvalue_hermitian(&a).unwrap(), 3.0, max_relative = 1e-8);
    }

    #[test]
    fn max_eig_rank_one_steering() {
        // b b^H for a unit-modulus steering vector of length N has max eigenvalue N
        let n = 16;
        let b: Vec<C64> = (0..n)
            .map(|k| {
                let ph = 2.0 * std::f64::consts::PI * 0.5 * (k as f64) * (45.0f64.to_radians().sin());
                c(ph.cos(), ph.sin())
            })
            .collect();
        let bb = CMat::outer(&b, &b);
        assert_relative_eq!(max_eigenvalue_hermitian(&bb).unwrap(), n as f64, max_relative = 1e-8);

        // b b^H - ||b||^2 I has max eigenvalue 0
        let mut z = bb.clone();
        z.add_diag(-(n as f64));
        assert!(max_eigenvalue_hermitian(&z).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn max_eig_rejects_non_hermitian() {
        let a = CMat::from_rows(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(max_eigenvalue_hermitian(&a), Err(NumericsError::NotHermitian(_))));
    }

    #[test]
    fn bisect_analytic_roots() {
        let r = bisect(|x| x * x - 4.0, 0.0, 10.0, 1e-10).unwrap();
        assert_relative_eq!(r, 2.0, epsilon = 1e-9);
        let r = bisect(|x| x, -1.0, 1.0, 1e-10).unwrap();
        assert!(r.abs() <= 1e-9);
    }

    #[test]
    fn bisect_rejects_bad_bracket() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10),
            Err(NumericsError::NoSignChange { .. })
        ));
    }

    #[test]
    fn dft_dc_and_tone() {
        let m = 32;
        let ones = vec![c(1.0, 0.0); m];
        let x = dft(&ones);
        assert_relative_eq!(x[0].re, m as f64, epsilon = 1e-9);
        for k in 1..m {
            assert!(x[k].norm() < 1e-9);
        }

        let tone: Vec<C64> = (0..m)
            .map(|n| {
                let ang = 2.0 * std::f64::consts::PI * 3.0 * n as f64 / m as f64;
                c(ang.cos(), ang.sin())
            })
            .collect();
        let spec = dft(&tone);
        let peak = spec.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
        assert_eq!(peak, 3);
    }

    #[test]
    fn dft_parseval_and_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &m in &[17usize, 64, 512] {
            let x: Vec<C64> = (0..m).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let spec = dft(&x);
            let ex = norm_sqr(&x);
            let es = norm_sqr(&spec) / m as f64;
            assert_relative_eq!(ex, es, max_relative = 1e-10);
            let back = idft(&spec);
            let err: f64 = back.iter().zip(x.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err / ex.sqrt() <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn hermitian_is_involution(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_mat(&mut rng, n, n);
            prop_assert_eq!(m.hermitian_transpose().hermitian_transpose(), m);
        }

        #[test]
        fn dft_roundtrip_random_lengths(seed in 0u64..200, m in 1usize..96) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<C64> = (0..m).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let back = idft(&dft(&x));
            let err: f64 = back.iter().zip(x.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-10 * (1.0 + norm(&x)));
        }
    }
}
