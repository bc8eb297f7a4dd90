//! Row-major dense matrices with the handful of operations the analysis
//! layer needs: LU solve, Cholesky, characteristic polynomials, and a cyclic
//! Jacobi eigensolver for symmetric matrices. Dimensions here are tiny
//! (n <= 9), so clarity wins over blocking or pivg tricks.

use super::poly::{poly_roots, Polynomial};
use super::{Complex, NumericsError};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Matrix {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.add_scaled(other, 1.0)
    }

    /// `self + s * other`, elementwise.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add dimension mismatch");
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += s * v;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square(), "symmetry of a non-square matrix");
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Symmetrize in place: `(A + A^T) / 2`. Cheap guard after solves whose
    /// result is symmetric by construction but not bit-exactly so.
    pub fn symmetrized(&self) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = m;
                out[(j, i)] = m;
            }
        }
        out
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        assert!(self.is_square(), "solve needs a square matrix");
        assert_eq!(self.rows, b.len(), "solve rhs dimension mismatch");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        let scale = self.max_abs().max(1.0);
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in (col + 1)..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= f64::EPSILON * scale * n as f64 {
                return Err(NumericsError::Singular(best));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in (col + 1)..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in (col + 1)..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for j in (col + 1)..n {
                acc -= a[col * n + j] * x[j];
            }
            x[col] = acc / a[col * n + col];
        }
        Ok(x)
    }

    /// Lower-triangular Cholesky factor of a symmetric positive definite
    /// matrix: `self = L * L^T`.
    pub fn cholesky(&self) -> Result<Matrix, NumericsError> {
        assert!(self.is_square(), "cholesky needs a square matrix");
        let tol = 1e-12 * (1.0 + self.max_abs());
        let asym = self.max_asymmetry();
        if asym > tol {
            return Err(NumericsError::NotSymmetric(asym));
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self[(i, j)];
                for k in 0..j {
                    acc -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if acc <= 0.0 {
                        return Err(NumericsError::NotPositiveDefinite(acc));
                    }
                    l[(i, i)] = acc.sqrt();
                } else {
                    l[(i, j)] = acc / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Forward substitution `L y = b` for a lower-triangular `L`.
    pub fn solve_lower_triangular(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.is_square() && self.rows == b.len());
        let n = self.rows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self[(i, k)] * y[k];
            }
            y[i] = acc / self[(i, i)];
        }
        y
    }

    /// Monic characteristic polynomial by the Faddeev-LeVerrier recurrence.
    /// Coefficients come out exactly rational in the entries, which keeps the
    /// companion-matrix consistency checks tight for the 3x3 systems here.
    pub fn char_poly(&self) -> Polynomial {
        assert!(self.is_square(), "char_poly needs a square matrix");
        let n = self.rows;
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        let mut b = self.clone();
        for k in 1..=n {
            let c = -b.trace() / k as f64;
            coeffs[n - k] = c;
            if k < n {
                for i in 0..n {
                    b[(i, i)] += c;
                }
                b = self.matmul(&b);
            }
        }
        Polynomial::new(coeffs)
    }

    /// Eigenvalues as roots of the characteristic polynomial. Intended for
    /// the small (n <= 9) matrices this crate works with; no balancing.
    pub fn eigenvalues(&self) -> Result<Vec<Complex>, NumericsError> {
        poly_roots(&self.char_poly())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, returned in
/// ascending order. Iterates until the off-diagonal Frobenius norm falls
/// below `1e-12` relative to the matrix scale.
pub fn sym_eigs(m: &Matrix) -> Result<Vec<f64>, NumericsError> {
    assert!(m.is_square(), "sym_eigs needs a square matrix");
    let tol = 1e-12 * (1.0 + m.max_abs());
    let asym = m.max_asymmetry();
    if asym > tol {
        return Err(NumericsError::NotSymmetric(asym));
    }
    let n = m.rows();
    let mut a = m.symmetrized();
    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let stop = 1e-12 * (1.0 + a.frobenius_norm());
    for _sweep in 0..200 {
        if off(&a) <= stop {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= stop / (n * n) as f64 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(NumericsError::EigsNotConverged)
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix.
pub fn sym_spectral_norm(m: &Matrix) -> Result<f64, NumericsError> {
    let eigs = sym_eigs(m)?;
    Ok(eigs.iter().fold(0.0_f64, |acc, e| acc.max(e.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.gen_range(-span..span);
            }
        }
        m
    }

    #[test]
    fn solve_recovers_known_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let mut a = random_matrix(&mut rng, n, 2.0);
            for i in 0..n {
                a[(i, i)] += 4.0; // keep comfortably nonsingular
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let b = a.mul_vec(&x_true);
            let x = a.solve(&b).expect("nonsingular");
            for (xi, ti) in x.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-10, "{xi} vs {ti}");
            }
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(a.solve(&[1.0, 1.0]), Err(NumericsError::Singular(_))));
    }

    #[test]
    fn sym_eigs_identity_and_diagonal() {
        let eigs = sym_eigs(&Matrix::identity(3)).unwrap();
        for e in eigs {
            assert!((e - 1.0).abs() < 1e-14);
        }
        let mut d = Matrix::zeros(2, 2);
        d[(0, 0)] = 3.0;
        d[(1, 1)] = 2.0;
        let eigs = sym_eigs(&d).unwrap();
        assert!((eigs[0] - 2.0).abs() < 1e-14 && (eigs[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eigs_rejects_asymmetric_input() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eigs(&a), Err(NumericsError::NotSymmetric(_))));
    }

    // Oracle: eigenvalues of a symmetric matrix are the real roots of its
    // characteristic polynomial, computed through an entirely different
    // route (Faddeev-LeVerrier + Durand-Kerner) than the Jacobi sweep.
    #[test]
    fn sym_eigs_matches_char_poly_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let raw = random_matrix(&mut rng, 3, 3.0);
            let a = raw.add(&raw.transpose()).scale(0.5);
            let eigs = sym_eigs(&a).unwrap();
            let mut roots: Vec<f64> = a
                .eigenvalues()
                .unwrap()
                .into_iter()
                .map(|c| {
                    assert!(c.im.abs() < 1e-7, "symmetric matrix produced complex root {c:?}");
                    c.re
                })
                .collect();
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (e, r) in eigs.iter().zip(&roots) {
                assert!((e - r).abs() < 1e-9 * (1.0 + e.abs()), "{e} vs {r}");
            }
        }
    }

    // Invariant: Rayleigh quotients of random unit vectors stay inside the
    // eigenvalue range.
    #[test]
    fn rayleigh_quotients_bounded_by_extremal_eigs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let raw = random_matrix(&mut rng, 3, 2.0);
        let a = raw.add(&raw.transpose()).scale(0.5);
        let eigs = sym_eigs(&a).unwrap();
        let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
        for _ in 0..100 {
            let mut v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-6 {
                continue;
            }
            for x in &mut v {
                *x /= n;
            }
            let av = a.mul_vec(&v);
            let q: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
            assert!(q >= lo - 1e-10 && q <= hi + 1e-10, "Rayleigh {q} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn char_poly_of_companion_recovers_coefficients() {
        // Companion matrix of s^3 + 2s^2 + 3s + 4.
        let a = Matrix::from_rows(&[
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[-4.0, -3.0, -2.0],
        ]);
        let p = a.char_poly();
        let expect = [4.0, 3.0, 2.0, 1.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((p.coeff(i) - e).abs() < 1e-12, "coeff {i}");
        }
    }

    #[test]
    fn cholesky_reconstructs_spd_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let b = random_matrix(&mut rng, 3, 1.5);
            let spd = b.matmul(&b.transpose()).add_scaled(&Matrix::identity(3), 0.5);
            let l = spd.cholesky().unwrap();
            let back = l.matmul(&l.transpose());
            assert!(back.add_scaled(&spd, -1.0).max_abs() < 1e-12 * (1.0 + spd.max_abs()));
        }
    }
}
