//! Continuous-time Lyapunov equation solver for small matrices.

use super::{Matrix, NumericsError};

/// Solves `A^T W + W A = -I` for symmetric positive definite `W`.
///
/// `A` must be Hurwitz (all eigenvalue real parts strictly negative); that is
/// checked up front via the characteristic polynomial so the failure mode is
/// a typed error rather than a garbage solution. The equation is vectorized
/// into an `n^2 x n^2` dense system and solved by LU, which is exact enough
/// at the sizes this crate uses (`n <= 3`); the residual is verified to
/// `1e-10 * n` before returning.
pub fn solve_lyapunov(a: &Matrix) -> Result<Matrix, NumericsError> {
    assert!(a.is_square(), "solve_lyapunov needs a square matrix");
    let n = a.rows();
    let eigs = a.eigenvalues()?;
    let max_re = eigs.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    if !(max_re < 0.0) {
        return Err(NumericsError::NotHurwitz(max_re));
    }

    // vec(W) indexed row-major: w[i*n + j] = W[i][j].
    // (A^T W)[i][j] = sum_k A[k][i] W[k][j]  -> M[(ij),(kj)] += A[k][i]
    // (W A)[i][j]   = sum_l W[i][l] A[l][j]  -> M[(ij),(il)] += A[l][j]
    let mut m = Matrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                m[(row, k * n + j)] += a[(k, i)];
            }
            for l in 0..n {
                m[(row, i * n + l)] += a[(l, j)];
            }
        }
    }
    let mut rhs = vec![0.0; n * n];
    for i in 0..n {
        rhs[i * n + i] = -1.0;
    }
    let w_vec = m.solve(&rhs)?;
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = w_vec[i * n + j];
        }
    }
    let w = w.symmetrized();

    let residual = a
        .transpose()
        .matmul(&w)
        .add(&w.matmul(a))
        .add(&Matrix::identity(n))
        .frobenius_norm();
    let tol = 1e-10 * n as f64 * (1.0 + w.max_abs());
    if residual > tol {
        return Err(NumericsError::LyapunovResidual { residual, tol });
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rk4_integrate, sym_eigs, OdeSystem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Oracle (written before the solver): W = integral_0^inf e^{A^T t} e^{A t} dt,
    // computed by integrating the matrix ODE G' = A^T G + G A, G(0) = I
    // (whose solution is the integrand) together with W' = G, until the
    // integrand has decayed below 1e-12 in Frobenius norm.
    fn lyapunov_integral_oracle(a: &Matrix) -> Matrix {
        let n = a.rows();
        let at = a.transpose();
        let sys = OdeSystem::new(2 * n * n, |_t, x, dx| {
            // x = [vec(G), vec(W)]
            let g = &x[..n * n];
            let mut gm = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    gm[(i, j)] = g[i * n + j];
                }
            }
            let dg = at.matmul(&gm).add(&gm.matmul(a));
            for i in 0..n {
                for j in 0..n {
                    dx[i * n + j] = dg[(i, j)];
                    dx[n * n + i * n + j] = gm[(i, j)];
                }
            }
        });
        let mut x = vec![0.0; 2 * n * n];
        for i in 0..n {
            x[i * n + i] = 1.0;
        }
        let mut t = 0.0;
        for _chunk in 0..400 {
            let traj = rk4_integrate(&sys, &x, t, t + 1.0, 1e-3).expect("oracle integration");
            x = traj.last().to_vec();
            t += 1.0;
            let g_norm: f64 = x[..n * n].iter().map(|v| v * v).sum::<f64>().sqrt();
            if g_norm < 1e-12 {
                break;
            }
        }
        let mut w = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] = x[n * n + i * n + j];
            }
        }
        w.symmetrized()
    }

    fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        // Shift a random matrix left past its Frobenius norm: every
        // eigenvalue satisfies re < ||M||_F - shift < -0.5.
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let shift = m.frobenius_norm() + 0.5 + rng.gen_range(0.0..2.0);
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        m
    }

    #[test]
    fn scalar_and_diagonal_cases() {
        // A = [-2]: -2w - 2w... A^T W + W A = -4w = -1 -> w = 0.25.
        let a = Matrix::from_rows(&[&[-2.0]]);
        let w = solve_lyapunov(&a).unwrap();
        assert!((w[(0, 0)] - 0.25).abs() < 1e-14);
        // A = -I (3x3): W = I/2.
        let a = Matrix::identity(3).scale(-1.0);
        let w = solve_lyapunov(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((w[(i, j)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_non_hurwitz() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]); // poles on jw axis
        assert!(matches!(solve_lyapunov(&a), Err(NumericsError::NotHurwitz(_))));
        let a = Matrix::from_rows(&[&[1.0]]);
        assert!(matches!(solve_lyapunov(&a), Err(NumericsError::NotHurwitz(_))));
    }

    #[test]
    fn matches_integral_oracle_on_random_stable_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(314);
        for _ in 0..20 {
            let a = random_hurwitz(&mut rng, 3);
            let w = solve_lyapunov(&a).unwrap();
            let w_ref = lyapunov_integral_oracle(&a);
            let err = w.add_scaled(&w_ref, -1.0).max_abs() / (1.0 + w_ref.max_abs());
            assert!(err < 1e-6, "oracle mismatch {err}");
        }
    }

    #[test]
    fn residual_and_positivity_over_many_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2718);
        for k in 0..100 {
            let n = 1 + k % 3;
            let a = random_hurwitz(&mut rng, n);
            let w = solve_lyapunov(&a).unwrap();
            let residual = a
                .transpose()
                .matmul(&w)
                .add(&w.matmul(&a))
                .add(&Matrix::identity(n))
                .frobenius_norm();
            assert!(residual < 1e-10 * n as f64 * (1.0 + w.max_abs()));
            let eigs = sym_eigs(&w).unwrap();
            assert!(eigs[0] > 0.0, "W must be positive definite, min eig {}", eigs[0]);
        }
    }
}
