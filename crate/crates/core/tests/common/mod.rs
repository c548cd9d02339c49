//! Shared oracle helpers for integration tests. These deliberately avoid
//! the library's own code paths.

/// Impulse-response coefficients of a linear autoregression
/// `X_t = sum_j phi[j-1] X_{t-j} + eps_t`: `psi[s]` is the coefficient on
/// `x` in `E[X_t | do(X_{t-s} = x)]`, computed by the recursion
/// `psi[s] = sum_j phi_j psi[s-j]` with `psi[0] = 1` and zero before that.
#[allow(clippy::needless_range_loop)]
pub fn ar_impulse_response(phi: &[f64], max_lag: usize) -> Vec<f64> {
    let mut psi = vec![0.0; max_lag + 1];
    psi[0] = 1.0;
    for s in 1..=max_lag {
        for (j, &coef) in phi.iter().enumerate() {
            let lag = j + 1;
            if lag <= s {
                psi[s] += coef * psi[s - lag];
            }
        }
    }
    psi
}

/// Dense Gaussian elimination with partial pivoting; fine for the tiny
/// moment systems used in tests.
#[allow(clippy::needless_range_loop)]
pub fn solve_linear_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        assert!(a[col][col].abs() > 1e-12, "singular system");
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}
