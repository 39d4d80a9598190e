//! Gaussian elimination with partial pivoting for tridiagonal systems.

/// Solve `A x = rhs` for symmetric tridiagonal `A` given by its diagonal and
/// off-diagonal. Returns `None` on a zero pivot or non-finite result.
pub fn solve_symmetric(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    solve(off, diag, off, rhs)
}

/// General tridiagonal solve; `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 || rhs.len() != n || lower.len() + 1 != n || upper.len() + 1 != n {
        return None;
    }
    let mut dl = lower.to_vec();
    let mut d = diag.to_vec();
    let mut du = upper.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                return None;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
            dl[i] = 0.0;
        } else {
            // swap rows i and i+1
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            du[i] = tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            b.swap(i, i + 1);
            b[i + 1] -= f * b[i];
        }
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
