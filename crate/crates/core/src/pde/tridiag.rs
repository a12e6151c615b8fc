//! Thomas algorithm for tridiagonal systems.

/// Solves `A x = rhs` in place, where `A` has sub-diagonal `sub[1..n]`,
/// main diagonal `diag[0..n]`, and super-diagonal `sup[0..n-1]`
/// (`sub[0]` and `sup[n-1]` are ignored). On return `rhs` holds `x`;
/// `sup` is consumed as scratch.
pub fn solve_in_place(sub: &mut [f64], diag: &mut [f64], sup: &mut [f64], rhs: &mut [f64]) {
    let n = rhs.len();
    debug_assert!(sub.len() == n && diag.len() == n && sup.len() == n);
    debug_assert!(n >= 2);
    // forward sweep
    sup[0] /= diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * sup[i - 1];
        if i < n - 1 {
            sup[i] /= denom;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    // back substitution
    for i in (0..n - 1).rev() {
        rhs[i] -= sup[i] * rhs[i + 1];
    }
}
