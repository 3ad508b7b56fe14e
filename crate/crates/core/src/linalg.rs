//! Minimal dense linear solver for the certifier's Newton systems.
//!
//! The systems are tiny (digit count + active directions + 2, at most a few
//! dozen unknowns), so partial-pivot Gaussian elimination is plenty and a
//! linear-algebra dependency would be dead weight.

/// Solves `a x = b` in place. Returns `None` when a pivot degenerates
/// (singular to working precision).
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Solves `a x = b` through the damped normal equations
/// `(a^T a + tau I) x = a^T b`. For `tau > 0` the system is positive
/// definite, so this always produces a step, and as `tau -> 0` the step
/// tends to the minimum-norm least-squares solution. That minimum-norm
/// property is the point: when `a` is rank deficient the step carries no
/// null-space component, where a plain LU solve would pick an arbitrary
/// (and often huge) one.
pub(crate) fn solve_damped_normal(
    a: &[Vec<f64>],
    b: &[f64],
    tau: f64,
) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let mut ata = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for row in a {
                s += row[i] * row[j];
            }
            ata[i][j] = s;
            ata[j][i] = s;
        }
        ata[i][i] += tau;
    }
    let atb: Vec<f64> = (0..n)
        .map(|i| a.iter().zip(b).map(|(row, &bi)| row[i] * bi).sum())
        .collect();
    solve(ata, atb)
}
