//! Banded solvers shared by the spline fitter, the Sobolev preconditioner and
//! the annulus solver.

/// Symmetric-or-not tridiagonal matrix stored by diagonals.
///
/// `lower[j]` couples rows `j+1` and `j`, `upper[j]` couples rows `j` and
/// `j+1`. When `corner` is set the matrix is cyclic: `corner.0` sits at
/// `(0, n-1)` and `corner.1` at `(n-1, 0)`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub corner: Option<(f64, f64)>,
}

/// Pivot magnitude, relative to the row's diagonal scale, below which a
/// system is reported singular.
pub const SINGULAR_PIVOT: f64 = 1e-9;

impl Tridiagonal {
    pub fn new(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
            corner: None,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for j in 0..n {
            let mut acc = self.diag[j] * x[j];
            if j > 0 {
                acc += self.lower[j - 1] * x[j - 1];
            }
            if j + 1 < n {
                acc += self.upper[j] * x[j + 1];
            }
            y[j] = acc;
        }
        if let Some((top_right, bottom_left)) = self.corner {
            if n > 1 {
                y[0] += top_right * x[n - 1];
                y[n - 1] += bottom_left * x[0];
            }
        }
        y
    }

    /// Solves `A x = rhs`. Returns `None` if a pivot collapses.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        match self.corner {
            None => thomas(&self.lower, &self.diag, &self.upper, rhs),
            Some((top_right, bottom_left)) => self.solve_cyclic(top_right, bottom_left, rhs),
        }
    }

    // Sherman-Morrison reduction of the cyclic system to two plain ones.
    fn solve_cyclic(&self, top_right: f64, bottom_left: f64, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n <= 2 {
            let mut dense = vec![vec![0.0; n]; n];
            for j in 0..n {
                dense[j][j] += self.diag[j];
                if j + 1 < n {
                    dense[j][j + 1] += self.upper[j];
                    dense[j + 1][j] += self.lower[j];
                }
            }
            if n == 2 {
                dense[0][1] += top_right;
                dense[1][0] += bottom_left;
            }
            return dense_solve(dense, rhs.to_vec());
        }
        let gamma = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= top_right * bottom_left / gamma;
        let x = thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = bottom_left;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;
        let v_last = top_right / gamma;
        let num = x[0] + v_last * x[n - 1];
        let den = 1.0 + z[0] + v_last * z[n - 1];
        if den.abs() < 1e-300 {
            return None;
        }
        let factor = num / den;
        Some(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
    }

    /// Number of negative pivots in the LDLᵀ factorization of a symmetric,
    /// non-cyclic matrix, i.e. the number of negative eigenvalues (Sturm count).
    pub fn negative_pivots(&self) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d_prev = 0.0;
        for j in 0..n {
            let mut d = self.diag[j];
            if j > 0 {
                let off = self.lower[j - 1];
                let denom = if d_prev == 0.0 { f64::MIN_POSITIVE } else { d_prev };
                d -= off * off / denom;
            }
            if d < 0.0 {
                count += 1;
            }
            d_prev = d;
        }
        count
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() <= SINGULAR_PIVOT * diag[0].abs().max(f64::MIN_POSITIVE) || pivot == 0.0 {
        return None;
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for j in 1..n {
        pivot = diag[j] - lower[j - 1] * c[j - 1];
        let scale = diag[j].abs() + lower[j - 1].abs() + if j < n - 1 { upper[j].abs() } else { 0.0 };
        if pivot == 0.0 || pivot.abs() <= SINGULAR_PIVOT * scale {
            return None;
        }
        if j < n - 1 {
            c[j] = upper[j] / pivot;
        }
        d[j] = (rhs[j] - lower[j - 1] * d[j - 1]) / pivot;
    }
    for j in (0..n - 1).rev() {
        d[j] -= c[j] * d[j + 1];
    }
    Some(d)
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
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
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, cyclic: bool) -> Tridiagonal {
        let mut m = Tridiagonal::new(n);
        for j in 0..n {
            m.diag[j] = 4.0 + j as f64 * 0.1;
        }
        for j in 0..n - 1 {
            m.lower[j] = -1.0 - 0.01 * j as f64;
            m.upper[j] = -1.0 + 0.02 * j as f64;
        }
        if cyclic {
            m.corner = Some((-0.7, -0.9));
        }
        m
    }

    #[test]
    fn plain_and_cyclic_solves_invert_apply() {
        for &cyclic in &[false, true] {
            for &n in &[1usize, 2, 3, 7, 40] {
                if cyclic && n < 2 {
                    continue;
                }
                let m = sample(n, cyclic);
                let x: Vec<f64> = (0..n).map(|j| (j as f64 * 0.37).sin() + 0.2).collect();
                let b = m.apply(&x);
                let y = m.solve(&b).unwrap();
                for (a, b) in x.iter().zip(&y) {
                    assert!((a - b).abs() < 1e-12, "n={n} cyclic={cyclic}");
                }
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = Tridiagonal::new(3);
        m.diag = vec![1.0, 2.0, 1.0];
        m.lower = vec![-1.0, -1.0];
        m.upper = vec![-1.0, -1.0];
        assert!(m.solve(&[1.0, 0.0, -1.0]).is_none());
    }

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // 1D Dirichlet Laplacian tridiag(-1, 2, -1): eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 10;
        let mut m = Tridiagonal::new(n);
        let shift = 1.0;
        m.diag = vec![2.0 - shift; n];
        m.lower = vec![-1.0; n - 1];
        m.upper = vec![-1.0; n - 1];
        let expected = (1..=n)
            .filter(|&k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < shift)
            .count();
        assert_eq!(m.negative_pivots(), expected);
    }
}
