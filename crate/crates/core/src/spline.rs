use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

/// Cubic interpolating spline through `(knots[i], values[i])`.
///
/// Natural end conditions unless `periodic`, in which case the first and last
/// values must agree and the second derivative wraps.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    periodic: bool,
}

impl CubicSpline {
    pub fn natural(knots: &[f64], values: &[f64]) -> Result<Self> {
        Self::build(knots, values, false)
    }

    pub fn periodic(knots: &[f64], values: &[f64]) -> Result<Self> {
        Self::build(knots, values, true)
    }

    fn build(knots: &[f64], values: &[f64], periodic: bool) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(Error::InvalidTable(format!(
                "{} knots but {} values",
                n,
                values.len()
            )));
        }
        if n < 3 {
            return Err(Error::InvalidTable("need at least 3 samples".into()));
        }
        if knots.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite sample".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTable("knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope = |i: usize| (values[i + 1] - values[i]) / h[i];
        let second = if periodic {
            let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if (values[0] - values[n - 1]).abs() > 1e-12 * scale {
                return Err(Error::InvalidTable(
                    "periodic table must repeat its first value at the end".into(),
                ));
            }
            // unknowns M_0..M_{n-2}; M_{n-1} = M_0
            let m = n - 1;
            let mut sys = Tridiagonal::new(m);
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let hp = h[(i + m - 1) % m];
                let hn = h[i];
                sys.diag[i] = 2.0 * (hp + hn);
                rhs[i] = 6.0 * (slope(i) - slope((i + m - 1) % m));
                if i + 1 < m {
                    sys.upper[i] = hn;
                    sys.lower[i] = hn;
                }
            }
            if m >= 2 {
                sys.corner = Some((h[m - 1], h[m - 1]));
            }
            let mut sol = sys
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidTable("singular spline system".into()))?;
            sol.push(sol[0]);
            sol
        } else {
            let m = n - 2;
            let mut sys = Tridiagonal::new(m);
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                sys.diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * (slope(i + 1) - slope(i));
                if i + 1 < m {
                    sys.upper[i] = h[i + 1];
                    sys.lower[i] = h[i + 1];
                }
            }
            let inner = sys
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidTable("singular spline system".into()))?;
            let mut sol = Vec::with_capacity(n);
            sol.push(0.0);
            sol.extend(inner);
            sol.push(0.0);
            sol
        };
        Ok(CubicSpline {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
            periodic,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value, first and second derivative at `t`. Outside the knot range the
    /// end cubic is extrapolated (or the argument wrapped, if periodic).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (a, b) = self.domain();
        let t = if self.periodic && (t < a || t > b) {
            a + (t - a).rem_euclid(b - a)
        } else {
            t
        };
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.knots[i + 1] - self.knots[i];
        let u = (self.knots[i + 1] - t) / h;
        let v = (t - self.knots[i]) / h;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let value = u * y0 + v * y1 + ((u * u * u - u) * m0 + (v * v * v - v) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + ((1.0 - 3.0 * u * u) * m0 + (3.0 * v * v - 1.0) * m1) * h / 6.0;
        let d2 = u * m0 + v * m1;
        (value, d1, d2)
    }
}
