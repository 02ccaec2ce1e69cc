//! Linear model problem on the annulus 1 ≤ r ≤ 2:
//! −Δm + κ (m·e₃) e₃ = 0 with Dirichlet data on both circles.
//!
//! Finite volumes in r (cell centers r_j = 1 + (j+½)Δr, boundary faces at
//! half-cell distance) and the trigonometric derivative in φ, so every
//! Fourier mode of every Cartesian component decouples into a tridiagonal
//! system.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::energy::BoundaryData;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::linalg::Tridiagonal;
use crate::spectral::PhiTransform;

pub const INNER: f64 = 1.0;
pub const OUTER: f64 = 2.0;
/// Relative window around −κ in which a Dirichlet eigenvalue counts as a hit.
pub const EIGEN_REL_WINDOW: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSetup {
    pub n_r: usize,
    pub n_phi: usize,
    pub kappa: f64,
    pub inner: BoundaryData,
    pub outer: BoundaryData,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusReport {
    pub setup: AnnulusSetup,
    pub r_nodes: Vec<f64>,
    pub phi_nodes: Vec<f64>,
    /// Node values, index j * n_phi + i.
    #[serde(skip)]
    pub values: Vec<Vec3>,
    /// |⟨m_⊥⟩(r_j)| per ring.
    pub mean_perp_norm: Vec<f64>,
    pub max_mean_perp: f64,
    /// Max-norm residual of the assembled discrete equations.
    pub residual: f64,
    pub field_max_norm: f64,
}

fn radial_grid(n_r: usize) -> (f64, Vec<f64>) {
    let dr = (OUTER - INNER) / n_r as f64;
    (dr, (0..n_r).map(|j| INNER + (j as f64 + 0.5) * dr).collect())
}

/// r Δr-scaled operator of mode weight λ and shift κ; boundary coefficients
/// (inner, outer) are returned with it.
fn mode_operator(n_r: usize, lambda: f64, kappa: f64) -> (Tridiagonal, f64, f64) {
    let (dr, r) = radial_grid(n_r);
    let mut m = Tridiagonal::new(n_r);
    for j in 0..n_r {
        m.diag[j] = (lambda / r[j] + kappa * r[j]) * dr;
    }
    for j in 0..n_r - 1 {
        let c = (r[j] + 0.5 * dr) / dr;
        m.diag[j] += c;
        m.diag[j + 1] += c;
        m.upper[j] -= c;
        m.lower[j] -= c;
    }
    let b_in = INNER / (0.5 * dr);
    let b_out = OUTER / (0.5 * dr);
    m.diag[0] += b_in;
    m.diag[n_r - 1] += b_out;
    (m, b_in, b_out)
}

fn mass(n_r: usize) -> Vec<f64> {
    let (dr, r) = radial_grid(n_r);
    r.iter().map(|x| x * dr).collect()
}

/// Number of generalized eigenvalues μ of (A_λ, M) below `mu`, where A_λ is
/// the κ = 0 operator of weight λ and M = diag(r_j Δr).
pub fn eigen_count_below(n_r: usize, lambda: f64, mu: f64) -> usize {
    let (mut a, _, _) = mode_operator(n_r, lambda, 0.0);
    for (d, m) in a.diag.iter_mut().zip(mass(n_r)) {
        *d -= mu * m;
    }
    a.negative_pivots()
}

/// Smallest `count` Dirichlet eigenvalues of mode weight λ, by bisection on
/// the Sturm count.
pub fn dirichlet_eigenvalues(n_r: usize, lambda: f64, count: usize) -> Vec<f64> {
    // Gershgorin bound on M⁻¹A
    let (a, _, _) = mode_operator(n_r, lambda, 0.0);
    let m = mass(n_r);
    let mut hi: f64 = 0.0;
    for j in 0..n_r {
        let off = if j > 0 { a.lower[j - 1].abs() } else { 0.0 } + if j + 1 < n_r { a.upper[j].abs() } else { 0.0 };
        hi = hi.max((a.diag[j] + off) / m[j]);
    }
    (0..count.min(n_r))
        .map(|k| {
            let (mut lo, mut up) = (0.0, hi);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if eigen_count_below(n_r, lambda, mid) > k {
                    up = mid;
                } else {
                    lo = mid;
                }
                if up - lo <= 1e-15 * up {
                    break;
                }
            }
            0.5 * (lo + up)
        })
        .collect()
}

/// Whether −κ lies within the relative window of a Dirichlet eigenvalue of
/// any φ-mode of the e₃ component.
fn near_eigenvalue(n_r: usize, lambdas: &[f64], kappa: f64) -> Option<(f64, f64)> {
    let mu = -kappa;
    if mu <= 0.0 {
        return None;
    }
    let eps = EIGEN_REL_WINDOW * (1.0 + mu);
    let mut seen = Vec::new();
    for &l in lambdas {
        if seen.contains(&l) {
            continue;
        }
        seen.push(l);
        if eigen_count_below(n_r, l, mu + eps) != eigen_count_below(n_r, l, mu - eps) {
            return Some((l.sqrt(), mu));
        }
    }
    None
}

pub fn solve_annulus_example(setup: &AnnulusSetup) -> Result<AnnulusReport> {
    let AnnulusSetup { n_r, n_phi, kappa, inner, outer } = *setup;
    if n_r < 2 {
        return Err(Error::InvalidGrid(format!("annulus n_r = {n_r} must be at least 2")));
    }
    if n_phi < 4 || n_phi % 2 != 0 {
        return Err(Error::InvalidGrid(format!("annulus n_phi = {n_phi} must be even and at least 4")));
    }
    if !kappa.is_finite() {
        return Err(Error::InvalidBoundary(format!("kappa = {kappa} is not finite")));
    }
    let tr = PhiTransform::new(n_phi);
    let lambdas = tr.lambda().to_vec();
    if let Some((k, mu)) = near_eigenvalue(n_r, &lambdas, kappa) {
        return Err(Error::SingularSystem(format!(
            "kappa = {kappa}: -kappa = {mu} is a Dirichlet eigenvalue of the |k| = {k} mode"
        )));
    }
    let phi_nodes: Vec<f64> = (0..n_phi).map(|i| std::f64::consts::TAU * i as f64 / n_phi as f64).collect();
    let (_, r_nodes) = radial_grid(n_r);
    let spectrum = |data: &BoundaryData, c: usize| {
        let row: Vec<f64> = phi_nodes.iter().map(|&p| data.value_at(p)[c]).collect();
        tr.forward(&row)
    };
    let mut values = vec![Vec3::zeros(); n_r * n_phi];
    for c in 0..3 {
        let kap = if c == 2 { kappa } else { 0.0 };
        let b1 = spectrum(&inner, c);
        let b2 = spectrum(&outer, c);
        let mut spec = vec![vec![Complex::new(0.0, 0.0); n_phi]; n_r];
        for k in 0..n_phi {
            let (op, c_in, c_out) = mode_operator(n_r, lambdas[k], kap);
            let mut re = vec![0.0; n_r];
            let mut im = vec![0.0; n_r];
            re[0] += c_in * b1[k].re;
            im[0] += c_in * b1[k].im;
            re[n_r - 1] += c_out * b2[k].re;
            im[n_r - 1] += c_out * b2[k].im;
            let singular = || Error::SingularSystem(format!("kappa = {kappa}: zero pivot in mode {k}"));
            let xr = op.solve(&re).ok_or_else(singular)?;
            let xi = op.solve(&im).ok_or_else(singular)?;
            for j in 0..n_r {
                spec[j][k] = Complex::new(xr[j], xi[j]);
            }
        }
        for j in 0..n_r {
            let row = tr.inverse(&spec[j]);
            for i in 0..n_phi {
                values[j * n_phi + i][c] = row[i] / n_phi as f64;
            }
        }
    }
    let residual = physical_residual(setup, &r_nodes, &phi_nodes, &values, &tr);
    let mean_perp_norm: Vec<f64> = (0..n_r)
        .map(|j| {
            let row = &values[j * n_phi..(j + 1) * n_phi];
            let s = row.iter().fold(Vec3::zeros(), |a, v| a + v) / n_phi as f64;
            s.x.hypot(s.y)
        })
        .collect();
    Ok(AnnulusReport {
        setup: *setup,
        max_mean_perp: mean_perp_norm.iter().cloned().fold(0.0, f64::max),
        mean_perp_norm,
        residual,
        field_max_norm: values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        r_nodes,
        phi_nodes,
        values,
    })
}

/// Residual of the scheme evaluated row by row in physical space.
fn physical_residual(setup: &AnnulusSetup, r: &[f64], phi: &[f64], values: &[Vec3], tr: &PhiTransform) -> f64 {
    let (n_r, n) = (setup.n_r, setup.n_phi);
    let dr = (OUTER - INNER) / n_r as f64;
    let mut worst: f64 = 0.0;
    for c in 0..3 {
        let kap = if c == 2 { setup.kappa } else { 0.0 };
        let comp = |j: usize, i: usize| values[j * n + i][c];
        for j in 0..n_r {
            let row: Vec<f64> = (0..n).map(|i| comp(j, i)).collect();
            let mut spec = tr.forward(&row);
            for (s, l) in spec.iter_mut().zip(tr.lambda()) {
                *s *= *l;
            }
            let dphi2 = tr.inverse(&spec);
            for i in 0..n {
                let u = comp(j, i);
                let lower = if j == 0 {
                    (INNER, setup.inner.value_at(phi[i])[c], 0.5 * dr)
                } else {
                    (r[j] - 0.5 * dr, comp(j - 1, i), dr)
                };
                let upper = if j + 1 == n_r {
                    (OUTER, setup.outer.value_at(phi[i])[c], 0.5 * dr)
                } else {
                    (r[j] + 0.5 * dr, comp(j + 1, i), dr)
                };
                let flux = upper.0 * (upper.1 - u) / upper.2 - lower.0 * (u - lower.1) / lower.2;
                let res = -flux + (dphi2[i] / n as f64 / r[j] + kap * r[j] * u) * dr;
                worst = worst.max(res.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(kappa: f64, inner: BoundaryData, outer: BoundaryData) -> AnnulusSetup {
        AnnulusSetup { n_r: 64, n_phi: 16, kappa, inner, outer }
    }

    #[test]
    fn constant_e3_data_gives_constant_solution() {
        let e3 = BoundaryData::Symmetric([0.0, 0.0, 1.0]);
        let rep = solve_annulus_example(&setup(0.0, e3, e3)).unwrap();
        for v in &rep.values {
            assert!((v - Vec3::z()).norm() < 1e-12);
        }
        assert!(rep.residual < 1e-10);
    }

    // The k = 1 mode of A^⊤(φ)e₁ data, κ = 0, solves (r u')' = u/r with
    // u(1) = u(2) = 1, i.e. u = r/3 + 2/(3r).
    #[test]
    fn radial_data_matches_the_first_mode_solution() {
        let e1 = BoundaryData::Symmetric([1.0, 0.0, 0.0]);
        let rep = solve_annulus_example(&AnnulusSetup { n_r: 200, ..setup(0.0, e1, e1) }).unwrap();
        let n = rep.setup.n_phi;
        for (j, r) in rep.r_nodes.iter().enumerate() {
            let u = r / 3.0 + 2.0 / (3.0 * r);
            let v = rep.values[j * n + 3];
            let phi = rep.phi_nodes[3];
            assert!((v.x - u * phi.cos()).abs() < 1e-4, "{r}: {} vs {}", v.x, u * phi.cos());
            assert!((v.y - u * phi.sin()).abs() < 1e-4);
        }
        assert!(rep.max_mean_perp < 1e-12);
        assert!(rep.field_max_norm > 0.9);
    }

    #[test]
    fn eigenvalues_are_detected_for_negative_kappa() {
        let mu = dirichlet_eigenvalues(64, 0.0, 2);
        // continuum: first Dirichlet eigenvalue of the radial Bessel problem on
        // [1, 2] is about 9.753 (zero of J₀Y₀ cross product); FV is close
        assert!((mu[0] - 9.753).abs() < 0.05, "{mu:?}");
        let e3 = BoundaryData::Symmetric([0.0, 0.0, 1.0]);
        let err = solve_annulus_example(&setup(-mu[0], e3, e3)).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
        assert!(solve_annulus_example(&setup(-mu[0] * 0.9, e3, e3)).is_ok());
    }
}
