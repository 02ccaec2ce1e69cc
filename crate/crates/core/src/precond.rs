//! Sobolev (H¹-type) preconditioners for the projected descent.
//!
//! The preconditioner is the quadratic part of the energy plus a mass shift:
//! P = μ M + K_φ + K_t (+ the penalty on the mean of the perp components).
//! It is block diagonal in the φ-Fourier index and tridiagonal in t, so each
//! application is one FFT per row and one banded solve per mode.

use rustfft::num_complex::Complex;

use crate::energy::EnergyParams;
use crate::geometry::{SurfaceMesh, Vec3};
use crate::linalg::Tridiagonal;

#[derive(Debug, Clone)]
pub struct Preconditioner2d {
    n_phi: usize,
    n_t: usize,
    // [mode][0 = perp, 1 = e₃]
    systems: Vec<[Tridiagonal; 2]>,
    frozen: Vec<bool>,
}

fn edge_weights(mesh: &SurfaceMesh, scale: f64) -> Vec<(usize, usize, f64)> {
    mesh.edges
        .iter()
        .map(|e| (e.lo, e.hi, scale * e.h1 / e.h2 / mesh.dt))
        .collect()
}

fn assemble(
    n_t: usize,
    diag: impl Fn(usize) -> f64,
    edges: &[(usize, usize, f64)],
    frozen: &[bool],
) -> Tridiagonal {
    let mut m = Tridiagonal::new(n_t);
    for j in 0..n_t {
        m.diag[j] = diag(j);
    }
    for &(lo, hi, b) in edges {
        m.diag[lo] += b;
        m.diag[hi] += b;
        if hi == lo + 1 {
            m.upper[lo] -= b;
            m.lower[lo] -= b;
        } else {
            // wrap edge of a closed curve
            let c = m.corner.unwrap_or((0.0, 0.0));
            m.corner = Some((c.0 - b, c.1 - b));
        }
    }
    for j in 0..n_t {
        if frozen[j] {
            m.diag[j] = 1.0;
            if j > 0 {
                m.lower[j - 1] = 0.0;
            }
            if j + 1 < n_t {
                m.upper[j] = 0.0;
            }
            if let Some((tr, bl)) = m.corner {
                // only the first or last row touches the corner
                m.corner = Some((if j == 0 { 0.0 } else { tr }, if j == n_t - 1 { 0.0 } else { bl }));
            }
        }
    }
    m
}

/// Mass shift relative to the potential's stiffness.
pub fn mass_shift(params: &EnergyParams) -> f64 {
    let _ = params;
    1.0
}

impl Preconditioner2d {
    pub fn new(mesh: &SurfaceMesh, params: &EnergyParams) -> Self {
        let mu = mass_shift(params);
        let frozen = params.boundary.frozen_mask(mesh.n_t);
        let edges = edge_weights(mesh, mesh.dphi);
        let lambda = mesh.transform.lambda();
        let n = mesh.n_phi;
        let penalty: Vec<f64> = (0..mesh.n_t)
            .map(|j| params.weight.w2[j] * mesh.sqrtg[j] * mesh.dt / n as f64)
            .collect();
        let systems = (0..n)
            .map(|k| {
                let base = |j: usize| {
                    mu * mesh.row_weights[j] + mesh.h2[j] / mesh.h1[j] * mesh.dt * mesh.dphi * lambda[k]
                };
                let perp = assemble(
                    mesh.n_t,
                    |j| base(j) + if k == 0 { penalty[j] } else { 0.0 },
                    &edges,
                    &frozen,
                );
                let z = assemble(mesh.n_t, base, &edges, &frozen);
                [perp, z]
            })
            .collect();
        Preconditioner2d { n_phi: n, n_t: mesh.n_t, systems, frozen }
    }

    /// Solves P x = g; frozen rows of x are zero.
    pub fn apply(&self, mesh: &SurfaceMesh, g: &[Vec3]) -> Vec<Vec3> {
        let (n, nt) = (self.n_phi, self.n_t);
        let tr = &mesh.transform;
        let mut out = vec![Vec3::zeros(); g.len()];
        let mut buf = vec![0.0; n];
        for c in 0..3 {
            let class = if c < 2 { 0 } else { 1 };
            let mut spectra: Vec<Vec<Complex<f64>>> = Vec::with_capacity(nt);
            for j in 0..nt {
                for i in 0..n {
                    buf[i] = if self.frozen[j] { 0.0 } else { g[j * n + i][c] };
                }
                spectra.push(tr.forward(&buf));
            }
            let mut re = vec![0.0; nt];
            let mut im = vec![0.0; nt];
            for k in 0..n {
                for j in 0..nt {
                    re[j] = spectra[j][k].re;
                    im[j] = spectra[j][k].im;
                }
                let sys = &self.systems[k][class];
                let xr = sys.solve(&re).expect("preconditioner is positive definite");
                let xi = sys.solve(&im).expect("preconditioner is positive definite");
                for j in 0..nt {
                    spectra[j][k] = Complex::new(xr[j], xi[j]);
                }
            }
            for j in 0..nt {
                tr.inverse_complex(&mut spectra[j]);
                for i in 0..n {
                    out[j * n + i][c] = spectra[j][i].re / n as f64;
                }
            }
        }
        out
    }
}

/// Profile analogue: one tridiagonal system per component class.
#[derive(Debug, Clone)]
pub struct Preconditioner1d {
    systems: [Tridiagonal; 2],
    frozen: Vec<bool>,
}

impl Preconditioner1d {
    pub fn new(mesh: &SurfaceMesh, params: &EnergyParams) -> Self {
        let tau = std::f64::consts::TAU;
        let mu = mass_shift(params);
        let frozen = params.boundary.frozen_mask(mesh.n_t);
        let edges = edge_weights(mesh, tau);
        let base = |j: usize| mu * tau * mesh.sqrtg[j] * mesh.dt;
        let perp = assemble(
            mesh.n_t,
            |j| base(j) + tau * mesh.h2[j] / mesh.h1[j] * mesh.dt,
            &edges,
            &frozen,
        );
        let z = assemble(mesh.n_t, base, &edges, &frozen);
        Preconditioner1d { systems: [perp, z], frozen }
    }

    pub fn apply(&self, g: &[Vec3]) -> Vec<Vec3> {
        let nt = g.len();
        let mut out = vec![Vec3::zeros(); nt];
        for c in 0..3 {
            let rhs: Vec<f64> = (0..nt).map(|j| if self.frozen[j] { 0.0 } else { g[j][c] }).collect();
            let x = self.systems[if c < 2 { 0 } else { 1 }]
                .solve(&rhs)
                .expect("preconditioner is positive definite");
            for j in 0..nt {
                out[j][c] = x[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{AnisotropyField, AnisotropyKind, AnisotropyPotential, Boundary, Weight};
    use crate::fields::random_field;
    use crate::geometry::{build_mesh, GeneratingCurve, Role, SurfaceOfRevolution};
    use std::sync::Arc;

    // P applied through the energy's own quadratic form: for a quadratic
    // energy (zero potential), ∇E(v) = 2 K v, so P⁻¹(2Kv + 2μMv) = 2v.
    #[test]
    fn preconditioner_inverts_the_quadratic_part() {
        for curve in [
            GeneratingCurve::unit_sphere(),
            GeneratingCurve::torus(2.0, 0.5).unwrap(),
        ] {
            let mesh = Arc::new(build_mesh(SurfaceOfRevolution::base(curve), 8, 7).unwrap());
            let target = Arc::new(SurfaceOfRevolution::unit_sphere(Role::Target));
            let params = crate::energy::EnergyParams::new(
                &mesh,
                &target,
                AnisotropyPotential::zero(),
                AnisotropyField::build(&mesh, AnisotropyKind::ConstantE3).unwrap(),
                Weight::constant(&mesh, 0.7).unwrap(),
                Boundary::Free,
            )
            .unwrap();
            let v = random_field(mesh.clone(), target, 2, 3).values;
            let mu = mass_shift(&params);
            let mut g = crate::energy::euclidean_gradient(&mesh, &v, &params);
            for j in 0..mesh.n_t {
                for i in 0..mesh.n_phi {
                    g[j * mesh.n_phi + i] += v[j * mesh.n_phi + i] * (2.0 * mu * mesh.row_weights[j]);
                }
            }
            let p = Preconditioner2d::new(&mesh, &params);
            let x = p.apply(&mesh, &g);
            for (a, b) in x.iter().zip(&v) {
                assert!((a - 2.0 * b).norm() < 1e-10);
            }
        }
    }
}
