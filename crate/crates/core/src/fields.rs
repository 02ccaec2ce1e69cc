//! T-valued fields on a mesh, their φ-Fourier structure and symmetrization.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotate, rotate_inverse, SurfaceMesh, SurfaceOfRevolution, Vec3};

/// Constraint tolerance for values on the target surface.
pub const ON_TARGET_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Symmetric,
    Antisymmetric,
}

impl Variant {
    /// A^⊤(φ)v for the symmetric variant, A(φ)v for the antisymmetric one.
    pub fn apply(self, phi: f64, v: &Vec3) -> Vec3 {
        match self {
            Variant::Symmetric => rotate(phi, v),
            Variant::Antisymmetric => rotate_inverse(phi, v),
        }
    }

    pub fn unapply(self, phi: f64, v: &Vec3) -> Vec3 {
        match self {
            Variant::Symmetric => rotate_inverse(phi, v),
            Variant::Antisymmetric => rotate(phi, v),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Symmetric => "symmetric",
            Variant::Antisymmetric => "antisymmetric",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub mesh: Arc<SurfaceMesh>,
    pub target: Arc<SurfaceOfRevolution>,
    pub values: Vec<Vec3>,
}

impl DiscreteField {
    /// Wraps `values`, checking that each lies on the target.
    pub fn new(
        mesh: Arc<SurfaceMesh>,
        target: Arc<SurfaceOfRevolution>,
        values: Vec<Vec3>,
    ) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a {}x{} mesh",
                values.len(),
                mesh.n_phi,
                mesh.n_t
            )));
        }
        for (k, v) in values.iter().enumerate() {
            let distance = target.distance(v);
            if !(distance <= ON_TARGET_TOL) {
                return Err(Error::OffTarget {
                    i_phi: k % mesh.n_phi,
                    j_t: k / mesh.n_phi,
                    distance,
                });
            }
        }
        Ok(DiscreteField { mesh, target, values })
    }

    /// Projects each value onto the target.
    pub fn projected(
        mesh: Arc<SurfaceMesh>,
        target: Arc<SurfaceOfRevolution>,
        values: Vec<Vec3>,
    ) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a {}x{} mesh",
                values.len(),
                mesh.n_phi,
                mesh.n_t
            )));
        }
        let values = values.iter().map(|v| target.project(v)).collect();
        Ok(DiscreteField { mesh, target, values })
    }

    /// Field from a closure of (φ, t), projected onto the target.
    pub fn from_fn(
        mesh: Arc<SurfaceMesh>,
        target: Arc<SurfaceOfRevolution>,
        f: impl Fn(f64, f64) -> Vec3,
    ) -> Self {
        let mut values = Vec::with_capacity(mesh.len());
        for j in 0..mesh.n_t {
            for i in 0..mesh.n_phi {
                values.push(target.project(&f(mesh.phi_nodes[i], mesh.t_nodes[j])));
            }
        }
        DiscreteField { mesh, target, values }
    }

    pub fn constant(mesh: Arc<SurfaceMesh>, target: Arc<SurfaceOfRevolution>, v: Vec3) -> Self {
        Self::from_fn(mesh, target, |_, _| v)
    }

    pub fn at(&self, i_phi: usize, j_t: usize) -> &Vec3 {
        &self.values[j_t * self.mesh.n_phi + i_phi]
    }

    pub fn row(&self, j_t: usize) -> &[Vec3] {
        let n = self.mesh.n_phi;
        &self.values[j_t * n..(j_t + 1) * n]
    }

    pub fn with_values(&self, values: Vec<Vec3>) -> Self {
        DiscreteField { mesh: self.mesh.clone(), target: self.target.clone(), values }
    }

    /// Largest distance of a value from the target.
    pub fn constraint_violation(&self) -> f64 {
        self.values.iter().map(|v| self.target.distance(v)).fold(0.0, f64::max)
    }

    /// Quadrature-weighted L² distance to another field on the same mesh.
    pub fn l2_distance(&self, other: &DiscreteField) -> f64 {
        l2_norm_values(&self.mesh, &diff(&self.values, &other.values))
    }

    /// Rotates every value and the node it sits on by φ₀ = `shift`·Δφ:
    /// m'(φ_i) = A^⊤(φ₀) m(φ_{i−shift}).
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.mesh.n_phi;
        let phi0 = self.mesh.phi_nodes[shift % n];
        let mut values = self.values.clone();
        for j in 0..self.mesh.n_t {
            for i in 0..n {
                let src = (i + n - shift % n) % n;
                values[j * n + i] = rotate(phi0, &self.values[j * n + src]);
            }
        }
        self.with_values(values)
    }
}

fn diff(a: &[Vec3], b: &[Vec3]) -> Vec<Vec3> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// sqrt(Σ |v|² w) with the mesh quadrature weights.
pub fn l2_norm_values(mesh: &SurfaceMesh, values: &[Vec3]) -> f64 {
    let mut acc = 0.0;
    for j in 0..mesh.n_t {
        let w = mesh.row_weights[j];
        let row: f64 = values[j * mesh.n_phi..(j + 1) * mesh.n_phi]
            .iter()
            .map(|v| v.norm_squared())
            .sum();
        acc += w * row;
    }
    acc.sqrt()
}

/// Per-t profile γ(t_j) that generates a field by rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileField {
    pub t_nodes: Vec<f64>,
    pub values: Vec<Vec3>,
    pub variant: Variant,
}

/// φ-Fourier content of a field, row by row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDecomposition {
    pub mean_perp: Vec<[f64; 2]>,
    pub alpha_perp: Vec<[f64; 2]>,
    pub beta_perp: Vec<[f64; 2]>,
    pub eta: Vec<f64>,
    /// L² mass outside {k=0 of all components, k=±1 of the perp components}.
    pub residual_energy: f64,
    /// L² mass of the field, summed directly over nodes.
    pub field_mass: f64,
    /// L² mass summed over all Fourier modes.
    pub mode_mass: f64,
    /// Dirichlet mass of φ ↦ m·e₃, Σ (h2/h1) Δt 2π Σ λ_k |c_k|².
    pub e3_azimuthal_energy: f64,
}

impl ModeDecomposition {
    pub fn max_mean_perp(&self) -> f64 {
        self.mean_perp.iter().map(|m| m[0].hypot(m[1])).fold(0.0, f64::max)
    }
}

/// (1/n) Σ_i m_⊥(φ_i, t_j) per row.
pub fn circular_average_perp(field: &DiscreteField) -> Vec<[f64; 2]> {
    circular_average_perp_values(&field.mesh, &field.values)
}

pub fn circular_average_perp_values(mesh: &SurfaceMesh, values: &[Vec3]) -> Vec<[f64; 2]> {
    let n = mesh.n_phi;
    (0..mesh.n_t)
        .map(|j| {
            let (mut x, mut y) = (0.0, 0.0);
            for v in &values[j * n..(j + 1) * n] {
                x += v.x;
                y += v.y;
            }
            [x / n as f64, y / n as f64]
        })
        .collect()
}

pub fn mode_decompose(field: &DiscreteField) -> ModeDecomposition {
    mode_decompose_values(&field.mesh, &field.values)
}

/// Mode decomposition of arbitrary ℝ³ node values.
pub fn mode_decompose_values(mesh: &SurfaceMesh, values: &[Vec3]) -> ModeDecomposition {
    let n = mesh.n_phi;
    let nf = n as f64;
    let tr = &mesh.transform;
    let mut out = ModeDecomposition {
        mean_perp: Vec::with_capacity(mesh.n_t),
        alpha_perp: Vec::with_capacity(mesh.n_t),
        beta_perp: Vec::with_capacity(mesh.n_t),
        eta: Vec::with_capacity(mesh.n_t),
        residual_energy: 0.0,
        field_mass: 0.0,
        mode_mass: 0.0,
        e3_azimuthal_energy: 0.0,
    };
    let mut comp = vec![0.0; n];
    for j in 0..mesh.n_t {
        let row = &values[j * n..(j + 1) * n];
        let mut spectra = Vec::with_capacity(3);
        for c in 0..3 {
            for (dst, v) in comp.iter_mut().zip(row) {
                *dst = v[c];
            }
            spectra.push(tr.forward(&comp));
        }
        let coef = |c: usize, k: usize| spectra[c][k] / nf;
        out.mean_perp.push([coef(0, 0).re, coef(1, 0).re]);
        out.alpha_perp.push([2.0 * coef(0, 1).re, 2.0 * coef(1, 1).re]);
        out.beta_perp.push([-2.0 * coef(0, 1).im, -2.0 * coef(1, 1).im]);
        out.eta.push(coef(2, 0).re);

        let mut residual = 0.0;
        let mut total = 0.0;
        for c in 0..3 {
            for k in 0..n {
                let p = coef(c, k).norm_sqr();
                total += p;
                let kept = if c < 2 { k == 0 || k == 1 || k == n - 1 } else { k == 0 };
                if !kept {
                    residual += p;
                }
            }
        }
        let w = mesh.sqrtg[j] * mesh.dt * TAU;
        out.residual_energy += w * residual;
        out.mode_mass += w * total;
        out.field_mass +=
            mesh.row_weights[j] * row.iter().map(|v| v.norm_squared()).sum::<f64>();
        out.e3_azimuthal_energy += mesh.h2[j] / mesh.h1[j] * mesh.dt * TAU / (nf * nf)
            * tr.weighted_power(&spectra[2]);
    }
    out
}

/// m(φ,t) = α_⊥(t) cos φ + β_⊥(t) sin φ + η(t) e₃, as raw node values.
pub fn build_from_triple(
    mesh: &SurfaceMesh,
    alpha: &[[f64; 2]],
    beta: &[[f64; 2]],
    eta: &[f64],
) -> Vec<Vec3> {
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.n_t {
        for &phi in &mesh.phi_nodes {
            let (s, c) = phi.sin_cos();
            values.push(Vec3::new(
                alpha[j][0] * c + beta[j][0] * s,
                alpha[j][1] * c + beta[j][1] * s,
                eta[j],
            ));
        }
    }
    values
}

fn reference_value(variant: Variant, phi: f64, m0: &Vec3) -> Vec3 {
    variant.apply(phi, m0)
}

/// L² distance between the field and its (anti)symmetric extension of the
/// φ = 0 slice.
pub fn symmetry_defect(field: &DiscreteField, variant: Variant) -> f64 {
    let mesh = &field.mesh;
    let mut acc = 0.0;
    for j in 0..mesh.n_t {
        let m0 = *field.at(0, j);
        let row: f64 = (0..mesh.n_phi)
            .map(|i| (field.at(i, j) - reference_value(variant, mesh.phi_nodes[i], &m0)).norm_squared())
            .sum();
        acc += mesh.row_weights[j] * row;
    }
    acc.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineLabel {
    Symmetric,
    Antisymmetric,
    Neither,
}

/// RMS over row j of m(φ_i) − variant(φ_i, m(0)).
pub fn row_defect(field: &DiscreteField, j_t: usize, variant: Variant) -> f64 {
    let mesh = &field.mesh;
    let m0 = *field.at(0, j_t);
    let sum: f64 = (0..mesh.n_phi)
        .map(|i| (field.at(i, j_t) - reference_value(variant, mesh.phi_nodes[i], &m0)).norm_squared())
        .sum();
    (sum / mesh.n_phi as f64).sqrt()
}

/// Per-row line-symmetry label; rows meeting both tests are labeled
/// symmetric.
pub fn line_symmetry_classify(field: &DiscreteField, tol: f64) -> Vec<LineLabel> {
    (0..field.mesh.n_t)
        .map(|j| {
            if row_defect(field, j, Variant::Symmetric) < tol {
                LineLabel::Symmetric
            } else if row_defect(field, j, Variant::Antisymmetric) < tol {
                LineLabel::Antisymmetric
            } else {
                LineLabel::Neither
            }
        })
        .collect()
}

/// u(φ_i, t_j) = V(φ_i) V⁻¹(φ*) m(φ*, t_j) with φ* = φ_{phi_index}.
pub fn symmetrize(field: &DiscreteField, phi_index: usize, variant: Variant) -> DiscreteField {
    let mesh = &field.mesh;
    let phi_star = mesh.phi_nodes[phi_index];
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.n_t {
        let base = variant.unapply(phi_star, field.at(phi_index, j));
        for &phi in &mesh.phi_nodes {
            values.push(variant.apply(phi, &base));
        }
    }
    field.with_values(values)
}

pub fn build_from_profile(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    profile: &ProfileField,
) -> Result<DiscreteField> {
    if profile.values.len() != mesh.n_t
        || profile
            .t_nodes
            .iter()
            .zip(&mesh.t_nodes)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
    {
        return Err(Error::MeshMismatch("profile t-nodes do not match the mesh".into()));
    }
    let mut values = Vec::with_capacity(mesh.len());
    for g in &profile.values {
        for &phi in &mesh.phi_nodes {
            values.push(profile.variant.apply(phi, g));
        }
    }
    DiscreteField::new(mesh, target, values)
}

/// Seeded band-limited random field projected onto the target.
///
/// Each component is Σ_{|k| ≤ smoothness} p_k(t) e^{ikφ} with quadratic
/// p_k in the normalized parameter (first trigonometric harmonics in t for
/// closed curves). Modes with k ≠ 0 are damped like (x/x_max)^|k| on curves
/// that touch the axis so the field stays smooth at the poles.
pub fn random_field(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    seed: u64,
    smoothness: usize,
) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    // coefficients[c][k][cos/sin][3]
    let mut coeffs = vec![vec![[[0.0; 3]; 2]; smoothness + 1]; 3];
    for comp in coeffs.iter_mut() {
        for (k, mode) in comp.iter_mut().enumerate() {
            for (part, basis) in mode.iter_mut().enumerate() {
                if k == 0 && part == 1 {
                    continue;
                }
                for b in basis.iter_mut() {
                    *b = draw();
                }
            }
        }
    }
    let (a, b) = mesh.surface.curve.interval();
    let closed = mesh.closed;
    let taper = !mesh.surface.curve.touches_axis_at().is_empty();
    let x_max = mesh.h1.iter().cloned().fold(0.0, f64::max);
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.n_t {
        let t = mesh.t_nodes[j];
        let u = (t - a) / (b - a);
        let basis = if closed {
            [1.0, (TAU * u).cos(), (TAU * u).sin()]
        } else {
            let s = 2.0 * u - 1.0;
            [1.0, s, s * s]
        };
        let ratio = if taper { mesh.h1[j] / x_max } else { 1.0 };
        for &phi in &mesh.phi_nodes {
            let mut v = Vec3::zeros();
            for c in 0..3 {
                let mut acc = 0.0;
                for (k, mode) in coeffs[c].iter().enumerate() {
                    let amp = ratio.powi(k as i32);
                    let (s, co) = (k as f64 * phi).sin_cos();
                    let pc: f64 = mode[0].iter().zip(&basis).map(|(a, b)| a * b).sum();
                    let ps: f64 = mode[1].iter().zip(&basis).map(|(a, b)| a * b).sum();
                    acc += amp * (pc * co + ps * s);
                }
                v[c] = acc;
            }
            values.push(target.project(&v));
        }
    }
    DiscreteField { mesh, target, values }
}
