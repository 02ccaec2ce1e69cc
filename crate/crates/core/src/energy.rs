//! The discrete energy E_ω = D + A + P, its gradient, the slice functional
//! Φ_E and the circular integral weight.
//!
//! Discretization: the φ-derivative term uses the exact trigonometric form
//! Σ_k λ_k |c_k|² per row, ∂_t lives on the staggered edges between rows.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{circular_average_perp, circular_average_perp_values, DiscreteField, Variant, ON_TARGET_TOL};
use crate::geometry::{surface_normal, SurfaceMesh, SurfaceOfRevolution, Vec3};
use crate::spline::CubicSpline;

pub const SQRT_TAU: f64 = 2.506_628_274_631_000_2;

const KINK_RATIO: f64 = 1e3;
const POTENTIAL_SCAN: usize = 10_000;

#[derive(Debug, Clone)]
pub struct TablePotential {
    samples: Vec<[f64; 2]>,
    spline: CubicSpline,
}

impl TablePotential {
    pub fn new(samples: &[[f64; 2]]) -> Result<Self> {
        let s: Vec<f64> = samples.iter().map(|p| p[0]).collect();
        let g: Vec<f64> = samples.iter().map(|p| p[1]).collect();
        let spline = CubicSpline::natural(&s, &g)
            .map_err(|e| Error::InvalidPotential(format!("potential table: {e}")))?;
        Ok(TablePotential { samples: samples.to_vec(), spline })
    }

    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    /// Second-difference ratio test for kinks among samples in [lo, hi].
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let p = &self.samples;
        let scale = p.iter().fold(0.0f64, |a, q| a.max(q[1].abs()));
        let floor = 1e-12 * (1.0 + scale);
        let d2: Vec<f64> = p
            .windows(3)
            .map(|w| {
                let (h0, h1) = (w[1][0] - w[0][0], w[2][0] - w[1][0]);
                let h = 0.5 * (h0 + h1);
                // rescale to a uniform-grid second difference
                ((w[2][1] - w[1][1]) / h1 - (w[1][1] - w[0][1]) / h0).abs() * h
            })
            .collect();
        let mut out = Vec::new();
        for k in 0..d2.len() {
            let s = p[k + 1][0];
            if s < lo || s > hi {
                continue;
            }
            let left = if k > 0 { d2[k - 1] } else { 0.0 };
            let right = if k + 1 < d2.len() { d2[k + 1] } else { 0.0 };
            let neighbour = left.max(right).max(floor);
            if d2[k] > floor && d2[k] / neighbour > KINK_RATIO {
                out.push(s);
            }
        }
        out
    }
}

/// Anisotropy potential g.
#[derive(Debug, Clone)]
pub enum AnisotropyPotential {
    /// κ s².
    Quadratic { kappa: f64 },
    /// |κ| (1 − s²) for κ < 0.
    EasyNormal { kappa: f64 },
    /// λ (1 − s²)².
    Quartic { lambda: f64 },
    Table(TablePotential),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub s_max: f64,
    pub min_value: f64,
    pub lipschitz: f64,
}

impl AnisotropyPotential {
    pub fn zero() -> Self {
        AnisotropyPotential::Quadratic { kappa: 0.0 }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            AnisotropyPotential::Quadratic { kappa } => kappa * s * s,
            AnisotropyPotential::EasyNormal { kappa } => kappa.abs() * (1.0 - s * s),
            AnisotropyPotential::Quartic { lambda } => {
                let u = 1.0 - s * s;
                lambda * u * u
            }
            AnisotropyPotential::Table(t) => t.spline.eval(s).0,
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            AnisotropyPotential::Quadratic { kappa } => 2.0 * kappa * s,
            AnisotropyPotential::EasyNormal { kappa } => -2.0 * kappa.abs() * s,
            AnisotropyPotential::Quartic { lambda } => -4.0 * lambda * s * (1.0 - s * s),
            AnisotropyPotential::Table(t) => t.spline.eval(s).1,
        }
    }

    /// Bound on |g''| over |s| ≤ s_max, used to scale the preconditioner.
    pub fn stiffness(&self, s_max: f64) -> f64 {
        match self {
            AnisotropyPotential::Quadratic { kappa } | AnisotropyPotential::EasyNormal { kappa } => {
                2.0 * kappa.abs()
            }
            AnisotropyPotential::Quartic { lambda } => {
                lambda.abs() * (12.0 * s_max * s_max - 4.0).abs().max(4.0)
            }
            AnisotropyPotential::Table(t) => (0..=200)
                .map(|k| t.spline.eval(-s_max + 2.0 * s_max * k as f64 / 200.0).2.abs())
                .fold(0.0, f64::max),
        }
    }

    /// Checks g ≥ 0 and differentiability on [−s_max, s_max] and records a
    /// Lipschitz bound.
    pub fn validate(&self, s_max: f64) -> Result<PotentialReport> {
        if let AnisotropyPotential::Table(t) = self {
            let (lo, hi) = t.spline.domain();
            // unit vectors carry a few ulps of norm error
            let reach = s_max * (1.0 - 8.0 * f64::EPSILON);
            if lo > -reach || hi < reach {
                return Err(Error::InvalidPotential(format!(
                    "table covers [{lo}, {hi}] but |m·a| reaches {s_max}"
                )));
            }
            let kinks = t.kinks(-s_max, s_max);
            if !kinks.is_empty() {
                return Err(Error::NonDifferentiable(format!("table kinks near s = {kinks:?}")));
            }
        }
        if let AnisotropyPotential::EasyNormal { kappa } = self {
            if *kappa >= 0.0 {
                return Err(Error::InvalidPotential(format!(
                    "easy-normal form needs kappa < 0, got {kappa}"
                )));
            }
        }
        let mut min_value = f64::INFINITY;
        let mut lipschitz = 0.0f64;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=POTENTIAL_SCAN {
            let s = -s_max + 2.0 * s_max * k as f64 / POTENTIAL_SCAN as f64;
            let g = self.value(s);
            if !g.is_finite() {
                return Err(Error::InvalidPotential(format!("g({s}) is not finite")));
            }
            min_value = min_value.min(g);
            if let Some((s0, g0)) = prev {
                if s > s0 {
                    lipschitz = lipschitz.max((g - g0).abs() / (s - s0));
                }
            }
            prev = Some((s, g));
        }
        if min_value < -1e-12 {
            return Err(Error::InvalidPotential(format!(
                "g takes the negative value {min_value} on [-{s_max}, {s_max}]"
            )));
        }
        Ok(PotentialReport { s_max, min_value, lipschitz })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnisotropyKind {
    SurfaceNormal,
    ConstantE3,
    /// a(φ, t_j) = A^⊤(φ) a₀(t_j).
    SymmetricProfile(Vec<Vec3>),
    /// a(φ, t_j) = A(φ) a₀(t_j).
    AntisymmetricProfile(Vec<Vec3>),
}

#[derive(Debug, Clone)]
pub struct AnisotropyField {
    pub kind: AnisotropyKind,
    pub values: Vec<Vec3>,
}

impl AnisotropyField {
    pub fn build(mesh: &SurfaceMesh, kind: AnisotropyKind) -> Result<Self> {
        let (profile, variant) = match &kind {
            AnisotropyKind::SurfaceNormal => {
                let p = (0..mesh.n_t).map(|j| surface_normal(mesh, 0, j)).collect::<Result<Vec<_>>>()?;
                (p, Variant::Symmetric)
            }
            AnisotropyKind::ConstantE3 => (vec![Vec3::z(); mesh.n_t], Variant::Symmetric),
            AnisotropyKind::SymmetricProfile(p) => (p.clone(), Variant::Symmetric),
            AnisotropyKind::AntisymmetricProfile(p) => (p.clone(), Variant::Antisymmetric),
        };
        if profile.len() != mesh.n_t {
            return Err(Error::MeshMismatch(format!(
                "anisotropy profile has {} rows, mesh has {}",
                profile.len(),
                mesh.n_t
            )));
        }
        let mut values = Vec::with_capacity(mesh.len());
        for a0 in &profile {
            for &phi in &mesh.phi_nodes {
                values.push(variant.apply(phi, a0));
            }
        }
        Ok(AnisotropyField { kind, values })
    }

    /// Whether the field is (anti)symmetric in the sense of `variant`.
    pub fn matches(&self, variant: Variant) -> bool {
        match (&self.kind, variant) {
            (AnisotropyKind::ConstantE3, _) => true,
            (AnisotropyKind::SurfaceNormal | AnisotropyKind::SymmetricProfile(_), v) => {
                v == Variant::Symmetric
            }
            (AnisotropyKind::AntisymmetricProfile(_), v) => v == Variant::Antisymmetric,
        }
    }

    /// The variant the field has, symmetric when it has both.
    pub fn variant(&self) -> Variant {
        match self.kind {
            AnisotropyKind::AntisymmetricProfile(_) => Variant::Antisymmetric,
            _ => Variant::Symmetric,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Constant { lambda: f64 },
    /// ω = c / ℌ₁(t).
    InverseRadius { c: f64 },
    TProfile,
    General,
}

/// Weight ω cached at nodes with W²(t_j) = Σ_i ω²(φ_i, t_j) Δφ.
#[derive(Debug, Clone)]
pub struct Weight {
    pub kind: WeightKind,
    pub omega: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Weight {
    pub fn from_nodes(mesh: &SurfaceMesh, kind: WeightKind, omega: Vec<f64>) -> Result<Self> {
        if omega.len() != mesh.len() {
            return Err(Error::MeshMismatch("weight node count differs from mesh".into()));
        }
        if let Some(k) = omega.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeight(format!(
                "omega = {} at node ({}, {})",
                omega[k],
                k % mesh.n_phi,
                k / mesh.n_phi
            )));
        }
        let n = mesh.n_phi;
        let w2 = (0..mesh.n_t)
            .map(|j| omega[j * n..(j + 1) * n].iter().map(|w| w * w).sum::<f64>() * mesh.dphi)
            .collect();
        Ok(Weight { kind, omega, w2 })
    }

    pub fn zero(mesh: &SurfaceMesh) -> Self {
        Self::constant(mesh, 0.0).expect("zero weight is valid")
    }

    pub fn constant(mesh: &SurfaceMesh, lambda: f64) -> Result<Self> {
        Self::from_nodes(mesh, WeightKind::Constant { lambda }, vec![lambda; mesh.len()])
    }

    pub fn inverse_radius(mesh: &SurfaceMesh, c: f64) -> Result<Self> {
        let omega = (0..mesh.len()).map(|k| c / mesh.h1[k / mesh.n_phi]).collect();
        Self::from_nodes(mesh, WeightKind::InverseRadius { c }, omega)
    }

    pub fn t_profile(mesh: &SurfaceMesh, f: impl Fn(f64) -> f64) -> Result<Self> {
        let omega = (0..mesh.len()).map(|k| f(mesh.t_nodes[k / mesh.n_phi])).collect();
        Self::from_nodes(mesh, WeightKind::TProfile, omega)
    }

    pub fn general(mesh: &SurfaceMesh, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let omega = (0..mesh.len())
            .map(|k| f(mesh.phi_nodes[k % mesh.n_phi], mesh.t_nodes[k / mesh.n_phi]))
            .collect();
        Self::from_nodes(mesh, WeightKind::General, omega)
    }

    pub fn circular(&self, j_t: usize) -> f64 {
        self.w2[j_t].sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.omega.iter().all(|w| *w == 0.0)
    }
}

/// Dirichlet data for one boundary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "value", rename_all = "snake_case")]
pub enum BoundaryData {
    /// A^⊤(φ) v.
    Symmetric([f64; 3]),
    /// A(φ) v.
    Antisymmetric([f64; 3]),
    /// v at every node of the row.
    Constant([f64; 3]),
}

impl BoundaryData {
    pub fn vector(&self) -> Vec3 {
        let v = match self {
            BoundaryData::Symmetric(v) | BoundaryData::Antisymmetric(v) | BoundaryData::Constant(v) => v,
        };
        Vec3::new(v[0], v[1], v[2])
    }

    pub fn value_at(&self, phi: f64) -> Vec3 {
        let v = self.vector();
        match self {
            BoundaryData::Symmetric(_) => Variant::Symmetric.apply(phi, &v),
            BoundaryData::Antisymmetric(_) => Variant::Antisymmetric.apply(phi, &v),
            BoundaryData::Constant(_) => v,
        }
    }

    /// Whether the row is (anti)symmetric in the sense of `variant`.
    pub fn compatible(&self, variant: Variant) -> bool {
        let v = self.vector();
        let on_axis = v.x == 0.0 && v.y == 0.0;
        match self {
            BoundaryData::Symmetric(_) => variant == Variant::Symmetric || on_axis,
            BoundaryData::Antisymmetric(_) => variant == Variant::Antisymmetric || on_axis,
            BoundaryData::Constant(_) => on_axis,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub enum Boundary {
    #[default]
    Free,
    Dirichlet { bottom: Option<BoundaryData>, top: Option<BoundaryData> },
}

impl Boundary {
    /// (row index, data) pairs of frozen rows.
    pub fn rows(&self, n_t: usize) -> Vec<(usize, BoundaryData)> {
        match self {
            Boundary::Free => Vec::new(),
            Boundary::Dirichlet { bottom, top } => {
                let mut out = Vec::new();
                if let Some(b) = bottom {
                    out.push((0, *b));
                }
                if let Some(t) = top {
                    out.push((n_t - 1, *t));
                }
                out
            }
        }
    }

    pub fn frozen_mask(&self, n_t: usize) -> Vec<bool> {
        let mut mask = vec![false; n_t];
        for (j, _) in self.rows(n_t) {
            mask[j] = true;
        }
        mask
    }

    /// Overwrites frozen rows of `values` with the boundary data.
    pub fn impose(&self, mesh: &SurfaceMesh, values: &mut [Vec3]) {
        for (j, data) in self.rows(mesh.n_t) {
            for i in 0..mesh.n_phi {
                values[j * mesh.n_phi + i] = data.value_at(mesh.phi_nodes[i]);
            }
        }
    }
}

/// One instance of E_ω.
#[derive(Debug, Clone)]
pub struct EnergyParams {
    pub potential: AnisotropyPotential,
    pub aniso: AnisotropyField,
    pub weight: Weight,
    pub boundary: Boundary,
    pub potential_report: PotentialReport,
}

impl EnergyParams {
    pub fn new(
        mesh: &SurfaceMesh,
        target: &SurfaceOfRevolution,
        potential: AnisotropyPotential,
        aniso: AnisotropyField,
        weight: Weight,
        boundary: Boundary,
    ) -> Result<Self> {
        if aniso.values.len() != mesh.len() || weight.omega.len() != mesh.len() {
            return Err(Error::MeshMismatch("energy data built for another mesh".into()));
        }
        if mesh.closed && boundary != Boundary::Free {
            return Err(Error::InvalidBoundary("closed base curves have no boundary rows".into()));
        }
        for (j, data) in boundary.rows(mesh.n_t) {
            let v = data.vector();
            let d = target.distance(&v);
            if !(d <= ON_TARGET_TOL) {
                return Err(Error::InvalidBoundary(format!(
                    "boundary value {v:?} for row {j} is {d:e} away from the target"
                )));
            }
        }
        let s_max = target.max_norm() * aniso.max_norm();
        let potential_report = potential.validate(s_max)?;
        Ok(EnergyParams { potential, aniso, weight, boundary, potential_report })
    }

    /// Zero potential, constant-e₃ field, zero weight, free boundary.
    pub fn dirichlet_only(mesh: &SurfaceMesh, target: &SurfaceOfRevolution) -> Result<Self> {
        Self::new(
            mesh,
            target,
            AnisotropyPotential::zero(),
            AnisotropyField::build(mesh, AnisotropyKind::ConstantE3)?,
            Weight::zero(mesh),
            Boundary::Free,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub anisotropy: f64,
    pub penalty: f64,
    pub total: f64,
}

/// The three pieces of the Dirichlet term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletParts {
    /// φ-derivative mass of the perp components.
    pub phi_perp: f64,
    /// φ-derivative mass of the e₃ component.
    pub phi_z: f64,
    /// t-derivative mass.
    pub t: f64,
}

impl DirichletParts {
    pub fn total(&self) -> f64 {
        self.phi_perp + self.phi_z + self.t
    }
}

fn row_component(row: &[Vec3], c: usize, buf: &mut [f64]) {
    for (dst, v) in buf.iter_mut().zip(row) {
        *dst = v[c];
    }
}

fn edge_coefficient(mesh: &SurfaceMesh, h1: f64, h2: f64) -> f64 {
    h1 / h2 * mesh.dphi / mesh.dt
}

fn phi_coefficient(mesh: &SurfaceMesh, j: usize) -> f64 {
    let n = mesh.n_phi as f64;
    mesh.h2[j] / mesh.h1[j] * mesh.dt * TAU / (n * n)
}

pub fn dirichlet_parts_values(mesh: &SurfaceMesh, values: &[Vec3]) -> DirichletParts {
    let n = mesh.n_phi;
    let mut buf = vec![0.0; n];
    let mut parts = DirichletParts { phi_perp: 0.0, phi_z: 0.0, t: 0.0 };
    for j in 0..mesh.n_t {
        let row = &values[j * n..(j + 1) * n];
        let coef = phi_coefficient(mesh, j);
        for c in 0..3 {
            row_component(row, c, &mut buf);
            let p = coef * mesh.transform.weighted_power(&mesh.transform.forward(&buf));
            if c < 2 {
                parts.phi_perp += p;
            } else {
                parts.phi_z += p;
            }
        }
    }
    for e in &mesh.edges {
        let b = edge_coefficient(mesh, e.h1, e.h2);
        let lo = &values[e.lo * n..(e.lo + 1) * n];
        let hi = &values[e.hi * n..(e.hi + 1) * n];
        parts.t += b * lo.iter().zip(hi).map(|(a, c)| (c - a).norm_squared()).sum::<f64>();
    }
    parts
}

pub fn dirichlet_energy(field: &DiscreteField) -> f64 {
    dirichlet_parts_values(&field.mesh, &field.values).total()
}

fn anisotropy_values(mesh: &SurfaceMesh, values: &[Vec3], params: &EnergyParams) -> f64 {
    let n = mesh.n_phi;
    (0..mesh.n_t)
        .map(|j| {
            let row: f64 = (j * n..(j + 1) * n)
                .map(|k| params.potential.value(values[k].dot(&params.aniso.values[k])))
                .sum();
            row * mesh.row_weights[j]
        })
        .sum()
}

pub fn anisotropy_energy(field: &DiscreteField, params: &EnergyParams) -> f64 {
    anisotropy_values(&field.mesh, &field.values, params)
}

fn penalty_values(mesh: &SurfaceMesh, values: &[Vec3], params: &EnergyParams) -> f64 {
    if params.weight.is_zero() {
        return 0.0;
    }
    circular_average_perp_values(mesh, values)
        .iter()
        .enumerate()
        .map(|(j, m)| params.weight.w2[j] * mesh.sqrtg[j] * mesh.dt * (m[0] * m[0] + m[1] * m[1]))
        .sum()
}

/// Σ_j W²(t_j) |⟨m_⊥⟩(t_j)|² √g(t_j) Δt.
pub fn penalty_energy(field: &DiscreteField, params: &EnergyParams) -> f64 {
    penalty_values(&field.mesh, &field.values, params)
}

/// The raw surface integral of |⟨m⟩ × e₃|² ω², summed node by node.
pub fn penalty_energy_direct(field: &DiscreteField, params: &EnergyParams) -> f64 {
    let mesh = &field.mesh;
    let means = circular_average_perp(field);
    let mut acc = 0.0;
    for j in 0..mesh.n_t {
        let mean = Vec3::new(means[j][0], means[j][1], 0.0);
        let cross = mean.cross(&Vec3::z()).norm_squared();
        for i in 0..mesh.n_phi {
            let w = params.weight.omega[j * mesh.n_phi + i];
            acc += cross * w * w * mesh.quad_weight(i, j);
        }
    }
    acc
}

pub fn energy_values(mesh: &SurfaceMesh, values: &[Vec3], params: &EnergyParams) -> EnergyBreakdown {
    let dirichlet = dirichlet_parts_values(mesh, values).total();
    let anisotropy = anisotropy_values(mesh, values, params);
    let penalty = penalty_values(mesh, values, params);
    EnergyBreakdown { dirichlet, anisotropy, penalty, total: dirichlet + anisotropy + penalty }
}

pub fn total_energy(field: &DiscreteField, params: &EnergyParams) -> EnergyBreakdown {
    energy_values(&field.mesh, &field.values, params)
}

/// Exact gradient of the discrete energy with respect to each node value.
pub fn euclidean_gradient(mesh: &SurfaceMesh, values: &[Vec3], params: &EnergyParams) -> Vec<Vec3> {
    let n = mesh.n_phi;
    let tr = &mesh.transform;
    let lambda = tr.lambda();
    let mut grad = vec![Vec3::zeros(); mesh.len()];
    let mut buf = vec![0.0; n];
    let mut spec: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
    for j in 0..mesh.n_t {
        let coef = 2.0 * phi_coefficient(mesh, j);
        let row = &values[j * n..(j + 1) * n];
        for c in 0..3 {
            row_component(row, c, &mut buf);
            let x = tr.forward(&buf);
            for k in 0..n {
                spec[k] = x[k] * lambda[k];
            }
            tr.inverse_complex(&mut spec);
            for i in 0..n {
                grad[j * n + i][c] += coef * spec[i].re;
            }
        }
    }
    for e in &mesh.edges {
        let b = 2.0 * edge_coefficient(mesh, e.h1, e.h2);
        for i in 0..n {
            let d = (values[e.hi * n + i] - values[e.lo * n + i]) * b;
            grad[e.hi * n + i] += d;
            grad[e.lo * n + i] -= d;
        }
    }
    for j in 0..mesh.n_t {
        let w = mesh.row_weights[j];
        for k in j * n..(j + 1) * n {
            let a = &params.aniso.values[k];
            grad[k] += a * (params.potential.derivative(values[k].dot(a)) * w);
        }
    }
    if !params.weight.is_zero() {
        let means = circular_average_perp_values(mesh, values);
        for j in 0..mesh.n_t {
            let f = 2.0 * params.weight.w2[j] * mesh.sqrtg[j] * mesh.dt / n as f64;
            let g = Vec3::new(means[j][0] * f, means[j][1] * f, 0.0);
            for k in j * n..(j + 1) * n {
                grad[k] += g;
            }
        }
    }
    grad
}

/// Euclidean gradient projected onto the tangent planes of the target.
pub fn riemannian_gradient(field: &DiscreteField, params: &EnergyParams) -> Vec<Vec3> {
    let g = euclidean_gradient(&field.mesh, &field.values, params);
    tangent_part(&field.target, &field.values, g)
}

pub(crate) fn tangent_part(target: &SurfaceOfRevolution, values: &[Vec3], mut g: Vec<Vec3>) -> Vec<Vec3> {
    for (gk, p) in g.iter_mut().zip(values) {
        let nrm = target.normal_at(p);
        *gk -= nrm * nrm.dot(gk);
    }
    g
}

/// Φ_E(φ_i) = Σ_j [|m_⊥|²/ℌ₁² + |∂_t m|²/ℌ₂² + g(m·a)] √g Δt, with the ∂_t
/// part on the staggered edges.
pub fn phi_slice_energy(field: &DiscreteField, params: &EnergyParams) -> Vec<f64> {
    let mesh = &field.mesh;
    let n = mesh.n_phi;
    let v = &field.values;
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..mesh.n_t {
            let k = j * n + i;
            let perp = v[k].x * v[k].x + v[k].y * v[k].y;
            acc += perp * mesh.h2[j] / mesh.h1[j] * mesh.dt;
            acc += params.potential.value(v[k].dot(&params.aniso.values[k])) * mesh.sqrtg[j] * mesh.dt;
        }
        for e in &mesh.edges {
            acc += e.h1 / e.h2 / mesh.dt * (v[e.hi * n + i] - v[e.lo * n + i]).norm_squared();
        }
        *slot = acc;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiStar {
    pub index: usize,
    pub phi: f64,
    pub value: f64,
}

/// Node minimizing Φ_E; near-ties (1e-12 relative) go to the smallest index.
pub fn argmin_phi_slice(field: &DiscreteField, params: &EnergyParams) -> PhiStar {
    let phi = phi_slice_energy(field, params);
    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + min.abs());
    let index = phi.iter().position(|&p| p <= min + tol).unwrap_or(0);
    PhiStar { index, phi: field.mesh.phi_nodes[index], value: phi[index] }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisMargin {
    /// min_j ℌ₁(t_j) W(t_j).
    pub min: f64,
    /// max_j ℌ₁(t_j) W(t_j).
    pub max: f64,
    pub strict: bool,
    pub borderline: bool,
    pub bounded: bool,
}

const MARGIN_REL_TOL: f64 = 1e-9;

pub fn hypothesis_margin(mesh: &SurfaceMesh, weight: &Weight) -> HypothesisMargin {
    let vals: Vec<f64> = (0..mesh.n_t).map(|j| mesh.h1[j] * weight.circular(j)).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(0.0, f64::max);
    HypothesisMargin {
        min,
        max,
        strict: min > SQRT_TAU * (1.0 + MARGIN_REL_TOL),
        borderline: (min - SQRT_TAU).abs() <= MARGIN_REL_TOL * SQRT_TAU,
        bounded: max.is_finite(),
    }
}

/// Middle terms of the symmetrization chain for a field m:
/// level 1 = Δφ Σ_i Φ_E(φ_i), level 2 = E(m) without the φ-derivative mass
/// of m·e₃, level 3 = E(m).
pub fn chain_levels(field: &DiscreteField, params: &EnergyParams) -> [f64; 3] {
    let phi = phi_slice_energy(field, params);
    let level1 = field.mesh.dphi * phi.iter().sum::<f64>();
    let parts = dirichlet_parts_values(&field.mesh, &field.values);
    let e = total_energy(field, params);
    [level1, e.total - parts.phi_z, e.total]
}
