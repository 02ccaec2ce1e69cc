//! Projected preconditioned descent for the 2D energy and the reduced
//! profile functionals, plus the symmetrization certificate.

use std::f64::consts::TAU;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    argmin_phi_slice, chain_levels, energy_values, euclidean_gradient, hypothesis_margin, tangent_part,
    total_energy, EnergyBreakdown, EnergyParams, HypothesisMargin, PhiStar,
};
use crate::error::{Error, Result};
use crate::fields::{
    build_from_profile, line_symmetry_classify, mode_decompose, random_field, symmetrize, symmetry_defect,
    DiscreteField, LineLabel, ModeDecomposition, ProfileField, Variant,
};
use crate::geometry::{surface_normal, SurfaceMesh, SurfaceOfRevolution, Vec3};
use crate::precond::{Preconditioner1d, Preconditioner2d};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Stop when sup |grad_R E| ≤ grad_tol (1 + |E|).
    pub grad_tol: f64,
    pub step_init: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    /// Random initializations, in addition to the two normal-profile ones.
    pub restarts: usize,
    pub seed: u64,
    /// Highest φ-harmonic in random initial fields.
    pub init_harmonics: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 20000,
            grad_tol: 1e-6,
            step_init: 1.0,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            restarts: 8,
            seed: 0,
            init_harmonics: 3,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, v: f64| Err(Error::Config(format!("solver.{k} = {v} is out of range")));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol", self.grad_tol);
        }
        if !(self.step_init > 0.0) {
            return bad("step_init", self.step_init);
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c", self.armijo_c);
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink", self.armijo_shrink);
        }
        if self.max_iters == 0 {
            return bad("max_iters", 0.0);
        }
        Ok(())
    }

    /// Seed of random init `r`, decorrelated across restarts.
    pub fn restart_seed(&self, r: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((r as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}

/// What one descent needs from its problem.
trait Descent: Sync {
    fn energy(&self, v: &[Vec3]) -> f64;
    fn gradient(&self, v: &[Vec3]) -> Vec<Vec3>;
    fn precondition(&self, g: &[Vec3]) -> Vec<Vec3>;
    fn frozen(&self, k: usize) -> bool;
    fn target(&self) -> &SurfaceOfRevolution;
}

#[derive(Debug, Clone)]
struct Outcome {
    values: Vec<Vec3>,
    energy: f64,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

fn sup_norm(g: &[Vec3]) -> f64 {
    g.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn descend<P: Descent>(p: &P, mut v: Vec<Vec3>, cfg: &SolveConfig) -> Outcome {
    let target = p.target();
    let mut e = p.energy(&v);
    let mut step = cfg.step_init;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let mut g = tangent_part(target, &v, p.gradient(&v));
        for (k, gk) in g.iter_mut().enumerate() {
            if p.frozen(k) {
                *gk = Vec3::zeros();
            }
        }
        grad_norm = sup_norm(&g);
        if grad_norm <= cfg.grad_tol * (1.0 + e.abs()) {
            converged = true;
            break;
        }
        let mut d = tangent_part(target, &v, p.precondition(&g));
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = if p.frozen(k) { Vec3::zeros() } else { *dk * -0.5 };
        }
        let mut slope: f64 = g.iter().zip(&d).map(|(a, b)| a.dot(b)).sum();
        if !(slope < 0.0) {
            d = g.iter().map(|x| -x).collect();
            slope = -g.iter().map(|x| x.norm_squared()).sum::<f64>();
        }
        let mut s = (2.0 * step).min(cfg.step_init);
        let accepted = loop {
            let trial: Vec<Vec3> = v
                .iter()
                .zip(&d)
                .enumerate()
                .map(|(k, (x, dx))| if p.frozen(k) { *x } else { target.project(&(x + dx * s)) })
                .collect();
            let et = p.energy(&trial);
            if et <= e + cfg.armijo_c * s * slope {
                break Some((trial, et));
            }
            s *= cfg.armijo_shrink;
            if s < 1e-16 * cfg.step_init {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, et)) => {
                assert!(et <= e, "descent increased the energy: {e} -> {et}");
                v = trial;
                e = et;
                step = s;
            }
            // no step below roundoff decreases E
            None => break,
        }
    }
    Outcome { values: v, energy: e, iterations, grad_norm, converged }
}

struct Problem2d<'a> {
    mesh: &'a SurfaceMesh,
    target: &'a SurfaceOfRevolution,
    params: &'a EnergyParams,
    precond: Preconditioner2d,
    frozen_rows: Vec<bool>,
}

impl Descent for Problem2d<'_> {
    fn energy(&self, v: &[Vec3]) -> f64 {
        energy_values(self.mesh, v, self.params).total
    }
    fn gradient(&self, v: &[Vec3]) -> Vec<Vec3> {
        euclidean_gradient(self.mesh, v, self.params)
    }
    fn precondition(&self, g: &[Vec3]) -> Vec<Vec3> {
        self.precond.apply(self.mesh, g)
    }
    fn frozen(&self, k: usize) -> bool {
        self.frozen_rows[k / self.mesh.n_phi]
    }
    fn target(&self) -> &SurfaceOfRevolution {
        self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub init: String,
    pub seed: Option<u64>,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Symmetry diagnostics of a field, as used by the certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub defect_symmetric: f64,
    pub defect_antisymmetric: f64,
    pub line_labels: Vec<LineLabel>,
    pub neither_rows: usize,
    pub field_scale: f64,
    pub null_average_norm: f64,
    pub residual_ratio: f64,
    pub penalty_ratio: f64,
    pub e3_azimuthal_ratio: f64,
    /// max over qualifying rows of ||α_⊥| − |β_⊥|| / max|α_⊥|.
    pub orth_norm_gap: f64,
    /// max over qualifying rows of |α_⊥·β_⊥| / max|α_⊥|².
    pub orth_dot_gap: f64,
    pub qualifying_rows: usize,
}

pub const LABEL_REL_TOL: f64 = 1e-3;
pub const QUALIFYING_ALPHA: f64 = 1e-6;

fn ratio(x: f64, total: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / total.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn diagnose(field: &DiscreteField, modes: &ModeDecomposition, energy: &EnergyBreakdown) -> Diagnostics {
    let field_scale = field.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let line_labels = line_symmetry_classify(field, LABEL_REL_TOL * field_scale);
    let neither_rows = line_labels.iter().filter(|l| **l == LineLabel::Neither).count();
    let norms: Vec<(f64, f64, f64)> = modes
        .alpha_perp
        .iter()
        .zip(&modes.beta_perp)
        .map(|(a, b)| (a[0].hypot(a[1]), b[0].hypot(b[1]), a[0] * b[0] + a[1] * b[1]))
        .collect();
    let alpha_max = norms.iter().map(|n| n.0).fold(0.0, f64::max);
    let mut orth_norm_gap: f64 = 0.0;
    let mut orth_dot_gap: f64 = 0.0;
    let mut qualifying_rows = 0;
    for &(a, b, dot) in &norms {
        if a >= QUALIFYING_ALPHA {
            qualifying_rows += 1;
            orth_norm_gap = orth_norm_gap.max((a - b).abs() / alpha_max);
            orth_dot_gap = orth_dot_gap.max(dot.abs() / (alpha_max * alpha_max));
        }
    }
    Diagnostics {
        defect_symmetric: symmetry_defect(field, Variant::Symmetric),
        defect_antisymmetric: symmetry_defect(field, Variant::Antisymmetric),
        line_labels,
        neither_rows,
        field_scale,
        null_average_norm: modes.max_mean_perp(),
        residual_ratio: ratio(modes.residual_energy, energy.total),
        penalty_ratio: ratio(energy.penalty, energy.total),
        e3_azimuthal_ratio: ratio(modes.e3_azimuthal_energy, energy.total),
        orth_norm_gap,
        orth_dot_gap,
        qualifying_rows,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub best_field: DiscreteField,
    pub best_energy: EnergyBreakdown,
    pub best_index: usize,
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
    pub modes: ModeDecomposition,
    pub hypothesis_margin: HypothesisMargin,
    pub diagnostics: Diagnostics,
}

/// Symmetric or antisymmetric extension of the target-projected surface normal
/// profile, with boundary rows imposed.
pub fn normal_profile_init(
    mesh: &SurfaceMesh,
    target: &SurfaceOfRevolution,
    params: &EnergyParams,
    variant: Variant,
) -> Result<Vec<Vec3>> {
    let mut values = Vec::with_capacity(mesh.len());
    for j in 0..mesh.n_t {
        let g = target.project(&surface_normal(mesh, 0, j)?);
        for &phi in &mesh.phi_nodes {
            values.push(target.project(&variant.apply(phi, &g)));
        }
    }
    params.boundary.impose(mesh, &mut values);
    Ok(values)
}

fn pick_best(outcomes: &[Outcome]) -> usize {
    (0..outcomes.len())
        .min_by(|&a, &b| outcomes[a].energy.total_cmp(&outcomes[b].energy).then(a.cmp(&b)))
        .expect("at least one init")
}

pub fn minimize_2d(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    params: &EnergyParams,
    config: &SolveConfig,
) -> Result<SolveReport> {
    run_2d(mesh, target, params, config).map(|r| r.0)
}

fn run_2d(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    params: &EnergyParams,
    config: &SolveConfig,
) -> Result<(SolveReport, Vec<Outcome>)> {
    config.validate()?;
    let mut inits: Vec<(String, Option<u64>, Vec<Vec3>)> = Vec::new();
    for variant in [Variant::Symmetric, Variant::Antisymmetric] {
        let v = normal_profile_init(&mesh, &target, params, variant)?;
        inits.push((format!("normal_{}", variant.name()), None, v));
    }
    for r in 0..config.restarts {
        let seed = config.restart_seed(r);
        let mut v = random_field(mesh.clone(), target.clone(), seed, config.init_harmonics).values;
        params.boundary.impose(&mesh, &mut v);
        inits.push((format!("random_{r}"), Some(seed), v));
    }
    let problem = Problem2d {
        mesh: &mesh,
        target: &target,
        params,
        precond: Preconditioner2d::new(&mesh, params),
        frozen_rows: params.boundary.frozen_mask(mesh.n_t),
    };
    let outcomes: Vec<Outcome> = inits.par_iter().map(|(_, _, v)| descend(&problem, v.clone(), config)).collect();
    let best_index = pick_best(&outcomes);
    let best_field = DiscreteField::new(mesh.clone(), target.clone(), outcomes[best_index].values.clone())?;
    let best_energy = total_energy(&best_field, params);
    let modes = mode_decompose(&best_field);
    let diagnostics = diagnose(&best_field, &modes, &best_energy);
    let restarts = inits
        .iter()
        .zip(&outcomes)
        .map(|((name, seed, _), o)| RestartSummary {
            init: name.clone(),
            seed: *seed,
            energy: o.energy,
            iterations: o.iterations,
            grad_norm: o.grad_norm,
            converged: o.converged,
        })
        .collect();
    let report = SolveReport {
        best_field,
        best_energy,
        best_index,
        converged: outcomes[best_index].converged,
        restarts,
        modes,
        hypothesis_margin: hypothesis_margin(&mesh, &params.weight),
        diagnostics,
    };
    Ok((report, outcomes))
}

/// Like [`minimize_2d`], also returning the final field of every init in
/// init order.
pub fn minimize_2d_all(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    params: &EnergyParams,
    config: &SolveConfig,
) -> Result<(SolveReport, Vec<DiscreteField>)> {
    let (report, outcomes) = run_2d(mesh.clone(), target.clone(), params, config)?;
    let fields = outcomes
        .into_iter()
        .map(|o| DiscreteField::new(mesh.clone(), target.clone(), o.values))
        .collect::<Result<Vec<_>>>()?;
    Ok((report, fields))
}

// ---------------------------------------------------------------------------
// Reduced profile functional

/// F(γ) for the profile of the given variant, split like the 2D energy
/// (the penalty of a rotation-generated field is zero).
pub fn profile_energy(
    mesh: &SurfaceMesh,
    profile: &[Vec3],
    params: &EnergyParams,
    variant: Variant,
) -> EnergyBreakdown {
    let n = mesh.n_phi;
    let mut dirichlet = 0.0;
    for j in 0..mesh.n_t {
        let g = &profile[j];
        dirichlet += TAU * mesh.h2[j] / mesh.h1[j] * mesh.dt * (g.x * g.x + g.y * g.y);
    }
    for e in &mesh.edges {
        dirichlet += TAU * e.h1 / e.h2 / mesh.dt * (profile[e.hi] - profile[e.lo]).norm_squared();
    }
    let mut anisotropy = 0.0;
    for j in 0..mesh.n_t {
        let mut row = 0.0;
        for i in 0..n {
            let m = variant.apply(mesh.phi_nodes[i], &profile[j]);
            row += params.potential.value(m.dot(&params.aniso.values[j * n + i]));
        }
        anisotropy += row * mesh.row_weights[j];
    }
    EnergyBreakdown { dirichlet, anisotropy, penalty: 0.0, total: dirichlet + anisotropy }
}

pub fn profile_gradient(mesh: &SurfaceMesh, profile: &[Vec3], params: &EnergyParams, variant: Variant) -> Vec<Vec3> {
    let n = mesh.n_phi;
    let mut grad = vec![Vec3::zeros(); mesh.n_t];
    for j in 0..mesh.n_t {
        let g = &profile[j];
        let c = 2.0 * TAU * mesh.h2[j] / mesh.h1[j] * mesh.dt;
        grad[j] += Vec3::new(c * g.x, c * g.y, 0.0);
        for i in 0..n {
            let phi = mesh.phi_nodes[i];
            let a = &params.aniso.values[j * n + i];
            let s = variant.apply(phi, g).dot(a);
            grad[j] += variant.unapply(phi, a) * (params.potential.derivative(s) * mesh.row_weights[j]);
        }
    }
    for e in &mesh.edges {
        let d = (profile[e.hi] - profile[e.lo]) * (2.0 * TAU * e.h1 / e.h2 / mesh.dt);
        grad[e.hi] += d;
        grad[e.lo] -= d;
    }
    grad
}

struct Problem1d<'a> {
    mesh: &'a SurfaceMesh,
    target: &'a SurfaceOfRevolution,
    params: &'a EnergyParams,
    variant: Variant,
    precond: Preconditioner1d,
    frozen_rows: Vec<bool>,
}

impl Descent for Problem1d<'_> {
    fn energy(&self, v: &[Vec3]) -> f64 {
        profile_energy(self.mesh, v, self.params, self.variant).total
    }
    fn gradient(&self, v: &[Vec3]) -> Vec<Vec3> {
        profile_gradient(self.mesh, v, self.params, self.variant)
    }
    fn precondition(&self, g: &[Vec3]) -> Vec<Vec3> {
        self.precond.apply(g)
    }
    fn frozen(&self, k: usize) -> bool {
        self.frozen_rows[k]
    }
    fn target(&self) -> &SurfaceOfRevolution {
        self.target
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub variant: Variant,
    pub best_profile: ProfileField,
    /// F at the best profile.
    pub best_energy: EnergyBreakdown,
    /// |F(γ) − total_energy(build_from_profile(γ))|.
    pub consistency_gap: f64,
    pub best_index: usize,
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub field: DiscreteField,
}

/// Boundary rows of a profile problem; data must be of the requested variant.
fn profile_boundary(mesh: &SurfaceMesh, params: &EnergyParams, variant: Variant) -> Result<Vec<(usize, Vec3)>> {
    params
        .boundary
        .rows(mesh.n_t)
        .into_iter()
        .map(|(j, data)| {
            if data.compatible(variant) {
                Ok((j, data.vector()))
            } else {
                Err(Error::InvalidBoundary(format!(
                    "boundary row {j} is not {} and cannot be met by a profile",
                    variant.name()
                )))
            }
        })
        .collect()
}

pub fn minimize_1d_profile(
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
    params: &EnergyParams,
    variant: Variant,
    config: &SolveConfig,
) -> Result<ProfileReport> {
    config.validate()?;
    let mut warnings = Vec::new();
    if !params.aniso.matches(variant) {
        warnings.push(format!(
            "anisotropy field is {} but the {} reduction was requested",
            params.aniso.variant().name(),
            variant.name()
        ));
    }
    let boundary = profile_boundary(&mesh, params, variant)?;
    let impose = |v: &mut Vec<Vec3>| {
        for (j, b) in &boundary {
            v[*j] = *b;
        }
    };
    let mut inits: Vec<(String, Option<u64>, Vec<Vec3>)> = Vec::new();
    let mut normal = (0..mesh.n_t)
        .map(|j| surface_normal(&mesh, 0, j).map(|n| target.project(&n)))
        .collect::<Result<Vec<_>>>()?;
    impose(&mut normal);
    inits.push(("normal".into(), None, normal));
    for r in 0..config.restarts {
        let seed = config.restart_seed(r);
        let f = random_field(mesh.clone(), target.clone(), seed, 0);
        let mut v: Vec<Vec3> = (0..mesh.n_t).map(|j| *f.at(0, j)).collect();
        impose(&mut v);
        inits.push((format!("random_{r}"), Some(seed), v));
    }
    let problem = Problem1d {
        mesh: &mesh,
        target: &target,
        params,
        variant,
        precond: Preconditioner1d::new(&mesh, params),
        frozen_rows: params.boundary.frozen_mask(mesh.n_t),
    };
    let outcomes: Vec<Outcome> = inits.par_iter().map(|(_, _, v)| descend(&problem, v.clone(), config)).collect();
    let best_index = pick_best(&outcomes);
    let best_profile = ProfileField {
        t_nodes: mesh.t_nodes.clone(),
        values: outcomes[best_index].values.clone(),
        variant,
    };
    let best_energy = profile_energy(&mesh, &best_profile.values, params, variant);
    let field = build_from_profile(mesh.clone(), target.clone(), &best_profile)?;
    let consistency_gap = (best_energy.total - total_energy(&field, params).total).abs();
    let restarts = inits
        .iter()
        .zip(&outcomes)
        .map(|((name, seed, _), o)| RestartSummary {
            init: name.clone(),
            seed: *seed,
            energy: o.energy,
            iterations: o.iterations,
            grad_norm: o.grad_norm,
            converged: o.converged,
        })
        .collect();
    Ok(ProfileReport {
        variant,
        best_profile,
        best_energy,
        consistency_gap,
        best_index,
        converged: outcomes[best_index].converged,
        restarts,
        warnings,
        field,
    })
}

// ---------------------------------------------------------------------------
// Symmetrization certificate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub variant: Variant,
    pub phi_star: PhiStar,
    pub energy_input: EnergyBreakdown,
    pub energy_symmetrized: EnergyBreakdown,
    /// [E(u), Δφ Σ Φ_E, E(m) − φ-mass of m·e₃, E(m)].
    pub levels: [f64; 4],
    /// Consecutive differences of `levels`; all ≥ −tolerance when the chain holds.
    pub residuals: [f64; 3],
    pub tolerance: f64,
    pub chain_holds: bool,
    /// total(u) ≤ total(m) + tolerance.
    pub monotone: bool,
    pub margin: HypothesisMargin,
    pub hypothesis_violation: bool,
    pub aniso_compatible: bool,
    pub defect_symmetrized: f64,
}

pub const CHAIN_REL_TOL: f64 = 1e-9;

pub fn symmetrize_and_certify(
    field: &DiscreteField,
    params: &EnergyParams,
    variant: Variant,
) -> (DiscreteField, ChainReport) {
    let phi_star = argmin_phi_slice(field, params);
    let u = symmetrize(field, phi_star.index, variant);
    let energy_input = total_energy(field, params);
    let energy_symmetrized = total_energy(&u, params);
    let [l1, l2, l3] = chain_levels(field, params);
    let levels = [energy_symmetrized.total, l1, l2, l3];
    let residuals = [l1 - levels[0], l2 - l1, l3 - l2];
    let tolerance = CHAIN_REL_TOL * (1.0 + energy_input.total.abs());
    let margin = hypothesis_margin(&field.mesh, &params.weight);
    let defect_symmetrized = symmetry_defect(&u, variant);
    let report = ChainReport {
        variant,
        phi_star,
        energy_input,
        energy_symmetrized,
        levels,
        residuals,
        tolerance,
        chain_holds: residuals.iter().all(|r| *r >= -tolerance),
        monotone: energy_symmetrized.total <= energy_input.total + tolerance,
        margin,
        hypothesis_violation: !(margin.strict || margin.borderline),
        aniso_compatible: params.aniso.matches(variant),
        defect_symmetrized,
    };
    (u, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{AnisotropyField, AnisotropyKind, AnisotropyPotential, Boundary, Weight};
    use crate::geometry::{build_mesh, GeneratingCurve, Role};

    fn sphere(n_phi: usize, n_t: usize) -> (Arc<SurfaceMesh>, Arc<SurfaceOfRevolution>) {
        (
            Arc::new(build_mesh(SurfaceOfRevolution::unit_sphere(Role::Base), n_phi, n_t).unwrap()),
            Arc::new(SurfaceOfRevolution::unit_sphere(Role::Target)),
        )
    }

    fn params(
        mesh: &SurfaceMesh,
        target: &SurfaceOfRevolution,
        potential: AnisotropyPotential,
        kind: AnisotropyKind,
        weight: Weight,
    ) -> EnergyParams {
        EnergyParams::new(
            mesh,
            target,
            potential,
            AnisotropyField::build(mesh, kind).unwrap(),
            weight,
            Boundary::Free,
        )
        .unwrap()
    }

    #[test]
    fn profile_functional_matches_built_field() {
        let (mesh, target) = sphere(16, 12);
        for (variant, kind) in [
            (Variant::Symmetric, AnisotropyKind::SurfaceNormal),
            (Variant::Antisymmetric, AnisotropyKind::ConstantE3),
        ] {
            let p = params(
                &mesh,
                &target,
                AnisotropyPotential::Quartic { lambda: 3.0 },
                kind,
                Weight::inverse_radius(&mesh, 1.5).unwrap(),
            );
            let f = random_field(mesh.clone(), target.clone(), 5, 0);
            let prof: Vec<Vec3> = (0..mesh.n_t).map(|j| *f.at(0, j)).collect();
            let built = build_from_profile(
                mesh.clone(),
                target.clone(),
                &ProfileField { t_nodes: mesh.t_nodes.clone(), values: prof.clone(), variant },
            )
            .unwrap();
            let f1 = profile_energy(&mesh, &prof, &p, variant).total;
            let f2 = total_energy(&built, &p).total;
            assert!((f1 - f2).abs() < 1e-10, "{f1} vs {f2}");
        }
    }

    #[test]
    fn profile_gradient_matches_differences() {
        let (mesh, target) = sphere(12, 10);
        let p = params(
            &mesh,
            &target,
            AnisotropyPotential::Quartic { lambda: 2.0 },
            AnisotropyKind::SurfaceNormal,
            Weight::zero(&mesh),
        );
        let f = random_field(mesh.clone(), target, 9, 0);
        let prof: Vec<Vec3> = (0..mesh.n_t).map(|j| *f.at(0, j)).collect();
        let g = profile_gradient(&mesh, &prof, &p, Variant::Symmetric);
        let h = 1e-6;
        for j in 0..mesh.n_t {
            for c in 0..3 {
                let mut a = prof.clone();
                let mut b = prof.clone();
                a[j][c] += h;
                b[j][c] -= h;
                let fd = (profile_energy(&mesh, &a, &p, Variant::Symmetric).total
                    - profile_energy(&mesh, &b, &p, Variant::Symmetric).total)
                    / (2.0 * h);
                assert!((fd - g[j][c]).abs() <= 1e-6 * g[j][c].abs().max(1.0), "{fd} vs {}", g[j][c]);
            }
        }
    }

    #[test]
    fn descent_reaches_the_normal_ground_state() {
        let (mesh, target) = sphere(16, 16);
        let p = params(
            &mesh,
            &target,
            AnisotropyPotential::EasyNormal { kappa: -5.0 },
            AnisotropyKind::SurfaceNormal,
            Weight::zero(&mesh),
        );
        let cfg = SolveConfig { restarts: 2, ..SolveConfig::default() };
        let rep = minimize_2d(mesh, target, &p, &cfg).unwrap();
        assert!(rep.converged);
        assert!((rep.best_energy.total - 8.0 * std::f64::consts::PI).abs() < 0.1 * 8.0 * std::f64::consts::PI);
        for r in &rep.restarts {
            assert!(r.energy >= rep.best_energy.total);
        }
    }

    #[test]
    fn symmetric_input_is_a_fixed_point() {
        let (mesh, target) = sphere(16, 12);
        let p = params(
            &mesh,
            &target,
            AnisotropyPotential::Quadratic { kappa: 1.0 },
            AnisotropyKind::ConstantE3,
            Weight::inverse_radius(&mesh, 1.5).unwrap(),
        );
        let f = random_field(mesh.clone(), target.clone(), 3, 0);
        let prof: Vec<Vec3> = (0..mesh.n_t).map(|j| *f.at(0, j)).collect();
        let m = build_from_profile(
            mesh.clone(),
            target,
            &ProfileField { t_nodes: mesh.t_nodes.clone(), values: prof, variant: Variant::Symmetric },
        )
        .unwrap();
        let (u, rep) = symmetrize_and_certify(&m, &p, Variant::Symmetric);
        assert!(u.l2_distance(&m) < 1e-12);
        for r in rep.residuals {
            assert!(r.abs() < 1e-10, "{r}");
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SolveConfig { armijo_c: 1.5, ..SolveConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(SolveConfig::default().validate().is_ok());
    }

    #[test]
    fn closed_base_torus_profile_is_consistent() {
        let mesh = Arc::new(
            build_mesh(SurfaceOfRevolution::base(GeneratingCurve::torus(2.0, 0.5).unwrap()), 8, 12).unwrap(),
        );
        let target = Arc::new(SurfaceOfRevolution::unit_sphere(Role::Target));
        let p = params(
            &mesh,
            &target,
            AnisotropyPotential::zero(),
            AnisotropyKind::ConstantE3,
            Weight::constant(&mesh, 2.0).unwrap(),
        );
        let cfg = SolveConfig { restarts: 1, ..SolveConfig::default() };
        let rep = minimize_1d_profile(mesh, target, &p, Variant::Symmetric, &cfg).unwrap();
        assert!(rep.consistency_gap < 1e-10);
        assert!(rep.warnings.is_empty());
    }
}
