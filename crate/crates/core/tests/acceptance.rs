//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use axisym::annulus::{solve_annulus_example, AnnulusSetup};
use axisym::energy::{
    energy_values, euclidean_gradient, total_energy, AnisotropyField, AnisotropyKind, AnisotropyPotential, Boundary,
    BoundaryData, EnergyParams, TablePotential, Weight,
};
use axisym::fields::{build_from_profile, build_from_triple, random_field, DiscreteField, ProfileField, Variant};
use axisym::geometry::{build_mesh, GeneratingCurve, Role, SurfaceOfRevolution, Vec3};
use axisym::instance::{GridSpec, Instance, InstanceSpec};
use axisym::io::Provenance;
use axisym::solvers::{
    minimize_1d_profile, minimize_2d, minimize_2d_all, profile_energy, symmetrize_and_certify, SolveConfig,
    SolveReport,
};
use axisym::verify::{corpus, default_matrix, pw_row, run_suite, Matrix, SuiteConfig, SuiteEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn matrix_spec(id: &str) -> InstanceSpec {
    default_matrix()
        .into_iter()
        .find_map(|e| match e {
            SuiteEntry::Instance { id: i, spec, .. } if i == id => Some(spec),
            _ => None,
        })
        .unwrap_or_else(|| panic!("no matrix instance {id}"))
}

fn matrix_instance(id: &str) -> Instance {
    matrix_spec(id).build(Path::new(".")).unwrap()
}

fn sphere_mesh(n_phi: usize, n_t: usize) -> Arc<axisym::geometry::SurfaceMesh> {
    Arc::new(build_mesh(SurfaceOfRevolution::base(GeneratingCurve::unit_sphere()), n_phi, n_t).unwrap())
}

fn unit_sphere_target() -> Arc<SurfaceOfRevolution> {
    Arc::new(SurfaceOfRevolution::unit_sphere(Role::Target))
}

fn normal_field(mesh: &Arc<axisym::geometry::SurfaceMesh>) -> DiscreteField {
    DiscreteField::from_fn(mesh.clone(), unit_sphere_target(), |phi, t| {
        let (s, c) = t.sin_cos();
        Vec3::new(s * phi.cos(), s * phi.sin(), c)
    })
}

// -- Dirichlet oracle: |∇n|² = 2 on the unit sphere, so D(n) = 8π.
fn dirichlet_oracle() -> Outcome {
    let start = Instant::now();
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let mesh = sphere_mesh(n, n);
        let field = normal_field(&mesh);
        let d = axisym::energy::dirichlet_energy(&field);
        errs.push(((d - 8.0 * PI) / (8.0 * PI)).abs());
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    let secs = start.elapsed().as_secs_f64();
    let pass = errs[2] <= 0.01 && orders.iter().all(|p| (1.8..=2.5).contains(p)) && secs <= 10.0;
    outcome(
        pass,
        format!(
            "rel err at 128x128 {:.3e} (<= 1e-2), orders {:.3} {:.3} (in [1.8, 2.5]), {secs:.1}s (<= 10s)",
            errs[2], orders[0], orders[1]
        ),
    )
}

const STRICT_CORPUS: [&str; 3] = ["sphere_quartic_normal", "cylinder_r2_quadratic_e3", "torus_base_e3"];

// -- Symmetrization never increases the energy; each chain link is non-negative.
fn symmetrization_monotone() -> Outcome {
    let start = Instant::now();
    let mut worst_monotone = f64::NEG_INFINITY;
    let mut worst_link = f64::NEG_INFINITY;
    let mut fields = 0;
    let mut failures = 0;
    for (k, id) in STRICT_CORPUS.iter().enumerate() {
        let inst = matrix_instance(id);
        assert!(axisym::energy::hypothesis_margin(&inst.mesh, &inst.params.weight).strict);
        let variant = inst.params.aniso.variant();
        let count = if k == 0 { 34 } else { 33 };
        for s in 0..count {
            let f = random_field(inst.mesh.clone(), inst.target.clone(), 1000 * k as u64 + s, 3);
            let (_, rep) = symmetrize_and_certify(&f, &inst.params, variant);
            let scale = 1.0 + rep.energy_input.total.abs();
            let excess = (rep.energy_symmetrized.total - rep.energy_input.total) / scale;
            let link = rep.residuals.iter().map(|r| -r / scale).fold(f64::NEG_INFINITY, f64::max);
            worst_monotone = worst_monotone.max(excess);
            worst_link = worst_link.max(link);
            if excess > 1e-9 || link > 1e-9 {
                failures += 1;
            }
            fields += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && fields == 100 && secs <= 60.0,
        format!(
            "{fields} fields, worst (E(u)-E(m))/(1+|E|) {worst_monotone:.2e}, worst negative link {worst_link:.2e} (<= 1e-9), {secs:.1}s (<= 60s)"
        ),
    )
}

struct Solved {
    id: &'static str,
    inst: Instance,
    report: SolveReport,
    secs: f64,
}

const FORM_INSTANCES: [&str; 2] = ["sphere_quartic_normal", "cylinder_r2_quadratic_e3"];

fn solve_form_instances() -> Vec<Solved> {
    FORM_INSTANCES
        .iter()
        .map(|id| {
            let inst = matrix_instance(id);
            let start = Instant::now();
            let report = minimize_2d(inst.mesh.clone(), inst.target.clone(), &inst.params, &SolveConfig::default()).unwrap();
            Solved { id, inst, report, secs: start.elapsed().as_secs_f64() }
        })
        .collect()
}

// -- Minimizer form on strict-margin instances.
fn minimizer_form(solved: &[Solved]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in solved {
        let d = &s.report.diagnostics;
        let mean = d.null_average_norm / d.field_scale;
        let ok = s.report.hypothesis_margin.strict
            && d.residual_ratio <= 1e-4
            && mean <= 1e-4
            && d.penalty_ratio <= 1e-4
            && d.e3_azimuthal_ratio <= 1e-4
            && s.secs <= 300.0;
        pass &= ok;
        parts.push(format!(
            "{}: residual {:.1e} mean {:.1e} penalty {:.1e} d_phi(m.e3) {:.1e} {:.1}s",
            s.id, d.residual_ratio, mean, d.penalty_ratio, d.e3_azimuthal_ratio, s.secs
        ));
    }
    outcome(pass, format!("{} (each <= 1e-4, <= 300s)", parts.join("; ")))
}

// -- Orthogonality on never-flat targets, from the same solves.
fn orthogonality(solved: &[Solved]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in solved {
        let flat = axisym::geometry::never_flat_check(&s.inst.target, axisym::verify::NEVER_FLAT_TOL);
        let d = &s.report.diagnostics;
        let ok = flat.never_flat && d.orth_norm_gap <= 1e-3 && d.orth_dot_gap <= 1e-3 && d.neither_rows == 0;
        pass &= ok;
        parts.push(format!(
            "{}: norm gap {:.1e} dot gap {:.1e} on {} rows, {} unlabeled rows",
            s.id, d.orth_norm_gap, d.orth_dot_gap, d.qualifying_rows, d.neither_rows
        ));
    }
    outcome(pass, format!("{} (gaps <= 1e-3, 0 unlabeled)", parts.join("; ")))
}

// -- 1D reduction against the 2D solves, and F(γ) = E(build_from_profile(γ)).
fn reduction(solved: &[Solved]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in solved {
        let inst = &s.inst;
        let variant = Variant::Symmetric;
        assert!(inst.params.aniso.matches(variant));
        let rep = minimize_1d_profile(inst.mesh.clone(), inst.target.clone(), &inst.params, variant, &SolveConfig::default())
            .unwrap();
        let e2 = s.report.best_energy.total;
        let gap = (rep.best_energy.total - e2).abs() / e2.abs();
        // a profile that is not a minimizer
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<Vec3> = (0..inst.mesh.n_t)
            .map(|_| inst.target.project(&Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect();
        let profile = ProfileField { t_nodes: inst.mesh.t_nodes.clone(), values: values.clone(), variant };
        let f = profile_energy(&inst.mesh, &values, &inst.params, variant).total;
        let field = build_from_profile(inst.mesh.clone(), inst.target.clone(), &profile).unwrap();
        let e = total_energy(&field, &inst.params).total;
        let exact = (f - e).abs().max(rep.consistency_gap);
        let ok = gap <= 0.02 && exact <= 1e-10 * (1.0 + e.abs());
        pass &= ok;
        parts.push(format!("{}: |F - E2d|/E2d {:.2e}, |F - E| {:.1e}", s.id, gap, exact));
    }
    outcome(pass, format!("{} (<= 2e-2, <= 1e-10 (1+|E|))", parts.join("; ")))
}

// -- Easy-normal regime: every init reaches ±n with energy 8π.
fn easy_normal() -> Outcome {
    let inst = matrix_instance("sphere_easy_normal_unweighted");
    let (report, fields) =
        minimize_2d_all(inst.mesh.clone(), inst.target.clone(), &inst.params, &SolveConfig::default()).unwrap();
    let n = normal_field(&inst.mesh);
    let minus = n.with_values(n.values.iter().map(|v| -v).collect());
    let mut worst_e = 0.0f64;
    let mut worst_d = 0.0f64;
    for (r, f) in report.restarts.iter().zip(&fields) {
        worst_e = worst_e.max((r.energy - 8.0 * PI).abs() / (8.0 * PI));
        worst_d = worst_d.max(f.l2_distance(&n).min(f.l2_distance(&minus)));
    }
    let random = report.restarts.iter().filter(|r| r.seed.is_some()).count();
    outcome(
        worst_e <= 0.01 && worst_d <= 0.05 && random == 8,
        format!(
            "{} inits ({random} random): worst |E - 8pi|/8pi {worst_e:.2e} (<= 1e-2), worst L2 distance to +-n {worst_d:.2e} (<= 0.05)",
            fields.len()
        ),
    )
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

// -- Annulus example: the circular mean of the perp part vanishes.
fn annulus() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for kappa in [0.0, 0.5, 1.0, 5.0] {
        for trial in 0..3 {
            let mut data = |anti: bool| {
                let v = random_unit(&mut rng);
                if anti { BoundaryData::Antisymmetric(v) } else { BoundaryData::Symmetric(v) }
            };
            let setup = AnnulusSetup { n_r: 64, n_phi: 32, kappa, inner: data(false), outer: data(trial == 1) };
            let rep = solve_annulus_example(&setup).unwrap();
            worst = worst.max(rep.max_mean_perp);
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs <= 5.0,
        format!("{cases} solves over kappa in {{0, 0.5, 1, 5}}: max |<m_perp>| {worst:.2e} (<= 1e-8), {secs:.2}s (<= 5s)"),
    )
}

// -- Discrete Poincaré–Wirtinger on the corpus; equality iff first harmonic.
fn poincare_wirtinger(solved: &[Solved]) -> Outcome {
    let mut sets: Vec<(Arc<axisym::geometry::SurfaceMesh>, Vec<Vec<Vec3>>)> = Vec::new();
    for (k, s) in solved.iter().enumerate() {
        let c = corpus(&s.inst, &s.report.best_field, 5, k as u64);
        sets.push((s.inst.mesh.clone(), c.into_iter().map(|f| f.values).collect()));
    }
    // pure first harmonics and first harmonics plus a small k = 2 part
    let mesh = sphere_mesh(32, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut extra = Vec::new();
    for variant in 0..4 {
        let mut r = || rng.random_range(-1.0..1.0);
        let alpha: Vec<[f64; 2]> = (0..mesh.n_t).map(|_| [r(), r()]).collect();
        let beta: Vec<[f64; 2]> = (0..mesh.n_t).map(|_| [r(), r()]).collect();
        let eta: Vec<f64> = (0..mesh.n_t).map(|_| r()).collect();
        let mut v = build_from_triple(&mesh, &alpha, &beta, &eta);
        if variant % 2 == 1 {
            for (k, x) in v.iter_mut().enumerate() {
                let phi = mesh.phi_nodes[k % mesh.n_phi];
                if (k / mesh.n_phi) % 2 == 0 {
                    x.x += 1e-3 * (2.0 * phi).cos();
                }
            }
        }
        extra.push(v);
    }
    sets.push((mesh, extra));
    let (mut rows, mut violation, mut mismatch, mut equal) = (0usize, 0.0f64, 0usize, 0usize);
    for (mesh, fields) in &sets {
        for v in fields {
            for j in 0..mesh.n_t {
                let r = pw_row(mesh, v, j);
                violation = violation.max(r.lhs - r.rhs);
                let eq = r.equality(1e-9);
                mismatch += usize::from(eq != r.first_harmonic(1e-9));
                equal += usize::from(eq);
                rows += 1;
            }
        }
    }
    outcome(
        violation <= 1e-9 && mismatch == 0 && equal > 0 && equal < rows,
        format!("{rows} rows: max lhs - rhs {violation:.2e} (<= 1e-9), {equal} equality rows, {mismatch} mismatches with first-harmonic rows (0)"),
    )
}

// -- Analytic gradient against central differences.
fn gradient_check() -> Outcome {
    let base = Arc::new(build_mesh(
        SurfaceOfRevolution::base(GeneratingCurve::ellipsoid_band(1.2, 0.8, 0.3, PI - 0.4).unwrap()),
        12,
        10,
    )
    .unwrap());
    let target = unit_sphere_target();
    let table: Vec<[f64; 2]> = (0..=40).map(|k| -1.0 + k as f64 / 20.0).map(|s| [s, 1.0 + s * s - 0.5 * s.powi(4)]).collect();
    let potentials = [
        AnisotropyPotential::Quadratic { kappa: 1.3 },
        AnisotropyPotential::Quartic { lambda: 2.0 },
        AnisotropyPotential::Table(TablePotential::new(&table).unwrap()),
    ];
    let profile: Vec<Vec3> = base.t_nodes.iter().map(|t| Vec3::new(t.sin(), 0.3, t.cos()).normalize()).collect();
    let kinds = [
        AnisotropyKind::SurfaceNormal,
        AnisotropyKind::ConstantE3,
        AnisotropyKind::SymmetricProfile(profile.clone()),
        AnisotropyKind::AntisymmetricProfile(profile),
    ];
    let weights = [
        Weight::zero(&base),
        Weight::constant(&base, 0.8).unwrap(),
        Weight::t_profile(&base, |t| 1.0 + 0.4 * (2.0 * t).cos()).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut instances = 0;
    let mut seed = 0;
    for pot in &potentials {
        for kind in &kinds {
            for w in &weights {
                let params = EnergyParams::new(
                    &base,
                    &target,
                    pot.clone(),
                    AnisotropyField::build(&base, kind.clone()).unwrap(),
                    w.clone(),
                    Boundary::Free,
                )
                .unwrap();
                seed += 1;
                let field = random_field(base.clone(), target.clone(), seed, 3);
                let g = euclidean_gradient(&base, &field.values, &params);
                let e0 = energy_values(&base, &field.values, &params).total;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..50 {
                    let k = rng.random_range(0..base.len());
                    let c = rng.random_range(0..3);
                    let h = 1e-5;
                    let mut plus = field.values.clone();
                    let mut minus = field.values.clone();
                    plus[k][c] += h;
                    minus[k][c] -= h;
                    let fd = (energy_values(&base, &plus, &params).total - energy_values(&base, &minus, &params).total)
                        / (2.0 * h);
                    let denom = g[k][c].abs().max(fd.abs()).max(1e-6 * (1.0 + e0.abs()));
                    worst = worst.max((fd - g[k][c]).abs() / denom);
                }
                instances += 1;
            }
        }
    }
    outcome(worst <= 1e-5, format!("{instances} instance kinds x 50 coordinates: worst relative error {worst:.2e} (<= 1e-5)"))
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
    }
    out
}

// -- Byte-identical artifacts across reruns and thread counts.
fn determinism() -> Outcome {
    let grid = GridSpec { n_phi: 16, n_t: 16 };
    let mut cfg = SuiteConfig::new(Matrix::Empty);
    for e in default_matrix() {
        match e {
            SuiteEntry::Instance { id, spec, seed, grad_tol } if ["sphere_quartic_normal", "cylinder_r2_quadratic_e3", "disk_inplane_boundary"].contains(&id.as_str()) => {
                cfg.entries.push(SuiteEntry::Instance { id, spec: spec.with_grid(grid), seed, grad_tol });
            }
            SuiteEntry::Annulus { id, setup } if id == "annulus_kappa_1" => cfg.entries.push(SuiteEntry::Annulus { id, setup }),
            _ => {}
        }
    }
    cfg.corpus_fields = 2;
    let prov = Provenance { config_hash: "determinism".into(), seed: 0 };
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for (run, threads) in [(0, 1), (1, 1), (2, 4), (3, 4)] {
        let dir = tmp.path().join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_suite(&cfg, Path::new("."), Some(&dir), &prov)).unwrap();
        trees.push(read_tree(&dir));
    }
    let files = trees[0].len();
    let identical = trees.iter().all(|t| t == &trees[0]);
    outcome(
        identical && files > 0,
        format!("{files} artifacts, 2 runs each at 1 and 4 threads: {}", if identical { "byte-identical" } else { "differ" }),
    )
}

fn main() {
    let mut lines: Vec<(&str, Outcome)> = Vec::new();
    lines.push(("dirichlet oracle", dirichlet_oracle()));
    lines.push(("symmetrization monotonicity", symmetrization_monotone()));
    let solved = solve_form_instances();
    lines.push(("minimizer form", minimizer_form(&solved)));
    lines.push(("orthogonality", orthogonality(&solved)));
    lines.push(("1d reduction", reduction(&solved)));
    lines.push(("easy-normal ground state", easy_normal()));
    lines.push(("annulus null average", annulus()));
    lines.push(("poincare-wirtinger", poincare_wirtinger(&solved)));
    lines.push(("gradient check", gradient_check()));
    lines.push(("determinism", determinism()));
    let mut failed = 0;
    for (k, (name, o)) in lines.iter().enumerate() {
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
