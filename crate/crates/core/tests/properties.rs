use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use axisym::energy::{
    penalty_energy, penalty_energy_direct, total_energy, AnisotropyField, AnisotropyKind, AnisotropyPotential,
    Boundary, EnergyParams, Weight,
};
use axisym::fields::{
    build_from_profile, build_from_triple, mode_decompose, mode_decompose_values, random_field, symmetrize,
    DiscreteField, ProfileField, Variant,
};
use axisym::geometry::{
    build_mesh, rotate, surface_normal, GeneratingCurve, Role, SurfaceMesh, SurfaceOfRevolution, Vec3,
};
use axisym::solvers::symmetrize_and_certify;
use axisym::verify::pw_row;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn sphere_base(n_phi: usize, n_t: usize) -> Arc<SurfaceMesh> {
    Arc::new(build_mesh(SurfaceOfRevolution::base(GeneratingCurve::unit_sphere()), n_phi, n_t).unwrap())
}

fn torus_target() -> SurfaceOfRevolution {
    SurfaceOfRevolution::target(GeneratingCurve::torus(2.0, 0.7).unwrap())
}

fn ellipsoid_target() -> SurfaceOfRevolution {
    SurfaceOfRevolution::target(GeneratingCurve::ellipsoid_band(1.0, 0.6, 0.0, PI).unwrap())
}

fn unit_sphere() -> Arc<SurfaceOfRevolution> {
    Arc::new(SurfaceOfRevolution::unit_sphere(Role::Target))
}

fn profile_values(mesh: &SurfaceMesh, seed: u64) -> Vec<Vec3> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (0..mesh.n_t).map(|_| Vec3::new(next(), next(), next()).normalize()).collect()
}

fn strict_sphere_params(mesh: &SurfaceMesh, target: &SurfaceOfRevolution) -> EnergyParams {
    EnergyParams::new(
        mesh,
        target,
        AnisotropyPotential::Quartic { lambda: 3.0 },
        AnisotropyField::build(mesh, AnisotropyKind::SurfaceNormal).unwrap(),
        Weight::inverse_radius(mesh, 1.5).unwrap(),
        Boundary::Free,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotations_compose(a in -10.0..10.0f64, b in -10.0..10.0f64, v in vec3(5.0)) {
        let lhs = rotate(a, &rotate(b, &v));
        let rhs = rotate(a + b, &v);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn rotations_preserve_length(a in -10.0..10.0f64, v in vec3(5.0)) {
        prop_assert!((rotate(a, &v).norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn sphere_projection_normalizes(
        dir in vec3(1.0).prop_filter("nonzero", |v| v.norm() > 1e-3),
        r in 0.5..2.0f64,
    ) {
        let s = SurfaceOfRevolution::unit_sphere(Role::Target);
        let v = dir.normalize() * r;
        prop_assert!((s.project(&v) - v / v.norm()).norm() <= 1e-10);
    }

    #[test]
    fn projection_is_idempotent(v in vec3(3.0)) {
        for t in [torus_target(), ellipsoid_target()] {
            let p = t.project(&v);
            prop_assert!((t.project(&p) - p).norm() <= 1e-10);
            prop_assert!(t.distance(&p) <= 1e-10);
        }
    }

    #[test]
    fn projection_is_lipschitz_near_the_target(v in vec3(2.0), d in vec3(0.05)) {
        for t in [torus_target(), ellipsoid_target()] {
            // a point near T and a small offset from it
            let p = t.project(&v) + d;
            let q = p + d * 0.5;
            let gap = (t.project(&p) - t.project(&q)).norm();
            prop_assert!(gap <= 2.0 * (p - q).norm() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn profile_builds_are_null_average(seed in any::<u64>(), anti in any::<bool>()) {
        let mesh = sphere_base(16, 9);
        let variant = if anti { Variant::Antisymmetric } else { Variant::Symmetric };
        let profile = ProfileField { t_nodes: mesh.t_nodes.clone(), values: profile_values(&mesh, seed), variant };
        let f = build_from_profile(mesh, unit_sphere(), &profile).unwrap();
        prop_assert!(mode_decompose(&f).max_mean_perp() <= 1e-10);
    }

    #[test]
    fn glued_line_symmetric_fields_are_null_average(seed in any::<u64>(), pattern in any::<u16>()) {
        let mesh = sphere_base(16, 9);
        let g = profile_values(&mesh, seed);
        let mut values = Vec::with_capacity(mesh.len());
        for (j, gj) in g.iter().enumerate() {
            let variant = if pattern >> (j % 16) & 1 == 1 { Variant::Antisymmetric } else { Variant::Symmetric };
            for &phi in &mesh.phi_nodes {
                values.push(variant.apply(phi, gj));
            }
        }
        let f = DiscreteField::new(mesh, unit_sphere(), values).unwrap();
        prop_assert!(mode_decompose(&f).max_mean_perp() <= 1e-10);
    }

    #[test]
    fn symmetrize_is_idempotent(seed in any::<u64>(), a in 0usize..16, b in 0usize..16, anti in any::<bool>()) {
        let mesh = sphere_base(16, 9);
        let variant = if anti { Variant::Antisymmetric } else { Variant::Symmetric };
        let f = random_field(mesh, unit_sphere(), seed, 3);
        let once = symmetrize(&f, a, variant);
        let twice = symmetrize(&once, b, variant);
        for (x, y) in once.values.iter().zip(&twice.values) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn modes_round_trip(seed in any::<u64>()) {
        let mesh = sphere_base(12, 7);
        let mut s = seed | 1;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let alpha: Vec<[f64; 2]> = (0..mesh.n_t).map(|_| [next(), next()]).collect();
        let beta: Vec<[f64; 2]> = (0..mesh.n_t).map(|_| [next(), next()]).collect();
        let eta: Vec<f64> = (0..mesh.n_t).map(|_| next()).collect();
        let m = mode_decompose_values(&mesh, &build_from_triple(&mesh, &alpha, &beta, &eta));
        for j in 0..mesh.n_t {
            for c in 0..2 {
                prop_assert!((m.alpha_perp[j][c] - alpha[j][c]).abs() <= 1e-10);
                prop_assert!((m.beta_perp[j][c] - beta[j][c]).abs() <= 1e-10);
                prop_assert!(m.mean_perp[j][c].abs() <= 1e-10);
            }
            prop_assert!((m.eta[j] - eta[j]).abs() <= 1e-10);
        }
        prop_assert!(m.residual_energy <= 1e-20);
    }

    #[test]
    fn symmetric_profiles_satisfy_orthogonality(seed in any::<u64>()) {
        let mesh = sphere_base(16, 9);
        let profile = ProfileField { t_nodes: mesh.t_nodes.clone(), values: profile_values(&mesh, seed), variant: Variant::Symmetric };
        let m = mode_decompose(&build_from_profile(mesh, unit_sphere(), &profile).unwrap());
        for (a, b) in m.alpha_perp.iter().zip(&m.beta_perp) {
            let (na, nb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
            prop_assert!((na - nb).abs() <= 1e-12);
            prop_assert!((a[0] * b[0] + a[1] * b[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rotating_the_field_keeps_the_energy(seed in any::<u64>(), shift in 0usize..16) {
        let mesh = sphere_base(16, 10);
        let target = unit_sphere();
        let params = strict_sphere_params(&mesh, &target);
        let f = random_field(mesh, target, seed, 3);
        let e0 = total_energy(&f, &params).total;
        let e1 = total_energy(&f.rotated(shift), &params).total;
        prop_assert!((e0 - e1).abs() <= 1e-10 * (1.0 + e0.abs()));
    }

    #[test]
    fn penalty_forms_agree(seed in any::<u64>()) {
        let mesh = sphere_base(16, 10);
        let target = unit_sphere();
        let params = EnergyParams::new(
            &mesh,
            &target,
            AnisotropyPotential::zero(),
            AnisotropyField::build(&mesh, AnisotropyKind::ConstantE3).unwrap(),
            Weight::general(&mesh, |phi, t| 1.0 + 0.5 * (2.0 * phi).cos() + 0.3 * t).unwrap(),
            Boundary::Free,
        )
        .unwrap();
        let f = random_field(mesh, target, seed, 3);
        let (a, b) = (penalty_energy(&f, &params), penalty_energy_direct(&f, &params));
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn symmetrization_never_raises_the_energy(seed in any::<u64>()) {
        let mesh = sphere_base(16, 12);
        let target = unit_sphere();
        let params = strict_sphere_params(&mesh, &target);
        let f = random_field(mesh, target, seed, 3);
        let (u, rep) = symmetrize_and_certify(&f, &params, Variant::Symmetric);
        let scale = 1.0 + rep.energy_input.total.abs();
        prop_assert!(rep.chain_holds && rep.monotone);
        prop_assert!(total_energy(&u, &params).total <= rep.energy_input.total + 1e-9 * scale);
        for r in rep.residuals {
            prop_assert!(r >= -1e-9 * scale);
        }
    }

    #[test]
    fn poincare_wirtinger_rows(seed in any::<u64>()) {
        let mesh = sphere_base(16, 8);
        let f = random_field(mesh.clone(), unit_sphere(), seed, 4);
        for j in 0..mesh.n_t {
            let r = pw_row(&mesh, &f.values, j);
            prop_assert!(r.lhs <= r.rhs + 1e-9);
            prop_assert_eq!(r.equality(1e-9), r.first_harmonic(1e-9));
        }
    }
}

#[test]
fn surface_normal_is_axially_symmetric() {
    for curve in [
        GeneratingCurve::unit_sphere(),
        GeneratingCurve::torus(2.0, 0.5).unwrap(),
        GeneratingCurve::ellipsoid_band(1.3, 0.7, 0.2, 2.9).unwrap(),
    ] {
        let mesh = build_mesh(SurfaceOfRevolution::base(curve), 12, 9).unwrap();
        for j in 0..mesh.n_t {
            let n0 = surface_normal(&mesh, 0, j).unwrap();
            for i in 0..mesh.n_phi {
                let n = surface_normal(&mesh, i, j).unwrap();
                assert!((n - rotate(mesh.phi_nodes[i], &n0)).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn sphere_area_converges_at_second_order() {
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| (sphere_base(8, n).area() - 2.0 * TAU).abs())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.5).contains(&order), "order {order}");
    }
}
