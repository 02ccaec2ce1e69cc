//! Generating curves, surfaces of revolution, tensor meshes and target-surface
//! projection.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::spectral::PhiTransform;
use crate::spline::CubicSpline;

pub type Vec3 = Vector3<f64>;

/// A^⊤(φ)v: rotation by φ about e₃.
pub fn rotate(phi: f64, v: &Vec3) -> Vec3 {
    let (s, c) = phi.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// A(φ)v = A^⊤(−φ)v.
pub fn rotate_inverse(phi: f64, v: &Vec3) -> Vec3 {
    let (s, c) = phi.sin_cos();
    Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
}

/// Point and derivatives of the generating curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub z: f64,
    pub dx: f64,
    pub dz: f64,
    pub ddx: f64,
    pub ddz: f64,
}

impl CurvePoint {
    pub fn speed(&self) -> f64 {
        self.dx.hypot(self.dz)
    }
}

#[derive(Debug, Clone)]
pub enum CurveShape {
    /// x = R sin t, z = R cos t.
    Sphere { radius: f64 },
    /// x = R, z = t.
    Cylinder { radius: f64 },
    /// x = t, z = 0 (annuli and disks).
    Flat,
    /// x = R + r cos t, z = r sin t.
    Torus { major: f64, minor: f64 },
    /// x = a sin t, z = c cos t.
    Ellipsoid { a: f64, c: f64 },
    Spline { x: CubicSpline, z: CubicSpline },
}

/// Planar curve t ↦ (x(t), 0, z(t)) on I = [t_min, t_max].
#[derive(Debug, Clone)]
pub struct GeneratingCurve {
    shape: CurveShape,
    t_min: f64,
    t_max: f64,
    closed: bool,
    touches_axis_at: Vec<f64>,
    // dense (s, x, z) samples for the generic closest-point search
    samples: Arc<Vec<[f64; 3]>>,
}

const AXIS_TOL: f64 = 1e-12;
const VALIDATION_SAMPLES: usize = 2048;
const PROJECTION_SAMPLES: usize = 1024;
const COARSE_STRIDE: usize = 16;

impl GeneratingCurve {
    pub fn new(shape: CurveShape, t_min: f64, t_max: f64, closed: bool) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::Regularity(format!(
                "parameter interval [{t_min}, {t_max}] is empty or not finite"
            )));
        }
        let mut curve = GeneratingCurve {
            shape,
            t_min,
            t_max,
            closed,
            touches_axis_at: Vec::new(),
            samples: Arc::new(Vec::new()),
        };
        curve.validate()?;
        let samples = (0..=PROJECTION_SAMPLES)
            .map(|k| {
                let s = t_min + (t_max - t_min) * k as f64 / PROJECTION_SAMPLES as f64;
                let p = curve.eval(s);
                [s, p.x, p.z]
            })
            .collect();
        curve.samples = Arc::new(samples);
        Ok(curve)
    }

    pub fn unit_sphere() -> Self {
        Self::sphere(1.0).expect("unit sphere is regular")
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        positive("sphere radius", radius)?;
        Self::new(CurveShape::Sphere { radius }, 0.0, PI, false)
    }

    /// Band of a sphere between polar angles t0 < t1.
    pub fn sphere_band(radius: f64, t0: f64, t1: f64) -> Result<Self> {
        positive("sphere radius", radius)?;
        if t0 < 0.0 || t1 > PI {
            return Err(Error::Regularity("sphere band must lie within [0, π]".into()));
        }
        Self::new(CurveShape::Sphere { radius }, t0, t1, false)
    }

    pub fn cylinder(radius: f64, length: f64) -> Result<Self> {
        positive("cylinder radius", radius)?;
        positive("cylinder length", length)?;
        Self::new(CurveShape::Cylinder { radius }, 0.0, length, false)
    }

    pub fn annulus(inner: f64, outer: f64) -> Result<Self> {
        positive("annulus inner radius", inner)?;
        Self::new(CurveShape::Flat, inner, outer, false)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        positive("disk radius", radius)?;
        Self::new(CurveShape::Flat, 0.0, radius, false)
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        Self::torus_shape(major, minor)?;
        Self::new(CurveShape::Torus { major, minor }, 0.0, TAU, true)
    }

    pub fn torus_band(major: f64, minor: f64, s0: f64, s1: f64) -> Result<Self> {
        Self::torus_shape(major, minor)?;
        if s1 - s0 >= TAU {
            return Err(Error::Regularity("torus band wider than a full turn; use torus".into()));
        }
        Self::new(CurveShape::Torus { major, minor }, s0, s1, false)
    }

    fn torus_shape(major: f64, minor: f64) -> Result<()> {
        positive("torus minor radius", minor)?;
        if major <= minor {
            return Err(Error::Regularity(format!(
                "torus needs major > minor radius, got {major} <= {minor}"
            )));
        }
        Ok(())
    }

    pub fn ellipsoid_band(a: f64, c: f64, t0: f64, t1: f64) -> Result<Self> {
        positive("ellipsoid semi-axis a", a)?;
        positive("ellipsoid semi-axis c", c)?;
        if t0 < 0.0 || t1 > PI {
            return Err(Error::Regularity("ellipsoid band must lie within [0, π]".into()));
        }
        Self::new(CurveShape::Ellipsoid { a, c }, t0, t1, false)
    }

    /// Cubic-spline interpolant of sampled `(t, x, z)` rows. Closed tables
    /// must repeat their first point at the end.
    pub fn from_table(rows: &[[f64; 3]], closed: bool) -> Result<Self> {
        let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let x: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        let z: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let (xs, zs) = if closed {
            (CubicSpline::periodic(&t, &x)?, CubicSpline::periodic(&t, &z)?)
        } else {
            (CubicSpline::natural(&t, &x)?, CubicSpline::natural(&t, &z)?)
        };
        let (a, b) = xs.domain();
        Self::new(CurveShape::Spline { x: xs, z: zs }, a, b, closed)
    }

    pub fn shape(&self) -> &CurveShape {
        &self.shape
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn touches_axis_at(&self) -> &[f64] {
        &self.touches_axis_at
    }

    pub fn eval(&self, t: f64) -> CurvePoint {
        match &self.shape {
            CurveShape::Sphere { radius: r } => {
                let (s, c) = t.sin_cos();
                CurvePoint { x: r * s, z: r * c, dx: r * c, dz: -r * s, ddx: -r * s, ddz: -r * c }
            }
            CurveShape::Cylinder { radius } => {
                CurvePoint { x: *radius, z: t, dx: 0.0, dz: 1.0, ddx: 0.0, ddz: 0.0 }
            }
            CurveShape::Flat => CurvePoint { x: t, z: 0.0, dx: 1.0, dz: 0.0, ddx: 0.0, ddz: 0.0 },
            CurveShape::Torus { major, minor } => {
                let (s, c) = t.sin_cos();
                CurvePoint {
                    x: major + minor * c,
                    z: minor * s,
                    dx: -minor * s,
                    dz: minor * c,
                    ddx: -minor * c,
                    ddz: -minor * s,
                }
            }
            CurveShape::Ellipsoid { a, c } => {
                let (s, co) = t.sin_cos();
                CurvePoint { x: a * s, z: c * co, dx: a * co, dz: -c * s, ddx: -a * s, ddz: -c * co }
            }
            CurveShape::Spline { x, z } => {
                let (xv, dx, ddx) = x.eval(t);
                let (zv, dz, ddz) = z.eval(t);
                CurvePoint { x: xv, z: zv, dx, dz, ddx, ddz }
            }
        }
    }

    fn validate(&mut self) -> Result<()> {
        let (a, b) = (self.t_min, self.t_max);
        let mut touches = Vec::new();
        for k in 0..=VALIDATION_SAMPLES {
            let t = a + (b - a) * k as f64 / VALIDATION_SAMPLES as f64;
            let p = self.eval(t);
            if !(p.x.is_finite() && p.z.is_finite() && p.dx.is_finite() && p.dz.is_finite()) {
                return Err(Error::Regularity(format!("curve is not finite at t = {t}")));
            }
            if p.x < -AXIS_TOL {
                return Err(Error::Regularity(format!("x(t) = {} < 0 at t = {t}", p.x)));
            }
            if p.speed() <= AXIS_TOL {
                return Err(Error::Regularity(format!("curve is not regular at t = {t}")));
            }
            if p.x.abs() <= AXIS_TOL {
                let endpoint = k == 0 || k == VALIDATION_SAMPLES;
                if !endpoint || self.closed {
                    return Err(Error::Axis(format!(
                        "curve meets the e3-axis at interior parameter t = {t}"
                    )));
                }
                if p.dz.abs() > 1e-9 * p.speed() {
                    return Err(Error::Axis(format!(
                        "curve meets the e3-axis at t = {t} but not perpendicularly (dz = {})",
                        p.dz
                    )));
                }
                touches.push(t);
            }
        }
        if self.closed {
            let (p, q) = (self.eval(a), self.eval(b));
            let gap = (p.x - q.x).hypot(p.z - q.z);
            if gap > 1e-9 * (1.0 + p.x.abs() + p.z.abs()) {
                return Err(Error::Regularity(format!(
                    "closed curve endpoints differ by {gap:e}"
                )));
            }
        }
        self.touches_axis_at = touches;
        Ok(())
    }

    /// Curve parameter of the point of the curve nearest to `(r, zeta)` in
    /// the meridian half-plane; ties go to the smallest parameter.
    pub fn closest_param(&self, r: f64, zeta: f64) -> f64 {
        let (a, b) = (self.t_min, self.t_max);
        match &self.shape {
            CurveShape::Sphere { .. } => {
                // polar angle of (r, zeta), clamped onto the arc
                let s = r.atan2(zeta);
                s.clamp(a, b)
            }
            CurveShape::Cylinder { .. } => zeta.clamp(a, b),
            CurveShape::Flat => r.clamp(a, b),
            CurveShape::Torus { major, .. } => {
                let (dr, dz) = (r - major, zeta);
                if dr == 0.0 && dz == 0.0 {
                    return a;
                }
                let theta = dz.atan2(dr);
                if self.closed {
                    let s = a + (theta - a).rem_euclid(TAU);
                    if s >= b { a } else { s }
                } else {
                    let mid = 0.5 * (a + b);
                    // representative of theta closest to the band centre
                    let s = mid + (theta - mid + PI).rem_euclid(TAU) - PI;
                    if s >= a && s <= b {
                        s
                    } else {
                        let da = angular_gap(s, a);
                        let db = angular_gap(s, b);
                        if da <= db { a } else { b }
                    }
                }
            }
            CurveShape::Ellipsoid { a: ea, c: ec } => {
                // Newton from the eccentric-angle guess; inside the smallest
                // radius of curvature the nearest point is unique
                let rho = (ea * ea / ec).min(ec * ec / ea);
                let mut s = (r / ea).atan2(zeta / ec).clamp(a, b);
                for _ in 0..30 {
                    let p = self.eval(s);
                    let (ex, ez) = (p.x - r, p.z - zeta);
                    let f1 = ex * p.dx + ez * p.dz;
                    let f2 = p.dx * p.dx + p.dz * p.dz + ex * p.ddx + ez * p.ddz;
                    if f2 <= 0.0 {
                        break;
                    }
                    let next = (s - f1 / f2).clamp(a, b);
                    if (next - s).abs() <= 1e-12 * (1.0 + s.abs()) {
                        // one more step lands at roundoff
                        let p = self.eval(next);
                        let (ex, ez) = (p.x - r, p.z - zeta);
                        let f2 = p.dx * p.dx + p.dz * p.dz + ex * p.ddx + ez * p.ddz;
                        if ex.hypot(ez) < 0.5 * rho && f2 > 0.0 {
                            return (next - (ex * p.dx + ez * p.dz) / f2).clamp(a, b);
                        }
                        break;
                    }
                    s = next;
                }
                self.closest_param_generic(r, zeta)
            }
            _ => self.closest_param_generic(r, zeta),
        }
    }

    fn closest_param_generic(&self, r: f64, zeta: f64) -> f64 {
        let dist2 = |x: f64, z: f64| (r - x) * (r - x) + (zeta - z) * (zeta - z);
        let scan = |range: std::ops::Range<usize>, stride: usize, best: &mut usize, best_d: &mut f64| {
            for k in range.step_by(stride) {
                let d = dist2(self.samples[k][1], self.samples[k][2]);
                if d < *best_d {
                    *best_d = d;
                    *best = k;
                }
            }
        };
        // coarse pass, then every sample next to the coarse winner
        let (mut best, mut best_d) = (0, f64::INFINITY);
        scan(0..self.samples.len(), COARSE_STRIDE, &mut best, &mut best_d);
        let (lo_k, hi_k) = (best.saturating_sub(COARSE_STRIDE), (best + COARSE_STRIDE + 1).min(self.samples.len()));
        let coarse = best;
        best_d = f64::INFINITY;
        scan(lo_k..hi_k, 1, &mut best, &mut best_d);
        debug_assert!(best_d <= dist2(self.samples[coarse][1], self.samples[coarse][2]));
        let (a, b) = (self.t_min, self.t_max);
        let step = (b - a) / PROJECTION_SAMPLES as f64;
        let lo = (self.samples[best][0] - step).max(a);
        let hi = (self.samples[best][0] + step).min(b);
        let mut s = self.samples[best][0];
        for _ in 0..30 {
            let p = self.eval(s);
            let (ex, ez) = (p.x - r, p.z - zeta);
            let f1 = ex * p.dx + ez * p.dz;
            let f2 = p.dx * p.dx + p.dz * p.dz + ex * p.ddx + ez * p.ddz;
            if f2 <= 0.0 {
                break;
            }
            let next = (s - f1 / f2).clamp(lo, hi);
            if (next - s).abs() <= 1e-15 * (1.0 + s.abs()) {
                s = next;
                break;
            }
            s = next;
        }
        let p = self.eval(s);
        if dist2(p.x, p.z) <= best_d {
            s
        } else {
            self.samples[best][0]
        }
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Regularity(format!("{name} must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Base,
    Target,
}

#[derive(Debug, Clone)]
pub struct SurfaceOfRevolution {
    pub curve: GeneratingCurve,
    pub role: Role,
}

impl SurfaceOfRevolution {
    pub fn new(curve: GeneratingCurve, role: Role) -> Self {
        SurfaceOfRevolution { curve, role }
    }

    pub fn base(curve: GeneratingCurve) -> Self {
        Self::new(curve, Role::Base)
    }

    pub fn target(curve: GeneratingCurve) -> Self {
        Self::new(curve, Role::Target)
    }

    pub fn unit_sphere(role: Role) -> Self {
        Self::new(GeneratingCurve::unit_sphere(), role)
    }

    fn full_sphere_radius(&self) -> Option<f64> {
        match self.curve.shape {
            CurveShape::Sphere { radius }
                if self.curve.t_min == 0.0 && self.curve.t_max == PI =>
            {
                Some(radius)
            }
            _ => None,
        }
    }

    /// Closest-point projection onto the surface.
    pub fn project(&self, v: &Vec3) -> Vec3 {
        if let Some(radius) = self.full_sphere_radius() {
            let n = v.norm();
            return if n > 0.0 { v * (radius / n) } else { Vec3::new(0.0, 0.0, radius) };
        }
        let r = v.x.hypot(v.y);
        let s = self.curve.closest_param(r, v.z);
        let p = self.curve.eval(s);
        let (c, sn) = if r > 0.0 { (v.x / r, v.y / r) } else { (1.0, 0.0) };
        Vec3::new(p.x * c, p.x * sn, p.z)
    }

    /// Unit normal of the surface at a point lying on it.
    pub fn normal_at(&self, p: &Vec3) -> Vec3 {
        if self.full_sphere_radius().is_some() {
            let n = p.norm();
            return if n > 0.0 { p / n } else { Vec3::z() };
        }
        let r = p.x.hypot(p.y);
        let s = self.curve.closest_param(r, p.z);
        let q = self.curve.eval(s);
        let speed = q.speed();
        let (c, sn) = if r > 0.0 { (p.x / r, p.y / r) } else { (1.0, 0.0) };
        let nr = q.dz / speed;
        Vec3::new(nr * c, nr * sn, -q.dx / speed)
    }

    /// Distance from `v` to the surface.
    pub fn distance(&self, v: &Vec3) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest |p| over points p of the surface.
    pub fn max_norm(&self) -> f64 {
        if let Some(radius) = self.full_sphere_radius() {
            return radius;
        }
        self.curve
            .samples
            .iter()
            .map(|s| s[1].hypot(s[2]))
            .fold(0.0, f64::max)
    }
}

/// Closest-point projection of `v` onto `target`.
pub fn project_to_target(target: &SurfaceOfRevolution, v: &Vec3) -> Vec3 {
    target.project(v)
}

/// Component of `w` tangent to `target` at the point `p ∈ target`.
pub fn tangent_project(target: &SurfaceOfRevolution, p: &Vec3, w: &Vec3) -> Vec3 {
    let n = target.normal_at(p);
    w - n * n.dot(w)
}

/// One staggered edge between t-rows `lo` and `hi`.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
    pub t: f64,
    pub h1: f64,
    pub h2: f64,
}

/// Tensor grid on a surface of revolution; node (i, j) has flat index
/// `j * n_phi + i`.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub surface: SurfaceOfRevolution,
    pub n_phi: usize,
    pub n_t: usize,
    pub dphi: f64,
    pub dt: f64,
    pub phi_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub sqrtg: Vec<f64>,
    /// Quadrature weight √g Δφ Δt of each node of row j.
    pub row_weights: Vec<f64>,
    pub edges: Vec<Edge>,
    pub closed: bool,
    pub transform: PhiTransform,
}

impl SurfaceMesh {
    pub fn len(&self) -> usize {
        self.n_phi * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i_phi: usize, j_t: usize) -> usize {
        j_t * self.n_phi + i_phi
    }

    pub fn quad_weight(&self, _i_phi: usize, j_t: usize) -> f64 {
        self.row_weights[j_t]
    }

    pub fn area(&self) -> f64 {
        self.row_weights.iter().sum::<f64>() * self.n_phi as f64
    }

    pub fn curve_point(&self, j_t: usize) -> CurvePoint {
        self.surface.curve.eval(self.t_nodes[j_t])
    }

    /// ξ(φ_i, t_j).
    pub fn position(&self, i_phi: usize, j_t: usize) -> Vec3 {
        let p = self.curve_point(j_t);
        rotate(self.phi_nodes[i_phi], &Vec3::new(p.x, 0.0, p.z))
    }
}

pub fn build_mesh(surface: SurfaceOfRevolution, n_phi: usize, n_t: usize) -> Result<SurfaceMesh> {
    if n_phi < 4 || n_phi % 2 != 0 {
        return Err(Error::InvalidGrid(format!("n_phi must be even and >= 4, got {n_phi}")));
    }
    if n_t < 2 {
        return Err(Error::InvalidGrid(format!("n_t must be >= 2, got {n_t}")));
    }
    let (a, b) = surface.curve.interval();
    let closed = surface.curve.closed();
    let dt = (b - a) / n_t as f64;
    let dphi = TAU / n_phi as f64;
    let phi_nodes: Vec<f64> = (0..n_phi).map(|i| TAU * i as f64 / n_phi as f64).collect();
    let t_nodes: Vec<f64> = (0..n_t).map(|j| a + (j as f64 + 0.5) * dt).collect();
    let mut h1 = Vec::with_capacity(n_t);
    let mut h2 = Vec::with_capacity(n_t);
    for &t in &t_nodes {
        let p = surface.curve.eval(t);
        if p.x <= 0.0 {
            return Err(Error::Axis(format!("x(t) = {} vanishes at node t = {t}", p.x)));
        }
        let speed = p.speed();
        if speed <= AXIS_TOL {
            return Err(Error::Regularity(format!("metric coefficient h2 vanishes at t = {t}")));
        }
        h1.push(p.x);
        h2.push(speed);
    }
    let sqrtg: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a * b).collect();
    let row_weights = sqrtg.iter().map(|g| g * dphi * dt).collect();
    let n_edges = if closed { n_t } else { n_t - 1 };
    let mut edges = Vec::with_capacity(n_edges);
    for e in 0..n_edges {
        let t = a + (e + 1) as f64 * dt;
        let p = surface.curve.eval(t);
        if p.x <= 0.0 {
            return Err(Error::Axis(format!("x(t) vanishes at interior edge t = {t}")));
        }
        edges.push(Edge { lo: e, hi: (e + 1) % n_t, t, h1: p.x, h2: p.speed() });
    }
    Ok(SurfaceMesh {
        surface,
        n_phi,
        n_t,
        dphi,
        dt,
        phi_nodes,
        t_nodes,
        h1,
        h2,
        sqrtg,
        row_weights,
        edges,
        closed,
        transform: PhiTransform::new(n_phi),
    })
}

/// Unit surface normal (τ_φ × τ_t)/|τ_φ × τ_t| at node (i, j).
pub fn surface_normal(mesh: &SurfaceMesh, i_phi: usize, j_t: usize) -> Result<Vec3> {
    let p = mesh.curve_point(j_t);
    let raw = Vec3::new(p.x * p.dz, 0.0, -p.x * p.dx);
    let norm = raw.norm();
    if norm < 1e-12 {
        return Err(Error::DegenerateTangent { i_phi, j_t, norm });
    }
    Ok(rotate(mesh.phi_nodes[i_phi], &(raw / norm)))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NeverFlatReport {
    pub never_flat: bool,
    pub flat_intervals: Vec<(f64, f64)>,
}

const FLAT_SAMPLES: usize = 4096;

/// Detects horizontal flat bands of the generating curve: parameter runs
/// longer than `tol` on which |dz| < tol while |dx| > tol.
pub fn never_flat_check(target: &SurfaceOfRevolution, tol: f64) -> NeverFlatReport {
    let (a, b) = target.curve.interval();
    let mut intervals = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for k in 0..=FLAT_SAMPLES {
        let t = a + (b - a) * k as f64 / FLAT_SAMPLES as f64;
        let p = target.curve.eval(t);
        let flat = p.dz.abs() < tol && p.dx.abs() > tol;
        run = match (run, flat) {
            (None, true) => Some((t, t)),
            (Some((s, _)), true) => Some((s, t)),
            (Some(r), false) => {
                intervals.push(r);
                None
            }
            (None, false) => None,
        };
    }
    intervals.extend(run);
    intervals.retain(|(s, e)| e - s > tol);
    NeverFlatReport { never_flat: intervals.is_empty(), flat_intervals: intervals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rotation_examples() {
        let e1 = Vec3::x();
        assert!(close(&rotate(PI / 2.0, &e1), &Vec3::y(), 1e-15));
        let v = Vec3::new(0.3, -0.4, 0.5);
        assert!(close(&rotate(0.0, &v), &v, 0.0));
        assert!(close(&rotate(1.234, &Vec3::z()), &Vec3::z(), 0.0));
        assert!(close(&rotate_inverse(PI / 2.0, &Vec3::y()), &e1, 1e-15));
        assert!(close(&rotate_inverse(0.77, &rotate(0.77, &v)), &v, 1e-15));
        assert!(close(&rotate_inverse(PI, &e1), &(-e1), 1e-15));
    }

    #[test]
    fn mesh_areas() {
        let sphere = build_mesh(SurfaceOfRevolution::unit_sphere(Role::Base), 64, 64).unwrap();
        assert!((sphere.area() - 4.0 * PI).abs() / (4.0 * PI) < 1e-3);
        let cyl = SurfaceOfRevolution::base(GeneratingCurve::cylinder(1.0, 1.0).unwrap());
        for &(np, nt) in &[(4, 2), (16, 9), (64, 33)] {
            let m = build_mesh(cyl.clone(), np, nt).unwrap();
            assert!((m.area() - TAU).abs() < 1e-13);
        }
        let ann = SurfaceOfRevolution::base(GeneratingCurve::annulus(1.0, 2.0).unwrap());
        let m = build_mesh(ann, 16, 100).unwrap();
        assert!((m.area() - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn mesh_rejects_bad_grids() {
        let s = SurfaceOfRevolution::unit_sphere(Role::Base);
        assert!(matches!(build_mesh(s.clone(), 7, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_mesh(s.clone(), 2, 8), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_mesh(s, 8, 1), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn bad_curves_are_rejected() {
        // crosses the axis in the interior
        let rows: Vec<[f64; 3]> = (0..11)
            .map(|k| {
                let t = k as f64 * 0.1;
                [t, (t - 0.5) * (t - 0.5), t]
            })
            .collect();
        assert!(GeneratingCurve::from_table(&rows, false).is_err());
        // meets the axis at an endpoint but not perpendicularly
        let slanted: Vec<[f64; 3]> = (0..11).map(|k| [k as f64 * 0.1, k as f64 * 0.1, k as f64 * 0.1]).collect();
        assert!(matches!(GeneratingCurve::from_table(&slanted, false), Err(Error::Axis(_))));
        assert!(GeneratingCurve::torus(1.0, 2.0).is_err());
    }

    #[test]
    fn normals() {
        let sphere = build_mesh(SurfaceOfRevolution::unit_sphere(Role::Base), 16, 12).unwrap();
        for j in 0..12 {
            for i in 0..16 {
                let n = surface_normal(&sphere, i, j).unwrap();
                let x = sphere.position(i, j);
                assert!((n.dot(&x).abs() / x.norm() - 1.0).abs() < 1e-12);
                let n0 = surface_normal(&sphere, 0, j).unwrap();
                assert!(close(&n, &rotate(sphere.phi_nodes[i], &n0), 1e-12));
            }
        }
        let cyl = build_mesh(
            SurfaceOfRevolution::base(GeneratingCurve::cylinder(1.0, 1.0).unwrap()),
            8,
            5,
        )
        .unwrap();
        for j in 0..5 {
            for i in 0..8 {
                assert!(surface_normal(&cyl, i, j).unwrap().z.abs() < 1e-15);
            }
        }
        let ann = build_mesh(
            SurfaceOfRevolution::base(GeneratingCurve::annulus(1.0, 2.0).unwrap()),
            8,
            5,
        )
        .unwrap();
        assert!(surface_normal(&ann, 3, 2).unwrap().z.abs() == 1.0);
    }

    #[test]
    fn projection_examples() {
        let s = SurfaceOfRevolution::unit_sphere(Role::Target);
        assert!(close(&s.project(&Vec3::new(0.0, 0.0, 2.0)), &Vec3::z(), 1e-15));
        assert!(close(&s.project(&Vec3::new(0.3, 0.4, 0.0)), &Vec3::new(0.6, 0.8, 0.0), 1e-15));
        let torus = SurfaceOfRevolution::target(GeneratingCurve::torus(2.0, 1.0).unwrap());
        assert!(close(&torus.project(&Vec3::new(4.0, 0.0, 0.0)), &Vec3::new(3.0, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn torus_projection_matches_brute_force_scan() {
        let torus = SurfaceOfRevolution::target(GeneratingCurve::torus(2.0, 1.0).unwrap());
        let band = SurfaceOfRevolution::target(GeneratingCurve::torus_band(2.0, 1.0, -1.0, 1.0).unwrap());
        let points = [
            Vec3::new(4.0, 0.0, 0.0),
            Vec3::new(0.5, 0.2, 0.9),
            Vec3::new(-1.0, 2.5, -0.7),
            Vec3::new(1.0, 0.0, 3.0),
        ];
        for surf in [&torus, &band] {
            let (a, b) = surf.curve.interval();
            for v in &points {
                let r = v.x.hypot(v.y);
                let n = 100_000;
                let best = (0..=n)
                    .map(|k| {
                        let s = a + (b - a) * k as f64 / n as f64;
                        let p = surf.curve.eval(s);
                        (r - p.x).hypot(v.z - p.z)
                    })
                    .fold(f64::INFINITY, f64::min);
                let d = surf.distance(v);
                assert!(d <= best + 1e-12 && d >= best - 1e-6, "{d} vs {best}");
            }
        }
    }

    #[test]
    fn generic_projection_is_idempotent() {
        let e = SurfaceOfRevolution::target(GeneratingCurve::ellipsoid_band(1.5, 0.8, 0.3, 2.5).unwrap());
        let v = Vec3::new(1.0, 1.0, 0.4);
        let p = e.project(&v);
        assert!(close(&e.project(&p), &p, 1e-12));
        // first-order optimality: v - p is normal
        let t = tangent_project(&e, &p, &(v - p));
        assert!(t.norm() < 1e-8);
    }

    #[test]
    fn tangent_projection_examples() {
        let s = SurfaceOfRevolution::unit_sphere(Role::Target);
        let w = tangent_project(&s, &Vec3::z(), &Vec3::new(1.0, 2.0, 3.0));
        assert!(close(&w, &Vec3::new(1.0, 2.0, 0.0), 1e-15));
        assert!(tangent_project(&s, &Vec3::x(), &Vec3::new(5.0, 0.0, 0.0)).norm() < 1e-15);
        let torus = SurfaceOfRevolution::target(GeneratingCurve::torus(2.0, 1.0).unwrap());
        let p = torus.project(&Vec3::new(1.0, 2.0, 0.5));
        let n = torus.normal_at(&p);
        assert!(tangent_project(&torus, &p, &n).norm() < 1e-10);
    }

    #[test]
    fn never_flat_examples() {
        assert!(never_flat_check(&SurfaceOfRevolution::unit_sphere(Role::Target), 1e-6).never_flat);
        let disk = SurfaceOfRevolution::target(GeneratingCurve::disk(1.0).unwrap());
        let rep = never_flat_check(&disk, 1e-6);
        assert!(!rep.never_flat);
        assert_eq!(rep.flat_intervals, vec![(0.0, 1.0)]);
        let cyl = SurfaceOfRevolution::target(GeneratingCurve::cylinder(1.0, 1.0).unwrap());
        assert!(never_flat_check(&cyl, 1e-6).never_flat);
    }

    #[test]
    fn sphere_area_converges_at_second_order() {
        let errs: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let m = build_mesh(SurfaceOfRevolution::unit_sphere(Role::Base), 8, n).unwrap();
                (m.area() - 4.0 * PI).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((1.8..=2.5).contains(&slope), "slope {slope}");
        }
    }
}
