//! Declarative instance descriptions, shared by the CLI config and the
//! verification suite.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{
    AnisotropyField, AnisotropyKind, AnisotropyPotential, Boundary, BoundaryData, EnergyParams, TablePotential,
    Weight, WeightKind,
};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, GeneratingCurve, SurfaceMesh, SurfaceOfRevolution, Vec3};
use crate::io::read_table_csv;
use crate::spline::CubicSpline;

pub const GRID_MIN: usize = 8;
pub const GRID_MAX: usize = 4096;

/// Numeric samples given inline or as a CSV file (relative paths resolve
/// against the config's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<f64>>>,
}

impl TableSource {
    pub fn load(&self, key: &str, columns: usize, base_dir: &Path) -> Result<Vec<Vec<f64>>> {
        let rows = match (&self.path, &self.samples) {
            (Some(p), None) => {
                let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let file = std::fs::File::open(&full)
                    .map_err(|e| Error::Config(format!("{key}.path: cannot open {}: {e}", full.display())))?;
                read_table_csv(file, columns).map_err(|e| Error::Config(format!("{key}.path: {e}")))?
            }
            (None, Some(s)) => s.clone(),
            _ => return Err(Error::Config(format!("{key}: give exactly one of `path` or `samples`"))),
        };
        if let Some(k) = rows.iter().position(|r| r.len() != columns) {
            return Err(Error::Config(format!("{key}: sample {k} must have {columns} columns")));
        }
        Ok(rows)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceSpec {
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    SphereBand { radius: f64, t0: f64, t1: f64 },
    Cylinder { radius: f64, length: f64 },
    Annulus { inner: f64, outer: f64 },
    Disk {
        #[serde(default = "one")]
        radius: f64,
    },
    Torus { major: f64, minor: f64 },
    TorusBand { major: f64, minor: f64, s0: f64, s1: f64 },
    EllipsoidBand { a: f64, c: f64, t0: f64, t1: f64 },
    /// Spline through (t, x, z) samples.
    Table {
        table: TableSource,
        #[serde(default)]
        closed: bool,
    },
}

impl SurfaceSpec {
    pub fn curve(&self, key: &str, base_dir: &Path) -> Result<GeneratingCurve> {
        let wrap = |e: Error| Error::Config(format!("{key}: {e}"));
        match self {
            SurfaceSpec::Sphere { radius } => GeneratingCurve::sphere(*radius),
            SurfaceSpec::SphereBand { radius, t0, t1 } => GeneratingCurve::sphere_band(*radius, *t0, *t1),
            SurfaceSpec::Cylinder { radius, length } => GeneratingCurve::cylinder(*radius, *length),
            SurfaceSpec::Annulus { inner, outer } => GeneratingCurve::annulus(*inner, *outer),
            SurfaceSpec::Disk { radius } => GeneratingCurve::disk(*radius),
            SurfaceSpec::Torus { major, minor } => GeneratingCurve::torus(*major, *minor),
            SurfaceSpec::TorusBand { major, minor, s0, s1 } => GeneratingCurve::torus_band(*major, *minor, *s0, *s1),
            SurfaceSpec::EllipsoidBand { a, c, t0, t1 } => GeneratingCurve::ellipsoid_band(*a, *c, *t0, *t1),
            SurfaceSpec::Table { table, closed } => {
                let rows = table.load(&format!("{key}.table"), 3, base_dir)?;
                let rows: Vec<[f64; 3]> = rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
                GeneratingCurve::from_table(&rows, *closed)
            }
        }
        .map_err(wrap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Quadratic { kappa: f64 },
    EasyNormal { kappa: f64 },
    Quartic { lambda: f64 },
    /// Spline through (s, g) samples.
    Table { table: TableSource },
}

impl PotentialSpec {
    pub fn build(&self, base_dir: &Path) -> Result<AnisotropyPotential> {
        Ok(match self {
            PotentialSpec::Quadratic { kappa } => AnisotropyPotential::Quadratic { kappa: *kappa },
            PotentialSpec::EasyNormal { kappa } => AnisotropyPotential::EasyNormal { kappa: *kappa },
            PotentialSpec::Quartic { lambda } => AnisotropyPotential::Quartic { lambda: *lambda },
            PotentialSpec::Table { table } => {
                let rows = table.load("potential.table", 2, base_dir)?;
                let rows: Vec<[f64; 2]> = rows.iter().map(|r| [r[0], r[1]]).collect();
                AnisotropyPotential::Table(TablePotential::new(&rows)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnisoSpec {
    SurfaceNormal,
    ConstantE3,
    /// Profile a₀ from (t, ax, ay, az) samples, extended by A^⊤(φ).
    SymmetricProfile { table: TableSource },
    /// Profile a₀ from (t, ax, ay, az) samples, extended by A(φ).
    AntisymmetricProfile { table: TableSource },
}

fn spline_profile(rows: &[Vec<f64>], t_nodes: &[f64], key: &str) -> Result<Vec<Vec3>> {
    let knots: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let comps = (1..4)
        .map(|c| {
            let vals: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            CubicSpline::natural(&knots, &vals).map_err(|e| Error::Config(format!("{key}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(t_nodes
        .iter()
        .map(|&t| Vec3::new(comps[0].eval(t).0, comps[1].eval(t).0, comps[2].eval(t).0))
        .collect())
}

impl AnisoSpec {
    pub fn build(&self, mesh: &SurfaceMesh, base_dir: &Path) -> Result<AnisotropyField> {
        let kind = match self {
            AnisoSpec::SurfaceNormal => AnisotropyKind::SurfaceNormal,
            AnisoSpec::ConstantE3 => AnisotropyKind::ConstantE3,
            AnisoSpec::SymmetricProfile { table } => {
                let rows = table.load("aniso_field.table", 4, base_dir)?;
                AnisotropyKind::SymmetricProfile(spline_profile(&rows, &mesh.t_nodes, "aniso_field.table")?)
            }
            AnisoSpec::AntisymmetricProfile { table } => {
                let rows = table.load("aniso_field.table", 4, base_dir)?;
                AnisotropyKind::AntisymmetricProfile(spline_profile(&rows, &mesh.t_nodes, "aniso_field.table")?)
            }
        };
        AnisotropyField::build(mesh, kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { lambda: f64 },
    /// ω = c / ℌ₁(t).
    InverseRadius { c: f64 },
    /// ω(t) from (t, ω) samples.
    TTable { table: TableSource },
    /// ω = λ (1 + amplitude cos(harmonic φ)).
    Modulated { lambda: f64, amplitude: f64, harmonic: u32 },
}

impl WeightSpec {
    pub fn build(&self, mesh: &SurfaceMesh, base_dir: &Path) -> Result<Weight> {
        match self {
            WeightSpec::Constant { lambda } => Weight::constant(mesh, *lambda),
            WeightSpec::InverseRadius { c } => Weight::inverse_radius(mesh, *c),
            WeightSpec::TTable { table } => {
                let rows = table.load("weight.table", 2, base_dir)?;
                let knots: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let vals: Vec<f64> = rows.iter().map(|r| r[1]).collect();
                let s = CubicSpline::natural(&knots, &vals)
                    .map_err(|e| Error::Config(format!("weight.table: {e}")))?;
                Weight::t_profile(mesh, |t| s.eval(t).0)
            }
            WeightSpec::Modulated { lambda, amplitude, harmonic } => {
                let w = Weight::general(mesh, |phi, _| lambda * (1.0 + amplitude * (*harmonic as f64 * phi).cos()))?;
                Ok(Weight { kind: WeightKind::General, ..w })
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    #[default]
    Free,
    Dirichlet {
        #[serde(default)]
        bottom: Option<BoundaryData>,
        #[serde(default)]
        top: Option<BoundaryData>,
    },
}

impl BoundarySpec {
    pub fn build(&self) -> Boundary {
        match self {
            BoundarySpec::Free => Boundary::Free,
            BoundarySpec::Dirichlet { bottom, top } => Boundary::Dirichlet { bottom: *bottom, top: *top },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_phi: usize,
    pub n_t: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("n_phi", self.n_phi), ("n_t", self.n_t)] {
            if !(GRID_MIN..=GRID_MAX).contains(&v) {
                return Err(Error::Config(format!("grid.{key} = {v} is outside [{GRID_MIN}, {GRID_MAX}]")));
            }
        }
        if self.n_phi % 2 != 0 {
            return Err(Error::Config(format!("grid.n_phi = {} must be even", self.n_phi)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub base_surface: SurfaceSpec,
    pub target_surface: SurfaceSpec,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub aniso_field: AnisoSpec,
    pub weight: WeightSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
}

/// Everything a solve needs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mesh: Arc<SurfaceMesh>,
    pub target: Arc<SurfaceOfRevolution>,
    pub params: EnergyParams,
}

impl InstanceSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Instance> {
        self.grid.validate()?;
        let base = SurfaceOfRevolution::base(self.base_surface.curve("base_surface", base_dir)?);
        let target = Arc::new(SurfaceOfRevolution::target(self.target_surface.curve("target_surface", base_dir)?));
        let mesh = Arc::new(build_mesh(base, self.grid.n_phi, self.grid.n_t)?);
        let params = EnergyParams::new(
            &mesh,
            &target,
            self.potential.build(base_dir)?,
            self.aniso_field.build(&mesh, base_dir)?,
            self.weight.build(&mesh, base_dir)?,
            self.boundary.build(),
        )?;
        Ok(Instance { mesh, target, params })
    }

    pub fn with_grid(&self, grid: GridSpec) -> Self {
        InstanceSpec { grid, ..self.clone() }
    }
}
