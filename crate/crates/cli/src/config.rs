//! Run configuration files and provenance.

use std::path::{Path, PathBuf};

use axisym::instance::{AnisoSpec, BoundarySpec, GridSpec, InstanceSpec, PotentialSpec, SurfaceSpec, WeightSpec};
use axisym::io::Provenance;
use axisym::solvers::SolveConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const RUN_SCHEMA: &str = "axisym-run/1";

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub base_surface: SurfaceSpec,
    pub target_surface: SurfaceSpec,
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub aniso_field: AnisoSpec,
    pub weight: WeightSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolveConfig,
    /// Output directory, relative to the config file.
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
}

impl RunConfig {
    pub fn instance(&self) -> InstanceSpec {
        InstanceSpec {
            base_surface: self.base_surface.clone(),
            target_surface: self.target_surface.clone(),
            grid: self.grid,
            potential: self.potential.clone(),
            aniso_field: self.aniso_field.clone(),
            weight: self.weight.clone(),
            boundary: self.boundary.clone(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `NxM` → n_phi = N, n_t = M.
pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("--grid {s:?}: expected NxM"))?;
    let n = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("--grid {s:?}: {v:?} is not a count"));
    Ok(GridSpec { n_phi: n(a)?, n_t: n(b)? })
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn base_dir(path: &Path) -> PathBuf {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf()
}

/// A parsed run config with command-line overrides applied.
pub struct LoadedRun {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub provenance: Provenance,
}

pub struct Overrides<'a> {
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
    pub grid: Option<GridSpec>,
}

pub fn load_run(path: &Path, ov: &Overrides) -> Result<LoadedRun, CliError> {
    let bytes = read_bytes(path)?;
    let mut config: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if config.schema != RUN_SCHEMA {
        return Err(CliError::config(format!(
            "{}: schema = {:?}, expected {RUN_SCHEMA:?}",
            path.display(),
            config.schema
        )));
    }
    if let Some(s) = ov.seed {
        config.solver.seed = s;
    }
    if let Some(g) = ov.grid {
        config.grid = g;
    }
    config.grid.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    config.solver.validate().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let base_dir = base_dir(path);
    let out_dir = match ov.out {
        Some(o) => o.to_path_buf(),
        None => base_dir.join(&config.outputs),
    };
    let provenance = Provenance { config_hash: sha256_hex(&bytes), seed: config.solver.seed };
    Ok(LoadedRun { config, base_dir, out_dir, provenance })
}
