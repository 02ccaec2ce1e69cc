use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use axisym::annulus::{solve_annulus_example, AnnulusReport, AnnulusSetup};
use axisym::energy::{BoundaryData, EnergyBreakdown, EnergyParams};
use axisym::fields::{build_from_profile, DiscreteField, Variant};
use axisym::instance::{GridSpec, Instance};
use axisym::io::{read_field_csv, write_field_csv, write_modes_csv, write_profile_csv, write_table_csv, Provenance};
use axisym::solvers::{minimize_1d_profile, minimize_2d, symmetrize_and_certify, ChainReport, ProfileReport, SolveReport};
use axisym::verify::{run_suite, Matrix, SuiteConfig};
use axisym::Error;
use serde::Serialize;

use crate::config::{base_dir, load_run, read_bytes, sha256_hex, LoadedRun, Overrides};
use crate::CliError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(path, e))?;
    s.push(b'\n');
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn core(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

fn prepare(run: &LoadedRun) -> Result<Instance, CliError> {
    let inst = run.config.instance().build(&run.base_dir).map_err(|e| CliError::config(e.to_string()))?;
    std::fs::create_dir_all(&run.out_dir).map_err(|e| CliError::io(&run.out_dir, e))?;
    Ok(inst)
}

#[derive(Serialize)]
struct MinimizeArtifact<'a> {
    schema: &'static str,
    provenance: &'a Provenance,
    restart_budget: usize,
    report: &'a SolveReport,
}

#[derive(Serialize)]
struct BreakdownArtifact<'a> {
    schema: &'static str,
    provenance: &'a Provenance,
    energy: &'a EnergyBreakdown,
}

pub fn minimize(config: &Path, ov: &Overrides) -> Result<u8, CliError> {
    let run = load_run(config, ov)?;
    let inst = prepare(&run)?;
    let solver = &run.config.solver;
    let report = minimize_2d(inst.mesh.clone(), inst.target.clone(), &inst.params, solver)
        .map_err(|e| CliError::config(e.to_string()))?;
    let dir = &run.out_dir;
    let prov = &run.provenance;
    let p = dir.join("field.csv");
    write_field_csv(create(&p)?, &report.best_field, prov).map_err(core(&p))?;
    let p = dir.join("modes.csv");
    write_modes_csv(create(&p)?, &inst.mesh, &report.modes, prov).map_err(core(&p))?;
    write_json(
        &dir.join("breakdown.json"),
        &BreakdownArtifact { schema: "axisym-breakdown/1", provenance: prov, energy: &report.best_energy },
    )?;
    write_json(
        &dir.join("report.json"),
        &MinimizeArtifact { schema: "axisym-report/1", provenance: prov, restart_budget: solver.restarts, report: &report },
    )?;
    println!(
        "minimize: E = {:.12e} (dirichlet {:.6e}, anisotropy {:.6e}, penalty {:.6e}), converged {}, {} restarts",
        report.best_energy.total,
        report.best_energy.dirichlet,
        report.best_energy.anisotropy,
        report.best_energy.penalty,
        report.converged,
        report.restarts.len()
    );
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Serialize)]
#[serde(untagged)]
enum VariantOutcome<'a> {
    Solved(&'a ProfileReport),
    Skipped { variant: Variant, error: String },
}

#[derive(Serialize)]
struct VariantComparison {
    variant: Variant,
    energy_1d: f64,
    /// |F − E₂d| / |E₂d|.
    energy_gap: f64,
    l2_distance: f64,
}

#[derive(Serialize)]
struct Comparison {
    prior: PathBuf,
    energy_2d: f64,
    variants: Vec<VariantComparison>,
}

#[derive(Serialize)]
struct ReduceArtifact<'a> {
    schema: &'static str,
    provenance: &'a Provenance,
    variants: Vec<VariantOutcome<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
    warnings: Vec<String>,
}

fn prior_field(dir: &Path, inst: &Instance) -> Result<Option<(f64, DiscreteField)>, CliError> {
    let report = dir.join("report.json");
    if !report.exists() {
        return Ok(None);
    }
    let bytes = read_bytes(&report)?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", report.display())))?;
    let energy = value
        .pointer("/report/best_energy/total")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| CliError::config(format!("{}: missing report.best_energy.total", report.display())))?;
    let p = dir.join("field.csv");
    let file = File::open(&p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
    let (field, _) = read_field_csv(file, inst.mesh.clone(), inst.target.clone())
        .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
    Ok(Some((energy, field)))
}

pub fn reduce(config: &Path, ov: &Overrides, prior: Option<&Path>) -> Result<u8, CliError> {
    let run = load_run(config, ov)?;
    let inst = prepare(&run)?;
    let prov = &run.provenance;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for variant in [Variant::Symmetric, Variant::Antisymmetric] {
        match minimize_1d_profile(inst.mesh.clone(), inst.target.clone(), &inst.params, variant, &run.config.solver) {
            Ok(r) => {
                let p = run.out_dir.join(format!("profile_{}.csv", variant.name()));
                write_profile_csv(create(&p)?, &r.best_profile, prov).map_err(core(&p))?;
                reports.push(r);
            }
            Err(e @ Error::InvalidBoundary(_)) => skipped.push((variant, e.to_string())),
            Err(e) => return Err(CliError::config(e.to_string())),
        }
    }
    let mut warnings: Vec<String> = reports.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
    let comparison = match prior {
        None => None,
        Some(dir) => match prior_field(dir, &inst)? {
            None => {
                warnings.push(format!("no prior report in {}; comparison omitted", dir.display()));
                None
            }
            Some((energy_2d, field)) => {
                let variants = reports
                    .iter()
                    .map(|r| {
                        let built = build_from_profile(inst.mesh.clone(), inst.target.clone(), &r.best_profile)
                            .map_err(|e| CliError::config(e.to_string()))?;
                        Ok(VariantComparison {
                            variant: r.variant,
                            energy_1d: r.best_energy.total,
                            energy_gap: (r.best_energy.total - energy_2d).abs() / energy_2d.abs().max(f64::MIN_POSITIVE),
                            l2_distance: field.l2_distance(&built),
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Some(Comparison { prior: dir.to_path_buf(), energy_2d, variants })
            }
        },
    };
    for r in &reports {
        println!(
            "reduce {}: F = {:.12e}, converged {}, |F - E(build)| = {:.3e}",
            r.variant.name(),
            r.best_energy.total,
            r.converged,
            r.consistency_gap
        );
    }
    for (v, e) in &skipped {
        println!("reduce {}: skipped ({e})", v.name());
    }
    if let Some(c) = &comparison {
        for v in &c.variants {
            println!("compare {}: energy gap {:.3e}, L2 distance {:.3e}", v.variant.name(), v.energy_gap, v.l2_distance);
        }
    }
    for w in &warnings {
        println!("warning: {w}");
    }
    let converged = reports.iter().all(|r| r.converged);
    let mut variants: Vec<VariantOutcome> = reports.iter().map(VariantOutcome::Solved).collect();
    variants.extend(skipped.into_iter().map(|(variant, error)| VariantOutcome::Skipped { variant, error }));
    write_json(
        &run.out_dir.join("reduce.json"),
        &ReduceArtifact { schema: "axisym-reduce/1", provenance: prov, variants, comparison, warnings },
    )?;
    Ok(if converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn verify(config: Option<&Path>, out: &Path, seed: Option<u64>, grid: Option<GridSpec>) -> Result<u8, CliError> {
    let (mut cfg, bytes, dir) = match config {
        Some(p) => {
            let bytes = read_bytes(p)?;
            let cfg: SuiteConfig =
                serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            (cfg, bytes, base_dir(p))
        }
        None => {
            let cfg = SuiteConfig::new(Matrix::Default);
            let bytes = serde_json::to_vec(&cfg).expect("suite config serializes");
            (cfg, bytes, PathBuf::from("."))
        }
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    if grid.is_some() {
        cfg.grid = grid;
    }
    let prov = Provenance { config_hash: sha256_hex(&bytes), seed: cfg.seed.unwrap_or(0) };
    let outcome = run_suite(&cfg, &dir, Some(out), &prov).map_err(|e| match e {
        Error::Io(_) => CliError::io(out, e),
        e => CliError::config(e.to_string()),
    })?;
    let s = &outcome.summary;
    println!(
        "verify: {} instances, {} certificates: {} applicable, {} borderline, {} inapplicable; {} passed, {} failed",
        s.instances, s.certificates, s.applicable, s.borderline, s.inapplicable, s.passed, s.failed
    );
    for f in &s.failures {
        println!("failed: {f}");
    }
    Ok(if s.all_pass { EXIT_OK } else { EXIT_FAILED })
}

/// `variant:x,y,z`, variant one of symmetric, antisymmetric, constant.
pub fn parse_boundary(s: &str) -> Result<BoundaryData, String> {
    let (kind, v) = s.split_once(':').ok_or_else(|| format!("{s:?}: expected variant:x,y,z"))?;
    let parts = v
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| format!("{s:?}: {c:?} is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    let v: [f64; 3] = parts.try_into().map_err(|_| format!("{s:?}: expected three components"))?;
    match kind.trim() {
        "symmetric" => Ok(BoundaryData::Symmetric(v)),
        "antisymmetric" => Ok(BoundaryData::Antisymmetric(v)),
        "constant" => Ok(BoundaryData::Constant(v)),
        other => Err(format!("{s:?}: unknown variant {other:?}")),
    }
}

#[derive(Serialize)]
struct AnnulusArtifact<'a> {
    schema: &'static str,
    provenance: &'a Provenance,
    report: &'a AnnulusReport,
}

pub fn annulus(setup: AnnulusSetup, out: &Path) -> Result<u8, CliError> {
    let bytes = serde_json::to_vec(&setup).expect("annulus setup serializes");
    let prov = Provenance { config_hash: sha256_hex(&bytes), seed: 0 };
    let report = solve_annulus_example(&setup).map_err(|e| match e {
        Error::SingularSystem(m) => CliError::singular(m),
        e => CliError::config(e.to_string()),
    })?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let rows: Vec<Vec<f64>> = report.r_nodes.iter().zip(&report.mean_perp_norm).map(|(r, m)| vec![*r, *m]).collect();
    let p = out.join("radial_average.csv");
    write_table_csv(create(&p)?, &["r", "mean_perp_norm"], &rows, &prov).map_err(core(&p))?;
    let n_phi = setup.n_phi;
    let rows: Vec<Vec<f64>> = report
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| vec![report.r_nodes[k / n_phi], report.phi_nodes[k % n_phi], v.x, v.y, v.z])
        .collect();
    let p = out.join("solution.csv");
    write_table_csv(create(&p)?, &["r", "phi", "mx", "my", "mz"], &rows, &prov).map_err(core(&p))?;
    write_json(&out.join("annulus.json"), &AnnulusArtifact { schema: "axisym-annulus/1", provenance: &prov, report: &report })?;
    println!(
        "annulus: kappa = {}, max |<m_perp>| = {:.3e}, residual {:.3e}",
        setup.kappa, report.max_mean_perp, report.residual
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ChainArtifact<'a> {
    schema: &'static str,
    provenance: &'a Provenance,
    input: &'a Path,
    report: &'a ChainReport,
}

fn default_variant(params: &EnergyParams) -> Variant {
    params.aniso.variant()
}

pub fn symmetrize(config: &Path, ov: &Overrides, field: &Path, variant: Option<Variant>) -> Result<u8, CliError> {
    let run = load_run(config, ov)?;
    let inst = prepare(&run)?;
    let file = File::open(field).map_err(|e| CliError::config(format!("{}: {e}", field.display())))?;
    let (m, _) = read_field_csv(file, inst.mesh.clone(), inst.target.clone())
        .map_err(|e| CliError::config(format!("{}: {e}", field.display())))?;
    let variant = variant.unwrap_or_else(|| default_variant(&inst.params));
    let (u, report) = symmetrize_and_certify(&m, &inst.params, variant);
    let p = run.out_dir.join("symmetrized.field.csv");
    write_field_csv(create(&p)?, &u, &run.provenance).map_err(core(&p))?;
    write_json(
        &run.out_dir.join("chain.json"),
        &ChainArtifact { schema: "axisym-chain/1", provenance: &run.provenance, input: field, report: &report },
    )?;
    println!(
        "symmetrize {}: E(m) = {:.12e}, E(u) = {:.12e}, chain holds {}, monotone {}",
        variant.name(),
        report.energy_input.total,
        report.energy_symmetrized.total,
        report.chain_holds,
        report.monotone
    );
    let genuine_failure = !(report.chain_holds && report.monotone) && !report.hypothesis_violation;
    Ok(if genuine_failure { EXIT_FAILED } else { EXIT_OK })
}
