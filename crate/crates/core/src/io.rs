//! CSV artifacts for fields, profiles and mode tables.
//!
//! Every file starts with a `# config_hash=<hex>,seed=<n>` comment line.
//! Floats use 17 significant digits so values round-trip bit-exactly.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{DiscreteField, ModeDecomposition, ProfileField, Variant};
use crate::geometry::{SurfaceMesh, SurfaceOfRevolution, Vec3};

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    fn header(&self) -> String {
        format!("# config_hash={},seed={}\n", self.config_hash, self.seed)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input)
}

pub fn write_field_csv<W: Write>(mut out: W, field: &DiscreteField, prov: &Provenance) -> Result<()> {
    out.write_all(prov.header().as_bytes())?;
    let mut w = writer(out);
    w.write_record(["phi_index", "t_index", "phi", "t", "mx", "my", "mz"])?;
    let mesh = &field.mesh;
    for j in 0..mesh.n_t {
        for i in 0..mesh.n_phi {
            let v = field.at(i, j);
            w.write_record([
                i.to_string(),
                j.to_string(),
                fmt_f64(mesh.phi_nodes[i]),
                fmt_f64(mesh.t_nodes[j]),
                fmt_f64(v.x),
                fmt_f64(v.y),
                fmt_f64(v.z),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: usize) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("record {line}: bad or missing column {}", k + 1)))
}

fn read_provenance(text: &str) -> Option<Provenance> {
    let first = text.lines().next()?.strip_prefix('#')?.trim();
    let mut prov = Provenance::default();
    for part in first.split(',') {
        let (k, v) = part.split_once('=')?;
        match k.trim() {
            "config_hash" => prov.config_hash = v.trim().to_string(),
            "seed" => prov.seed = v.trim().parse().ok()?,
            _ => {}
        }
    }
    Some(prov)
}

/// Reads a field CSV written for `mesh`; node coordinates must match.
pub fn read_field_csv<R: Read>(
    mut input: R,
    mesh: Arc<SurfaceMesh>,
    target: Arc<SurfaceOfRevolution>,
) -> Result<(DiscreteField, Option<Provenance>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let prov = read_provenance(&text);
    let mut values = vec![None; mesh.len()];
    for (line, rec) in reader(text.as_bytes()).records().enumerate() {
        let rec = rec?;
        let i: usize = parse(&rec, 0, line)?;
        let j: usize = parse(&rec, 1, line)?;
        if i >= mesh.n_phi || j >= mesh.n_t {
            return Err(Error::MeshMismatch(format!("node ({i}, {j}) outside the mesh")));
        }
        let phi: f64 = parse(&rec, 2, line)?;
        let t: f64 = parse(&rec, 3, line)?;
        if (phi - mesh.phi_nodes[i]).abs() > 1e-12 || (t - mesh.t_nodes[j]).abs() > 1e-12 * (1.0 + t.abs()) {
            return Err(Error::MeshMismatch(format!("coordinates of node ({i}, {j}) differ from the mesh")));
        }
        let v = Vec3::new(parse(&rec, 4, line)?, parse(&rec, 5, line)?, parse(&rec, 6, line)?);
        values[j * mesh.n_phi + i] = Some(v);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| Error::MeshMismatch(format!("node {k} missing from field file"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((DiscreteField::new(mesh, target, values)?, prov))
}

pub fn write_profile_csv<W: Write>(mut out: W, profile: &ProfileField, prov: &Provenance) -> Result<()> {
    out.write_all(prov.header().as_bytes())?;
    let mut w = writer(out);
    w.write_record(["t_index", "t", "gx", "gy", "gz"])?;
    for (j, (t, g)) in profile.t_nodes.iter().zip(&profile.values).enumerate() {
        w.write_record([j.to_string(), fmt_f64(*t), fmt_f64(g.x), fmt_f64(g.y), fmt_f64(g.z)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(mut input: R, variant: Variant) -> Result<ProfileField> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut rows = Vec::new();
    for (line, rec) in reader(text.as_bytes()).records().enumerate() {
        let rec = rec?;
        let j: usize = parse(&rec, 0, line)?;
        if j != rows.len() {
            return Err(Error::Parse(format!("record {line}: t_index {j} out of order")));
        }
        let t: f64 = parse(&rec, 1, line)?;
        rows.push((t, Vec3::new(parse(&rec, 2, line)?, parse(&rec, 3, line)?, parse(&rec, 4, line)?)));
    }
    Ok(ProfileField {
        t_nodes: rows.iter().map(|r| r.0).collect(),
        values: rows.iter().map(|r| r.1).collect(),
        variant,
    })
}

/// Per-row table: t, |α_⊥|, |β_⊥|, α_⊥·β_⊥, η, |⟨m_⊥⟩|.
pub fn write_modes_csv<W: Write>(
    mut out: W,
    mesh: &SurfaceMesh,
    modes: &ModeDecomposition,
    prov: &Provenance,
) -> Result<()> {
    out.write_all(prov.header().as_bytes())?;
    let mut w = writer(out);
    w.write_record(["t", "alpha_norm", "beta_norm", "alpha_dot_beta", "eta", "mean_perp_norm"])?;
    for j in 0..mesh.n_t {
        let a = modes.alpha_perp[j];
        let b = modes.beta_perp[j];
        let m = modes.mean_perp[j];
        w.write_record([
            fmt_f64(mesh.t_nodes[j]),
            fmt_f64(a[0].hypot(a[1])),
            fmt_f64(b[0].hypot(b[1])),
            fmt_f64(a[0] * b[0] + a[1] * b[1]),
            fmt_f64(modes.eta[j]),
            fmt_f64(m[0].hypot(m[1])),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic numeric table with a provenance header.
pub fn write_table_csv<W: Write>(
    mut out: W,
    header: &[&str],
    rows: &[Vec<f64>],
    prov: &Provenance,
) -> Result<()> {
    out.write_all(prov.header().as_bytes())?;
    let mut w = writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a headed numeric table (comment lines allowed), e.g. spline samples.
pub fn read_table_csv<R: Read>(input: R, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line, rec) in reader(input).records().enumerate() {
        let rec = rec?;
        if rec.len() != columns {
            return Err(Error::Parse(format!(
                "record {line}: expected {columns} columns, found {}",
                rec.len()
            )));
        }
        rows.push((0..columns).map(|k| parse(&rec, k, line)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(rows)
}
