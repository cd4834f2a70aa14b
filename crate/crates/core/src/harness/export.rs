//! CSV surfaces: point evaluation, z-slices and mode-analysis reports.

use std::io::{Read, Write};

use crate::mesh::{fmt_f64, MeshError, Vec3};
use crate::modes::{ModeAnalysis, ModeHierarchy};
use crate::nesting::Problem;

use super::HarnessError;

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Also emit the untransformed `psi1, psi2`.
    pub raw_psi: bool,
}

/// Evaluates every `x,y,z` row of `input`, writing `x,y,z,f1,f2[,psi1,psi2],status`.
///
/// A leading non-numeric row is taken as a header. Rows outside the domain
/// get empty values and status `OutOfDomain`. Returns the number of failed rows.
pub fn evaluate_points<R: Read, W: Write>(
    problem: &Problem,
    input: R,
    output: W,
    opts: EvalOptions,
) -> Result<usize, HarnessError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut writer = csv::Writer::from_writer(output);
    let mut wrote_header = false;
    let mut failed = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let coords = match parsed {
            Ok(c) if c.len() == 3 => [c[0], c[1], c[2]],
            _ if row == 0 => continue,
            _ => {
                let line = record.position().map_or(row + 1, |p| p.line() as usize);
                return Err(HarnessError::Parse {
                    line,
                    column: 1,
                    message: "expected three numeric columns x,y,z".into(),
                });
            }
        };
        if !wrote_header {
            let mut header = vec!["x", "y", "z", "f1", "f2"];
            if opts.raw_psi {
                header.extend(["psi1", "psi2"]);
            }
            header.push("status");
            writer.write_record(&header)?;
            wrote_header = true;
        }
        let mut rec: Vec<String> = coords.iter().map(|&c| fmt_f64(c)).collect();
        match problem.mesh.locate(coords) {
            Ok(bary) => {
                let f = problem.evaluate_at(&bary);
                rec.extend([fmt_f64(f[0]), fmt_f64(f[1])]);
                if opts.raw_psi {
                    let psi = problem.psi.interpolate_at(&bary);
                    rec.extend([fmt_f64(psi[0]), fmt_f64(psi[1])]);
                }
                rec.push("ok".into());
            }
            Err(MeshError::OutOfDomain(_)) => {
                failed += 1;
                let empty = if opts.raw_psi { 4 } else { 2 };
                rec.extend(std::iter::repeat_n(String::new(), empty));
                rec.push("OutOfDomain".into());
            }
            Err(e) => return Err(e.into()),
        }
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(failed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub point: Vec3,
    /// Mesh vertex on the plane, or the endpoints of a crossing edge.
    pub source: SliceSource,
    pub psi: [f64; 2],
    pub f: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceSource {
    Vertex(usize),
    Edge(usize, usize),
}

/// Vertices lying on the plane `z` plus the crossing points of mesh edges,
/// sorted by `(x, y)`.
pub fn slice_rows(problem: &Problem, z: f64) -> Result<Vec<SliceRow>, HarnessError> {
    let b = problem.bbox();
    if !(z >= b.min[2] && z <= b.max[2]) {
        return Err(MeshError::OutOfDomain([f64::NAN, f64::NAN, z]).into());
    }
    let mesh = &problem.mesh;
    let tol = 1e-12 * (b.max[2] - b.min[2]);
    let on_plane = |v: usize| (mesh.vertex(v)[2] - z).abs() <= tol;
    let transform = &problem.spec.transform;
    let objective = |rotated: [f64; 2], baked: [f64; 2]| {
        if transform.bake {
            baked
        } else {
            transform.maps.apply(rotated)
        }
    };

    let mut rows = Vec::new();
    for v in (0..mesh.vertex_count()).filter(|&v| on_plane(v)) {
        rows.push(SliceRow {
            point: mesh.vertex(v),
            source: SliceSource::Vertex(v),
            psi: problem.psi.value(v),
            f: problem.objectives.value(v),
        });
    }
    for (a, c) in mesh.edges() {
        if on_plane(a) || on_plane(c) {
            continue;
        }
        let (za, zc) = (mesh.vertex(a)[2], mesh.vertex(c)[2]);
        if (za - z) * (zc - z) >= 0.0 {
            continue;
        }
        let t = (z - za) / (zc - za);
        let lerp = |u: [f64; 2], w: [f64; 2]| [(1.0 - t) * u[0] + t * w[0], (1.0 - t) * u[1] + t * w[1]];
        let (pa, pc) = (mesh.vertex(a), mesh.vertex(c));
        let mut point = [0, 1, 2].map(|i| (1.0 - t) * pa[i] + t * pc[i]);
        point[2] = z;
        rows.push(SliceRow {
            point,
            source: SliceSource::Edge(a, c),
            psi: lerp(problem.psi.value(a), problem.psi.value(c)),
            f: objective(
                lerp(problem.rotated.value(a), problem.rotated.value(c)),
                lerp(problem.objectives.value(a), problem.objectives.value(c)),
            ),
        });
    }
    rows.sort_by(|r, s| {
        r.point[0].total_cmp(&s.point[0]).then(r.point[1].total_cmp(&s.point[1]))
    });
    Ok(rows)
}

pub fn write_slice_csv<W: Write>(rows: &[SliceRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "z", "source", "a", "b", "psi1", "psi2", "f1", "f2"])?;
    for r in rows {
        let (kind, a, b) = match r.source {
            SliceSource::Vertex(v) => ("vertex", v.to_string(), String::new()),
            SliceSource::Edge(a, b) => ("edge", a.to_string(), b.to_string()),
        };
        let mut rec: Vec<String> = r.point.iter().map(|&c| fmt_f64(c)).collect();
        rec.extend([kind.to_string(), a, b]);
        rec.extend([r.psi[0], r.psi[1], r.f[0], r.f[1]].map(fmt_f64));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Rendered analysis: per-vertex signatures, signature table, inclusion
/// edges and a short text summary.
pub struct AnalysisReport {
    pub vertices_csv: Vec<u8>,
    pub signatures_csv: Vec<u8>,
    pub edges_csv: Vec<u8>,
    pub summary: String,
}

pub fn analysis_report(analysis: &ModeAnalysis<'_>, h: &ModeHierarchy) -> Result<AnalysisReport, HarnessError> {
    let mut vw = csv::Writer::from_writer(Vec::new());
    vw.write_record(["vertex", "signature"])?;
    for (v, s) in h.vertex_signature.iter().enumerate() {
        vw.write_record([v.to_string(), s.to_string()])?;
    }

    let mut sw = csv::Writer::from_writer(Vec::new());
    sw.write_record(["signature", "mode_count", "modes", "vertex_count", "volume"])?;
    for (i, s) in h.signatures.iter().enumerate() {
        let modes: Vec<String> = s.modes.iter().map(|m| m.representative.to_string()).collect();
        sw.write_record([
            i.to_string(),
            s.modes.len().to_string(),
            modes.join(";"),
            s.vertex_count.to_string(),
            fmt_f64(s.volume),
        ])?;
    }

    let mut ew = csv::Writer::from_writer(Vec::new());
    ew.write_record(["subset", "superset"])?;
    for (a, b) in &h.edges {
        ew.write_record([a.to_string(), b.to_string()])?;
    }

    let into = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| HarnessError::Runtime(e.to_string()));
    let summary = format!(
        "vertices {}\nlocal_pareto_vertices {}\nmodes {}\nsignatures {}\ninclusion_edges {}\nhierarchy_depth {}\ntotal_volume {}\n",
        h.vertex_signature.len(),
        analysis.local_pareto_vertices().len(),
        h.components.len(),
        h.signatures.len(),
        h.edges.len(),
        h.depth(),
        fmt_f64(h.total_volume()),
    );
    Ok(AnalysisReport {
        vertices_csv: into(vw)?,
        signatures_csv: into(sw)?,
        edges_csv: into(ew)?,
        summary,
    })
}
