//! SVG scatter and coordinate CSV for a projection.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{PointKind, Projection2D};
use crate::error::{Error, Result};

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 40.0;
const DATA_COLOR: &str = "green";
const VARIABLE_COLOR: &str = "blue";

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRow {
    pub name: String,
    pub kind: PointKind,
    pub x: f64,
    pub y: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg(p: &Projection2D) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in &p.coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { (CANVAS - 2.0 * MARGIN) / span } else { 1.0 };
    let place = |c: &[f64; 2]| (MARGIN + (c[0] - lo[0]) * scale, CANVAS - MARGIN - (c[1] - lo[1]) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // Variables last so they sit on top of the data cloud.
    for kind in [PointKind::Data, PointKind::Variable] {
        for (c, label) in p.coords.iter().zip(&p.labels).filter(|(_, l)| l.kind == kind) {
            let (x, y) = place(c);
            match kind {
                PointKind::Data => {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{DATA_COLOR}" fill-opacity="0.5"/>"#
                    );
                }
                PointKind::Variable => {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="6" fill="{VARIABLE_COLOR}"/>"#);
                    let _ = writeln!(
                        out,
                        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" fill="{VARIABLE_COLOR}">{}</text>"#,
                        x + 8.0,
                        y - 8.0,
                        escape(&label.name)
                    );
                }
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn csv_text(p: &Projection2D) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Input(e.to_string());
    w.write_record(["name", "kind", "x", "y"]).map_err(io)?;
    for (c, l) in p.coords.iter().zip(&p.labels) {
        w.write_record([l.name.as_str(), l.kind.as_str(), &format!("{:.6}", c[0]), &format!("{:.6}", c[1])])
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Writes the SVG to `path` and the coordinates to the same path with a
/// `.csv` extension. Returns the CSV path.
pub fn emit_projection(p: &Projection2D, path: impl AsRef<Path>) -> Result<PathBuf> {
    if p.coords.is_empty() {
        return Err(Error::Input("nothing to plot".into()));
    }
    if p.coords.len() != p.labels.len() {
        return Err(Error::Shape {
            expected: p.coords.len(),
            got: p.labels.len(),
        });
    }
    let path = path.as_ref();
    fs::write(path, svg(p)).map_err(|e| Error::io(path, e))?;
    let csv_path = path.with_extension("csv");
    fs::write(&csv_path, csv_text(p)?).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}

pub fn read_projection_csv(path: impl AsRef<Path>) -> Result<Vec<ProjectionRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::schema(path, None, e.to_string()))?;
    let header = r.headers().map_err(|e| Error::schema(path, None, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["name", "kind", "x", "y"] {
        return Err(Error::schema(path, None, "expected header name,kind,x,y"));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::schema(path, Some(row), e.to_string()))?;
        let kind = match &rec[1] {
            "data" => PointKind::Data,
            "variable" => PointKind::Variable,
            other => return Err(Error::schema(path, Some(row), format!("unknown kind `{other}`"))),
        };
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|_| Error::schema(path, Some(row), format!("bad coordinate `{}`", &rec[k])))
        };
        rows.push(ProjectionRow {
            name: rec[0].to_string(),
            kind,
            x: num(2)?,
            y: num(3)?,
        });
    }
    Ok(rows)
}
