//! Trial and manifest CSV files.
//!
//! Trial files carry the header `time,lx_pix,ly_pix,lx_href,ly_href,lp,rp`
//! (extra columns are ignored, order is free). An empty field, `.` or `NaN`
//! marks a missing value. Manifests map each trial file to a user and task.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Field, GazeSample, LabelSet, TaskLabel, Trial};
use crate::error::{Error, Result};

pub const TRIAL_HEADER: &str = "time,lx_pix,ly_pix,lx_href,ly_href,lp,rp";
pub const MANIFEST_HEADER: &str = "path,user_id,task";

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::schema(path, None, format!("missing required column `{name}`")))
}

fn csv_error(path: &Path, row: Option<usize>, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::schema(path, row, format!("{other:?}")),
    }
}

fn parse_measurement(raw: &str) -> Option<f64> {
    if raw.is_empty() || raw == "." || raw.eq_ignore_ascii_case("nan") {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_time(raw: &str) -> Option<u64> {
    raw.parse::<u64>().ok().or_else(|| {
        let v: f64 = raw.parse().ok()?;
        (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64).then_some(v as u64)
    })
}

/// Reads one trial file. Samples keep file order; bad measurement fields are
/// kept as missing so that filtering stays a separate step.
pub fn ingest_trial(path: impl AsRef<Path>, user_id: &str, task: TaskLabel) -> Result<Trial> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, None, e))?.clone();
    let time_col = column(&headers, "time", path)?;
    let field_cols = Field::ALL
        .iter()
        .map(|f| column(&headers, f.name(), path))
        .collect::<Result<Vec<_>>>()?;

    let mut samples = Vec::new();
    let mut prev_time = 0u64;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, Some(row), e))?;
        let raw_time = record.get(time_col).unwrap_or("");
        let time_ms = parse_time(raw_time)
            .ok_or_else(|| Error::schema(path, Some(row), format!("invalid time `{raw_time}`")))?;
        if time_ms < prev_time {
            return Err(Error::schema(path, Some(row), "time is not monotone"));
        }
        prev_time = time_ms;

        let mut sample = GazeSample {
            time_ms,
            ..Default::default()
        };
        for (&field, &col) in Field::ALL.iter().zip(&field_cols) {
            sample.set(field, record.get(col).and_then(parse_measurement));
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::schema(path, None, "empty trial"));
    }
    Ok(Trial {
        user_id: user_id.to_string(),
        task,
        samples,
    })
}

pub fn write_trial_csv(path: impl AsRef<Path>, trial: &Trial) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(64 * (trial.samples.len() + 1));
    out.push_str(TRIAL_HEADER);
    out.push('\n');
    for s in &trial.samples {
        out.push_str(&s.time_ms.to_string());
        for f in Field::ALL {
            out.push(',');
            if let Some(v) = s.get(f) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    pub user_id: String,
    pub task: TaskLabel,
}

pub fn read_manifest(path: impl AsRef<Path>, labels: &LabelSet) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = open_csv(path)?;
    let headers = reader.headers().map_err(|e| csv_error(path, None, e))?.clone();
    let path_col = column(&headers, "path", path)?;
    let user_col = column(&headers, "user_id", path)?;
    let task_col = column(&headers, "task", path)?;

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, Some(row), e))?;
        let file = PathBuf::from(record.get(path_col).unwrap_or(""));
        let task_name = record.get(task_col).unwrap_or("");
        let task = labels.parse(task_name).ok_or_else(|| {
            Error::schema(
                path,
                Some(row),
                format!("task `{task_name}` is not one of {}", labels.names().join(", ")),
            )
        })?;
        entries.push(ManifestEntry {
            path: if file.is_relative() { base.join(file) } else { file },
            user_id: record.get(user_col).unwrap_or("").to_string(),
            task,
        });
    }
    if entries.is_empty() {
        return Err(Error::schema(path, None, "manifest lists no trials"));
    }
    Ok(entries)
}

/// Reads every trial in a manifest, in manifest order. Files load concurrently.
pub fn load_manifest(path: impl AsRef<Path>, labels: &LabelSet) -> Result<Vec<Trial>> {
    read_manifest(path, labels)?
        .par_iter()
        .map(|e| ingest_trial(&e.path, &e.user_id, e.task))
        .collect()
}

/// Writes a manifest. Entry paths are written as given.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry], labels: &LabelSet) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    out.push_str(MANIFEST_HEADER);
    out.push('\n');
    for e in entries {
        let p = e.path.to_string_lossy();
        if p.contains(',') || e.user_id.contains(',') {
            return Err(Error::Config(format!("manifest fields may not contain commas: `{p}`")));
        }
        out.push_str(&format!("{},{},{}\n", p, e.user_id, labels.name(e.task)));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn reads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.csv",
            "time,lx_pix,ly_pix,lx_href,ly_href,lp,rp\n0,1,2,3,4,5,6\n2,1.5,2.5,3.5,4.5,5.5,6.5\n4,-1,-2,-3,-4,7,8\n",
        );
        let t = ingest_trial(&p, "u1", TaskLabel::new(2)).unwrap();
        assert_eq!(t.samples.len(), 3);
        assert_eq!(t.samples[1], GazeSample::new(2, [1.5, 2.5, 3.5, 4.5, 5.5, 6.5]));
        assert_eq!(t.samples[2].time_ms, 4);
        assert_eq!(t.user_id, "u1");
    }

    #[test]
    fn header_only_is_empty_trial() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "time,lx_pix,ly_pix,lx_href,ly_href,lp,rp\n");
        let err = ingest_trial(&p, "u", TaskLabel::new(0)).unwrap_err();
        assert!(err.to_string().contains("empty trial"), "{err}");
    }

    #[test]
    fn missing_markers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.csv",
            "time,lx_pix,ly_pix,lx_href,ly_href,lp,rp\n0,1,2,3,4,5,6\n1,1,2,3,4,.,6\n2,,NaN,nan,abc,5,6\n",
        );
        let t = ingest_trial(&p, "u", TaskLabel::new(0)).unwrap();
        assert_eq!(t.samples.len(), 3);
        assert!(t.samples[0].is_valid());
        assert_eq!(t.samples[1].lp, None);
        assert_eq!(t.samples[1].rp, Some(6.0));
        assert_eq!(t.samples[2].lx_pix, None);
        assert_eq!(t.samples[2].ly_pix, None);
        assert_eq!(t.samples[2].lx_href, None);
        assert_eq!(t.samples[2].ly_href, None);
    }

    #[test]
    fn missing_column_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "time,lx_pix,ly_pix,lx_href,ly_href,lp\n0,1,2,3,4,5\n");
        let err = ingest_trial(&p, "u", TaskLabel::new(0)).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
        assert!(err.to_string().contains("`rp`"), "{err}");
    }

    #[test]
    fn non_monotone_time_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.csv",
            "time,lx_pix,ly_pix,lx_href,ly_href,lp,rp\n0,1,2,3,4,5,6\n5,1,2,3,4,5,6\n3,1,2,3,4,5,6\n",
        );
        match ingest_trial(&p, "u", TaskLabel::new(0)).unwrap_err() {
            Error::Schema { row, .. } => assert_eq!(row, Some(3)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ingest_trial("/nonexistent/trial.csv", "u", TaskLabel::new(0)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn column_order_is_free_and_extras_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "rp,lp,extra,ly_href,lx_href,ly_pix,lx_pix,time\n6,5,x,4,3,2,1,10\n");
        let t = ingest_trial(&p, "u", TaskLabel::new(0)).unwrap();
        assert_eq!(t.samples[0], GazeSample::new(10, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let labels = LabelSet::default();
        let trial = Trial {
            user_id: "u7".into(),
            task: TaskLabel::new(3),
            samples: vec![GazeSample::new(0, [0.1, 0.2, 0.3, 0.4, 1234.5, 1200.25])],
        };
        write_trial_csv(dir.path().join("a.csv"), &trial).unwrap();
        let entries = vec![ManifestEntry {
            path: "a.csv".into(),
            user_id: "u7".into(),
            task: TaskLabel::new(3),
        }];
        write_manifest(dir.path().join("m.csv"), &entries, &labels).unwrap();
        let trials = load_manifest(dir.path().join("m.csv"), &labels).unwrap();
        assert_eq!(trials, vec![trial]);
    }

    #[test]
    fn manifest_unknown_task() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.csv", "path,user_id,task\na.csv,u1,Reading\n");
        let err = read_manifest(&p, &LabelSet::default()).unwrap_err();
        assert!(err.to_string().contains("Reading"), "{err}");
    }
}
