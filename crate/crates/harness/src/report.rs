//! Report files.
//!
//! * `report.csv`: one row per UE record, columns in [`REPORT_COLUMNS`]
//!   order, floats with 17 significant digits, empty cells for missing
//!   values, per-path elevation errors joined by `;`.
//! * `summary.json`: aggregates.
//! * `accuracy_map.csv`: `x,y,value` per UE. The value is F for the
//!   free-space scenarios, mean absolute elevation error in degrees for
//!   `multipath-far` and containment rate for `multipath-near`.
//! * `curve.csv`: `dx,F` per UE with a correlation, `dx` being the
//!   horizontal distance from the panel mast.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use panelinfer::inference::Scenario;
use panelinfer::metrics::{mean_abs_degrees, ScenarioReport, UeRecord};
use panelinfer::Point3;
use thiserror::Error;

use crate::dataset::fmt_f64;
use crate::run::MethodComparison;

pub const REPORT_COLUMNS: [&str; 11] = [
    "ue_id",
    "scenario",
    "x",
    "y",
    "z",
    "correlation",
    "elevation_errors",
    "containment",
    "n_paths",
    "n_skipped",
    "error",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report line {line}: {message}")]
    Malformed { line: u64, message: String },
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(records: &[UeRecord], writer: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for r in records {
        let (x, y, z) = match r.position {
            Some(p) => (fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z)),
            None => Default::default(),
        };
        let errors: Vec<String> = r.elevation_errors.iter().map(|&e| fmt_f64(e)).collect();
        w.write_record([
            r.ue_id.to_string(),
            r.scenario.to_string(),
            x,
            y,
            z,
            opt(r.correlation),
            errors.join(";"),
            opt(r.containment),
            r.n_paths.to_string(),
            r.n_skipped.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn parse_report_csv<R: Read>(reader: R) -> Result<Vec<UeRecord>, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_COLUMNS) {
        return Err(ReportError::Malformed {
            line: 1,
            message: format!("expected header {}", REPORT_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| ReportError::Malformed { line, message };
        let num = |s: &str| -> Result<Option<f64>, ReportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(format!("not a number: {s:?}")))
            }
        };
        let int = |s: &str| -> Result<u64, ReportError> {
            s.parse().map_err(|_| bad(format!("not an integer: {s:?}")))
        };
        let scenario: Scenario = rec[1].parse().map_err(bad)?;
        let position = match (num(&rec[2])?, num(&rec[3])?, num(&rec[4])?) {
            (Some(x), Some(y), Some(z)) => Some(Point3::new(x, y, z)),
            (None, None, None) => None,
            _ => return Err(bad("partial position".into())),
        };
        let elevation_errors = if rec[6].is_empty() {
            Vec::new()
        } else {
            rec[6]
                .split(';')
                .map(|s| s.parse().map_err(|_| bad(format!("not a number: {s:?}"))))
                .collect::<Result<_, _>>()?
        };
        out.push(UeRecord {
            ue_id: int(&rec[0])?,
            position,
            scenario,
            correlation: num(&rec[5])?,
            elevation_errors,
            containment: num(&rec[7])?,
            n_paths: int(&rec[8])? as usize,
            n_skipped: int(&rec[9])? as usize,
            error: (!rec[10].is_empty()).then(|| rec[10].to_string()),
        });
    }
    Ok(out)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<UeRecord>, ReportError> {
    let file = std::fs::File::open(path).map_err(|source| ReportError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_report_csv(file)
}

/// Per-UE value plotted on the accuracy map.
pub fn map_value(r: &UeRecord) -> Option<f64> {
    if r.error.is_some() {
        return None;
    }
    match r.scenario {
        Scenario::FarFree | Scenario::NearFree => r.correlation,
        Scenario::MultipathFar => mean_abs_degrees(&r.elevation_errors),
        Scenario::MultipathNear => r.containment,
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, ReportError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|source| ReportError::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), ReportError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| ReportError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_summary_json(report: &ScenarioReport, path: &Path) -> Result<(), ReportError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &report.summary())?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|source| ReportError::Write {
            path: path.to_path_buf(),
            source,
        })
}

/// Write all report files into `dir`, creating it if needed.
pub fn emit_report(report: &ScenarioReport, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let csv_path = dir.join("report.csv");
    write_report_csv(&report.records, create(&csv_path)?)?;
    write_summary_json(report, &dir.join("summary.json"))?;

    write_rows(
        &dir.join("accuracy_map.csv"),
        &["x", "y", "value"],
        report.records.iter().filter_map(|r| {
            let p = r.position?;
            let v = map_value(r)?;
            Some(vec![fmt_f64(p.x), fmt_f64(p.y), fmt_f64(v)])
        }),
    )?;
    write_rows(
        &dir.join("curve.csv"),
        &["dx", "F"],
        report.records.iter().filter_map(|r| {
            let p = r.position?;
            let f = r.correlation?;
            Some(vec![fmt_f64(p.x.hypot(p.y)), fmt_f64(f)])
        }),
    )
}

/// `dx,f_far,f_near` rows, one per UE.
pub fn write_comparison(rows: &[MethodComparison], path: &Path) -> Result<(), ReportError> {
    write_rows(
        path,
        &["dx", "f_far", "f_near"],
        rows.iter()
            .map(|c| vec![fmt_f64(c.dx), opt(c.f_far), opt(c.f_near)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<UeRecord> {
        vec![
            UeRecord {
                ue_id: 0,
                position: Some(Point3::new(2.5, -25.0, 0.0)),
                scenario: Scenario::MultipathFar,
                correlation: Some(0.999_999_999_123_456_7),
                elevation_errors: vec![1e-5, 1.0 / 3.0, 0.0],
                containment: None,
                n_paths: 3,
                n_skipped: 1,
                error: None,
            },
            UeRecord::failed(1, None, Scenario::MultipathFar, "bad, \"quoted\"\nthing".into()),
            UeRecord {
                ue_id: 2,
                position: Some(Point3::new(0.1 + 0.2, 1e-300, -0.0)),
                scenario: Scenario::MultipathFar,
                correlation: None,
                elevation_errors: vec![],
                containment: Some(0.75),
                n_paths: 4,
                n_skipped: 0,
                error: None,
            },
        ]
    }

    #[test]
    fn round_trip_is_identical() {
        let records = sample();
        let mut buf = Vec::new();
        write_report_csv(&records, &mut buf).unwrap();
        assert_eq!(parse_report_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_report_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), REPORT_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_report_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn emit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let rep = ScenarioReport::new(Scenario::MultipathFar, sample());
        emit_report(&rep, dir.path()).unwrap();
        for f in ["report.csv", "summary.json", "accuracy_map.csv", "curve.csv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let map = std::fs::read_to_string(dir.path().join("accuracy_map.csv")).unwrap();
        assert_eq!(map.lines().count(), 2);
        let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        assert_eq!(curve.lines().count(), 2);
        let back = read_report_csv(&dir.path().join("report.csv")).unwrap();
        assert_eq!(back, rep.records);
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let rep = ScenarioReport::new(Scenario::NearFree, vec![]);
        assert!(matches!(
            emit_report(&rep, &blocker.join("sub")),
            Err(ReportError::Write { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
        }

        prop_compose! {
            fn record()(
                ue_id in any::<u64>(),
                pos in prop::option::of((finite(), finite(), finite())),
                correlation in prop::option::of(0.0..=1.0f64),
                elevation_errors in prop::collection::vec(finite(), 0..5),
                containment in prop::option::of(0.0..=1.0f64),
                n_paths in 0usize..30,
                n_skipped in 0usize..30,
                error in prop::option::of("[a-z ,\"]{1,12}"),
            ) -> UeRecord {
                UeRecord {
                    ue_id,
                    position: pos.map(|(x, y, z)| Point3::new(x, y, z)),
                    scenario: Scenario::MultipathFar,
                    correlation,
                    elevation_errors,
                    containment,
                    n_paths,
                    n_skipped,
                    error,
                }
            }
        }

        proptest! {
            #[test]
            fn report_round_trip_is_lossless(records in prop::collection::vec(record(), 0..10)) {
                let mut buf = Vec::new();
                write_report_csv(&records, &mut buf).unwrap();
                let back = parse_report_csv(buf.as_slice()).unwrap();
                prop_assert_eq!(back.len(), records.len());
                for (a, b) in back.iter().zip(&records) {
                    prop_assert_eq!(a, b);
                    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                    prop_assert_eq!(bits(&a.elevation_errors), bits(&b.elevation_errors));
                }
            }
        }
    }
}
