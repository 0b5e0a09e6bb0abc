//! Per-path MPC tables exchanged with ray tracers.
//!
//! Header (order free, names fixed):
//!
//! ```text
//! ue_id,panel_id,path_id,gain_real,gain_imag,elev_rad,azim_rad,ix,iy,iz[,ue_x,ue_y,ue_z]
//! ```
//!
//! `ix,iy,iz` is the interaction point in meters, left empty for LoS rows.
//! The optional `ue_*` columns carry the UE position. Elevations lie in
//! `[-π/2, π/2]`, azimuths in `[-π, 2π]`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use panelinfer::Point3;
use thiserror::Error;

pub const REQUIRED_COLUMNS: [&str; 10] = [
    "ue_id",
    "panel_id",
    "path_id",
    "gain_real",
    "gain_imag",
    "elev_rad",
    "azim_rad",
    "ix",
    "iy",
    "iz",
];
pub const UE_COLUMNS: [&str; 3] = ["ue_x", "ue_y", "ue_z"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {column} is not finite")]
    NonFinite { line: u64, column: String },
    #[error("line {line}: {column} = {value} out of range")]
    OutOfRange { line: u64, column: String, value: String },
    #[error("line {line}: duplicate key (ue_id {ue_id}, panel_id {panel_id}, path_id {path_id})")]
    DuplicateKey {
        line: u64,
        ue_id: u64,
        panel_id: u8,
        path_id: u64,
    },
}

impl DatasetError {
    /// Line of the offending row, when the error is tied to one.
    pub fn line(&self) -> Option<u64> {
        match self {
            DatasetError::Malformed { line, .. }
            | DatasetError::NonFinite { line, .. }
            | DatasetError::OutOfRange { line, .. }
            | DatasetError::DuplicateKey { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcRow {
    pub ue_id: u64,
    pub panel_id: u8,
    pub path_id: u64,
    pub gain: Complex64,
    pub elev: f64,
    pub azim: f64,
    /// Interaction point; `None` for LoS.
    pub point: Option<Point3>,
    pub ue_position: Option<Point3>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpcDataset {
    pub rows: Vec<MpcRow>,
}

/// Rows of one UE split by panel, each in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UeRows {
    pub panel1: Vec<MpcRow>,
    pub panel2: Vec<MpcRow>,
}

impl UeRows {
    pub fn ue_position(&self) -> Option<Point3> {
        self.panel1
            .iter()
            .chain(&self.panel2)
            .find_map(|r| r.ue_position)
    }
}

impl MpcDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn by_ue(&self) -> BTreeMap<u64, UeRows> {
        let mut out: BTreeMap<u64, UeRows> = BTreeMap::new();
        for r in &self.rows {
            let e = out.entry(r.ue_id).or_default();
            if r.panel_id == 1 {
                e.panel1.push(r.clone());
            } else {
                e.panel2.push(r.clone());
            }
        }
        out
    }

    pub fn ue_count(&self) -> usize {
        self.by_ue().len()
    }
}

pub fn ingest_mpc_csv(path: &Path) -> Result<MpcDataset, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mpc_csv(file)
}

pub fn parse_mpc_csv<R: Read>(reader: R) -> Result<MpcDataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<String> = REQUIRED_COLUMNS
        .iter()
        .filter(|c| !index.contains_key(*c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(DatasetError::MissingColumns(missing));
    }
    let col = |name: &str| index[name];
    let ue_cols = UE_COLUMNS
        .iter()
        .all(|c| index.contains_key(c))
        .then(|| UE_COLUMNS.map(|c| index[c]));

    let mut rows = Vec::new();
    let mut seen: HashSet<(u64, u8, u64)> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => DatasetError::Malformed {
                line: p.line(),
                message: e.to_string(),
            },
            None => DatasetError::Csv(e),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |name: &str| rec.get(col(name)).unwrap_or("");

        let ue_id = parse_int(line, "ue_id", field("ue_id"))?;
        let panel_raw = parse_int(line, "panel_id", field("panel_id"))?;
        let panel_id = match panel_raw {
            1 => 1u8,
            2 => 2u8,
            v => {
                return Err(DatasetError::OutOfRange {
                    line,
                    column: "panel_id".into(),
                    value: v.to_string(),
                })
            }
        };
        let path_id = parse_int(line, "path_id", field("path_id"))?;
        let re = parse_finite(line, "gain_real", field("gain_real"))?;
        let im = parse_finite(line, "gain_imag", field("gain_imag"))?;
        let elev = parse_finite(line, "elev_rad", field("elev_rad"))?;
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&elev) {
            return Err(DatasetError::OutOfRange {
                line,
                column: "elev_rad".into(),
                value: field("elev_rad").to_string(),
            });
        }
        let azim = parse_finite(line, "azim_rad", field("azim_rad"))?;
        if !(-PI..=2.0 * PI).contains(&azim) {
            return Err(DatasetError::OutOfRange {
                line,
                column: "azim_rad".into(),
                value: field("azim_rad").to_string(),
            });
        }
        let point = parse_point(line, ["ix", "iy", "iz"], [field("ix"), field("iy"), field("iz")])?;
        let ue_position = match ue_cols {
            Some(ix) => parse_point(
                line,
                UE_COLUMNS,
                ix.map(|i| rec.get(i).unwrap_or("")),
            )?,
            None => None,
        };

        if !seen.insert((ue_id, panel_id, path_id)) {
            return Err(DatasetError::DuplicateKey {
                line,
                ue_id,
                panel_id,
                path_id,
            });
        }
        rows.push(MpcRow {
            ue_id,
            panel_id,
            path_id,
            gain: Complex64::new(re, im),
            elev,
            azim,
            point,
            ue_position,
        });
    }
    Ok(MpcDataset { rows })
}

fn parse_int(line: u64, column: &str, s: &str) -> Result<u64, DatasetError> {
    s.parse().map_err(|_| DatasetError::Malformed {
        line,
        message: format!("{column}: expected a non-negative integer, got {s:?}"),
    })
}

fn parse_finite(line: u64, column: &str, s: &str) -> Result<f64, DatasetError> {
    let v: f64 = s.parse().map_err(|_| DatasetError::Malformed {
        line,
        message: format!("{column}: expected a number, got {s:?}"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DatasetError::NonFinite {
            line,
            column: column.into(),
        })
    }
}

fn parse_point(line: u64, names: [&str; 3], cells: [&str; 3]) -> Result<Option<Point3>, DatasetError> {
    let empty = cells.iter().filter(|c| c.is_empty()).count();
    match empty {
        3 => Ok(None),
        0 => Ok(Some(Point3::new(
            parse_finite(line, names[0], cells[0])?,
            parse_finite(line, names[1], cells[1])?,
            parse_finite(line, names[2], cells[2])?,
        ))),
        _ => Err(DatasetError::Malformed {
            line,
            message: format!("{}/{}/{} must be all set or all empty", names[0], names[1], names[2]),
        }),
    }
}

/// Full-precision text for a double (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_mpc_csv<W: Write>(ds: &MpcDataset, writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let with_ue = ds.rows.iter().any(|r| r.ue_position.is_some());
    let mut header: Vec<&str> = REQUIRED_COLUMNS.to_vec();
    if with_ue {
        header.extend(UE_COLUMNS);
    }
    w.write_record(&header)?;
    let opt = |p: Option<Point3>| match p {
        Some(p) => [fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z)],
        None => [String::new(), String::new(), String::new()],
    };
    for r in &ds.rows {
        let mut rec = vec![
            r.ue_id.to_string(),
            r.panel_id.to_string(),
            r.path_id.to_string(),
            fmt_f64(r.gain.re),
            fmt_f64(r.gain.im),
            fmt_f64(r.elev),
            fmt_f64(r.azim),
        ];
        rec.extend(opt(r.point));
        if with_ue {
            rec.extend(opt(r.ue_position));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| DatasetError::Csv(e.into()))?;
    Ok(())
}

pub fn save_mpc_csv(ds: &MpcDataset, path: &Path) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_mpc_csv(ds, std::io::BufWriter::new(file))
}
