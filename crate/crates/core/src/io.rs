//! CSV and JSON data files written by sweeps, and their validation.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{FanoParameters, StructuralResiduals};
use crate::error::{Error, Result};
use crate::experiment::{FanoRecord, PointFailure, SweepConfig, SweepRecord};

pub const TOOL: &str = concat!("qbus ", env!("CARGO_PKG_VERSION"));

pub const SWEEP_COLUMNS: [&str; 11] = ["g", "n_max", "Ic_u", "Q1", "n_end", "n_dce", "rate", "T1", "Tc", "T2", "converged"];

pub const FANO_COLUMNS: [&str; 15] = [
    "g", "n_max", "m_xx", "m_xy", "m_yx", "m_yy", "m_zz", "a_z", "m_xz", "m_yz", "m_zx", "m_zy", "a_x", "a_y",
    "converged",
];

/// Provenance written at the top of every data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub command: String,
    pub config: SweepConfig,
    #[serde(default)]
    pub failures: Vec<PointFailure>,
}

impl Metadata {
    pub fn new(command: &str, config: &SweepConfig, failures: &[PointFailure]) -> Self {
        Metadata { tool: TOOL.into(), command: command.into(), config: config.clone(), failures: failures.to_vec() }
    }

    fn header(&self) -> Result<String> {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.tool);
        let _ = writeln!(s, "# command = {}", self.command);
        if let serde_json::Value::Object(map) = serde_json::to_value(&self.config)? {
            for (k, v) in map {
                let _ = writeln!(s, "# {k} = {v}");
            }
        }
        for f in &self.failures {
            let _ = writeln!(s, "# failed g = {:.16e}: {}", f.g, f.message);
        }
        Ok(s)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sweep_csv(meta: &Metadata, records: &[SweepRecord]) -> Result<String> {
    let mut s = meta.header()?;
    s.push_str(&SWEEP_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let fields = [
            num(r.g),
            r.n_max.to_string(),
            opt(r.ic_u),
            opt(r.q1),
            opt(r.n_end),
            opt(r.n_dce),
            opt(r.rate),
            num(r.t1),
            num(r.tc),
            num(r.t2),
            r.converged.to_string(),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    Ok(s)
}

pub fn fano_csv(meta: &Metadata, records: &[FanoRecord]) -> Result<String> {
    let mut s = meta.header()?;
    s.push_str(&FANO_COLUMNS.join(","));
    s.push('\n');
    for r in records {
        let p = &r.parameters;
        let q = &r.residuals;
        let mut fields = vec![num(r.g), r.n_max.to_string()];
        fields.extend(
            [p.m_xx, p.m_xy, p.m_yx, p.m_yy, p.m_zz, p.a_z, q.m_xz, q.m_yz, q.m_zx, q.m_zy, q.a_x, q.a_y]
                .into_iter()
                .map(num),
        );
        fields.push(r.converged.to_string());
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn json_file<T: Serialize>(meta: &Metadata, records: &[T]) -> Result<String> {
    let mut items = vec![serde_json::to_value(meta)?];
    for r in records {
        items.push(serde_json::to_value(r)?);
    }
    let mut s = serde_json::to_string_pretty(&items)?;
    s.push('\n');
    Ok(s)
}

pub fn sweep_json(meta: &Metadata, records: &[SweepRecord]) -> Result<String> {
    json_file(meta, records)
}

pub fn fano_json(meta: &Metadata, records: &[FanoRecord]) -> Result<String> {
    json_file(meta, records)
}

/// Records of a data file, whichever command wrote it.
#[derive(Clone, Debug, PartialEq)]
pub enum DataFile {
    Sweep(Vec<SweepRecord>),
    Fano(Vec<FanoRecord>),
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.parse().map_err(|_| Error::Config(format!("line {line}: cannot read number {field:?}")))
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() { Ok(None) } else { parse_f64(field, line).map(Some) }
}

fn parse_bool(field: &str, line: usize) -> Result<bool> {
    field.parse().map_err(|_| Error::Config(format!("line {line}: cannot read flag {field:?}")))
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field.parse().map_err(|_| Error::Config(format!("line {line}: cannot read integer {field:?}")))
}

pub fn parse_csv(text: &str) -> Result<DataFile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Config("no header row".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols == SWEEP_COLUMNS {
        let mut out = Vec::new();
        for (i, l) in lines {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != SWEEP_COLUMNS.len() {
                return Err(Error::Config(format!("line {n}: expected {} fields, got {}", SWEEP_COLUMNS.len(), f.len())));
            }
            out.push(SweepRecord {
                g: parse_f64(f[0], n)?,
                n_max: parse_usize(f[1], n)?,
                ic_u: parse_opt(f[2], n)?,
                q1: parse_opt(f[3], n)?,
                n_end: parse_opt(f[4], n)?,
                n_dce: parse_opt(f[5], n)?,
                rate: parse_opt(f[6], n)?,
                t1: parse_f64(f[7], n)?,
                tc: parse_f64(f[8], n)?,
                t2: parse_f64(f[9], n)?,
                converged: parse_bool(f[10], n)?,
            });
        }
        Ok(DataFile::Sweep(out))
    } else if cols == FANO_COLUMNS {
        let mut out = Vec::new();
        for (i, l) in lines {
            let n = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != FANO_COLUMNS.len() {
                return Err(Error::Config(format!("line {n}: expected {} fields, got {}", FANO_COLUMNS.len(), f.len())));
            }
            let v: Vec<f64> = f[2..14].iter().map(|x| parse_f64(x, n)).collect::<Result<_>>()?;
            out.push(FanoRecord {
                g: parse_f64(f[0], n)?,
                n_max: parse_usize(f[1], n)?,
                parameters: FanoParameters { m_xx: v[0], m_xy: v[1], m_yx: v[2], m_yy: v[3], m_zz: v[4], a_z: v[5] },
                residuals: StructuralResiduals { m_xz: v[6], m_yz: v[7], m_zx: v[8], m_zy: v[9], a_x: v[10], a_y: v[11] },
                converged: parse_bool(f[14], n)?,
            });
        }
        Ok(DataFile::Fano(out))
    } else {
        Err(Error::Config(format!("unrecognized header row {header:?}")))
    }
}

/// Reads a JSON data file: metadata object first, then records.
pub fn parse_json(text: &str) -> Result<(Metadata, DataFile)> {
    let items: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let (first, rest) = items.split_first().ok_or_else(|| Error::Config("empty JSON data file".into()))?;
    let meta: Metadata = serde_json::from_value(first.clone())?;
    let is_fano = meta.command == "fano" || rest.first().is_some_and(|r| r.get("parameters").is_some());
    let data = if is_fano {
        DataFile::Fano(rest.iter().map(|v| serde_json::from_value(v.clone())).collect::<std::result::Result<_, _>>()?)
    } else {
        DataFile::Sweep(rest.iter().map(|v| serde_json::from_value(v.clone())).collect::<std::result::Result<_, _>>()?)
    };
    Ok((meta, data))
}

/// Parses a data file in either format.
pub fn parse_data(text: &str) -> Result<DataFile> {
    if text.trim_start().starts_with('[') {
        Ok(parse_json(text)?.1)
    } else {
        parse_csv(text)
    }
}

/// Violations of the record invariants, one message per problem.
pub fn validate(data: &DataFile) -> Vec<String> {
    let mut problems = Vec::new();
    let gs: Vec<f64> = match data {
        DataFile::Sweep(rs) => rs.iter().map(|r| r.g).collect(),
        DataFile::Fano(rs) => rs.iter().map(|r| r.g).collect(),
    };
    for w in gs.windows(2) {
        if !(w[1] > w[0]) {
            problems.push(format!("g not ascending at {} -> {}", w[0], w[1]));
        }
    }
    if let DataFile::Sweep(rs) = data {
        for r in rs {
            if r.q1.is_some_and(|q| !(q >= 0.0)) {
                problems.push(format!("g = {}: Q1 negative", r.g));
            }
            for (name, v) in [("n_end", r.n_end), ("n_dce", r.n_dce)] {
                if v.is_some_and(|n| !(n >= -1e-12)) {
                    problems.push(format!("g = {}: {name} negative", r.g));
                }
            }
            if let (Some(rate), Some(ic)) = (r.rate, r.ic_u) {
                let t = r.t1 + r.tc + r.t2;
                if !((rate - ic / t).abs() <= 1e-12) {
                    problems.push(format!("g = {}: rate differs from Ic_u/(T1+Tc+T2)", r.g));
                }
            }
            if r.n_max == 0 {
                problems.push(format!("g = {}: n_max is zero", r.g));
            }
        }
    }
    if let DataFile::Fano(rs) = data {
        for r in rs {
            if r.residuals.as_array().iter().chain([r.parameters.a_z].iter()).any(|v| !v.is_finite()) {
                problems.push(format!("g = {}: non-finite entry", r.g));
            }
        }
    }
    problems
}
