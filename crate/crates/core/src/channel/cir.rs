//! Channel impulse response interchange.
//!
//! One UTF-8 CSV per trajectory step:
//!
//! ```text
//! # carrier_hz=3950000000
//! # step=12
//! # delta_z_m=6.5
//! delay_s,gain_real,gain_imag,azimuth_deg,order,is_los
//! 1.2345e-7,0.00012,-0.0004,12.5,0,true
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a re-import
//! reproduces the path list bit for bit.

use num_complex::Complex64;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::PathComponent;
use crate::error::{Error, Result};

pub const CIR_COLUMNS: [&str; 6] = ["delay_s", "gain_real", "gain_imag", "azimuth_deg", "order", "is_los"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirMetadata {
    pub carrier_hz: f64,
    pub step: usize,
    /// Height offset shared by every path of the link.
    pub delta_z_m: f64,
}

pub fn cir_file_name(step: usize) -> String {
    format!("cir_{step:05}.csv")
}

pub fn export_cir(paths: &[PathComponent], meta: &CirMetadata, out: &mut impl Write) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# carrier_hz={}", meta.carrier_hz);
    let _ = writeln!(text, "# step={}", meta.step);
    let _ = writeln!(text, "# delta_z_m={}", meta.delta_z_m);
    text.push_str(&CIR_COLUMNS.join(","));
    text.push('\n');
    for p in paths {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            p.delay_s, p.gain.re, p.gain.im, p.azimuth_deg, p.order, p.is_los
        );
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Writes `cir_<step>.csv` into `dir` and returns its path.
pub fn write_cir(dir: &Path, paths: &[PathComponent], meta: &CirMetadata) -> Result<std::path::PathBuf> {
    let path = dir.join(cir_file_name(meta.step));
    let mut file = std::fs::File::create(&path)?;
    export_cir(paths, meta, &mut file)?;
    Ok(path)
}

pub fn read_cir(path: &Path) -> Result<(CirMetadata, Vec<PathComponent>)> {
    import_cir(std::fs::File::open(path)?)
}

pub fn import_cir(input: impl Read) -> Result<(CirMetadata, Vec<PathComponent>)> {
    let mut carrier_hz = None;
    let mut step = None;
    let mut delta_z_m = None;
    let mut header_seen = false;
    let mut paths = Vec::new();

    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let (key, value) = meta
                .trim()
                .split_once('=')
                .ok_or_else(|| err(format!("malformed metadata '{line}'")))?;
            let value = value.trim();
            match key.trim() {
                "carrier_hz" => carrier_hz = Some(parse_f64(value).map_err(err)?),
                "step" => step = Some(value.parse::<usize>().map_err(|e| err(e.to_string()))?),
                "delta_z_m" => delta_z_m = Some(parse_f64(value).map_err(err)?),
                other => return Err(err(format!("unknown metadata key '{other}'"))),
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != CIR_COLUMNS {
                return Err(err(format!("expected header '{}'", CIR_COLUMNS.join(","))));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != CIR_COLUMNS.len() {
            return Err(err(format!(
                "expected {} fields, found {}",
                CIR_COLUMNS.len(),
                fields.len()
            )));
        }
        let order = fields[4]
            .parse::<usize>()
            .map_err(|e| err(format!("order: {e}")))?;
        let is_los = fields[5]
            .parse::<bool>()
            .map_err(|e| err(format!("is_los: {e}")))?;
        paths.push(PathComponent {
            delay_s: parse_f64(fields[0]).map_err(err)?,
            gain: Complex64::new(parse_f64(fields[1]).map_err(err)?, parse_f64(fields[2]).map_err(err)?),
            azimuth_deg: parse_f64(fields[3]).map_err(err)?,
            elevation_offset_m: 0.0,
            order,
            is_los,
        });
    }

    let missing = |what: &str| Error::Parse {
        line: 0,
        message: format!("missing {what}"),
    };
    if !header_seen {
        return Err(missing("column header"));
    }
    let meta = CirMetadata {
        carrier_hz: carrier_hz.ok_or_else(|| missing("carrier_hz metadata"))?,
        step: step.ok_or_else(|| missing("step metadata"))?,
        delta_z_m: delta_z_m.unwrap_or(0.0),
    };
    for p in &mut paths {
        p.elevation_offset_m = meta.delta_z_m;
    }
    Ok((meta, paths))
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}
