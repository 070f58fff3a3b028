//! Cloud files (ASCII XYZ and ASCII PLY), pose JSON, CSV tables and run
//! manifests.
//!
//! Numbers are written with Rust's shortest round-trip float formatting, so
//! output is locale independent, byte-deterministic and re-reads exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, RigidTransform};
use crate::solver::RegistrationResult;
use crate::synth::SweepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    /// `.ply` files are PLY, everything else XYZ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::Ply,
            _ => CloudFormat::Xyz,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Xyz => "xyz",
            CloudFormat::Ply => "ply",
        }
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("`{field}` is not finite")));
    }
    Ok(v)
}

pub fn read_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let points = match format {
        CloudFormat::Xyz => parse_xyz(&text, path)?,
        CloudFormat::Ply => parse_ply(&text, path)?,
    };
    PointCloud::new(0, points)
}

/// One point per line, exactly three whitespace-separated numbers. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_xyz(text: &str, path: &Path) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_error(
                path,
                idx + 1,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        points.push(Point3::new(
            parse_f64(path, idx + 1, fields[0])?,
            parse_f64(path, idx + 1, fields[1])?,
            parse_f64(path, idx + 1, fields[2])?,
        ));
    }
    Ok(points)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

/// ASCII PLY. Reads the `vertex` element's `x`, `y`, `z` properties and
/// ignores every other property and element.
pub fn parse_ply(text: &str, path: &Path) -> Result<Vec<Point3>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_error(path, 1, "missing `ply` magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    let mut header_done = false;
    for (no, line) in lines.by_ref() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let kind = tok.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(parse_error(path, no, format!("unsupported PLY format `{kind}`")));
                }
                ascii = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| parse_error(path, no, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_error(path, no, "element without valid count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(path, no, "property before any element"))?;
                let name = tok
                    .last()
                    .ok_or_else(|| parse_error(path, no, "property without name"))?;
                el.properties.push(name.to_string());
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some(other) => {
                return Err(parse_error(path, no, format!("unexpected header keyword `{other}`")));
            }
        }
    }
    if !header_done {
        return Err(parse_error(path, 1, "header has no `end_header`"));
    }
    if !ascii {
        return Err(parse_error(path, 1, "header has no `format` line"));
    }

    let mut points = Vec::new();
    let mut last_line = 1;
    for el in &elements {
        let axes = if el.name == "vertex" {
            let find = |axis: &str| {
                el.properties
                    .iter()
                    .position(|p| p == axis)
                    .ok_or_else(|| parse_error(path, 1, format!("vertex element lacks `{axis}`")))
            };
            Some([find("x")?, find("y")?, find("z")?])
        } else {
            None
        };
        for _ in 0..el.count {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_error(path, last_line + 1, format!("truncated `{}` data", el.name)))?;
            last_line = no;
            if let Some([ix, iy, iz]) = axes {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() < el.properties.len() {
                    return Err(parse_error(
                        path,
                        no,
                        format!("expected {} values, found {}", el.properties.len(), fields.len()),
                    ));
                }
                points.push(Point3::new(
                    parse_f64(path, no, fields[ix])?,
                    parse_f64(path, no, fields[iy])?,
                    parse_f64(path, no, fields[iz])?,
                ));
            }
        }
    }
    Ok(points)
}

pub fn format_cloud(cloud: &PointCloud, format: CloudFormat) -> String {
    let mut out = String::with_capacity(cloud.len() * 48 + 128);
    if format == CloudFormat::Ply {
        out.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(out, "element vertex {}", cloud.len());
        out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    }
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

pub fn write_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    fs::write(path, format_cloud(cloud, format)).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Poses as a JSON array, one `{"rotation", "translation"}` object per
/// cloud in input order; rotations are row-major.
pub fn write_poses(poses: &[RigidTransform], path: &Path) -> Result<()> {
    write_json(poses, path)
}

pub fn read_poses(path: &Path) -> Result<Vec<RigidTransform>> {
    read_json(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-iteration objective, one row per iteration.
pub fn format_trace_csv(result: &RegistrationResult) -> String {
    let mut out = String::from("iteration,objective,gmm,local_consistency,objective_before_mstep\n");
    for (q, r) in result.trace.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            q + 1,
            r.after.total,
            r.after.gmm,
            r.after.local_consistency,
            r.before.total
        );
    }
    out
}

/// Sweep summary. Levels without a successful trial leave the RMSE columns
/// empty.
pub fn format_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("level,trials,success_rate,mean_rmse_mm,std_rmse_mm\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.level,
            r.trials,
            r.success_rate,
            opt(r.mean_rmse_mm),
            opt(r.std_rmse_mm)
        );
    }
    out
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub timestamp: String,
    pub seed: u64,
    /// Full configuration echo.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, timestamp: String, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "jprlc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp,
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }
}
