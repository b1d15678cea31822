//! File formats: one-column CSV datasets, keyed-JSON parameter vectors,
//! JSON block/aggregated summaries, contour CSVs with JSON sidecars, and
//! confidence-region JSON/CSV.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contours::{Contour, ContourKind, Grid};
use crate::error::{Error, Result};
use crate::inference::ConfidenceRegion;
use crate::models::{Dataset, ModelSpec, ParameterVector};
use crate::summaries::{AggregatedSummary, BlockSummary};

/// Write a dataset as one-column CSV with header `y`.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::from("y\n");
    for v in &data.observations {
        out.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a one-column CSV dataset (header `y` optional).
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut obs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("y")) {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            message: format!("line {}: expected a number, got {line:?}", i + 1),
        })?;
        obs.push(v);
    }
    Dataset::new(obs)
}

pub fn write_dataset_json(path: &Path, data: &Dataset) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&data.observations)?)?;
    Ok(())
}

pub fn read_dataset_json(path: &Path) -> Result<Dataset> {
    let obs: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Dataset::new(obs)
}

/// Parameter vector as a JSON object keyed by coordinate name.
pub fn theta_to_json(model: &ModelSpec, theta: &ParameterVector) -> serde_json::Value {
    let names = model.coord_names();
    let mut map = serde_json::Map::new();
    for (name, &v) in names.iter().zip(theta.as_slice()) {
        map.insert(name.to_string(), serde_json::json!(v));
    }
    serde_json::Value::Object(map)
}

pub fn theta_from_json(model: &ModelSpec, value: &serde_json::Value) -> Result<ParameterVector> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("parameter vector must be a JSON object".into()))?;
    let mut values = Vec::with_capacity(model.dim());
    for name in model.coord_names() {
        let v = obj
            .get(*name)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| Error::Config(format!("missing or non-numeric coordinate {name:?}")))?;
        values.push(v);
    }
    Ok(ParameterVector::new(values))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config("information matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// On-disk block summary, with the estimate keyed by coordinate name and
/// the information matrix as row-major nested arrays.
#[derive(Serialize, Deserialize)]
pub struct SummaryDoc {
    pub model: ModelSpec,
    pub n_b: usize,
    pub theta_hat: BTreeMap<String, f64>,
    pub info: Vec<Vec<f64>>,
}

impl SummaryDoc {
    pub fn new(model: &ModelSpec, summary: &BlockSummary) -> Self {
        let theta_hat = model
            .coord_names()
            .iter()
            .zip(summary.theta_hat.as_slice())
            .map(|(n, &v)| (n.to_string(), v))
            .collect();
        SummaryDoc {
            model: model.clone(),
            n_b: summary.n_b,
            theta_hat,
            info: matrix_rows(&summary.info),
        }
    }

    pub fn to_block_summary(&self) -> Result<BlockSummary> {
        let mut values = Vec::with_capacity(self.model.dim());
        for name in self.model.coord_names() {
            let v = self
                .theta_hat
                .get(*name)
                .ok_or_else(|| Error::Config(format!("summary missing coordinate {name:?}")))?;
            values.push(*v);
        }
        Ok(BlockSummary {
            n_b: self.n_b,
            theta_hat: ParameterVector::new(values),
            info: matrix_from_rows(&self.info)?,
        })
    }
}

pub fn write_summary_json(path: &Path, model: &ModelSpec, summary: &BlockSummary) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&SummaryDoc::new(model, summary))?)?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<SummaryDoc> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// On-disk aggregated summary.
#[derive(Serialize, Deserialize)]
pub struct AggregatedDoc {
    pub model: ModelSpec,
    pub blocks: Vec<SummaryDoc>,
    pub theta_check: BTreeMap<String, f64>,
    pub total_info: Vec<Vec<f64>>,
}

impl AggregatedDoc {
    pub fn new(model: &ModelSpec, agg: &AggregatedSummary) -> Self {
        AggregatedDoc {
            model: model.clone(),
            blocks: agg.blocks.iter().map(|b| SummaryDoc::new(model, b)).collect(),
            theta_check: model
                .coord_names()
                .iter()
                .zip(agg.theta_check.as_slice())
                .map(|(n, &v)| (n.to_string(), v))
                .collect(),
            total_info: matrix_rows(&agg.total_info),
        }
    }

    pub fn to_aggregated(&self) -> Result<AggregatedSummary> {
        let blocks: Vec<BlockSummary> =
            self.blocks.iter().map(|b| b.to_block_summary()).collect::<Result<_>>()?;
        crate::summaries::combine(blocks)
    }
}

pub fn write_aggregated_json(path: &Path, model: &ModelSpec, agg: &AggregatedSummary) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&AggregatedDoc::new(model, agg))?)?;
    Ok(())
}

pub fn read_aggregated_json(path: &Path) -> Result<AggregatedDoc> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Contour sidecar: everything needed to re-evaluate a threshold-table
/// contour elsewhere without re-simulation.
#[derive(Serialize, Deserialize)]
pub struct ContourSidecar {
    pub kind: ContourKind,
    pub model: Option<ModelSpec>,
    pub anchor: Option<BTreeMap<String, f64>>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub coord: Option<usize>,
    pub theta_check: Vec<f64>,
    pub total_info: Vec<Vec<f64>>,
    pub quadratic_threshold_table: Option<Vec<f64>>,
    pub exp_n_total: Option<usize>,
    pub exp_weighted_rate: Option<f64>,
}

/// Write `<stem>.csv` (coordinates and values) and `<stem>.json` (sidecar).
pub fn write_contour(stem: &Path, model: &ModelSpec, contour: &Contour, seed: Option<u64>) -> Result<()> {
    let names = model.coord_names();
    let mut csv = String::new();
    match (&contour.grid, contour.coord) {
        (Grid::Scalar(xs), coord) => {
            let name = names[coord.unwrap_or(0)];
            csv.push_str(&format!("{name},value\n"));
            for (x, v) in xs.iter().zip(&contour.values) {
                csv.push_str(&format!("{x},{v}\n"));
            }
        }
        (Grid::Points(pts), _) => {
            csv.push_str(&format!("{},value\n", names.join(",")));
            for (p, v) in pts.iter().zip(&contour.values) {
                let coords: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                csv.push_str(&format!("{},{v}\n", coords.join(",")));
            }
        }
    }
    std::fs::write(stem.with_extension("csv"), csv)?;

    let (theta_check, total_info, exp_parts) = contour.serialization_parts();
    let sidecar = ContourSidecar {
        kind: contour.kind,
        model: Some(model.clone()),
        anchor: contour.anchor.as_ref().map(|a| {
            names.iter().zip(a.as_slice()).map(|(n, &v)| (n.to_string(), v)).collect()
        }),
        m: contour.m,
        seed,
        coord: contour.coord,
        theta_check,
        total_info,
        quadratic_threshold_table: contour.quadratic_threshold_table.clone(),
        exp_n_total: exp_parts.map(|(n, _)| n),
        exp_weighted_rate: exp_parts.map(|(_, w)| w),
    };
    std::fs::write(stem.with_extension("json"), serde_json::to_string(&sidecar)?)?;
    Ok(())
}

/// Rebuild an evaluable contour from its CSV and sidecar.
pub fn read_contour(stem: &Path) -> Result<Contour> {
    let sidecar: ContourSidecar =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
    let csv = std::fs::read_to_string(stem.with_extension("csv"))?;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                path: stem.display().to_string(),
                message: format!("bad number {s:?} on line {}", i + 1),
            })
        };
        let coords: Vec<f64> =
            fields[..fields.len() - 1].iter().map(|s| parse(s)).collect::<Result<_>>()?;
        xs.push(coords);
        values.push(parse(fields[fields.len() - 1])?);
    }
    let grid = if xs.first().map(|c| c.len()) == Some(1) {
        Grid::Scalar(xs.into_iter().map(|c| c[0]).collect())
    } else {
        Grid::Points(xs)
    };
    crate::contours::rebuild_contour(sidecar, grid, values)
}

/// Confidence region rows as JSON: {alpha, coordinate, lower, upper}.
#[derive(Serialize, Deserialize)]
pub struct RegionRow {
    pub alpha: f64,
    pub coordinate: String,
    pub lower: f64,
    pub upper: f64,
}

pub fn region_rows(model: &ModelSpec, region: &ConfidenceRegion) -> Vec<RegionRow> {
    let names = model.coord_names();
    let mut rows = Vec::new();
    for c in &region.coords {
        for &(lo, hi) in &c.intervals {
            rows.push(RegionRow {
                alpha: region.alpha,
                coordinate: names[c.coord].to_string(),
                lower: lo,
                upper: hi,
            });
        }
    }
    rows
}

pub fn write_region_json(path: &Path, model: &ModelSpec, region: &ConfidenceRegion) -> Result<()> {
    let rows = region_rows(model, region);
    std::fs::write(path, serde_json::to_string_pretty(&rows)?)?;
    Ok(())
}

pub fn write_region_csv(path: &Path, model: &ModelSpec, region: &ConfidenceRegion) -> Result<()> {
    let mut out = String::from("alpha,coordinate,lower,upper\n");
    for r in region_rows(model, region) {
        out.push_str(&format!("{},{},{},{}\n", r.alpha, r.coordinate, r.lower, r.upper));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Provenance block for experiment sidecars.
#[derive(Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub master_seed: u64,
    pub git_describe: String,
}

pub fn provenance(config_text: &str, master_seed: u64) -> Provenance {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    let hash = hasher.finalize();
    let git_describe = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into());
    Provenance {
        config_sha256: hex_string(&hash),
        master_seed,
        git_describe,
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

use std::fmt::Write as _;
