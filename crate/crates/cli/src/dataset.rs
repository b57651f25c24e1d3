//! Threshold-scan exchange format.
//!
//! Required columns: `kind,x_value_MHz_or_um,omega_c_sq_MHz2,n_atoms,
//! sigma_x_um,sigma_y_um,delta_c_MHz,amplitude_index`. Optional trailing
//! columns: `center_y_um` (default 0), `e_dw_MHz` (density-wave energy over
//! 2 pi; computed from the Gaussian cloud when absent) and `weight` (default:
//! equal relative errors). `kind` is `detuning` or `position`; `x` is
//! Delta_C/2pi for detuning rows and the cloud x position otherwise.

use crate::output::{num, Table};
use anyhow::{bail, Context, Result};
use cavity_kit::cavity_model::{cloud_energies, CloudParams};
use cavity_kit::fitting::{ScanDataset, ScanKind, ScanPoint};
use cavity_kit::units::{mhz, to_mhz};
use serde::Deserialize;
use std::path::Path;

pub const HEADER: [&str; 11] = [
    "kind",
    "x_value_MHz_or_um",
    "omega_c_sq_MHz2",
    "n_atoms",
    "sigma_x_um",
    "sigma_y_um",
    "delta_c_MHz",
    "amplitude_index",
    "center_y_um",
    "e_dw_MHz",
    "weight",
];

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
struct Row {
    kind: String,
    x_value_MHz_or_um: f64,
    omega_c_sq_MHz2: f64,
    n_atoms: f64,
    sigma_x_um: f64,
    sigma_y_um: f64,
    delta_c_MHz: f64,
    amplitude_index: usize,
    #[serde(default)]
    center_y_um: Option<f64>,
    #[serde(default)]
    e_dw_MHz: Option<f64>,
    #[serde(default)]
    weight: Option<f64>,
}

fn parse_kind(s: &str) -> Result<ScanKind> {
    match s.trim() {
        "detuning" => Ok(ScanKind::DetuningScan),
        "position" => Ok(ScanKind::PositionScan),
        other => bail!("unknown scan kind {other:?} (expected detuning or position)"),
    }
}

/// Rows grouped into datasets by kind, amplitude index and (for position
/// scans) detuning, in order of first appearance.
pub fn read(path: &Path, wavelength: f64) -> Result<Vec<ScanDataset>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening dataset {}", path.display()))?;
    let mut out: Vec<ScanDataset> = Vec::new();
    for (k, rec) in rdr.deserialize::<Row>().enumerate() {
        let r = rec.with_context(|| format!("{}: row {}", path.display(), k + 1))?;
        let kind = parse_kind(&r.kind).with_context(|| format!("{}: row {}", path.display(), k + 1))?;
        let cy = r.center_y_um.unwrap_or(0.0);
        let (x, center) = match kind {
            ScanKind::DetuningScan => (mhz(r.x_value_MHz_or_um), [0.0, cy]),
            ScanKind::PositionScan => (r.x_value_MHz_or_um, [r.x_value_MHz_or_um, cy]),
        };
        let cloud = CloudParams::gaussian(center, r.sigma_x_um, r.sigma_y_um, r.n_atoms);
        let e_dw = match r.e_dw_MHz {
            Some(v) => mhz(v),
            None => cloud_energies(&cloud, wavelength).e_dw,
        };
        let mut p = ScanPoint {
            kind,
            x,
            delta_c: mhz(r.delta_c_MHz),
            omega_c_sq: mhz(1.0).powi(2) * r.omega_c_sq_MHz2,
            n_atoms: r.n_atoms,
            cloud,
            e_dw,
            weight: 1.0,
        };
        p.weight = r.weight.unwrap_or_else(|| p.relative_weight());
        let label = match kind {
            ScanKind::DetuningScan => format!("detuning-{}", r.amplitude_index),
            ScanKind::PositionScan => format!("position-{}-{}MHz", r.amplitude_index, r.delta_c_MHz),
        };
        match out.iter_mut().find(|d| d.label == label) {
            Some(d) => d.rows.push(p),
            None => out.push(ScanDataset { label, rows: vec![p], amplitude_index: r.amplitude_index }),
        }
    }
    if out.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    for d in &out {
        d.validate()?;
    }
    Ok(out)
}

pub fn to_table(datasets: &[ScanDataset]) -> Table {
    let mut t = Table::new(&HEADER);
    for d in datasets {
        for r in &d.rows {
            let x = match r.kind {
                ScanKind::DetuningScan => to_mhz(r.x),
                ScanKind::PositionScan => r.x,
            };
            t.push(vec![
                r.kind.as_str().to_string(),
                num(x),
                num(r.omega_c_sq / mhz(1.0).powi(2)),
                num(r.n_atoms),
                num(r.cloud.sigma_x),
                num(r.cloud.sigma_y),
                num(to_mhz(r.delta_c)),
                d.amplitude_index.to_string(),
                num(r.cloud.center[1]),
                num(to_mhz(r.e_dw)),
                num(r.weight),
            ]);
        }
    }
    t
}
