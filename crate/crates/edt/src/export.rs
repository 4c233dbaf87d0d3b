//! CSV outputs: solve diagnostics, coverage point clouds, volume reports and
//! oracle samples.

use std::path::Path;

use edt_core::coverage::VolumeEstimate;
use edt_core::inversion::{KGrid, SolvedKGrid};
use edt_core::linalg::{CVec3, Vec3};
use serde::Serialize;

use crate::edtg::write_atomic;
use crate::error::Result;

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::Error::Format(e.to_string()))?;
    write_atomic(path, &bytes)
}

#[derive(Serialize)]
struct DiagRow {
    i: usize,
    j: usize,
    k: usize,
    y1: f64,
    y2: f64,
    y3: f64,
    rows: usize,
    rank: usize,
    condition: f64,
    residual: f64,
    empty: bool,
    mu_undetermined: bool,
    lambda_undetermined: bool,
    rho_undetermined: bool,
    ill_conditioned: bool,
}

/// One row per voxel that received data.
pub fn write_diagnostics(path: &Path, grid: &KGrid, solved: &SolvedKGrid) -> Result<()> {
    let n = grid.n;
    let rows = solved.voxels.iter().enumerate().filter(|(_, v)| v.rows > 0).map(|(idx, v)| {
        let y = grid.center(idx);
        DiagRow {
            i: idx / (n * n),
            j: (idx / n) % n,
            k: idx % n,
            y1: y[0],
            y2: y[1],
            y3: y[2],
            rows: v.rows,
            rank: v.rank,
            condition: v.condition,
            residual: v.residual,
            empty: v.flags.empty,
            mu_undetermined: v.flags.mu_undetermined,
            lambda_undetermined: v.flags.lambda_undetermined,
            rho_undetermined: v.flags.rho_undetermined,
            ill_conditioned: v.flags.ill_conditioned,
        }
    });
    write_csv(path, rows)
}

#[derive(Serialize)]
struct PointRow {
    y1: f64,
    y2: f64,
    y3: f64,
}

pub fn write_points(path: &Path, pts: &[Vec3]) -> Result<()> {
    write_csv(path, pts.iter().map(|p| PointRow { y1: p[0], y2: p[1], y3: p[2] }))
}

#[derive(Serialize)]
pub struct VolumeRow {
    pub set: String,
    pub samples: u64,
    pub mc_volume: f64,
    pub mc_sigma: f64,
    pub quadrature: Option<f64>,
    pub occupied_voxels: usize,
    pub seed: u64,
}

pub fn write_volume_report(path: &Path, rows: Vec<VolumeRow>) -> Result<()> {
    write_csv(path, rows)
}

pub fn volume_row(set: &str, est: &VolumeEstimate, quadrature: Option<f64>, occupied: usize, seed: u64) -> VolumeRow {
    VolumeRow {
        set: set.into(),
        samples: est.samples,
        mc_volume: est.volume,
        mc_sigma: est.std_error,
        quadrature,
        occupied_voxels: occupied,
        seed,
    }
}

#[derive(Serialize)]
struct FieldRow {
    excitation: String,
    x1: f64,
    x2: f64,
    x3: f64,
    u1_re: f64,
    u1_im: f64,
    u2_re: f64,
    u2_im: f64,
    u3_re: f64,
    u3_im: f64,
}

/// Oracle field samples; `fields[p][e]` is point p under excitation e.
pub fn write_field_points(path: &Path, labels: &[String], points: &[Vec3], fields: &[Vec<CVec3>]) -> Result<()> {
    let mut rows = Vec::new();
    for (x, f) in points.iter().zip(fields) {
        for (label, u) in labels.iter().zip(f) {
            rows.push(FieldRow {
                excitation: label.clone(),
                x1: x[0],
                x2: x[1],
                x3: x[2],
                u1_re: u.0[0].re,
                u1_im: u.0[0].im,
                u2_re: u.0[1].re,
                u2_im: u.0[1].im,
                u3_re: u.0[2].re,
                u3_im: u.0[2].im,
            });
        }
    }
    write_csv(path, rows)
}

/// Points x1,x2,x3 from a CSV with a header row.
pub fn read_points(path: &Path) -> Result<Vec<Vec3>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize::<(f64, f64, f64)>() {
        let (a, b, c) = rec?;
        out.push([a, b, c]);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SliceRow {
    i: usize,
    j: usize,
    r1: f64,
    r2: f64,
    re: f64,
    im: f64,
    abs: f64,
}

/// Central r3 = 0 slice of a cubic volume.
pub fn write_central_slice(path: &Path, values: &[edt_core::linalg::C64], vol: edt_core::inversion::VolumeGrid) -> Result<()> {
    let n = vol.n;
    let k = n / 2;
    let rows = (0..n * n).map(|ij| {
        let (i, j) = (ij / n, ij % n);
        let v = values[(i * n + j) * n + k];
        SliceRow { i, j, r1: vol.coord(i), r2: vol.coord(j), re: v.re, im: v.im, abs: v.norm() }
    });
    write_csv(path, rows)
}
