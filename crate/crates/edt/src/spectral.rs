//! FFT kernels: the (2π)^{-1} partial transform of sampled planes, 3D FFTs,
//! and gridded backprojection onto real-space volumes.

use std::f64::consts::PI;

use edt_core::forward::XiGrid;
use edt_core::inversion::{TraceSample, VolumeGrid};
use edt_core::linalg::{CVec3, C64};
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Boundary-to-peak ratio above which the truncation warning is raised.
pub const BOUNDARY_DECAY: f64 = 1e-3;

/// Spatial samples u(x1, x2, ±r_M) with x_j = (j − ⌊n/2⌋)·dx, row-major in
/// (x1, x2).
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialPlane {
    pub n1: usize,
    pub n2: usize,
    pub dx1: f64,
    pub dx2: f64,
    pub values: Vec<CVec3>,
}

impl SpatialPlane {
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx / self.n2, idx % self.n2);
        (centred(i, self.n1) * self.dx1, centred(j, self.n2) * self.dx2)
    }

    /// max |u| on the outer ring of samples over max |u| everywhere
    pub fn boundary_ratio(&self) -> f64 {
        let mut peak: f64 = 0.0;
        let mut edge: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let (i, j) = (idx / self.n2, idx % self.n2);
            let a = v.norm();
            peak = peak.max(a);
            if i == 0 || j == 0 || i + 1 == self.n1 || j + 1 == self.n2 {
                edge = edge.max(a);
            }
        }
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }
}

fn centred(i: usize, n: usize) -> f64 {
    i as f64 - (n / 2) as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialFt {
    pub grid: XiGrid,
    pub values: Vec<CVec3>,
    pub boundary_ratio: f64,
    /// boundary decay criterion unmet
    pub truncated: bool,
}

/// Forward or inverse FFT of a 2D array along both axes, unnormalised.
fn fft2(data: &mut [C64], n1: usize, n2: usize, dir: FftDirection) {
    let mut planner = FftPlanner::new();
    let f2 = planner.plan_fft(n2, dir);
    let f1 = planner.plan_fft(n1, dir);
    for row in data.chunks_mut(n2) {
        f2.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); n1];
    for j in 0..n2 {
        for i in 0..n1 {
            col[i] = data[i * n2 + j];
        }
        f1.process(&mut col);
        for i in 0..n1 {
            data[i * n2 + j] = col[i];
        }
    }
}

/// Move index i of a centred axis to FFT order and back.
fn ifftshift_idx(i: usize, n: usize) -> usize {
    (i + n - n / 2) % n
}

fn shifted_fft2(src: &[C64], n1: usize, n2: usize, dir: FftDirection) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            buf[ifftshift_idx(i, n1) * n2 + ifftshift_idx(j, n2)] = src[i * n2 + j];
        }
    }
    fft2(&mut buf, n1, n2, dir);
    let mut out = vec![C64::new(0.0, 0.0); n1 * n2];
    for i in 0..n1 {
        for j in 0..n2 {
            out[i * n2 + j] = buf[ifftshift_idx(i, n1) * n2 + ifftshift_idx(j, n2)];
        }
    }
    out
}

/// F₁,₂u(ξ) ≈ Δx1Δx2/(2π)·Σ u(x_j) e^{−iξ·x_j} on ξ_m = (m − ⌊n/2⌋)·2π/(nΔx).
pub fn plane_partial_ft(plane: &SpatialPlane) -> Result<PartialFt> {
    let (n1, n2) = (plane.n1, plane.n2);
    if n1 == 0 || n2 == 0 || plane.values.len() != n1 * n2 {
        return Err(Error::Shape("spatial plane dimensions".into()));
    }
    if !(plane.dx1 > 0.0 && plane.dx2 > 0.0) {
        return Err(Error::Config { field: "dx".into(), msg: "spacing must be positive".into() });
    }
    let scale = plane.dx1 * plane.dx2 / (2.0 * PI);
    let mut values = vec![CVec3::ZERO; n1 * n2];
    for c in 0..3 {
        let comp: Vec<C64> = plane.values.iter().map(|v| v.0[c]).collect();
        let out = shifted_fft2(&comp, n1, n2, FftDirection::Forward);
        for (v, o) in values.iter_mut().zip(out) {
            v.0[c] = o * scale;
        }
    }
    let d1 = 2.0 * PI / (n1 as f64 * plane.dx1);
    let d2 = 2.0 * PI / (n2 as f64 * plane.dx2);
    let grid = XiGrid {
        n1,
        n2,
        d1,
        d2,
        origin1: -((n1 / 2) as f64) * d1,
        origin2: -((n2 / 2) as f64) * d2,
    };
    let boundary_ratio = plane.boundary_ratio();
    Ok(PartialFt { grid, values, boundary_ratio, truncated: boundary_ratio > BOUNDARY_DECAY })
}

/// Inverse of `plane_partial_ft` back to the spatial grid it came from.
pub fn plane_partial_ift(ft: &PartialFt) -> Result<SpatialPlane> {
    let g = ft.grid;
    if ft.values.len() != g.len() {
        return Err(Error::Shape("spectrum dimensions".into()));
    }
    let dx1 = 2.0 * PI / (g.n1 as f64 * g.d1);
    let dx2 = 2.0 * PI / (g.n2 as f64 * g.d2);
    let scale = 2.0 * PI / (dx1 * dx2 * (g.n1 * g.n2) as f64);
    let mut values = vec![CVec3::ZERO; g.len()];
    for c in 0..3 {
        let comp: Vec<C64> = ft.values.iter().map(|v| v.0[c]).collect();
        let out = shifted_fft2(&comp, g.n1, g.n2, FftDirection::Inverse);
        for (v, o) in values.iter_mut().zip(out) {
            v.0[c] = o * scale;
        }
    }
    Ok(SpatialPlane { n1: g.n1, n2: g.n2, dx1, dx2, values })
}

/// In-place unnormalised 3D FFT of an n0×n1×n2 row-major array.
pub fn fft3(data: &mut [C64], dims: [usize; 3], dir: FftDirection) {
    let [n0, n1, n2] = dims;
    assert_eq!(data.len(), n0 * n1 * n2);
    let mut planner = FftPlanner::new();
    let f2 = planner.plan_fft(n2, dir);
    data.par_chunks_mut(n2).for_each(|row| f2.process(row));
    let f1 = planner.plan_fft(n1, dir);
    data.par_chunks_mut(n1 * n2).for_each(|slab| {
        let mut col = vec![C64::new(0.0, 0.0); n1];
        for k in 0..n2 {
            for j in 0..n1 {
                col[j] = slab[j * n2 + k];
            }
            f1.process(&mut col);
            for j in 0..n1 {
                slab[j * n2 + k] = col[j];
            }
        }
    });
    let f0 = planner.plan_fft(n0, dir);
    let stride = n1 * n2;
    // gather pencils along the slow axis in blocks of the fast index
    let pencils: Vec<Vec<C64>> = (0..stride)
        .into_par_iter()
        .map(|p| {
            let mut col: Vec<C64> = (0..n0).map(|i| data[i * stride + p]).collect();
            f0.process(&mut col);
            col
        })
        .collect();
    for (p, col) in pencils.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            data[i * stride + p] = v;
        }
    }
}

/// Apply the centred-index shift to a cubic n³ array (its own inverse for
/// even n).
pub fn shift3(src: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for i in 0..n {
        let a = ifftshift_idx(i, n);
        for j in 0..n {
            let b = ifftshift_idx(j, n);
            for k in 0..n {
                out[(a * n + b) * n + ifftshift_idx(k, n)] = src[(i * n + j) * n + k];
            }
        }
    }
    out
}

/// F(y_j) = (2π)^{-3/2} Σ f(r_m) e^{−i y_j·r_m} dr³ with y_j = (j − n/2)·dy,
/// dy = 2π/(n·dr), on centred cubic grids.
pub fn volume_spectrum(vol: &[C64], grid: VolumeGrid) -> Vec<C64> {
    let n = grid.n;
    let mut buf = shift3(vol, n);
    fft3(&mut buf, [n; 3], FftDirection::Forward);
    let scale = grid.dr.powi(3) * (2.0 * PI).powf(-1.5);
    let mut out = shift3(&buf, n);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Inverse of `volume_spectrum`: f(r_m) = (2π)^{-3/2} Σ F(y_j) e^{i y_j·r_m} dy³.
pub fn volume_from_spectrum(spec: &[C64], grid: VolumeGrid) -> Vec<C64> {
    let n = grid.n;
    let dy = 2.0 * PI / (n as f64 * grid.dr);
    let mut buf = shift3(spec, n);
    fft3(&mut buf, [n; 3], FftDirection::Inverse);
    let scale = dy.powi(3) * (2.0 * PI).powf(-1.5);
    let mut out = shift3(&buf, n);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// How nonuniform samples are spread onto the oversampled FFT grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gridding {
    /// nearest grid node, no correction
    Nearest,
    /// trilinear weights, sinc² deapodisation
    Trilinear,
    /// truncated Gaussian kernel with exact deapodisation
    #[default]
    Gaussian,
}

/// Oversampling factor of the spreading grid.
const OVERSAMPLE: usize = 2;
/// Gaussian half-width in fine-grid cells.
const GAUSS_HALF: i64 = 8;

/// f(r_m) = Σ c_s e^{i y_s·r_m} on r_m = (m − n/2)·dr by spreading onto a
/// 2n-periodic grid, one inverse FFT and deapodisation.
pub fn nonuniform_sum(points: &[([f64; 3], C64)], vol: VolumeGrid, gridding: Gridding) -> Vec<C64> {
    let n = vol.n;
    let m = OVERSAMPLE * n;
    let h = 2.0 * PI / m as f64;
    // Greengard–Lee spreading width for R = 2
    let tau = PI * GAUSS_HALF as f64 / ((n * n) as f64 * (OVERSAMPLE as f64 * (OVERSAMPLE as f64 - 0.5)));
    let mut fine = vec![C64::new(0.0, 0.0); m * m * m];
    let wrap = |k: i64| -> usize { k.rem_euclid(m as i64) as usize };
    let mut w = [[0.0f64; 2 * GAUSS_HALF as usize + 1]; 3];
    let mut base = [0i64; 3];
    for (y, c) in points {
        let x = [y[0] * vol.dr, y[1] * vol.dr, y[2] * vol.dr];
        match gridding {
            Gridding::Nearest => {
                let k: Vec<usize> = x.iter().map(|xd| wrap((xd / h).round() as i64)).collect();
                fine[(k[0] * m + k[1]) * m + k[2]] += *c;
            }
            Gridding::Trilinear => {
                let mut k0 = [0i64; 3];
                let mut f = [0.0; 3];
                for d in 0..3 {
                    let u = x[d] / h;
                    k0[d] = u.floor() as i64;
                    f[d] = u - k0[d] as f64;
                }
                for a in 0..2 {
                    let wa = if a == 0 { 1.0 - f[0] } else { f[0] };
                    let ia = wrap(k0[0] + a);
                    for b in 0..2 {
                        let wb = wa * if b == 0 { 1.0 - f[1] } else { f[1] };
                        let ib = wrap(k0[1] + b);
                        for cc in 0..2 {
                            let wc = wb * if cc == 0 { 1.0 - f[2] } else { f[2] };
                            fine[(ia * m + ib) * m + wrap(k0[2] + cc)] += *c * wc;
                        }
                    }
                }
            }
            Gridding::Gaussian => {
                for d in 0..3 {
                    let k0 = (x[d] / h).round() as i64;
                    base[d] = k0 - GAUSS_HALF;
                    for (l, wl) in w[d].iter_mut().enumerate() {
                        let dist = (base[d] + l as i64) as f64 * h - x[d];
                        *wl = (-dist * dist / (4.0 * tau)).exp();
                    }
                }
                for (a, wa) in w[0].iter().enumerate() {
                    let ia = wrap(base[0] + a as i64);
                    let ca = *c * *wa;
                    for (b, wb) in w[1].iter().enumerate() {
                        let ib = wrap(base[1] + b as i64);
                        let cb = ca * *wb;
                        let row = &mut fine[(ia * m + ib) * m..(ia * m + ib + 1) * m];
                        for (cc, wc) in w[2].iter().enumerate() {
                            row[wrap(base[2] + cc as i64)] += cb * *wc;
                        }
                    }
                }
            }
        }
    }
    fft3(&mut fine, [m; 3], FftDirection::Inverse);
    // correction for offset index q = m_out − n/2
    let corr: Vec<f64> = (0..n)
        .map(|i| {
            let q = i as f64 - (n / 2) as f64;
            match gridding {
                Gridding::Nearest => 1.0,
                Gridding::Trilinear => {
                    let a = PI * q / m as f64;
                    let s = if a == 0.0 { 1.0 } else { a.sin() / a };
                    1.0 / (s * s)
                }
                Gridding::Gaussian => 1.0 / (m as f64 * (tau / PI).sqrt() * (-q * q * tau).exp()),
            }
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); vol.len()];
    let idx = |i: usize| -> usize { wrap(i as i64 - (n / 2) as i64) };
    out.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
        for j in 0..n {
            for k in 0..n {
                slab[j * n + k] = fine[(idx(i) * m + idx(j)) * m + idx(k)] * (corr[i] * corr[j] * corr[k]);
            }
        }
    });
    out
}

/// FFT-path backprojection (2π)^{-3/2} Σ value·weight·e^{i y·r}.
pub fn backproject_fft(samples: &[TraceSample], vol: VolumeGrid, gridding: Gridding) -> Vec<C64> {
    let norm = (2.0 * PI).powf(-1.5);
    let pts: Vec<([f64; 3], C64)> = samples.iter().map(|s| (s.y, s.value * (s.weight * norm))).collect();
    nonuniform_sum(&pts, vol, gridding)
}
