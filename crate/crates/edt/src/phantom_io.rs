//! Phantom files: Gaussian-blob JSON documents and gridded perturbation
//! volumes. Gridded phantoms are second-class: their spectra come from a
//! zero-padded DFT (real frequencies) or a direct sum (complex frequencies).

use std::f64::consts::PI;
use std::path::Path;

use edt_core::elastic::{Background, LateralFrequency};
use edt_core::forward::{Excitation, SourceSpectrum};
use edt_core::linalg::{mat_vec, CVec3, Mat3, Vec3, C64, I};
use edt_core::phantom::{potential_ft_from_spectra, GaussianBlob, ParameterSpectra, Phantom};
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::edtg::{EdtgFile, Kind};
use crate::error::{Error, Result};
use crate::spectral::fft3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobDoc {
    pub center: [f64; 3],
    pub sigma: f64,
    #[serde(default)]
    pub amp_mu: f64,
    #[serde(default)]
    pub amp_lambda: f64,
    #[serde(default)]
    pub amp_rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomDoc {
    pub r_support: f64,
    pub blobs: Vec<BlobDoc>,
}

impl PhantomDoc {
    pub fn build(&self) -> Result<Phantom> {
        let blobs = self
            .blobs
            .iter()
            .map(|b| GaussianBlob {
                center: b.center,
                sigma: b.sigma,
                amp_mu: b.amp_mu,
                amp_lambda: b.amp_lambda,
                amp_rho: b.amp_rho,
            })
            .collect();
        Phantom::new(blobs, self.r_support).map_err(|e| Error::config("phantom", e.to_string()))
    }

    pub fn from_phantom(p: &Phantom) -> PhantomDoc {
        PhantomDoc {
            r_support: p.r_support,
            blobs: p
                .blobs
                .iter()
                .map(|b| BlobDoc {
                    center: b.center,
                    sigma: b.sigma,
                    amp_mu: b.amp_mu,
                    amp_lambda: b.amp_lambda,
                    amp_rho: b.amp_rho,
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<PhantomDoc> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::config("phantom.file", e.to_string()))
    }
}

/// Perturbations (δμ, δλ, δρ) sampled at origin + v·dx, v ∈ [0, n)³.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedPhantom {
    pub n: [usize; 3],
    pub dx: f64,
    pub origin: Vec3,
    /// interleaved (δμ, δλ, δρ) per voxel, row-major
    pub values: Vec<[f64; 3]>,
    pub r_support: f64,
    padded: Vec<[C64; 3]>,
}

impl GriddedPhantom {
    pub fn new(n: [usize; 3], dx: f64, origin: Vec3, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != n[0] * n[1] * n[2] || n.contains(&0) {
            return Err(Error::Shape("gridded phantom dimensions".into()));
        }
        if !(dx > 0.0) {
            return Err(Error::config("phantom.grid_file", "voxel spacing must be positive"));
        }
        let mut r_support: f64 = 0.0;
        for (idx, v) in values.iter().enumerate() {
            if v.iter().any(|a| *a != 0.0) {
                let x = voxel_centre(n, dx, origin, idx);
                r_support = r_support.max((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt());
            }
        }
        r_support += 0.5 * dx * 3f64.sqrt();
        let m = [2 * n[0], 2 * n[1], 2 * n[2]];
        let mut padded = vec![[C64::new(0.0, 0.0); 3]; m[0] * m[1] * m[2]];
        for c in 0..3 {
            let mut buf = vec![C64::new(0.0, 0.0); padded.len()];
            for (idx, v) in values.iter().enumerate() {
                let (i, j, k) = (idx / (n[1] * n[2]), (idx / n[2]) % n[1], idx % n[2]);
                buf[(i * m[1] + j) * m[2] + k] = C64::new(v[c], 0.0);
            }
            fft3(&mut buf, m, FftDirection::Forward);
            for (p, b) in padded.iter_mut().zip(buf) {
                p[c] = b;
            }
        }
        Ok(GriddedPhantom { n, dx, origin, values, r_support, padded })
    }

    pub fn from_edtg(f: &EdtgFile) -> Result<Self> {
        if f.kind != Kind::Volume || f.dims.len() != 3 || f.components() != 3 {
            return Err(Error::config("phantom.grid_file", "expected a rank-3 volume with 3 components"));
        }
        let dx = f.spacing[0];
        if f.spacing.iter().any(|s| (s - dx).abs() > 1e-12 * dx) {
            return Err(Error::config("phantom.grid_file", "voxels must be cubic"));
        }
        let v = f.real_values()?;
        let n = [f.dims[0] as usize, f.dims[1] as usize, f.dims[2] as usize];
        let values = v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        GriddedPhantom::new(n, dx, [f.origin[0], f.origin[1], f.origin[2]], values)
    }

    /// Direct sum (2π)^{-3/2} dx³ Σ f_v e^{−i y·x_v}, exact for the sampled
    /// phantom and valid for complex y.
    pub fn spectra_direct(&self, y: &CVec3) -> ParameterSpectra {
        let mut acc = [C64::new(0.0, 0.0); 3];
        for (idx, v) in self.values.iter().enumerate() {
            if v.iter().all(|a| *a == 0.0) {
                continue;
            }
            let x = voxel_centre(self.n, self.dx, self.origin, idx);
            let ph = (-I * (y.0[0] * x[0] + y.0[1] * x[1] + y.0[2] * x[2])).exp();
            for c in 0..3 {
                acc[c] += ph * v[c];
            }
        }
        let s = self.dx.powi(3) * (2.0 * PI).powf(-1.5);
        ParameterSpectra::new(acc[0] * s, acc[1] * s, acc[2] * s)
    }

    /// Trilinear interpolation of the 2×-padded DFT at real y.
    pub fn spectra_padded(&self, y: Vec3) -> ParameterSpectra {
        let m = [2 * self.n[0], 2 * self.n[1], 2 * self.n[2]];
        let mut base = [0i64; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let u = y[d] * m[d] as f64 * self.dx / (2.0 * PI);
            base[d] = u.floor() as i64;
            frac[d] = u - base[d] as f64;
        }
        let mut acc = [C64::new(0.0, 0.0); 3];
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = 0;
            for d in 0..3 {
                let bit = (corner >> (2 - d)) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                idx = idx * m[d] + (base[d] + bit as i64).rem_euclid(m[d] as i64) as usize;
            }
            for c in 0..3 {
                acc[c] += self.padded[idx][c] * w;
            }
        }
        // the DFT is taken about the first voxel; restore the true origin
        let ph = (-I * (y[0] * self.origin[0] + y[1] * self.origin[1] + y[2] * self.origin[2])).exp();
        let s = ph * (self.dx.powi(3) * (2.0 * PI).powf(-1.5));
        ParameterSpectra::new(acc[0] * s, acc[1] * s, acc[2] * s)
    }

    pub fn spectra(&self, y: &CVec3) -> ParameterSpectra {
        if y.0.iter().all(|v| v.im == 0.0) {
            self.spectra_padded(y.re())
        } else {
            self.spectra_direct(y)
        }
    }
}

fn voxel_centre(n: [usize; 3], dx: f64, origin: Vec3, idx: usize) -> Vec3 {
    let (i, j, k) = (idx / (n[1] * n[2]), (idx / n[2]) % n[1], idx % n[2]);
    [origin[0] + i as f64 * dx, origin[1] + j as f64 * dx, origin[2] + k as f64 * dx]
}

/// Born source −F of a gridded phantom seen in orientation R (object δ(Rx)).
pub struct GriddedBornSource<'a> {
    pub phantom: &'a GriddedPhantom,
    pub excitation: Excitation,
    pub bg: Background,
    pub rot: Mat3,
}

impl SourceSpectrum for GriddedBornSource<'_> {
    fn eval(&self, xi: LateralFrequency, zeta: C64) -> CVec3 {
        let mut out = CVec3::ZERO;
        for w in self.excitation.waves() {
            let z = zeta - self.bg.k(w.mode);
            let h = CVec3::new(C64::new(xi.xi1, 0.0), C64::new(xi.xi2, 0.0), z);
            let r = self.rot;
            let rh = CVec3::new(
                h.0[0] * r[0][0] + h.0[1] * r[0][1] + h.0[2] * r[0][2],
                h.0[0] * r[1][0] + h.0[1] * r[1][1] + h.0[2] * r[1][2],
                h.0[0] * r[2][0] + h.0[1] * r[2][1] + h.0[2] * r[2][2],
            );
            let spec = if rh.0.iter().all(|v| v.im == 0.0) {
                self.phantom.spectra_padded(mat_vec(&r, [xi.xi1, xi.xi2, z.re]))
            } else {
                self.phantom.spectra_direct(&rh)
            };
            out += potential_ft_from_spectra(&spec, w, &self.bg, xi, z);
        }
        out.scale_re(-1.0)
    }

    fn z_support(&self) -> (f64, f64) {
        (-self.phantom.r_support, self.phantom.r_support)
    }
}
