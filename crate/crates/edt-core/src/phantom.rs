//! Gaussian-blob perturbations, incident plane waves and the scattering
//! potentials in space and in the Fourier domain.

use alloc::vec::Vec;

use crate::elastic::{Background, LateralFrequency, Wave};
use crate::error::{invalid, Result};
use crate::linalg::{dot3, mat_t_vec, norm3, re, sub3, CVec3, Mat3, Vec3, C64, I};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianBlob {
    pub center: Vec3,
    pub sigma: f64,
    pub amp_mu: f64,
    pub amp_lambda: f64,
    pub amp_rho: f64,
}

impl GaussianBlob {
    pub fn profile(&self, x: Vec3) -> f64 {
        let d = sub3(x, self.center);
        libm::exp(-dot3(d, d) / (2.0 * self.sigma * self.sigma))
    }

    /// ∇ of the unit-amplitude profile.
    pub fn profile_gradient(&self, x: Vec3) -> Vec3 {
        let d = sub3(x, self.center);
        let g = -self.profile(x) / (self.sigma * self.sigma);
        [g * d[0], g * d[1], g * d[2]]
    }

    /// Unitary 3D transform of the unit profile at complex y.
    pub fn profile_ft(&self, y: &CVec3) -> C64 {
        let s3 = self.sigma * self.sigma * self.sigma;
        let yy = y.dot(y);
        let yc = y.dot(&CVec3::from_real(self.center));
        (yy * (-0.5 * self.sigma * self.sigma) - I * yc).exp() * s3
    }
}

/// Pointwise perturbation values.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Perturbation {
    pub dmu: f64,
    pub dlambda: f64,
    pub drho: f64,
    pub grad_dmu: Vec3,
    pub grad_dlambda: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phantom {
    pub blobs: Vec<GaussianBlob>,
    pub r_support: f64,
}

impl Phantom {
    pub fn new(blobs: Vec<GaussianBlob>, r_support: f64) -> Result<Self> {
        if !(r_support > 0.0) {
            return Err(invalid("r_support must be positive"));
        }
        for b in &blobs {
            if !(b.sigma > 0.0) {
                return Err(invalid("blob sigma must be positive"));
            }
            if norm3(b.center) + 4.0 * b.sigma > r_support * (1.0 + 1e-12) {
                return Err(invalid("blob 4-sigma ball must lie inside the support ball"));
            }
        }
        Ok(Phantom { blobs, r_support })
    }

    pub fn empty(r_support: f64) -> Self {
        Phantom { blobs: Vec::new(), r_support }
    }

    pub fn eval(&self, x: Vec3) -> Perturbation {
        let mut p = Perturbation::default();
        for b in &self.blobs {
            let v = b.profile(x);
            let g = b.profile_gradient(x);
            p.dmu += b.amp_mu * v;
            p.dlambda += b.amp_lambda * v;
            p.drho += b.amp_rho * v;
            for k in 0..3 {
                p.grad_dmu[k] += b.amp_mu * g[k];
                p.grad_dlambda[k] += b.amp_lambda * g[k];
            }
        }
        p
    }

    /// The phantom x ↦ δ(R x), whose spectrum at h is the original one at R h.
    pub fn rotated(&self, r: &Mat3) -> Phantom {
        let blobs = self
            .blobs
            .iter()
            .map(|b| GaussianBlob { center: mat_t_vec(r, b.center), ..*b })
            .collect();
        Phantom { blobs, r_support: self.r_support }
    }

    pub fn translated(&self, a: Vec3) -> Phantom {
        let blobs = self
            .blobs
            .iter()
            .map(|b| GaussianBlob { center: crate::linalg::add3(b.center, a), ..*b })
            .collect();
        Phantom { blobs, r_support: self.r_support }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncidentWave {
    pub mode: Wave,
    pub amplitude: Vec3,
}

impl IncidentWave {
    pub fn new(mode: Wave, amplitude: Vec3) -> Result<Self> {
        match mode {
            Wave::S => {
                if amplitude[2] != 0.0 {
                    return Err(invalid("S-wave amplitude must be orthogonal to e3"));
                }
                if amplitude[0] == 0.0 && amplitude[1] == 0.0 {
                    return Err(invalid("S-wave amplitude must be nonzero"));
                }
            }
            Wave::P => {
                if amplitude[0] != 0.0 || amplitude[1] != 0.0 {
                    return Err(invalid("P-wave amplitude must be parallel to e3"));
                }
                if amplitude[2] == 0.0 {
                    return Err(invalid("P-wave amplitude must be nonzero"));
                }
            }
        }
        if !amplitude.iter().all(|a| a.is_finite()) {
            return Err(invalid("wave amplitude must be finite"));
        }
        Ok(IncidentWave { mode, amplitude })
    }

    pub fn s(a1: f64, a2: f64) -> Result<Self> {
        Self::new(Wave::S, [a1, a2, 0.0])
    }

    pub fn p(a3: f64) -> Result<Self> {
        Self::new(Wave::P, [0.0, 0.0, a3])
    }

    pub fn amp(&self) -> CVec3 {
        CVec3::from_real(self.amplitude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ParameterSpectra {
    pub dmu_hat: C64,
    pub dlambda_hat: C64,
    pub drho_hat: C64,
}

impl ParameterSpectra {
    pub fn new(dmu_hat: C64, dlambda_hat: C64, drho_hat: C64) -> Self {
        ParameterSpectra { dmu_hat, dlambda_hat, drho_hat }
    }

    pub fn as_array(&self) -> [C64; 3] {
        [self.dmu_hat, self.dlambda_hat, self.drho_hat]
    }
}

pub fn phantom_ft(phantom: &Phantom, y: &CVec3) -> ParameterSpectra {
    let mut s = ParameterSpectra::default();
    for b in &phantom.blobs {
        let f = b.profile_ft(y);
        s.dmu_hat += f * b.amp_mu;
        s.dlambda_hat += f * b.amp_lambda;
        s.drho_hat += f * b.amp_rho;
    }
    s
}

pub fn phantom_ft_real(phantom: &Phantom, y: Vec3) -> ParameterSpectra {
    phantom_ft(phantom, &CVec3::from_real(y))
}

/// f_s or f_p at x, selected by the wave's mode.
pub fn scattering_potential_spatial(
    phantom: &Phantom,
    wave: &IncidentWave,
    bg: &Background,
    x: Vec3,
) -> CVec3 {
    potential_from_perturbation(&phantom.eval(x), wave, bg)
}

pub fn potential_from_perturbation(p: &Perturbation, wave: &IncidentWave, bg: &Background) -> CVec3 {
    let w2 = bg.omega * bg.omega;
    let a = wave.amplitude;
    match wave.mode {
        Wave::S => {
            let k = bg.ks;
            let g = p.grad_dmu;
            // ∇·σ_s with σ_s = δμ (a⊗e3 + e3⊗a), a3 = 0
            let div = [g[2] * a[0], g[2] * a[1], g[0] * a[0] + g[1] * a[1]];
            let scal = k * k * p.dmu - w2 * p.drho;
            CVec3::new(
                C64::new(scal * a[0], -k * div[0]),
                C64::new(scal * a[1], -k * div[1]),
                C64::new(scal * a[2], -k * div[2]),
            )
        }
        Wave::P => {
            let k = bg.kp;
            let a3 = a[2];
            let gl = p.grad_dlambda;
            let gm = p.grad_dmu;
            let div = [gl[0] * a3, gl[1] * a3, (gl[2] + 2.0 * gm[2]) * a3];
            let scal = (k * k * (p.dlambda + 2.0 * p.dmu) - w2 * p.drho) * a3;
            CVec3::new(
                C64::new(0.0, -k * div[0]),
                C64::new(0.0, -k * div[1]),
                C64::new(scal, -k * div[2]),
            )
        }
    }
}

/// Fourier transform of f_s or f_p at (xi, zeta) given the parameter spectra
/// at that point. Derivatives map to i·y under the e^{−i y·x} convention.
pub fn potential_ft_from_spectra(
    spec: &ParameterSpectra,
    wave: &IncidentWave,
    bg: &Background,
    xi: LateralFrequency,
    zeta: C64,
) -> CVec3 {
    let w2 = bg.omega * bg.omega;
    let a = wave.amp();
    match wave.mode {
        Wave::S => {
            let k = bg.ks;
            let cfac = (zeta * k + k * k) * spec.dmu_hat - spec.drho_hat * w2;
            let xa = xi.xi1 * wave.amplitude[0] + xi.xi2 * wave.amplitude[1];
            a.scale(cfac) + CVec3::e3().scale(spec.dmu_hat * (k * xa))
        }
        Wave::P => {
            let k = bg.kp;
            let a3 = wave.amplitude[2];
            let b = (zeta * k + k * k) * (spec.dlambda_hat + spec.dmu_hat * 2.0) - spec.drho_hat * w2;
            let lat = spec.dlambda_hat * (k * a3);
            CVec3::new(lat * xi.xi1, lat * xi.xi2, b * a3)
        }
    }
}

pub fn scattering_potential_ft(
    phantom: &Phantom,
    wave: &IncidentWave,
    bg: &Background,
    xi: LateralFrequency,
    zeta: C64,
) -> CVec3 {
    let y = CVec3::new(re(xi.xi1), re(xi.xi2), zeta);
    potential_ft_from_spectra(&phantom_ft(phantom, &y), wave, bg, xi, zeta)
}
