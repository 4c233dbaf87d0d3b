//! Homogeneous background, axial wavenumbers, propagation vectors and the
//! elastic Green tensor (spectral and spatial).

use core::f64::consts::PI;

use crate::error::{invalid, EdtError, Result};
use crate::linalg::{re, CMat3, CVec3, Vec3, C64, I};

/// Relative half-width of the excluded band around |xi| = k.
pub const DEFAULT_RING_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wave {
    S,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Background {
    pub rho0: f64,
    pub mu0: f64,
    pub lambda0: f64,
    pub omega: f64,
    pub ks: f64,
    pub kp: f64,
}

pub fn make_background(rho0: f64, mu0: f64, lambda0: f64, omega: f64) -> Result<Background> {
    Background::new(rho0, mu0, lambda0, omega)
}

impl Background {
    pub fn new(rho0: f64, mu0: f64, lambda0: f64, omega: f64) -> Result<Self> {
        if !(rho0.is_finite() && mu0.is_finite() && lambda0.is_finite() && omega.is_finite()) {
            return Err(invalid("background parameters must be finite"));
        }
        if rho0 <= 0.0 {
            return Err(invalid("rho0 must be positive"));
        }
        if mu0 <= 0.0 {
            return Err(invalid("mu0 must be positive"));
        }
        if lambda0 + 2.0 * mu0 <= 0.0 {
            return Err(invalid("lambda0 + 2*mu0 must be positive"));
        }
        if omega <= 0.0 {
            return Err(invalid("omega must be positive"));
        }
        let w2r = omega * omega * rho0;
        Ok(Background {
            rho0,
            mu0,
            lambda0,
            omega,
            ks: libm::sqrt(w2r / mu0),
            kp: libm::sqrt(w2r / (lambda0 + 2.0 * mu0)),
        })
    }

    /// Same material at another angular frequency.
    pub fn at_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.rho0, self.mu0, self.lambda0, omega)
    }

    pub fn k(&self, w: Wave) -> f64 {
        match w {
            Wave::S => self.ks,
            Wave::P => self.kp,
        }
    }

    /// mu0·ks² = (lambda0 + 2 mu0)·kp² = omega²·rho0.
    pub fn stiffness_scale(&self) -> f64 {
        self.omega * self.omega * self.rho0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateralFrequency {
    pub xi1: f64,
    pub xi2: f64,
}

impl LateralFrequency {
    pub fn new(xi1: f64, xi2: f64) -> Self {
        LateralFrequency { xi1, xi2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.xi1 * self.xi1 + self.xi2 * self.xi2
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// xi' = (xi1, xi2, 0).
    pub fn prime(&self) -> CVec3 {
        CVec3::from_real([self.xi1, self.xi2, 0.0])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Transmission,
    Reflection,
}

impl Side {
    pub fn sign(&self) -> f64 {
        match self {
            Side::Transmission => 1.0,
            Side::Reflection => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Side {
        if s >= 0.0 {
            Side::Transmission
        } else {
            Side::Reflection
        }
    }
}

/// Principal branch: sqrt(k² − |xi|²) on the disc, i·sqrt(|xi|² − k²) outside.
pub fn kappa(xi: LateralFrequency, k: f64) -> C64 {
    let d = k * k - xi.norm_sqr();
    if d >= 0.0 {
        re(libm::sqrt(d))
    } else {
        C64::new(0.0, libm::sqrt(-d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationVectors {
    pub kappa_s: C64,
    pub kappa_p: C64,
    pub qs: CVec3,
    pub qp: CVec3,
}

/// q_α = i·xi' + i·κ_α·sign(x3)·e3: the gradient symbol of the outgoing
/// wave e^{i(xi·x + κ_α|x3|)} under the e^{−i xi·x} partial transform.
pub fn propagation_vector(xi: LateralFrequency, kappa_a: C64, side: Side) -> CVec3 {
    CVec3::new(I * xi.xi1, I * xi.xi2, I * kappa_a * side.sign())
}

pub fn propagation_vectors(xi: LateralFrequency, bg: &Background, side: Side) -> PropagationVectors {
    let kappa_s = kappa(xi, bg.ks);
    let kappa_p = kappa(xi, bg.kp);
    PropagationVectors {
        kappa_s,
        kappa_p,
        qs: propagation_vector(xi, kappa_s, side),
        qp: propagation_vector(xi, kappa_p, side),
    }
}

pub fn ring_check(xi: LateralFrequency, k: f64, guard: f64) -> Result<()> {
    let xi_sq = xi.norm_sqr();
    let k_sq = k * k;
    if (xi_sq - k_sq).abs() < guard * k_sq {
        Err(EdtError::RingProximity { xi_sq, k_sq })
    } else {
        Ok(())
    }
}

pub fn near_ring(xi: LateralFrequency, bg: &Background, guard: f64) -> bool {
    ring_check(xi, bg.ks, guard).is_err() || ring_check(xi, bg.kp, guard).is_err()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenHat {
    pub gs_hat: CMat3,
    pub gp_hat: CMat3,
}

pub fn green_hat(xi: LateralFrequency, bg: &Background, side: Side) -> Result<GreenHat> {
    green_hat_with_guard(xi, bg, side, DEFAULT_RING_GUARD)
}

pub fn green_hat_with_guard(
    xi: LateralFrequency,
    bg: &Background,
    side: Side,
    guard: f64,
) -> Result<GreenHat> {
    ring_check(xi, bg.ks, guard)?;
    ring_check(xi, bg.kp, guard)?;
    Ok(green_hat_from(&propagation_vectors(xi, bg, side), bg))
}

/// Unchecked assembly from precomputed propagation vectors.
pub fn green_hat_from(pv: &PropagationVectors, bg: &Background) -> GreenHat {
    let m = bg.stiffness_scale();
    let ks2 = bg.ks * bg.ks;
    let gs = (CMat3::identity().scale(re(ks2)) + CMat3::outer(&pv.qs, &pv.qs)).scale(I / (pv.kappa_s * m));
    let gp = CMat3::outer(&pv.qp, &pv.qp).scale(-I / (pv.kappa_p * m));
    GreenHat { gs_hat: gs, gp_hat: gp }
}

/// Φ = e^{ikr}/(4πr) and its Hessian ∇∇Φ at separation r ≠ 0.
pub fn helmholtz_hessian(r: Vec3, k: f64) -> (C64, CMat3) {
    let d = crate::linalg::norm3(r);
    let rh = [r[0] / d, r[1] / d, r[2] / d];
    let (s, cs) = libm::sincos(k * d);
    let phi = C64::new(cs, s) / (4.0 * PI * d);
    let a = C64::new(3.0 / (d * d) - k * k, -3.0 * k / d);
    let b = C64::new(-1.0 / (d * d), k / d);
    let mut h = CMat3::zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut v = a * (rh[i] * rh[j]);
            if i == j {
                v += b;
            }
            h.0[i][j] = phi * v;
        }
    }
    (phi, h)
}

/// S and P parts of the spatial Green tensor, 𝒢 = 𝒢_S + 𝒢_P.
pub fn spatial_green_parts(x: Vec3, xsrc: Vec3, bg: &Background) -> Result<(CMat3, CMat3)> {
    let r = crate::linalg::sub3(x, xsrc);
    let d = crate::linalg::norm3(r);
    if !(d > 0.0) {
        return Err(EdtError::CoincidentPoints);
    }
    let m = bg.stiffness_scale();
    let (phi_s, h_s) = helmholtz_hessian(r, bg.ks);
    let (_, h_p) = helmholtz_hessian(r, bg.kp);
    let gs = (CMat3::identity().scale(phi_s * (bg.ks * bg.ks)) + h_s).scale(re(1.0 / m));
    let gp = h_p.scale(re(-1.0 / m));
    Ok((gs, gp))
}

/// Fundamental solution of μΔu + (λ+μ)∇∇·u + ω²ρu = −δ I.
pub fn spatial_green_tensor(x: Vec3, xsrc: Vec3, bg: &Background) -> Result<CMat3> {
    let (gs, gp) = spatial_green_parts(x, xsrc, bg)?;
    Ok(gs + gp)
}
