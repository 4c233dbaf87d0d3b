//! Measurement-plane spectra from the Fourier diffraction theorem, and the
//! direct-space quadrature oracle.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::elastic::{
    green_hat_from, near_ring, propagation_vectors, Background, LateralFrequency, Side, Wave,
    DEFAULT_RING_GUARD,
};
use crate::error::{invalid, EdtError, Result};
use crate::linalg::{gauss_legendre_on, norm3, CVec3, Vec3, C64, I};
use crate::phantom::{potential_from_perturbation, scattering_potential_ft, IncidentWave, Phantom};

/// Uniform lateral-frequency grid; node (i, j) sits at origin + (i·d1, j·d2),
/// stored row-major with i the slow index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiGrid {
    pub n1: usize,
    pub n2: usize,
    pub d1: f64,
    pub d2: f64,
    pub origin1: f64,
    pub origin2: f64,
}

impl XiGrid {
    /// FFT-ordered centred grid: ξ_j = (j − ⌊n/2⌋)·dxi.
    pub fn centered(n: usize, dxi: f64) -> Self {
        let o = -((n / 2) as f64) * dxi;
        XiGrid { n1: n, n2: n, d1: dxi, d2: dxi, origin1: o, origin2: o }
    }

    /// Midpoint nodes of n×n cells covering [−half, half]².
    pub fn midpoint(n: usize, half: f64) -> Self {
        let d = 2.0 * half / n as f64;
        let o = -half + 0.5 * d;
        XiGrid { n1: n, n2: n, d1: d, d2: d, origin1: o, origin2: o }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, idx: usize) -> LateralFrequency {
        let i = idx / self.n2;
        let j = idx % self.n2;
        LateralFrequency::new(self.origin1 + i as f64 * self.d1, self.origin2 + j as f64 * self.d2)
    }

    pub fn cell_area(&self) -> f64 {
        self.d1 * self.d2
    }

    pub fn max_radius(&self) -> f64 {
        let a = self.origin1.abs().max((self.origin1 + (self.n1 as f64 - 1.0) * self.d1).abs());
        let b = self.origin2.abs().max((self.origin2 + (self.n2 as f64 - 1.0) * self.d2).abs());
        libm::sqrt(a * a + b * b)
    }
}

/// Which incident waves illuminate the object.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Excitation {
    pub s: Option<IncidentWave>,
    pub p: Option<IncidentWave>,
}

impl Excitation {
    pub fn single(w: IncidentWave) -> Self {
        match w.mode {
            Wave::S => Excitation { s: Some(w), p: None },
            Wave::P => Excitation { s: None, p: Some(w) },
        }
    }

    pub fn both(s: IncidentWave, p: IncidentWave) -> Result<Self> {
        if s.mode != Wave::S || p.mode != Wave::P {
            return Err(invalid("joint excitation needs one S and one P wave"));
        }
        Ok(Excitation { s: Some(s), p: Some(p) })
    }

    pub fn waves(&self) -> impl Iterator<Item = &IncidentWave> {
        self.s.iter().chain(self.p.iter())
    }

    /// The unique wave when exactly one is present.
    pub fn only(&self) -> Option<IncidentWave> {
        match (self.s, self.p) {
            (Some(w), None) | (None, Some(w)) => Some(w),
            _ => None,
        }
    }
}

/// Object orientation for one acquisition: the object seen is x ↦ δ(R_{θ,n} x).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub axis: Vec3,
    pub theta: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Pose { axis: [1.0, 0.0, 0.0], theta: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlane {
    pub side: Side,
    pub r_m: f64,
    pub xi_grid: XiGrid,
    pub values: Vec<CVec3>,
    /// true = valid node
    pub mask: Vec<bool>,
    pub bg: Background,
    pub excitation: Excitation,
    pub pose: Pose,
}

impl MeasurementPlane {
    pub fn x3(&self) -> f64 {
        self.side.sign() * self.r_m
    }
}

/// Analytic 3D transform of a compactly supported source g.
pub trait SourceSpectrum {
    fn eval(&self, xi: LateralFrequency, zeta: C64) -> CVec3;
    /// Extent of the support along x3.
    fn z_support(&self) -> (f64, f64);
}

/// The Born right-hand side F = f_s e^{i ks x3} + f_p e^{i kp x3}, scaled.
pub struct BornSource<'a> {
    pub phantom: &'a Phantom,
    pub excitation: Excitation,
    pub bg: Background,
    pub scale: f64,
}

impl SourceSpectrum for BornSource<'_> {
    fn eval(&self, xi: LateralFrequency, zeta: C64) -> CVec3 {
        let mut out = CVec3::ZERO;
        for w in self.excitation.waves() {
            let k = self.bg.k(w.mode);
            out += scattering_potential_ft(self.phantom, w, &self.bg, xi, zeta - k);
        }
        out.scale_re(self.scale)
    }

    fn z_support(&self) -> (f64, f64) {
        (-self.phantom.r_support, self.phantom.r_support)
    }
}

/// Spectral form: F₁,₂u(ξ, x3) for the outgoing solution u of
/// μΔu + (λ+μ)∇∇·u + ω²ρu = −g, with the plane outside the support of g.
pub fn forward_general_source(
    src: &dyn SourceSpectrum,
    bg: &Background,
    x3: f64,
    xi: LateralFrequency,
) -> Result<CVec3> {
    let (zmin, zmax) = src.z_support();
    let side = if x3 > zmax {
        Side::Transmission
    } else if x3 < zmin {
        Side::Reflection
    } else {
        return Err(EdtError::PlaneIntersectsSupport { x3, zmin, zmax });
    };
    crate::elastic::ring_check(xi, bg.ks, DEFAULT_RING_GUARD)?;
    crate::elastic::ring_check(xi, bg.kp, DEFAULT_RING_GUARD)?;
    let s = side.sign();
    let pv = propagation_vectors(xi, bg, side);
    let g = green_hat_from(&pv, bg);
    let es = (I * pv.kappa_s * (s * x3)).exp();
    let ep = (I * pv.kappa_p * (s * x3)).exp();
    let us = g.gs_hat.mul_vec(&src.eval(xi, pv.kappa_s * s)).scale(es);
    let up = g.gp_hat.mul_vec(&src.eval(xi, pv.kappa_p * s)).scale(ep);
    Ok((us + up).scale_re(libm::sqrt(PI / 2.0)))
}

/// Scattered-field spectrum at one node. The physical field solves the Born
/// system with right-hand side +F, so the spectral form is applied to g = −F.
pub fn forward_node(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    xi: LateralFrequency,
) -> Result<CVec3> {
    let src = BornSource { phantom, excitation: *excitation, bg: *bg, scale: -1.0 };
    forward_general_source(&src, bg, side.sign() * r_m, xi)
}

fn check_plane(phantom: &Phantom, r_m: f64) -> Result<()> {
    if !(r_m > phantom.r_support) {
        return Err(invalid("r_M must exceed the phantom support radius"));
    }
    Ok(())
}

/// Node kernel shared by the serial and parallel drivers.
pub fn forward_value(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    xi: LateralFrequency,
    guard: f64,
) -> (CVec3, bool) {
    if near_ring(xi, bg, guard.max(DEFAULT_RING_GUARD)) {
        return (CVec3::ZERO, false);
    }
    match forward_node(phantom, excitation, bg, side, r_m, xi) {
        Ok(v) if v.is_finite() => (v, true),
        _ => (CVec3::ZERO, false),
    }
}

/// Assemble a plane from per-node results, validating the preconditions.
pub fn assemble_plane(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
    nodes: Vec<(CVec3, bool)>,
    pose: Pose,
) -> Result<MeasurementPlane> {
    check_plane(phantom, r_m)?;
    if nodes.iter().all(|n| !n.1) {
        return Err(EdtError::AllMasked);
    }
    let (values, mask) = nodes.into_iter().unzip();
    Ok(MeasurementPlane { side, r_m, xi_grid: grid, values, mask, bg: *bg, excitation: *excitation, pose })
}

pub fn forward_full(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
) -> Result<MeasurementPlane> {
    check_plane(phantom, r_m)?;
    if excitation.s.is_none() && excitation.p.is_none() {
        return Err(invalid("at least one incident wave is required"));
    }
    let nodes = (0..grid.len())
        .map(|idx| forward_value(phantom, excitation, bg, side, r_m, grid.node(idx), DEFAULT_RING_GUARD))
        .collect();
    assemble_plane(phantom, excitation, bg, side, r_m, grid, nodes, Pose::default())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// Gauss–Legendre nodes per axis over the support box.
    pub order: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { order: 48 }
    }
}

/// Tensor-product quadrature of u(x) = −∫ 𝒢(x − x′) F(x′) dx′ over the support
/// box, for one or more source sets sharing the nodes.
pub struct OracleQuadrature {
    pub bg: Background,
    pub r_support: f64,
    pub nodes: Vec<Vec3>,
    /// weighted source −F(x′)·w per set and node
    pub sources: Vec<Vec<CVec3>>,
}

impl OracleQuadrature {
    pub fn new(phantom: &Phantom, excitations: &[Excitation], bg: &Background, cfg: OracleConfig) -> Result<Self> {
        if cfg.order < 2 {
            return Err(invalid("oracle quadrature order must be at least 2"));
        }
        let h = phantom.r_support;
        let (x, w) = gauss_legendre_on(cfg.order, -h, h);
        let mut nodes = Vec::new();
        let mut sources: Vec<Vec<CVec3>> = excitations.iter().map(|_| Vec::new()).collect();
        let mut peak: f64 = 0.0;
        let mut raw = Vec::new();
        for i in 0..cfg.order {
            for j in 0..cfg.order {
                for k in 0..cfg.order {
                    let p = [x[i], x[j], x[k]];
                    let wt = w[i] * w[j] * w[k];
                    let pert = phantom.eval(p);
                    let vals: Vec<CVec3> = excitations
                        .iter()
                        .map(|e| {
                            let mut g = CVec3::ZERO;
                            for wave in e.waves() {
                                let kk = bg.k(wave.mode);
                                let (sn, cs) = libm::sincos(kk * p[2]);
                                g += potential_from_perturbation(&pert, wave, bg).scale(C64::new(cs, sn));
                            }
                            g.scale_re(-wt)
                        })
                        .collect();
                    for v in &vals {
                        peak = peak.max(v.norm());
                    }
                    raw.push((p, vals));
                }
            }
        }
        for (p, vals) in raw {
            if vals.iter().any(|v| v.norm() > 1e-15 * peak) {
                nodes.push(p);
                for (s, v) in sources.iter_mut().zip(vals) {
                    s.push(v);
                }
            }
        }
        Ok(OracleQuadrature { bg: *bg, r_support: phantom.r_support, nodes, sources })
    }

    /// Field of every source set at x.
    pub fn field_at(&self, x: Vec3) -> Result<Vec<CVec3>> {
        let d = norm3(x);
        if d <= self.r_support {
            return Err(EdtError::PointInsideSupport(d));
        }
        let bg = &self.bg;
        let inv_m = 1.0 / bg.stiffness_scale();
        let ks = bg.ks;
        let kp = bg.kp;
        let mut out = alloc::vec![CVec3::ZERO; self.sources.len()];
        for (n, xp) in self.nodes.iter().enumerate() {
            let r = [x[0] - xp[0], x[1] - xp[1], x[2] - xp[2]];
            let d = norm3(r);
            let inv = 1.0 / d;
            let rh = [r[0] * inv, r[1] * inv, r[2] * inv];
            let (ss, cs) = libm::sincos(ks * d);
            let (sp, cp) = libm::sincos(kp * d);
            let phi_s = C64::new(cs, ss) * (inv / (4.0 * PI));
            let phi_p = C64::new(cp, sp) * (inv / (4.0 * PI));
            let inv2 = inv * inv;
            // ∇∇Φ = Φ[a r̂⊗r̂ + b I]
            let a_s = C64::new(3.0 * inv2 - ks * ks, -3.0 * ks * inv);
            let a_p = C64::new(3.0 * inv2 - kp * kp, -3.0 * kp * inv);
            let b_s = C64::new(-inv2, ks * inv);
            let b_p = C64::new(-inv2, kp * inv);
            let alpha = (phi_s * (b_s + ks * ks) - phi_p * b_p) * inv_m;
            let beta = (phi_s * a_s - phi_p * a_p) * inv_m;
            for (o, src) in out.iter_mut().zip(&self.sources) {
                let v = &src[n];
                let rv = v.0[0] * rh[0] + v.0[1] * rh[1] + v.0[2] * rh[2];
                let br = beta * rv;
                for k in 0..3 {
                    o.0[k] += alpha * v.0[k] + br * rh[k];
                }
            }
        }
        Ok(out)
    }
}

pub fn oracle_field(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    points: &[Vec3],
    cfg: OracleConfig,
) -> Result<Vec<CVec3>> {
    for p in points {
        let d = norm3(*p);
        if d <= phantom.r_support {
            return Err(EdtError::PointInsideSupport(d));
        }
    }
    let q = OracleQuadrature::new(phantom, &[*excitation], bg, cfg)?;
    points.iter().map(|p| q.field_at(*p).map(|v| v[0])).collect()
}

/// (2π)^{-1}-normalised value of a flat spectrum of an impulse of unit mass.
pub fn impulse_spectrum_level(dx1: f64, dx2: f64) -> f64 {
    dx1 * dx2 / (2.0 * PI)
}
