//! Wave-mode separation of measurement planes into the scattering functions
//! f̂_pp, f̂_ps, f̂_sp, f̂_ss,A and f̂_ss,B on their k-space loci.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::elastic::{kappa, propagation_vectors, Background, LateralFrequency, Side, Wave};
use crate::error::{EdtError, Result};
use crate::forward::{MeasurementPlane, Pose, XiGrid};
use crate::linalg::{CVec3, Vec3, C64, I};
use crate::phantom::IncidentWave;

/// Scattered wave first, incident wave second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    PP,
    PS,
    SP,
    SS,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::PP, Mode::PS, Mode::SP, Mode::SS];

    pub fn scattered(&self) -> Wave {
        match self {
            Mode::PP | Mode::PS => Wave::P,
            Mode::SP | Mode::SS => Wave::S,
        }
    }

    pub fn incident(&self) -> Wave {
        match self {
            Mode::PP | Mode::SP => Wave::P,
            Mode::PS | Mode::SS => Wave::S,
        }
    }

    /// (k_α, k_β) for scattered α and incident β.
    pub fn wavenumbers(&self, bg: &Background) -> (f64, f64) {
        (bg.k(self.scattered()), bg.k(self.incident()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::PP => "PP",
            Mode::PS => "PS",
            Mode::SP => "SP",
            Mode::SS => "SS",
        }
    }
}

/// SS1 is the coefficient of e3×A_s, SS2 the coefficient of (ξ'·A_s)(e3×q_p).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeTag {
    PP,
    PS,
    SP(u8),
    SS1,
    SS2,
}

impl ModeTag {
    pub fn mode(&self) -> Mode {
        match self {
            ModeTag::PP => Mode::PP,
            ModeTag::PS => Mode::PS,
            ModeTag::SP(_) => Mode::SP,
            ModeTag::SS1 | ModeTag::SS2 => Mode::SS,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModeTag::PP => "PP",
            ModeTag::PS => "PS",
            ModeTag::SP(1) => "SP1",
            ModeTag::SP(_) => "SP2",
            ModeTag::SS1 => "SS1",
            ModeTag::SS2 => "SS2",
        }
    }

    pub fn from_label(s: &str) -> Option<ModeTag> {
        Some(match s {
            "PP" => ModeTag::PP,
            "PS" => ModeTag::PS,
            "SP1" => ModeTag::SP(1),
            "SP2" => ModeTag::SP(2),
            "SS1" => ModeTag::SS1,
            "SS2" => ModeTag::SS2,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SepConfig {
    pub tau_den: f64,
}

impl Default for SepConfig {
    fn default() -> Self {
        SepConfig { tau_den: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    pub tag: ModeTag,
    pub side: Side,
    pub r_m: f64,
    pub xi_grid: XiGrid,
    pub values: Vec<C64>,
    pub locus: Vec<Vec3>,
    /// true = valid node
    pub mask: Vec<bool>,
    pub bg: Background,
    pub wave: IncidentWave,
    pub pose: Pose,
}

impl ModeGrid {
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Hemisphere point (ξ, ±κ_α − k_β); None off the propagating disc |ξ| < k_α.
pub fn mode_locus(mode: Mode, xi: LateralFrequency, side: Side, bg: &Background) -> Option<Vec3> {
    let (ka, kb) = mode.wavenumbers(bg);
    if xi.norm_sqr() >= ka * ka {
        return None;
    }
    let k = kappa(xi, ka).re;
    Some([xi.xi1, xi.xi2, side.sign() * k - kb])
}

fn sqrt_2_over_pi() -> f64 {
    libm::sqrt(2.0 / PI)
}

fn require(plane: &MeasurementPlane, want: Wave) -> Result<IncidentWave> {
    match plane.excitation.only() {
        Some(w) if w.mode == want => Ok(w),
        Some(w) => Err(EdtError::WrongExcitation(alloc::format!(
            "mode needs {want:?} excitation, plane has {:?}",
            w.mode
        ))),
        None => Err(EdtError::WrongExcitation(alloc::string::String::from(
            "separation needs a single-wave excitation",
        ))),
    }
}

/// Scattering functions are reported times M·κ_α (M = μ0 ks², α the
/// scattered wave), which removes the 1/κ_α of the spectral Green tensor and
/// keeps them bounded up to the rim of the propagating disc.
pub fn norm_factor(bg: &Background, kappa_alpha: C64) -> C64 {
    kappa_alpha * bg.stiffness_scale()
}

/// Per-node extraction shared by the grid drivers and by synthetic tests.
pub struct NodeContext<'a> {
    pub xi: LateralFrequency,
    pub side: Side,
    pub r_m: f64,
    pub bg: &'a Background,
    pub wave: &'a IncidentWave,
    pub tau: f64,
}

pub fn extract_pp(ctx: &NodeContext, u: &CVec3) -> Option<C64> {
    let bg = ctx.bg;
    mode_locus(Mode::PP, ctx.xi, ctx.side, bg)?;
    let pv = propagation_vectors(ctx.xi, bg, ctx.side);
    let qq = pv.qs.dot(&pv.qp);
    if qq.norm() < ctx.tau * bg.ks * bg.kp {
        return None;
    }
    let a3 = ctx.wave.amplitude[2];
    let ph = (-I * pv.kappa_p * ctx.r_m).exp() * norm_factor(bg, pv.kappa_p);
    Some(ph * pv.qs.dot(u) * sqrt_2_over_pi() / (qq * a3))
}

pub fn extract_ps(ctx: &NodeContext, u: &CVec3) -> Option<C64> {
    let bg = ctx.bg;
    mode_locus(Mode::PS, ctx.xi, ctx.side, bg)?;
    let pv = propagation_vectors(ctx.xi, bg, ctx.side);
    let qq = pv.qs.dot(&pv.qp);
    let a = ctx.wave.amplitude;
    let xa = ctx.xi.xi1 * a[0] + ctx.xi.xi2 * a[1];
    if xa.abs() <= ctx.tau * ctx.xi.norm() * crate::linalg::norm3(a) || qq.norm() < ctx.tau * bg.ks * bg.kp {
        return None;
    }
    let ph = (-I * pv.kappa_p * ctx.r_m).exp() * norm_factor(bg, pv.kappa_p);
    Some(ph * pv.qs.dot(u) * sqrt_2_over_pi() / (qq * xa))
}

pub fn extract_sp(ctx: &NodeContext, u: &CVec3, component: u8) -> Option<C64> {
    let bg = ctx.bg;
    mode_locus(Mode::SP, ctx.xi, ctx.side, bg)?;
    let pv = propagation_vectors(ctx.xi, bg, ctx.side);
    let e3q = CVec3::e3().cross(&pv.qp);
    let idx = if component == 1 { 0 } else { 1 };
    let den = e3q[idx];
    if den.norm() <= ctx.tau * ctx.xi.norm() {
        return None;
    }
    let a3 = ctx.wave.amplitude[2];
    let ph = (-I * pv.kappa_s * ctx.r_m).exp() * norm_factor(bg, pv.kappa_s);
    Some(ph * pv.qp.cross(u)[idx] * sqrt_2_over_pi() / (den * a3))
}

/// Solves W = f_A (e3×A_s) + g (e3×q_p) on the lateral components, with
/// g = f_B (ξ'·A_s). Returns (f_A, f_B), each None where unrecoverable.
pub fn extract_ss(ctx: &NodeContext, u: &CVec3) -> (Option<C64>, Option<C64>) {
    let bg = ctx.bg;
    if mode_locus(Mode::SS, ctx.xi, ctx.side, bg).is_none() {
        return (None, None);
    }
    let pv = propagation_vectors(ctx.xi, bg, ctx.side);
    let ph = (-I * pv.kappa_s * ctx.r_m).exp() * sqrt_2_over_pi() * norm_factor(bg, pv.kappa_s);
    let w = pv.qp.cross(u);
    let (w1, w2) = (w[0] * ph, w[1] * ph);
    let a = ctx.wave.amplitude;
    let (xi1, xi2) = (ctx.xi.xi1, ctx.xi.xi2);
    // columns: e3×A = (−a2, a1), e3×q_p = (−i ξ2, i ξ1)
    let c1 = (C64::new(-a[1], 0.0), C64::new(a[0], 0.0));
    let c2 = (-I * xi2, I * xi1);
    let det = c1.0 * c2.1 - c2.0 * c1.1;
    let row1 = libm::hypot(a[1], xi2);
    let row2 = libm::hypot(a[0], xi1);
    if det.norm() < ctx.tau * row1 * row2 || det.norm() == 0.0 {
        return (None, None);
    }
    let fa = (w1 * c2.1 - c2.0 * w2) / det;
    let g = (c1.0 * w2 - c1.1 * w1) / det;
    let xa = xi1 * a[0] + xi2 * a[1];
    let fb = if xa.abs() <= ctx.tau * ctx.xi.norm() * crate::linalg::norm3(a) {
        None
    } else {
        Some(g / xa)
    };
    (Some(fa), fb)
}

fn build_grid(
    plane: &MeasurementPlane,
    tag: ModeTag,
    wave: IncidentWave,
    f: &dyn Fn(&NodeContext, &CVec3) -> Option<C64>,
    tau: f64,
) -> Result<ModeGrid> {
    let n = plane.xi_grid.len();
    let mut values = Vec::with_capacity(n);
    let mut locus = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);
    for idx in 0..n {
        let xi = plane.xi_grid.node(idx);
        let ctx = NodeContext { xi, side: plane.side, r_m: plane.r_m, bg: &plane.bg, wave: &wave, tau };
        let loc = mode_locus(tag.mode(), xi, plane.side, &plane.bg);
        locus.push(loc.unwrap_or([f64::NAN; 3]));
        let v = if plane.mask[idx] { f(&ctx, &plane.values[idx]) } else { None };
        match v {
            Some(v) if v.re.is_finite() && v.im.is_finite() => {
                values.push(v);
                mask.push(true);
            }
            _ => {
                values.push(C64::new(0.0, 0.0));
                mask.push(false);
            }
        }
    }
    Ok(ModeGrid {
        tag,
        side: plane.side,
        r_m: plane.r_m,
        xi_grid: plane.xi_grid,
        values,
        locus,
        mask,
        bg: plane.bg,
        wave,
        pose: plane.pose,
    })
}

pub fn scatfun_pp(plane: &MeasurementPlane, cfg: SepConfig) -> Result<ModeGrid> {
    let w = require(plane, Wave::P)?;
    build_grid(plane, ModeTag::PP, w, &extract_pp, cfg.tau_den)
}

pub fn scatfun_ps(plane: &MeasurementPlane, cfg: SepConfig) -> Result<ModeGrid> {
    let w = require(plane, Wave::S)?;
    build_grid(plane, ModeTag::PS, w, &extract_ps, cfg.tau_den)
}

pub fn scatfun_sp(plane: &MeasurementPlane, component: u8, cfg: SepConfig) -> Result<ModeGrid> {
    let w = require(plane, Wave::P)?;
    if component != 1 && component != 2 {
        return Err(EdtError::InvalidParameter(alloc::string::String::from(
            "SP component must be 1 or 2",
        )));
    }
    build_grid(plane, ModeTag::SP(component), w, &|c, u| extract_sp(c, u, component), cfg.tau_den)
}

pub fn scatfun_ss(plane: &MeasurementPlane, cfg: SepConfig) -> Result<(ModeGrid, ModeGrid)> {
    let w = require(plane, Wave::S)?;
    let a = build_grid(plane, ModeTag::SS1, w, &|c, u| extract_ss(c, u).0, cfg.tau_den)?;
    let b = build_grid(plane, ModeTag::SS2, w, &|c, u| extract_ss(c, u).1, cfg.tau_den)?;
    Ok((a, b))
}

/// Largest relative disagreement between the two SP components on jointly
/// valid nodes.
pub fn sp_consistency(a: &ModeGrid, b: &ModeGrid) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..a.values.len() {
        if a.mask[k] && b.mask[k] {
            let s = a.values[k].norm().max(b.values[k].norm());
            if s > 0.0 {
                worst = worst.max((a.values[k] - b.values[k]).norm() / s);
            }
        }
    }
    worst
}

/// Every valid mode grid that a single-excitation plane supports.
pub fn separate_all(plane: &MeasurementPlane, cfg: SepConfig) -> Result<Vec<ModeGrid>> {
    let w = plane
        .excitation
        .only()
        .ok_or_else(|| EdtError::WrongExcitation(alloc::string::String::from("separation needs a single-wave excitation")))?;
    Ok(match w.mode {
        Wave::P => alloc::vec![scatfun_pp(plane, cfg)?, scatfun_sp(plane, 1, cfg)?, scatfun_sp(plane, 2, cfg)?],
        Wave::S => {
            let (a, b) = scatfun_ss(plane, cfg)?;
            alloc::vec![scatfun_ps(plane, cfg)?, a, b]
        }
    })
}
