//! k-space coverage sets: single-orientation hemispheres, full e1-rotation
//! tori and frequency-sweep regions, with Monte Carlo and quadrature volumes.
//!
//! Every set exists in two flavours. `Formula::Printed` evaluates the closed
//! inequalities in their published form. `Formula::Exact` is the image of the
//! generating map, which differs for the SP torus (the printed set contains the
//! inner lemon of the spindle) and for the PS/SP sweep regions (non-monotone
//! y3(ω) and a lower envelope of −(k_β/k_α)ρ rather than −ρ).

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elastic::{Background, Side};
use crate::error::{invalid, EdtError, Result};
use crate::linalg::{gauss_legendre_on, Vec3};
use crate::modesep::Mode;

/// Absolute boundary slack in units of k_s.
pub const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formula {
    Printed,
    Exact,
}

/// Wavenumber ranges swept by a frequency sweep; k_p = c·k_s along the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KRanges {
    pub ks_min: f64,
    pub ks_max: f64,
    pub kp_min: f64,
    pub kp_max: f64,
}

impl KRanges {
    pub fn new(ks_min: f64, ks_max: f64, kp_min: f64, kp_max: f64) -> Result<Self> {
        let ok = 0.0 < ks_min && ks_min <= ks_max && 0.0 < kp_min && kp_min <= kp_max && kp_max < ks_max;
        if !ok || kp_min >= ks_min {
            return Err(invalid("wavenumber ranges need 0 < k_min <= k_max with k_p < k_s"));
        }
        Ok(KRanges { ks_min, ks_max, kp_min, kp_max })
    }

    /// Ranges swept by ω ∈ [ω_min, ω_max] for the material of `bg`.
    pub fn from_omegas(bg: &Background, omega_min: f64, omega_max: f64) -> Result<Self> {
        if !(0.0 < omega_min && omega_min <= omega_max) {
            return Err(invalid("omega range must satisfy 0 < omega_min <= omega_max"));
        }
        let a = bg.at_omega(omega_min)?;
        let b = bg.at_omega(omega_max)?;
        KRanges::new(a.ks, b.ks, a.kp, b.kp)
    }

    /// ((k_α,min, k_α,max), (k_β,min, k_β,max)).
    pub fn for_mode(&self, mode: Mode) -> ((f64, f64), (f64, f64)) {
        let s = (self.ks_min, self.ks_max);
        let p = (self.kp_min, self.kp_max);
        let pick = |w: crate::elastic::Wave| match w {
            crate::elastic::Wave::S => s,
            crate::elastic::Wave::P => p,
        };
        (pick(mode.scattered()), pick(mode.incident()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoverageSet {
    Hemisphere { mode: Mode, side: Side, ks: f64, kp: f64 },
    /// Full rotation about e1; side selects T⁺ (TI) or T⁻ (RI).
    Angular { mode: Mode, side: Side, ks: f64, kp: f64, formula: Formula },
    /// T⁺ ∪ T⁻ of the angular set.
    AngularBothSides { mode: Mode, ks: f64, kp: f64, formula: Formula },
    /// The solid torus y1² + (ρ − k_β)² ≤ k_α².
    TorusSolid { mode: Mode, ks: f64, kp: f64 },
    Frequency { mode: Mode, side: Side, ranges: KRanges, formula: Formula },
}

fn wavenumbers(mode: Mode, ks: f64, kp: f64) -> (f64, f64) {
    let k = |w: crate::elastic::Wave| match w {
        crate::elastic::Wave::S => ks,
        crate::elastic::Wave::P => kp,
    };
    (k(mode.scattered()), k(mode.incident()))
}

fn slack(ks: f64) -> f64 {
    BOUNDARY_SLACK * ks
}

/// y on the hemisphere ‖y + k_β e3‖ = k_α with the side's half-space.
pub fn in_hemisphere(y: Vec3, mode: Mode, side: Side, bg: &Background) -> bool {
    hemisphere_raw(y, mode, side, bg.ks, bg.kp)
}

fn hemisphere_raw(y: Vec3, mode: Mode, side: Side, ks: f64, kp: f64) -> bool {
    let (ka, kb) = wavenumbers(mode, ks, kp);
    let eps = slack(ks);
    let z = y[2] + kb;
    let r = libm::sqrt(y[0] * y[0] + y[1] * y[1] + z * z);
    (r - ka).abs() <= eps && side.sign() * z >= -eps && y[0] * y[0] + y[1] * y[1] < ka * ka + eps
}

/// Full e1-rotation set of one mode and side.
pub fn in_coverage_angular(y: Vec3, mode: Mode, side: Side, bg: &Background, formula: Formula) -> bool {
    angular_raw(y, mode, side, bg.ks, bg.kp, formula)
}

fn angular_raw(y: Vec3, mode: Mode, side: Side, ks: f64, kp: f64, formula: Formula) -> bool {
    let (ka, kb) = wavenumbers(mode, ks, kp);
    let eps = slack(ks);
    let rho = libm::hypot(y[1], y[2]);
    let n2 = y[0] * y[0] + rho * rho;
    let c = ka * ka + kb * kb;
    let tube = y[0] * y[0] + (rho - kb) * (rho - kb) <= ka * ka + eps;
    match side {
        Side::Transmission => {
            let base = n2 < c + eps && tube;
            match formula {
                Formula::Printed => base,
                Formula::Exact => base && y[0] * y[0] + (rho + kb) * (rho + kb) >= ka * ka - eps,
            }
        }
        Side::Reflection => n2 > c - eps && tube,
    }
}

pub fn in_torus_solid(y: Vec3, mode: Mode, bg: &Background) -> bool {
    torus_raw(y, mode, bg.ks, bg.kp)
}

fn torus_raw(y: Vec3, mode: Mode, ks: f64, kp: f64) -> bool {
    let (ka, kb) = wavenumbers(mode, ks, kp);
    let rho = libm::hypot(y[1], y[2]);
    y[0] * y[0] + (rho - kb) * (rho - kb) <= ka * ka + slack(ks)
}

/// Printed two-sided bound on y3 given ρ = ‖(y1, y2)‖ (TI); RI by the sign flip.
fn frequency_bounds_printed(rho: f64, side: Side, a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let (amin, amax) = a;
    let (bmin, bmax) = b;
    if rho > amax {
        return None;
    }
    let far = libm::sqrt((amax * amax - rho * rho).max(0.0));
    let near = if rho >= amin { None } else { Some(libm::sqrt(amin * amin - rho * rho)) };
    Some(match side {
        Side::Transmission => {
            let lo = match near {
                None => -rho,
                Some(r) => r - bmin,
            };
            (lo, far - bmax)
        }
        Side::Reflection => {
            let hi = match near {
                None => -rho,
                Some(r) => -r - bmin,
            };
            (-far - bmax, hi)
        }
    })
}

/// Exact range of y3 = s√(A(t)² − ρ²) − B(t) for t ∈ [0, 1], with A, B linear.
fn frequency_bounds_exact(rho: f64, side: Side, a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let (amin, amax) = a;
    let (bmin, bmax) = b;
    if rho > amax {
        return None;
    }
    let s = side.sign();
    let da = amax - amin;
    let db = bmax - bmin;
    let f = |t: f64| {
        let aa = amin + t * da;
        s * libm::sqrt((aa * aa - rho * rho).max(0.0)) - (bmin + t * db)
    };
    let t0 = if rho <= amin || da == 0.0 { 0.0 } else { ((rho - amin) / da).min(1.0) };
    let mut lo = f(t0).min(f(1.0));
    let mut hi = f(t0).max(f(1.0));
    if s > 0.0 && db > da && da > 0.0 {
        let a2 = db * db * rho * rho / (db * db - da * da);
        let t = (libm::sqrt(a2) - amin) / da;
        if t > t0 && t < 1.0 {
            let v = f(t);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Some((lo, hi))
}

/// Frequency-sweep region under a single orientation.
pub fn in_coverage_frequency(y: Vec3, mode: Mode, side: Side, ranges: &KRanges, formula: Formula) -> bool {
    let (a, b) = ranges.for_mode(mode);
    let rho = libm::hypot(y[0], y[1]);
    let eps = slack(ranges.ks_max);
    let bounds = |r: f64| match formula {
        Formula::Printed => frequency_bounds_printed(r, side, a, b),
        Formula::Exact => frequency_bounds_exact(r, side, a, b),
    };
    // slack both across and along the lateral direction
    [rho, (rho - eps).max(0.0)]
        .iter()
        .any(|r| bounds(*r).is_some_and(|(lo, hi)| y[2] >= lo - eps && y[2] <= hi + eps))
}

impl CoverageSet {
    pub fn contains(&self, y: Vec3) -> bool {
        match *self {
            CoverageSet::Hemisphere { mode, side, ks, kp } => hemisphere_raw(y, mode, side, ks, kp),
            CoverageSet::Angular { mode, side, ks, kp, formula } => angular_raw(y, mode, side, ks, kp, formula),
            CoverageSet::AngularBothSides { mode, ks, kp, formula } => {
                angular_raw(y, mode, Side::Transmission, ks, kp, formula)
                    || angular_raw(y, mode, Side::Reflection, ks, kp, formula)
            }
            CoverageSet::TorusSolid { mode, ks, kp } => torus_raw(y, mode, ks, kp),
            CoverageSet::Frequency { mode, side, ranges, formula } => {
                in_coverage_frequency(y, mode, side, &ranges, formula)
            }
        }
    }

    /// Axis-aligned box (lo, hi) enclosing the set.
    pub fn bounding_box(&self) -> Result<(Vec3, Vec3)> {
        match *self {
            CoverageSet::Hemisphere { .. } => Err(EdtError::Degenerate("hemisphere has zero volume".into())),
            CoverageSet::Angular { mode, ks, kp, .. }
            | CoverageSet::AngularBothSides { mode, ks, kp, .. }
            | CoverageSet::TorusSolid { mode, ks, kp } => {
                let (ka, kb) = wavenumbers(mode, ks, kp);
                let r = ka + kb;
                Ok(([-ka, -r, -r], [ka, r, r]))
            }
            CoverageSet::Frequency { mode, ranges, .. } => {
                let ((_, amax), (_, bmax)) = ranges.for_mode(mode);
                Ok(([-amax, -amax, -(amax + bmax)], [amax, amax, amax]))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub volume: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

pub const MC_BLOCK: u64 = 1 << 16;

/// Hits among the samples of one block; block b draws from stream b of the seed.
pub fn mc_block_hits(set: &CoverageSet, lo: Vec3, hi: Vec3, seed: u64, block: u64, count: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut hits = 0;
    for _ in 0..count {
        let y: Vec3 = core::array::from_fn(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>());
        if set.contains(y) {
            hits += 1;
        }
    }
    hits
}

/// Block layout for n samples: (number of blocks, size of block b).
pub fn mc_blocks(n_samples: u64) -> (u64, impl Fn(u64) -> u64) {
    let nb = n_samples.div_ceil(MC_BLOCK);
    (nb, move |b: u64| if b + 1 == nb { n_samples - b * MC_BLOCK } else { MC_BLOCK })
}

pub fn volume_from_hits(lo: Vec3, hi: Vec3, hits: u64, n: u64) -> VolumeEstimate {
    let vbox = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    let p = hits as f64 / n as f64;
    VolumeEstimate { volume: vbox * p, std_error: vbox * libm::sqrt(p * (1.0 - p) / n as f64), hits, samples: n }
}

/// Monte Carlo volume over the bounding box with a binomial standard error.
pub fn coverage_volume(set: &CoverageSet, n_samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if n_samples < 10_000 {
        return Err(invalid("coverage volume needs at least 1e4 samples"));
    }
    let (lo, hi) = set.bounding_box()?;
    let (nb, size) = mc_blocks(n_samples);
    let hits = (0..nb).map(|b| mc_block_hits(set, lo, hi, seed, b, size(b))).sum();
    Ok(volume_from_hits(lo, hi, hits, n_samples))
}

/// Composite Gauss–Legendre with a cosine map on each panel, which clusters
/// nodes at the panel ends and absorbs square-root endpoint behaviour.
fn composite_gl(a: f64, b: f64, panels: usize, order: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let h = 1.0 / panels as f64;
    let (x, w) = gauss_legendre_on(order, 0.0, 1.0);
    let mut sum = 0.0;
    for p in 0..panels {
        for (xk, wk) in x.iter().zip(w.iter()) {
            let s = (p as f64 + xk) * h;
            let t = 0.5 * (1.0 - libm::cos(PI * s));
            let jac = 0.5 * PI * libm::sin(PI * s) * (b - a);
            sum += wk * h * jac * f(a + (b - a) * t);
        }
    }
    sum
}

/// Deterministic volume of a set by one-dimensional quadrature of its
/// axisymmetric cross-section.
pub fn coverage_volume_quadrature(set: &CoverageSet, panels: usize) -> Result<f64> {
    match *set {
        CoverageSet::Hemisphere { .. } => Err(EdtError::Degenerate("hemisphere has zero volume".into())),
        CoverageSet::Angular { mode, side, ks, kp, formula } => {
            let (ka, kb) = wavenumbers(mode, ks, kp);
            let f = |y1: f64| {
                let a = libm::sqrt((ka * ka - y1 * y1).max(0.0));
                let mid2 = a * a + kb * kb;
                let (lo2, hi2) = match (side, formula) {
                    (Side::Transmission, Formula::Printed) => (sq((kb - a).max(0.0)), mid2),
                    (Side::Transmission, Formula::Exact) => (sq(kb - a), mid2),
                    (Side::Reflection, _) => (mid2, sq(kb + a)),
                };
                PI * (hi2 - lo2).max(0.0)
            };
            // kink where a = k_β
            let mut breaks = alloc::vec![-ka, ka];
            if ka > kb {
                let y = libm::sqrt(ka * ka - kb * kb);
                breaks.extend([-y, y]);
            }
            Ok(piecewise(&mut breaks, panels, &f))
        }
        CoverageSet::AngularBothSides { mode, ks, kp, formula } => {
            let side = |side| CoverageSet::Angular { mode, side, ks, kp, formula };
            Ok(coverage_volume_quadrature(&side(Side::Transmission), panels)?
                + coverage_volume_quadrature(&side(Side::Reflection), panels)?)
        }
        CoverageSet::TorusSolid { mode, ks, kp } => {
            let (ka, kb) = wavenumbers(mode, ks, kp);
            let f = |y1: f64| {
                let a = libm::sqrt((ka * ka - y1 * y1).max(0.0));
                PI * (sq(kb + a) - sq((kb - a).max(0.0)))
            };
            let mut breaks = alloc::vec![-ka, ka];
            if ka > kb {
                let y = libm::sqrt(ka * ka - kb * kb);
                breaks.extend([-y, y]);
            }
            Ok(piecewise(&mut breaks, panels, &f))
        }
        CoverageSet::Frequency { mode, side, ranges, formula } => {
            let (a, b) = ranges.for_mode(mode);
            let f = |rho: f64| {
                let bounds = match formula {
                    Formula::Printed => frequency_bounds_printed(rho, side, a, b),
                    Formula::Exact => frequency_bounds_exact(rho, side, a, b),
                };
                bounds.map_or(0.0, |(lo, hi)| 2.0 * PI * rho * (hi - lo).max(0.0))
            };
            let mut breaks = alloc::vec![0.0, a.0, a.1];
            // where the interior critical point enters the sweep
            let (da, db) = (a.1 - a.0, b.1 - b.0);
            if db > da && da > 0.0 {
                let r = libm::sqrt((db * db - da * da) / (db * db));
                for aa in [a.0, a.1] {
                    let rho = aa * r;
                    if rho > 0.0 && rho < a.1 {
                        breaks.push(rho);
                    }
                }
            }
            Ok(piecewise(&mut breaks, panels, &f))
        }
    }
}

fn piecewise(breaks: &mut alloc::vec::Vec<f64>, panels: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup();
    breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| composite_gl(w[0], w[1], panels, 16, f)).sum()
}

/// Occupancy mask of a set on the cube grid y_j = (j − n/2)·dy.
pub fn occupancy(set: &CoverageSet, n: usize, dy: f64) -> alloc::vec::Vec<bool> {
    let h = (n / 2) as f64;
    let mut out = alloc::vec::Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push(set.contains([(i as f64 - h) * dy, (j as f64 - h) * dy, (k as f64 - h) * dy]));
            }
        }
    }
    out
}

fn sq(x: f64) -> f64 {
    x * x
}
