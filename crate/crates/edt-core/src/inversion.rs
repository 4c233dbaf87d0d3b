//! Rotation trajectories, trace maps, per-mode coefficient rows, k-space
//! gridding, voxelwise parameter solves and backprojection.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::elastic::{kappa, Background, LateralFrequency, Side};
use crate::error::{invalid, EdtError, Result};
use crate::linalg::{mat_vec, norm3, re, Mat3, Vec3, C64, I};
use crate::modesep::{mode_locus, Mode, ModeGrid, ModeTag};
use crate::phantom::ParameterSpectra;

/// R_{θ,n} = cos θ I + sin θ [n]_× + (1 − cos θ) n nᵀ.
pub fn rotation_matrix(theta: f64, n: Vec3) -> Result<Mat3> {
    if (norm3(n) - 1.0).abs() > 1e-12 {
        return Err(invalid("rotation axis must be a unit vector"));
    }
    let (s, c) = libm::sincos(theta);
    let t = 1.0 - c;
    let [n1, n2, n3] = n;
    Ok([
        [c + n1 * n1 * t, n1 * n2 * t - n3 * s, n1 * n3 * t + n2 * s],
        [n1 * n2 * t + n3 * s, c + n2 * n2 * t, n2 * n3 * t - n1 * s],
        [n1 * n3 * t - n2 * s, n2 * n3 * t + n1 * s, c + n3 * n3 * t],
    ])
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationTrajectory {
    pub axis: Vec3,
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    /// dθ/dt, constant for the uniform trajectories built here
    pub theta_dot: f64,
}

impl RotationTrajectory {
    /// θ_j = 2πj/J with equal weights 2π/J (periodic midpoint rule, θ' = 1).
    pub fn full_uniform(axis: Vec3, n_angles: usize) -> Result<Self> {
        if n_angles == 0 {
            return Err(invalid("trajectory needs at least one angle"));
        }
        rotation_matrix(0.0, axis)?;
        let d = 2.0 * PI / n_angles as f64;
        Ok(RotationTrajectory {
            axis,
            theta: (0..n_angles).map(|j| j as f64 * d).collect(),
            weights: alloc::vec![d; n_angles],
            theta_dot: 1.0,
        })
    }

    /// Full-turn fixed-axis rotation off ±e3: the Card = 2 regime.
    pub fn is_full_turn(&self) -> bool {
        let total: f64 = self.weights.iter().sum();
        (total - 2.0 * PI).abs() < 1e-9 && self.axis[2].abs() < 1.0 - 1e-12
    }
}

pub fn trace_map(
    xi: LateralFrequency,
    theta: f64,
    mode: Mode,
    side: Side,
    bg: &Background,
    axis: Vec3,
) -> Result<Vec3> {
    let h = mode_locus(mode, xi, side, bg).ok_or(EdtError::OutsideDisc)?;
    Ok(mat_vec(&rotation_matrix(theta, axis)?, h))
}

/// |∇T| = k_β |θ'| |n2 ξ1 − n1 ξ2| / κ_α.
pub fn jacobian_fixed_axis(xi: LateralFrequency, theta_dot: f64, mode: Mode, bg: &Background, axis: Vec3) -> f64 {
    let (ka, kb) = mode.wavenumbers(bg);
    let k = kappa(xi, ka).re;
    kb * theta_dot.abs() * (axis[1] * xi.xi1 - axis[0] * xi.xi2).abs() / k
}

/// Central-difference |det ∂T/∂(ξ1, ξ2, θ)|.
pub fn jacobian_fd(xi: LateralFrequency, theta: f64, mode: Mode, side: Side, bg: &Background, axis: Vec3, h: f64) -> Result<f64> {
    let t = |a: f64, b: f64, th: f64| trace_map(LateralFrequency::new(a, b), th, mode, side, bg, axis);
    let mut cols = [[0.0; 3]; 3];
    let p = t(xi.xi1 + h, xi.xi2, theta)?;
    let m = t(xi.xi1 - h, xi.xi2, theta)?;
    cols[0] = core::array::from_fn(|k| (p[k] - m[k]) / (2.0 * h));
    let p = t(xi.xi1, xi.xi2 + h, theta)?;
    let m = t(xi.xi1, xi.xi2 - h, theta)?;
    cols[1] = core::array::from_fn(|k| (p[k] - m[k]) / (2.0 * h));
    let p = t(xi.xi1, xi.xi2, theta + h)?;
    let m = t(xi.xi1, xi.xi2, theta - h)?;
    cols[2] = core::array::from_fn(|k| (p[k] - m[k]) / (2.0 * h));
    Ok(crate::linalg::det3(&cols).abs())
}

/// Scattering function = c_mu·δμ̂ + c_lambda·δλ̂ + c_rho·δρ̂ at the locus.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ModeRow {
    pub c_mu: C64,
    pub c_lambda: C64,
    pub c_rho: C64,
}

impl ModeRow {
    pub fn apply(&self, s: &ParameterSpectra) -> C64 {
        self.c_mu * s.dmu_hat + self.c_lambda * s.dlambda_hat + self.c_rho * s.drho_hat
    }

    pub fn as_array(&self) -> [C64; 3] {
        [self.c_mu, self.c_lambda, self.c_rho]
    }

    pub fn scale(&self, f: C64) -> ModeRow {
        ModeRow { c_mu: self.c_mu * f, c_lambda: self.c_lambda * f, c_rho: self.c_rho * f }
    }
}

/// Coefficient rows of the normalized scattering functions (see
/// `modesep::norm_factor`). s is the side sign and the locus gives
/// k_β² + k_β(sκ − k_β) = s k_β κ.
pub fn mode_coefficients(tag: ModeTag, xi: LateralFrequency, side: Side, bg: &Background) -> Result<ModeRow> {
    mode_locus(tag.mode(), xi, side, bg).ok_or(EdtError::OutsideDisc)?;
    let s = side.sign();
    let w2 = bg.omega * bg.omega;
    let x2 = xi.norm_sqr();
    let ks = bg.ks;
    let kp = bg.kp;
    let kap_s = kappa(xi, ks).re;
    let kap_p = kappa(xi, kp);
    let zero = re(0.0);
    Ok(match tag {
        ModeTag::PP => {
            let kap_p = kap_p.re;
            let t = s * kp * kap_p;
            ModeRow {
                c_mu: re(-2.0 * s * t * kap_p),
                c_lambda: re(-(s * kap_p * t + kp * x2)),
                c_rho: re(s * w2 * kap_p),
            }
        }
        ModeTag::PS => {
            let kap_p = kap_p.re;
            let t = s * ks * kap_p;
            ModeRow { c_mu: re(-(t + s * ks * kap_p)), c_lambda: zero, c_rho: re(w2) }
        }
        ModeTag::SP(_) => {
            // B − s kp κ_s δλ̂ with B = s kp κ_s (δλ̂ + 2δμ̂) − ω² δρ̂
            let f = I * (kap_p * kap_s + x2);
            let t = s * kp * kap_s;
            ModeRow { c_mu: f * (2.0 * t), c_lambda: zero, c_rho: f * (-w2) }
        }
        ModeTag::SS1 => {
            // s ks² κ_p C, C = s ks κ_s δμ̂ − ω² δρ̂
            let f = kap_p * (s * ks * ks);
            ModeRow { c_mu: f * (s * ks * kap_s), c_lambda: zero, c_rho: f * (-w2) }
        }
        ModeTag::SS2 => {
            // −i [s(κ_s − κ_p)(C + s ks κ_s δμ̂) − ks³ δμ̂]
            let t = s * ks * kap_s;
            let d = (re(kap_s) - kap_p) * s;
            ModeRow {
                c_mu: -I * (d * (2.0 * t) - ks * ks * ks),
                c_lambda: zero,
                c_rho: -I * d * (-w2),
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub y: Vec3,
    pub value: C64,
    pub row: ModeRow,
    /// quadrature × Jacobian / Card
    pub weight: f64,
    pub card: f64,
}

/// How to weight the samples of one mode grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleWeight {
    /// Rotation trajectory: dt·|∇T|/Card per ξ-cell.
    Rotation { dt: f64, theta_dot: f64, card: f64 },
    /// Frequency sweep: dω·|∂y3/∂ω| per ξ-cell.
    Frequency { domega: f64 },
    /// ξ-cell area only.
    Area,
}

pub fn samples_from_mode_grid(mg: &ModeGrid, weighting: SampleWeight) -> Result<Vec<TraceSample>> {
    let rot = rotation_matrix(mg.pose.theta, mg.pose.axis)?;
    let area = mg.xi_grid.cell_area();
    let mode = mg.tag.mode();
    let mut out = Vec::new();
    for idx in 0..mg.values.len() {
        if !mg.mask[idx] {
            continue;
        }
        let xi = mg.xi_grid.node(idx);
        let row = mode_coefficients(mg.tag, xi, mg.side, &mg.bg)?;
        let (weight, card) = match weighting {
            SampleWeight::Rotation { dt, theta_dot, card } => {
                (area * dt * jacobian_fixed_axis(xi, theta_dot, mode, &mg.bg, mg.pose.axis) / card, card)
            }
            SampleWeight::Frequency { domega } => {
                let (ka, kb) = mode.wavenumbers(&mg.bg);
                let k = kappa(xi, ka).re;
                let w = mg.bg.omega;
                let dy3 = mg.side.sign() * ka * ka / (w * k) - kb / w;
                (area * domega * dy3.abs(), 1.0)
            }
            SampleWeight::Area => (area, 1.0),
        };
        out.push(TraceSample { y: mat_vec(&rot, mg.locus[idx]), value: mg.values[idx], row, weight, card });
    }
    Ok(out)
}

/// Regular grid y_j = (j − n/2)·dy, j = 0..n, per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct KGrid {
    pub n: usize,
    pub dy: f64,
    pub voxels: Vec<Vec<TraceSample>>,
    pub out_of_extent: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccumulateReport {
    pub deposited: usize,
    pub out_of_extent: usize,
}

impl KGrid {
    pub fn new(n: usize, y_max: f64) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(invalid("k-grid size must be even and at least 2"));
        }
        if !(y_max > 0.0) {
            return Err(invalid("k-grid extent must be positive"));
        }
        Ok(KGrid { n, dy: 2.0 * y_max / n as f64, voxels: alloc::vec![Vec::new(); n * n * n], out_of_extent: 0 })
    }

    pub fn y_max(&self) -> f64 {
        0.5 * self.n as f64 * self.dy
    }

    pub fn check_nyquist(&self, r_support: f64) -> Result<()> {
        if self.dy > PI / (2.0 * r_support) * (1.0 + 1e-12) {
            return Err(invalid("k-grid spacing exceeds pi/(2 r_support)"));
        }
        Ok(())
    }

    pub fn axis_index(&self, v: f64) -> Option<usize> {
        let j = libm::round(v / self.dy) as i64 + (self.n / 2) as i64;
        if j >= 0 && (j as usize) < self.n {
            Some(j as usize)
        } else {
            None
        }
    }

    pub fn index_of(&self, y: Vec3) -> Option<usize> {
        let i = self.axis_index(y[0])?;
        let j = self.axis_index(y[1])?;
        let k = self.axis_index(y[2])?;
        Some((i * self.n + j) * self.n + k)
    }

    pub fn center(&self, idx: usize) -> Vec3 {
        let n = self.n;
        let h = (n / 2) as f64;
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        [(i as f64 - h) * self.dy, (j as f64 - h) * self.dy, (k as f64 - h) * self.dy]
    }

    /// Index of the voxel at −y, if on the grid.
    pub fn mirror(&self, idx: usize) -> Option<usize> {
        let n = self.n;
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        if i == 0 || j == 0 || k == 0 {
            return None;
        }
        Some(((n - i) * n + (n - j)) * n + (n - k))
    }

    pub fn voxel_volume(&self) -> f64 {
        self.dy * self.dy * self.dy
    }

    pub fn row_count(&self) -> usize {
        self.voxels.iter().map(|v| v.len()).sum()
    }

    /// Σ value·weight per voxel divided by the voxel volume.
    pub fn spectrum_density(&self) -> Vec<C64> {
        let v = self.voxel_volume();
        self.voxels
            .iter()
            .map(|s| s.iter().fold(re(0.0), |a, t| a + t.value * t.weight) / v)
            .collect()
    }

    /// Σ |∇T|·dξ·dt per voxel over the voxel volume: the multiplicity estimate.
    pub fn multiplicity(&self) -> Vec<f64> {
        let v = self.voxel_volume();
        self.voxels.iter().map(|s| s.iter().map(|t| t.weight * t.card).sum::<f64>() / v).collect()
    }
}

pub fn accumulate(samples: &[TraceSample], kgrid: &mut KGrid) -> AccumulateReport {
    let mut rep = AccumulateReport { deposited: 0, out_of_extent: 0 };
    for s in samples {
        match kgrid.index_of(s.y) {
            Some(idx) => {
                kgrid.voxels[idx].push(*s);
                rep.deposited += 1;
            }
            None => rep.out_of_extent += 1,
        }
    }
    kgrid.out_of_extent += rep.out_of_extent;
    rep
}

/// Samples of every mode grid in an ω sweep, weighted for (ξ, ω) quadrature.
pub fn frequency_sweep_samples(grids: &[ModeGrid]) -> Result<Vec<TraceSample>> {
    let mut omegas: Vec<f64> = grids.iter().map(|g| g.bg.omega).collect();
    omegas.dedup();
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("frequency sweep needs increasing omega"));
    }
    let mut out = Vec::new();
    for g in grids {
        let k = omegas.iter().position(|w| *w == g.bg.omega).unwrap_or(0);
        let domega = match omegas.len() {
            1 => 1.0,
            _ if k == 0 => 0.5 * (omegas[1] - omegas[0]),
            len if k + 1 == len => 0.5 * (omegas[k] - omegas[k - 1]),
            _ => 0.5 * (omegas[k + 1] - omegas[k - 1]),
        };
        out.extend(samples_from_mode_grid(g, SampleWeight::Frequency { domega })?);
    }
    Ok(out)
}

pub fn frequency_sweep_accumulate(grids: &[ModeGrid], kgrid: &mut KGrid) -> Result<AccumulateReport> {
    let s = frequency_sweep_samples(grids)?;
    Ok(accumulate(&s, kgrid))
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SolveFlags {
    pub empty: bool,
    pub mu_undetermined: bool,
    pub lambda_undetermined: bool,
    pub rho_undetermined: bool,
    pub ill_conditioned: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolvedVoxel {
    /// None where the component is not identifiable from the rows
    pub dmu: Option<C64>,
    pub dlambda: Option<C64>,
    pub drho: Option<C64>,
    pub rank: usize,
    pub rows: usize,
    pub condition: f64,
    pub residual: f64,
    pub flags: SolveFlags,
}

impl SolvedVoxel {
    pub fn empty() -> Self {
        SolvedVoxel {
            dmu: None,
            dlambda: None,
            drho: None,
            rank: 0,
            rows: 0,
            condition: f64::INFINITY,
            residual: 0.0,
            flags: SolveFlags {
                empty: true,
                mu_undetermined: true,
                lambda_undetermined: true,
                rho_undetermined: true,
                ill_conditioned: false,
            },
        }
    }

    pub fn components(&self) -> [Option<C64>; 3] {
        [self.dmu, self.dlambda, self.drho]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    pub svd_rel_threshold: f64,
    pub kappa_max: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { svd_rel_threshold: 1e-8, kappa_max: 1e6 }
    }
}

/// Weighted least squares for (δμ̂, δλ̂, δρ̂) by truncated SVD of the
/// column-equilibrated system.
pub fn solve_rows(rows: &[(ModeRow, C64, f64)], cfg: SolveConfig) -> SolvedVoxel {
    if rows.is_empty() {
        return SolvedVoxel::empty();
    }
    let m = rows.len();
    let mut a = DMatrix::<C64>::zeros(m, 3);
    let mut b = DVector::<C64>::zeros(m);
    for (r, (row, v, w)) in rows.iter().enumerate() {
        let sw = libm::sqrt(w.max(0.0));
        for (c, coef) in row.as_array().iter().enumerate() {
            a[(r, c)] = *coef * sw;
        }
        b[r] = *v * sw;
    }
    let mut col_scale = [0.0; 3];
    for c in 0..3 {
        let n = a.column(c).norm();
        col_scale[c] = n;
        if n > 0.0 {
            for r in 0..m {
                a[(r, c)] /= re(n);
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(v)) => (u, v),
        _ => return SolvedVoxel { rows: m, ..SolvedVoxel::empty() },
    };
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if !(smax > 0.0) {
        return SolvedVoxel { rows: m, flags: SolveFlags { empty: false, ..SolvedVoxel::empty().flags }, ..SolvedVoxel::empty() };
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > cfg.svd_rel_threshold * smax).collect();
    let smin = keep.iter().map(|&k| sv[k]).fold(f64::INFINITY, f64::min);
    let mut x = DVector::<C64>::zeros(3);
    for &k in &keep {
        let uk = u.column(k);
        let coef = uk.iter().zip(b.iter()).fold(re(0.0), |acc, (p, q)| acc + p.conj() * *q) / sv[k];
        for c in 0..3 {
            x[c] += vt[(k, c)].conj() * coef;
        }
    }
    // component c is identifiable iff e_c lies in the retained row space
    let mut determined = [false; 3];
    for c in 0..3 {
        let inside: f64 = keep.iter().map(|&k| vt[(k, c)].norm_sqr()).sum();
        determined[c] = col_scale[c] > 0.0 && (1.0 - inside).abs() < 1e-6;
    }
    let res = &a * &x - &b;
    let bn = b.norm();
    let residual = if bn > 0.0 { res.norm() / bn } else { res.norm() };
    let condition = smax / smin;
    let comp = |c: usize| if determined[c] { Some(x[c] / col_scale[c]) } else { None };
    SolvedVoxel {
        dmu: comp(0),
        dlambda: comp(1),
        drho: comp(2),
        rank: keep.len(),
        rows: m,
        condition,
        residual,
        flags: SolveFlags {
            empty: false,
            mu_undetermined: !determined[0],
            lambda_undetermined: !determined[1],
            rho_undetermined: !determined[2],
            ill_conditioned: condition > cfg.kappa_max,
        },
    }
}

pub fn solve_voxel(samples: &[TraceSample], cfg: SolveConfig) -> SolvedVoxel {
    let rows: Vec<(ModeRow, C64, f64)> = samples.iter().map(|s| (s.row, s.value, s.weight)).collect();
    solve_rows(&rows, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolvedKGrid {
    pub n: usize,
    pub dy: f64,
    pub voxels: Vec<SolvedVoxel>,
}

impl SolvedKGrid {
    /// One parameter spectrum (0 = δμ̂, 1 = δλ̂, 2 = δρ̂); None where undetermined.
    pub fn component(&self, c: usize) -> Vec<Option<C64>> {
        self.voxels.iter().map(|v| v.components()[c]).collect()
    }
}

pub fn solve_parameters(kgrid: &KGrid, cfg: SolveConfig) -> SolvedKGrid {
    SolvedKGrid {
        n: kgrid.n,
        dy: kgrid.dy,
        voxels: kgrid.voxels.iter().map(|s| solve_voxel(s, cfg)).collect(),
    }
}

/// Enforce F(−y) = conj F(y): average where both are known, fill where one is.
pub fn hermitian_symmetrize(grid: &KGrid, values: &mut [Option<C64>]) {
    for idx in 0..values.len() {
        let Some(m) = grid.mirror(idx) else { continue };
        if m < idx {
            continue;
        }
        match (values[idx], values[m]) {
            (Some(a), Some(b)) => {
                let avg = (a + b.conj()) * 0.5;
                values[idx] = Some(avg);
                values[m] = Some(avg.conj());
            }
            (Some(a), None) => values[m] = Some(a.conj()),
            (None, Some(b)) => values[idx] = Some(b.conj()),
            (None, None) => {}
        }
    }
    // the origin voxel is its own mirror
    let c = (grid.n / 2) * (grid.n * grid.n + grid.n + 1);
    if let Some(Some(v)) = values.get(c).copied() {
        values[c] = Some(re(v.re));
    }
}

/// Real-space output grid r_m = (m − n/2)·dr per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeGrid {
    pub n: usize,
    pub dr: f64,
}

impl VolumeGrid {
    pub fn coord(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dr
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// One x-slab (fixed first index) of the direct nonuniform sum
/// (2π)^{-3/2} Σ value·weight·e^{i y·r}.
pub fn backproject_slab(samples: &[TraceSample], vol: VolumeGrid, m1: usize) -> Vec<C64> {
    let n = vol.n;
    let mut out = alloc::vec![re(0.0); n * n];
    let r1 = vol.coord(m1);
    let r0 = vol.coord(0);
    let norm = libm::pow(2.0 * PI, -1.5);
    let mut e2 = alloc::vec![re(0.0); n];
    let mut e3 = alloc::vec![re(0.0); n];
    for s in samples {
        let a = s.value * (s.weight * norm) * (I * s.y[0] * r1).exp();
        fill_phase(&mut e2, s.y[1], r0, vol.dr);
        fill_phase(&mut e3, s.y[2], r0, vol.dr);
        for (j, p2) in e2.iter().enumerate() {
            let b = a * *p2;
            let row = &mut out[j * n..(j + 1) * n];
            for (o, p3) in row.iter_mut().zip(e3.iter()) {
                *o += b * *p3;
            }
        }
    }
    out
}

fn fill_phase(buf: &mut [C64], y: f64, r0: f64, dr: f64) {
    let step = (I * y * dr).exp();
    let mut p = (I * y * r0).exp();
    for (k, b) in buf.iter_mut().enumerate() {
        // re-anchor periodically to bound recurrence drift
        if k % 16 == 0 {
            p = (I * y * (r0 + k as f64 * dr)).exp();
        }
        *b = p;
        p *= step;
    }
}

pub fn backproject_direct(samples: &[TraceSample], vol: VolumeGrid) -> Vec<C64> {
    let mut out = Vec::with_capacity(vol.len());
    for m1 in 0..vol.n {
        out.extend(backproject_slab(samples, vol, m1));
    }
    out
}

/// Both preimages (ξ, θ) of y under the e1-axis trace map of one mode.
pub fn preimage_e1(y: Vec3, mode: Mode, side: Side, bg: &Background) -> Vec<(LateralFrequency, f64)> {
    let (ka, kb) = mode.wavenumbers(bg);
    let s = side.sign();
    let rho2 = y[1] * y[1] + y[2] * y[2];
    let kap = s * (ka * ka + kb * kb - y[0] * y[0] - rho2) / (2.0 * kb);
    let xi2_sq = ka * ka - y[0] * y[0] - kap * kap;
    if !(kap > 0.0) || xi2_sq < 0.0 {
        return Vec::new();
    }
    let r = libm::sqrt(xi2_sq);
    let mut out = Vec::new();
    for xi2 in if r > 0.0 { alloc::vec![r, -r] } else { alloc::vec![0.0] } {
        let h3 = s * kap - kb;
        let th = libm::atan2(y[2], y[1]) - libm::atan2(h3, xi2);
        let th = th - 2.0 * PI * libm::floor(th / (2.0 * PI));
        out.push((LateralFrequency::new(y[0], xi2), th));
    }
    out
}
