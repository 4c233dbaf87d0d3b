//! Rayon drivers around the core kernels. Every driver writes per-node
//! results into disjoint slots and reduces in index order, so outputs do not
//! depend on the thread count.

use edt_core::coverage::{mc_block_hits, mc_blocks, volume_from_hits, CoverageSet, VolumeEstimate};
use edt_core::elastic::{Background, Side, DEFAULT_RING_GUARD};
use edt_core::elastic::near_ring;
use edt_core::forward::{
    assemble_plane, forward_general_source, forward_value, Excitation, MeasurementPlane, OracleQuadrature, Pose,
    XiGrid,
};
use edt_core::inversion::{
    backproject_slab, jacobian_fixed_axis, rotation_matrix, solve_voxel, trace_map, KGrid, RotationTrajectory, SolveConfig,
    SolvedKGrid, TraceSample, VolumeGrid,
};
use edt_core::linalg::{CVec3, Vec3, C64};
use edt_core::modesep::Mode;
use edt_core::phantom::Phantom;
use edt_core::EdtError;
use rayon::prelude::*;

use crate::error::Result;
use crate::phantom_io::{GriddedBornSource, GriddedPhantom};
use crate::spectral::SpatialPlane;

pub fn forward_full_par(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
    pose: Pose,
) -> Result<MeasurementPlane> {
    if excitation.s.is_none() && excitation.p.is_none() {
        return Err(EdtError::InvalidParameter("at least one incident wave is required".into()).into());
    }
    let nodes = (0..grid.len())
        .into_par_iter()
        .map(|idx| forward_value(phantom, excitation, bg, side, r_m, grid.node(idx), DEFAULT_RING_GUARD))
        .collect();
    Ok(assemble_plane(phantom, excitation, bg, side, r_m, grid, nodes, pose)?)
}

/// Data of the object in orientation `pose`: the phantom seen is x ↦ δ(R x).
pub fn forward_pose(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
    pose: Pose,
) -> Result<MeasurementPlane> {
    let r = rotation_matrix(pose.theta, pose.axis)?;
    forward_full_par(&phantom.rotated(&r), excitation, bg, side, r_m, grid, pose)
}

/// Forward data of a gridded phantom in orientation `pose`.
pub fn forward_gridded_pose(
    phantom: &GriddedPhantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
    pose: Pose,
) -> Result<MeasurementPlane> {
    if excitation.s.is_none() && excitation.p.is_none() {
        return Err(EdtError::InvalidParameter("at least one incident wave is required".into()).into());
    }
    let rot = rotation_matrix(pose.theta, pose.axis)?;
    let src = GriddedBornSource { phantom, excitation: *excitation, bg: *bg, rot };
    let x3 = side.sign() * r_m;
    let nodes = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let xi = grid.node(idx);
            if near_ring(xi, bg, DEFAULT_RING_GUARD) {
                return (CVec3::ZERO, false);
            }
            match forward_general_source(&src, bg, x3, xi) {
                Ok(v) if v.is_finite() => (v, true),
                _ => (CVec3::ZERO, false),
            }
        })
        .collect();
    Ok(assemble_plane(&Phantom::empty(phantom.r_support), excitation, bg, side, r_m, grid, nodes, pose)?)
}

/// One plane per trajectory angle.
pub fn forward_rotation(
    phantom: &Phantom,
    excitation: &Excitation,
    bg: &Background,
    side: Side,
    r_m: f64,
    grid: XiGrid,
    traj: &RotationTrajectory,
) -> Result<Vec<MeasurementPlane>> {
    traj.theta
        .iter()
        .map(|&theta| forward_pose(phantom, excitation, bg, side, r_m, grid, Pose { axis: traj.axis, theta }))
        .collect()
}

/// Oracle field of every source set of `q` on a centred (x1, x2) grid at x3.
pub fn oracle_planes(q: &OracleQuadrature, n: usize, dx: f64, x3: f64) -> Result<Vec<SpatialPlane>> {
    let h = (n / 2) as f64;
    let fields: Vec<Vec<CVec3>> = (0..n * n)
        .into_par_iter()
        .map(|idx| q.field_at([(idx / n) as f64 * dx - h * dx, (idx % n) as f64 * dx - h * dx, x3]))
        .collect::<std::result::Result<_, _>>()?;
    Ok((0..q.sources.len())
        .map(|s| SpatialPlane { n1: n, n2: n, dx1: dx, dx2: dx, values: fields.iter().map(|f| f[s]).collect() })
        .collect())
}

pub fn oracle_points(q: &OracleQuadrature, points: &[Vec3]) -> Result<Vec<Vec<CVec3>>> {
    Ok(points.par_iter().map(|p| q.field_at(*p)).collect::<std::result::Result<_, _>>()?)
}

/// Direct nonuniform-sum backprojection, parallel over x-slabs.
pub fn backproject_direct_par(samples: &[TraceSample], vol: VolumeGrid) -> Vec<C64> {
    let slabs: Vec<Vec<C64>> = (0..vol.n).into_par_iter().map(|m1| backproject_slab(samples, vol, m1)).collect();
    slabs.concat()
}

pub fn coverage_volume_par(set: &CoverageSet, n_samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if n_samples < 10_000 {
        return Err(EdtError::InvalidParameter("coverage volume needs at least 1e4 samples".into()).into());
    }
    let (lo, hi) = set.bounding_box()?;
    let (nb, size) = mc_blocks(n_samples);
    let hits: Vec<u64> = (0..nb).into_par_iter().map(|b| mc_block_hits(set, lo, hi, seed, b, size(b))).collect();
    Ok(volume_from_hits(lo, hi, hits.iter().sum(), n_samples))
}

pub fn solve_parameters_par(kgrid: &KGrid, cfg: SolveConfig) -> SolvedKGrid {
    SolvedKGrid { n: kgrid.n, dy: kgrid.dy, voxels: kgrid.voxels.par_iter().map(|s| solve_voxel(s, cfg)).collect() }
}

/// Numeric Banach indicatrix: Jacobian-weighted measure of the preimage of
/// each voxel under the fixed-axis trace map, divided by the voxel volume.
/// Uses midpoint sampling of n_xi² lateral cells over |ξ| < k_α and n_t
/// angles of a full turn; by the area formula each bin averages Card.
pub fn multiplicity_binning(
    mode: Mode,
    side: Side,
    bg: &Background,
    axis: Vec3,
    n_xi: usize,
    n_t: usize,
    kg_n: usize,
    dy: f64,
) -> Result<Vec<f64>> {
    let (ka, _) = mode.wavenumbers(bg);
    let grid = XiGrid::midpoint(n_xi, ka);
    let dt = 2.0 * std::f64::consts::PI / n_t as f64;
    let cell = grid.cell_area() * dt / (dy * dy * dy);
    let index = |y: Vec3| -> Option<usize> {
        let h = (kg_n / 2) as f64;
        let mut idx = 0;
        for v in y {
            let i = (v / dy + h).round();
            if i < 0.0 || i >= kg_n as f64 {
                return None;
            }
            idx = idx * kg_n + i as usize;
        }
        Some(idx)
    };
    // per-angle partial histograms merged in angle order
    let chunks: Vec<Vec<f64>> = (0..n_t)
        .into_par_iter()
        .map(|j| {
            let theta = (j as f64 + 0.5) * dt;
            let mut h = vec![0.0; kg_n * kg_n * kg_n];
            for k in 0..grid.len() {
                let xi = grid.node(k);
                if let Ok(y) = trace_map(xi, theta, mode, side, bg, axis) {
                    if let Some(i) = index(y) {
                        h[i] += cell * jacobian_fixed_axis(xi, 1.0, mode, bg, axis);
                    }
                }
            }
            h
        })
        .collect();
    let mut out = vec![0.0; kg_n * kg_n * kg_n];
    for h in chunks {
        for (o, v) in out.iter_mut().zip(h) {
            *o += v;
        }
    }
    Ok(out)
}
