//! Conversions between pipeline objects and EDTG files.

use edt_core::elastic::{Background, Side};
use edt_core::forward::{Excitation, MeasurementPlane, Pose, XiGrid};
use edt_core::inversion::{KGrid, SolvedKGrid, VolumeGrid};
use edt_core::linalg::C64;
use edt_core::modesep::{mode_locus, ModeGrid, ModeTag};
use edt_core::phantom::IncidentWave;
use serde_json::{json, Map, Value};

use crate::config::{ExcitationCfg, SideCfg};
use crate::edtg::{EdtgFile, Kind};
use crate::error::{Error, Result};

fn meta_err(key: &str) -> Error {
    Error::Format(format!("metadata field `{key}` missing or malformed"))
}

fn get<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| meta_err(key))
}

fn get_f64(m: &Map<String, Value>, key: &str) -> Result<f64> {
    get(m, key)?.as_f64().ok_or_else(|| meta_err(key))
}

fn from_value<T: serde::de::DeserializeOwned>(m: &Map<String, Value>, key: &str) -> Result<T> {
    serde_json::from_value(get(m, key)?.clone()).map_err(|_| meta_err(key))
}

pub fn background_json(bg: &Background) -> Value {
    json!({"rho0": bg.rho0, "mu0": bg.mu0, "lambda0": bg.lambda0, "omega": bg.omega})
}

pub fn background_from(m: &Map<String, Value>) -> Result<Background> {
    let b = get(m, "background")?.as_object().ok_or_else(|| meta_err("background"))?;
    let f = |k: &str| get_f64(b, k);
    Ok(Background::new(f("rho0")?, f("mu0")?, f("lambda0")?, f("omega")?)?)
}

fn excitation_cfg(e: &Excitation) -> ExcitationCfg {
    ExcitationCfg { s: e.s.map(|w| [w.amplitude[0], w.amplitude[1]]), p: e.p.map(|w| w.amplitude[2]) }
}

fn pose_json(p: &Pose) -> Value {
    json!({"axis": p.axis, "theta": p.theta})
}

fn pose_from(m: &Map<String, Value>) -> Result<Pose> {
    let p = get(m, "pose")?.as_object().ok_or_else(|| meta_err("pose"))?;
    Ok(Pose { axis: from_value(p, "axis")?, theta: get_f64(p, "theta")? })
}

pub fn mask_string(mask: &[bool]) -> String {
    mask.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn mask_from(m: &Map<String, Value>, len: usize) -> Result<Vec<bool>> {
    let s = get(m, "mask")?.as_str().ok_or_else(|| meta_err("mask"))?;
    if s.len() != len {
        return Err(Error::Shape(format!("mask has {} entries, grid has {len}", s.len())));
    }
    s.chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            _ => Err(meta_err("mask")),
        })
        .collect()
}

fn side_from(m: &Map<String, Value>) -> Result<Side> {
    Ok(from_value::<SideCfg>(m, "side")?.side())
}

fn xi_axes(g: &XiGrid) -> (Vec<u32>, Vec<f64>, Vec<f64>) {
    (vec![g.n1 as u32, g.n2 as u32], vec![g.d1, g.d2], vec![g.origin1, g.origin2])
}

fn xi_grid_from(f: &EdtgFile) -> Result<XiGrid> {
    if f.dims.len() != 2 {
        return Err(Error::Format("expected a rank-2 ξ grid".into()));
    }
    Ok(XiGrid {
        n1: f.dims[0] as usize,
        n2: f.dims[1] as usize,
        d1: f.spacing[0],
        d2: f.spacing[1],
        origin1: f.origin[0],
        origin2: f.origin[1],
    })
}

fn common_meta(bg: &Background, side: Side, r_m: f64, pose: &Pose, mask: &[bool]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("background".into(), background_json(bg));
    m.insert("side".into(), json!(SideCfg::from_side(side)));
    m.insert("r_m".into(), json!(r_m));
    m.insert("pose".into(), pose_json(pose));
    m.insert("mask".into(), json!(mask_string(mask)));
    m
}

pub fn plane_to_edtg(p: &MeasurementPlane) -> Result<EdtgFile> {
    let mut m = common_meta(&p.bg, p.side, p.r_m, &p.pose, &p.mask);
    m.insert("components".into(), json!(3));
    m.insert("excitation".into(), json!(excitation_cfg(&p.excitation)));
    let values: Vec<C64> = p.values.iter().flat_map(|v| v.0).collect();
    let (dims, spacing, origin) = xi_axes(&p.xi_grid);
    EdtgFile::complex(Kind::Plane, dims, spacing, origin, m, &values)
}

pub fn plane_from_edtg(f: &EdtgFile) -> Result<MeasurementPlane> {
    if f.kind != Kind::Plane || f.components() != 3 {
        return Err(Error::Format("expected a measurement plane".into()));
    }
    let grid = xi_grid_from(f)?;
    let m = &f.metadata;
    let excitation = from_value::<ExcitationCfg>(m, "excitation")?.build()?;
    let raw = f.complex_values()?;
    let values = raw.chunks_exact(3).map(|c| edt_core::linalg::CVec3::new(c[0], c[1], c[2])).collect();
    Ok(MeasurementPlane {
        side: side_from(m)?,
        r_m: get_f64(m, "r_m")?,
        xi_grid: grid,
        values,
        mask: mask_from(m, grid.len())?,
        bg: background_from(m)?,
        excitation,
        pose: pose_from(m)?,
    })
}

pub fn mode_grid_to_edtg(g: &ModeGrid) -> Result<EdtgFile> {
    let mut m = common_meta(&g.bg, g.side, g.r_m, &g.pose, &g.mask);
    m.insert("tag".into(), json!(g.tag.label()));
    m.insert("wave".into(), json!(excitation_cfg(&Excitation::single(g.wave))));
    let (dims, spacing, origin) = xi_axes(&g.xi_grid);
    EdtgFile::complex(Kind::ModeGrid, dims, spacing, origin, m, &g.values)
}

pub fn mode_grid_from_edtg(f: &EdtgFile) -> Result<ModeGrid> {
    if f.kind != Kind::ModeGrid || f.components() != 1 {
        return Err(Error::Format("expected a mode grid".into()));
    }
    let grid = xi_grid_from(f)?;
    let m = &f.metadata;
    let tag = get(m, "tag")?.as_str().and_then(ModeTag::from_label).ok_or_else(|| meta_err("tag"))?;
    let wave: IncidentWave =
        from_value::<ExcitationCfg>(m, "wave")?.build()?.only().ok_or_else(|| meta_err("wave"))?;
    let side = side_from(m)?;
    let bg = background_from(m)?;
    let locus = (0..grid.len())
        .map(|i| mode_locus(tag.mode(), grid.node(i), side, &bg).unwrap_or([f64::NAN; 3]))
        .collect();
    Ok(ModeGrid {
        tag,
        side,
        r_m: get_f64(m, "r_m")?,
        xi_grid: grid,
        values: f.complex_values()?,
        locus,
        mask: mask_from(m, grid.len())?,
        bg,
        wave,
        pose: pose_from(m)?,
    })
}

fn cube_axes(n: usize, d: f64) -> (Vec<u32>, Vec<f64>, Vec<f64>) {
    let o = -((n / 2) as f64) * d;
    (vec![n as u32; 3], vec![d; 3], vec![o; 3])
}

/// Solved spectra (δμ̂, δλ̂, δρ̂) per voxel; NaN marks an undetermined component.
pub fn solved_to_edtg(s: &SolvedKGrid, mut meta: Map<String, Value>) -> Result<EdtgFile> {
    meta.insert("components".into(), json!(3));
    let nan = C64::new(f64::NAN, f64::NAN);
    let values: Vec<C64> = s.voxels.iter().flat_map(|v| v.components().map(|c| c.unwrap_or(nan))).collect();
    let (dims, spacing, origin) = cube_axes(s.n, s.dy);
    EdtgFile::complex(Kind::KGrid, dims, spacing, origin, meta, &values)
}

/// Inverse of [`solved_to_edtg`]: (grid, per-voxel components).
pub fn solved_from_edtg(f: &EdtgFile) -> Result<(KGrid, Vec<[Option<C64>; 3]>)> {
    if f.kind != Kind::KGrid || f.components() != 3 || f.dims.len() != 3 {
        return Err(Error::Format("expected a solved k-grid".into()));
    }
    let n = f.dims[0] as usize;
    let grid = KGrid::new(n, 0.5 * n as f64 * f.spacing[0])?;
    let some = |c: C64| if c.re.is_nan() { None } else { Some(c) };
    let v = f.complex_values()?.chunks_exact(3).map(|c| [some(c[0]), some(c[1]), some(c[2])]).collect();
    Ok((grid, v))
}

pub fn volume_to_edtg(values: &[C64], vol: VolumeGrid, components: usize, mut meta: Map<String, Value>) -> Result<EdtgFile> {
    meta.insert("components".into(), json!(components));
    let (dims, spacing, origin) = cube_axes(vol.n, vol.dr);
    EdtgFile::complex(Kind::Volume, dims, spacing, origin, meta, values)
}

pub fn volume_from_edtg(f: &EdtgFile) -> Result<(VolumeGrid, Vec<C64>)> {
    if f.kind != Kind::Volume || f.dims.len() != 3 {
        return Err(Error::Format("expected a volume".into()));
    }
    Ok((VolumeGrid { n: f.dims[0] as usize, dr: f.spacing[0] }, f.complex_values()?))
}

pub fn occupancy_to_edtg(mask: &[bool], n: usize, dy: f64, mut meta: Map<String, Value>) -> Result<EdtgFile> {
    meta.insert("components".into(), json!(1));
    let v: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let (dims, spacing, origin) = cube_axes(n, dy);
    EdtgFile::real(Kind::Occupancy, dims, spacing, origin, meta, &v)
}

pub fn occupancy_from_edtg(f: &EdtgFile) -> Result<Vec<bool>> {
    if f.kind != Kind::Occupancy {
        return Err(Error::Format("expected an occupancy grid".into()));
    }
    Ok(f.real_values()?.into_iter().map(|v| v != 0.0).collect())
}
