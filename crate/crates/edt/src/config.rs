//! Run configuration (JSON). Unknown fields are rejected; validation errors
//! name the offending field.

use std::path::{Path, PathBuf};

use edt_core::coverage::{CoverageSet, Formula, KRanges};
use edt_core::elastic::{Background, Side};
use edt_core::forward::{Excitation, OracleConfig, Pose, XiGrid};
use edt_core::inversion::{KGrid, RotationTrajectory, SolveConfig, VolumeGrid};
use edt_core::linalg::norm3;
use edt_core::modesep::{Mode, ModeTag, SepConfig};
use edt_core::phantom::{IncidentWave, Phantom};
use serde::{Deserialize, Serialize};

use crate::edtg::EdtgFile;
use crate::error::{Error, Result};
use crate::phantom_io::{BlobDoc, GriddedPhantom, PhantomDoc};
use crate::spectral::Gridding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub background: BackgroundCfg,
    pub phantom: PhantomCfg,
    pub experiment: ExperimentCfg,
    #[serde(default)]
    pub inversion: InversionCfg,
    #[serde(default)]
    pub backprojection: BackprojectionCfg,
    #[serde(default)]
    pub coverage: CoverageCfg,
    #[serde(default)]
    pub seeds: SeedsCfg,
    #[serde(default)]
    pub oracle: OracleCfg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundCfg {
    pub rho0: f64,
    pub mu0: f64,
    pub lambda0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// frequency sweep; mutually exclusive with `omega`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_list: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_support: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blobs: Option<Vec<BlobDoc>>,
    /// JSON phantom document, relative to the config file
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// EDTG volume with components (δμ, δλ, δρ)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideCfg {
    Transmission,
    Reflection,
}

impl SideCfg {
    pub fn side(self) -> Side {
        match self {
            SideCfg::Transmission => Side::Transmission,
            SideCfg::Reflection => Side::Reflection,
        }
    }

    pub fn from_side(s: Side) -> SideCfg {
        match s {
            Side::Transmission => SideCfg::Transmission,
            Side::Reflection => SideCfg::Reflection,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SideCfg::Transmission => "transmission",
            SideCfg::Reflection => "reflection",
        }
    }
}

/// Incident waves: `s` = (a1, a2) of the S polarization, `p` = a3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl ExcitationCfg {
    pub fn build(&self) -> edt_core::Result<Excitation> {
        let s = self.s.map(|a| IncidentWave::s(a[0], a[1])).transpose()?;
        let p = self.p.map(IncidentWave::p).transpose()?;
        match (s, p) {
            (Some(s), Some(p)) => Excitation::both(s, p),
            (Some(w), None) | (None, Some(w)) => Ok(Excitation::single(w)),
            (None, None) => Err(edt_core::EdtError::InvalidParameter("excitation has no wave".into())),
        }
    }

    pub fn label(&self) -> String {
        match (self.s.is_some(), self.p.is_some()) {
            (true, true) => "SP".into(),
            (true, false) => "S".into(),
            _ => "P".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiGridCfg {
    pub n: usize,
    /// centred FFT-ordered grid with this spacing
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dxi: Option<f64>,
    /// midpoint grid over [−half, half]²
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryCfg {
    #[serde(default = "e1")]
    pub axis: [f64; 3],
    pub n_angles: usize,
}

fn e1() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentCfg {
    pub sides: Vec<SideCfg>,
    pub r_m: f64,
    pub excitations: Vec<ExcitationCfg>,
    pub xi_grid: XiGridCfg,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryCfg>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGridCfg {
    pub n: usize,
    /// half-width y_max of the cube; defaults to 1.05·2k_s
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
}

impl Default for KGridCfg {
    fn default() -> Self {
        KGridCfg { n: 32, extent: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionCfg {
    pub kgrid: KGridCfg,
    pub tau_den: f64,
    pub kappa_max: f64,
    pub svd_rel_threshold: f64,
    /// mode labels used for the solve; empty = every separated mode
    pub modes: Vec<String>,
}

impl Default for InversionCfg {
    fn default() -> Self {
        InversionCfg { kgrid: KGridCfg::default(), tau_den: 1e-3, kappa_max: 1e6, svd_rel_threshold: 1e-8, modes: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowCfg {
    #[default]
    None,
    /// Hann ball of radius L/2 applied to the reconstruction
    Hann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackprojectionCfg {
    pub n: usize,
    /// side length L of the real-space cube
    pub extent: f64,
    pub gridding: Gridding,
    pub mode: String,
    /// Banach indicatrix of the trace map (2 for a full fixed-axis turn)
    pub card: f64,
    pub window: WindowCfg,
}

impl Default for BackprojectionCfg {
    fn default() -> Self {
        BackprojectionCfg { n: 48, extent: 52.0, gridding: Gridding::Gaussian, mode: "PP".into(), card: 2.0, window: WindowCfg::None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Hemisphere,
    Angular,
    AngularBoth,
    Torus,
    Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FormulaCfg {
    #[default]
    Printed,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSetCfg {
    pub kind: SetKind,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<SideCfg>,
    #[serde(default)]
    pub formula: FormulaCfg,
    /// frequency sets only; default to the range of `background.omega_list`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageCfg {
    pub sets: Vec<CoverageSetCfg>,
    pub n_samples: u64,
    /// occupancy cube size; spacing covers [−2.1 k_s, 2.1 k_s]
    pub occupancy_n: usize,
    /// sample points written to the CSV point cloud per set
    pub n_points: usize,
}

impl Default for CoverageCfg {
    fn default() -> Self {
        CoverageCfg { sets: Vec::new(), n_samples: 1_000_000, occupancy_n: 48, n_points: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsCfg {
    pub master: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleCfg {
    pub order: usize,
}

impl Default for OracleCfg {
    fn default() -> Self {
        OracleCfg { order: 48 }
    }
}

pub enum PhantomSource {
    Blobs(Phantom),
    Gridded(GriddedPhantom),
}

impl PhantomSource {
    pub fn r_support(&self) -> f64 {
        match self {
            PhantomSource::Blobs(p) => p.r_support,
            PhantomSource::Gridded(g) => g.r_support,
        }
    }
}

/// A validated configuration in terms of core types.
pub struct Setup {
    pub backgrounds: Vec<Background>,
    pub phantom: PhantomSource,
    pub sides: Vec<Side>,
    pub r_m: f64,
    pub excitations: Vec<(String, Excitation)>,
    pub grid: XiGrid,
    pub trajectory: Option<RotationTrajectory>,
    pub sep: SepConfig,
    pub solve: SolveConfig,
    pub kgrid_n: usize,
    pub kgrid_extent: f64,
    pub modes: Vec<ModeTag>,
    pub volume: VolumeGrid,
    pub bp_mode: ModeTag,
    pub bp_card: f64,
    pub bp_gridding: Gridding,
    pub bp_window: WindowCfg,
    pub coverage: Vec<(String, CoverageSet)>,
    pub oracle: OracleConfig,
}

impl Setup {
    pub fn poses(&self) -> Vec<Pose> {
        match &self.trajectory {
            Some(t) => t.theta.iter().map(|&theta| Pose { axis: t.axis, theta }).collect(),
            None => vec![Pose::default()],
        }
    }

    pub fn kgrid(&self) -> Result<KGrid> {
        KGrid::new(self.kgrid_n, self.kgrid_extent).map_err(|e| Error::config("inversion.kgrid", e.to_string()))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be positive and finite"))
    }
}

fn mode_from_label(field: &str, s: &str) -> Result<Mode> {
    match s {
        "PP" => Ok(Mode::PP),
        "PS" => Ok(Mode::PS),
        "SP" => Ok(Mode::SP),
        "SS" => Ok(Mode::SS),
        _ => Err(Error::config(field, format!("unknown mode `{s}`"))),
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::config("<root>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", e.to_string()))?;
        RunConfig::from_str(&text)
    }

    fn omegas(&self) -> Result<Vec<f64>> {
        let b = &self.background;
        let list = match (b.omega, &b.omega_list) {
            (Some(w), None) => vec![w],
            (None, Some(l)) if !l.is_empty() => l.clone(),
            (None, Some(_)) => return Err(Error::config("background.omega_list", "must not be empty")),
            _ => return Err(Error::config("background", "give exactly one of omega and omega_list")),
        };
        for (i, w) in list.iter().enumerate() {
            positive(&format!("background.omega_list[{i}]"), *w)?;
        }
        Ok(list)
    }

    fn phantom(&self, base: &Path) -> Result<PhantomSource> {
        let p = &self.phantom;
        match (&p.blobs, &p.file, &p.grid_file) {
            (Some(blobs), None, None) => {
                let r = p.r_support.ok_or_else(|| Error::config("phantom.r_support", "required with blobs"))?;
                let doc = PhantomDoc { r_support: r, blobs: blobs.clone() };
                Ok(PhantomSource::Blobs(doc.build()?))
            }
            (None, Some(f), None) => Ok(PhantomSource::Blobs(PhantomDoc::load(&base.join(f))?.build()?)),
            (None, None, Some(f)) => {
                let file = EdtgFile::read(&base.join(f)).map_err(|e| Error::config("phantom.grid_file", e.to_string()))?;
                Ok(PhantomSource::Gridded(GriddedPhantom::from_edtg(&file)?))
            }
            _ => Err(Error::config("phantom", "give exactly one of blobs, file and grid_file")),
        }
    }

    /// Validate and build core objects; `base` resolves relative paths.
    pub fn resolve(&self, base: &Path) -> Result<Setup> {
        let b = &self.background;
        let backgrounds = self
            .omegas()?
            .into_iter()
            .map(|w| Background::new(b.rho0, b.mu0, b.lambda0, w).map_err(|e| Error::config("background", e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let bg0 = backgrounds[0];
        let phantom = self.phantom(base)?;

        let e = &self.experiment;
        if e.sides.is_empty() {
            return Err(Error::config("experiment.sides", "at least one side is required"));
        }
        positive("experiment.r_m", e.r_m)?;
        if e.r_m <= phantom.r_support() {
            return Err(Error::config(
                "experiment.r_m",
                format!("must exceed the phantom support radius {}", phantom.r_support()),
            ));
        }
        if e.excitations.is_empty() {
            return Err(Error::config("experiment.excitations", "at least one excitation is required"));
        }
        let excitations = e
            .excitations
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.build()
                    .map(|ex| (x.label(), ex))
                    .map_err(|err| Error::config(&format!("experiment.excitations[{i}]"), err.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let g = &e.xi_grid;
        if g.n == 0 {
            return Err(Error::config("experiment.xi_grid.n", "must be positive"));
        }
        let grid = match (g.dxi, g.half) {
            (Some(d), None) => {
                positive("experiment.xi_grid.dxi", d)?;
                XiGrid::centered(g.n, d)
            }
            (None, Some(h)) => {
                positive("experiment.xi_grid.half", h)?;
                XiGrid::midpoint(g.n, h)
            }
            _ => return Err(Error::config("experiment.xi_grid", "give exactly one of dxi and half")),
        };
        let trajectory = match &e.trajectory {
            Some(t) => {
                if (norm3(t.axis) - 1.0).abs() > 1e-9 {
                    return Err(Error::config("experiment.trajectory.axis", "must be a unit vector"));
                }
                if t.n_angles == 0 {
                    return Err(Error::config("experiment.trajectory.n_angles", "must be positive"));
                }
                if backgrounds.len() > 1 {
                    return Err(Error::config("experiment.trajectory", "a frequency sweep uses a single orientation"));
                }
                Some(
                    RotationTrajectory::full_uniform(t.axis, t.n_angles)
                        .map_err(|err| Error::config("experiment.trajectory", err.to_string()))?,
                )
            }
            None => None,
        };

        let inv = &self.inversion;
        positive("inversion.tau_den", inv.tau_den)?;
        if !(inv.kappa_max > 1.0) {
            return Err(Error::config("inversion.kappa_max", "must exceed 1"));
        }
        if !(inv.svd_rel_threshold > 0.0 && inv.svd_rel_threshold < 1.0) {
            return Err(Error::config("inversion.svd_rel_threshold", "must lie in (0, 1)"));
        }
        let ks_max = backgrounds.iter().map(|b| b.ks).fold(0.0, f64::max);
        let kgrid_extent = inv.kgrid.extent.unwrap_or(2.1 * ks_max);
        positive("inversion.kgrid.extent", kgrid_extent)?;
        KGrid::new(inv.kgrid.n, kgrid_extent).map_err(|err| Error::config("inversion.kgrid.n", err.to_string()))?;
        let modes = inv
            .modes
            .iter()
            .enumerate()
            .map(|(i, m)| {
                ModeTag::from_label(m).ok_or_else(|| Error::config(&format!("inversion.modes[{i}]"), "unknown mode tag"))
            })
            .collect::<Result<Vec<_>>>()?;

        let bp = &self.backprojection;
        if bp.n < 2 || !bp.n.is_multiple_of(2) {
            return Err(Error::config("backprojection.n", "must be even and at least 2"));
        }
        positive("backprojection.extent", bp.extent)?;
        positive("backprojection.card", bp.card)?;
        let bp_mode = ModeTag::from_label(&bp.mode).ok_or_else(|| Error::config("backprojection.mode", "unknown mode tag"))?;

        let cov = &self.coverage;
        if cov.n_samples < 10_000 {
            return Err(Error::config("coverage.n_samples", "must be at least 10000"));
        }
        if cov.occupancy_n < 2 || !cov.occupancy_n.is_multiple_of(2) {
            return Err(Error::config("coverage.occupancy_n", "must be even and at least 2"));
        }
        let coverage = cov
            .sets
            .iter()
            .enumerate()
            .map(|(i, s)| self.coverage_set(i, s, &bg0))
            .collect::<Result<Vec<_>>>()?;

        if self.oracle.order < 2 {
            return Err(Error::config("oracle.order", "must be at least 2"));
        }
        Ok(Setup {
            backgrounds,
            phantom,
            sides: e.sides.iter().map(|s| s.side()).collect(),
            r_m: e.r_m,
            excitations,
            grid,
            trajectory,
            sep: SepConfig { tau_den: inv.tau_den },
            solve: SolveConfig { svd_rel_threshold: inv.svd_rel_threshold, kappa_max: inv.kappa_max },
            kgrid_n: inv.kgrid.n,
            kgrid_extent,
            modes,
            volume: VolumeGrid { n: bp.n, dr: bp.extent / bp.n as f64 },
            bp_mode,
            bp_card: bp.card,
            bp_gridding: bp.gridding,
            bp_window: bp.window,
            coverage,
            oracle: OracleConfig { order: self.oracle.order },
        })
    }

    fn coverage_set(&self, i: usize, s: &CoverageSetCfg, bg: &Background) -> Result<(String, CoverageSet)> {
        let field = format!("coverage.sets[{i}]");
        let mode = mode_from_label(&format!("{field}.mode"), &s.mode)?;
        let formula = match s.formula {
            FormulaCfg::Printed => Formula::Printed,
            FormulaCfg::Exact => Formula::Exact,
        };
        let side = || {
            s.side.map(SideCfg::side).ok_or_else(|| Error::config(&format!("{field}.side"), "required for this kind"))
        };
        let (ks, kp) = (bg.ks, bg.kp);
        let set = match s.kind {
            SetKind::Hemisphere => CoverageSet::Hemisphere { mode, side: side()?, ks, kp },
            SetKind::Angular => CoverageSet::Angular { mode, side: side()?, ks, kp, formula },
            SetKind::AngularBoth => CoverageSet::AngularBothSides { mode, ks, kp, formula },
            SetKind::Torus => CoverageSet::TorusSolid { mode, ks, kp },
            SetKind::Frequency => {
                let list = self.background.omega_list.as_deref().unwrap_or(&[]);
                let lo = s.omega_min.or_else(|| list.iter().copied().reduce(f64::min));
                let hi = s.omega_max.or_else(|| list.iter().copied().reduce(f64::max));
                let (Some(lo), Some(hi)) = (lo, hi) else {
                    return Err(Error::config(&format!("{field}.omega_min"), "frequency sets need an omega range"));
                };
                let ranges =
                    KRanges::from_omegas(bg, lo, hi).map_err(|e| Error::config(&format!("{field}.omega_min"), e.to_string()))?;
                CoverageSet::Frequency { mode, side: side()?, ranges, formula }
            }
        };
        let kind = serde_json::to_value(s.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let name = format!("{i:02}_{kind}_{}", s.mode.to_lowercase());
        Ok((name, set))
    }
}

/// Independent stream seeds derived from the master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "background": {"rho0": 1.0, "mu0": 1.0, "lambda0": 1.0, "omega": 3.0},
        "phantom": {"r_support": 1.0, "blobs": [{"center": [0,0,0], "sigma": 0.2, "amp_mu": 0.1}]},
        "experiment": {"sides": ["transmission"], "r_m": 2.0, "excitations": [{"p": 1.0}],
                       "xi_grid": {"n": 16, "half": 2.0}}
    }"#;

    #[test]
    fn minimal_config_resolves() {
        let c = RunConfig::from_str(MINIMAL).unwrap();
        let s = c.resolve(Path::new(".")).unwrap();
        assert_eq!(s.poses().len(), 1);
        assert_eq!(s.excitations[0].0, "P");
        assert_eq!(s.kgrid_n, 32);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_str(&text).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = RunConfig::from_str(MINIMAL).unwrap();
        c.experiment.r_m = 0.5;
        match c.resolve(Path::new(".")) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "experiment.r_m"),
            _ => panic!("expected a config error"),
        }
        let mut c = RunConfig::from_str(MINIMAL).unwrap();
        c.experiment.excitations[0].s = Some([0.0, 0.0]);
        match c.resolve(Path::new(".")) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "experiment.excitations[0]"),
            _ => panic!("expected a config error"),
        }
        let bad = MINIMAL.replace("\"omega\": 3.0", "\"omega\": 3.0, \"colour\": 1");
        assert!(matches!(RunConfig::from_str(&bad), Err(Error::Config { .. })));
    }

    #[test]
    fn seeds_are_distinct() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
