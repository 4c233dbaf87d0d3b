//! Command-line pipeline: simulate → separate → invert / backproject, and
//! coverage analysis.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use edt_core::coverage::{coverage_volume_quadrature, occupancy, CoverageSet, VolumeEstimate};
use edt_core::elastic::Wave;
use edt_core::forward::{MeasurementPlane, OracleQuadrature};
use edt_core::inversion::{
    accumulate, frequency_sweep_samples, hermitian_symmetrize, samples_from_mode_grid, SampleWeight, TraceSample,
    VolumeGrid,
};
use edt_core::linalg::{Vec3, C64};
use edt_core::modesep::{separate_all, ModeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{derive_seed, PhantomSource, RunConfig, Setup, SideCfg, WindowCfg};
use crate::edtg::{write_atomic, EdtgFile, Kind};
use crate::error::{Error, Result};
use crate::grids::{
    background_json, mode_grid_from_edtg, mode_grid_to_edtg, occupancy_to_edtg, plane_from_edtg, plane_to_edtg,
    solved_to_edtg, volume_to_edtg,
};
use crate::{export, parallel, spectral};

#[derive(Parser, Debug)]
#[command(name = "edt", version, about = "Elastic diffraction tomography pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// run configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// override `seeds.master`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Forward-simulate measurement planes (EDTG kind 0).
    Simulate {
        /// CSV of x1,x2,x3 points for direct-space oracle samples
        #[arg(long)]
        oracle_points: Option<PathBuf>,
    },
    /// Split planes into scattering-function grids (EDTG kind 1).
    Separate {
        /// plane files or directories holding them
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Solve for (δμ̂, δλ̂, δρ̂) on the k-grid (EDTG kind 2).
    Invert {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// also write real-space parameter volumes
        #[arg(long)]
        volumes: bool,
    },
    /// Filtered backprojection of one mode onto a real-space cube (EDTG kind 3).
    Backproject {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Occupancy grids, point clouds and volumes of the coverage sets.
    Coverage,
}

struct Ctx {
    setup: Setup,
    out: PathBuf,
    master: u64,
    verbose: bool,
    written: Vec<(String, u32)>,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, f: &EdtgFile) -> Result<()> {
        f.write(&self.out.join(name))?;
        self.log(format!("wrote {name} (crc {:08x})", f.crc()));
        self.written.push((name.into(), f.crc()));
        Ok(())
    }

    fn note(&mut self, name: &str) {
        self.log(format!("wrote {name}"));
        self.written.push((name.into(), 0));
    }

    fn finish(&self, cmd: &str) -> Result<()> {
        let files: Vec<Value> =
            self.written.iter().map(|(n, c)| json!({"file": n, "crc32": format!("{c:08x}")})).collect();
        let doc = json!({"command": cmd, "seed": self.master, "files": files});
        let text = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
        write_atomic(&self.out.join(format!("{cmd}_manifest.json")), &text)?;
        println!("{cmd}: wrote {} files to {}", self.written.len(), self.out.display());
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.common.threads {
        if t == 0 {
            return Err(Error::config("--threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let path = cli.common.config.clone().ok_or_else(|| Error::config("--config", "a run configuration is required"))?;
    let cfg = RunConfig::load(&path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let setup = cfg.resolve(&base)?;
    std::fs::create_dir_all(&cli.common.out)?;
    let mut ctx = Ctx {
        setup,
        out: cli.common.out.clone(),
        master: cli.common.seed.unwrap_or(cfg.seeds.master),
        verbose: cli.common.verbose,
        written: Vec::new(),
    };
    let name = match cli.command {
        Command::Simulate { oracle_points } => {
            simulate(&mut ctx, oracle_points.as_deref())?;
            "simulate"
        }
        Command::Separate { input } => {
            separate(&mut ctx, &input)?;
            "separate"
        }
        Command::Invert { input, volumes } => {
            invert(&mut ctx, &input, volumes)?;
            "invert"
        }
        Command::Backproject { input } => {
            backproject(&mut ctx, &input)?;
            "backproject"
        }
        Command::Coverage => {
            coverage(&mut ctx, &cfg)?;
            "coverage"
        }
    };
    ctx.finish(name)
}

fn acquisition(iw: usize, ia: usize, n_angles: usize) -> Value {
    json!({"omega_index": iw, "angle_index": ia, "n_angles": n_angles})
}

fn simulate(ctx: &mut Ctx, oracle_points: Option<&Path>) -> Result<()> {
    let s = &ctx.setup;
    let poses = s.poses();
    let mut files = Vec::new();
    for (iw, bg) in s.backgrounds.iter().enumerate() {
        for &side in &s.sides {
            for (label, exc) in &s.excitations {
                for (ia, pose) in poses.iter().enumerate() {
                    let plane = match &s.phantom {
                        PhantomSource::Blobs(p) => parallel::forward_pose(p, exc, bg, side, s.r_m, s.grid, *pose)?,
                        PhantomSource::Gridded(g) => {
                            parallel::forward_gridded_pose(g, exc, bg, side, s.r_m, s.grid, *pose)?
                        }
                    };
                    let mut f = plane_to_edtg(&plane)?;
                    f.metadata.insert("acquisition".into(), acquisition(iw, ia, poses.len()));
                    let name =
                        format!("plane_w{iw:02}_{}_{label}_a{ia:04}.edtg", SideCfg::from_side(side).label());
                    files.push((name, f));
                }
            }
        }
    }
    for (name, f) in &files {
        ctx.write(name, f)?;
    }
    if let Some(pts) = oracle_points {
        let PhantomSource::Blobs(p) = &ctx.setup.phantom else {
            return Err(Error::config("phantom", "oracle samples need a blob phantom"));
        };
        let points = export::read_points(pts)?;
        let excs: Vec<_> = ctx.setup.excitations.iter().map(|e| e.1).collect();
        let labels: Vec<String> = ctx.setup.excitations.iter().map(|e| e.0.clone()).collect();
        let q = OracleQuadrature::new(p, &excs, &ctx.setup.backgrounds[0], ctx.setup.oracle)?;
        let fields = parallel::oracle_points(&q, &points)?;
        export::write_field_points(&ctx.out.join("oracle_points.csv"), &labels, &points, &fields)?;
        ctx.note("oracle_points.csv");
    }
    Ok(())
}

/// Files named directly plus `.edtg` files inside named directories, sorted.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "edtg"))
                .collect();
            v.sort();
            out.extend(v);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::config("--input", "no input files found"));
    }
    Ok(out)
}

/// Input files of one kind; other kinds in a directory are skipped.
fn read_kind(inputs: &[PathBuf], kind: Kind) -> Result<Vec<(PathBuf, EdtgFile)>> {
    let mut out = Vec::new();
    for p in collect_inputs(inputs)? {
        let f = EdtgFile::read(&p).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        if f.kind == kind {
            out.push((p, f));
        }
    }
    if out.is_empty() {
        return Err(Error::config("--input", format!("no {kind:?} files among the inputs")));
    }
    Ok(out)
}

fn separate(ctx: &mut Ctx, inputs: &[PathBuf]) -> Result<()> {
    for (path, f) in read_kind(inputs, Kind::Plane)? {
        let plane: MeasurementPlane = plane_from_edtg(&f)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let stem = stem.strip_prefix("plane_").unwrap_or(&stem).to_string();
        for g in separate_all(&plane, ctx.setup.sep)? {
            let mut out = mode_grid_to_edtg(&g)?;
            if let Some(a) = f.metadata.get("acquisition") {
                out.metadata.insert("acquisition".into(), a.clone());
            }
            ctx.write(&format!("mode_{stem}_{}.edtg", g.tag.label()), &out)?;
        }
    }
    Ok(())
}

fn n_angles(f: &EdtgFile) -> usize {
    f.metadata
        .get("acquisition")
        .and_then(|a| a.get("n_angles"))
        .and_then(Value::as_u64)
        .unwrap_or(1) as usize
}

/// Weighted trace samples of every mode grid: rotation weights for a full
/// turn, (ξ, ω) weights for a sweep, ξ-cell areas for a single acquisition.
fn trace_samples(files: &[(PathBuf, EdtgFile)], card: f64) -> Result<Vec<TraceSample>> {
    let grids: Vec<(usize, ModeGrid)> =
        files.iter().map(|(_, f)| Ok((n_angles(f), mode_grid_from_edtg(f)?))).collect::<Result<_>>()?;
    let sweep = {
        let mut w: Vec<u64> = grids.iter().map(|g| g.1.bg.omega.to_bits()).collect();
        w.sort_unstable();
        w.dedup();
        w.len() > 1
    };
    let mut out = Vec::new();
    if sweep {
        let mut groups: BTreeMap<(String, String), Vec<ModeGrid>> = BTreeMap::new();
        for (_, g) in grids {
            let key = (g.tag.label().to_string(), SideCfg::from_side(g.side).label().to_string());
            groups.entry(key).or_default().push(g);
        }
        for (_, mut v) in groups {
            v.sort_by(|a, b| a.bg.omega.total_cmp(&b.bg.omega));
            out.extend(frequency_sweep_samples(&v)?);
        }
    } else {
        for (n, g) in grids {
            let w = if n > 1 {
                SampleWeight::Rotation { dt: 2.0 * PI / n as f64, theta_dot: 1.0, card }
            } else {
                SampleWeight::Area
            };
            out.extend(samples_from_mode_grid(&g, w)?);
        }
    }
    Ok(out)
}

fn invert(ctx: &mut Ctx, inputs: &[PathBuf], volumes: bool) -> Result<()> {
    let s = &ctx.setup;
    let mut files = read_kind(inputs, Kind::ModeGrid)?;
    if !s.modes.is_empty() {
        let keep: Vec<&str> = s.modes.iter().map(|m| m.label()).collect();
        files.retain(|(_, f)| f.metadata.get("tag").and_then(Value::as_str).is_some_and(|t| keep.contains(&t)));
    }
    if files.is_empty() {
        return Err(Error::config("inversion.modes", "no mode grids match the selected modes"));
    }
    let mut kgrid = s.kgrid()?;
    kgrid
        .check_nyquist(s.phantom.r_support())
        .map_err(|e| Error::config("inversion.kgrid", e.to_string()))?;
    let samples = trace_samples(&files, 1.0)?;
    let rep = accumulate(&samples, &mut kgrid);
    ctx.log(format!("deposited {} samples, {} outside the k-grid", rep.deposited, rep.out_of_extent));
    let solved = parallel::solve_parameters_par(&kgrid, s.solve);
    let mut tags: Vec<String> =
        files.iter().filter_map(|(_, f)| f.metadata.get("tag").and_then(Value::as_str).map(String::from)).collect();
    tags.sort();
    tags.dedup();
    let mut meta = Map::new();
    meta.insert("background".into(), background_json(&s.backgrounds[0]));
    meta.insert("modes".into(), json!(tags));
    meta.insert("order".into(), json!(["dmu", "dlambda", "drho"]));
    let f = solved_to_edtg(&solved, meta)?;
    let diag = ctx.out.join("diagnostics.csv");
    export::write_diagnostics(&diag, &kgrid, &solved)?;
    ctx.write("kgrid.edtg", &f)?;
    ctx.note("diagnostics.csv");
    if volumes {
        let n = kgrid.n;
        let vol = VolumeGrid { n, dr: 2.0 * PI / (n as f64 * kgrid.dy) };
        let mut inter = vec![C64::new(0.0, 0.0); 3 * n * n * n];
        for c in 0..3 {
            let mut comp = solved.component(c);
            hermitian_symmetrize(&kgrid, &mut comp);
            let spec: Vec<C64> = comp.into_iter().map(|v| v.unwrap_or_default()).collect();
            for (i, v) in spectral::volume_from_spectrum(&spec, vol).into_iter().enumerate() {
                inter[3 * i + c] = v;
            }
        }
        let mut meta = Map::new();
        meta.insert("order".into(), json!(["dmu", "dlambda", "drho"]));
        ctx.write("parameters.edtg", &volume_to_edtg(&inter, vol, 3, meta)?)?;
    }
    Ok(())
}

/// Hann ball of radius L/2 about the cube centre.
pub fn hann_ball(values: &mut [C64], vol: VolumeGrid) {
    let rad = 0.5 * vol.n as f64 * vol.dr;
    for (idx, v) in values.iter_mut().enumerate() {
        let n = vol.n;
        let r = [vol.coord(idx / (n * n)), vol.coord((idx / n) % n), vol.coord(idx % n)];
        let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() / rad;
        *v *= if d < 1.0 { 0.5 * (1.0 + (PI * d).cos()) } else { 0.0 };
    }
}

fn backproject(ctx: &mut Ctx, inputs: &[PathBuf]) -> Result<()> {
    let s = &ctx.setup;
    let tag = s.bp_mode.label();
    let mut files = read_kind(inputs, Kind::ModeGrid)?;
    files.retain(|(_, f)| f.metadata.get("tag").and_then(Value::as_str) == Some(tag));
    if files.is_empty() {
        return Err(Error::config("backprojection.mode", format!("no {tag} mode grids among the inputs")));
    }
    let samples = trace_samples(&files, s.bp_card)?;
    let mut vals = spectral::backproject_fft(&samples, s.volume, s.bp_gridding);
    if s.bp_window == WindowCfg::Hann {
        hann_ball(&mut vals, s.volume);
    }
    let mut meta = Map::new();
    meta.insert("tag".into(), json!(tag));
    meta.insert("samples".into(), json!(samples.len()));
    meta.insert("gridding".into(), json!(s.bp_gridding));
    meta.insert("window".into(), json!(s.bp_window));
    let vol = s.volume;
    ctx.write(&format!("backprojection_{tag}.edtg"), &volume_to_edtg(&vals, vol, 1, meta)?)?;
    export::write_central_slice(&ctx.out.join(format!("slice_{tag}.csv")), &vals, vol)?;
    ctx.note(&format!("slice_{tag}.csv"));
    Ok(())
}

/// Uniform points of a set by rejection from its bounding box; hemispheres
/// are sampled through their parametrisation by uniform ξ in the disc.
pub fn sample_points(set: &CoverageSet, n: usize, seed: u64) -> Result<Vec<Vec3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let CoverageSet::Hemisphere { mode, side, ks, kp } = *set {
        let k = |w: Wave| if w == Wave::S { ks } else { kp };
        let (ka, kb) = (k(mode.scattered()), k(mode.incident()));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let (a, b) = (ka * (2.0 * rng.random::<f64>() - 1.0), ka * (2.0 * rng.random::<f64>() - 1.0));
            let r2 = a * a + b * b;
            if r2 < ka * ka {
                out.push([a, b, side.sign() * (ka * ka - r2).sqrt() - kb]);
            }
        }
        return Ok(out);
    }
    let (lo, hi) = set.bounding_box()?;
    let mut out = Vec::with_capacity(n);
    let mut tries: u64 = 0;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * n as u64 + 100_000 {
            return Err(Error::Shape("coverage set is too thin for rejection sampling".into()));
        }
        let y: Vec3 = std::array::from_fn(|d| lo[d] + (hi[d] - lo[d]) * rng.random::<f64>());
        if set.contains(y) {
            out.push(y);
        }
    }
    Ok(out)
}

fn coverage(ctx: &mut Ctx, cfg: &RunConfig) -> Result<()> {
    if ctx.setup.coverage.is_empty() {
        return Err(Error::config("coverage.sets", "no coverage sets configured"));
    }
    let cc = &cfg.coverage;
    let ks = ctx.setup.backgrounds.iter().map(|b| b.ks).fold(0.0, f64::max);
    let dy = 4.2 * ks / cc.occupancy_n as f64;
    let mut rows = Vec::new();
    let sets = ctx.setup.coverage.clone();
    for (i, (name, set)) in sets.iter().enumerate() {
        let occ = occupancy(set, cc.occupancy_n, dy);
        let occupied = occ.iter().filter(|b| **b).count();
        let mut meta = Map::new();
        meta.insert("set".into(), json!(name));
        ctx.write(&format!("occupancy_{name}.edtg"), &occupancy_to_edtg(&occ, cc.occupancy_n, dy, meta)?)?;
        let pts = sample_points(set, cc.n_points, derive_seed(ctx.master, 2 * i as u64))?;
        export::write_points(&ctx.out.join(format!("points_{name}.csv")), &pts)?;
        ctx.note(&format!("points_{name}.csv"));
        let seed = derive_seed(ctx.master, 2 * i as u64 + 1);
        let (est, quad) = match set {
            // a surface: zero volume by construction
            CoverageSet::Hemisphere { .. } => {
                (VolumeEstimate { volume: 0.0, std_error: 0.0, hits: 0, samples: 0 }, Some(0.0))
            }
            _ => (parallel::coverage_volume_par(set, cc.n_samples, seed)?, coverage_volume_quadrature(set, 64).ok()),
        };
        ctx.log(format!("{name}: MC {:.6} ± {:.6}, quadrature {quad:?}", est.volume, est.std_error));
        rows.push(export::volume_row(name, &est, quad, occupied, seed));
    }
    export::write_volume_report(&ctx.out.join("volumes.csv"), rows)?;
    ctx.note("volumes.csv");
    Ok(())
}
