//! Staged execution with persisted artifacts.
//!
//! Every stage hands its successor exactly what it writes to disk (grid at
//! `f32`, view and depth at `f32`, holograms at 16-bit), so resuming from
//! saved artifacts reproduces an uninterrupted run bit for bit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, SceneSource};
use super::scene::{generate_synthetic_scene, orbit_pose};
use crate::cgh::{enhance_hologram, synthesize, HologramSet, RgbdFrame};
use crate::field::{io, RealImage};
use crate::radiance::{checkpoint, fit, render_rgbd, Aabb, CameraPose, FitReport, Intrinsics, PosedDataset, RadianceGrid};
use crate::reconstruct::{reconstruct_intensity, ReconstructionReport};
use crate::{Error, Result};

pub const GRID_FILE: &str = "radiance.hfrg";
pub const VIEW_PFM: &str = "view.pfm";
pub const VIEW_PNG: &str = "view.png";
pub const DEPTH_PFM: &str = "depth.pfm";
pub const DEPTH_PNG: &str = "depth.png";
pub const HOLOGRAM_STEM: &str = "hologram";
pub const ENHANCED_STEM: &str = "hologram_clahe";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Fit,
    Render,
    Holo,
    Recon,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Fit => "fit",
            Stage::Render => "render",
            Stage::Holo => "holo",
            Stage::Recon => "recon",
        }
    }
}

/// The one input the prediction stages need: where to look from.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRequest {
    pub pose: CameraPose,
    pub resolution: [usize; 2],
    /// Reconstruction distances in meters; the first is the in-focus one.
    pub focus: Vec<f64>,
}

impl ViewRequest {
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        let v = &cfg.view;
        let k = Intrinsics::from_fov_x(cfg.scene.fov_x_deg.to_radians(), v.resolution[0], v.resolution[1]);
        Ok(Self {
            pose: orbit_pose(v.theta_deg.to_radians(), v.phi_deg.to_radians(), v.radius, k)?,
            resolution: v.resolution,
            focus: cfg.reconstruct.focus.clone(),
        })
    }
}

fn stage_err(cfg: &PipelineConfig, stage: Stage) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        e @ (Error::Stage { .. } | Error::Config(_)) => e,
        e => Error::Stage {
            stage: stage.name(),
            config_hash: cfg.hash(),
            source: Box::new(e),
        },
    }
}

/// Training views for the configured scene source.
pub fn load_dataset(cfg: &PipelineConfig) -> Result<PosedDataset> {
    let s = &cfg.scene;
    match s.source {
        SceneSource::Synthetic => Ok(generate_synthetic_scene(
            s.name,
            s.n_views,
            s.resolution,
            s.fov_x_deg.to_radians(),
            s.camera_radius,
            cfg.radiance.far,
            cfg.sub_seed("scene"),
        )?
        .dataset),
        SceneSource::Dataset => {
            let path = s.dataset.as_ref().ok_or_else(|| Error::Config("scene.dataset is not set".into()))?;
            PosedDataset::load(path)
        }
    }
}

/// Fits a fresh grid to the configured scene. The returned grid is already
/// rounded to checkpoint precision.
pub fn fit_stage(cfg: &PipelineConfig) -> Result<(RadianceGrid, FitReport)> {
    let run = || {
        let data = load_dataset(cfg)?;
        let n = cfg.radiance.grid_resolution;
        let mut grid = RadianceGrid::new([n; 3], Aabb::cube(cfg.scene.half_extent))?;
        let report = fit(&mut grid, &data, &cfg.fit_options())?;
        Ok((grid.to_f32_precision(), report))
    };
    run().map_err(stage_err(cfg, Stage::Fit))
}

/// Novel view and depth at the requested pose, rounded to `f32`.
pub fn render_stage(cfg: &PipelineConfig, grid: &RadianceGrid, request: &ViewRequest) -> Result<(RealImage, RealImage)> {
    let run = || {
        let (rgb, depth) = render_rgbd(grid, &request.pose, &cfg.render_options())?;
        Ok((rgb.to_f32_precision(), depth.to_f32_precision()))
    };
    run().map_err(stage_err(cfg, Stage::Render))
}

/// Layered synthesis, carrier, double-phase encoding and (when enabled)
/// enhancement. Both sets come back quantized to their stored 16-bit levels.
pub fn holo_stage(cfg: &PipelineConfig, rgb: &RealImage, depth: &RealImage) -> Result<(HologramSet, Option<HologramSet>)> {
    let run = || {
        let frame = RgbdFrame::new(rgb.clamp01(), depth.clone())?;
        let complex = synthesize(&frame, &cfg.synthesis_params())?;
        let encoded = complex
            .with_carrier(cfg.hologram.carrier)?
            .encode_double_phase(&cfg.double_phase_options())?
            .quantized();
        let enhanced = if cfg.clahe.enabled {
            Some(enhance_hologram(&encoded, &cfg.clahe_params())?.quantized())
        } else {
            None
        };
        Ok((encoded, enhanced))
    };
    run().map_err(stage_err(cfg, Stage::Holo))
}

/// One report per focus distance.
pub fn recon_stage(
    cfg: &PipelineConfig,
    set: &HologramSet,
    focus: &[f64],
    reference: Option<&RealImage>,
) -> Result<Vec<ReconstructionReport>> {
    let opts = cfg.reconstruction_options();
    let reference = reference.map(RealImage::clamp01);
    focus
        .iter()
        .map(|&z| reconstruct_intensity(set, z, &opts, reference.as_ref()))
        .collect::<Result<_>>()
        .map_err(stage_err(cfg, Stage::Recon))
}

/// Depth rescaled from `[near, far]` to `[0, 1]` for viewing.
pub fn depth_preview(depth: &RealImage, near: f64, far: f64) -> RealImage {
    depth.map(|d| ((d - near) / (far - near)).clamp(0.0, 1.0))
}

pub fn save_view(dir: &Path, rgb: &RealImage, depth: &RealImage, near: f64, far: f64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths = [VIEW_PFM, VIEW_PNG, DEPTH_PFM, DEPTH_PNG].map(|f| dir.join(f));
    io::write_pfm(&paths[0], rgb)?;
    io::write_png_srgb(&paths[1], &rgb.clamp01())?;
    io::write_pfm(&paths[2], depth)?;
    io::write_png16(&paths[3], &depth_preview(depth, near, far))?;
    Ok(paths.to_vec())
}

pub fn load_view(dir: &Path) -> Result<(RealImage, RealImage)> {
    Ok((io::read_pfm(dir.join(VIEW_PFM))?, io::read_pfm(dir.join(DEPTH_PFM))?))
}

/// File stem of the report for focus index `i`.
pub fn recon_stem(prefix: &str, i: usize) -> String {
    format!("{prefix}_{i}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub iterations: usize,
    pub final_loss: f64,
    pub final_train_psnr: f64,
    pub final_distortion: f64,
    pub final_opacity_entropy: f64,
}

impl From<&FitReport> for FitSummary {
    fn from(r: &FitReport) -> Self {
        Self {
            iterations: r.losses.len(),
            final_loss: r.losses.last().copied().unwrap_or(f64::NAN),
            final_train_psnr: r.final_train_psnr,
            final_distortion: r.final_distortion,
            final_opacity_entropy: r.final_opacity_entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub scene: u64,
    pub fit: u64,
    pub diffuser: u64,
}

/// `manifest.json`: what ran, with which config, how long it took and what
/// it wrote. Timings vary between runs; every other artifact does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seeds: SeedRecord,
    pub stages: Vec<StageRecord>,
    pub fit: Option<FitSummary>,
    /// PSNR in dB of the first focus distance (enhanced set when enabled).
    pub psnr_at_focus: Option<f64>,
}

impl RunManifest {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            seeds: SeedRecord {
                master: cfg.seed,
                scene: cfg.sub_seed("scene"),
                fit: cfg.sub_seed("fit"),
                diffuser: cfg.sub_seed("diffuser"),
            },
            stages: Vec::new(),
            fit: None,
            psnr_at_focus: None,
        }
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }

    fn record(&mut self, stage: Stage, start: Instant, artifacts: &[PathBuf], out: &Path) {
        let seconds = start.elapsed().as_secs_f64();
        log::info!("stage {} took {seconds:.2} s", stage.name());
        self.stages.push(StageRecord {
            stage,
            seconds,
            artifacts: artifacts
                .iter()
                .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
                .collect(),
        });
    }
}

/// Everything a full run produced, kept in memory for callers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: RadianceGrid,
    pub view: RealImage,
    pub depth: RealImage,
    pub hologram: HologramSet,
    pub enhanced: Option<HologramSet>,
    /// Reports of the unenhanced hologram, one per focus distance.
    pub plain_reports: Vec<ReconstructionReport>,
    /// Reports of the enhanced hologram (empty when enhancement is off).
    pub enhanced_reports: Vec<ReconstructionReport>,
    pub manifest: RunManifest,
}

fn save_reports(dir: &Path, prefix: &str, reports: &[ReconstructionReport], paths: &mut Vec<PathBuf>) -> Result<()> {
    for (i, r) in reports.iter().enumerate() {
        let stem = recon_stem(prefix, i);
        paths.push(r.save(dir, &stem)?);
        paths.push(dir.join(format!("{stem}.png")));
    }
    Ok(())
}

/// Scene to reconstruction. Uses `grid` when given, otherwise fits one;
/// either way it is saved as `radiance.hfrg` in the output directory.
pub fn run(cfg: &PipelineConfig, grid: Option<RadianceGrid>) -> Result<RunOutput> {
    cfg.validate()?;
    let out = cfg.output_dir.as_path();
    let save_err = |stage| stage_err(cfg, stage);
    let mut manifest = RunManifest::new(cfg);
    log::info!("config {}", manifest.config_hash);

    let t = Instant::now();
    let grid = match grid {
        Some(g) => g.to_f32_precision(),
        None => {
            let (g, report) = fit_stage(cfg)?;
            manifest.fit = Some(FitSummary::from(&report));
            g
        }
    };
    let grid_path = out.join(GRID_FILE);
    fs::create_dir_all(out)
        .map_err(Error::from)
        .and_then(|_| checkpoint::save(&grid_path, &grid))
        .map_err(save_err(Stage::Fit))?;
    manifest.record(Stage::Fit, t, &[grid_path], out);

    let t = Instant::now();
    let request = ViewRequest::from_config(cfg)?;
    let (view, depth) = render_stage(cfg, &grid, &request)?;
    let paths = save_view(out, &view, &depth, cfg.radiance.near, cfg.radiance.far).map_err(save_err(Stage::Render))?;
    manifest.record(Stage::Render, t, &paths, out);

    let t = Instant::now();
    let (hologram, enhanced) = holo_stage(cfg, &view, &depth)?;
    let mut paths = Vec::new();
    let save_holo = |paths: &mut Vec<PathBuf>| -> Result<()> {
        paths.push(hologram.save(out, HOLOGRAM_STEM)?);
        if let Some(e) = &enhanced {
            paths.push(e.save(out, ENHANCED_STEM)?);
        }
        Ok(())
    };
    save_holo(&mut paths).map_err(save_err(Stage::Holo))?;
    manifest.record(Stage::Holo, t, &paths, out);

    let t = Instant::now();
    let plain_reports = recon_stage(cfg, &hologram, &request.focus, Some(&view))?;
    let enhanced_reports = match &enhanced {
        Some(e) => recon_stage(cfg, e, &request.focus, Some(&view))?,
        None => Vec::new(),
    };
    let mut paths = Vec::new();
    save_reports(out, "recon_plain", &plain_reports, &mut paths)
        .and_then(|_| save_reports(out, "recon", &enhanced_reports, &mut paths))
        .map_err(save_err(Stage::Recon))?;
    manifest.record(Stage::Recon, t, &paths, out);

    let headline = enhanced_reports.first().or(plain_reports.first());
    manifest.psnr_at_focus = headline.and_then(|r| r.psnr).map(|p| p.db);
    let total: f64 = manifest.stages.iter().map(|s| s.seconds).sum();
    log::info!("pipeline finished in {total:.1} s");
    manifest.save(out)?;

    Ok(RunOutput {
        grid,
        view,
        depth,
        hologram,
        enhanced,
        plain_reports,
        enhanced_reports,
        manifest,
    })
}
