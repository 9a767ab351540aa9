use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scene::SceneName;
use crate::cgh::{ClaheParams, DoublePhaseOptions, InitialPhase, SynthesisParams, DEFAULT_BASE_DISTANCE, DEFAULT_PITCH, RGB_WAVELENGTHS};
use crate::radiance::{FitOptions, RenderOptions};
use crate::reconstruct::ReconstructionOptions;
use crate::{Error, Result};

/// Effective pipeline configuration. Every field has a default, so an empty
/// TOML file is a valid config; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Not part of the config hash.
    pub output_dir: PathBuf,
    pub scene: SceneConfig,
    pub radiance: RadianceConfig,
    pub view: ViewConfig,
    pub hologram: HologramConfig,
    pub clahe: ClaheConfig,
    pub reconstruct: ReconstructConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    Synthetic,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub source: SceneSource,
    pub name: SceneName,
    /// Pose file, used when `source = "dataset"`.
    pub dataset: Option<PathBuf>,
    pub n_views: usize,
    pub resolution: [usize; 2],
    pub fov_x_deg: f64,
    /// Camera distance from the origin.
    pub camera_radius: f64,
    /// Scene box half-width; the box is centered at the origin.
    pub half_extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadianceConfig {
    pub grid_resolution: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub final_lr_fraction: f64,
    pub rays_per_batch: usize,
    pub near: f64,
    pub far: f64,
    pub n_samples: usize,
    /// Weight of the compositing-weight distortion penalty.
    pub distortion_weight: f64,
    /// Weight of the per-ray opacity entropy penalty.
    pub opacity_weight: f64,
    /// Learning-rate multiplier for density parameters.
    pub density_lr_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewConfig {
    /// Polar angle from +Y, degrees.
    pub theta_deg: f64,
    /// Azimuth from +Z toward +X, degrees.
    pub phi_deg: f64,
    pub radius: f64,
    pub resolution: [usize; 2],
    pub max_resolution: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Random,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HologramConfig {
    pub pitch: f64,
    pub base_distance: f64,
    pub wavelengths: [f64; 3],
    pub n_layers: usize,
    /// Optical-axis distance covered by the scene depth range.
    pub depth_span: f64,
    /// Cycles per pixel along x and y.
    pub carrier: [f64; 2],
    pub initial_phase: PhaseMode,
    pub band_limit: bool,
    pub padding: bool,
    /// Gaussian pre-filter width around the carrier in cycles/pixel (0 disables).
    pub prefilter_sigma: f64,
    /// Relative amplitude below which the carrier phase is written.
    pub phase_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaheConfig {
    pub enabled: bool,
    pub tiles: [usize; 2],
    /// `inf` disables clipping.
    pub clip_limit: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Focus distances in meters; the first is the in-focus reference.
    pub focus: Vec<f64>,
    /// 4f aperture as a fraction of Nyquist.
    pub aperture: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            scene: SceneConfig::default(),
            radiance: RadianceConfig::default(),
            view: ViewConfig::default(),
            hologram: HologramConfig::default(),
            clahe: ClaheConfig::default(),
            reconstruct: ReconstructConfig::default(),
        }
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            source: SceneSource::Synthetic,
            name: SceneName::Spheres,
            dataset: None,
            n_views: 24,
            resolution: [128, 128],
            fov_x_deg: 40.0,
            camera_radius: 3.0,
            half_extent: 1.0,
        }
    }
}

impl Default for RadianceConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 64,
            iterations: 2000,
            learning_rate: 0.3,
            final_lr_fraction: 0.1,
            rays_per_batch: 4096,
            near: 1.0,
            far: 5.0,
            n_samples: 128,
            distortion_weight: 0.01,
            opacity_weight: 0.01,
            density_lr_scale: 10.0,
        }
    }
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            theta_deg: 75.0,
            phi_deg: 20.0,
            radius: 3.0,
            resolution: [256, 256],
            max_resolution: [1920, 1080],
        }
    }
}

impl Default for HologramConfig {
    fn default() -> Self {
        let dp = DoublePhaseOptions::default();
        Self {
            pitch: DEFAULT_PITCH,
            base_distance: DEFAULT_BASE_DISTANCE,
            wavelengths: RGB_WAVELENGTHS,
            n_layers: 8,
            depth_span: 0.1e-3,
            carrier: [0.125, 0.0],
            initial_phase: PhaseMode::Constant,
            band_limit: true,
            padding: true,
            prefilter_sigma: dp.prefilter_sigma,
            phase_floor: dp.phase_floor,
        }
    }
}

impl Default for ClaheConfig {
    fn default() -> Self {
        let p = ClaheParams::default();
        Self {
            enabled: true,
            tiles: [p.tiles.0, p.tiles.1],
            clip_limit: p.clip_limit,
            bins: p.bins,
        }
    }
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            focus: vec![DEFAULT_BASE_DISTANCE],
            aperture: 0.5,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least 1")))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scene;
        nonzero("scene.n_views", s.n_views)?;
        nonzero("scene.resolution", s.resolution[0].min(s.resolution[1]))?;
        positive("scene.camera_radius", s.camera_radius)?;
        positive("scene.half_extent", s.half_extent)?;
        if !(s.fov_x_deg > 0.0 && s.fov_x_deg < 180.0) {
            return Err(Error::Config(format!("scene.fov_x_deg {} not in (0, 180)", s.fov_x_deg)));
        }
        if s.source == SceneSource::Dataset && s.dataset.is_none() {
            return Err(Error::Config("scene.source = \"dataset\" needs scene.dataset".into()));
        }

        let r = &self.radiance;
        nonzero("radiance.grid_resolution", r.grid_resolution)?;
        nonzero("radiance.rays_per_batch", r.rays_per_batch)?;
        positive("radiance.learning_rate", r.learning_rate)?;
        positive("radiance.final_lr_fraction", r.final_lr_fraction)?;
        positive("radiance.density_lr_scale", r.density_lr_scale)?;
        for (name, w) in [("distortion_weight", r.distortion_weight), ("opacity_weight", r.opacity_weight)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("radiance.{name} {w}")));
            }
        }
        positive("radiance.far", r.far)?;
        if !(r.near >= 0.0 && r.near < r.far) {
            return Err(Error::Config(format!("radiance near {} / far {} (need 0 <= near < far)", r.near, r.far)));
        }
        if r.n_samples < 2 {
            return Err(Error::Config("radiance.n_samples must be at least 2".into()));
        }

        let v = &self.view;
        positive("view.radius", v.radius)?;
        nonzero("view.resolution", v.resolution[0].min(v.resolution[1]))?;
        if v.resolution[0] > v.max_resolution[0] || v.resolution[1] > v.max_resolution[1] {
            return Err(Error::Config(format!(
                "view.resolution {:?} exceeds view.max_resolution {:?}",
                v.resolution, v.max_resolution
            )));
        }
        if !(v.theta_deg.is_finite() && v.phi_deg.is_finite()) {
            return Err(Error::Config("view angles must be finite".into()));
        }

        let h = &self.hologram;
        positive("hologram.pitch", h.pitch)?;
        positive("hologram.base_distance", h.base_distance)?;
        for (i, w) in h.wavelengths.iter().enumerate() {
            positive(&format!("hologram.wavelengths[{i}]"), *w)?;
        }
        nonzero("hologram.n_layers", h.n_layers)?;
        if !(h.depth_span >= 0.0 && h.depth_span.is_finite()) {
            return Err(Error::Config(format!("hologram.depth_span {}", h.depth_span)));
        }
        if !(h.carrier[0].abs() < 0.5 && h.carrier[1].abs() < 0.5) {
            return Err(Error::Config(format!("hologram.carrier {:?} must be below 0.5 cycles/pixel", h.carrier)));
        }

        self.double_phase_options()
            .validate()
            .map_err(|e| Error::Config(format!("hologram: {e}")))?;
        self.clahe_params().validate().map_err(|e| Error::Config(format!("clahe: {e}")))?;

        let rc = &self.reconstruct;
        if rc.focus.is_empty() || rc.focus.iter().any(|z| !z.is_finite()) {
            return Err(Error::Config("reconstruct.focus needs one or more finite distances".into()));
        }
        if !(rc.aperture > 0.0 && rc.aperture <= 1.0) {
            return Err(Error::Config(format!("reconstruct.aperture {} not in (0, 1]", rc.aperture)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes to JSON");
        hex::encode(Sha256::digest(json))
    }

    /// Independent seed for a named random stream.
    pub fn sub_seed(&self, stream: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(stream.as_bytes());
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }

    pub fn clahe_params(&self) -> ClaheParams {
        ClaheParams {
            tiles: (self.clahe.tiles[0], self.clahe.tiles[1]),
            clip_limit: self.clahe.clip_limit,
            bins: self.clahe.bins,
        }
    }

    pub fn render_options(&self) -> RenderOptions {
        RenderOptions {
            near: self.radiance.near,
            far: self.radiance.far,
            n_samples: self.radiance.n_samples,
            ..Default::default()
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        let defaults = FitOptions::default();
        FitOptions {
            iterations: self.radiance.iterations,
            learning_rate: self.radiance.learning_rate,
            rays_per_batch: self.radiance.rays_per_batch,
            seed: self.sub_seed("fit"),
            final_lr_fraction: self.radiance.final_lr_fraction,
            distortion_weight: self.radiance.distortion_weight,
            opacity_weight: self.radiance.opacity_weight,
            density_lr_scale: self.radiance.density_lr_scale,
            render: RenderOptions {
                near: self.radiance.near,
                far: self.radiance.far,
                n_samples: self.radiance.n_samples,
                ..defaults.render
            },
        }
    }

    pub fn synthesis_params(&self) -> SynthesisParams {
        let h = &self.hologram;
        SynthesisParams {
            n_layers: h.n_layers,
            near: self.radiance.near,
            far: self.radiance.far,
            initial_phase: match h.initial_phase {
                PhaseMode::Random => InitialPhase::Random {
                    seed: self.sub_seed("diffuser"),
                },
                PhaseMode::Constant => InitialPhase::Constant,
            },
            pitch: h.pitch,
            base_distance: h.base_distance,
            depth_span: h.depth_span,
            wavelengths: h.wavelengths,
            band_limit: h.band_limit,
            padding: h.padding,
        }
    }

    pub fn double_phase_options(&self) -> DoublePhaseOptions {
        DoublePhaseOptions {
            prefilter_sigma: self.hologram.prefilter_sigma,
            phase_floor: self.hologram.phase_floor,
        }
    }

    pub fn reconstruction_options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            aperture: self.reconstruct.aperture,
            band_limit: self.hologram.band_limit,
            padding: self.hologram.padding,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_published_hologram_parameters() {
        let c = PipelineConfig::default();
        assert_eq!(c.hologram.pitch, 8.0e-6);
        assert_eq!(c.hologram.base_distance, 0.6e-3);
        assert_eq!(c.hologram.wavelengths, [650e-9, 532e-9, 450e-9]);
        assert_eq!(c.view.max_resolution, [1920, 1080]);
        c.validate().unwrap();
    }

    #[test]
    fn empty_toml_is_default_and_round_trips() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
        let mut c = PipelineConfig::default();
        c.clahe.clip_limit = f64::INFINITY;
        c.scene.dataset = Some("poses.jsonl".into());
        let back = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(PipelineConfig::from_toml("colour = 1"), Err(Error::Config(_))));
        assert!(PipelineConfig::from_toml("[hologram]\npitch = -1.0").is_err());
        assert!(PipelineConfig::from_toml("[hologram]\ncarrier = [0.5, 0.0]").is_err());
        assert!(PipelineConfig::from_toml("[radiance]\nnear = 6.0").is_err());
        assert!(PipelineConfig::from_toml("[view]\nresolution = [4000, 10]").is_err());
        assert!(PipelineConfig::from_toml("[scene]\nsource = \"dataset\"").is_err());
        assert!(PipelineConfig::from_toml("[clahe]\nclip_limit = 0.5").is_err());
        assert!(PipelineConfig::from_toml("[reconstruct]\nfocus = []").is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn sub_seeds_differ_by_stream() {
        let c = PipelineConfig::default();
        assert_ne!(c.sub_seed("fit"), c.sub_seed("scene"));
        assert_eq!(c.sub_seed("fit"), c.sub_seed("fit"));
    }
}
