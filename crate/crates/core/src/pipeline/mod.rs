//! End-to-end orchestration: synthetic scenes, configuration, the staged
//! run with persisted artifacts, and the timing bench.

mod bench;
mod config;
mod run;
mod scene;

pub use config::{
    ClaheConfig, HologramConfig, PhaseMode, PipelineConfig, RadianceConfig, ReconstructConfig, SceneConfig, SceneSource,
    ViewConfig,
};
pub use scene::{generate_synthetic_scene, orbit_pose, Hit, Primitive, Scene, SceneName, Shape, SyntheticScene};
pub use run::{
    depth_preview, fit_stage, holo_stage, load_dataset, load_view, recon_stage, recon_stem, render_stage, run, save_view,
    FitSummary, RunManifest, RunOutput, SeedRecord, Stage, StageRecord, ViewRequest, DEPTH_PFM, DEPTH_PNG, ENHANCED_STEM,
    GRID_FILE, HOLOGRAM_STEM, MANIFEST_FILE, VIEW_PFM, VIEW_PNG,
};
pub use bench::{bench_csv, parse_size, run_bench, BenchOp, BenchRow, DEFAULT_SIZES};
