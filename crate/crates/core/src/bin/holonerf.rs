//! Command-line front end. Exit status: 0 success, 2 config error,
//! 3 stage failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holonerf::cgh::HologramSet;
use holonerf::field::io;
use holonerf::pipeline::{
    self, bench_csv, holo_stage, load_view, parse_size, recon_stage, recon_stem, render_stage, run_bench, save_view,
    BenchOp, FitSummary, PipelineConfig, ViewRequest, DEFAULT_SIZES, ENHANCED_STEM, GRID_FILE, HOLOGRAM_STEM,
};
use holonerf::radiance::checkpoint;
use holonerf::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "holonerf", version, about = "Radiance fields to full-color holograms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective config as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// CLAHE tile grid, e.g. 8x8.
    #[arg(long, value_name = "TXxTY", global = true)]
    clahe_tiles: Option<String>,
    /// CLAHE clip limit in multiples of the uniform bin height (`inf` disables clipping).
    #[arg(long, value_name = "FLOAT", global = true)]
    clahe_clip: Option<f64>,
    /// CLAHE histogram bins.
    #[arg(long, value_name = "INT", global = true)]
    clahe_bins: Option<usize>,
    /// Skip CLAHE enhancement.
    #[arg(long, global = true)]
    no_clahe: bool,
    /// Reconstruction distances in meters, comma separated or repeated.
    #[arg(long, value_delimiter = ',', value_name = "METERS", global = true)]
    focus: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a radiance grid to the configured scene.
    Fit,
    /// Render the configured view and its depth from a fitted grid.
    Render {
        /// Grid checkpoint (default: <out>/radiance.hfrg).
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Synthesize, encode and enhance holograms from a rendered view.
    Holo {
        /// Directory holding view.pfm and depth.pfm (default: <out>).
        #[arg(long)]
        view_dir: Option<PathBuf>,
    },
    /// Reconstruct a hologram set at one or more focus distances.
    Recon {
        /// Hologram sidecar JSON (default: the enhanced set in <out>, else the plain one).
        #[arg(long)]
        hologram: Option<PathBuf>,
        /// Linear RGB reference (PFM) for PSNR; defaults to <out>/view.pfm when present.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Skip PSNR even when a reference is available.
        #[arg(long)]
        no_reference: bool,
    },
    /// Run every stage: fit (unless --grid), render, holo, recon.
    Pipeline {
        /// Reuse this grid instead of fitting.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Time fft2, propagate and synthesize; prints CSV.
    Bench {
        /// Sizes as WxH (default 512x512 1024x1024 1920x1080).
        #[arg(long, num_args = 1..)]
        sizes: Option<Vec<String>>,
        /// Subset of fft2, propagate, synthesize.
        #[arg(long, num_args = 1..)]
        ops: Option<Vec<String>>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Also write the CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn effective_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(o) = &g.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = &g.clahe_tiles {
        let (tx, ty) = parse_size(t).map_err(|_| Error::Config(format!("--clahe-tiles `{t}` is not TXxTY")))?;
        cfg.clahe.tiles = [tx, ty];
    }
    if let Some(c) = g.clahe_clip {
        cfg.clahe.clip_limit = c;
    }
    if let Some(b) = g.clahe_bins {
        cfg.clahe.bins = b;
    }
    if g.no_clahe {
        cfg.clahe.enabled = false;
    }
    if let Some(f) = &g.focus {
        cfg.reconstruct.focus = f.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn stage<T>(cfg: &PipelineConfig, name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ (Error::Stage { .. } | Error::Config(_)) => e,
        e => Error::Stage {
            stage: name,
            config_hash: cfg.hash(),
            source: Box::new(e),
        },
    })
}

fn execute(cfg: &PipelineConfig, command: Command) -> Result<()> {
    let out = cfg.output_dir.as_path();
    match command {
        Command::Fit => {
            let (grid, report) = pipeline::fit_stage(cfg)?;
            stage(cfg, "fit", (|| {
                fs::create_dir_all(out)?;
                checkpoint::save(out.join(GRID_FILE), &grid)?;
                write_json(&out.join("fit.json"), &FitSummary::from(&report))
            })())?;
            println!("{}", out.join(GRID_FILE).display());
        }
        Command::Render { grid } => {
            let path = grid.unwrap_or_else(|| out.join(GRID_FILE));
            let grid = stage(cfg, "render", checkpoint::load(&path))?;
            let request = ViewRequest::from_config(cfg)?;
            let (rgb, depth) = render_stage(cfg, &grid, &request)?;
            stage(cfg, "render", save_view(out, &rgb, &depth, cfg.radiance.near, cfg.radiance.far))?;
        }
        Command::Holo { view_dir } => {
            let dir = view_dir.unwrap_or_else(|| out.to_path_buf());
            let (rgb, depth) = stage(cfg, "holo", load_view(&dir))?;
            let (plain, enhanced) = holo_stage(cfg, &rgb, &depth)?;
            stage(cfg, "holo", (|| {
                println!("{}", plain.save(out, HOLOGRAM_STEM)?.display());
                if let Some(e) = &enhanced {
                    println!("{}", e.save(out, ENHANCED_STEM)?.display());
                }
                Ok(())
            })())?;
        }
        Command::Recon {
            hologram,
            reference,
            no_reference,
        } => {
            let path = hologram.unwrap_or_else(|| {
                let enhanced = out.join(format!("{ENHANCED_STEM}.json"));
                if enhanced.exists() {
                    enhanced
                } else {
                    out.join(format!("{HOLOGRAM_STEM}.json"))
                }
            });
            let set = stage(cfg, "recon", HologramSet::load(&path))?;
            let reference = match (no_reference, reference) {
                (true, _) => None,
                (false, Some(r)) => Some(stage(cfg, "recon", io::read_pfm(r))?),
                (false, None) => {
                    let default = out.join(pipeline::VIEW_PFM);
                    match default.exists() {
                        true => Some(stage(cfg, "recon", io::read_pfm(default))?),
                        false => None,
                    }
                }
            };
            let reports = recon_stage(cfg, &set, &cfg.reconstruct.focus, reference.as_ref())?;
            for (i, r) in reports.iter().enumerate() {
                let p = stage(cfg, "recon", r.save(out, &recon_stem("recon", i)))?;
                match r.psnr {
                    Some(db) => println!("{} focus {} m psnr {:.2} dB", p.display(), r.focus, db.db),
                    None => println!("{} focus {} m", p.display(), r.focus),
                }
            }
        }
        Command::Pipeline { grid } => {
            let grid = grid.map(|p| stage(cfg, "fit", checkpoint::load(p))).transpose()?;
            let run = pipeline::run(cfg, grid)?;
            if let Some(db) = run.manifest.psnr_at_focus {
                println!("psnr at focus {db:.2} dB");
            }
            println!("{}", out.join(pipeline::MANIFEST_FILE).display());
        }
        Command::Bench {
            sizes,
            ops,
            repeats,
            csv,
        } => {
            let sizes = match sizes {
                Some(s) => s.iter().map(|s| parse_size(s)).collect::<Result<Vec<_>>>()?,
                None => DEFAULT_SIZES.to_vec(),
            };
            let ops = match ops {
                Some(o) => o.iter().map(|s| s.parse()).collect::<Result<Vec<BenchOp>>>()?,
                None => BenchOp::ALL.to_vec(),
            };
            let rows = stage(cfg, "bench", run_bench(&ops, &sizes, repeats, cfg.seed))?;
            let table = bench_csv(&rows)?;
            print!("{table}");
            if let Some(p) = csv {
                fs::write(p, &table)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = effective_config(&cli.global).and_then(|cfg| {
        if cli.global.print_config {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        match cli.command {
            Some(c) => execute(&cfg, c),
            None => Err(Error::Config("no subcommand given (see --help)".into())),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
