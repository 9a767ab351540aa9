//! Posed image collections and the pose-file format.
//!
//! A pose file is JSON lines, one record per image:
//!
//! ```text
//! {"image_path": "views/000.png", "camera_to_world": [[..4..],[..],[..],[..]], "focal_px": 154.5}
//! ```
//!
//! `image_path` is resolved relative to the pose file. `camera_to_world`
//! uses the camera convention of [`CameraPose`] (looking down local -Z).
//! Images may be PNG (sRGB, linearized on load) or PFM (linear).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{CameraPose, Intrinsics};
use crate::field::{io, RealImage};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PosedView {
    pub image: RealImage,
    pub pose: CameraPose,
}

/// Non-empty set of equally sized RGB images with their poses.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedDataset {
    views: Vec<PosedView>,
}

impl PosedDataset {
    pub fn new(views: Vec<PosedView>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidParameter("dataset has no views".into()))?;
        let (w, h) = (first.image.width(), first.image.height());
        for (i, v) in views.iter().enumerate() {
            if v.image.width() != w || v.image.height() != h || v.image.channels() != 3 {
                return Err(Error::Mismatch(format!(
                    "view {i} is {}x{}x{}, expected {w}x{h}x3",
                    v.image.width(),
                    v.image.height(),
                    v.image.channels()
                )));
            }
            if v.pose.intrinsics.width != w || v.pose.intrinsics.height != h {
                return Err(Error::Mismatch(format!("view {i} intrinsics do not match its image")));
            }
            v.pose.validate()?;
        }
        Ok(Self { views })
    }

    pub fn views(&self) -> &[PosedView] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    /// True when every view uses the same intrinsics.
    pub fn shared_intrinsics(&self) -> bool {
        let k = self.views[0].pose.intrinsics;
        self.views.iter().all(|v| v.pose.intrinsics == k)
    }

    /// Writes images as PFM next to a pose file.
    pub fn save(&self, pose_file: impl AsRef<Path>) -> Result<()> {
        let pose_file = pose_file.as_ref();
        let dir = pose_file.parent().unwrap_or(Path::new("."));
        let mut records = Vec::with_capacity(self.views.len());
        for (i, v) in self.views.iter().enumerate() {
            let name = format!("view_{i:03}.pfm");
            io::write_pfm(dir.join(&name), &v.image)?;
            records.push(PoseRecord::from_pose(name, &v.pose));
        }
        write_pose_file(pose_file, &records)
    }

    pub fn load(pose_file: impl AsRef<Path>) -> Result<Self> {
        let pose_file = pose_file.as_ref();
        let dir = pose_file.parent().unwrap_or(Path::new("."));
        let mut views = Vec::new();
        for record in read_pose_file(pose_file)? {
            let path = dir.join(&record.image_path);
            let image = load_image(&path)?;
            let k = Intrinsics::centered(record.focal_px, image.width(), image.height());
            let pose = CameraPose::from_matrix(&record.matrix(), k)?;
            views.push(PosedView { image, pose });
        }
        Self::new(views)
    }
}

fn load_image(path: &Path) -> Result<RealImage> {
    let is_pfm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    let img = if is_pfm {
        io::read_pfm(path)?
    } else {
        io::read_png_linear(path)?
    };
    if img.channels() != 3 {
        return Err(Error::format(path, "expected an RGB image"));
    }
    Ok(img)
}

/// One line of a pose file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub image_path: String,
    pub camera_to_world: [[f64; 4]; 4],
    pub focal_px: f64,
}

impl PoseRecord {
    pub fn from_pose(image_path: impl Into<String>, pose: &CameraPose) -> Self {
        let m = pose.to_matrix();
        Self {
            image_path: image_path.into(),
            camera_to_world: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])),
            focal_px: pose.intrinsics.focal,
        }
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, c| self.camera_to_world[r][c])
    }
}

pub fn read_pose_file(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn write_pose_file(path: impl AsRef<Path>, records: &[PoseRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct Transforms {
    camera_angle_x: f64,
    frames: Vec<TransformFrame>,
}

#[derive(Debug, Deserialize)]
struct TransformFrame {
    file_path: String,
    transform_matrix: [[f64; 4]; 4],
}

/// Converts a NeRF-style `transforms.json` into a pose file.
///
/// Frame paths without an extension get `.png`. The focal length is derived
/// from `camera_angle_x` and each image's width. Returns the records written.
pub fn convert_transforms(transforms: impl AsRef<Path>, pose_file: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    let transforms = transforms.as_ref();
    let pose_file = pose_file.as_ref();
    let parsed: Transforms = serde_json::from_str(&fs::read_to_string(transforms)?)
        .map_err(|e| Error::format(transforms, e.to_string()))?;
    let src_dir = transforms.parent().unwrap_or(Path::new("."));
    let out_dir = pose_file.parent().unwrap_or(Path::new("."));

    let mut records = Vec::with_capacity(parsed.frames.len());
    for frame in &parsed.frames {
        let mut rel = PathBuf::from(&frame.file_path);
        if rel.extension().is_none() {
            rel.set_extension("png");
        }
        let abs = src_dir.join(&rel);
        let (width, _) = image::image_dimensions(&abs)?;
        let focal = 0.5 * width as f64 / (0.5 * parsed.camera_angle_x).tan();
        let image_path = relative_to(&abs, out_dir);
        records.push(PoseRecord {
            image_path,
            camera_to_world: frame.transform_matrix,
            focal_px: focal,
        });
    }
    write_pose_file(pose_file, &records)?;
    Ok(records)
}

fn relative_to(path: &Path, base: &Path) -> String {
    let abs = |p: &Path| fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    let (path_abs, base_abs) = (abs(path), abs(base));
    match path_abs.strip_prefix(&base_abs) {
        Ok(rel) => rel.to_string_lossy().into_owned(),
        Err(_) => path_abs.to_string_lossy().into_owned(),
    }
}
