use serde::{Deserialize, Serialize};

use crate::field::RealImage;
use crate::{Error, Result};

/// Contrast-limited adaptive histogram equalization settings.
///
/// `clip_limit` is a multiple of the uniform bin height (`pixels / bins`);
/// `f64::INFINITY` disables clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheParams {
    pub tiles: (usize, usize),
    #[serde(with = "clip_serde")]
    pub clip_limit: f64,
    pub bins: usize,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            tiles: (8, 8),
            clip_limit: 2.0,
            bins: 256,
        }
    }
}

// JSON has no infinity; store unlimited clipping as null
mod clip_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<()> {
        if self.tiles.0 == 0 || self.tiles.1 == 0 {
            return Err(Error::InvalidParameter(format!("tile grid {:?}", self.tiles)));
        }
        if !(self.clip_limit >= 1.0) {
            return Err(Error::InvalidParameter(format!("clip limit {} (need >= 1)", self.clip_limit)));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!("{} bins (need >= 2)", self.bins)));
        }
        Ok(())
    }
}

/// Per-tile transfer function.
#[derive(Debug, Clone, PartialEq)]
enum TileMap {
    /// Single-valued histogram.
    Identity,
    Lut(Vec<f64>),
}

impl TileMap {
    fn apply(&self, v: f64, bins: usize) -> f64 {
        match self {
            TileMap::Identity => v.clamp(0.0, 1.0),
            TileMap::Lut(lut) => lut[bin_of(v, bins)],
        }
    }
}

pub(crate) fn bin_of(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

fn tile_map(hist: &mut [f64], pixels: f64, clip_limit: f64) -> TileMap {
    if hist.iter().filter(|&&h| h > 0.0).count() <= 1 {
        return TileMap::Identity;
    }
    let bins = hist.len() as f64;
    if clip_limit.is_finite() {
        let limit = clip_limit * pixels / bins;
        let mut excess = 0.0;
        for h in hist.iter_mut() {
            if *h > limit {
                excess += *h - limit;
                *h = limit;
            }
        }
        let share = excess / bins;
        hist.iter_mut().for_each(|h| *h += share);
    }
    let mut acc = 0.0;
    let lut = hist
        .iter()
        .map(|h| {
            acc += h;
            (acc / pixels).min(1.0)
        })
        .collect();
    TileMap::Lut(lut)
}

/// Splits `n` into `parts` contiguous ranges of near-equal length.
fn tile_bounds(n: usize, parts: usize) -> Vec<(usize, usize)> {
    (0..parts).map(|i| (i * n / parts, (i + 1) * n / parts)).collect()
}

/// Neighbouring tile indices and the weight of the second one for a pixel
/// at `pos` (pixel-center coordinate) given tile centers.
fn locate(pos: f64, centers: &[f64]) -> (usize, usize, f64) {
    let last = centers.len() - 1;
    if pos <= centers[0] {
        return (0, 0, 0.0);
    }
    if pos >= centers[last] {
        return (last, last, 0.0);
    }
    let i = centers.partition_point(|&c| c <= pos) - 1;
    let t = (pos - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, t)
}

fn clahe_plane(img: &RealImage, p: &ClaheParams) -> RealImage {
    let (w, h) = (img.width(), img.height());
    let (tx, ty) = p.tiles;
    let xs = tile_bounds(w, tx);
    let ys = tile_bounds(h, ty);
    let mut maps = Vec::with_capacity(tx * ty);
    for &(y0, y1) in &ys {
        for &(x0, x1) in &xs {
            let mut hist = vec![0.0; p.bins];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[bin_of(img.get(x, y, 0), p.bins)] += 1.0;
                }
            }
            let pixels = ((x1 - x0) * (y1 - y0)) as f64;
            maps.push(tile_map(&mut hist, pixels, p.clip_limit));
        }
    }
    let cx: Vec<f64> = xs.iter().map(|&(a, b)| (a + b) as f64 / 2.0).collect();
    let cy: Vec<f64> = ys.iter().map(|&(a, b)| (a + b) as f64 / 2.0).collect();

    let mut out = img.clone();
    for y in 0..h {
        let (j0, j1, ty_w) = locate(y as f64 + 0.5, &cy);
        for x in 0..w {
            let (i0, i1, tx_w) = locate(x as f64 + 0.5, &cx);
            let v = img.get(x, y, 0);
            let m = |i: usize, j: usize| maps[j * tx + i].apply(v, p.bins);
            let top = (1.0 - tx_w) * m(i0, j0) + tx_w * m(i1, j0);
            let bottom = (1.0 - tx_w) * m(i0, j1) + tx_w * m(i1, j1);
            out.set(x, y, 0, ((1.0 - ty_w) * top + ty_w * bottom).clamp(0.0, 1.0));
        }
    }
    out
}

/// Tile-wise clipped histogram equalization with bilinear blending of the
/// tile mappings between tile centers. Multi-channel images are processed
/// per channel. Output is in `[0, 1]`.
pub fn clahe(img: &RealImage, params: &ClaheParams) -> Result<RealImage> {
    params.validate()?;
    if img.width() < params.tiles.0 || img.height() < params.tiles.1 {
        return Err(Error::Dimension(format!(
            "{}x{} image is smaller than the {}x{} tile grid",
            img.width(),
            img.height(),
            params.tiles.0,
            params.tiles.1
        )));
    }
    if img.channels() == 1 {
        return Ok(clahe_plane(img, params));
    }
    let planes = (0..img.channels())
        .map(|c| img.channel(c).map(|p| clahe_plane(&p, params)))
        .collect::<Result<Vec<_>>>()?;
    RealImage::from_planes(&planes)
}
