//! File interchange: PFM for float data, PNG for 8-bit sRGB and 16-bit
//! linear grayscale.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};
use num_complex::Complex64;

use super::{ComplexField, RealImage};
use crate::{Error, Result};

/// Writes a little-endian PFM (scale -1.0). Rows are stored bottom-up.
pub fn write_pfm(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    let path = path.as_ref();
    let tag = if img.channels() == 3 { "PF" } else { "Pf" };
    let mut buf = Vec::with_capacity(32 + img.data().len() * 4);
    write!(buf, "{tag}\n{} {}\n-1.0\n", img.width(), img.height())?;
    let row_len = img.width() * img.channels();
    for row in img.data().chunks(row_len).rev() {
        for &v in row {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<RealImage> {
    let path = path.as_ref();
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut token = || -> Result<String> {
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(Error::format(path, "truncated header"));
            }
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(t.to_string());
            }
        }
    };
    let channels = match token()?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(path, format!("bad magic {other:?}"))),
    };
    let dims = token()?;
    let mut it = dims.split_whitespace().map(str::parse::<usize>);
    let (w, h) = match (it.next(), it.next()) {
        (Some(Ok(w)), Some(Ok(h))) => (w, h),
        _ => return Err(Error::format(path, format!("bad dimensions {dims:?}"))),
    };
    let scale: f64 = token()?
        .parse()
        .map_err(|_| Error::format(path, "bad scale"))?;
    let little = scale < 0.0;

    let mut raw = Vec::new();
    reader.read_to_end(&mut raw)?;
    let n = w * h * channels;
    if raw.len() < n * 4 {
        return Err(Error::format(path, "truncated pixel data"));
    }
    let values: Vec<f64> = raw[..n * 4]
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b) as f64
            } else {
                f32::from_be_bytes(b) as f64
            }
        })
        .collect();
    let row_len = w * channels;
    let data = values.chunks(row_len).rev().flatten().copied().collect();
    RealImage::from_data(w, h, channels, data)
}

/// Paths of the two planes holding a complex field: `<stem>.re.pfm`, `<stem>.im.pfm`.
pub fn complex_pfm_paths(stem: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let stem = stem.as_ref().to_string_lossy().into_owned();
    (
        PathBuf::from(format!("{stem}.re.pfm")),
        PathBuf::from(format!("{stem}.im.pfm")),
    )
}

pub fn write_complex_pfm(stem: impl AsRef<Path>, f: &ComplexField) -> Result<()> {
    let (re_path, im_path) = complex_pfm_paths(stem);
    let re = RealImage::from_data(f.width(), f.height(), 1, f.data().iter().map(|z| z.re).collect())?;
    let im = RealImage::from_data(f.width(), f.height(), 1, f.data().iter().map(|z| z.im).collect())?;
    write_pfm(re_path, &re)?;
    write_pfm(im_path, &im)
}

pub fn read_complex_pfm(stem: impl AsRef<Path>, pitch: f64) -> Result<ComplexField> {
    let (re_path, im_path) = complex_pfm_paths(stem);
    let re = read_pfm(&re_path)?;
    let im = read_pfm(&im_path)?;
    if !re.same_shape(&im) || re.channels() != 1 {
        return Err(Error::format(im_path, "real and imaginary planes differ"));
    }
    let data = re
        .data()
        .iter()
        .zip(im.data())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    ComplexField::from_data(re.width(), re.height(), pitch, data)
}

pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn linear_to_srgb(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Loads an 8-bit PNG (or any format `image` decodes) as linear RGB.
pub fn read_png_linear(path: impl AsRef<Path>) -> Result<RealImage> {
    let img = image::open(path.as_ref())?.to_rgb8();
    let (w, h) = img.dimensions();
    let lut: Vec<f64> = (0..256).map(|i| srgb_to_linear(i as f64 / 255.0)).collect();
    let data = img.into_raw().into_iter().map(|b| lut[b as usize]).collect();
    RealImage::from_data(w as usize, h as usize, 3, data)
}

/// Writes linear values as 8-bit sRGB PNG (1 or 3 channels).
pub fn write_png_srgb(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    let quant = |v: f64| (linear_to_srgb(v) * 255.0).round() as u8;
    write_png8(path, img, quant)
}

/// Writes values as 8-bit PNG without a transfer curve (masks, normalized depth).
pub fn write_png_linear8(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    write_png8(path, img, |v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

fn write_png8(path: impl AsRef<Path>, img: &RealImage, quant: impl Fn(f64) -> u8) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let raw: Vec<u8> = img.data().iter().map(|&v| quant(v)).collect();
    if img.channels() == 3 {
        ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw)
            .expect("buffer sized from image")
            .save(path)?;
    } else {
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw)
            .expect("buffer sized from image")
            .save(path)?;
    }
    Ok(())
}

/// Quantization used for 16-bit grayscale: `round(v * 65535)`.
pub fn quantize16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Writes a single-channel image in `[0,1]` as 16-bit grayscale PNG.
pub fn write_png16(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::Unsupported("16-bit PNG output is single-channel".into()));
    }
    let raw: Vec<u16> = img.data().iter().map(|&v| quantize16(v)).collect();
    ImageBuffer::<Luma<u16>, _>::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer sized from image")
        .save(path)?;
    Ok(())
}

pub fn read_png16(path: impl AsRef<Path>) -> Result<RealImage> {
    let img = image::open(path.as_ref())?.to_luma16();
    let (w, h) = img.dimensions();
    let data = img.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect();
    RealImage::from_data(w as usize, h as usize, 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip_gray_and_color() {
        let dir = tempfile::tempdir().unwrap();
        let gray = RealImage::from_data(3, 2, 1, vec![0.0, 0.25, 0.5, 1.0, -2.0, 3.5]).unwrap();
        let p = dir.path().join("g.pfm");
        write_pfm(&p, &gray).unwrap();
        assert_eq!(read_pfm(&p).unwrap(), gray);
        // bottom-up row order on disk: first stored float is the last row's first pixel
        let bytes = fs::read(&p).unwrap();
        let header_len = "Pf\n3 2\n-1.0\n".len();
        assert_eq!(&bytes[..header_len], b"Pf\n3 2\n-1.0\n");
        assert_eq!(f32::from_le_bytes(bytes[header_len..header_len + 4].try_into().unwrap()), 1.0);

        let color = RealImage::from_data(1, 2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
            .unwrap()
            .to_f32_precision();
        let p = dir.path().join("c.pfm");
        write_pfm(&p, &color).unwrap();
        assert_eq!(read_pfm(&p).unwrap(), color);
    }

    #[test]
    fn complex_pair_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = ComplexField::from_fn(4, 3, 8e-6, |x, y| Complex64::new(x as f64 * 0.5, -(y as f64))).unwrap();
        let stem = dir.path().join("field");
        write_complex_pfm(&stem, &f).unwrap();
        assert!(dir.path().join("field.re.pfm").exists());
        assert_eq!(read_complex_pfm(&stem, 8e-6).unwrap(), f);
    }

    #[test]
    fn png16_quantizes_to_65535_levels() {
        let dir = tempfile::tempdir().unwrap();
        let img = RealImage::from_data(2, 2, 1, vec![0.0, 1.0, 0.5, 0.123456]).unwrap();
        let p = dir.path().join("h.png");
        write_png16(&p, &img).unwrap();
        let back = read_png16(&p).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
    }

    #[test]
    fn srgb_curve_inverts() {
        for i in 0..=255 {
            let v = i as f64 / 255.0;
            assert!((linear_to_srgb(srgb_to_linear(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pfm");
        fs::write(&p, b"P6\n1 1\n255\n").unwrap();
        assert!(read_pfm(&p).is_err());
    }
}
