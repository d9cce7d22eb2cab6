use std::io::Cursor;
use std::path::Path;

use faer::Mat;
use image::{DynamicImage, ImageFormat, ImageReader, RgbImage};

use super::{read_bytes, write_bytes};
use crate::error::{Error, Result};
use crate::gaussian::SampleMatrix;

/// RGB image with channel values nominally in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl PixelImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptySamples);
        }
        if data.len() != 3 * width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {width}x{height} RGB image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let at = 3 * (y * self.width + x);
        [self.data[at], self.data[at + 1], self.data[at + 2]]
    }

    /// One row per pixel, one column per channel.
    pub fn to_samples(&self) -> SampleMatrix {
        let data = &self.data;
        SampleMatrix::new(Mat::from_fn(self.width * self.height, 3, |i, c| {
            data[3 * i + c]
        }))
        .expect("pixel images are non-empty and finite")
    }

    /// Builds an image from samples, clamping to `[0, 1]`. Also returns the
    /// fraction of pixels with at least one clamped channel.
    pub fn from_samples(x: &SampleMatrix, width: usize, height: usize) -> Result<(Self, f64)> {
        if x.m() != 3 || x.n() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} samples for a {width}x{height} RGB image",
                x.n(),
                x.m()
            )));
        }
        let mut data = Vec::with_capacity(3 * x.n());
        let mut clamped = 0usize;
        for i in 0..x.n() {
            let mut hit = false;
            for c in 0..3 {
                let v = x.get(i, c);
                let kept = v.clamp(0.0, 1.0);
                hit |= kept != v;
                data.push(kept);
            }
            clamped += hit as usize;
        }
        let image = Self::new(width, height, data)?;
        Ok((image, clamped as f64 / x.n() as f64))
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }
}

/// `round(clamp(v, 0, 1) · 255)`.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reads an 8-bit PNG. Gray is widened to RGB and any alpha channel is dropped.
pub fn read_image(path: impl AsRef<Path>) -> Result<PixelImage> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(Error::UnsupportedImage(format!(
            "{}: not a PNG file",
            path.display()
        )));
    }
    let decoded = reader
        .decode()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let rgb = match decoded {
        DynamicImage::ImageRgb8(img) => img,
        img @ (DynamicImage::ImageRgba8(_)
        | DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)) => img.to_rgb8(),
        other => {
            return Err(Error::UnsupportedImage(format!(
                "{}: {:?} is not an 8-bit color type",
                path.display(),
                other.color()
            )))
        }
    };
    PixelImage::from_rgb8(rgb.width() as usize, rgb.height() as usize, rgb.as_raw())
}

/// Writes an 8-bit RGB PNG, quantizing with [`quantize`].
pub fn write_image(path: impl AsRef<Path>, image: &PixelImage) -> Result<()> {
    let path = path.as_ref();
    let rgb = RgbImage::from_raw(image.width as u32, image.height as u32, image.to_rgb8())
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    write_bytes(path, &out.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(7.0), 255);
        for b in 0..=255u8 {
            assert_eq!(quantize(b as f64 / 255.0), b);
        }
    }

    #[test]
    fn clamp_fraction_counts_pixels() {
        let x = SampleMatrix::from_row_major(
            4,
            3,
            &[
                0.5, 0.5, 0.5, //
                1.5, 0.5, -0.5, //
                0.0, 1.0, 0.2, //
                0.1, 0.2, 1.0000001,
            ],
        )
        .unwrap();
        let (img, frac) = PixelImage::from_samples(&x, 2, 2).unwrap();
        assert_eq!(frac, 0.5);
        assert_eq!(img.pixel(1, 0), [1.0, 0.5, 0.0]);
        assert_eq!(img.pixel(0, 1), [0.0, 1.0, 0.2]);
    }

    #[test]
    fn samples_are_pixels_in_row_major_order() {
        let img = PixelImage::new(2, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let x = img.to_samples();
        assert_eq!(x.row(1), vec![0.4, 0.5, 0.6]);
        let (back, frac) = PixelImage::from_samples(&x, 2, 1).unwrap();
        assert_eq!(back, img);
        assert_eq!(frac, 0.0);
    }
}
