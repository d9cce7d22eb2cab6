use std::path::PathBuf;
use std::process::Command;

use crate::error::{Error, Result};
use crate::gaussian::SampleMatrix;
use crate::io::{read_tensor, write_tensor, FeatureShape, Manifest, PixelImage};

/// Features of an image at one level.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub samples: SampleMatrix,
    pub shape: FeatureShape,
}

/// Image reconstructed from features, with the fraction of pixels that had to
/// be clamped into range.
#[derive(Debug, Clone)]
pub struct Decoded<I> {
    pub image: I,
    pub clamp_fraction: f64,
}

/// Maps images to per-level feature samples and back. Levels run `1..=levels()`,
/// level 1 being the finest.
pub trait FeatureCodec {
    type Image: Clone;

    fn levels(&self) -> usize;

    fn encode(&self, image: &Self::Image, level: usize) -> Result<Encoded>;

    fn decode(
        &self,
        features: &SampleMatrix,
        shape: FeatureShape,
        level: usize,
    ) -> Result<Decoded<Self::Image>>;

    /// Largest relative error of `decode(encode(image))` on features.
    fn reconstruction_tolerance(&self) -> f64;

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.levels() {
            return Err(Error::CodecLevel {
                level,
                levels: self.levels(),
            });
        }
        Ok(())
    }
}

/// Single-level codec whose features are the RGB values themselves.
#[derive(Debug, Clone, Copy, Default)]
pub struct PixelCodec;

impl FeatureCodec for PixelCodec {
    type Image = PixelImage;

    fn levels(&self) -> usize {
        1
    }

    fn encode(&self, image: &PixelImage, level: usize) -> Result<Encoded> {
        self.check_level(level)?;
        Ok(Encoded {
            samples: image.to_samples(),
            shape: FeatureShape::new(3, image.height(), image.width()),
        })
    }

    fn decode(
        &self,
        features: &SampleMatrix,
        shape: FeatureShape,
        level: usize,
    ) -> Result<Decoded<PixelImage>> {
        self.check_level(level)?;
        if shape.channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "{} channels, expected 3",
                shape.channels
            )));
        }
        let (image, clamp_fraction) =
            PixelImage::from_samples(features, shape.width, shape.height)?;
        Ok(Decoded {
            image,
            clamp_fraction,
        })
    }

    fn reconstruction_tolerance(&self) -> f64 {
        0.0
    }
}

/// An image known only through its per-level feature tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorImage {
    pub manifest: Manifest,
}

/// Codec over externally produced tensor files.
///
/// `encode` reads the level's input tensor from the image's manifest. `decode`
/// writes the level's output tensor named by the codec's own manifest (the
/// content's), then runs the optional hook, which is expected to decode that
/// tensor and refresh the next level's input. The hook is a shell command in
/// which `{level}` and `{output}` are substituted.
#[derive(Debug, Clone)]
pub struct FileTensorCodec {
    target: Manifest,
    hook: Option<String>,
}

impl FileTensorCodec {
    pub fn new(target: Manifest) -> Self {
        Self { target, hook: None }
    }

    pub fn with_hook(mut self, command: impl Into<String>) -> Self {
        self.hook = Some(command.into());
        self
    }

    pub fn output_path(&self, level: usize) -> Result<PathBuf> {
        Ok(self.target.level(level)?.output.clone())
    }

    fn run_hook(&self, level: usize, output: &std::path::Path) -> Result<()> {
        let Some(template) = &self.hook else {
            return Ok(());
        };
        let command = template
            .replace("{level}", &level.to_string())
            .replace("{output}", &output.display().to_string());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&command)
            .status()
            .map_err(|e| Error::BridgeCommand {
                level,
                reason: e.to_string(),
            })?;
        if !status.success() {
            return Err(Error::BridgeCommand {
                level,
                reason: format!("`{command}` exited with {status}"),
            });
        }
        Ok(())
    }
}

impl FeatureCodec for FileTensorCodec {
    type Image = TensorImage;

    fn levels(&self) -> usize {
        self.target.levels()
    }

    fn encode(&self, image: &TensorImage, level: usize) -> Result<Encoded> {
        self.check_level(level)?;
        let entry = image.manifest.level(level)?;
        let (samples, shape) = read_tensor(&entry.input)?;
        if shape != entry.shape {
            return Err(Error::ShapeMismatch(format!(
                "{} holds {:?}, manifest declares {:?}",
                entry.input.display(),
                shape,
                entry.shape
            )));
        }
        Ok(Encoded { samples, shape })
    }

    fn decode(
        &self,
        features: &SampleMatrix,
        shape: FeatureShape,
        level: usize,
    ) -> Result<Decoded<TensorImage>> {
        self.check_level(level)?;
        let output = self.output_path(level)?;
        write_tensor(&output, features, shape)?;
        self.run_hook(level, &output)?;
        Ok(Decoded {
            image: TensorImage {
                manifest: self.target.clone(),
            },
            clamp_fraction: 0.0,
        })
    }

    fn reconstruction_tolerance(&self) -> f64 {
        f32::EPSILON as f64
    }
}
