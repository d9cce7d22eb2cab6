use std::path::Path;

use faer::Mat;

use super::{read_bytes, write_bytes, Reader, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::gaussian::SampleMatrix;

pub const TENSOR_MAGIC: [u8; 4] = *b"GOTF";
const DTYPE_F32: u8 = 1;

/// Spatial layout of a feature map: `channels × height × width`.
///
/// As a sample matrix it has `height · width` rows (pixels in row-major order)
/// and `channels` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl FeatureShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub fn samples(&self) -> usize {
        self.height * self.width
    }

    pub fn dims(&self) -> [u32; 3] {
        [self.channels as u32, self.height as u32, self.width as u32]
    }

    pub fn check(&self, x: &SampleMatrix) -> Result<()> {
        if x.n() != self.samples() || x.m() != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} samples do not fit shape {}x{}x{}",
                x.n(),
                x.m(),
                self.channels,
                self.height,
                self.width
            )));
        }
        Ok(())
    }

    fn from_dims(dims: &[u32]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::UnsupportedShape(dims.to_vec()));
        }
        match *dims {
            [c, h, w] => Ok(Self::new(c as usize, h as usize, w as usize)),
            _ => Err(Error::UnsupportedShape(dims.to_vec())),
        }
    }
}

/// Raw contents of a tensor file: dims and a row-major `f32` payload.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

impl TensorFile {
    pub fn new(dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        if dims.len() > u8::MAX as usize || expected != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTensor);
        }
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(DTYPE_F32);
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(TENSOR_MAGIC)?;
        r.version()?;
        let dtype = r.u8()?;
        if dtype != DTYPE_F32 {
            return Err(Error::UnsupportedDtype(dtype));
        }
        let ndim = r.u8()? as usize;
        let dims = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| Error::UnsupportedShape(dims.clone()))?;
        r.require(count)?;
        let data: Vec<f32> = r
            .take(count)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        r.finish()?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTensor);
        }
        Ok(Self { dims, data })
    }

    /// Reshape a `C × H × W` payload into an `(H·W) × C` sample matrix.
    pub fn to_samples(&self) -> Result<(SampleMatrix, FeatureShape)> {
        let shape = FeatureShape::from_dims(&self.dims)?;
        let n = shape.samples();
        let data = &self.data;
        let mat = Mat::from_fn(n, shape.channels, |i, c| data[c * n + i] as f64);
        Ok((SampleMatrix::new(mat)?, shape))
    }

    /// Inverse of [`TensorFile::to_samples`]; values are rounded to `f32`.
    pub fn from_samples(x: &SampleMatrix, shape: FeatureShape) -> Result<Self> {
        shape.check(x)?;
        let n = shape.samples();
        let mut data = Vec::with_capacity(n * shape.channels);
        for c in 0..shape.channels {
            for i in 0..n {
                data.push(x.get(i, c) as f32);
            }
        }
        Self::new(shape.dims().to_vec(), data)
    }
}

pub fn encode_tensor(x: &SampleMatrix, shape: FeatureShape) -> Result<Vec<u8>> {
    Ok(TensorFile::from_samples(x, shape)?.to_bytes())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<(SampleMatrix, FeatureShape)> {
    TensorFile::from_bytes(bytes)?.to_samples()
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<TensorFile> {
    TensorFile::from_bytes(&read_bytes(path.as_ref())?)
}

pub fn write_tensor_file(path: impl AsRef<Path>, tensor: &TensorFile) -> Result<()> {
    write_bytes(path.as_ref(), &tensor.to_bytes())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<(SampleMatrix, FeatureShape)> {
    read_tensor_file(path)?.to_samples()
}

pub fn write_tensor(path: impl AsRef<Path>, x: &SampleMatrix, shape: FeatureShape) -> Result<()> {
    write_bytes(path.as_ref(), &encode_tensor(x, shape)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_written_file_reshapes_channels_to_columns() {
        let mut bytes = b"GOTF".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 3]);
        for d in [3u32, 2, 2] {
            bytes.extend_from_slice(&d.to_le_bytes());
        }
        for v in 0..12 {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let (x, shape) = decode_tensor(&bytes).unwrap();
        assert_eq!(shape, FeatureShape::new(3, 2, 2));
        assert_eq!((x.n(), x.m()), (4, 3));
        // Pixel (h=0, w=1) is row 1; channel c sits at payload offset c·4 + 1.
        assert_eq!(x.row(1), vec![1.0, 5.0, 9.0]);
        assert_eq!(x.row(3), vec![3.0, 7.0, 11.0]);
        assert_eq!(encode_tensor(&x, shape).unwrap(), bytes);
    }

    #[test]
    fn distinct_errors() {
        let x = SampleMatrix::from_row_major(2, 1, &[1.0, 2.0]).unwrap();
        let good = encode_tensor(&x, FeatureShape::new(1, 1, 2)).unwrap();

        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_tensor(&bad), Err(Error::BadMagic { .. })));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(
            decode_tensor(&bad),
            Err(Error::UnsupportedVersion(2))
        ));

        let mut bad = good.clone();
        bad[8] = 2;
        assert!(matches!(
            decode_tensor(&bad),
            Err(Error::UnsupportedDtype(2))
        ));

        assert!(matches!(
            decode_tensor(&good[..good.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            decode_tensor(&good[..6]),
            Err(Error::Truncated { .. })
        ));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(decode_tensor(&bad), Err(Error::TrailingBytes(1))));

        let mut bad = good.clone();
        let at = bad.len() - 4;
        bad[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_tensor(&bad), Err(Error::NonFiniteTensor)));

        let big = SampleMatrix::from_row_major(1, 1, &[1e300]).unwrap();
        assert!(matches!(
            encode_tensor(&big, FeatureShape::new(1, 1, 1)),
            Err(Error::NonFiniteTensor)
        ));
        assert!(matches!(
            encode_tensor(&x, FeatureShape::new(2, 1, 2)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn unsupported_dims() {
        let t = TensorFile::new(vec![2, 1, 1, 1], vec![0.0, 1.0]).unwrap();
        assert!(matches!(t.to_samples(), Err(Error::UnsupportedShape(_))));
        let t = TensorFile::new(vec![2, 3], vec![0.0; 6]).unwrap();
        assert!(matches!(t.to_samples(), Err(Error::UnsupportedShape(_))));
        let t = TensorFile::new(vec![0, 4, 4], vec![]).unwrap();
        assert!(matches!(t.to_samples(), Err(Error::UnsupportedShape(_))));
    }
}
