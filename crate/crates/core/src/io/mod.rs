//! On-disk formats: feature tensors, Gaussian statistics, images and level manifests.

mod image;
mod manifest;
mod stats;
mod tensor;

pub use self::image::{quantize, read_image, write_image, PixelImage};
pub use self::manifest::{read_manifest, write_manifest, Manifest, ManifestLevel};
pub use self::stats::{decode_stats, encode_stats, read_stats, write_stats, STATS_MAGIC};
pub use self::tensor::{
    decode_tensor, encode_tensor, read_tensor, read_tensor_file, write_tensor, write_tensor_file,
    FeatureShape, TensorFile, TENSOR_MAGIC,
};

pub(crate) const FORMAT_VERSION: u32 = 1;

fn read_bytes(path: &std::path::Path) -> crate::Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| crate::Error::io(path, e))
}

fn write_bytes(path: &std::path::Path, bytes: &[u8]) -> crate::Result<()> {
    std::fs::write(path, bytes).map_err(|e| crate::Error::io(path, e))
}

/// Little-endian cursor that reports truncation against the full expected length.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, len: usize) -> crate::Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(crate::Error::Truncated {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn magic(&mut self, expected: [u8; 4]) -> crate::Result<()> {
        let found: [u8; 4] = self.take(4)?.try_into().unwrap();
        if found != expected {
            return Err(crate::Error::BadMagic { expected, found });
        }
        Ok(())
    }

    fn version(&mut self) -> crate::Result<()> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(crate::Error::UnsupportedVersion(v));
        }
        Ok(())
    }

    fn u8(&mut self) -> crate::Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> crate::Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> crate::Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Fails with the total length the file should have had.
    fn require(&self, remaining: usize) -> crate::Result<()> {
        let have = self.bytes.len() - self.pos;
        if have < remaining {
            return Err(crate::Error::Truncated {
                expected: self.pos + remaining,
                found: self.bytes.len(),
            });
        }
        Ok(())
    }

    fn finish(&self) -> crate::Result<()> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            extra => Err(crate::Error::TrailingBytes(extra)),
        }
    }
}
