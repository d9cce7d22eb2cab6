use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tensor::FeatureShape;
use crate::error::{Error, Result};

/// Per-level tensor locations for one image.
///
/// Stored as TOML:
///
/// ```toml
/// [[level]]
/// level = 1
/// input = "content_l1.gotf"
/// output = "stylized_l1.gotf"
/// shape = [64, 128, 128]
/// ```
///
/// Level 1 is the finest resolution and level `R` the coarsest. Relative paths
/// resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    levels: Vec<ManifestLevel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestLevel {
    pub input: PathBuf,
    pub output: PathBuf,
    pub shape: FeatureShape,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    level: Vec<RawLevel>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLevel {
    level: usize,
    input: PathBuf,
    output: PathBuf,
    shape: [usize; 3],
}

impl Manifest {
    /// `levels[r - 1]` describes level `r`.
    pub fn new(levels: Vec<ManifestLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Manifest {
                path: PathBuf::new(),
                reason: "no levels".into(),
            });
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, level: usize) -> Result<&ManifestLevel> {
        level
            .checked_sub(1)
            .and_then(|i| self.levels.get(i))
            .ok_or(Error::CodecLevel {
                level,
                levels: self.levels.len(),
            })
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let fail = |reason: String| Error::Manifest {
            path: base.to_path_buf(),
            reason,
        };
        let raw: RawManifest = toml::from_str(text).map_err(|e| fail(e.to_string()))?;
        let mut entries = raw.level;
        entries.sort_by_key(|l| l.level);
        for (i, entry) in entries.iter().enumerate() {
            if entry.level != i + 1 {
                return Err(fail(format!(
                    "levels must be contiguous from 1, found {:?}",
                    entries.iter().map(|l| l.level).collect::<Vec<_>>()
                )));
            }
            if entry.shape.contains(&0) {
                return Err(fail(format!("level {} has an empty shape", entry.level)));
            }
        }
        let levels = entries
            .into_iter()
            .map(|l| ManifestLevel {
                input: base.join(l.input),
                output: base.join(l.output),
                shape: FeatureShape::new(l.shape[0], l.shape[1], l.shape[2]),
            })
            .collect();
        Self::new(levels).map_err(|_| fail("no levels".into()))
    }

    pub fn to_toml(&self) -> String {
        let raw = RawManifest {
            level: self
                .levels
                .iter()
                .enumerate()
                .map(|(i, l)| RawLevel {
                    level: i + 1,
                    input: l.input.clone(),
                    output: l.output.clone(),
                    shape: [l.shape.channels, l.shape.height, l.shape.width],
                })
                .collect(),
        };
        toml::to_string(&raw).expect("manifest fields are plain values")
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Manifest::parse(&text, base).map_err(|e| match e {
        Error::Manifest { reason, .. } => Error::Manifest {
            path: path.to_path_buf(),
            reason,
        },
        other => other,
    })
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, manifest.to_toml()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LEVELS: &str = r#"
[[level]]
level = 2
input = "in2.gotf"
output = "out2.gotf"
shape = [8, 4, 4]

[[level]]
level = 1
input = "/abs/in1.gotf"
output = "out1.gotf"
shape = [3, 16, 16]
"#;

    #[test]
    fn parses_and_resolves_paths() {
        let m = Manifest::parse(TWO_LEVELS, Path::new("/data")).unwrap();
        assert_eq!(m.levels(), 2);
        let l1 = m.level(1).unwrap();
        assert_eq!(l1.input, PathBuf::from("/abs/in1.gotf"));
        assert_eq!(l1.output, PathBuf::from("/data/out1.gotf"));
        assert_eq!(l1.shape, FeatureShape::new(3, 16, 16));
        assert_eq!(m.level(2).unwrap().shape.samples(), 16);
        assert!(matches!(
            m.level(3),
            Err(Error::CodecLevel {
                level: 3,
                levels: 2
            })
        ));
        assert!(m.level(0).is_err());

        let again = Manifest::parse(&m.to_toml(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_gaps_and_garbage() {
        let gap = TWO_LEVELS.replace("level = 1", "level = 3");
        assert!(matches!(
            Manifest::parse(&gap, Path::new("")),
            Err(Error::Manifest { .. })
        ));
        assert!(Manifest::parse("level = 3", Path::new("")).is_err());
        assert!(Manifest::parse("[[level]]\nlevel = 1\n", Path::new("")).is_err());
        let empty_shape = TWO_LEVELS.replace("[8, 4, 4]", "[8, 0, 4]");
        assert!(Manifest::parse(&empty_shape, Path::new("")).is_err());
    }
}
