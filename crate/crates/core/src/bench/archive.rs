//! Binary container for externally computed embeddings.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   "RTEM"                4 bytes
//! version u16                   currently 1
//! K       u32
//! D       u32
//! count   u64
//! tags    [u8; 2]               b'v', b't'
//! labels  K x D f32             label embedding matrix, row-major
//! samples count x {
//!     label            u32
//!     vision clean     D f32
//!     touch clean      D f32
//!     vision perturbed D f32
//!     touch perturbed  D f32
//! }
//! ```

use std::path::Path;

use crate::adapt::{ModalInput, SampleInput, UnlabeledBatch};
use crate::error::{Error, Result};
use crate::numcore::RealMatrix;

pub const MAGIC: &[u8; 4] = b"RTEM";
pub const VERSION: u16 = 1;
pub const MODALITY_TAGS: [u8; 2] = *b"vt";
pub const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8 + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveSample {
    pub label: u32,
    pub vision: Vec<f32>,
    pub touch: Vec<f32>,
    pub vision_perturbed: Vec<f32>,
    pub touch_perturbed: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingArchive {
    pub classes: u32,
    pub dim: u32,
    /// `classes x dim`, row-major.
    pub labels: Vec<f32>,
    pub samples: Vec<ArchiveSample>,
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Archive {
                offset: self.pos as u64,
                message: format!(
                    "truncated while reading {what}: need {n} bytes, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        Ok(self
            .take(4 * n, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

impl EmbeddingArchive {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn check_shapes(&self) -> Result<()> {
        let d = self.dim as usize;
        if self.labels.len() != self.classes as usize * d {
            return Err(Error::Dimension(format!(
                "label matrix has {} values, expected {} x {}",
                self.labels.len(),
                self.classes,
                self.dim
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            for v in [&s.vision, &s.touch, &s.vision_perturbed, &s.touch_perturbed] {
                if v.len() != d {
                    return Err(Error::Dimension(format!(
                        "sample {i} has a {}-dim embedding, archive dim is {d}",
                        v.len()
                    )));
                }
            }
            if s.label >= self.classes {
                return Err(Error::Dimension(format!(
                    "sample {i} label {} outside 0..{}",
                    s.label, self.classes
                )));
            }
        }
        Ok(())
    }

    pub fn byte_len(classes: u32, dim: u32, count: u64) -> u64 {
        let d = dim as u64;
        HEADER_LEN as u64 + 4 * classes as u64 * d + count * (4 + 16 * d)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_shapes()?;
        let mut out = Vec::with_capacity(
            Self::byte_len(self.classes, self.dim, self.samples.len() as u64) as usize,
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.classes.to_le_bytes());
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        out.extend_from_slice(&MODALITY_TAGS);
        let put = |v: &[f32], out: &mut Vec<u8>| {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        };
        put(&self.labels, &mut out);
        for s in &self.samples {
            out.extend_from_slice(&s.label.to_le_bytes());
            put(&s.vision, &mut out);
            put(&s.touch, &mut out);
            put(&s.vision_perturbed, &mut out);
            put(&s.touch_perturbed, &mut out);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Archive {
                offset: 0,
                message: format!("bad magic {magic:02x?}, expected \"RTEM\""),
            });
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(Error::Archive {
                offset: 4,
                message: format!("unsupported version {version}, expected {VERSION}"),
            });
        }
        let classes = r.u32("class count")?;
        let dim = r.u32("embedding dim")?;
        let count = r.u64("sample count")?;
        let tags_at = r.pos as u64;
        let tags = r.take(2, "modality tags")?;
        if tags != MODALITY_TAGS {
            return Err(Error::Archive {
                offset: tags_at,
                message: format!("bad modality tags {tags:02x?}, expected \"vt\""),
            });
        }
        if classes < 2 || dim < 1 {
            return Err(Error::Archive {
                offset: 6,
                message: format!("invalid shape K={classes}, D={dim}"),
            });
        }
        let expected = Self::byte_len(classes, dim, count);
        if bytes.len() as u64 != expected {
            return Err(Error::Archive {
                offset: bytes.len().min(expected as usize) as u64,
                message: format!(
                    "payload length mismatch: header declares {expected} bytes, file has {}",
                    bytes.len()
                ),
            });
        }
        let d = dim as usize;
        let labels = r.f32s(classes as usize * d, "label matrix")?;
        let mut samples = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let at = r.pos as u64;
            let label = r.u32("sample label")?;
            if label >= classes {
                return Err(Error::Archive {
                    offset: at,
                    message: format!("sample label {label} outside 0..{classes}"),
                });
            }
            samples.push(ArchiveSample {
                label,
                vision: r.f32s(d, "vision embedding")?,
                touch: r.f32s(d, "touch embedding")?,
                vision_perturbed: r.f32s(d, "perturbed vision embedding")?,
                touch_perturbed: r.f32s(d, "perturbed touch embedding")?,
            });
        }
        Ok(Self {
            classes,
            dim,
            labels,
            samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Rejects an archive whose shape disagrees with the run configuration.
    pub fn validate_against(&self, classes: usize, dim: usize) -> Result<()> {
        if self.classes as usize != classes {
            return Err(Error::Config(format!(
                "archive has K={}, run config expects K={classes}",
                self.classes
            )));
        }
        if self.dim as usize != dim {
            return Err(Error::Config(format!(
                "archive has D={}, run config expects D={dim}",
                self.dim
            )));
        }
        Ok(())
    }

    pub fn label_matrix(&self) -> Result<RealMatrix> {
        RealMatrix::from_vec(self.classes as usize, self.dim as usize, widen(&self.labels))
    }

    /// Number of batches of size `batch_size`; the last one may be short.
    pub fn batch_count(&self, batch_size: usize) -> usize {
        self.samples.len().div_ceil(batch_size.max(1))
    }

    /// Batch `t` as unlabeled embedded inputs plus its labels.
    pub fn batch(&self, t: usize, batch_size: usize) -> Result<(UnlabeledBatch, Vec<usize>)> {
        let start = t * batch_size.max(1);
        if start >= self.samples.len() {
            return Err(Error::EndOfStream(t));
        }
        let end = (start + batch_size).min(self.samples.len());
        let chunk = &self.samples[start..end];
        let inputs = UnlabeledBatch {
            samples: chunk
                .iter()
                .map(|s| SampleInput {
                    vision: ModalInput::Embedded {
                        clean: widen(&s.vision),
                        perturbed: widen(&s.vision_perturbed),
                    },
                    touch: ModalInput::Embedded {
                        clean: widen(&s.touch),
                        perturbed: widen(&s.touch_perturbed),
                    },
                })
                .collect(),
        };
        Ok((inputs, chunk.iter().map(|s| s.label as usize).collect()))
    }
}
