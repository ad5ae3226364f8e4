use serde::{Deserialize, Serialize};

use super::jpeg::ChromaSubsampling;
use super::resize::Interpolation;
use crate::{Error, Result};

/// A dataset-wide image transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModifierSpec {
    Identity,
    Jpeg {
        quality: u8,
        #[serde(default)]
        subsampling: ChromaSubsampling,
    },
    Resize {
        scale: f64,
        #[serde(default)]
        method: Interpolation,
    },
}

impl ModifierSpec {
    pub fn jpeg(quality: u8) -> Self {
        ModifierSpec::Jpeg {
            quality,
            subsampling: ChromaSubsampling::default(),
        }
    }

    pub fn resize(scale: f64, method: Interpolation) -> Self {
        ModifierSpec::Resize { scale, method }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModifierSpec::Identity => Ok(()),
            ModifierSpec::Jpeg { quality, .. } if quality > 100 => Err(Error::invalid(format!(
                "jpeg quality must lie in 0..=100, got {quality}"
            ))),
            ModifierSpec::Resize { scale, .. } if !(scale > 0.0 && scale <= 1.0) => {
                Err(Error::invalid(format!("resize scale must lie in (0, 1], got {scale}")))
            }
            _ => Ok(()),
        }
    }

    /// Unique name derived from kind and parameters, e.g. `jpeg_q70`.
    pub fn name(&self) -> String {
        match *self {
            ModifierSpec::Identity => "identity".into(),
            ModifierSpec::Jpeg {
                quality,
                subsampling: ChromaSubsampling::Yuv420,
            } => format!("jpeg_q{quality}"),
            ModifierSpec::Jpeg {
                quality,
                subsampling: ChromaSubsampling::Yuv444,
            } => format!("jpeg_q{quality}_444"),
            ModifierSpec::Resize { scale, method } => {
                format!("resize_x{scale}_{}", method.as_str())
            }
        }
    }
}
