//! Dataset degradations: JPEG recompression and interpolated downscaling.

mod apply;
pub mod jpeg;
mod resize;
mod spec;

pub use apply::{apply_modifier, sweep, ApplyOptions, ImageFailure, ModifiedDataset};
pub use jpeg::{jpeg_encode, jpeg_encode_with, ChromaSubsampling, JpegOptions, QuantTables};
pub use resize::{output_dims, resize_interpolate, Interpolation};
pub use spec::ModifierSpec;
