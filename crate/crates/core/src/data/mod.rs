//! Dataset model, annotation files, tiling and partition splitting.

mod annotation;
mod dataset;
mod split;
mod tiling;

pub use annotation::{parse_obb_annotations, serialize_obb_annotations, AnnotatedObject};
pub use dataset::{avg_file_size, Dataset, ImageEntry, IMAGE_EXTENSIONS};
pub use split::{split_partition, split_sizes};
pub use tiling::{
    assign_annotations, plan_tiles, tile_dataset, tile_image, tile_offsets, Tile, TileConfig, TileWindow,
};

/// Decimal megabyte used for every reported file size.
pub const BYTES_PER_MB: f64 = 1e6;
