//! Compression-versus-performance benchmarking for aerial image datasets.
//!
//! The crate covers the whole loop: dataset handling and tiling ([`data`]),
//! degradation of datasets by JPEG recompression or interpolated downscaling
//! ([`modifiers`]), blind and full-reference image quality ([`quality`]),
//! oriented-box geometry ([`geometry`]), detection evaluation ([`eval`]),
//! run orchestration with a durable journal ([`experiment`]) and reporting
//! ([`report`]).
//!
//! Geometry, evaluation and quality math are generic over [`Scalar`]; the
//! aliases below pin the usual `f64` instantiations.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
pub mod modifiers;
pub mod num;
pub mod quality;
pub mod raster;
pub mod report;

pub use error::{Error, Result};
pub use num::Scalar;
pub use raster::Raster;

pub type Point = geometry::Point<f64>;
pub type OrientedBox = geometry::OrientedBox<f64>;
pub type Quad = geometry::Quad<f64>;
pub type Polygon = geometry::Polygon<f64>;
pub type DetectionRecord = eval::DetectionRecord<f64>;
pub type GroundTruthObject = eval::GroundTruthObject<f64>;
pub type EvalReport = eval::EvalReport<f64>;
pub type Plane = quality::Plane<f64>;
pub type RerResult = quality::RerResult<f64>;
pub type SnrResult = quality::SnrResult<f64>;
pub type RatePoint = report::RatePoint<f64>;

pub type OrientedBoxF32 = geometry::OrientedBox<f32>;
pub type QuadF32 = geometry::Quad<f32>;
