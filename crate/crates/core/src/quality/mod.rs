//! Image quality: blind sharpness (RER) and noise (SNR) estimates, PSNR.

mod plane;
mod psnr;
mod rer;
mod snr;

pub use plane::Plane;
pub use psnr::{psnr, psnr_planes};
pub use rer::{measure_edges, rer, rer_with, EdgeAxis, EdgeMeasurement, RerConfig, RerResult};
pub use snr::{snr, snr_with, SnrConfig, SnrResult};

/// Smallest image side accepted by the blind metrics.
pub const MIN_BLIND_SIDE: u32 = 64;
