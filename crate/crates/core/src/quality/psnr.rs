use super::Plane;
use crate::raster::Raster;
use crate::{Error, Result, Scalar};

/// PSNR in dB between two 8-bit rasters over all channels; identical
/// inputs give `+inf`.
pub fn psnr(reference: &Raster, test: &Raster) -> Result<f64> {
    if (reference.width, reference.height, reference.channels) != (test.width, test.height, test.channels) {
        return Err(Error::DimensionMismatch(
            reference.width,
            reference.height,
            reference.channels,
            test.width,
            test.height,
            test.channels,
        ));
    }
    let sse: u64 = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u64;
            d * d
        })
        .sum();
    Ok(from_mse(sse as f64 / reference.data.len().max(1) as f64, 255.0))
}

/// PSNR between planes with peak value `max`.
pub fn psnr_planes<T: Scalar>(reference: &Plane<T>, test: &Plane<T>, max: T) -> Result<T> {
    if (reference.width, reference.height) != (test.width, test.height) {
        return Err(Error::DimensionMismatch(
            reference.width,
            reference.height,
            1,
            test.width,
            test.height,
            1,
        ));
    }
    let n = T::from_len(reference.data.len().max(1));
    let sse = reference
        .data
        .iter()
        .zip(&test.data)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>();
    Ok(T::lit(from_mse((sse / n).as_f64(), max.as_f64())))
}

fn from_mse(mse: f64, max: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max * max / mse).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_infinite() {
        let r = Raster::from_fn(5, 5, |x, y| (x * y) as u8);
        assert_eq!(psnr(&r, &r).unwrap(), f64::INFINITY);
    }

    #[test]
    fn off_by_one_everywhere() {
        let a = Raster::filled(8, 8, 3, 100).unwrap();
        let b = Raster::filled(8, 8, 3, 101).unwrap();
        let expected = 10.0 * (255.0f64 * 255.0).log10();
        assert!((expected - 48.1308).abs() < 1e-4);
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_dims() {
        let a = Raster::filled(8, 8, 1, 0).unwrap();
        let b = Raster::filled(8, 7, 1, 0).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch(..))));
        let c = Raster::filled(8, 8, 3, 0).unwrap();
        assert!(psnr(&a, &c).is_err());
    }

    #[test]
    fn plane_version_matches() {
        let a = Plane::<f64>::from_fn(4, 4, |x, _| x as f64);
        let b = a.map(|v| v + 1.0);
        let p = psnr_planes(&a, &b, 255.0).unwrap();
        assert!((p - 48.130_803_608_679_1).abs() < 1e-9);
        assert_eq!(psnr_planes(&a, &a, 255.0).unwrap(), f64::INFINITY);
    }
}
