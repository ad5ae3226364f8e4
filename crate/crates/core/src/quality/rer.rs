//! Relative edge response from straight edges found in the image.
//!
//! Near-vertical and near-horizontal edges are located from Sobel
//! gradients, linked into straight segments, and an edge spread function
//! is collected by projecting every pixel around a segment onto the edge
//! normal. The plateau-normalized profile is fitted with a Gaussian-blurred
//! step `0.5 (1 + erf((d - mu) / (sigma sqrt 2)))`; the edge's RER is the
//! fitted profile's rise between -0.5 and +0.5 px.

use serde::{Deserialize, Serialize};

use super::{Plane, MIN_BLIND_SIDE};
use crate::num::median;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerConfig {
    /// Edge pixels need at least this share of the strongest gradient.
    pub min_gradient_fraction: f64,
    pub min_edge_length: usize,
    pub max_orientation_deg: f64,
    /// Profile half-width along the edge normal, in pixels.
    pub half_window: usize,
    /// Width of the far-field bands used as plateaus.
    pub plateau_width: usize,
    /// Largest plateau standard deviation, relative to edge contrast.
    pub max_plateau_noise: f64,
    /// Largest RMS deviation of edge points from the fitted line.
    pub max_line_residual: f64,
}

impl Default for RerConfig {
    fn default() -> Self {
        RerConfig {
            min_gradient_fraction: 0.2,
            min_edge_length: 16,
            max_orientation_deg: 5.0,
            half_window: 12,
            plateau_width: 3,
            max_plateau_noise: 0.2,
            max_line_residual: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeAxis {
    /// Near-vertical edge, profile taken along x.
    X,
    /// Near-horizontal edge, profile taken along y.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeMeasurement<T> {
    pub axis: EdgeAxis,
    pub sigma: T,
    pub rer: T,
    pub length: usize,
}

/// `None` marks an unavailable value (no qualifying edge on that axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerResult<T> {
    pub rer_x: Option<T>,
    pub rer_y: Option<T>,
    pub rer_median: Option<T>,
    pub edge_count: usize,
}

pub fn rer<T: Scalar>(image: &Plane<T>) -> Result<RerResult<T>> {
    rer_with(image, &RerConfig::default())
}

pub fn rer_with<T: Scalar>(image: &Plane<T>, cfg: &RerConfig) -> Result<RerResult<T>> {
    let edges = measure_edges(image, cfg)?;
    let pick = |axis| -> Vec<T> { edges.iter().filter(|e| e.axis == axis).map(|e| e.rer).collect() };
    let all: Vec<T> = edges.iter().map(|e| e.rer).collect();
    Ok(RerResult {
        rer_x: median(&pick(EdgeAxis::X)),
        rer_y: median(&pick(EdgeAxis::Y)),
        rer_median: median(&all),
        edge_count: edges.len(),
    })
}

/// Every qualifying edge with its fitted blur.
pub fn measure_edges<T: Scalar>(image: &Plane<T>, cfg: &RerConfig) -> Result<Vec<EdgeMeasurement<T>>> {
    if image.width < MIN_BLIND_SIDE || image.height < MIN_BLIND_SIDE {
        return Err(Error::invalid(format!(
            "RER needs at least {MIN_BLIND_SIDE}x{MIN_BLIND_SIDE} pixels, got {}x{}",
            image.width, image.height
        )));
    }
    let mut out = measure_vertical(image, cfg, EdgeAxis::X);
    out.extend(measure_vertical(&image.transpose(), cfg, EdgeAxis::Y));
    Ok(out)
}

struct Chain<T> {
    sign: bool,
    points: Vec<(usize, T)>,
}

/// Edges that run roughly along the y axis of `img`.
fn measure_vertical<T: Scalar>(img: &Plane<T>, cfg: &RerConfig, axis: EdgeAxis) -> Vec<EdgeMeasurement<T>> {
    let (w, h) = (img.width as usize, img.height as usize);
    let mut gx = vec![T::zero(); w * h];
    let mut gy = vec![T::zero(); w * h];
    let mut gmax = T::zero();
    let two = T::lit(2.0);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dx: isize, dy: isize| img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
            let sx = (p(1, -1) + two * p(1, 0) + p(1, 1)) - (p(-1, -1) + two * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + two * p(0, 1) + p(1, 1)) - (p(-1, -1) + two * p(0, -1) + p(1, -1));
            gx[y * w + x] = sx;
            gy[y * w + x] = sy;
            gmax = gmax.max(sx.hypot(sy));
        }
    }
    if gmax <= T::zero() {
        return Vec::new();
    }
    let thr = T::lit(cfg.min_gradient_fraction) * gmax;
    let tan_dev = T::lit(cfg.max_orientation_deg.to_radians().tan());

    // per-row local maxima of |gx| with near-horizontal gradient
    let mut chains: Vec<Chain<T>> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for y in 1..h - 1 {
        let mut next_open = Vec::new();
        for x in 2..w - 2 {
            let g = gx[y * w + x];
            let a = g.abs();
            if a < thr || gy[y * w + x].abs() > tan_dev * a {
                continue;
            }
            let left = gx[y * w + x - 1].abs();
            let right = gx[y * w + x + 1].abs();
            if a < left || a <= right {
                continue;
            }
            let denom = left - two * a + right;
            let offset = if denom < T::zero() {
                T::lit(0.5) * (left - right) / denom
            } else {
                T::zero()
            };
            let xs = T::from_len(x) + offset;
            let sign = g > T::zero();
            // continue the closest chain that ended on the previous row
            let best = open
                .iter()
                .copied()
                .filter(|&c| chains[c].sign == sign)
                .map(|c| (c, (chains[c].points.last().unwrap().1 - xs).abs()))
                .filter(|&(_, d)| d <= T::one())
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let id = match best {
                Some((c, _)) => {
                    open.retain(|&o| o != c);
                    chains[c].points.push((y, xs));
                    c
                }
                None => {
                    chains.push(Chain {
                        sign,
                        points: vec![(y, xs)],
                    });
                    chains.len() - 1
                }
            };
            next_open.push(id);
        }
        open = next_open;
    }

    chains
        .iter()
        .filter(|c| c.points.len() >= cfg.min_edge_length)
        .filter_map(|c| fit_edge(img, c, cfg, tan_dev))
        .map(|(sigma, length)| EdgeMeasurement {
            axis,
            sigma,
            rer: rer_from_sigma(sigma),
            length,
        })
        .collect()
}

/// `ESF(+0.5) - ESF(-0.5)` for a Gaussian edge of width `sigma`.
pub(crate) fn rer_from_sigma<T: Scalar>(sigma: T) -> T {
    (T::lit(0.5) / (sigma * T::SQRT_2())).erf()
}

fn fit_edge<T: Scalar>(img: &Plane<T>, chain: &Chain<T>, cfg: &RerConfig, tan_dev: T) -> Option<(T, usize)> {
    let n = T::from_len(chain.points.len());
    let (sy, sx) = chain
        .points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(y, x)| (a + T::from_len(y), b + x));
    let (my, mx) = (sy / n, sx / n);
    let (mut syy, mut sxy) = (T::zero(), T::zero());
    for &(y, x) in &chain.points {
        let dy = T::from_len(y) - my;
        syy = syy + dy * dy;
        sxy = sxy + dy * (x - mx);
    }
    let slope = if syy > T::zero() { sxy / syy } else { T::zero() };
    if slope.abs() > tan_dev {
        return None;
    }
    let line_x = |y: T| mx + slope * (y - my);
    let rms = (chain
        .points
        .iter()
        .map(|&(y, x)| {
            let r = x - line_x(T::from_len(y));
            r * r
        })
        .sum::<T>()
        / n)
        .sqrt();
    if rms > T::lit(cfg.max_line_residual) {
        return None;
    }

    let cos = T::one() / (T::one() + slope * slope).sqrt();
    let hw = cfg.half_window as isize;
    let polarity = if chain.sign { T::one() } else { -T::one() };
    let (w, h) = (img.width as isize, img.height as isize);
    let mut samples: Vec<(T, T)> = Vec::new();
    for &(y, _) in &chain.points {
        let yc = T::from_len(y);
        let xc = line_x(yc);
        let x0 = xc.round().to_isize()?;
        if x0 - hw < 0 || x0 + hw >= w || (y as isize) >= h {
            continue;
        }
        for x in x0 - hw..=x0 + hw {
            let d = (T::lit(x as f64) - xc) * cos * polarity;
            samples.push((d, img.get(x as usize, y)));
        }
    }
    if samples.len() < cfg.min_edge_length * 4 {
        return None;
    }

    let band = T::lit((cfg.half_window - cfg.plateau_width) as f64);
    let stats = |vals: Vec<T>| -> Option<(T, T)> {
        if vals.is_empty() {
            return None;
        }
        let k = T::from_len(vals.len());
        let mean = vals.iter().copied().sum::<T>() / k;
        let var = vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / k;
        Some((mean, var.sqrt()))
    };
    let (low, low_sd) = stats(samples.iter().filter(|s| s.0 <= -band).map(|s| s.1).collect())?;
    let (high, high_sd) = stats(samples.iter().filter(|s| s.0 >= band).map(|s| s.1).collect())?;
    let contrast = high - low;
    if contrast <= T::zero() {
        return None;
    }
    let max_sd = T::lit(cfg.max_plateau_noise) * contrast;
    if low_sd > max_sd || high_sd > max_sd {
        return None;
    }
    let esf: Vec<(T, T)> = samples.iter().map(|&(d, v)| (d, (v - low) / contrast)).collect();
    let sigma = fit_gaussian_step(&esf)?;
    Some((sigma, chain.points.len()))
}

/// Least-squares fit of `Phi((d - mu) / sigma)` (Levenberg–Marquardt over
/// `mu` and `ln sigma`). Returns the fitted `sigma`.
fn fit_gaussian_step<T: Scalar>(esf: &[(T, T)]) -> Option<T> {
    let half = T::lit(0.5);
    let inv_sqrt2pi = T::lit(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    let model = |d: T, mu: T, sigma: T| half * (T::one() + ((d - mu) / (sigma * T::SQRT_2())).erf());
    let cost = |mu: T, sigma: T| {
        esf.iter()
            .map(|&(d, e)| {
                let r = model(d, mu, sigma) - e;
                r * r
            })
            .sum::<T>()
    };

    let (mut mu, mut log_s) = (T::zero(), T::zero());
    let mut c = cost(mu, log_s.exp());
    let mut lambda = T::lit(1e-3);
    for _ in 0..200 {
        let sigma = log_s.exp();
        // normal equations of the 2-parameter problem
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for &(d, e) in esf {
            let t = (d - mu) / sigma;
            let pdf = inv_sqrt2pi * (-(t * t) * half).exp();
            let r = model(d, mu, sigma) - e;
            let j_mu = -pdf / sigma;
            let j_ls = -pdf * t;
            a11 = a11 + j_mu * j_mu;
            a12 = a12 + j_mu * j_ls;
            a22 = a22 + j_ls * j_ls;
            b1 = b1 + j_mu * r;
            b2 = b2 + j_ls * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let m11 = a11 * (T::one() + lambda);
            let m22 = a22 * (T::one() + lambda);
            let det = m11 * m22 - a12 * a12;
            if det.abs() <= T::min_positive_value() {
                lambda = lambda * T::lit(10.0);
                continue;
            }
            let step_mu = -(m22 * b1 - a12 * b2) / det;
            let step_ls = -(m11 * b2 - a12 * b1) / det;
            let (nmu, nls) = (mu + step_mu, log_s + step_ls);
            let nc = cost(nmu, nls.exp());
            if nc.is_finite() && nc <= c {
                let small = step_mu.abs() < T::lit(1e-10) && step_ls.abs() < T::lit(1e-10);
                mu = nmu;
                log_s = nls;
                c = nc;
                lambda = (lambda * T::lit(0.3)).max(T::lit(1e-12));
                improved = !small;
                break;
            }
            lambda = lambda * T::lit(10.0);
        }
        if !improved {
            break;
        }
    }
    let sigma = log_s.exp();
    (sigma.is_finite() && sigma > T::zero()).then_some(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(t: f64) -> f64 {
        0.5 * (1.0 + libm::erf(t / 2f64.sqrt()))
    }

    fn blurred_step(sigma: f64, x0: f64, lo: f64, hi: f64) -> Plane<f64> {
        Plane::from_fn(64, 64, |x, _| lo + (hi - lo) * phi((x as f64 - x0) / sigma))
    }

    #[test]
    fn constant_image_has_no_edges() {
        let r = rer(&Plane::from_fn(64, 64, |_, _| 80.0f64)).unwrap();
        assert_eq!(r.edge_count, 0);
        assert_eq!(r.rer_x, None);
        assert_eq!(r.rer_median, None);
    }

    #[test]
    fn too_small_image() {
        assert!(rer(&Plane::from_fn(63, 64, |_, _| 0.0f64)).is_err());
    }

    #[test]
    fn recovers_sigma_of_point_sampled_edge() {
        let edges = measure_edges(&blurred_step(1.5, 31.3, 20.0, 200.0), &RerConfig::default()).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].axis, EdgeAxis::X);
        assert!((edges[0].sigma - 1.5).abs() < 0.05, "{}", edges[0].sigma);
    }

    #[test]
    fn falling_edge_and_horizontal_edge() {
        let falling = blurred_step(1.0, 30.6, 200.0, 20.0);
        let r = rer(&falling).unwrap();
        assert!((r.rer_x.unwrap() - rer_from_sigma(1.0)).abs() < 0.03);
        let r = rer(&falling.transpose()).unwrap();
        assert_eq!(r.rer_x, None);
        assert!((r.rer_y.unwrap() - rer_from_sigma(1.0)).abs() < 0.03);
    }

    #[test]
    fn slanted_edge() {
        let angle = 3f64.to_radians();
        let img = Plane::from_fn(96, 96, |x, y| {
            let d = (x as f64 - 48.0) * angle.cos() - (y as f64 - 48.0) * angle.sin();
            10.0 + 150.0 * phi(d / 1.0)
        });
        let r = rer(&img).unwrap();
        assert!((r.rer_x.unwrap() - rer_from_sigma(1.0)).abs() < 0.03, "{:?}", r);
    }

    #[test]
    fn f32_plane() {
        let img = Plane::<f32>::from_fn(64, 64, |x, _| (20.0 + 180.0 * phi((x as f64 - 32.2) / 2.0)) as f32);
        let r = rer(&img).unwrap();
        assert!((r.rer_x.unwrap() - 0.197).abs() < 0.03);
    }

    #[test]
    fn analytic_values() {
        for (sigma, expected) in [(1.0, 0.383), (2.0, 0.197)] {
            let r = rer(&blurred_step(sigma, 32.0, 30.0, 220.0)).unwrap();
            assert!((r.rer_x.unwrap() - expected).abs() < 0.03, "sigma {sigma}: {r:?}");
            assert_eq!(r.rer_y, None);
        }
    }

    #[test]
    fn decreases_with_blur() {
        let values: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&s| rer(&blurred_step(s, 32.4, 30.0, 220.0)).unwrap().rer_x.unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[0] > w[1]), "{values:?}");
    }

    #[test]
    fn affine_intensity_invariance() {
        let img = blurred_step(1.3, 31.7, 40.0, 180.0);
        let base = measure_edges(&img, &RerConfig::default()).unwrap();
        for (a, b) in [(0.5, 10.0), (2.0, -30.0), (1.0, 100.0)] {
            let other = measure_edges(&img.map(|v| a * v + b), &RerConfig::default()).unwrap();
            assert_eq!(base.len(), other.len());
            for (e, f) in base.iter().zip(&other) {
                assert!((e.sigma - f.sigma).abs() < 1e-6);
                assert!((e.rer - f.rer).abs() < 1e-6);
            }
        }
    }
}
