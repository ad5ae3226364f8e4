//! Oriented boxes, convex polygon clipping, exact IoU and rotated NMS.

mod iou;
mod nms;
mod obb;
mod polygon;

pub use iou::{aabb_iou, obb_iou, quad_iou};
pub use nms::{greedy_nms, quad_nms, rotated_nms};
pub use obb::{OrientedBox, Quad};
pub use polygon::{clip_convex, clip_halfplane, convex_intersection, polygon_area, signed_area, Polygon, CLIP_EPSILON};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

#[allow(clippy::should_implement_trait)]
impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }

    #[inline]
    pub fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Point::new(self.x * s, self.y * s)
    }

    /// z-component of the 2-D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// Rotates counter-clockwise about the origin.
    #[inline]
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned bounds `(min, max)` of a point set.
pub fn bounds<T: Scalar>(points: &[Point<T>]) -> Option<(Point<T>, Point<T>)> {
    let first = *points.first()?;
    Some(points.iter().skip(1).fold((first, first), |(lo, hi), p| {
        (
            Point::new(lo.x.min(p.x), lo.y.min(p.y)),
            Point::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}
