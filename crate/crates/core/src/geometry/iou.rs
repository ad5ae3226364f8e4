use super::{obb::OrientedBox, obb::Quad, polygon};
use crate::Scalar;

/// Exact IoU of two oriented boxes. Boxes that are both axis-aligned take
/// the interval path; everything else goes through polygon clipping.
pub fn obb_iou<T: Scalar>(a: &OrientedBox<T>, b: &OrientedBox<T>) -> T {
    if a.is_axis_aligned() && b.is_axis_aligned() {
        aabb_iou(a, b)
    } else {
        quad_iou(&a.to_corners(), &b.to_corners())
    }
}

/// IoU of axis-aligned boxes by interval arithmetic.
pub fn aabb_iou<T: Scalar>(a: &OrientedBox<T>, b: &OrientedBox<T>) -> T {
    let (ahx, ahy) = a.half_extents();
    let (bhx, bhy) = b.half_extents();
    let ix = ((a.cx + ahx).min(b.cx + bhx) - (a.cx - ahx).max(b.cx - bhx)).max(T::zero());
    let iy = ((a.cy + ahy).min(b.cy + bhy) - (a.cy - ahy).max(b.cy - bhy)).max(T::zero());
    ratio(ix * iy, a.area(), b.area())
}

/// IoU of two convex quads. Axis-aligned rectangles skip the clipping.
pub fn quad_iou<T: Scalar>(a: &Quad<T>, b: &Quad<T>) -> T {
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    if alo.x >= bhi.x || blo.x >= ahi.x || alo.y >= bhi.y || blo.y >= ahi.y {
        return T::zero();
    }
    if a.is_axis_aligned_rect() && b.is_axis_aligned_rect() {
        let ix = ahi.x.min(bhi.x) - alo.x.max(blo.x);
        let iy = ahi.y.min(bhi.y) - alo.y.max(blo.y);
        return ratio(ix * iy, a.area(), b.area());
    }
    let inter = polygon::polygon_area(&polygon::convex_intersection(a, b));
    ratio(inter, a.area(), b.area())
}

fn ratio<T: Scalar>(inter: T, area_a: T, area_b: T) -> T {
    let union = area_a + area_b - inter;
    if union <= T::zero() {
        return T::zero();
    }
    (inter / union).max(T::zero()).min(T::one())
}
