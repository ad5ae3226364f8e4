use serde::{Deserialize, Serialize};

use super::{polygon, Point};
use crate::{Error, Result, Scalar};

/// Rotated rectangle. Canonical form has `w >= h` and `angle` in
/// `[-pi/2, pi/2)`, so each rectangle has a single representation
/// (squares keep their remaining quarter-turn ambiguity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox<T> {
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
    pub angle: T,
}

impl<T: Scalar> OrientedBox<T> {
    pub fn new(cx: T, cy: T, w: T, h: T, angle: T) -> Result<Self> {
        let all_finite = [cx, cy, w, h, angle].iter().all(|v| v.is_finite());
        if !all_finite || w <= T::zero() || h <= T::zero() {
            return Err(Error::invalid(format!(
                "oriented box needs finite values and positive size, got ({cx}, {cy}, {w}, {h}, {angle})"
            )));
        }
        Ok(OrientedBox { cx, cy, w, h, angle }.canonical())
    }

    /// Axis-aligned box from its min corner and size.
    pub fn axis_aligned(x: T, y: T, w: T, h: T) -> Result<Self> {
        let half = T::lit(0.5);
        OrientedBox::new(x + w * half, y + h * half, w, h, T::zero())
    }

    pub fn canonical(self) -> Self {
        let (mut w, mut h, mut angle) = (self.w, self.h, self.angle);
        if w < h {
            std::mem::swap(&mut w, &mut h);
            angle = angle + T::FRAC_PI_2();
        }
        OrientedBox {
            w,
            h,
            angle: wrap_half_turn(angle),
            ..self
        }
    }

    pub fn center(&self) -> Point<T> {
        Point::new(self.cx, self.cy)
    }

    pub fn area(&self) -> T {
        self.w * self.h
    }

    /// True for angle 0 and for the canonical quarter turn `-pi/2`.
    pub fn is_axis_aligned(&self) -> bool {
        self.angle == T::zero() || self.angle == -T::FRAC_PI_2()
    }

    /// Half extents along x and y, valid only for axis-aligned boxes.
    pub(crate) fn half_extents(&self) -> (T, T) {
        let half = T::lit(0.5);
        if self.angle == T::zero() {
            (self.w * half, self.h * half)
        } else {
            (self.h * half, self.w * half)
        }
    }

    /// Corners of the rectangle, counter-clockwise (positive signed area).
    pub fn to_corners(&self) -> Quad<T> {
        let half = T::lit(0.5);
        let (hw, hh) = (self.w * half, self.h * half);
        let c = self.center();
        let local = [
            Point::new(-hw, -hh),
            Point::new(hw, -hh),
            Point::new(hw, hh),
            Point::new(-hw, hh),
        ];
        Quad {
            vertices: local.map(|p| p.rotate(self.angle).add(c)),
        }
    }

    /// Reads a rectangle back from its corners: `w` along the first edge,
    /// `h` along the second. The result is canonicalized.
    pub fn from_corners(quad: &Quad<T>) -> Result<Self> {
        let v = &quad.vertices;
        let quarter = T::lit(0.25);
        let cx = (v[0].x + v[1].x + v[2].x + v[3].x) * quarter;
        let cy = (v[0].y + v[1].y + v[2].y + v[3].y) * quarter;
        let e0 = v[1].sub(v[0]);
        let e1 = v[2].sub(v[1]);
        OrientedBox::new(cx, cy, e0.norm(), e1.norm(), e0.y.atan2(e0.x))
    }

    pub fn translate(&self, dx: T, dy: T) -> Self {
        OrientedBox {
            cx: self.cx + dx,
            cy: self.cy + dy,
            ..*self
        }
    }
}

fn wrap_half_turn<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    let half = T::FRAC_PI_2();
    let mut a = angle - pi * ((angle + half) / pi).floor();
    if a >= half {
        a = a - pi;
    }
    if a < -half {
        a = a + pi;
    }
    a
}

/// Convex quadrilateral with counter-clockwise vertices.
///
/// Built from free annotation quads: orientation is normalized and a
/// non-convex input is replaced by its convex hull (a repeated vertex
/// stands in for the dropped reflex corner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad<T> {
    pub vertices: [Point<T>; 4],
}

impl<T: Scalar> Quad<T> {
    pub fn new(points: [Point<T>; 4]) -> Result<Self> {
        if !points.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("quad vertices must be finite"));
        }
        let mut vertices = points;
        if polygon::signed_area(&vertices) < T::zero() {
            vertices.reverse();
        }
        if !is_convex(&vertices) {
            vertices = convex_hull4(&points);
        }
        Ok(Quad { vertices })
    }

    pub fn from_flat(c: [T; 8]) -> Result<Self> {
        Quad::new([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    pub fn area(&self) -> T {
        polygon::polygon_area(&self.vertices)
    }

    pub fn bounds(&self) -> (Point<T>, Point<T>) {
        super::bounds(&self.vertices).expect("quad has vertices")
    }

    pub fn map(&self, f: impl Fn(Point<T>) -> Point<T>) -> Result<Self> {
        Quad::new(self.vertices.map(f))
    }

    /// True when the quad is an axis-aligned rectangle.
    pub fn is_axis_aligned_rect(&self) -> bool {
        let v = &self.vertices;
        (0..4).all(|i| {
            let e = v[(i + 1) % 4].sub(v[i]);
            e.x == T::zero() || e.y == T::zero()
        }) && self.area() > T::zero()
    }
}

fn is_convex<T: Scalar>(v: &[Point<T>; 4]) -> bool {
    (0..4).all(|i| {
        let a = v[(i + 1) % 4].sub(v[i]);
        let b = v[(i + 2) % 4].sub(v[(i + 1) % 4]);
        a.cross(b) >= T::zero()
    })
}

/// Hull of four points (monotone chain), padded to four vertices.
fn convex_hull4<T: Scalar>(points: &[Point<T>; 4]) -> [Point<T>; 4] {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap().then(a.y.partial_cmp(&b.y).unwrap()));
    let mut hull: Vec<Point<T>> = Vec::with_capacity(8);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point<T>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if b.sub(a).cross(p.sub(a)) <= T::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.is_empty() {
        hull.push(pts[0]);
    }
    while hull.len() < 4 {
        hull.push(*hull.last().unwrap());
    }
    [hull[0], hull[1], hull[2], hull[3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: Point<f64>, x: f64, y: f64) {
        assert_abs_diff_eq!(a.x, x, epsilon = 1e-12);
        assert_abs_diff_eq!(a.y, y, epsilon = 1e-12);
    }

    #[test]
    fn axis_aligned_square_corners() {
        let q = OrientedBox::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap().to_corners();
        close(q.vertices[0], -1.0, -1.0);
        close(q.vertices[1], 1.0, -1.0);
        close(q.vertices[2], 1.0, 1.0);
        close(q.vertices[3], -1.0, 1.0);
        assert_abs_diff_eq!(q.area(), 4.0);
    }

    #[test]
    fn rotated_square_corners() {
        let s = 2f64.sqrt();
        let q = OrientedBox::new(0.0, 0.0, s, s, FRAC_PI_4).unwrap().to_corners();
        close(q.vertices[0], 0.0, -1.0);
        close(q.vertices[1], 1.0, 0.0);
        close(q.vertices[2], 0.0, 1.0);
        close(q.vertices[3], -1.0, 0.0);
    }

    #[test]
    fn swapped_sides_describe_same_rectangle() {
        let tall = OrientedBox::new(0.0, 0.0, 2.0, 4.0, 0.0).unwrap();
        let wide = OrientedBox::new(0.0, 0.0, 4.0, 2.0, -FRAC_PI_2).unwrap();
        assert_eq!(tall.w, 4.0);
        assert_eq!(tall.h, 2.0);
        assert_abs_diff_eq!(tall.angle, -FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(tall.angle, wide.angle, epsilon = 1e-12);
        let near = OrientedBox::new(0.0, 0.0, 4.0, 2.0, FRAC_PI_2 - 1e-9).unwrap();
        assert!(near.angle < FRAC_PI_2);
    }

    #[test]
    fn angle_wraps_into_half_open_range() {
        for k in -3..=3 {
            let b = OrientedBox::new(1.0, 2.0, 5.0, 3.0, 0.3 + k as f64 * PI).unwrap();
            assert_abs_diff_eq!(b.angle, 0.3, epsilon = 1e-9);
        }
        let b = OrientedBox::new(0.0, 0.0, 5.0, 3.0, FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(b.angle, -FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(OrientedBox::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OrientedBox::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(OrientedBox::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn clockwise_quad_is_reoriented() {
        let q = Quad::from_flat([0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(polygon::signed_area(&q.vertices) > 0.0);
    }

    #[test]
    fn non_convex_quad_becomes_hull() {
        // dart: (1, 0.5) is a reflex corner
        let q = Quad::from_flat([0.0, 0.0, 2.0, 0.0, 1.0, 0.5, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(q.area(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn corners_round_trip() {
        let b = OrientedBox::new(3.0, -4.0, 7.0, 2.5, 1.1).unwrap();
        let r = OrientedBox::from_corners(&b.to_corners()).unwrap();
        for (x, y) in [(b.cx, r.cx), (b.cy, r.cy), (b.w, r.w), (b.h, r.h), (b.angle, r.angle)] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9);
        }
    }

    #[test]
    fn f32_instantiation() {
        let q = OrientedBox::<f32>::new(0.0, 0.0, 2.0, 2.0, 0.0).unwrap().to_corners();
        assert_eq!(q.area(), 4.0f32);
    }
}
