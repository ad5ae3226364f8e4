use super::{obb::Quad, Point};
use crate::Scalar;

pub type Polygon<T> = Vec<Point<T>>;

/// Inside-test tolerance of the clipper, in pixels of signed distance.
pub const CLIP_EPSILON: f64 = 1e-9;

/// Shoelace signed area; positive for counter-clockwise vertex order.
pub fn signed_area<T: Scalar>(poly: &[Point<T>]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let twice = (0..n).fold(T::zero(), |acc, i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc + (a.x * b.y - b.x * a.y)
    });
    twice * T::lit(0.5)
}

/// Unsigned shoelace area; zero for fewer than three vertices.
pub fn polygon_area<T: Scalar>(poly: &[Point<T>]) -> T {
    signed_area(poly).abs()
}

/// Keeps the part of `subject` to the left of the directed line `a -> b`.
pub fn clip_halfplane<T: Scalar>(subject: &[Point<T>], a: Point<T>, b: Point<T>) -> Polygon<T> {
    let n = subject.len();
    let edge = b.sub(a);
    let len = edge.norm();
    if n == 0 || len == T::zero() {
        return subject.to_vec();
    }
    let eps = T::lit(CLIP_EPSILON);
    let dist = |p: Point<T>| edge.cross(p.sub(a)) / len;

    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let s = subject[i];
        let e = subject[(i + 1) % n];
        let ds = dist(s);
        let de = dist(e);
        let s_in = ds >= -eps;
        let e_in = de >= -eps;
        if s_in != e_in {
            let t = ds / (ds - de);
            out.push(s.add(e.sub(s).scale(t)));
        }
        if e_in {
            out.push(e);
        }
    }
    out
}

/// Sutherland–Hodgman: clips `subject` by every edge of the convex,
/// counter-clockwise `clip` polygon. Returns an empty polygon when the
/// result has no area.
pub fn clip_convex<T: Scalar>(subject: &[Point<T>], clip: &[Point<T>]) -> Polygon<T> {
    let m = clip.len();
    if m < 3 || subject.len() < 3 {
        return Vec::new();
    }
    let mut out = subject.to_vec();
    for i in 0..m {
        out = clip_halfplane(&out, clip[i], clip[(i + 1) % m]);
        if out.len() < 3 {
            return Vec::new();
        }
    }
    out
}

/// Intersection of two convex quads, counter-clockwise, at most 8 vertices
/// (possibly empty).
pub fn convex_intersection<T: Scalar>(p: &Quad<T>, q: &Quad<T>) -> Polygon<T> {
    clip_convex(&p.vertices, &q.vertices)
}
