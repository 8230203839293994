//! Planar geometry predicates used by collision checking.
//!
//! Points are `[T; 2]`. All tests treat boundary contact as intersection
//! (obstacles are closed sets, free space is open).

use crate::num::Scalar;

pub type Point2<T> = [T; 2];

#[inline]
pub fn sub<T: Scalar>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm<T: Scalar>(a: Point2<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<T: Scalar>(a: Point2<T>, b: Point2<T>) -> T {
    norm(sub(a, b))
}

/// Cross product z-component of (b − a) × (c − a).
#[inline]
fn orient<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Distance from point `p` to the segment `a`–`b`.
pub fn point_segment_distance<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == T::zero() {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).max(T::zero()).min(T::one());
    let proj = [a[0] + t * ab[0], a[1] + t * ab[1]];
    dist(p, proj)
}

/// Does the segment `a`–`b` come within `r` of the circle center `c`?
pub fn segment_intersects_circle<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    r: T,
) -> bool {
    point_segment_distance(c, a, b) <= r
}

/// Axis-aligned rectangle given by center and full extents.
#[derive(Clone, Copy, Debug)]
pub struct Rect<T> {
    pub center: Point2<T>,
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Rect<T> {
    #[inline]
    pub fn min(&self) -> Point2<T> {
        let two = T::one() + T::one();
        [
            self.center[0] - self.width / two,
            self.center[1] - self.height / two,
        ]
    }

    #[inline]
    pub fn max(&self) -> Point2<T> {
        let two = T::one() + T::one();
        [
            self.center[0] + self.width / two,
            self.center[1] + self.height / two,
        ]
    }

    #[inline]
    pub fn contains(&self, p: Point2<T>) -> bool {
        let lo = self.min();
        let hi = self.max();
        p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
    }
}

/// Does a disc of radius `r` centered at `c` touch the rectangle?
pub fn circle_intersects_rect<T: Scalar>(c: Point2<T>, r: T, rect: &Rect<T>) -> bool {
    let lo = rect.min();
    let hi = rect.max();
    let nearest = [
        c[0].max(lo[0]).min(hi[0]),
        c[1].max(lo[1]).min(hi[1]),
    ];
    dist(c, nearest) <= r
}

/// Liang–Barsky clip: does the segment `a`–`b` intersect the rectangle?
pub fn segment_intersects_rect<T: Scalar>(a: Point2<T>, b: Point2<T>, rect: &Rect<T>) -> bool {
    let lo = rect.min();
    let hi = rect.max();
    let d = sub(b, a);
    let mut t0 = T::zero();
    let mut t1 = T::one();
    for axis in 0..2 {
        if d[axis] == T::zero() {
            if a[axis] < lo[axis] || a[axis] > hi[axis] {
                return false;
            }
        } else {
            let inv = T::one() / d[axis];
            let mut ta = (lo[axis] - a[axis]) * inv;
            let mut tb = (hi[axis] - a[axis]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Proper or touching intersection of segments `a`–`b` and `c`–`d`.
pub fn segments_intersect<T: Scalar>(
    a: Point2<T>,
    b: Point2<T>,
    c: Point2<T>,
    d: Point2<T>,
) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    let zero = T::zero();

    if ((o1 > zero && o2 < zero) || (o1 < zero && o2 > zero))
        && ((o3 > zero && o4 < zero) || (o3 < zero && o4 > zero))
    {
        return true;
    }

    let on_segment = |p: Point2<T>, q: Point2<T>, r: Point2<T>| -> bool {
        r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    (o1 == zero && on_segment(a, b, c))
        || (o2 == zero && on_segment(a, b, d))
        || (o3 == zero && on_segment(c, d, a))
        || (o4 == zero && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_segment_basics() {
        let d: f64 = point_segment_distance([0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]);
        assert!((d - 1.0).abs() < 1e-12);
        // Beyond the endpoint the distance is to the endpoint itself.
        let d: f64 = point_segment_distance([3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]);
        assert!((d - 2.0).abs() < 1e-12);
        // Degenerate segment.
        let d: f64 = point_segment_distance([3.0, 4.0], [0.0, 0.0], [0.0, 0.0]);
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn segment_circle() {
        assert!(segment_intersects_circle(
            [0.0, 0.0],
            [2.0, 0.0],
            [1.0, 0.05],
            0.1
        ));
        assert!(!segment_intersects_circle(
            [0.0, 0.0],
            [2.0, 0.0],
            [1.0, 0.5],
            0.1
        ));
    }

    #[test]
    fn segment_rect() {
        let rect = Rect {
            center: [0.0, 0.0],
            width: 1.0,
            height: 1.0,
        };
        assert!(segment_intersects_rect([-2.0, 0.0], [2.0, 0.0], &rect));
        assert!(!segment_intersects_rect([-2.0, 1.0], [2.0, 1.0], &rect));
        assert!(segment_intersects_rect([0.1, 0.1], [0.2, 0.2], &rect)); // fully inside
        assert!(!segment_intersects_rect([0.6, 0.6], [2.0, 2.0], &rect));
        // Vertical segment crossing the top edge.
        assert!(segment_intersects_rect([0.0, 0.2], [0.0, 2.0], &rect));
    }

    #[test]
    fn segment_segment() {
        assert!(segments_intersect(
            [0.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0]
        ));
        assert!(!segments_intersect(
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0]
        ));
        // Touching endpoints count.
        assert!(segments_intersect(
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.0],
            [2.0, 5.0]
        ));
        // Collinear overlap.
        assert!(segments_intersect(
            [0.0, 0.0],
            [2.0, 0.0],
            [1.0, 0.0],
            [3.0, 0.0]
        ));
    }

    #[test]
    fn circle_rect() {
        let rect = Rect {
            center: [0.0, 0.0],
            width: 2.0,
            height: 2.0,
        };
        assert!(circle_intersects_rect([1.5, 0.0], 0.6, &rect));
        assert!(!circle_intersects_rect([1.5, 0.0], 0.4, &rect));
        assert!(circle_intersects_rect([0.0, 0.0], 0.1, &rect)); // center inside
    }
}
