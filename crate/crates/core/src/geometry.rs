use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A position in image pixel coordinates (x to the right, y down).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn cast<U: Real>(self) -> Point<U> {
        Point::new(U::lit(self.x.to_f64()), U::lit(self.y.to_f64()))
    }

    pub fn lerp(self, other: Self, t: T) -> Self {
        self + (other - self) * t
    }

    pub fn midpoint(self, other: Self) -> Self {
        self.lerp(other, T::lit(0.5))
    }

    pub fn distance(self, other: Self) -> T {
        let d = other - self;
        d.x.hypot(d.y)
    }

    /// Nearest pixel, or `None` when it falls outside a `width`×`height` raster.
    pub fn pixel(self, width: usize, height: usize) -> Option<(usize, usize)> {
        let (x, y) = (self.x.round_px(), self.y.round_px());
        (x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height)
            .then_some((x as usize, y as usize))
    }

    /// Nearest pixel clamped into the raster.
    pub fn pixel_clamped(self, width: usize, height: usize) -> (usize, usize) {
        let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
        (clamp(self.x.round_px(), width), clamp(self.y.round_px(), height))
    }
}

impl<T: Real> Add for Point<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Point<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Point<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Point::new(self.x * s, self.y * s)
    }
}

/// Bilinear interpolation over a quadrilateral given by its corners in
/// (top-left, top-right, bottom-right, bottom-left) order; `u` runs across,
/// `v` runs down.
pub fn bilinear<T: Real>(corners: [Point<T>; 4], u: T, v: T) -> Point<T> {
    let [tl, tr, br, bl] = corners;
    let top = tl.lerp(tr, u);
    let bottom = bl.lerp(br, u);
    top.lerp(bottom, v)
}

/// Point at arc length fraction `t ∈ [0, 1]` along a polyline.
pub fn along_polyline<T: Real>(vertices: &[Point<T>], t: T) -> Point<T> {
    let lengths: Vec<T> = vertices.windows(2).map(|w| w[0].distance(w[1])).collect();
    let total = lengths.iter().fold(T::zero(), |a, &b| a + b);
    if vertices.len() < 2 || total <= T::zero() {
        return vertices[0];
    }
    let mut remaining = t * total;
    for (seg, &len) in vertices.windows(2).zip(&lengths) {
        if remaining <= len {
            let frac = if len > T::zero() { remaining / len } else { T::zero() };
            return seg[0].lerp(seg[1], frac);
        }
        remaining = remaining - len;
    }
    *vertices.last().unwrap()
}

/// Andrew's monotone chain; returns the hull counter-clockwise in a y-up
/// sense, without repeating the first vertex.
pub fn convex_hull(points: &[Point<f64>]) -> Vec<Point<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point<f64>, a: Point<f64>, b: Point<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut hull: Vec<Point<f64>> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Inclusive point-in-convex-polygon test for a hull from [`convex_hull`].
pub fn in_convex(hull: &[Point<f64>], p: Point<f64>) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= -1e-9
    })
}
