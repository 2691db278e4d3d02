use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{xi_at, ShapeParams};
use crate::error::{Error, Result};

/// Hexagon sides in anticlockwise order, starting with the bottom side y = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// y = 0
    SW,
    /// x − y = a
    SE,
    /// x = a + c
    E,
    /// y = b + c
    NE,
    /// y − x = b
    NW,
    /// x = 0
    W,
}

impl Side {
    pub const ALL: [Side; 6] = [Side::SW, Side::SE, Side::E, Side::NE, Side::NW, Side::W];

    pub fn index(self) -> usize {
        Side::ALL.iter().position(|&s| s == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::SW => "SW",
            Side::SE => "SE",
            Side::E => "E",
            Side::NE => "NE",
            Side::NW => "NW",
            Side::W => "W",
        }
    }

    /// Endpoints in anticlockwise order.
    pub fn segment(self, p: &ShapeParams) -> ((f64, f64), (f64, f64)) {
        let (a, b, c) = (p.a, p.b, p.c);
        match self {
            Side::SW => ((0.0, 0.0), (a, 0.0)),
            Side::SE => ((a, 0.0), (a + c, c)),
            Side::E => ((a + c, c), (a + c, b + c)),
            Side::NE => ((a + c, b + c), (c, b + c)),
            Side::NW => ((c, b + c), (0.0, b)),
            Side::W => ((0.0, b), (0.0, 0.0)),
        }
    }

    /// Unit direction of the side, anticlockwise.
    pub fn direction(self, p: &ShapeParams) -> (f64, f64) {
        let ((x0, y0), (x1, y1)) = self.segment(p);
        let n = (x1 - x0).hypot(y1 - y0);
        ((x1 - x0) / n, (y1 - y0) / n)
    }

    /// The side as a line P + tD in tilted coordinates.
    fn tilted_line(self, p: &ShapeParams) -> ((f64, f64), (f64, f64)) {
        match self {
            Side::SW => ((0.0, 0.0), (1.0, 0.0)),
            Side::SE => ((p.big_a, 0.0), ((p.q * p.a).exp(), 1.0)),
            Side::E => ((p.tilt(p.a + p.c), 0.0), (0.0, 1.0)),
            Side::NE => ((0.0, p.tilt(p.b + p.c)), (1.0, 0.0)),
            Side::NW => ((0.0, p.tilt(p.b)), (1.0, (p.q * p.b).exp())),
            Side::W => ((0.0, 0.0), (0.0, 1.0)),
        }
    }

    /// Euclidean distance from z to the side segment.
    pub fn distance(self, p: &ShapeParams, z: (f64, f64)) -> f64 {
        let ((x0, y0), (x1, y1)) = self.segment(p);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let t = (((z.0 - x0) * dx + (z.1 - y0) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        (z.0 - x0 - t * dx).hypot(z.1 - y0 - t * dy)
    }
}

/// Side nearest to z; ties resolve to the earlier side in anticlockwise order.
pub fn nearest_side(p: &ShapeParams, z: (f64, f64)) -> (Side, f64) {
    let mut best = (Side::SW, f64::INFINITY);
    for s in Side::ALL {
        let d = s.distance(p, z);
        if d < best.1 {
            best = (s, d);
        }
    }
    best
}

/// Tangency points, centre and a sampled outline of the arctic boundary.
#[derive(Clone, Debug)]
pub struct ArcticGeometry {
    params: ShapeParams,
    tangency: [(f64, f64); 6],
    pub center: (f64, f64),
    outline: Vec<(f64, f64)>,
}

const OUTLINE_POINTS: usize = 720;

impl ArcticGeometry {
    pub fn new(p: &ShapeParams) -> Result<Self> {
        let mut tangency = [(0.0, 0.0); 6];
        for s in Side::ALL {
            let (pt, dir) = s.tilted_line(p);
            let (c2, c1, c0) = p.line_quadratic(pt, dir);
            if !(c2 > 0.0) {
                return Err(Error::ShapeParams(format!("conic does not close along side {}", s.name())));
            }
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc.abs() > 1e-8 * (c1 * c1 + (c2 * c0).abs() + 1e-300) {
                return Err(Error::ShapeParams(format!("arctic conic not tangent to side {}", s.name())));
            }
            let t = -c1 / (2.0 * c2);
            let z = (p.untilt(pt.0 + t * dir.0), p.untilt(pt.1 + t * dir.1));
            if s.distance(p, z) > 1e-9 || !z.0.is_finite() || !z.1.is_finite() {
                return Err(Error::ShapeParams(format!("tangency off side {}", s.name())));
            }
            tangency[s.index()] = z;
        }
        let center = (
            tangency.iter().map(|z| z.0).sum::<f64>() / 6.0,
            tangency.iter().map(|z| z.1).sum::<f64>() / 6.0,
        );
        if !(xi_at(center.0, center.1, p) < 0.0) {
            return Err(Error::ShapeParams("centre of tangency points is not liquid".into()));
        }
        let mut g = ArcticGeometry { params: *p, tangency, center, outline: Vec::new() };
        g.outline = (0..OUTLINE_POINTS).map(|i| g.ray_boundary(2.0 * PI * i as f64 / OUTLINE_POINTS as f64)).collect();
        g.check_convex()?;
        Ok(g)
    }

    pub fn params(&self) -> &ShapeParams {
        &self.params
    }

    pub fn point(&self, s: Side) -> (f64, f64) {
        self.tangency[s.index()]
    }

    pub fn tangency_points(&self) -> [(Side, (f64, f64)); 6] {
        Side::ALL.map(|s| (s, self.point(s)))
    }

    fn check_convex(&self) -> Result<()> {
        let n = self.outline.len();
        for i in 0..n {
            let (p0, p1, p2) = (self.outline[i], self.outline[(i + 1) % n], self.outline[(i + 2) % n]);
            let cross = (p1.0 - p0.0) * (p2.1 - p1.1) - (p1.1 - p0.1) * (p2.0 - p1.0);
            if cross <= 0.0 {
                return Err(Error::ShapeParams("arctic boundary is not convex; parameters outside the small regime".into()));
            }
        }
        Ok(())
    }

    /// Largest t with z + t·d inside the closed hexagon (z inside).
    pub fn hexagon_exit(&self, z: (f64, f64), d: (f64, f64)) -> f64 {
        let p = &self.params;
        // rows: n·z ≤ m
        let planes = [
            ((0.0, -1.0), 0.0),
            ((1.0, -1.0), p.a),
            ((1.0, 0.0), p.a + p.c),
            ((0.0, 1.0), p.b + p.c),
            ((-1.0, 1.0), p.b),
            ((-1.0, 0.0), 0.0),
        ];
        let mut t = f64::INFINITY;
        for ((nx, ny), m) in planes {
            let nd = nx * d.0 + ny * d.1;
            if nd > 1e-300 {
                t = t.min(((m - nx * z.0 - ny * z.1) / nd).max(0.0));
            }
        }
        t
    }

    /// First zero of ξ along z + t·d, for z in the liquid region.
    pub fn liquid_exit(&self, z: (f64, f64), d: (f64, f64), max_iter: u32) -> f64 {
        let p = &self.params;
        let (mut lo, mut hi) = (0.0, self.hexagon_exit(z, d));
        for _ in 0..max_iter {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if xi_at(z.0 + mid * d.0, z.1 + mid * d.1, p) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Arctic boundary point on the ray from the centre at angle θ.
    pub fn ray_boundary(&self, theta: f64) -> (f64, f64) {
        let d = (theta.cos(), theta.sin());
        let t = self.liquid_exit(self.center, d, 200);
        (self.center.0 + t * d.0, self.center.1 + t * d.1)
    }

    /// Polyline of the arctic boundary with n points, anticlockwise.
    pub fn outline(&self, n: usize) -> Vec<(f64, f64)> {
        if n == OUTLINE_POINTS {
            return self.outline.clone();
        }
        (0..n).map(|i| self.ray_boundary(2.0 * PI * i as f64 / n as f64)).collect()
    }

    /// Nearest arctic point to z: (distance, point, ray angle of the point).
    pub fn closest(&self, z: (f64, f64)) -> (f64, (f64, f64), f64) {
        let n = self.outline.len();
        let dist = |w: (f64, f64)| (z.0 - w.0).hypot(z.1 - w.1);
        let best = (0..n)
            .min_by(|&i, &j| dist(self.outline[i]).total_cmp(&dist(self.outline[j])))
            .unwrap();
        let step = 2.0 * PI / n as f64;
        let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let f = |th: f64| dist(self.ray_boundary(th));
        let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..90 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        let th = 0.5 * (lo + hi);
        let w = self.ray_boundary(th);
        (dist(w), w, th)
    }

    /// Unit tangent of the boundary at ray angle θ, anticlockwise.
    pub fn tangent(&self, theta: f64) -> (f64, f64) {
        let h = 1e-6;
        let (p, m) = (self.ray_boundary(theta + h), self.ray_boundary(theta - h));
        let n = (p.0 - m.0).hypot(p.1 - m.1);
        ((p.0 - m.0) / n, (p.1 - m.1) / n)
    }

    /// Abscissas where the horizontal line at height y meets the boundary.
    pub fn horizontal_chord(&self, y: f64) -> Option<(f64, f64)> {
        let p = &self.params;
        let (c2, c1, c0) = p.line_quadratic((0.0, p.tilt(y)), (1.0, 0.0));
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 || !(c2 > 0.0) {
            return None;
        }
        let s = -0.5 * (c1 + if c1 >= 0.0 { 1.0 } else { -1.0 } * disc.sqrt());
        let (r1, r2) = if s == 0.0 { (0.0, 0.0) } else { (s / c2, c0 / s) };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        Some((p.untilt(lo), p.untilt(hi)))
    }

    /// Abscissa of the left frozen arc at height h, for 0 ≤ h ≤ y(p^W).
    pub fn left_abscissa(&self, h: f64) -> Result<f64> {
        let top = self.point(Side::W).1;
        if !(0.0..=top).contains(&h) {
            return Err(Error::Invalid(format!("height {h} outside [0, {top}]")));
        }
        if h == 0.0 {
            return Ok(self.point(Side::SW).0);
        }
        Ok(self.horizontal_chord(h).map_or(0.0, |c| c.0))
    }
}

/// x of the bottom tangency from its closed form
/// 𝔮^x = (𝔮^a − 1)(𝔮^{−b} − 1)/(𝔮^{−b−c} − 1) + 1.
pub fn bottom_tangency_closed_form(p: &ShapeParams) -> f64 {
    let q = p.q;
    if q == 0.0 {
        return p.a * p.b / (p.b + p.c);
    }
    let r = (q * p.a).exp_m1() * (-q * p.b).exp_m1() / (-q * (p.b + p.c)).exp_m1();
    r.ln_1p() / q
}

/// x of the bottom tangency by bisection. On y = 0 the conic reduces to
/// β² with β = X(B+C) − AB, so the signed factor β is bracketed instead of
/// the double root of ξ.
pub fn bottom_tangency_root_find(p: &ShapeParams) -> f64 {
    let beta = |x: f64| p.tilt(x) * (p.big_b + p.big_c) - p.big_a * p.big_b;
    debug_assert!((xi_at(0.3 * p.a, 0.0, p) - beta(0.3 * p.a).powi(2)).abs() < 1e-12);
    let (mut lo, mut hi) = (0.0, p.a);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
