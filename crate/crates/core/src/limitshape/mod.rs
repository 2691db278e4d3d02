//! The q-tilted limit shape of the a×b×c hexagon.
//!
//! Coordinates are macroscopic: the hexagon has corners (0,0), (a,0),
//! (a+c,c), (a+c,b+c), (c,b+c), (0,b). Points are mapped to tilted
//! coordinates X = −[−x], Y = −[−y]; in those coordinates the sides are
//! straight lines and the arctic boundary is the conic ξ(X, Y) = 0.

mod edge;
mod geometry;
mod oracle;
pub mod quad;

pub use edge::*;
pub use geometry::*;
pub use oracle::*;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this |q| the bracket uses its series in q.
pub const SERIES_CUTOFF: f64 = 1e-6;

/// Slack for "inside the closed hexagon" tests.
const HEX_SLACK: f64 = 1e-12;

/// [z] = (𝔮^{−z} − 1)/(𝔮^{−1} − 1), 𝔮 = e^q.
pub fn bracket(z: f64, q: f64) -> f64 {
    if q.abs() < SERIES_CUTOFF {
        let w = z * (1.0 - z);
        z + q * w / 2.0 + q * q * w * (1.0 - 2.0 * z) / 12.0
    } else {
        (-q * z).exp_m1() / (-q).exp_m1()
    }
}

pub fn bracket_complex(z: Complex64, q: f64) -> Complex64 {
    if q.abs() < SERIES_CUTOFF {
        let w = z * (1.0 - z);
        z + w * (q / 2.0) + w * (1.0 - 2.0 * z) * (q * q / 12.0)
    } else {
        ((-q * z).exp() - 1.0) / (-q).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// e^q
    pub base: f64,
    /// 1 − e^{−q}
    pub k: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub big_c: f64,
}

impl ShapeParams {
    pub fn new(q: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        if !(q.is_finite() && a > 0.0 && b > 0.0 && c > 0.0 && a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::ShapeParams(format!("q={q} a={a} b={b} c={c}")));
        }
        let big_b = bracket(b, q);
        Ok(ShapeParams {
            q,
            a,
            b,
            c,
            base: q.exp(),
            k: -(-q).exp_m1(),
            big_a: -bracket(-a, q),
            big_b,
            big_c: bracket(b + c, q) - big_b,
        })
    }

    pub fn unit(q: f64) -> Self {
        ShapeParams::new(q, 1.0, 1.0, 1.0).expect("unit hexagon is valid")
    }

    /// x ↦ −[−x].
    #[inline]
    pub fn tilt(&self, x: f64) -> f64 {
        -bracket(-x, self.q)
    }

    /// Inverse of [`ShapeParams::tilt`].
    #[inline]
    pub fn untilt(&self, t: f64) -> f64 {
        if self.q == 0.0 {
            t
        } else {
            (t * self.k).ln_1p() / self.q
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let s = HEX_SLACK;
        x >= -s && y >= -s && x <= self.a + self.c + s && y <= self.b + self.c + s && y - x <= self.b + s && x - y <= self.a + s
    }

    /// Lowest and highest y of the hexagon in column x.
    pub fn column_span(&self, x: f64) -> (f64, f64) {
        ((x - self.a).max(0.0), (x + self.b).min(self.b + self.c))
    }

    /// (α, β, γ) with ξ = β² − 4αγ, η = −β, ζ = 2α.
    #[inline]
    fn abg(&self, big_x: f64, big_y: f64) -> (f64, f64, f64) {
        let (aa, bb, cc, k) = (self.big_a, self.big_b, self.big_c, self.k);
        let ab = aa * bb;
        let alpha = aa + cc - big_x + k * (aa + cc) * big_y;
        let beta = big_x * (bb + cc) - big_y * (aa + cc) - ab - k * ab * big_y;
        (alpha, beta, ab * big_y)
    }

    /// Coefficients (c2, c1, c0) of t ↦ ξ(P + tD) for a line in tilted coordinates.
    pub fn line_quadratic(&self, p: (f64, f64), dir: (f64, f64)) -> (f64, f64, f64) {
        let (aa, bb, cc, k) = (self.big_a, self.big_b, self.big_c, self.k);
        let ab = aa * bb;
        let (a0, b0, g0) = self.abg(p.0, p.1);
        let a1 = -dir.0 + k * (aa + cc) * dir.1;
        let b1 = dir.0 * (bb + cc) - dir.1 * (aa + cc) - k * ab * dir.1;
        let g1 = ab * dir.1;
        (b1 * b1 - 4.0 * a1 * g1, 2.0 * b0 * b1 - 4.0 * (a0 * g1 + a1 * g0), b0 * b0 - 4.0 * a0 * g0)
    }
}

/// (ξ, η, ζ) at tilted coordinates (X, Y).
pub fn xi_eta_zeta(big_x: f64, big_y: f64, p: &ShapeParams) -> (f64, f64, f64) {
    let (alpha, beta, gamma) = p.abg(big_x, big_y);
    (beta * beta - 4.0 * alpha * gamma, -beta, 2.0 * alpha)
}

/// ξ at a macroscopic point.
pub fn xi_at(x: f64, y: f64, p: &ShapeParams) -> f64 {
    xi_eta_zeta(p.tilt(x), p.tilt(y), p).0
}

/// Root v = (η + √ξ)/ζ, the one with positive imaginary part when ξ < 0.
pub fn solve_v(x: f64, y: f64, p: &ShapeParams) -> Result<Complex64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::OutsideHexagon(x, y));
    }
    Ok(v_at(p.tilt(x), p.tilt(y), p).1)
}

/// (ξ, v) at tilted coordinates. Where the quadratic degenerates to a
/// linear equation (ζ = 0) its finite root −γ/β is used.
fn v_at(big_x: f64, big_y: f64, p: &ShapeParams) -> (f64, Complex64) {
    let (alpha, beta, gamma) = p.abg(big_x, big_y);
    let xi = beta * beta - 4.0 * alpha * gamma;
    if alpha == 0.0 {
        let v = if beta == 0.0 { 0.0 } else { -gamma / beta };
        return (xi, Complex64::new(v, 0.0));
    }
    (xi, v_from(xi, -beta, 2.0 * alpha))
}

#[inline]
fn v_from(xi: f64, eta: f64, zeta: f64) -> Complex64 {
    if xi < 0.0 {
        Complex64::new(eta / zeta, (-xi).sqrt() / zeta.abs())
    } else {
        Complex64::new((eta + xi.sqrt()) / zeta, 0.0)
    }
}

/// f = (𝔮^u − 𝔮^y)/(𝔮^u − 𝔮^{y−x}) with 𝔮^{−u} = 1 + v(𝔮^{−1} − 1),
/// rewritten as (v𝔮^y − Y)/(v𝔮^{y−x} + [x−y]) so that it is smooth in q.
#[inline]
fn slope_from_v(v: Complex64, x: f64, y: f64, big_y: f64, p: &ShapeParams) -> Complex64 {
    let ey = (p.q * y).exp();
    let eyx = (p.q * (y - x)).exp();
    (v * ey - big_y) / (v * eyx + bracket(x - y, p.q))
}

/// arg in [0, π]; a real value with a signed zero imaginary part maps to 0 or π.
#[inline]
fn upper_arg(z: Complex64) -> f64 {
    if z.im > 0.0 {
        z.im.atan2(z.re)
    } else if z.re >= 0.0 {
        0.0
    } else {
        PI
    }
}

/// Gradient (∂ₓ, ∂ᵧ) read off the complex slope.
#[inline]
pub fn gradient_from_slope(f: Complex64) -> (f64, f64) {
    (upper_arg(f - 1.0) / PI - 1.0, 1.0 - upper_arg(f) / PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Liquid,
    FrozenS,
    FrozenN,
    FrozenSW,
    FrozenNE,
    FrozenSE,
    FrozenNW,
    Boundary,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Liquid => "liquid",
            Phase::FrozenS => "frozenS",
            Phase::FrozenN => "frozenN",
            Phase::FrozenSW => "frozenSW",
            Phase::FrozenNE => "frozenNE",
            Phase::FrozenSE => "frozenSE",
            Phase::FrozenNW => "frozenNW",
            Phase::Boundary => "boundary",
        }
    }

    pub fn is_frozen(self) -> bool {
        !matches!(self, Phase::Liquid | Phase::Boundary)
    }

    /// Constant gradient of a frozen phase.
    pub fn frozen_gradient(self) -> Option<(f64, f64)> {
        match self {
            Phase::FrozenS | Phase::FrozenN => Some((0.0, 0.0)),
            Phase::FrozenSW | Phase::FrozenNE => Some((0.0, 1.0)),
            Phase::FrozenSE | Phase::FrozenNW => Some((-1.0, 1.0)),
            _ => None,
        }
    }

    /// Height in a frozen phase, which is affine there.
    pub fn frozen_height(self, x: f64, y: f64, p: &ShapeParams) -> Option<f64> {
        match self {
            Phase::FrozenS => Some(0.0),
            Phase::FrozenN => Some(p.b),
            Phase::FrozenSW => Some(y),
            Phase::FrozenNE => Some(y - p.c),
            Phase::FrozenSE => Some(y - x + p.a),
            Phase::FrozenNW => Some(y - x),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeInfo {
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub v: Complex64,
    pub f: Complex64,
    pub phase: Phase,
    /// (∂ₓ𝓗, ∂ᵧ𝓗)
    pub grad: (f64, f64),
}

/// Liquid chord of a vertical line and the frozen phases below and above it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Column {
    pub x: f64,
    pub big_x: f64,
    /// Entry and exit ordinates of the liquid region; equal when the line only touches it.
    pub y_in: f64,
    pub y_out: f64,
    pub below: Phase,
    pub above: Phase,
}

/// Limit shape for fixed parameters: formulas plus the arctic geometry.
#[derive(Clone, Debug)]
pub struct LimitShape {
    pub params: ShapeParams,
    pub arctic: ArcticGeometry,
}

/// Quadrature tolerance for heights.
const HEIGHT_TOL: f64 = 1e-13;

impl LimitShape {
    pub fn new(params: ShapeParams) -> Result<Self> {
        let arctic = ArcticGeometry::new(&params)?;
        Ok(LimitShape { params, arctic })
    }

    pub fn unit(q: f64) -> Result<Self> {
        LimitShape::new(ShapeParams::unit(q))
    }

    fn check_inside(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        if !(x.is_finite() && y.is_finite()) || !p.contains(x, y) {
            return Err(Error::OutsideHexagon(x, y));
        }
        let x = x.clamp(0.0, p.a + p.c);
        let (lo, hi) = p.column_span(x);
        Ok((x, y.clamp(lo, hi)))
    }

    /// Vertical chord through the liquid region at abscissa x.
    pub fn column(&self, x: f64) -> Column {
        let p = &self.params;
        let t = &self.arctic;
        let big_x = p.tilt(x);
        let (c2, c1, c0) = p.line_quadratic((big_x, 0.0), (0.0, 1.0));
        let disc = c1 * c1 - 4.0 * c2 * c0;
        let (y_in, y_out) = if disc > 0.0 && c2 > 0.0 {
            let s = -0.5 * (c1 + c1.signum() * disc.sqrt());
            let (r1, r2) = (s / c2, c0 / s);
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            (p.untilt(lo), p.untilt(hi))
        } else {
            let y = p.untilt(-c1 / (2.0 * c2));
            (y, y)
        };
        let below = if x < t.point(Side::SW).0 {
            Phase::FrozenSW
        } else if x <= t.point(Side::SE).0 {
            Phase::FrozenS
        } else {
            Phase::FrozenSE
        };
        let above = if x < t.point(Side::NW).0 {
            Phase::FrozenNW
        } else if x <= t.point(Side::NE).0 {
            Phase::FrozenN
        } else {
            Phase::FrozenNE
        };
        Column { x, big_x, y_in, y_out, below, above }
    }

    /// ∂ᵧ𝓗 from the liquid formula, valid on the closed chord.
    #[inline]
    fn dy_liquid(&self, x: f64, big_x: f64, y: f64) -> f64 {
        let p = &self.params;
        let big_y = p.tilt(y);
        let (_, v) = v_at(big_x, big_y, p);
        1.0 - upper_arg(slope_from_v(v, x, y, big_y, p)) / PI
    }

    pub fn phase(&self, x: f64, y: f64) -> Result<Phase> {
        Ok(self.slope(x, y)?.phase)
    }

    pub fn slope(&self, x: f64, y: f64) -> Result<SlopeInfo> {
        let (x, y) = self.check_inside(x, y)?;
        let p = &self.params;
        let big_y = p.tilt(y);
        let (xi, v) = v_at(p.tilt(x), big_y, p);
        let f = slope_from_v(v, x, y, big_y, p);
        let phase = if xi < 0.0 {
            Phase::Liquid
        } else if xi <= 1e-13 {
            Phase::Boundary
        } else {
            let col = self.column(x);
            if y <= 0.5 * (col.y_in + col.y_out) {
                col.below
            } else {
                col.above
            }
        };
        let grad = phase.frozen_gradient().unwrap_or_else(|| gradient_from_slope(f));
        Ok(SlopeInfo { x, y, xi, v, f, phase, grad })
    }

    /// ∫ ∂ᵧ𝓗 over [y_in, y] (lower = true) or [y, y_out], with the
    /// substitution y = y_in + 2r sin²(θ/2) that smooths the square-root
    /// behaviour at both chord ends.
    fn chord_integral(&self, col: &Column, y: f64, lower: bool) -> Option<f64> {
        let r = 0.5 * (col.y_out - col.y_in);
        if r <= 0.0 {
            return Some(0.0);
        }
        let gap = if lower { y - col.y_in } else { col.y_out - y };
        if gap <= 0.0 {
            return Some(0.0);
        }
        let theta_end = 2.0 * (gap / (2.0 * r)).sqrt().min(1.0).asin();
        let integrand = |th: f64| {
            let s = (0.5 * th).sin();
            let off = 2.0 * r * s * s;
            let yy = if lower { col.y_in + off } else { col.y_out - off };
            self.dy_liquid(col.x, col.big_x, yy) * r * th.sin()
        };
        quad::integrate(integrand, 0.0, theta_end, HEIGHT_TOL)
    }

    /// 𝓗(x, y).
    pub fn height(&self, x: f64, y: f64) -> Result<f64> {
        let (x, y) = self.check_inside(x, y)?;
        let p = &self.params;
        let col = self.column(x);
        let v = if y <= col.y_in {
            col.below.frozen_height(x, y, p).expect("frozen")
        } else if y >= col.y_out {
            col.above.frozen_height(x, y, p).expect("frozen")
        } else if y - col.y_in <= col.y_out - y {
            let base = col.below.frozen_height(x, col.y_in, p).expect("frozen");
            base + self.chord_integral(&col, y, true).ok_or(Error::Quadrature(x, y))?
        } else {
            let base = col.above.frozen_height(x, col.y_out, p).expect("frozen");
            base - self.chord_integral(&col, y, false).ok_or(Error::Quadrature(x, y))?
        };
        Ok(v)
    }

    /// Jump of 𝓗 across the liquid chord computed by integration, and the
    /// same jump implied by the frozen phases at its ends.
    pub fn column_closure(&self, x: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let col = self.column(x);
        let integral = self.chord_integral(&col, col.y_out, true).ok_or(Error::Quadrature(x, col.y_out))?;
        let frozen = col.above.frozen_height(x, col.y_out, p).unwrap() - col.below.frozen_height(x, col.y_in, p).unwrap();
        Ok((integral, frozen))
    }

    /// 𝒰^h(x): the ordinate where 𝓗(x, ·) reaches h; sup of the zero set for
    /// h = 0 and inf of the top set for h = b.
    pub fn level_line(&self, h: f64, x: f64) -> Result<f64> {
        let p = &self.params;
        if !(0.0..=p.b).contains(&h) {
            return Err(Error::Invalid(format!("level {h} outside [0, {}]", p.b)));
        }
        if !(0.0..=p.a + p.c).contains(&x) {
            return Err(Error::OutsideHexagon(x, 0.0));
        }
        let col = self.column(x);
        let lo_val = col.below.frozen_height(x, col.y_in, p).unwrap();
        let hi_val = col.above.frozen_height(x, col.y_out, p).unwrap();
        let (span_lo, span_hi) = p.column_span(x);
        if h <= lo_val {
            return Ok(match col.below {
                Phase::FrozenSW => h,
                Phase::FrozenSE => h + x - p.a,
                _ => col.y_in,
            }
            .clamp(span_lo, span_hi));
        }
        if h >= hi_val {
            return Ok(match col.above {
                Phase::FrozenNW => h + x,
                Phase::FrozenNE => h + p.c,
                _ => col.y_out,
            }
            .clamp(span_lo, span_hi));
        }
        let (mut lo, mut hi) = (col.y_in, col.y_out);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.height(x, mid)? >= h {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
