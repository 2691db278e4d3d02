//! Edge coordinates near the arctic boundary, dyadic annuli and scaling checks.

use serde::{Deserialize, Serialize};

use super::{nearest_side, LimitShape, Phase, Side};
use crate::error::{Error, Result};
use crate::stats::least_squares;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoords {
    pub side: Side,
    /// Euclidean distance to the nearest side.
    pub side_distance: f64,
    /// Square root of `side_distance`.
    pub side_root: f64,
    /// Distance to the arctic boundary along the nearest side's direction; 0 off the liquid region.
    pub lateral: f64,
    /// max(side_root, N^{−1/2})
    pub side_root_cut: f64,
    /// max(lateral, side_root_cut^{−1/3} N^{−2/3})
    pub lateral_cut: f64,
    /// Unit direction of the nearest side, anticlockwise.
    pub along: (f64, f64),
    /// Unit vector from the point to its nearest arctic point.
    pub toward_arctic: (f64, f64),
    /// Unit tangent of the arctic boundary at that nearest point, anticlockwise.
    pub arctic_tangent: (f64, f64),
    pub arctic_distance: f64,
    pub liquid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusInfo {
    /// Smallest ℓ with 4^{−ℓ} ≤ product ≤ 4^{1−ℓ}.
    pub level: i64,
    /// side_root_cut · lateral_cut
    pub product: f64,
    pub in_a: bool,
    pub in_b: bool,
    pub in_a_u: bool,
    pub in_b_u: bool,
    /// product = 4^{−level}, so the point also lies in annulus level+1.
    pub also_next: bool,
}

/// Dyadic annulus of a product s = 𝚍𝚎 with threshold u/N on 𝚍^{1/2}𝚎^{3/2}.
pub fn annulus_of(side_root_cut: f64, lateral_cut: f64, n: f64, u: f64) -> AnnulusInfo {
    let s = side_root_cut * lateral_cut;
    let quarter = |l: i64| 4f64.powi(-(l as i32));
    let mut level = (-s.log(4.0)).ceil() as i64;
    while quarter(level) > s {
        level += 1;
    }
    while quarter(level - 1) <= s {
        level -= 1;
    }
    let in_a = quarter(level) <= s && s <= quarter(level - 1);
    let in_b = 2.0 * quarter(level) <= s && s <= quarter(level - 1);
    let thick = side_root_cut.sqrt() * lateral_cut.powf(1.5) >= u / n;
    AnnulusInfo {
        level,
        product: s,
        in_a,
        in_b,
        in_a_u: in_a && thick,
        in_b_u: in_b && thick,
        also_next: s == quarter(level),
    }
}

/// Smallest integer ℓ with 2^{−21} q^{2/3} N^{2/3 − Aδ} ≤ 4^ℓ; the upper
/// bound 4^ℓ < 2^{−19}(…) then holds automatically.
pub fn annulus_base_level(q: f64, n: f64, a_delta: f64) -> Result<i64> {
    if !(q > 0.0 && n >= 1.0) {
        return Err(Error::Invalid(format!("need q > 0 and N ≥ 1, got q={q} N={n}")));
    }
    let log2_lower = -21.0 + (2.0 / 3.0) * q.log2() + (2.0 / 3.0 - a_delta) * n.log2();
    let mut l = (log2_lower / 2.0).ceil() as i64;
    let lower = |l: i64| 2f64.powf(2.0 * l as f64) >= 2f64.powf(log2_lower);
    while !lower(l) {
        l += 1;
    }
    while lower(l - 1) {
        l -= 1;
    }
    Ok(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transect {
    /// Approach the bottom arc to the right of the bottom tangency point.
    RightOfTangency,
    /// Approach the left arc, left of the bottom tangency point.
    LeftOfTangency,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransectPoint {
    pub x: f64,
    pub y: f64,
    pub lateral: f64,
    pub height: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeScalingReport {
    pub q: f64,
    pub transect: Transect,
    pub y: f64,
    pub side_root: f64,
    pub points: Vec<TransectPoint>,
    /// Log-log slopes against the lateral distance.
    pub exponent_height: f64,
    pub exponent_dy: f64,
    pub exponent_dx: f64,
    /// Ranges of 𝓗/(𝔡^{1/2}𝔢^{3/2}), ∂ᵧ𝓗/(𝔢/𝔡)^{1/2}, −∂ₓ𝓗/(𝔡𝔢)^{1/2}.
    pub ratio_height: (f64, f64),
    pub ratio_dy: (f64, f64),
    pub ratio_dx: (f64, f64),
    pub dy_range: (f64, f64),
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

impl LimitShape {
    pub fn edge_coords(&self, x: f64, y: f64, n: f64) -> Result<EdgeCoords> {
        let p = &self.params;
        if !p.contains(x, y) {
            return Err(Error::OutsideHexagon(x, y));
        }
        let z = (x, y);
        let (side, side_distance) = nearest_side(p, z);
        let along = side.direction(p);
        let liquid = self.slope(x, y)?.phase == Phase::Liquid;
        let lateral = if liquid {
            let fwd = self.arctic.liquid_exit(z, along, 52);
            let back = self.arctic.liquid_exit(z, (-along.0, -along.1), 52);
            fwd.min(back)
        } else {
            0.0
        };
        let (arctic_distance, w, th) = self.arctic.closest(z);
        let toward_arctic = if arctic_distance > 0.0 {
            ((w.0 - x) / arctic_distance, (w.1 - y) / arctic_distance)
        } else {
            let t = self.arctic.tangent(th);
            (t.1, -t.0)
        };
        let side_root = side_distance.sqrt();
        let side_root_cut = side_root.max(n.powf(-0.5));
        let lateral_cut = lateral.max(side_root_cut.powf(-1.0 / 3.0) * n.powf(-2.0 / 3.0));
        Ok(EdgeCoords {
            side,
            side_distance,
            side_root,
            lateral,
            side_root_cut,
            lateral_cut,
            along,
            toward_arctic,
            arctic_tangent: self.arctic.tangent(th),
            arctic_distance,
            liquid,
        })
    }

    pub fn annulus_index(&self, x: f64, y: f64, n: f64, u: f64) -> Result<AnnulusInfo> {
        let e = self.edge_coords(x, y, n)?;
        Ok(annulus_of(e.side_root_cut, e.lateral_cut, n, u))
    }

    /// Membership in the liquid region widened by 𝔡^{2/3} N^{δ−2/3}.
    pub fn augmented_liquid(&self, x: f64, y: f64, n: f64, delta: f64) -> Result<bool> {
        if self.slope(x, y)?.phase == Phase::Liquid {
            return Ok(true);
        }
        let (_, side_distance) = nearest_side(&self.params, (x, y));
        let (dist, _, _) = self.arctic.closest((x, y));
        Ok(dist <= side_distance.sqrt().powf(2.0 / 3.0) * n.powf(delta - 2.0 / 3.0))
    }

    /// 𝔡^{−1/2}𝔢^{−3/2} 𝓗(z + (𝔡𝔢)^{1/2} u x̂ + 𝔡𝔢 w ŷ), centred at a liquid point.
    pub fn rescaled_height(&self, center: (f64, f64), offset: (f64, f64)) -> Result<f64> {
        let e = self.edge_coords(center.0, center.1, f64::INFINITY)?;
        if !e.liquid {
            return Err(Error::Invalid("rescaling centre must be liquid".into()));
        }
        let (d, l) = (e.side_root, e.lateral);
        let s = (d * l).sqrt();
        let px = center.0 + s * e.arctic_tangent.0 * offset.0 + d * l * e.toward_arctic.0 * offset.1;
        let py = center.1 + s * e.arctic_tangent.1 * offset.0 + d * l * e.toward_arctic.1 * offset.1;
        Ok(self.height(px, py)? / (d.sqrt() * l.powf(1.5)))
    }

    /// Scaling of 𝓗 and its gradient along the horizontal line at height `y`
    /// as the lateral distance runs over `laterals`.
    pub fn edge_scaling_check(&self, transect: Transect, y: f64, laterals: &[f64]) -> Result<EdgeScalingReport> {
        let chord = self
            .arctic
            .horizontal_chord(y)
            .ok_or_else(|| Error::Invalid(format!("height {y} misses the liquid region")))?;
        let x_tan = self.arctic.point(Side::SW).0;
        let mut points = Vec::new();
        for &l in laterals {
            let x = match transect {
                Transect::RightOfTangency => chord.1 - l,
                Transect::LeftOfTangency => chord.0 + l,
            };
            let right = x >= x_tan;
            if right != (transect == Transect::RightOfTangency) {
                return Err(Error::Invalid(format!("transect point x={x} on the wrong side of the tangency")));
            }
            let e = self.edge_coords(x, y, f64::INFINITY)?;
            if !e.liquid || e.side != Side::SW {
                return Err(Error::Invalid(format!("transect point ({x}, {y}) leaves the bottom liquid strip")));
            }
            let s = self.slope(x, y)?;
            points.push(TransectPoint { x, y, lateral: e.lateral, height: self.height(x, y)?, dx: s.grad.0, dy: s.grad.1 });
        }
        let d = y.sqrt();
        let le: Vec<f64> = points.iter().map(|p| p.lateral.ln()).collect();
        let fit = |f: &dyn Fn(&TransectPoint) -> f64| {
            let v: Vec<f64> = points.iter().map(|p| f(p).abs().max(1e-300).ln()).collect();
            least_squares(&le, &v).0
        };
        Ok(EdgeScalingReport {
            q: self.params.q,
            transect,
            y,
            side_root: d,
            exponent_height: fit(&|p| p.height),
            exponent_dy: fit(&|p| p.dy),
            exponent_dx: fit(&|p| p.dx),
            ratio_height: range(points.iter().map(|p| p.height / (d.sqrt() * p.lateral.powf(1.5)))),
            ratio_dy: range(points.iter().map(|p| p.dy / (p.lateral / d).sqrt())),
            ratio_dx: range(points.iter().map(|p| -p.dx / (d * p.lateral).sqrt())),
            dy_range: range(points.iter().map(|p| p.dy)),
            points,
        })
    }

    /// Abscissa of the bottom arc right of the bottom tangency at height y.
    pub fn bottom_arc_abscissa(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(self.arctic.point(Side::SW).0);
        }
        self.arctic
            .horizontal_chord(y)
            .map(|c| c.1)
            .ok_or_else(|| Error::Invalid(format!("height {y} misses the liquid region")))
    }
}

/// Horizontal shift x − x' of the bottom arc between two tilts at height y.
pub fn boundary_shift(shape_q: &LimitShape, shape_q2: &LimitShape, y: f64) -> Result<f64> {
    Ok(shape_q.bottom_arc_abscissa(y)? - shape_q2.bottom_arc_abscissa(y)?)
}

/// (𝓗_q(z), 𝓗_{q'}(z)); flags the pair when the first is below the second by more than `tol`.
pub fn monotone_in_q(shape_q: &LimitShape, shape_q2: &LimitShape, x: f64, y: f64, tol: f64) -> Result<(f64, f64, bool)> {
    if shape_q.params.q < shape_q2.params.q {
        return Err(Error::Invalid("need q ≥ q'".into()));
    }
    let (h1, h2) = (shape_q.height(x, y)?, shape_q2.height(x, y)?);
    Ok((h1, h2, h1 >= h2 - tol))
}
