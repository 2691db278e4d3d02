//! Hexagon domains and integer height fields.
//!
//! Vertices are integer points (x, y) with 0 ≤ x ≤ na+nc, 0 ≤ y ≤ nb+nc,
//! y − x ≤ nb and x − y ≤ na. Heights are stored in lattice units.
//! Admissible increments: x-step in {−1, 0}, y-step in {0, 1},
//! diagonal (1,1)-step in {0, 1}.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HexDomain {
    na: i32,
    nb: i32,
    nc: i32,
    #[serde(skip)]
    interior: Vec<u32>,
}

/// Build the hexagon with sides `na`, `nb`, `nc` (lattice units).
pub fn make_domain(na: i64, nb: i64, nc: i64) -> Result<Arc<HexDomain>> {
    HexDomain::new(na, nb, nc).map(Arc::new)
}

impl HexDomain {
    pub fn new(na: i64, nb: i64, nc: i64) -> Result<Self> {
        if na < 1 || nb < 1 || nc < 1 || na + nb + nc > 1 << 14 {
            return Err(Error::InvalidSides(na, nb, nc));
        }
        let mut d = HexDomain { na: na as i32, nb: nb as i32, nc: nc as i32, interior: Vec::new() };
        let mut interior = Vec::new();
        for x in 0..d.width() as i32 {
            for y in 0..d.rows() as i32 {
                if d.contains(x, y) && !d.is_boundary(x, y) {
                    interior.push(d.index(x, y) as u32);
                }
            }
        }
        d.interior = interior;
        Ok(d)
    }

    pub fn sides(&self) -> (i32, i32, i32) {
        (self.na, self.nb, self.nc)
    }

    /// Number of grid columns, na + nc + 1.
    #[inline]
    pub fn width(&self) -> usize {
        (self.na + self.nc + 1) as usize
    }

    /// Number of grid rows, nb + nc + 1.
    #[inline]
    pub fn rows(&self) -> usize {
        (self.nb + self.nc + 1) as usize
    }

    #[inline]
    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && x <= self.na + self.nc && y <= self.nb + self.nc && y - x <= self.nb && x - y <= self.na
    }

    pub fn is_boundary(&self, x: i32, y: i32) -> bool {
        self.contains(x, y)
            && (x == 0
                || y == 0
                || x == self.na + self.nc
                || y == self.nb + self.nc
                || y - x == self.nb
                || x - y == self.na)
    }

    /// Forced height on the boundary, `None` for interior or outside points.
    pub fn boundary_value(&self, x: i32, y: i32) -> Option<i32> {
        if !self.is_boundary(x, y) {
            return None;
        }
        Some(if y == 0 || x - y == self.na {
            0
        } else if y - x == self.nb || y == self.nb + self.nc {
            self.nb
        } else if x == 0 {
            y
        } else {
            y - self.nc
        })
    }

    #[inline]
    pub fn index(&self, x: i32, y: i32) -> usize {
        y as usize * self.width() + x as usize
    }

    #[inline]
    pub fn vertex(&self, idx: usize) -> (i32, i32) {
        ((idx % self.width()) as i32, (idx / self.width()) as i32)
    }

    /// Flat indices of interior vertices, ordered by (x, y).
    pub fn interior(&self) -> &[u32] {
        &self.interior
    }

    /// All vertices ordered by (x, y).
    pub fn vertices(&self) -> Vec<(i32, i32)> {
        let mut v = Vec::new();
        for x in 0..self.width() as i32 {
            for y in 0..self.rows() as i32 {
                if self.contains(x, y) {
                    v.push((x, y));
                }
            }
        }
        v
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices().len()
    }

    pub fn corners(&self) -> [(i32, i32); 6] {
        let (a, b, c) = (self.na, self.nb, self.nc);
        [(0, 0), (a, 0), (a + c, c), (a + c, b + c), (c, b + c), (0, b)]
    }

    /// Number of lozenges in any tiling.
    pub fn lozenge_count(&self) -> usize {
        (self.na * self.nb + self.nb * self.nc + self.nc * self.na) as usize
    }
}

/// Extreme admissible values at flat index `i` given its six neighbours.
/// The caller guarantees `i` is interior.
#[inline]
pub fn neighbour_bounds(h: &[i32], width: usize, i: usize) -> (i32, i32) {
    let l = h[i - 1];
    let r = h[i + 1];
    let d = h[i - width];
    let u = h[i + width];
    let dl = h[i - width - 1];
    let ur = h[i + width + 1];
    let lo = (l - 1).max(r).max(d).max(u - 1).max(dl).max(ur - 1);
    let hi = l.min(r + 1).min(d + 1).min(u).min(dl + 1).min(ur);
    (lo, hi)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightField {
    domain: Arc<HexDomain>,
    h: Vec<i32>,
}

impl HeightField {
    /// Field from a closure over interior vertices; boundary values are forced.
    pub fn from_fn(domain: &Arc<HexDomain>, mut f: impl FnMut(i32, i32) -> i32) -> Result<Self> {
        let mut h = vec![0; domain.width() * domain.rows()];
        for (x, y) in domain.vertices() {
            h[domain.index(x, y)] = domain.boundary_value(x, y).unwrap_or_else(|| f(x, y));
        }
        let field = HeightField { domain: domain.clone(), h };
        field.check_admissible()?;
        Ok(field)
    }

    /// Wrap a raw grid (row-major, `width*rows`) without checking.
    pub(crate) fn from_raw(domain: Arc<HexDomain>, h: Vec<i32>) -> Self {
        debug_assert_eq!(h.len(), domain.width() * domain.rows());
        HeightField { domain, h }
    }

    pub fn from_grid(domain: &Arc<HexDomain>, h: Vec<i32>) -> Result<Self> {
        if h.len() != domain.width() * domain.rows() {
            return Err(Error::Invalid("grid size does not match domain".into()));
        }
        let mut h = h;
        for (i, v) in h.iter_mut().enumerate() {
            let (x, y) = domain.vertex(i);
            if !domain.contains(x, y) {
                *v = 0;
            }
        }
        let f = HeightField { domain: domain.clone(), h };
        f.check_admissible()?;
        Ok(f)
    }

    pub fn domain(&self) -> &Arc<HexDomain> {
        &self.domain
    }

    /// Row-major grid of heights; entries outside the hexagon are 0.
    pub fn raw(&self) -> &[i32] {
        &self.h
    }

    pub fn into_raw(self) -> Vec<i32> {
        self.h
    }

    pub fn get(&self, x: i32, y: i32) -> Option<i32> {
        self.domain.contains(x, y).then(|| self.h[self.domain.index(x, y)])
    }

    #[inline]
    pub fn at(&self, x: i32, y: i32) -> i32 {
        self.h[self.domain.index(x, y)]
    }

    pub fn check_admissible(&self) -> Result<()> {
        let d = &*self.domain;
        for (x, y) in d.vertices() {
            let v = self.at(x, y);
            if let Some(b) = d.boundary_value(x, y) {
                if v != b {
                    return Err(Error::NotAdmissible(format!("boundary ({x},{y}) is {v}, expected {b}")));
                }
            }
            if d.contains(x + 1, y) {
                let s = self.at(x + 1, y) - v;
                if !(-1..=0).contains(&s) {
                    return Err(Error::NotAdmissible(format!("x-step {s} at ({x},{y})")));
                }
            }
            if d.contains(x, y + 1) {
                let s = self.at(x, y + 1) - v;
                if !(0..=1).contains(&s) {
                    return Err(Error::NotAdmissible(format!("y-step {s} at ({x},{y})")));
                }
            }
            if d.contains(x + 1, y + 1) {
                let s = self.at(x + 1, y + 1) - v;
                if !(0..=1).contains(&s) {
                    return Err(Error::NotAdmissible(format!("diagonal step {s} at ({x},{y})")));
                }
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.check_admissible().is_ok()
    }

    /// Pointwise `self ≤ other`.
    pub fn leq(&self, other: &HeightField) -> bool {
        self.h.iter().zip(&other.h).all(|(a, b)| a <= b)
    }

    /// Copy with h(z) replaced; fails if the result is not admissible.
    pub fn with_value(&self, x: i32, y: i32, value: i32) -> Result<HeightField> {
        let (lo, hi) = local_bounds(self, x, y)?;
        if value < lo || value > hi {
            return Err(Error::NotAdmissible(format!("value {value} at ({x},{y}) outside [{lo},{hi}]")));
        }
        let mut g = self.clone();
        let i = self.domain.index(x, y);
        g.h[i] = value;
        Ok(g)
    }
}

/// Minimal and maximal fields (η^∨, η^∧).
pub fn extreme_tilings(d: &Arc<HexDomain>) -> (HeightField, HeightField) {
    let n = d.width() * d.rows();
    let w = d.width();
    let mut lo = vec![0i32; n];
    let mut hi = vec![0i32; n];
    for (x, y) in d.vertices() {
        let i = d.index(x, y);
        match d.boundary_value(x, y) {
            Some(b) => {
                lo[i] = b;
                hi[i] = b;
            }
            None => {
                lo[i] = 0;
                hi[i] = d.nb;
            }
        }
    }
    // Monotone relaxation: the pointwise extreme solution of the difference constraints.
    loop {
        let mut changed = false;
        for &i in d.interior() {
            let i = i as usize;
            let (_, up) = neighbour_bounds(&hi, w, i);
            if up < hi[i] {
                hi[i] = up;
                changed = true;
            }
            let (down, _) = neighbour_bounds(&lo, w, i);
            if down > lo[i] {
                lo[i] = down;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let min = HeightField::from_raw(d.clone(), lo);
    let max = HeightField::from_raw(d.clone(), hi);
    debug_assert!(min.is_admissible() && max.is_admissible());
    (min, max)
}

/// (hMin, hMax) at z; equal to the forced value on the boundary.
pub fn local_bounds(f: &HeightField, x: i32, y: i32) -> Result<(i32, i32)> {
    let d = &f.domain;
    if !d.contains(x, y) {
        return Err(Error::OutsideDomain(x as i64, y as i64));
    }
    if let Some(b) = d.boundary_value(x, y) {
        return Ok((b, b));
    }
    Ok(neighbour_bounds(&f.h, d.width(), d.index(x, y)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlipSite {
    pub x: i32,
    pub y: i32,
    pub h_min: i32,
    pub h_max: i32,
}

/// Interior vertices whose height can move by one.
pub fn flippable(f: &HeightField) -> Vec<FlipSite> {
    let d = &f.domain;
    d.interior()
        .iter()
        .filter_map(|&i| {
            let (lo, hi) = neighbour_bounds(&f.h, d.width(), i as usize);
            let (x, y) = d.vertex(i as usize);
            (hi > lo).then_some(FlipSite { x, y, h_min: lo, h_max: hi })
        })
        .collect()
}

/// Pointwise (min, max).
pub fn meet_join(f: &HeightField, g: &HeightField) -> Result<(HeightField, HeightField)> {
    if f.domain != g.domain {
        return Err(Error::DomainMismatch);
    }
    let lo = f.h.iter().zip(&g.h).map(|(a, b)| *a.min(b)).collect();
    let hi = f.h.iter().zip(&g.h).map(|(a, b)| *a.max(b)).collect();
    Ok((HeightField::from_raw(f.domain.clone(), lo), HeightField::from_raw(f.domain.clone(), hi)))
}

/// Sum of heights over every vertex of the domain.
pub fn volume(f: &HeightField) -> i64 {
    f.domain.vertices().iter().map(|&(x, y)| f.at(x, y) as i64).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    /// (1, 0)
    SE,
    /// (1, 1)
    NE,
}

/// Level line between {h < k} and {h ≥ k}. It passes through
/// (x, ys[x] + 1/2) for every column x.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelLine {
    pub level: i32,
    /// (x₀, y₀): the path starts at (x₀, y₀ + 1/2).
    pub start: (i32, i32),
    pub steps: Vec<Step>,
}

impl LevelLine {
    /// Lower integer ordinate of the crossing in every column.
    pub fn ordinates(&self) -> Vec<i32> {
        let mut ys = Vec::with_capacity(self.steps.len() + 1);
        let mut y = self.start.1;
        ys.push(y);
        for s in &self.steps {
            if *s == Step::NE {
                y += 1;
            }
            ys.push(y);
        }
        ys
    }
}

pub fn extract_level_line(f: &HeightField, k: i32) -> Result<LevelLine> {
    let d = &f.domain;
    if k < 1 || k > d.nb {
        return Err(Error::LevelOutOfRange { k: k as i64, max: d.nb as i64 });
    }
    let mut ys = Vec::with_capacity(d.width());
    for x in 0..d.width() as i32 {
        let y0 = (0..d.rows() as i32)
            .find(|&y| d.contains(x, y) && d.contains(x, y + 1) && f.at(x, y) == k - 1 && f.at(x, y + 1) == k)
            .ok_or_else(|| Error::NotAdmissible(format!("column {x} has no crossing of level {k}")))?;
        ys.push(y0);
    }
    let mut steps = Vec::with_capacity(ys.len() - 1);
    for w in ys.windows(2) {
        steps.push(match w[1] - w[0] {
            0 => Step::SE,
            1 => Step::NE,
            s => return Err(Error::NotAdmissible(format!("level line jump {s}"))),
        });
    }
    Ok(LevelLine { level: k, start: (0, ys[0]), steps })
}

pub fn level_lines(f: &HeightField) -> Result<Vec<LevelLine>> {
    (1..=f.domain.nb).map(|k| extract_level_line(f, k)).collect()
}

/// Rebuild the field from its nb level lines: h(x,y) counts lines below y.
pub fn reconstruct(d: &Arc<HexDomain>, lines: &[LevelLine]) -> Result<HeightField> {
    if lines.len() != d.nb as usize {
        return Err(Error::Invalid(format!("expected {} level lines, got {}", d.nb, lines.len())));
    }
    let ords: Vec<Vec<i32>> = lines.iter().map(|l| l.ordinates()).collect();
    if ords.iter().any(|o| o.len() != d.width()) {
        return Err(Error::Invalid("level line has wrong length".into()));
    }
    let mut h = vec![0; d.width() * d.rows()];
    for (x, y) in d.vertices() {
        h[d.index(x, y)] = ords.iter().filter(|o| o[x as usize] < y).count() as i32;
    }
    let f = HeightField::from_raw(d.clone(), h);
    f.check_admissible()?;
    Ok(f)
}

/// Every admissible field, in (x, y)-lexicographic DFS order with values ascending.
pub fn enumerate_all(d: &Arc<HexDomain>, limit: usize) -> Result<Vec<HeightField>> {
    let (min, max) = extreme_tilings(d);
    let w = d.width();
    let mut h = min.h.clone();
    let mut known: Vec<bool> = (0..h.len())
        .map(|i| {
            let (x, y) = d.vertex(i);
            d.is_boundary(x, y)
        })
        .collect();
    let order: Vec<usize> = d.interior().iter().map(|&i| i as usize).collect();
    let mut out = Vec::new();

    fn bounds(h: &[i32], known: &[bool], w: usize, i: usize) -> (i32, i32) {
        let mut lo = i32::MIN;
        let mut hi = i32::MAX;
        let mut add = |j: usize, dlo: i32, dhi: i32| {
            if known[j] {
                lo = lo.max(h[j] + dlo);
                hi = hi.min(h[j] + dhi);
            }
        };
        add(i - 1, -1, 0);
        add(i + 1, 0, 1);
        add(i - w, 0, 1);
        add(i + w, -1, 0);
        add(i - w - 1, 0, 1);
        add(i + w + 1, -1, 0);
        (lo, hi)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        pos: usize,
        order: &[usize],
        h: &mut Vec<i32>,
        known: &mut Vec<bool>,
        w: usize,
        min: &[i32],
        max: &[i32],
        d: &Arc<HexDomain>,
        out: &mut Vec<HeightField>,
        limit: usize,
    ) -> Result<()> {
        if pos == order.len() {
            if out.len() >= limit {
                return Err(Error::EnumerationLimit(limit));
            }
            out.push(HeightField::from_raw(d.clone(), h.clone()));
            return Ok(());
        }
        let i = order[pos];
        let (lo, hi) = bounds(h, known, w, i);
        let lo = lo.max(min[i]);
        let hi = hi.min(max[i]);
        for v in lo..=hi {
            h[i] = v;
            known[i] = true;
            dfs(pos + 1, order, h, known, w, min, max, d, out, limit)?;
        }
        known[i] = false;
        Ok(())
    }

    dfs(0, &order, &mut h, &mut known, w, &min.h, &max.h, d, &mut out, limit)?;
    Ok(out)
}

/// Tiling count of the a×b×c hexagon by the boxed plane partition product
/// ∏ (i+j+k−1)/(i+j+k−2). `None` on overflow.
pub fn boxed_plane_partitions(a: u32, b: u32, c: u32) -> Option<u128> {
    let (mut num, mut den) = (1u128, 1u128);
    for i in 1..=a {
        for j in 1..=b {
            for k in 1..=c {
                let p = (i + j + k - 1) as u128;
                let q = (i + j + k - 2) as u128;
                let g1 = p.gcd(&den);
                let g2 = q.gcd(&num);
                num = (num / g2).checked_mul(p / g1)?;
                den = (den / g1) * (q / g2);
            }
        }
    }
    (den == 1).then_some(num)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    /// h ↦ nb − h∘ρ with ρ the point reflection through the centre.
    Complement,
    /// (x, y) ↦ (y, x), h ↦ h(y, x) − x + y; needs na = nb.
    Transpose,
    ComplementTranspose,
}

pub fn symmetry_apply(f: &HeightField, s: Symmetry) -> Result<HeightField> {
    let d = &f.domain;
    let (na, nb, nc) = d.sides();
    let g = match s {
        Symmetry::Complement => {
            HeightField::from_fn(d, |x, y| nb - f.at(na + nc - x, nb + nc - y))?
        }
        Symmetry::Transpose => {
            if na != nb {
                return Err(Error::IncompatibleSymmetry("transpose"));
            }
            HeightField::from_fn(d, |x, y| f.at(y, x) - x + y)?
        }
        Symmetry::ComplementTranspose => {
            let t = symmetry_apply(f, Symmetry::Transpose)?;
            symmetry_apply(&t, Symmetry::Complement)?
        }
    };
    Ok(g)
}

/// Text grid: `hex na nb nc`, then one line per y ascending with one entry
/// per x; `.` marks points outside the hexagon.
pub fn to_grid_text(f: &HeightField) -> String {
    let d = &f.domain;
    let (na, nb, nc) = d.sides();
    let mut s = format!("hex {na} {nb} {nc}\n");
    for y in 0..d.rows() as i32 {
        for x in 0..d.width() as i32 {
            if x > 0 {
                s.push(' ');
            }
            if d.contains(x, y) {
                let _ = write!(s, "{}", f.at(x, y));
            } else {
                s.push('.');
            }
        }
        s.push('\n');
    }
    s
}

/// Parse one grid block from `lines`, starting at the header. Returns the
/// field and the number of lines consumed.
pub fn parse_grid_lines(lines: &[&str], first_line_no: usize) -> Result<(HeightField, usize)> {
    let perr = |line: usize, msg: String| Error::Parse { line: first_line_no + line, msg };
    let header = lines.first().ok_or_else(|| perr(0, "missing header".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.len() != 4 || parts[0] != "hex" {
        return Err(perr(0, format!("bad header {header:?}")));
    }
    let side = |s: &str| s.parse::<i64>().map_err(|e| perr(0, e.to_string()));
    let d = make_domain(side(parts[1])?, side(parts[2])?, side(parts[3])?)?;
    let mut h = vec![0; d.width() * d.rows()];
    for y in 0..d.rows() {
        let line = lines.get(y + 1).ok_or_else(|| perr(y + 1, "missing row".into()))?;
        let cells: Vec<&str> = line.split(' ').collect();
        if cells.len() != d.width() {
            return Err(perr(y + 1, format!("expected {} cells, got {}", d.width(), cells.len())));
        }
        for (x, cell) in cells.iter().enumerate() {
            let inside = d.contains(x as i32, y as i32);
            match (*cell, inside) {
                (".", false) => {}
                (".", true) => return Err(perr(y + 1, format!("missing height at x={x}"))),
                (_, false) => return Err(perr(y + 1, format!("value outside hexagon at x={x}"))),
                (v, true) => {
                    let v: i32 = v.parse().map_err(|_| perr(y + 1, format!("bad integer {v:?}")))?;
                    if v.to_string() != *cell {
                        return Err(perr(y + 1, format!("non-canonical integer {cell:?}")));
                    }
                    h[d.index(x as i32, y as i32)] = v;
                }
            }
        }
    }
    let f = HeightField::from_raw(d, h);
    f.check_admissible()?;
    let used = 1 + f.domain.rows();
    Ok((f, used))
}

pub fn parse_grid_text(text: &str) -> Result<HeightField> {
    let body = text.strip_suffix('\n').ok_or_else(|| Error::Parse { line: 0, msg: "missing final newline".into() })?;
    let lines: Vec<&str> = body.split('\n').collect();
    let (f, used) = parse_grid_lines(&lines, 1)?;
    if used != lines.len() {
        return Err(Error::Parse { line: used + 1, msg: "trailing content".into() });
    }
    Ok(f)
}

/// Distinct fields in a list, as a set of raw grids.
pub fn distinct(fields: &[HeightField]) -> HashSet<Vec<i32>> {
    fields.iter().map(|f| f.h.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_hexagon_has_seven_vertices() {
        let d = make_domain(1, 1, 1).unwrap();
        assert_eq!(d.vertex_count(), 7);
        assert_eq!(d.interior().len(), 1);
        for (x, y) in d.corners() {
            assert!(d.contains(x, y));
        }
    }

    #[test]
    fn degenerate_sides_rejected() {
        assert!(make_domain(1, 1, 0).is_err());
        assert!(make_domain(-1, 2, 2).is_err());
    }

    #[test]
    fn corner_bounds_are_forced() {
        let d = make_domain(2, 2, 2).unwrap();
        let (min, _) = extreme_tilings(&d);
        assert_eq!(local_bounds(&min, 0, 0).unwrap(), (0, 0));
        assert_eq!(local_bounds(&min, 0, 2).unwrap(), (2, 2));
        assert!(local_bounds(&min, 5, 0).is_err());
    }

    #[test]
    fn grid_text_shape() {
        let d = make_domain(1, 1, 1).unwrap();
        let (min, _) = extreme_tilings(&d);
        assert_eq!(to_grid_text(&min), "hex 1 1 1\n0 0 .\n1 0 0\n. 1 1\n");
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_grid_text("hex 1 1 1\n0 0 .\n1 0 0\n. 1 1").is_err());
        assert!(parse_grid_text("hex 1 1 1\n0 0 .\n1 2 0\n. 1 1\n").is_err());
        assert!(parse_grid_text("hex 1 1 1\n0 0 0\n1 0 0\n. 1 1\n").is_err());
        assert!(parse_grid_text("hex 1 1 1\n0 0 .\n1 00 0\n. 1 1\n").is_err());
    }
}
