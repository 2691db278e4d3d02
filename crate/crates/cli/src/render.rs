//! SVG rendering of tilings in the sheared 60° frame.

use std::fmt::Write as _;

use hexmix::{level_lines, HeightField, LimitShape, Result, ShapeParams};

/// Lozenge orientation, named by the lattice edge it covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LozengeKind {
    Horizontal,
    Vertical,
    Diagonal,
}

impl LozengeKind {
    fn colour(self) -> &'static str {
        match self {
            LozengeKind::Horizontal => "#e3b04b",
            LozengeKind::Vertical => "#4a78b0",
            LozengeKind::Diagonal => "#8fbf5a",
        }
    }

    fn class(self) -> &'static str {
        match self {
            LozengeKind::Horizontal => "lz-h",
            LozengeKind::Vertical => "lz-v",
            LozengeKind::Diagonal => "lz-d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lozenge {
    pub kind: LozengeKind,
    /// Shared-edge endpoints interleaved with the two apexes, in drawing order.
    pub corners: [(i32, i32); 4],
}

/// Lozenges of the tiling encoded by `f`.
///
/// Every unit triangle has exactly one edge whose height step is the
/// exceptional one for its direction (−1 horizontally, 0 vertically, +1
/// diagonally); the two triangles sharing such an edge form a lozenge.
pub fn lozenges(f: &HeightField) -> Vec<Lozenge> {
    let d = f.domain();
    let mut out = Vec::with_capacity(d.lozenge_count());
    for (x, y) in d.vertices() {
        let h = f.at(x, y);
        let mut push = |kind, q: (i32, i32), a: (i32, i32), b: (i32, i32), step: i32| {
            if d.contains(q.0, q.1) && d.contains(a.0, a.1) && d.contains(b.0, b.1) && f.at(q.0, q.1) - h == step {
                out.push(Lozenge { kind, corners: [(x, y), a, q, b] });
            }
        };
        push(LozengeKind::Horizontal, (x + 1, y), (x + 1, y + 1), (x, y - 1), -1);
        push(LozengeKind::Vertical, (x, y + 1), (x + 1, y + 1), (x - 1, y), 0);
        push(LozengeKind::Diagonal, (x + 1, y + 1), (x + 1, y), (x, y + 1), 1);
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct Overlays {
    /// Polylines in lattice coordinates.
    pub arctic: Option<Vec<(f64, f64)>>,
    pub analytic: Vec<Vec<(f64, f64)>>,
    pub discrete: Vec<Vec<(f64, f64)>>,
}

/// Limit shape of the hexagon of `f` measured in units of its first side.
pub fn shape_for(f: &HeightField, q: f64) -> Result<LimitShape> {
    let (a, b, c) = f.domain().sides();
    let a = a as f64;
    LimitShape::new(ShapeParams::new(q, 1.0, b as f64 / a, c as f64 / a)?)
}

pub fn arctic_overlay(f: &HeightField, q: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    let scale = f.domain().sides().0 as f64;
    let mut pts: Vec<_> = shape_for(f, q)?.arctic.outline(points).into_iter().map(|(x, y)| (x * scale, y * scale)).collect();
    if let Some(&p) = pts.first() {
        pts.push(p);
    }
    Ok(pts)
}

/// One analytic level curve per height level k, at height k − 1/2.
pub fn analytic_overlay(f: &HeightField, q: f64, per_column: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    let d = f.domain();
    let (na, nb, nc) = d.sides();
    let shape = shape_for(f, q)?;
    let scale = na as f64;
    let steps = (na + nc) as usize * per_column.max(1);
    (1..=nb)
        .map(|k| {
            let h = (k as f64 - 0.5) / scale;
            (0..=steps)
                .map(|i| {
                    let x = (na + nc) as f64 * i as f64 / steps as f64;
                    Ok((x, shape.level_line(h, x / scale)? * scale))
                })
                .collect()
        })
        .collect()
}

/// Discrete level lines through the midpoints of their crossings.
pub fn discrete_overlay(f: &HeightField) -> Result<Vec<Vec<(f64, f64)>>> {
    Ok(level_lines(f)?
        .into_iter()
        .map(|l| l.ordinates().into_iter().enumerate().map(|(i, y)| ((l.start.0 + i as i32) as f64, y as f64 + 0.5)).collect())
        .collect())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "&#45;&#45;")
}

/// SVG document for `f`; `meta` lands in a `<metadata>` block.
pub fn render_svg(f: &HeightField, overlays: &Overlays, unit: f64, meta: &str) -> String {
    let d = f.domain();
    let (na, nb, nc) = d.sides();
    let margin = unit;
    let top = (nb + nc) as f64;
    let rt = 3f64.sqrt() / 2.0;
    let frame = |x: f64, y: f64| ((x - y / 2.0 + nb as f64 / 2.0) * unit + margin, (top - y) * rt * unit + margin);
    let width = (na as f64 + (nb + nc) as f64 / 2.0) * unit + 2.0 * margin;
    let height = top * rt * unit + 2.0 * margin;
    let points = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        let mut s = String::new();
        for (i, (x, y)) in pts.enumerate() {
            let (px, py) = frame(x, y);
            let _ = write!(s, "{}{px:.3},{py:.3}", if i > 0 { " " } else { "" });
        }
        s
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.3}" height="{height:.3}" viewBox="0 0 {width:.3} {height:.3}">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(meta));
    let _ = writeln!(s, r#"<g id="lozenges" stroke="black" stroke-width="{:.3}" stroke-linejoin="round">"#, unit / 40.0);
    let mut tiles = lozenges(f);
    tiles.sort_by_key(|l| (l.kind, l.corners));
    for l in &tiles {
        let p = points(&mut l.corners.iter().map(|&(x, y)| (x as f64, y as f64)));
        let _ = writeln!(s, r#"<polygon class="{}" fill="{}" points="{p}"/>"#, l.kind.class(), l.kind.colour());
    }
    s.push_str("</g>\n");
    let mut group = |id: &str, colour: &str, dash: &str, lines: &[Vec<(f64, f64)>]| {
        if lines.is_empty() {
            return;
        }
        let _ = writeln!(
            s,
            r#"<g id="{id}" fill="none" stroke="{colour}" stroke-width="{:.3}"{dash}>"#,
            unit / 12.0
        );
        for l in lines {
            let _ = writeln!(s, r#"<polyline class="{id}" points="{}"/>"#, points(&mut l.iter().copied()));
        }
        s.push_str("</g>\n");
    };
    if let Some(a) = &overlays.arctic {
        group("arctic", "#c0392b", "", std::slice::from_ref(a));
    }
    group("analytic-level", "black", r#" stroke-dasharray="4 3""#, &overlays.analytic);
    group("discrete-level", "#7d3c98", "", &overlays.discrete);
    s.push_str("</svg>\n");
    s
}
