//! Planar shapes: area, perimeter, containment, ray exits and exact cell overlaps.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    /// Axis-aligned rectangle.
    Rectangle { center: Point, width: f64, height: f64 },
    /// Simple polygon, counter-clockwise, without a repeated closing vertex.
    Polygon { vertices: Vec<Point> },
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| cross(vertices[i], vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// Validates a raw vertex list and returns it counter-clockwise with no closing duplicate.
pub(crate) fn clean_polygon(raw: &[Point]) -> Result<Vec<Point>> {
    let mut v: Vec<Point> = raw.to_vec();
    if v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    if v.len() < 3 {
        return Err(Error::InvalidSpec(format!("polygon needs at least 3 vertices, got {}", v.len())));
    }
    if v.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidSpec("polygon has non-finite coordinates".into()));
    }
    let n = v.len();
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return Err(Error::InvalidSpec(format!("polygon repeats vertex {i}")));
        }
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidSpec(format!("polygon is not simple: edges {i} and {j} intersect")));
            }
        }
    }
    let area = signed_area(&v);
    let scale = v
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(1.0);
    if area.abs() <= 1e-14 * scale * scale {
        return Err(Error::Degenerate(format!("polygon has zero area ({area:e})")));
    }
    if area < 0.0 {
        v.reverse();
    }
    Ok(v)
}

impl Shape {
    pub fn rectangle_vertices(center: Point, width: f64, height: f64) -> Vec<Point> {
        let (hw, hh) = (0.5 * width, 0.5 * height);
        vec![
            [center[0] - hw, center[1] - hh],
            [center[0] + hw, center[1] - hh],
            [center[0] + hw, center[1] + hh],
            [center[0] - hw, center[1] + hh],
        ]
    }

    fn vertices(&self) -> Option<Vec<Point>> {
        match self {
            Shape::Disk { .. } => None,
            Shape::Rectangle { center, width, height } => Some(Self::rectangle_vertices(*center, *width, *height)),
            Shape::Polygon { vertices } => Some(vertices.clone()),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Rectangle { width, height, .. } => width * height,
            Shape::Polygon { vertices } => signed_area(vertices),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => 2.0 * PI * radius,
            Shape::Rectangle { width, height, .. } => 2.0 * (width + height),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let d = sub(vertices[(i + 1) % n], vertices[i]);
                        d[0].hypot(d[1])
                    })
                    .sum()
            }
        }
    }

    pub fn centroid(&self) -> Point {
        match self {
            Shape::Disk { center, .. } | Shape::Rectangle { center, .. } => *center,
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let a = signed_area(vertices);
                let (mut cx, mut cy) = (0.0, 0.0);
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    let c = cross(p, q);
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                [cx / (6.0 * a), cy / (6.0 * a)]
            }
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            _ => {
                let v = self.vertices().unwrap_or_default();
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in v {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Uniform scaling by `s` about the centroid.
    pub fn scaled_about_centroid(&self, s: f64) -> Shape {
        let c = self.centroid();
        let map = |p: &Point| [c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1])];
        match self {
            Shape::Disk { center, radius } => Shape::Disk { center: *center, radius: radius * s },
            Shape::Rectangle { center, width, height } => Shape::Rectangle {
                center: *center,
                width: width * s,
                height: height * s,
            },
            Shape::Polygon { vertices } => Shape::Polygon { vertices: vertices.iter().map(map).collect() },
        }
    }

    fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Disk { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) < *radius,
            Shape::Rectangle { center, width, height } => {
                (p[0] - center[0]).abs() < 0.5 * width && (p[1] - center[1]).abs() < 0.5 * height
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[j]);
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth(&self, p: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => radius - (p[0] - center[0]).hypot(p[1] - center[1]),
            Shape::Rectangle { center, width, height } => {
                let dx = 0.5 * width - (p[0] - center[0]).abs();
                let dy = 0.5 * height - (p[1] - center[1]).abs();
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    -(dx.min(0.0).hypot(dy.min(0.0)))
                }
            }
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                let d = (0..n)
                    .map(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if self.contains(p) {
                    d
                } else {
                    -d
                }
            }
        }
    }

    /// Distance along the unit direction `dir` from the interior point `p` to the
    /// first boundary crossing, if it occurs within `max`.
    pub fn ray_exit(&self, p: Point, dir: Point, max: f64) -> Option<f64> {
        match self {
            Shape::Disk { center, radius } => {
                let q = sub(p, *center);
                let b = q[0] * dir[0] + q[1] * dir[1];
                let c = q[0] * q[0] + q[1] * q[1] - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let d = -b + disc.sqrt();
                (d > 0.0 && d <= max).then_some(d)
            }
            _ => {
                let v = self.vertices()?;
                let n = v.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let e = sub(b, a);
                    let denom = cross(dir, e);
                    if denom == 0.0 {
                        continue;
                    }
                    let ap = sub(a, p);
                    let d = cross(ap, e) / denom;
                    let s = cross(ap, dir) / denom;
                    if d > 0.0 && d <= max && (-1e-12..=1.0 + 1e-12).contains(&s) {
                        best = Some(best.map_or(d, |x: f64| x.min(d)));
                    }
                }
                best
            }
        }
    }

    /// Exact area of the intersection with the axis-aligned box `[lo, hi]`.
    pub fn box_overlap(&self, lo: Point, hi: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => disk_box_overlap(*center, *radius, lo, hi),
            Shape::Rectangle { center, width, height } => {
                let ox = ((center[0] + 0.5 * width).min(hi[0]) - (center[0] - 0.5 * width).max(lo[0])).max(0.0);
                let oy = ((center[1] + 0.5 * height).min(hi[1]) - (center[1] - 0.5 * height).max(lo[1])).max(0.0);
                ox * oy
            }
            Shape::Polygon { vertices } => clip_to_box(vertices, lo, hi),
        }
    }
}

/// Sutherland–Hodgman clip of a (possibly non-convex) polygon against a box.
/// The signed area of the clipped loop equals the overlap area.
fn clip_to_box(poly: &[Point], lo: Point, hi: Point) -> f64 {
    let mut out: Vec<Point> = poly.to_vec();
    // (axis, bound, keep >= bound)
    let planes = [(0, lo[0], true), (0, hi[0], false), (1, lo[1], true), (1, hi[1], false)];
    for (axis, bound, keep_ge) in planes {
        if out.is_empty() {
            break;
        }
        let inside = |p: &Point| if keep_ge { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])];
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    if out.len() < 3 {
        0.0
    } else {
        signed_area(&out).max(0.0)
    }
}

fn disk_box_overlap(c: Point, r: f64, lo: Point, hi: Point) -> f64 {
    let (x0, x1) = (lo[0] - c[0], hi[0] - c[0]);
    let (y0, y1) = (lo[1] - c[1], hi[1] - c[1]);
    let a = x0.max(-r);
    let b = x1.min(r);
    if a >= b || y0 >= r || y1 <= -r {
        return 0.0;
    }
    let r2 = r * r;
    let half_chord = |x: f64| (r2 - x * x).max(0.0).sqrt();
    // antiderivative of the upper semicircle
    let arc = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * half_chord(x) + r2 * (x / r).clamp(-1.0, 1.0).asin())
    };
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = half_chord(y);
            cuts.extend([-x, x]);
        }
    }
    cuts.retain(|x| *x >= a && *x <= b);
    cuts.sort_by(|u, v| u.total_cmp(v));
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let s = half_chord(0.5 * (u + v));
        let top_is_line = y1 < s;
        let bottom_is_line = y0 > -s;
        let top_mid = if top_is_line { y1 } else { s };
        let bottom_mid = if bottom_is_line { y0 } else { -s };
        if top_mid <= bottom_mid {
            continue;
        }
        let top = if top_is_line { y1 * (v - u) } else { arc(v) - arc(u) };
        let bottom = if bottom_is_line { y0 * (v - u) } else { -(arc(v) - arc(u)) };
        area += top - bottom;
    }
    area.max(0.0)
}
