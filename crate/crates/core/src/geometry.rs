//! Small fixed-size vector helpers and exact planar/box primitives.
//!
//! Points are always stored as `[f64; 3]`; planar scenes leave the third
//! component at zero.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn point2(x: f64, y: f64) -> Point {
    [x, y, 0.0]
}

/// Unit vector for spherical angles (azimuth in the xy-plane, polar from +z).
pub fn spherical_axis(azimuth: f64, polar: f64) -> Point {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    [sp * ca, sp * sa, cp]
}

/// Distance from `p` to the segment `[a, b]` in the plane.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

pub fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

/// Crossing-number test. Points exactly on an edge may land on either side;
/// callers that care use [`on_polygon_boundary`] first.
pub fn point_in_polygon(p: [f64; 2], vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi[1] > p[1]) != (vj[1] > p[1]) {
            let x = vj[0] + (p[1] - vj[1]) * (vi[0] - vj[0]) / (vi[1] - vj[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn on_polygon_boundary(p: [f64; 2], vertices: &[[f64; 2]], tol: f64) -> bool {
    let n = vertices.len();
    (0..n).any(|i| point_segment_distance(p, vertices[i], vertices[(i + 1) % n]) <= tol)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// True when no two non-adjacent edges of the polygon touch.
pub fn polygon_is_simple(vertices: &[[f64; 2]]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Parameters `t in (0,1)` where the segment `p + t (q - p)` meets polygon edges.
pub fn segment_polygon_crossings(p: [f64; 2], q: [f64; 2], vertices: &[[f64; 2]]) -> Vec<f64> {
    let n = vertices.len();
    let d = [q[0] - p[0], q[1] - p[1]];
    let mut ts = Vec::new();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        let denom = d[0] * e[1] - d[1] * e[0];
        let w = [a[0] - p[0], a[1] - p[1]];
        if denom.abs() < 1e-300 {
            // parallel: record the projections of the edge endpoints onto the segment
            let dd = d[0] * d[0] + d[1] * d[1];
            if dd > 0.0 && (w[0] * d[1] - w[1] * d[0]).abs() < 1e-14 {
                for v in [a, b] {
                    let t = ((v[0] - p[0]) * d[0] + (v[1] - p[1]) * d[1]) / dd;
                    if t > 0.0 && t < 1.0 {
                        ts.push(t);
                    }
                }
            }
            continue;
        }
        let t = (w[0] * e[1] - w[1] * e[0]) / denom;
        let u = (w[0] * d[1] - w[1] * d[0]) / denom;
        if (0.0..=1.0).contains(&u) && t > 0.0 && t < 1.0 {
            ts.push(t);
        }
    }
    ts
}

/// Open slab test: does the segment `[p, q]` pass through the open box interior?
pub fn segment_hits_open_box(p: Point, q: Point, lower: Point, upper: Point) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for a in 0..3 {
        let d = q[a] - p[a];
        if d == 0.0 {
            if !(p[a] > lower[a] && p[a] < upper[a]) {
                return false;
            }
        } else {
            let (mut ta, mut tb) = ((lower[a] - p[a]) / d, (upper[a] - p[a]) / d);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    t0 < t1
}
