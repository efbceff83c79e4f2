//! Plain polygon primitives on closed vertex loops (last vertex joins the first).

use super::Point;

pub fn signed_area(loop_: &[Point]) -> f64 {
    let n = loop_.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = loop_[i];
        let b = loop_[(i + 1) % n];
        acc += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * acc
}

pub fn perimeter(loop_: &[Point]) -> f64 {
    let n = loop_.len();
    (0..n).map(|i| dist(loop_[i], loop_[(i + 1) % n])).sum()
}

pub fn centroid(loop_: &[Point]) -> Point {
    let n = loop_.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = loop_[i];
        let q = loop_[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        a2 += w;
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    if a2.abs() < f64::MIN_POSITIVE {
        let s = loop_.iter().fold([0.0, 0.0], |s, p| [s[0] + p[0], s[1] + p[1]]);
        return [s[0] / n as f64, s[1] / n as f64];
    }
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Distance from `p` to the nearest edge of any of the loops.
pub fn boundary_distance(p: Point, loops: &[&[Point]]) -> f64 {
    let mut best = f64::INFINITY;
    for l in loops {
        let n = l.len();
        for i in 0..n {
            best = best.min(segment_distance(p, l[i], l[(i + 1) % n]));
        }
    }
    best
}

/// Winding number of the loops around `p` (orientation-aware, holes count negatively).
pub fn winding_number(p: Point, loops: &[&[Point]]) -> i32 {
    let mut w = 0;
    for l in loops {
        let n = l.len();
        for i in 0..n {
            let a = l[i];
            let b = l[(i + 1) % n];
            if a[1] <= p[1] {
                if b[1] > p[1] && cross(a, b, p) > 0.0 {
                    w += 1;
                }
            } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
                w -= 1;
            }
        }
    }
    w
}

pub fn contains(loop_: &[Point], p: Point) -> bool {
    winding_number(p, &[loop_]) != 0
}

pub fn bounding_box(loops: &[&[Point]]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for l in loops {
        for p in l.iter() {
            lo = [lo[0].min(p[0]), lo[1].min(p[1])];
            hi = [hi[0].max(p[0]), hi[1].max(p[1])];
        }
    }
    (lo, hi)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Returns the first pair of non-adjacent edges that intersect, if any.
pub fn self_intersection(loop_: &[Point]) -> Option<(usize, usize)> {
    let n = loop_.len();
    for i in 0..n {
        let (a, b) = (loop_[i], loop_[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (loop_[j], loop_[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Area of `triangle(c, a, b) ∩ disk(c, r)`, signed like `cross(c, a, b)`.
fn wedge_disk_area(a: Point, b: Point, r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    if qa == 0.0 {
        return 0.0;
    }
    let qb = a[0] * d[0] + a[1] * d[1];
    let qc = a[0] * a[0] + a[1] * a[1] - r * r;
    let mut ts = [0.0, 1.0, 1.0, 1.0];
    let mut nt = 1;
    let disc = qb * qb - qa * qc;
    if disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-qb - s) / qa, (-qb + s) / qa] {
            if t > 0.0 && t < 1.0 {
                ts[nt] = t;
                nt += 1;
            }
        }
    }
    ts[nt] = 1.0;
    let mut area = 0.0;
    for w in ts[..=nt].windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let p = [a[0] + t0 * d[0], a[1] + t0 * d[1]];
        let q = [a[0] + t1 * d[0], a[1] + t1 * d[1]];
        let tm = 0.5 * (t0 + t1);
        let m = [a[0] + tm * d[0], a[1] + tm * d[1]];
        let cr = p[0] * q[1] - p[1] * q[0];
        if m[0] * m[0] + m[1] * m[1] <= r * r {
            area += 0.5 * cr;
        } else {
            let dot = p[0] * q[0] + p[1] * q[1];
            area += 0.5 * r * r * cr.atan2(dot);
        }
    }
    area
}

/// Exact area of `region ∩ disk(center, r)` for a set of oriented loops
/// (outer boundaries counterclockwise, holes clockwise).
pub fn disk_overlap_area(loops: &[&[Point]], center: Point, r: f64) -> f64 {
    let mut acc = 0.0;
    for l in loops {
        let n = l.len();
        for i in 0..n {
            let a = l[i];
            let b = l[(i + 1) % n];
            acc += wedge_disk_area(
                [a[0] - center[0], a[1] - center[1]],
                [b[0] - center[0], b[1] - center[1]],
                r,
            );
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(s: f64) -> Vec<Point> {
        vec![[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]]
    }

    #[test]
    fn unit_square_measures() {
        let sq = square(1.0);
        assert_eq!(signed_area(&sq), 1.0);
        assert_eq!(perimeter(&sq), 4.0);
        assert_eq!(centroid(&sq), [0.5, 0.5]);
    }

    #[test]
    fn disk_inside_square_is_full_disk() {
        let sq = square(4.0);
        let a = disk_overlap_area(&[&sq], [2.0, 2.0], 1.0);
        assert!((a - PI).abs() < 1e-13);
    }

    #[test]
    fn square_inside_disk_is_full_square() {
        let sq = square(1.0);
        let a = disk_overlap_area(&[&sq], [0.5, 0.5], 10.0);
        assert!((a - 1.0).abs() < 1e-13);
    }

    #[test]
    fn half_plane_cut_of_disk() {
        // big rectangle covering the upper half of a unit disk at the origin
        let rect = vec![[-5.0, 0.0], [5.0, 0.0], [5.0, 5.0], [-5.0, 5.0]];
        let a = disk_overlap_area(&[&rect], [0.0, 0.0], 1.0);
        assert!((a - PI / 2.0).abs() < 1e-13);
        // offset chord: segment area r^2 acos(d/r) - d sqrt(r^2-d^2)
        let a = disk_overlap_area(&[&rect], [0.0, -0.3], 1.0);
        let d: f64 = 0.3;
        let seg = d.acos() - d * (1.0 - d * d).sqrt();
        assert!((a - seg).abs() < 1e-13);
    }

    #[test]
    fn holes_subtract() {
        let outer = square(4.0);
        let hole: Vec<Point> = square(2.0).into_iter().rev().map(|p| [p[0] + 1.0, p[1] + 1.0]).collect();
        assert!((signed_area(&outer) + signed_area(&hole) - 12.0).abs() < 1e-14);
        let a = disk_overlap_area(&[&outer, &hole], [2.0, 2.0], 100.0);
        assert!((a - 12.0).abs() < 1e-12);
        assert_eq!(winding_number([2.0, 2.0], &[&outer, &hole]), 0);
        assert_eq!(winding_number([0.5, 2.0], &[&outer, &hole]), 1);
    }

    #[test]
    fn detects_bow_tie() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(self_intersection(&bow).is_some());
        assert!(self_intersection(&square(1.0)).is_none());
    }
}
