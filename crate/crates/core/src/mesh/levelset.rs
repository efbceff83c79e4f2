use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use super::trimesh::TriMesh;
use crate::error::{Error, Result};
use crate::geom::{polygon, Point};

/// Geometry of one superlevel set `{f > z}` of a P1 field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSetSlice {
    /// Threshold actually used, after any tie-breaking perturbation.
    pub threshold: f64,
    pub superlevel_area: f64,
    /// Closed contours with the superlevel region on their left.
    pub contour_polygons: Vec<Vec<Point>>,
    /// Contour pieces ending on the mesh boundary.
    pub open_polylines: Vec<Vec<Point>>,
    /// `∫_{f=z} |∇f|`.
    pub gradient_line_integral: f64,
    /// `∫_{f=z} |∇f|⁻¹`.
    pub inverse_gradient_line_integral: f64,
    /// Length of `{f = z}`.
    pub contour_length: f64,
}

impl LevelSetSlice {
    pub fn loops(&self) -> Vec<&[Point]> {
        self.contour_polygons.iter().map(|l| l.as_slice()).collect()
    }

    /// Sum of signed contour areas; equals the superlevel area for closed contours.
    pub fn contour_area(&self) -> f64 {
        self.contour_polygons.iter().map(|l| polygon::signed_area(l)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.superlevel_area == 0.0
    }
}

/// A P1 field on a mesh with per-triangle gradients precomputed.
pub struct LevelSetField<'a> {
    mesh: &'a TriMesh,
    values: &'a [f64],
    grad: Vec<f64>,
    area: Vec<f64>,
    min: f64,
    max: f64,
}

const CHUNK: usize = 4096;

impl<'a> LevelSetField<'a> {
    pub fn new(mesh: &'a TriMesh, values: &'a [f64]) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("value at node {i} is not finite")));
        }
        let nodes = mesh.nodes();
        let mut grad = Vec::with_capacity(mesh.num_triangles());
        let mut area = Vec::with_capacity(mesh.num_triangles());
        for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
            let g = p1_gradient([nodes[a], nodes[b], nodes[c]], [values[a], values[b], values[c]]);
            grad.push(g[0].hypot(g[1]));
            area.push(mesh.triangle_area(t));
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(LevelSetField {
            mesh,
            values,
            grad,
            area,
            min,
            max,
        })
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    /// Magnitude of the gradient on triangle `t`.
    pub fn gradient_norm(&self, t: usize) -> f64 {
        self.grad[t]
    }

    /// `|{f > z}|`, in closed form per triangle.
    pub fn area_above(&self, z: f64) -> f64 {
        let tris = self.mesh.triangles();
        let partial: Vec<f64> = tris
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk, block)| {
                let mut s = 0.0;
                for (k, tri) in block.iter().enumerate() {
                    let t = chunk * CHUNK + k;
                    s += self.area[t] * fraction_above(tri.map(|i| self.values[i]), z);
                }
                s
            })
            .collect();
        partial.iter().sum()
    }

    fn nudge(&self, z: f64) -> f64 {
        let step = 1e-14 * (self.max - self.min);
        let mut z = z;
        if step > 0.0 {
            while self.values.iter().any(|&v| v == z) {
                z += step;
            }
        }
        z
    }

    /// Exact superlevel geometry at `z`.
    pub fn slice(&self, z: f64) -> LevelSetSlice {
        if z <= 0.0 || z < self.min {
            return self.full_slice(z);
        }
        if z >= self.max {
            return LevelSetSlice {
                threshold: z,
                superlevel_area: 0.0,
                contour_polygons: Vec::new(),
                open_polylines: Vec::new(),
                gradient_line_integral: 0.0,
                inverse_gradient_line_integral: 0.0,
                contour_length: 0.0,
            };
        }
        let z = self.nudge(z);
        let nodes = self.mesh.nodes();
        let mut area = 0.0;
        let mut g_int = 0.0;
        let mut h_int = 0.0;
        let mut length = 0.0;
        let mut segments: Vec<Segment> = Vec::new();
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let v = tri.map(|i| self.values[i]);
            let above = v.iter().filter(|&&x| x > z).count();
            if above == 0 {
                continue;
            }
            if above == 3 {
                area += self.area[t];
                continue;
            }
            area += self.area[t] * fraction_above(v, z);
            let p = tri.map(|i| nodes[i]);
            let mut exit = None;
            let mut entry = None;
            for k in 0..3 {
                let n = (k + 1) % 3;
                let (ik, inn) = (v[k] > z, v[n] > z);
                if ik != inn {
                    let s = (z - v[k]) / (v[n] - v[k]);
                    let x = [p[k][0] + s * (p[n][0] - p[k][0]), p[k][1] + s * (p[n][1] - p[k][1])];
                    let key = edge_key(tri[k], tri[n]);
                    if ik {
                        exit = Some((key, x));
                    } else {
                        entry = Some((key, x));
                    }
                }
            }
            let (Some((ka, xa)), Some((kb, xb))) = (exit, entry) else {
                continue;
            };
            let len = polygon::dist(xa, xb);
            let g = self.grad[t];
            length += len;
            g_int += g * len;
            if g > 0.0 {
                h_int += len / g;
            }
            segments.push(Segment {
                start: ka,
                end: kb,
                from: xa,
            });
        }
        let (closed, open) = chain(&segments);
        LevelSetSlice {
            threshold: z,
            superlevel_area: area,
            contour_polygons: closed,
            open_polylines: open,
            gradient_line_integral: g_int,
            inverse_gradient_line_integral: h_int,
            contour_length: length,
        }
    }

    fn full_slice(&self, z: f64) -> LevelSetSlice {
        let nodes = self.mesh.nodes();
        let mut g_int = 0.0;
        let mut h_int = 0.0;
        let mut length = 0.0;
        for (a, b, t) in self.mesh.boundary_edges() {
            let len = polygon::dist(nodes[a], nodes[b]);
            length += len;
            g_int += self.grad[t] * len;
            if self.grad[t] > 0.0 {
                h_int += len / self.grad[t];
            }
        }
        LevelSetSlice {
            threshold: z,
            superlevel_area: self.mesh.area(),
            contour_polygons: self.mesh.boundary_loops(),
            open_polylines: Vec::new(),
            gradient_line_integral: g_int,
            inverse_gradient_line_integral: h_int,
            contour_length: length,
        }
    }

    /// Largest `z` with `|{f > z}| ≥ target`, by bisection on the closed-form area.
    pub fn threshold_for_area(&self, target: f64, tol: f64) -> f64 {
        let (mut lo, mut hi) = (self.min.min(0.0), self.max);
        if target <= 0.0 {
            return self.max;
        }
        for _ in 0..200 {
            if hi - lo <= tol * self.max.abs().max(f64::MIN_POSITIVE) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.area_above(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Convenience wrapper around [`LevelSetField::slice`].
pub fn superlevel_geometry(mesh: &TriMesh, nodal_values: &[f64], z: f64) -> Result<LevelSetSlice> {
    Ok(LevelSetField::new(mesh, nodal_values)?.slice(z))
}

/// Gradient of the linear interpolant on one triangle.
pub fn p1_gradient(p: [Point; 3], v: [f64; 3]) -> Point {
    let two_a = polygon::cross(p[0], p[1], p[2]);
    let mut g = [0.0, 0.0];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        g[0] += v[k] * (a[1] - b[1]) / two_a;
        g[1] += v[k] * (b[0] - a[0]) / two_a;
    }
    g
}

/// Fraction of a triangle's area where the linear interpolant exceeds `z`.
fn fraction_above(v: [f64; 3], z: f64) -> f64 {
    let above: Vec<usize> = (0..3).filter(|&k| v[k] > z).collect();
    match above.len() {
        0 => 0.0,
        3 => 1.0,
        1 => {
            let a = above[0];
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            ((v[a] - z) / (v[a] - v[b])) * ((v[a] - z) / (v[a] - v[c]))
        }
        _ => {
            let b = (0..3).find(|&k| v[k] <= z).unwrap();
            let (a, c) = ((b + 1) % 3, (b + 2) % 3);
            1.0 - ((z - v[b]) / (v[a] - v[b])) * ((z - v[b]) / (v[c] - v[b]))
        }
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Segment {
    start: (usize, usize),
    end: (usize, usize),
    from: Point,
}

fn chain(segments: &[Segment]) -> (Vec<Vec<Point>>, Vec<Vec<Point>>) {
    let by_start: HashMap<(usize, usize), usize> =
        segments.iter().enumerate().map(|(i, s)| (s.start, i)).collect();
    let ends: std::collections::HashSet<(usize, usize)> = segments.iter().map(|s| s.end).collect();
    let mut used = vec![false; segments.len()];
    let mut closed = Vec::new();
    let mut open = Vec::new();
    let follow = |first: usize, used: &mut Vec<bool>| -> (Vec<Point>, bool) {
        let mut pts = Vec::new();
        let mut i = first;
        loop {
            used[i] = true;
            pts.push(segments[i].from);
            match by_start.get(&segments[i].end) {
                Some(&j) if j == first => return (pts, true),
                Some(&j) if !used[j] => i = j,
                _ => return (pts, false),
            }
        }
    };
    for i in 0..segments.len() {
        if !used[i] && !ends.contains(&segments[i].start) {
            open.push(follow(i, &mut used).0);
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            let (pts, is_closed) = follow(i, &mut used);
            if is_closed {
                closed.push(pts);
            } else {
                open.push(pts);
            }
        }
    }
    (closed, open)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PlanarDomain, StarShape};
    use crate::mesh::mesh_star_domain;
    use std::f64::consts::PI;

    fn reference_triangle() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![true; 3],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_hand_computation() {
        let m = reference_triangle();
        let s = superlevel_geometry(&m, &[0.0, 0.0, 1.0], 0.5).unwrap();
        assert!((s.superlevel_area - 0.125).abs() < 1e-15);
        // Segment from (0, 0.5) to (0.5, 0.5); |∇f| = 1.
        assert!((s.contour_length - 0.5).abs() < 1e-15);
        assert!((s.gradient_line_integral - 0.5).abs() < 1e-15);
        assert!((s.inverse_gradient_line_integral - 0.5).abs() < 1e-15);
        assert_eq!(s.open_polylines.len(), 1);
    }

    #[test]
    fn zero_threshold_gives_whole_domain() {
        let d = PlanarDomain::from_shape("d", StarShape::Disk { radius: 1.0 }, [0.0, 0.0], 128).unwrap();
        let m = mesh_star_domain(&d, 0.1).unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|p| 1.0 - p[0].hypot(p[1]).min(1.0)).collect();
        let s = superlevel_geometry(&m, &f, 0.0).unwrap();
        assert_eq!(s.superlevel_area, m.area());
        assert_eq!(s.contour_polygons.len(), 1);
        let empty = superlevel_geometry(&m, &f, 2.0).unwrap();
        assert!(empty.is_empty() && empty.contour_polygons.is_empty());
    }

    #[test]
    fn radial_bump_contour_is_nearly_circular() {
        let d = PlanarDomain::from_shape("d", StarShape::Disk { radius: 1.0 }, [0.0, 0.0], 128).unwrap();
        let m = mesh_star_domain(&d, 0.05).unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|p| (PI / 2.0 * p[0].hypot(p[1]).min(1.0)).cos()).collect();
        let field = LevelSetField::new(&m, &f).unwrap();
        let s = field.slice(0.5 * field.max());
        assert_eq!(s.contour_polygons.len(), 1);
        assert!(s.open_polylines.is_empty());
        let l = &s.contour_polygons[0];
        let ratio = polygon::perimeter(l).powi(2) / (4.0 * PI * polygon::signed_area(l));
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        assert!((s.contour_area() - s.superlevel_area).abs() < 1e-10);
    }

    #[test]
    fn coarea_matches_area_derivative() {
        let d = PlanarDomain::from_shape("e", StarShape::Ellipse { a: 1.4, b: 0.7 }, [0.0, 0.0], 256).unwrap();
        let m = mesh_star_domain(&d, 0.03).unwrap();
        let f: Vec<f64> = m
            .nodes()
            .iter()
            .map(|p| (1.0 - (p[0] / 1.4).powi(2) - (p[1] / 0.7).powi(2)).max(0.0) * (1.0 + 0.3 * p[0]))
            .collect();
        let field = LevelSetField::new(&m, &f).unwrap();
        for frac in [0.2, 0.5, 0.8] {
            let z = frac * field.max();
            let dz = 1e-3 * field.max();
            let deriv = (field.area_above(z - dz) - field.area_above(z + dz)) / (2.0 * dz);
            let h = field.slice(z).inverse_gradient_line_integral;
            assert!((deriv - h).abs() / h < 0.02, "z {z}: {deriv} vs {h}");
        }
    }

    #[test]
    fn threshold_ties_are_perturbed() {
        let m = reference_triangle().refine().unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|p| p[1]).collect();
        let s = superlevel_geometry(&m, &f, 0.5).unwrap();
        assert!(s.threshold > 0.5);
        assert!((s.superlevel_area - 0.125).abs() < 1e-12);
    }

    #[test]
    fn bisection_hits_target_area() {
        let m = reference_triangle().refine().unwrap().refine().unwrap();
        let f: Vec<f64> = m.nodes().iter().map(|p| p[1]).collect();
        let field = LevelSetField::new(&m, &f).unwrap();
        let z = field.threshold_for_area(0.125, 1e-14);
        assert!((z - 0.5).abs() < 1e-12);
    }
}
