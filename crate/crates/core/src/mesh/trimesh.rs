use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::{polygon, PlanarDomain, Point};

/// Conforming triangulation carrying P1 fields.
///
/// Triangles are counterclockwise. `boundary_flags[i]` is true exactly for nodes
/// on the outer polygon. Meshes built from a star-shaped domain keep the domain,
/// so that [`TriMesh::refine`] can move new boundary nodes onto the true curve.
#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_flags: Vec<bool>,
    h: f64,
    curve: Option<Arc<PlanarDomain>>,
}

#[derive(Serialize, Deserialize)]
struct MeshDump {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_flags: Vec<bool>,
    #[serde(default)]
    h: Option<f64>,
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * polygon::cross(a, b, c)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    /// Builds a mesh and checks orientation, conformity and boundary flags.
    pub fn new(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_flags: Vec<bool>,
        h: f64,
    ) -> Result<Self> {
        let mesh = TriMesh {
            nodes,
            triangles,
            boundary_flags,
            h,
            curve: None,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_flags: Vec<bool>,
        h: f64,
        curve: Option<Arc<PlanarDomain>>,
    ) -> Self {
        TriMesh {
            nodes,
            triangles,
            boundary_flags,
            h,
            curve,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.boundary_flags.len() != n {
            return Err(Error::InvalidMesh(format!(
                "{} boundary flags for {} nodes",
                self.boundary_flags.len(),
                n
            )));
        }
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing node")));
            }
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if directed.insert((tri[k], tri[(k + 1) % 3]), t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) appears twice with the same orientation",
                        tri[k],
                        tri[(k + 1) % 3]
                    )));
                }
            }
        }
        let mut on_boundary = vec![false; n];
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        if let Some(i) = (0..n).find(|&i| on_boundary[i] != self.boundary_flags[i]) {
            return Err(Error::InvalidMesh(format!(
                "boundary flag of node {i} is {} but the node is {}on the boundary",
                self.boundary_flags[i],
                if on_boundary[i] { "" } else { "not " }
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    /// Nominal element size.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> Option<&PlanarDomain> {
        self.curve.as_deref()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.boundary_flags.iter().filter(|&&b| b).count()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        triangle_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted centroid of the triangulated region.
    pub fn centroid(&self) -> Point {
        let mut acc = [0.0, 0.0];
        let mut area = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t);
            for &i in tri {
                acc[0] += a * self.nodes[i][0] / 3.0;
                acc[1] += a * self.nodes[i][1] / 3.0;
            }
            area += a;
        }
        [acc[0] / area, acc[1] / area]
    }

    /// Boundary edges oriented with the mesh on their left.
    pub fn boundary_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut count: HashMap<(usize, usize), u8> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut out = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if count[&edge_key(a, b)] == 1 {
                    out.push((a, b, t));
                }
            }
        }
        out
    }

    /// Closed boundary loops, counterclockwise for the outer boundary.
    pub fn boundary_loops(&self) -> Vec<Vec<Point>> {
        let edges = self.boundary_edges();
        let next: HashMap<usize, usize> = edges.iter().map(|&(a, b, _)| (a, b)).collect();
        let mut seen = vec![false; self.nodes.len()];
        let mut loops = Vec::new();
        for &(start, _, _) in &edges {
            if seen[start] {
                continue;
            }
            let mut l = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                l.push(self.nodes[v]);
                match next.get(&v) {
                    Some(&w) => v = w,
                    None => break,
                }
            }
            loops.push(l);
        }
        loops
    }

    /// Uniform refinement: every triangle splits into four through its edge
    /// midpoints; boundary midpoints move onto the boundary curve when known.
    pub fn refine(&self) -> Result<TriMesh> {
        let mut nodes = self.nodes.clone();
        let mut flags = self.boundary_flags.clone();
        let mut count: HashMap<(usize, usize), u8> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let star = self
            .curve
            .as_ref()
            .and_then(|d| d.star_descriptor().map(|s| (d.clone(), s.center)));
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, nodes: &mut Vec<Point>, flags: &mut Vec<bool>| -> usize {
            let key = edge_key(a, b);
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let (pa, pb) = (nodes[a], nodes[b]);
            let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            let on_boundary = count[&key] == 1;
            if on_boundary {
                if let Some((domain, c)) = &star {
                    let ua = unit([pa[0] - c[0], pa[1] - c[1]]);
                    let ub = unit([pb[0] - c[0], pb[1] - c[1]]);
                    let theta = (ua[1] + ub[1]).atan2(ua[0] + ub[0]);
                    if let Some(r) = domain.radius_at(theta) {
                        p = [c[0] + r * theta.cos(), c[1] + r * theta.sin()];
                    }
                }
            }
            nodes.push(p);
            flags.push(on_boundary);
            let m = nodes.len() - 1;
            midpoint.insert(key, m);
            m
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut nodes, &mut flags);
            let bc = mid(b, c, &mut nodes, &mut flags);
            let ca = mid(c, a, &mut nodes, &mut flags);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let refined = TriMesh {
            nodes,
            triangles,
            boundary_flags: flags,
            h: 0.5 * self.h,
            curve: self.curve.clone(),
        };
        for t in 0..refined.triangles.len() {
            let area = refined.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        Ok(refined)
    }

    /// Copy with every coordinate multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Result<TriMesh> {
        let curve = match &self.curve {
            Some(d) => Some(Arc::new(d.scaled(t)?)),
            None => None,
        };
        Ok(TriMesh {
            nodes: self.nodes.iter().map(|p| [t * p[0], t * p[1]]).collect(),
            triangles: self.triangles.clone(),
            boundary_flags: self.boundary_flags.clone(),
            h: t * self.h,
            curve,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let dump = MeshDump {
            nodes: self.nodes.clone(),
            triangles: self.triangles.clone(),
            boundary_flags: self.boundary_flags.clone(),
            h: Some(self.h),
        };
        Ok(serde_json::to_string(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: MeshDump = serde_json::from_str(text)?;
        let h = match dump.h {
            Some(h) => h,
            None => {
                let mut longest: f64 = 0.0;
                for tri in &dump.triangles {
                    for k in 0..3 {
                        longest = longest.max(polygon::dist(dump.nodes[tri[k]], dump.nodes[tri[(k + 1) % 3]]));
                    }
                }
                longest
            }
        };
        TriMesh::new(dump.nodes, dump.triangles, dump.boundary_flags, h)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn unit(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Bucket grid for locating the triangle containing a point.
pub struct MeshLocator<'a> {
    mesh: &'a TriMesh,
    lo: Point,
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> MeshLocator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (lo, hi) = mesh.nodes.iter().fold(
            ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
            |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
        );
        let side = ((mesh.triangles.len() as f64).sqrt().ceil() as usize).max(1);
        let cell = ((hi[0] - lo[0]).max(hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE);
        let dims = [
            ((hi[0] - lo[0]) / cell) as usize + 1,
            ((hi[1] - lo[1]) / cell) as usize + 1,
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let ps = tri.map(|i| mesh.nodes[i]);
            let x0 = ps.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let x1 = ps.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let y0 = ps.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let y1 = ps.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            let (i0, i1) = (((x0 - lo[0]) / cell) as usize, ((x1 - lo[0]) / cell) as usize);
            let (j0, j1) = (((y0 - lo[1]) / cell) as usize, ((y1 - lo[1]) / cell) as usize);
            for i in i0..=i1.min(dims[0] - 1) {
                for j in j0..=j1.min(dims[1] - 1) {
                    buckets[i * dims[1] + j].push(t);
                }
            }
        }
        MeshLocator {
            mesh,
            lo,
            cell,
            dims,
            buckets,
        }
    }

    /// Triangle index and barycentric coordinates of `p`, if inside the mesh.
    pub fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let fi = (p[0] - self.lo[0]) / self.cell;
        let fj = (p[1] - self.lo[1]) / self.cell;
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        if i >= self.dims[0] || j >= self.dims[1] {
            return None;
        }
        let tol = -1e-12;
        for &t in &self.buckets[i * self.dims[1] + j] {
            let [a, b, c] = self.mesh.triangles[t].map(|k| self.mesh.nodes[k]);
            let area = triangle_area(a, b, c);
            let l0 = triangle_area(p, b, c) / area;
            let l1 = triangle_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= tol && l1 >= tol && l2 >= tol {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }

    /// Linear interpolation of nodal values at `p`.
    pub fn interpolate<T>(&self, values: &[T], p: Point) -> Option<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (t, l) = self.locate(p)?;
        let [a, b, c] = self.mesh.triangles[t];
        Some(values[a] * l[0] + values[b] * l[1] + values[c] * l[2])
    }
}
