use std::f64::consts::TAU;
use std::sync::Arc;

use super::trimesh::TriMesh;
use crate::error::{Error, Result};
use crate::geom::{PlanarDomain, Point};

/// Fewest rings accepted by [`mesh_star_domain`].
pub const MIN_RINGS: usize = 3;

/// Nodes per ring step: ring `k` carries `NODES_PER_RING * k` nodes.
pub const NODES_PER_RING: usize = 8;

/// Number of rings used for a target element size.
pub fn ring_count(domain: &PlanarDomain, target_h: f64) -> Option<usize> {
    let star = domain.star_descriptor()?;
    let r_max = star.radii.iter().cloned().fold(0.0, f64::max);
    Some((r_max / target_h).ceil() as usize)
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Structured polar mesh of a star-shaped domain.
///
/// Ring `k` of `N` sits at `(k/N) r(θ)` around the star center with `8k`
/// equally spaced nodes. When the domain has no analytic shape and few enough
/// vertices, the polygon vertices are merged into the outer ring so the mesh
/// boundary coincides with the polygon.
pub fn mesh_star_domain(domain: &PlanarDomain, target_h: f64) -> Result<TriMesh> {
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::InvalidArgument(format!("target_h must be positive, got {target_h}")));
    }
    let star = domain.star_descriptor().ok_or_else(|| {
        Error::Inapplicable(format!("domain {} has no star descriptor", domain.label()))
    })?;
    let rings = ring_count(domain, target_h).unwrap_or(0);
    if rings < MIN_RINGS {
        return Err(Error::MeshTooCoarse { target_h, rings });
    }
    let c = star.center;
    let outer_uniform = NODES_PER_RING * rings;
    let use_vertices = domain.shape().is_none() && star.thetas.len() <= 2 * outer_uniform;

    let radius = |theta: f64| -> f64 {
        domain
            .radius_at(theta)
            .expect("star domains answer radius queries")
    };
    let mut nodes: Vec<Point> = vec![c];
    let mut flags = vec![false];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    let mut ring_phase: Vec<Vec<f64>> = vec![vec![0.0]];
    for k in 1..=rings {
        ring_start.push(nodes.len());
        let s = k as f64 / rings as f64;
        let boundary = k == rings;
        let n = NODES_PER_RING * k;
        // Angles measured from the first descriptor angle, in [0, 2π).
        let mut phases: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        if boundary && use_vertices {
            let gap = 0.25 * TAU / n as f64;
            let vertex_phases: Vec<f64> = star.thetas.iter().map(|&t| t - star.thetas[0]).collect();
            phases.retain(|&t| vertex_phases.iter().all(|&v| angular_gap(t, v) > gap));
            phases.extend(vertex_phases);
            phases.sort_by(f64::total_cmp);
        }
        for &phase in &phases {
            let theta = star.thetas[0] + phase;
            let r = s * radius(theta);
            nodes.push([c[0] + r * theta.cos(), c[1] + r * theta.sin()]);
            flags.push(boundary);
        }
        ring_len.push(phases.len());
        ring_phase.push(phases);
    }

    let mut triangles = Vec::new();
    for j in 0..ring_len[1] {
        let a = ring_start[1] + j;
        let b = ring_start[1] + (j + 1) % ring_len[1];
        triangles.push([0, a, b]);
    }
    for k in 2..=rings {
        let (ia, na) = (ring_start[k - 1], ring_len[k - 1]);
        let (ib, nb) = (ring_start[k], ring_len[k]);
        let (ta, tb) = (&ring_phase[k - 1], &ring_phase[k]);
        let angle_a = |i: usize| if i == na { TAU } else { ta[i] };
        let angle_b = |j: usize| if j == nb { TAU + tb[0] } else { tb[j] };
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let advance_a = j == nb || (i < na && angle_a(i + 1) <= angle_b(j + 1));
            if advance_a {
                triangles.push([ia + i % na, ib + j % nb, ia + (i + 1) % na]);
                i += 1;
            } else {
                triangles.push([ia + i % na, ib + j % nb, ib + (j + 1) % nb]);
                j += 1;
            }
        }
    }
    let mesh = TriMesh::from_parts_unchecked(
        nodes,
        triangles,
        flags,
        star.radii.iter().cloned().fold(0.0, f64::max) / rings as f64,
        Some(Arc::new(domain.clone())),
    );
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{StarDescriptor, StarShape};
    use std::f64::consts::PI;

    fn unit_disk() -> PlanarDomain {
        PlanarDomain::from_shape("disk", StarShape::Disk { radius: 1.0 }, [0.0, 0.0], 256).unwrap()
    }

    #[test]
    fn disk_area_within_one_percent() {
        let m = mesh_star_domain(&unit_disk(), 0.1).unwrap();
        assert!((m.area() - PI).abs() / PI < 0.01);
        assert_eq!(m.num_boundary_nodes(), 80);
        assert_eq!(m.num_nodes(), 1 + 4 * 10 * 11);
    }

    #[test]
    fn disk_area_error_is_second_order() {
        let e1 = PI - mesh_star_domain(&unit_disk(), 0.1).unwrap().area();
        let e2 = PI - mesh_star_domain(&unit_disk(), 0.05).unwrap().area();
        let ratio = e2 / e1;
        assert!((ratio - 0.25).abs() < 0.01, "ratio {ratio}");
    }

    #[test]
    fn ellipse_area_within_one_percent() {
        let d = PlanarDomain::from_shape("ellipse", StarShape::Ellipse { a: 2.0, b: 0.5 }, [0.0, 0.0], 512)
            .unwrap();
        let m = mesh_star_domain(&d, 0.05).unwrap();
        assert!((m.area() - PI).abs() / PI < 0.01);
    }

    #[test]
    fn coarse_target_is_rejected() {
        let r = mesh_star_domain(&unit_disk(), 0.6);
        assert!(matches!(r, Err(Error::MeshTooCoarse { rings: 2, .. })));
    }

    #[test]
    fn polygon_without_shape_is_meshed_exactly() {
        let thetas: Vec<f64> = (0..4).map(|k| PI / 4.0 + k as f64 * PI / 2.0).collect();
        let star = StarDescriptor {
            center: [0.0, 0.0],
            radii: vec![0.5f64.sqrt(); 4],
            thetas,
        };
        let square = PlanarDomain::star("square", star).unwrap();
        let m = mesh_star_domain(&square, 0.1).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        let r = m.refine().unwrap();
        assert!((r.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_converges_monotonically_on_convex_domain() {
        let m0 = mesh_star_domain(&unit_disk(), 0.25).unwrap();
        let m1 = m0.refine().unwrap();
        let m2 = m1.refine().unwrap();
        assert!(m0.area() < m1.area() && m1.area() < m2.area() && m2.area() < PI);
        assert_eq!(m1.num_triangles(), 4 * m0.num_triangles());
        let ratio = m1.num_boundary_nodes() as f64 / m0.num_boundary_nodes() as f64;
        assert!((ratio - 2.0).abs() < 0.1);
        for (p, &b) in m2.nodes().iter().zip(m2.boundary_flags()) {
            if b {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
    }
}
