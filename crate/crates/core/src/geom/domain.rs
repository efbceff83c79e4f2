use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use super::shape::{polygon_ray_radius, uniform_angles, StarDescriptor, StarShape};
use super::{polygon, Point};
use crate::error::{Error, Result};

/// Largest vertex count for which the quadratic self-intersection scan runs on
/// polygons without a star descriptor.
const SIMPLICITY_SCAN_LIMIT: usize = 20_000;

/// A simply connected planar domain bounded by a counterclockwise simple polygon.
///
/// Star-shaped domains additionally carry the sampled boundary radius function,
/// and domains built from an analytic family remember the family so meshes can
/// project refined boundary nodes onto the true curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarDomain {
    label: String,
    vertices: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    star: Option<StarDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<StarShape>,
}

#[derive(Deserialize)]
struct RawDomain {
    label: String,
    vertices: Vec<Point>,
    #[serde(default)]
    star: Option<StarDescriptor>,
    #[serde(default)]
    shape: Option<StarShape>,
}

impl<'de> Deserialize<'de> for PlanarDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawDomain::deserialize(d)?;
        PlanarDomain::build(raw.label, raw.vertices, raw.star, raw.shape)
            .map_err(serde::de::Error::custom)
    }
}

impl PlanarDomain {
    /// Polygon without star information.
    pub fn polygon(label: impl Into<String>, vertices: Vec<Point>) -> Result<Self> {
        Self::build(label.into(), vertices, None, None)
    }

    /// Star-shaped polygon from boundary radius samples.
    pub fn star(label: impl Into<String>, star: StarDescriptor) -> Result<Self> {
        let vertices = star.vertices();
        Self::build(label.into(), vertices, Some(star), None)
    }

    /// Samples an analytic family at `samples` uniform angles about `center`.
    pub fn from_shape(
        label: impl Into<String>,
        shape: StarShape,
        center: Point,
        samples: usize,
    ) -> Result<Self> {
        let label = label.into();
        shape.validate().map_err(|reason| Error::InvalidDomain {
            label: label.clone(),
            reason,
        })?;
        let thetas = uniform_angles(samples);
        let radii = thetas.iter().map(|&t| shape.radius_at(t)).collect();
        let star = StarDescriptor {
            center,
            thetas,
            radii,
        };
        let vertices = star.vertices();
        Self::build(label, vertices, Some(star), Some(shape))
    }

    /// Regular polygon inscribed in the circle of the given radius.
    pub fn disk(label: impl Into<String>, disk: DiskSpec, samples: usize) -> Result<Self> {
        Self::from_shape(
            label,
            StarShape::Disk {
                radius: disk.radius,
            },
            disk.center,
            samples,
        )
    }

    fn build(
        label: String,
        vertices: Vec<Point>,
        star: Option<StarDescriptor>,
        shape: Option<StarShape>,
    ) -> Result<Self> {
        let fail = |reason: String| Error::InvalidDomain {
            label: label.clone(),
            reason,
        };
        if vertices.len() < 3 {
            return Err(fail(format!("need at least 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(fail("non-finite vertex coordinate".into()));
        }
        let area = polygon::signed_area(&vertices);
        if area <= 0.0 {
            return Err(fail(format!(
                "vertices must run counterclockwise (signed area {area:e})"
            )));
        }
        if let Some(s) = &star {
            if s.thetas.len() != vertices.len() || s.radii.len() != vertices.len() {
                return Err(fail("star descriptor length differs from vertex count".into()));
            }
            if s.radii.iter().any(|&r| !(r > 0.0)) {
                return Err(fail("star radii must be positive".into()));
            }
            let increasing = s.thetas.windows(2).all(|w| w[1] > w[0]);
            let span = s.thetas[s.thetas.len() - 1] - s.thetas[0];
            if !increasing || span >= std::f64::consts::TAU {
                return Err(fail("star angles must increase within one turn".into()));
            }
            let scale = s.radii.iter().cloned().fold(0.0, f64::max);
            for (v, w) in vertices.iter().zip(s.vertices()) {
                if polygon::dist(*v, w) > 1e-9 * scale {
                    return Err(fail("vertex disagrees with star descriptor".into()));
                }
            }
        } else if vertices.len() <= SIMPLICITY_SCAN_LIMIT {
            if let Some((i, j)) = polygon::self_intersection(&vertices) {
                return Err(fail(format!("edges {i} and {j} intersect")));
            }
        }
        Ok(PlanarDomain {
            label,
            vertices,
            star,
            shape,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn star_descriptor(&self) -> Option<&StarDescriptor> {
        self.star.as_ref()
    }

    pub fn shape(&self) -> Option<&StarShape> {
        self.shape.as_ref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        polygon::signed_area(&self.vertices)
    }

    /// Area enclosed by the analytic curve when there is one, else the shoelace area.
    pub fn exact_area(&self) -> f64 {
        self.shape.map_or_else(|| self.area(), |s| s.area())
    }

    /// `R` with `|Ω| = πR²`, from [`Self::exact_area`].
    pub fn exact_equivalent_radius(&self) -> f64 {
        (self.exact_area() / PI).sqrt()
    }

    pub fn perimeter(&self) -> f64 {
        polygon::perimeter(&self.vertices)
    }

    /// `R` with `|Ω| = πR²`.
    pub fn equivalent_radius(&self) -> f64 {
        (self.area() / PI).sqrt()
    }

    pub fn centroid(&self) -> Point {
        polygon::centroid(&self.vertices)
    }

    pub fn contains(&self, p: Point) -> bool {
        polygon::contains(&self.vertices, p)
    }

    /// Boundary radius about the star center along `theta`; `None` without a star descriptor.
    pub fn radius_at(&self, theta: f64) -> Option<f64> {
        let star = self.star.as_ref()?;
        Some(match &self.shape {
            Some(shape) => shape.radius_at(theta),
            None => polygon_ray_radius(&self.vertices, star.center, theta),
        })
    }

    /// `true` when the boundary samples all sit on one circle about the star center.
    pub fn is_sampled_disk(&self) -> bool {
        match &self.star {
            Some(s) => {
                let (lo, hi) = s
                    .radii
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
                hi - lo <= 1e-12 * hi
            }
            None => false,
        }
    }

    /// Every coordinate multiplied by `t` about the origin.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        let vertices = self.vertices.iter().map(|p| [t * p[0], t * p[1]]).collect();
        let star = self.star.as_ref().map(|s| StarDescriptor {
            center: [t * s.center[0], t * s.center[1]],
            thetas: s.thetas.clone(),
            radii: s.radii.iter().map(|r| t * r).collect(),
        });
        let shape = self.shape.map(|s| s.scaled(t));
        Self::build(self.label.clone(), vertices, star, shape)
    }

    /// Every vertex shifted by `v`.
    pub fn translated(&self, v: Point) -> Result<Self> {
        let vertices = self.vertices.iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect();
        let star = self.star.as_ref().map(|s| StarDescriptor {
            center: [s.center[0] + v[0], s.center[1] + v[1]],
            thetas: s.thetas.clone(),
            radii: s.radii.clone(),
        });
        Self::build(self.label.clone(), vertices, star, self.shape)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A disk `D_R` given by radius and center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub radius: f64,
    pub center: Point,
}

impl DiskSpec {
    pub fn new(radius: f64, center: Point) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("disk radius must be positive, got {radius}")));
        }
        Ok(DiskSpec { radius, center })
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PlanarDomain {
        PlanarDomain::polygon("square", vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    #[test]
    fn square_measures() {
        let sq = unit_square();
        assert_eq!(sq.area(), 1.0);
        assert_eq!(sq.perimeter(), 4.0);
        let big = PlanarDomain::polygon("s2", vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]).unwrap();
        assert!((big.equivalent_radius() - 2.0 / PI.sqrt()).abs() < 1e-15);
        assert!((big.equivalent_radius() - 1.12838).abs() < 1e-5);
    }

    #[test]
    fn unit_area_equivalent_radius() {
        assert!((unit_square().equivalent_radius() - 0.56419).abs() < 1e-5);
    }

    #[test]
    fn regular_polygon_area_and_perimeter() {
        let n = 1024;
        let d = PlanarDomain::disk("disk", DiskSpec::new(1.0, [0.0, 0.0]).unwrap(), n).unwrap();
        let nf = n as f64;
        let area = 0.5 * nf * (2.0 * PI / nf).sin();
        let per = 2.0 * nf * (PI / nf).sin();
        assert!((d.area() - area).abs() < 1e-12);
        assert!((d.area() - 3.14157).abs() < 1e-5);
        assert!((d.perimeter() - per).abs() < 1e-12);
        assert!((d.perimeter() - 6.28317).abs() < 1e-5);
        assert!((d.equivalent_radius() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn ellipse_area_matches_pi_ab() {
        let e = PlanarDomain::from_shape("e", StarShape::Ellipse { a: 2.0, b: 0.5 }, [0.0, 0.0], 4096).unwrap();
        assert!((e.area() - PI).abs() < 1e-5);
    }

    #[test]
    fn sliver_triangle_still_has_positive_perimeter() {
        let t = PlanarDomain::polygon("sliver", vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1e-9]]).unwrap();
        assert!(t.perimeter() > 0.0);
        assert!(t.perimeter() >= 2.0 * PI.sqrt() * t.area().sqrt());
    }

    #[test]
    fn rejects_clockwise_and_bow_tie() {
        assert!(PlanarDomain::polygon("cw", vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        let bow = vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0], [-1.0, 1.0]];
        let err = PlanarDomain::polygon("bow", bow);
        assert!(err.is_err());
    }

    #[test]
    fn json_round_trip_keeps_star_and_shape() {
        let d = PlanarDomain::from_shape(
            "pert",
            StarShape::PerturbedDisk { radius: 1.0, epsilon: 0.1, k: 3 },
            [0.5, -0.25],
            64,
        )
        .unwrap();
        let back = PlanarDomain::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(d, back);
    }

    #[test]
    fn json_without_optional_fields() {
        let d = PlanarDomain::from_json(r#"{"label":"tri","vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(d.area(), 0.5);
        assert!(d.star_descriptor().is_none());
        assert!(PlanarDomain::from_json(r#"{"label":"bad","vertices":[[0,0],[1,0]]}"#).is_err());
    }
}
