use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{polygon, Point};

/// Analytic star-shaped boundary families, centered on the star center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StarShape {
    Disk { radius: f64 },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse { a: f64, b: f64 },
    /// `r(θ) = radius · (1 + epsilon · cos(k θ))`
    PerturbedDisk { radius: f64, epsilon: f64, k: u32 },
    /// Axis-aligned square.
    Square { side: f64 },
    /// Points within `radius` of the segment `[-half_length, half_length] × {0}`.
    Stadium { half_length: f64, radius: f64 },
}

impl StarShape {
    /// Boundary radius along the ray at angle `theta`.
    pub fn radius_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        match *self {
            StarShape::Disk { radius } => radius,
            StarShape::Ellipse { a, b } => a * b / ((b * c).powi(2) + (a * s).powi(2)).sqrt(),
            StarShape::PerturbedDisk { radius, epsilon, k } => {
                radius * (1.0 + epsilon * (k as f64 * theta).cos())
            }
            StarShape::Square { side } => 0.5 * side / c.abs().max(s.abs()),
            StarShape::Stadium {
                half_length,
                radius,
            } => {
                if s.abs() > 0.0 {
                    let t = radius / s.abs();
                    if (t * c).abs() <= half_length {
                        return t;
                    }
                }
                let cx = half_length.copysign(c);
                let uc = c * cx;
                uc + (uc * uc - cx * cx + radius * radius).sqrt()
            }
        }
    }

    /// Exact area of the analytic region.
    pub fn area(&self) -> f64 {
        match *self {
            StarShape::Disk { radius } => PI * radius * radius,
            StarShape::Ellipse { a, b } => PI * a * b,
            StarShape::PerturbedDisk { radius, epsilon, .. } => {
                PI * radius * radius * (1.0 + 0.5 * epsilon * epsilon)
            }
            StarShape::Square { side } => side * side,
            StarShape::Stadium {
                half_length,
                radius,
            } => 4.0 * half_length * radius + PI * radius * radius,
        }
    }

    /// Largest inscribed radius, when known in closed form.
    pub fn inscribed_radius(&self) -> Option<f64> {
        match *self {
            StarShape::Disk { radius } => Some(radius),
            StarShape::Ellipse { a, b } => Some(a.min(b)),
            StarShape::Square { side } => Some(0.5 * side),
            StarShape::Stadium { radius, .. } => Some(radius),
            StarShape::PerturbedDisk { .. } => None,
        }
    }

    pub fn is_disk(&self) -> bool {
        matches!(self, StarShape::Disk { .. })
            || matches!(self, StarShape::PerturbedDisk { epsilon, .. } if *epsilon == 0.0)
            || matches!(self, StarShape::Ellipse { a, b } if a == b)
    }

    /// Same family scaled by `t`.
    pub fn scaled(&self, t: f64) -> StarShape {
        match *self {
            StarShape::Disk { radius } => StarShape::Disk { radius: t * radius },
            StarShape::Ellipse { a, b } => StarShape::Ellipse { a: t * a, b: t * b },
            StarShape::PerturbedDisk { radius, epsilon, k } => StarShape::PerturbedDisk {
                radius: t * radius,
                epsilon,
                k,
            },
            StarShape::Square { side } => StarShape::Square { side: t * side },
            StarShape::Stadium {
                half_length,
                radius,
            } => StarShape::Stadium {
                half_length: t * half_length,
                radius: t * radius,
            },
        }
    }

    /// Checks the parameters describe a valid star-shaped region.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            StarShape::Disk { radius } => positive("radius", radius),
            StarShape::Ellipse { a, b } => positive("a", a).and(positive("b", b)),
            StarShape::PerturbedDisk { radius, epsilon, k } => {
                positive("radius", radius)?;
                if !(0.0..1.0).contains(&epsilon.abs()) {
                    return Err(format!("|epsilon| must be below 1, got {epsilon}"));
                }
                if k == 0 && epsilon != 0.0 {
                    return Err("k = 0 perturbation is a rescaled disk".into());
                }
                Ok(())
            }
            StarShape::Square { side } => positive("side", side),
            StarShape::Stadium {
                half_length,
                radius,
            } => {
                positive("radius", radius)?;
                if half_length.is_finite() && half_length >= 0.0 {
                    Ok(())
                } else {
                    Err(format!("half_length must be non-negative, got {half_length}"))
                }
            }
        }
    }
}

/// Sampled boundary radius function `θᵢ ↦ r(θᵢ)` about a star center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarDescriptor {
    pub center: Point,
    pub thetas: Vec<f64>,
    pub radii: Vec<f64>,
}

impl StarDescriptor {
    pub fn vertices(&self) -> Vec<Point> {
        self.thetas
            .iter()
            .zip(&self.radii)
            .map(|(&t, &r)| [self.center[0] + r * t.cos(), self.center[1] + r * t.sin()])
            .collect()
    }
}

/// Boundary radius of a polygon star-shaped about `center`, along angle `theta`.
pub fn polygon_ray_radius(vertices: &[Point], center: Point, theta: f64) -> f64 {
    let u = [theta.cos(), theta.sin()];
    let n = vertices.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = [vertices[i][0] - center[0], vertices[i][1] - center[1]];
        let b = [
            vertices[(i + 1) % n][0] - center[0],
            vertices[(i + 1) % n][1] - center[1],
        ];
        let e = [b[0] - a[0], b[1] - a[1]];
        // solve t u = a + s e
        let den = u[0] * e[1] - u[1] * e[0];
        if den.abs() < 1e-300 {
            continue;
        }
        let t = (a[0] * e[1] - a[1] * e[0]) / den;
        let s = (a[0] * u[1] - a[1] * u[0]) / den;
        if (-1e-12..=1.0 + 1e-12).contains(&s) && t > 0.0 {
            best = best.min(t);
        }
    }
    if best.is_finite() {
        best
    } else {
        polygon::boundary_distance(center, &[vertices])
    }
}

/// Uniform angles `2πj/n`, `j = 0..n`.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stadium_radius_hits_flat_and_cap() {
        let s = StarShape::Stadium {
            half_length: 1.0,
            radius: 0.5,
        };
        assert!((s.radius_at(PI / 2.0) - 0.5).abs() < 1e-15);
        assert!((s.radius_at(0.0) - 1.5).abs() < 1e-15);
        assert!((s.radius_at(PI) - 1.5).abs() < 1e-15);
        // points returned lie at distance `radius` from the core segment
        for j in 0..64 {
            let t = TAU * j as f64 / 64.0;
            let r = s.radius_at(t);
            let p = [r * t.cos(), r * t.sin()];
            let d = polygon::segment_distance(p, [-1.0, 0.0], [1.0, 0.0]);
            assert!((d - 0.5).abs() < 1e-12, "theta {t}: {d}");
        }
    }

    #[test]
    fn square_radius_reaches_corners() {
        let s = StarShape::Square { side: 2.0 };
        assert!((s.radius_at(PI / 4.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.radius_at(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_radius_of_polygon_square() {
        let sq = vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
        for t in [0.0, 0.3, PI / 4.0, 2.0, 4.0] {
            let want = StarShape::Square { side: 2.0 }.radius_at(t);
            let got = polygon_ray_radius(&sq, [0.0, 0.0], t);
            assert!((want - got).abs() < 1e-12);
        }
    }
}
