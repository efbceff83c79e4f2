use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::{AsymmetryKind, PlanarDomain, StarShape};

/// One family of domains in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Disks { radii: Vec<f64> },
    /// Semi-axes `[a, b]`.
    Ellipses { axes: Vec<[f64; 2]> },
    /// `r(θ) = radius (1 + ε cos kθ)` for every `(ε, k)` pair.
    PerturbedDisks { radius: f64, epsilons: Vec<f64>, ks: Vec<u32> },
    Squares { sides: Vec<f64> },
    /// `[half_length, radius]`.
    Stadiums { shapes: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative eigen-residual.
    pub eigen: f64,
    /// Deficits must exceed this many convergence error bars.
    pub margin_factor: f64,
    /// Relative slack for `0 ≤ a ≤ Br/2`.
    pub sandwich: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigen: 1e-10,
            margin_factor: 3.0,
            sandwich: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    /// Directory for per-row contour plots.
    pub svg_dir: Option<PathBuf>,
}

/// Sweep configuration; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<FamilySpec>,
    pub b_values: Vec<f64>,
    /// Coarsest mesh size.
    pub mesh_h: f64,
    /// Number of meshes, each a uniform refinement of the previous one.
    pub levels: usize,
    pub asymmetry_kind: AsymmetryKind,
    /// Radial intervals of the rearranged profile.
    pub n_levels: usize,
    /// Rescale every domain to this area.
    pub target_area: Option<f64>,
    /// Boundary vertices per analytic domain.
    pub boundary_samples: usize,
    /// Extra perturbed disks with seeded random `(ε, k)`.
    pub random_perturbed: usize,
    /// Build rearrangement profiles and their bounds.
    pub rearrangement: bool,
    pub tolerances: Tolerances,
    pub outputs: Outputs,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            families: vec![
                FamilySpec::Disks { radii: vec![1.0] },
                FamilySpec::Ellipses {
                    axes: vec![[2.0, 0.5], [1.5, 1.0 / 1.5], [1.25, 0.8]],
                },
                FamilySpec::PerturbedDisks {
                    radius: 1.0,
                    epsilons: vec![0.05, 0.1],
                    ks: vec![2, 3],
                },
                FamilySpec::PerturbedDisks {
                    radius: 1.0,
                    epsilons: vec![0.05],
                    ks: vec![4],
                },
                FamilySpec::PerturbedDisks {
                    radius: 1.0,
                    epsilons: vec![0.2],
                    ks: vec![2],
                },
                FamilySpec::Squares { sides: vec![1.0] },
                FamilySpec::Stadiums {
                    shapes: vec![[0.5, 1.0], [1.0, 0.6]],
                },
            ],
            b_values: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            mesh_h: 0.1,
            levels: 3,
            asymmetry_kind: AsymmetryKind::Interior,
            n_levels: crate::rearr::DEFAULT_LEVELS,
            target_area: Some(PI),
            boundary_samples: 256,
            random_perturbed: 0,
            rearrangement: true,
            tolerances: Tolerances::default(),
            outputs: Outputs::default(),
            seed: 0,
        }
    }
}

/// Largest `BR²` accepted for two-dimensional runs.
pub const MAX_BR2: f64 = 60.0;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.mesh_h > 0.0) {
            return bad(format!("mesh_h must be positive, got {}", self.mesh_h));
        }
        if !(1..=5).contains(&self.levels) {
            return bad(format!("levels must lie in 1..=5, got {}", self.levels));
        }
        if self.n_levels < 4 {
            return bad(format!("n_levels must be at least 4, got {}", self.n_levels));
        }
        if self.boundary_samples < 8 {
            return bad(format!("boundary_samples must be at least 8, got {}", self.boundary_samples));
        }
        if let Some(b) = self.b_values.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return bad(format!("field strengths must be finite and nonnegative, got {b}"));
        }
        if let Some(a) = self.target_area {
            if !(a > 0.0) {
                return bad(format!("target_area must be positive, got {a}"));
            }
        }
        let t = &self.tolerances;
        if !(t.eigen > 0.0 && t.margin_factor > 0.0 && t.sandwich > 0.0) {
            return bad("tolerances must be positive".into());
        }
        for f in &self.families {
            if let FamilySpec::PerturbedDisks { epsilons, ks, .. } = f {
                for &k in ks {
                    if k == 0 {
                        return bad("perturbation frequency k must be positive".into());
                    }
                    for &e in epsilons {
                        if !(0.0..1.0 / (k * k) as f64).contains(&e) {
                            return bad(format!("ε = {e} violates 0 ≤ ε < 1/k² for k = {k}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn shape_domain(label: String, shape: StarShape, samples: usize) -> Result<PlanarDomain> {
    PlanarDomain::from_shape(label, shape, [0.0, 0.0], samples)
}

/// Expands the families into domains, rescaled to the target area, with a control disk per area.
pub fn generate_corpus(config: &ExperimentConfig) -> Result<Vec<PlanarDomain>> {
    use rand::{Rng, SeedableRng};
    config.validate()?;
    let n = config.boundary_samples;
    let mut out = Vec::new();
    for f in &config.families {
        match f {
            FamilySpec::Disks { radii } => {
                for &r in radii {
                    out.push(shape_domain(format!("disk-r{}", fmt_num(r)), StarShape::Disk { radius: r }, n)?);
                }
            }
            FamilySpec::Ellipses { axes } => {
                for &[a, b] in axes {
                    let label = format!("ellipse-{}x{}", fmt_num(a), fmt_num(b));
                    out.push(shape_domain(label, StarShape::Ellipse { a, b }, n)?);
                }
            }
            FamilySpec::PerturbedDisks { radius, epsilons, ks } => {
                for &epsilon in epsilons {
                    for &k in ks {
                        let d = if epsilon == 0.0 {
                            shape_domain(format!("disk-r{}", fmt_num(*radius)), StarShape::Disk { radius: *radius }, n)?
                        } else {
                            let label = format!("perturbed-e{}-k{k}", fmt_num(epsilon));
                            shape_domain(label, StarShape::PerturbedDisk { radius: *radius, epsilon, k }, n)?
                        };
                        out.push(d);
                    }
                }
            }
            FamilySpec::Squares { sides } => {
                for &side in sides {
                    out.push(shape_domain(format!("square-{}", fmt_num(side)), StarShape::Square { side }, n)?);
                }
            }
            FamilySpec::Stadiums { shapes } => {
                for &[half_length, radius] in shapes {
                    let label = format!("stadium-{}x{}", fmt_num(half_length), fmt_num(radius));
                    out.push(shape_domain(label, StarShape::Stadium { half_length, radius }, n)?);
                }
            }
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    for i in 0..config.random_perturbed {
        let k: u32 = rng.random_range(2..=5);
        let epsilon = rng.random_range(0.02..0.9) / (k * k) as f64;
        let shape = StarShape::PerturbedDisk { radius: 1.0, epsilon, k };
        out.push(shape_domain(format!("random-{i}-e{}-k{k}", fmt_num(epsilon)), shape, n)?);
    }
    if let Some(target) = config.target_area {
        out = out
            .into_iter()
            .map(|d| {
                let t = (target / d.exact_area()).sqrt();
                d.scaled(t)
            })
            .collect::<Result<_>>()?;
    }
    // Control disk for every area without one.
    let mut areas: Vec<f64> = Vec::new();
    for d in &out {
        let a = d.exact_area();
        if !areas.iter().any(|&b| (a - b).abs() <= 1e-9 * b) {
            areas.push(a);
        }
    }
    for a in areas {
        let has_disk = out
            .iter()
            .any(|d| matches!(d.shape(), Some(StarShape::Disk { .. })) && (d.exact_area() - a).abs() <= 1e-9 * a);
        if !has_disk {
            let radius = (a / PI).sqrt();
            out.push(shape_domain(format!("disk-control-r{}", fmt_num(radius)), StarShape::Disk { radius }, n)?);
        }
    }
    Ok(out)
}

pub(crate) fn is_disk(domain: &PlanarDomain) -> bool {
    matches!(domain.shape(), Some(StarShape::Disk { .. })) || domain.is_sampled_disk()
}
