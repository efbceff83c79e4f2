use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{subset_asymmetry_check, AsymmetryKind, PlanarDomain, StarShape, SubsetOutcome};
use crate::magfem::{domain_eigenvalue, Extrapolation, LevelValue};
use crate::radial::{comparison_check, gap_slope, random_ordered_pair, GapFit, RadialGrid};

/// `t²λ(B, tΩ)` against `λ(t²B, Ω)`, each from its own mesh sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub label: String,
    #[serde(rename = "B")]
    pub b: f64,
    pub t: f64,
    pub scaled_side: f64,
    pub field_side: f64,
    pub relative_error: f64,
}

pub fn scaling_check(domain: &PlanarDomain, b: f64, t: f64, h: f64, levels: usize, tol: f64) -> Result<ScalingCheck> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {t}")));
    }
    let scaled = domain.scaled(t)?;
    // Same absolute mesh size on both sides, so the two meshes differ unless t = 1.
    let lhs = t * t * domain_eigenvalue(&scaled, b, h, levels, tol)?.extrapolation.value;
    let rhs = domain_eigenvalue(domain, t * t * b, h, levels, tol)?.extrapolation.value;
    Ok(ScalingCheck {
        label: domain.label().to_string(),
        b,
        t,
        scaled_side: lhs,
        field_side: rhs,
        relative_error: (lhs - rhs).abs() / rhs.abs(),
    })
}

/// Bracket for the strong-field slope of `log(λ − B)` against `BR²`.
pub const ERDOS_SLOPE_BRACKET: (f64, f64) = (-0.75 - 0.05, -0.125 + 0.05);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErdosStudy {
    #[serde(rename = "R")]
    pub r: f64,
    pub b_grid: Vec<f64>,
    pub fit: GapFit,
    pub in_bracket: bool,
}

pub fn erdos_bounds_study(b_grid: &[f64], r: f64) -> Result<ErdosStudy> {
    let fit = gap_slope(b_grid, r)?;
    let (lo, hi) = ERDOS_SLOPE_BRACKET;
    Ok(ErdosStudy {
        r,
        b_grid: b_grid.to_vec(),
        in_bracket: fit.slope >= lo && fit.slope <= hi,
        fit,
    })
}

/// Refinement table for one domain and field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub label: String,
    #[serde(rename = "B")]
    pub b: f64,
    pub levels: Vec<LevelValue>,
    pub extrapolation: Extrapolation,
    /// Reference value when one is known.
    pub target: Option<f64>,
    /// `|λ_h − target|` per level.
    pub errors: Vec<f64>,
    /// `log₂` of successive error ratios against the target.
    pub orders_against_target: Vec<f64>,
}

pub fn convergence_study(
    domain: &PlanarDomain,
    b: f64,
    h: f64,
    levels: usize,
    tol: f64,
    target: Option<f64>,
) -> Result<ConvergenceTable> {
    let refined = domain_eigenvalue(domain, b, h, levels, tol)?;
    let errors: Vec<f64> = match target {
        Some(t) => refined.levels.iter().map(|l| (l.lambda - t).abs()).collect(),
        None => Vec::new(),
    };
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceTable {
        label: domain.label().to_string(),
        b,
        levels: refined.levels,
        extrapolation: refined.extrapolation,
        target,
        errors,
        orders_against_target: orders,
    })
}

/// Outcome of the seeded comparison-lemma property run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub seeds: usize,
    pub intervals: usize,
    pub monotone_passes: usize,
    pub quantitative_passes: usize,
    /// Seeds failing either check.
    pub failures: Vec<u64>,
    pub largest_slack: f64,
}

impl ComparisonRun {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `𝔢(a) ≥ 𝔢(ã)` and the remainder inequality on `N` and `2N` grids for seeds `0..seeds`.
pub fn comparison_property_run(seeds: usize, intervals: usize, r: f64) -> Result<ComparisonRun> {
    let grid = RadialGrid::new(r, intervals)?;
    let checks: Vec<(u64, Result<crate::radial::ComparisonCheck>)> = (0..seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let (a, t) = random_ordered_pair(seed, r);
            (seed, comparison_check(&a.sample(&grid), &t.sample(&grid), &grid))
        })
        .collect();
    let mut run = ComparisonRun {
        seeds,
        intervals,
        monotone_passes: 0,
        quantitative_passes: 0,
        failures: Vec::new(),
        largest_slack: 0.0,
    };
    for (seed, check) in checks {
        let check = check?;
        run.monotone_passes += check.monotone as usize;
        run.quantitative_passes += check.quantitative as usize;
        run.largest_slack = run.largest_slack.max(check.slack);
        if !(check.monotone && check.quantitative) {
            run.failures.push(seed);
        }
    }
    Ok(run)
}

/// A domain and a star-shaped subset with `|U| ≥ |Ω|(1 − A(Ω)/2)`.
pub struct SubsetPair {
    pub subset: PlanarDomain,
    pub domain: PlanarDomain,
}

/// Seeded pairs `U ⊆ Ω`: `U` shrinks `Ω` radially about its center by `1 − δ(1 + cos(mθ + φ))/2`.
pub fn generate_subset_pairs(count: usize, seed: u64, kind: AsymmetryKind) -> Result<Vec<SubsetPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(Error::InvalidArgument("could not generate enough subset pairs".into()));
        }
        let shape = match rng.random_range(0..4) {
            0 => StarShape::Ellipse {
                a: rng.random_range(1.1..2.5),
                b: 1.0,
            },
            1 => {
                let k = rng.random_range(2..=5u32);
                StarShape::PerturbedDisk {
                    radius: 1.0,
                    epsilon: rng.random_range(0.2..0.9) / (k * k) as f64,
                    k,
                }
            }
            2 => StarShape::Square { side: 2.0 },
            _ => StarShape::Stadium {
                half_length: rng.random_range(0.2..1.5),
                radius: 1.0,
            },
        };
        let label = format!("omega-{}", out.len());
        let domain = PlanarDomain::from_shape(label, shape, [0.0, 0.0], 128)?;
        let m = rng.random_range(1..=6) as f64;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let mut delta: f64 = rng.random_range(0.05..0.5);
        for _ in 0..30 {
            let verts: Vec<_> = domain
                .vertices()
                .iter()
                .map(|p| {
                    let theta = p[1].atan2(p[0]);
                    let s = 1.0 - delta * 0.5 * (1.0 + (m * theta + phase).cos());
                    [s * p[0], s * p[1]]
                })
                .collect();
            let subset = PlanarDomain::polygon(format!("subset-{}", out.len()), verts)?;
            match subset_asymmetry_check(&subset, &domain, kind)? {
                SubsetOutcome::Checked { .. } => {
                    out.push(SubsetPair {
                        subset,
                        domain: domain.clone(),
                    });
                    break;
                }
                SubsetOutcome::Skipped { .. } => delta *= 0.5,
            }
        }
    }
    Ok(out)
}

/// Counts pairs satisfying `r A(U) ≥ ½ R A(Ω)`.
pub fn subset_property_run(pairs: &[SubsetPair], kind: AsymmetryKind) -> Result<(usize, usize)> {
    let outcomes: Vec<Result<SubsetOutcome>> = pairs
        .par_iter()
        .map(|p| subset_asymmetry_check(&p.subset, &p.domain, kind))
        .collect();
    let mut holds = 0;
    let mut checked = 0;
    for o in outcomes {
        if let SubsetOutcome::Checked { holds: h, .. } = o? {
            checked += 1;
            holds += h as usize;
        }
    }
    Ok((holds, checked))
}
