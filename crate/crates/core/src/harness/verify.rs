use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use super::config::{generate_corpus, is_disk, ExperimentConfig, MAX_BR2};
use super::svg::write_contour_svg;
use crate::error::{Error, Result};
use crate::geom::{asymmetry_of_loops, asymmetry_report, AsymmetryKind, PlanarDomain, SearchEffort};
use crate::magfem::{refined_eigenvalue, LevelValue};
use crate::mesh::mesh_star_domain;
use crate::radial::{disk_energy, lambda_disk, RadialGrid};
use crate::rearr::{build_profile, corollary_bounds_with, rearrangement_lower_bound};

/// Rearrangement diagnostics for one row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RearrangementSummary {
    /// `B + 2π∫(q′ + aq)² r dr`.
    pub bound_c0: f64,
    /// Allowed shortfall of `λ` below `bound_c0`.
    pub slack: f64,
    pub sandwich_violation: f64,
    pub refined_sandwich_violation: f64,
    pub layer_cake_defect: f64,
    /// `B + 𝔢(a)` for the induced potential.
    pub induced_disk_value: f64,
    pub remainder_rearrange: f64,
    pub remainder_compare: f64,
    pub level_iso_floor_holds: bool,
    pub topologies: Vec<String>,
}

/// One `(domain, B)` result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationRow {
    pub label: String,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub br2: f64,
    pub lambda: f64,
    pub lambda_error: f64,
    pub lambda_disk: f64,
    /// `λ/λ_disk − 1`.
    pub deficit: f64,
    /// Deficit tolerance: `margin_factor` error bars over `λ_disk`.
    pub eps_h: f64,
    pub asym_fraenkel: f64,
    pub asym_interior: f64,
    pub is_disk: bool,
    pub c_emp_thm1_strong: Option<f64>,
    pub c_emp_thm1_weak: Option<f64>,
    pub c_emp_rearrange: Option<f64>,
    pub c_emp_compare: Option<f64>,
    /// `D ≥ −ε_h`.
    pub erdos_pass: bool,
    /// `D > 0` whenever the asymmetry exceeds twice the noise floor.
    pub strict_pass: bool,
    /// `D > ε_h` for non-disks.
    pub margin_pass: bool,
    pub sandwich_pass: bool,
    pub prop2_pass: bool,
    pub error: Option<String>,
    pub convergence: Vec<LevelValue>,
    pub observed_order: Option<f64>,
    pub rearrangement: Option<RearrangementSummary>,
}

impl VerificationRow {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.erdos_pass
            && self.strict_pass
            && self.margin_pass
            && self.sandwich_pass
            && self.prop2_pass
    }

    fn failed(label: &str, b: f64, r: f64, msg: String) -> Self {
        VerificationRow {
            label: label.to_string(),
            b,
            r,
            br2: b * r * r,
            lambda: f64::NAN,
            lambda_error: f64::NAN,
            lambda_disk: f64::NAN,
            deficit: f64::NAN,
            eps_h: f64::NAN,
            asym_fraenkel: f64::NAN,
            asym_interior: f64::NAN,
            is_disk: false,
            c_emp_thm1_strong: None,
            c_emp_thm1_weak: None,
            c_emp_rearrange: None,
            c_emp_compare: None,
            erdos_pass: false,
            strict_pass: false,
            margin_pass: false,
            sandwich_pass: false,
            prop2_pass: false,
            error: Some(msg),
            convergence: Vec::new(),
            observed_order: None,
            rearrangement: None,
        }
    }
}

/// Sweep output with corpus-level summaries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    /// Three times the asymmetry of the control disk's finest mesh boundary.
    pub noise_floor: f64,
    pub rows: Vec<VerificationRow>,
    /// Minimum of `D/A³` over rows with `BR² ≤ 1/π` and `A` above the noise floor.
    pub min_c_weak: Option<f64>,
    /// Minimum of `D e^{5BR²/6}/A^{10/3}` over rows with `A` above the noise floor.
    pub min_c_strong: Option<f64>,
    pub all_pass: bool,
}

/// Asymmetry of a control disk as seen through the mesh boundary.
pub fn asymmetry_noise_floor(config: &ExperimentConfig, radius: f64) -> Result<f64> {
    let disk = PlanarDomain::from_shape(
        "noise-disk",
        crate::geom::StarShape::Disk { radius },
        [0.0, 0.0],
        config.boundary_samples,
    )?;
    let mut mesh = mesh_star_domain(&disk, config.mesh_h)?;
    for _ in 1..config.levels {
        mesh = mesh.refine()?;
    }
    let loops = mesh.boundary_loops();
    let loops: Vec<&[crate::geom::Point]> = loops.iter().map(|l| l.as_slice()).collect();
    let a = asymmetry_of_loops(&loops, config.asymmetry_kind, SearchEffort::default());
    let polygon = asymmetry_report(&disk).get(config.asymmetry_kind);
    Ok(3.0 * a.max(polygon))
}

fn asym_of(report: &crate::geom::AsymmetryReport, kind: AsymmetryKind) -> f64 {
    report.get(kind)
}

/// Runs every stage for one domain and field strength.
pub fn verify_row(domain: &PlanarDomain, b: f64, config: &ExperimentConfig, noise_floor: f64) -> VerificationRow {
    let r = domain.exact_equivalent_radius();
    match verify_row_inner(domain, b, r, config, noise_floor) {
        Ok(row) => row,
        Err(e) => VerificationRow::failed(domain.label(), b, r, e.to_string()),
    }
}

fn verify_row_inner(
    domain: &PlanarDomain,
    b: f64,
    r: f64,
    config: &ExperimentConfig,
    noise_floor: f64,
) -> Result<VerificationRow> {
    let br2 = b * r * r;
    if br2 > MAX_BR2 {
        return Err(Error::InvalidArgument(format!("BR² = {br2} exceeds the two-dimensional cap {MAX_BR2}")));
    }
    let tol = &config.tolerances;
    let mesh = mesh_star_domain(domain, config.mesh_h)?;
    let refined = refined_eigenvalue(&mesh, b, config.levels, tol.eigen)?;
    let lambda = refined.extrapolation.value;
    let lambda_error = refined.extrapolation.error_bar.max(1e-12 * lambda);
    let disk = lambda_disk(b, r)?;
    let lambda_disk = disk.value;
    let deficit = lambda / lambda_disk - 1.0;
    let eps_h = tol.margin_factor * lambda_error / lambda_disk;

    let report = asymmetry_report(domain);
    let asym = asym_of(&report, config.asymmetry_kind);
    let disk_like = is_disk(domain);
    let above_noise = asym > noise_floor && !disk_like;

    let c_emp_thm1_strong = above_noise.then(|| deficit * (5.0 / 6.0 * br2).exp() / asym.powf(10.0 / 3.0));
    let c_emp_thm1_weak = (above_noise && br2 <= 1.0 / std::f64::consts::PI).then(|| deficit / asym.powi(3));

    let erdos_pass = deficit >= -eps_h;
    let strict_pass = !(asym > 2.0 * noise_floor && !disk_like) || deficit > 0.0;
    let margin_pass = disk_like || deficit > eps_h;

    let mut row = VerificationRow {
        label: domain.label().to_string(),
        b,
        r,
        br2,
        lambda,
        lambda_error,
        lambda_disk,
        deficit,
        eps_h,
        asym_fraenkel: report.fraenkel,
        asym_interior: report.interior,
        is_disk: disk_like,
        c_emp_thm1_strong,
        c_emp_thm1_weak,
        c_emp_rearrange: None,
        c_emp_compare: None,
        erdos_pass,
        strict_pass,
        margin_pass,
        sandwich_pass: true,
        prop2_pass: true,
        error: None,
        convergence: refined.levels.clone(),
        observed_order: refined.extrapolation.observed_order,
        rearrangement: None,
    };

    if config.rearrangement {
        let profile = build_profile(&refined.finest, config.n_levels, config.asymmetry_kind)?;
        let bound_c0 = rearrangement_lower_bound(&profile, 0.0)?;
        let finest = refined.finest.lambda;
        let slack = (finest - lambda).abs() + tol.margin_factor * lambda_error;
        let grid = RadialGrid::with_default_size(profile.r_max)?;
        let state = disk_energy(&profile.potential(), &grid)?;
        let disk_for_profile = crate::radial::lambda_disk(b, profile.r_max)?.value;
        let bounds = corollary_bounds_with(&profile, &state, 1.0, disk_for_profile)?;
        let (c_re, c_cmp) = bounds.max_feasible_c(lambda);
        if above_noise {
            row.c_emp_rearrange = c_re;
            row.c_emp_compare = c_cmp;
        }
        let sandwich = profile.sandwich_violation();
        row.sandwich_pass = sandwich <= tol.sandwich;
        row.prop2_pass = lambda >= bound_c0 - slack;
        let mut topologies: Vec<String> = profile.topology.iter().map(|t| t.as_str().to_string()).collect();
        topologies.sort();
        topologies.dedup();
        row.rearrangement = Some(RearrangementSummary {
            bound_c0,
            slack,
            sandwich_violation: sandwich,
            refined_sandwich_violation: profile.refined_sandwich_violation(),
            layer_cake_defect: profile.layer_cake_defect,
            induced_disk_value: b + state.energy,
            remainder_rearrange: bounds.remainder_rearrange,
            remainder_compare: bounds.remainder_compare,
            level_iso_floor_holds: profile.iso_floor_holds.iter().all(|&h| h),
            topologies,
        });
        if let Some(dir) = &config.outputs.svg_dir {
            std::fs::create_dir_all(dir)?;
            let name = format!("{}-B{}.svg", domain.label(), b);
            let thresholds: Vec<f64> = (1..8).map(|i| profile.z[i * profile.levels() / 8]).collect();
            write_contour_svg(&refined.finest, &thresholds, dir.join(name))?;
        }
    }
    Ok(row)
}

/// Runs the full sweep; rows come back in corpus × field order.
pub fn verify_theorem1(config: &ExperimentConfig) -> Result<SweepReport> {
    let corpus = generate_corpus(config)?;
    let radius = corpus
        .iter()
        .find(|d| is_disk(d))
        .map(|d| d.exact_equivalent_radius())
        .unwrap_or(1.0);
    let noise_floor = asymmetry_noise_floor(config, radius)?;
    let tasks: Vec<(&PlanarDomain, f64)> = corpus
        .iter()
        .flat_map(|d| config.b_values.iter().map(move |&b| (d, b)))
        .collect();
    let rows: Vec<VerificationRow> = tasks
        .par_iter()
        .map(|&(d, b)| verify_row(d, b, config, noise_floor))
        .collect();
    let min_of = |f: &dyn Fn(&VerificationRow) -> Option<f64>| rows.iter().filter_map(f).reduce(f64::min);
    let min_c_weak = min_of(&|r| r.c_emp_thm1_weak);
    let min_c_strong = min_of(&|r| r.c_emp_thm1_strong);
    let all_pass = rows.iter().all(|r| r.passed())
        && min_c_weak.is_none_or(|c| c > 0.0)
        && min_c_strong.is_none_or(|c| c > 0.0);
    let report = SweepReport {
        config: config.clone(),
        noise_floor,
        rows,
        min_c_weak,
        min_c_strong,
        all_pass,
    };
    if let Some(path) = &config.outputs.csv {
        report.save_csv(path)?;
    }
    if let Some(path) = &config.outputs.json {
        std::fs::write(path, report.to_json()?)?;
    }
    Ok(report)
}

/// CSV header of [`SweepReport::write_csv`].
pub const CSV_COLUMNS: [&str; 21] = [
    "label",
    "B",
    "R",
    "BR2",
    "lambda",
    "lambda_err",
    "lambda_disk",
    "deficit",
    "eps_h",
    "asym_fraenkel",
    "asym_interior",
    "c_emp_thm1_strong",
    "c_emp_thm1_weak",
    "c_emp_rearrange",
    "c_emp_compare",
    "erdos_pass",
    "strict_pass",
    "margin_pass",
    "sandwich_pass",
    "prop2_pass",
    "error",
];

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                num(r.b),
                num(r.r),
                num(r.br2),
                num(r.lambda),
                num(r.lambda_error),
                num(r.lambda_disk),
                num(r.deficit),
                num(r.eps_h),
                num(r.asym_fraenkel),
                num(r.asym_interior),
                opt(r.c_emp_thm1_strong),
                opt(r.c_emp_thm1_weak),
                opt(r.c_emp_rearrange),
                opt(r.c_emp_compare),
                r.erdos_pass.to_string(),
                r.strict_pass.to_string(),
                r.margin_pass.to_string(),
                r.sandwich_pass.to_string(),
                r.prop2_pass.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
