//! Symmetric decreasing rearrangement of `|f|` and the induced radial potential.
//!
//! Levels are sampled uniformly in `r` over `[0, R]`, `πR² = |Ω|`: the threshold
//! `q(r_k)` solves `F(q) = πr_k²` with `F(z) = |{|f| > z}|`. On each level the
//! contour integrals `G = ∫|∇|f||` and `H = ∫|∇|f||⁻¹` give, through the coarea
//! formula `F′ = −H`, the potential `a(r) = 2πrB F / (G H)` and the slope
//! `q′(r) = −2πr / H`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{asymmetry_of_loops, iso_from_parts, polygon, AsymmetryKind, SearchEffort};
use crate::magfem::EigenResult;
use crate::mesh::{LevelSetField, LevelSetSlice};
use crate::radial::{lambda_disk, PotentialProfile, RadialState};

/// Default number of radial intervals.
pub const DEFAULT_LEVELS: usize = 256;

/// Levels with equivalent radius below this many mesh sizes count as unresolved.
pub const RESOLVED_MESH_SIZES: f64 = 2.0;

/// Shape of one superlevel set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// One component, no holes.
    Simple,
    /// Several components.
    Disconnected,
    /// At least one hole.
    Holes,
    /// The level `z = 0`: the whole domain.
    Domain,
    /// The top level `z = max |f|`: empty.
    Empty,
}

impl Topology {
    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::Simple => "simple",
            Topology::Disconnected => "disconnected",
            Topology::Holes => "holes",
            Topology::Domain => "domain",
            Topology::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RearrangementProfile {
    pub b: f64,
    #[serde(rename = "R")]
    pub r_max: f64,
    pub domain_area: f64,
    pub asymmetry_kind: AsymmetryKind,
    pub r: Vec<f64>,
    /// Rearranged modulus, normalized by `2π∫q² r dr = 1` on the grid.
    pub q: Vec<f64>,
    /// Thresholds `z_k` on the scale of the input eigenfunction.
    pub z: Vec<f64>,
    /// `F(z_k)`.
    pub f_area: Vec<f64>,
    /// `∫_{|f| = z_k} |∇|f||`.
    pub grad_integral: Vec<f64>,
    /// `∫_{|f| = z_k} |∇|f||⁻¹`.
    pub inv_grad_integral: Vec<f64>,
    /// Induced potential from the coarea form of `F′`.
    pub a: Vec<f64>,
    /// Induced potential from monotone finite differences of `F`.
    pub a_fd: Vec<f64>,
    pub level_asym: Vec<f64>,
    pub topology: Vec<Topology>,
    /// Perimeter over `2√π F^{1/2}`, minus one.
    pub iso_deficit: Vec<f64>,
    /// Isoperimetric deficit over `A²`, absent when the level is symmetric.
    pub iso_constant: Vec<Option<f64>>,
    pub iso_floor_holds: Vec<bool>,
    /// Equivalent radius at least [`RESOLVED_MESH_SIZES`] mesh sizes.
    pub resolved: Vec<bool>,
    /// Factor taking `z` to `q`.
    pub q_scale: f64,
    /// `|2π∫q_raw² r dr − ∫|f|²|` before normalization.
    pub layer_cake_defect: f64,
    /// Levels whose contour integrals vanished; their `a` is interpolated.
    pub skipped_levels: Vec<usize>,
}

struct Level {
    z: f64,
    slice: LevelSetSlice,
    asym: f64,
    topology: Topology,
    iso: Option<crate::geom::IsoCheck>,
}

fn topology_of(slice: &LevelSetSlice) -> Topology {
    let mut outer = 0;
    let mut holes = 0;
    for l in &slice.contour_polygons {
        if polygon::signed_area(l) > 0.0 {
            outer += 1;
        } else {
            holes += 1;
        }
    }
    if holes > 0 {
        Topology::Holes
    } else if outer > 1 {
        Topology::Disconnected
    } else {
        Topology::Simple
    }
}

/// Builds the profile from a mass-normalized eigenfunction.
pub fn build_profile(result: &EigenResult, n_levels: usize, kind: AsymmetryKind) -> Result<RearrangementProfile> {
    if n_levels < 4 {
        return Err(Error::InvalidArgument(format!("need at least 4 levels, got {n_levels}")));
    }
    let mesh = result.mesh.as_ref();
    let modulus = result.modulus();
    let field = LevelSetField::new(mesh, &modulus)?;
    let area = mesh.area();
    let r_max = (area / PI).sqrt();
    let dr = r_max / n_levels as f64;
    let top = field.max();
    if !(top > 0.0) {
        return Err(Error::InvalidArgument("eigenfunction vanishes identically".into()));
    }
    let effort = SearchEffort::default();

    let levels: Vec<Level> = (0..=n_levels)
        .into_par_iter()
        .map(|k| {
            let r = k as f64 * dr;
            if k == 0 {
                let slice = field.slice(top);
                return Level {
                    z: top,
                    slice,
                    asym: f64::NAN,
                    topology: Topology::Empty,
                    iso: None,
                };
            }
            let (z, topology_override) = if k == n_levels {
                (0.0, Some(Topology::Domain))
            } else {
                (field.threshold_for_area(PI * r * r, 1e-13), None)
            };
            let slice = field.slice(z);
            let loops = slice.loops();
            let (asym, iso) = if loops.is_empty() {
                (f64::NAN, None)
            } else {
                let asym = asymmetry_of_loops(&loops, kind, effort);
                let perimeter: f64 = loops.iter().map(|l| polygon::perimeter(l)).sum();
                (asym, Some(iso_from_parts(perimeter, slice.contour_area(), asym)))
            };
            let topology = topology_override.unwrap_or_else(|| topology_of(&slice));
            Level {
                z,
                slice,
                asym,
                topology,
                iso,
            }
        })
        .collect();

    let n = n_levels;
    let r: Vec<f64> = (0..=n).map(|k| k as f64 * dr).collect();
    let z: Vec<f64> = levels.iter().map(|l| l.z).collect();
    let f_area: Vec<f64> = levels
        .iter()
        .enumerate()
        .map(|(k, l)| if k == 0 { 0.0 } else { l.slice.superlevel_area })
        .collect();
    let g: Vec<f64> = levels.iter().map(|l| l.slice.gradient_line_integral).collect();
    let h: Vec<f64> = levels.iter().map(|l| l.slice.inverse_gradient_line_integral).collect();

    // Coarea potential, with unusable levels marked for interpolation.
    let mut a = vec![0.0; n + 1];
    let mut skipped = Vec::new();
    if result.b != 0.0 {
        for k in 1..=n {
            let denom = g[k] * h[k];
            if denom > 0.0 && denom.is_finite() {
                a[k] = 2.0 * PI * r[k] * result.b * f_area[k] / denom;
            } else {
                a[k] = f64::NAN;
                skipped.push(k);
            }
        }
        fill_gaps(&mut a);
    }

    // Finite-difference potential, for diagnostics.
    let mut a_fd = vec![0.0; n + 1];
    if result.b != 0.0 {
        for k in 1..=n {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n));
            let slope = (f_area[hi] - f_area[lo]) / (z[hi] - z[lo]);
            let slope = slope.min(-1e-14);
            let phi = if g[k] > 0.0 { f_area[k] / g[k] } else { f64::NAN };
            a_fd[k] = -2.0 * PI * r[k] * result.b * phi / slope;
        }
        fill_gaps(&mut a_fd);
    }

    let raw_norm = 2.0 * PI * trapezoid(&r, |k| z[k] * z[k] * r[k]);
    let q_scale = 1.0 / raw_norm.sqrt();
    let q: Vec<f64> = z.iter().map(|v| v * q_scale).collect();
    let mass_norm: f64 = mass_norm_sqr(result);
    let layer_cake_defect = (raw_norm - mass_norm).abs();

    let mut level_asym: Vec<f64> = levels.iter().map(|l| l.asym).collect();
    level_asym[0] = level_asym[1];
    fill_gaps(&mut level_asym);
    let topology = levels.iter().map(|l| l.topology).collect();
    let iso_deficit = levels.iter().map(|l| l.iso.map_or(f64::NAN, |i| i.deficit)).collect();
    let iso_constant = levels.iter().map(|l| l.iso.and_then(|i| i.c_empirical)).collect();
    let iso_floor_holds = levels.iter().map(|l| l.iso.is_none_or(|i| i.floor_holds)).collect();
    let resolved = levels
        .iter()
        .zip(&r)
        .map(|(l, &rk)| rk >= RESOLVED_MESH_SIZES * mesh.h() && !l.slice.contour_polygons.is_empty())
        .collect();

    Ok(RearrangementProfile {
        b: result.b,
        r_max,
        domain_area: area,
        asymmetry_kind: kind,
        r,
        q,
        z,
        f_area,
        grad_integral: g,
        inv_grad_integral: h,
        a,
        a_fd,
        level_asym,
        topology,
        iso_deficit,
        iso_constant,
        iso_floor_holds,
        resolved,
        q_scale,
        layer_cake_defect,
        skipped_levels: skipped,
    })
}

/// `∫|f|²` with the P1 mass matrix.
fn mass_norm_sqr(result: &EigenResult) -> f64 {
    let mesh = result.mesh.as_ref();
    let nodes = mesh.nodes();
    let f = &result.eigenfunction;
    mesh.triangles()
        .iter()
        .map(|t| {
            let area = crate::mesh::triangle_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
            let mut s = 0.0;
            for u in 0..3 {
                for v in 0..3 {
                    let w = if u == v { area / 6.0 } else { area / 12.0 };
                    s += w * (f[t[u]].conj() * f[t[v]]).re;
                }
            }
            s
        })
        .sum()
}

fn trapezoid(r: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (0..r.len() - 1)
        .map(|k| 0.5 * (f(k) + f(k + 1)) * (r[k + 1] - r[k]))
        .sum()
}

/// Replaces non-finite entries by linear interpolation between finite neighbours.
fn fill_gaps(v: &mut [f64]) {
    let n = v.len();
    let mut k = 0;
    while k < n {
        if v[k].is_finite() {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && !v[k].is_finite() {
            k += 1;
        }
        let left = start.checked_sub(1).map(|i| (i, v[i]));
        let right = (k < n).then(|| (k, v[k]));
        for i in start..k {
            v[i] = match (left, right) {
                (Some((i0, a)), Some((i1, b))) => a + (b - a) * (i - i0) as f64 / (i1 - i0) as f64,
                (Some((_, a)), None) => a,
                (None, Some((_, b))) => b,
                (None, None) => 0.0,
            };
        }
    }
}

impl RearrangementProfile {
    pub fn levels(&self) -> usize {
        self.r.len() - 1
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.levels() as f64
    }

    /// Induced potential as a radial profile.
    pub fn potential(&self) -> PotentialProfile {
        PotentialProfile {
            r_max: self.r_max,
            samples: self.a.clone(),
        }
    }

    /// Largest `(a − Br/2)⁺` and `(−a)⁺` over nodes, relative to `BR/2`.
    pub fn sandwich_violation(&self) -> f64 {
        if self.b == 0.0 {
            return self.a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        let scale = 0.5 * self.b * self.r_max;
        self.a
            .iter()
            .zip(&self.r)
            .map(|(&a, &r)| ((a - 0.5 * self.b * r).max(0.0)).max(-a) / scale)
            .fold(0.0, f64::max)
    }

    /// Largest relative excess of `a` over `Br/2 (1 + c A²)⁻²` with `c` the level's own isoperimetric constant.
    pub fn refined_sandwich_violation(&self) -> f64 {
        if self.b == 0.0 {
            return 0.0;
        }
        let scale = 0.5 * self.b * self.r_max;
        (1..=self.levels())
            .filter_map(|k| {
                let c = self.iso_constant[k]?;
                let cap = 0.5 * self.b * self.r[k] / (1.0 + c * self.level_asym[k].powi(2)).powi(2);
                Some((self.a[k] - cap).max(0.0) / scale)
            })
            .fold(0.0, f64::max)
    }

    /// `Σ (q′ + aq)² w(A) r Δr` over interval midpoints.
    fn weighted_energy(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let dr = self.dr();
        (0..self.levels())
            .map(|k| {
                let qp = (self.q[k + 1] - self.q[k]) / dr;
                let qm = 0.5 * (self.q[k] + self.q[k + 1]);
                let am = 0.5 * (self.a[k] + self.a[k + 1]);
                let asym = 0.5 * (self.level_asym[k] + self.level_asym[k + 1]);
                let rm = 0.5 * (self.r[k] + self.r[k + 1]);
                (qp + am * qm).powi(2) * weight(asym) * rm * dr
            })
            .sum()
    }

    /// Layer-cake norm `2π∫q² r dr` on the grid; one by construction.
    pub fn norm(&self) -> f64 {
        2.0 * PI * trapezoid(&self.r, |k| self.q[k] * self.q[k] * self.r[k])
    }

    /// Rearranged asymmetry at radius `r`, linearly interpolated.
    pub fn asym_at(&self, r: f64) -> f64 {
        interpolate(&self.r, &self.level_asym, r)
    }

    /// `q` at radius `r`, linearly interpolated.
    pub fn q_at(&self, r: f64) -> f64 {
        interpolate(&self.r, &self.q, r)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "q", "a", "F", "level_asym", "topology_flag"])?;
        for k in 0..=self.levels() {
            w.write_record([
                format!("{:.12e}", self.r[k]),
                format!("{:.12e}", self.q[k]),
                format!("{:.12e}", self.a[k]),
                format!("{:.12e}", self.f_area[k]),
                format!("{:.12e}", self.level_asym[k]),
                self.topology[k].as_str().to_string(),
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

fn interpolate(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len() - 1;
    let dx = x[n] / n as f64;
    let s = (t / dx).clamp(0.0, n as f64);
    let i = (s.floor() as usize).min(n - 1);
    let f = s - i as f64;
    y[i] * (1.0 - f) + y[i + 1] * f
}

/// `B + 2π∫(q′ + aq)² (1 + cA²)² r dr`; with `c = 0` the plain rearrangement bound.
pub fn rearrangement_lower_bound(profile: &RearrangementProfile, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!("c must be nonnegative, got {c}")));
    }
    Ok(profile.b + 2.0 * PI * profile.weighted_energy(|asym| (1.0 + c * asym * asym).powi(2)))
}

/// The two asymmetry-weighted lower bounds and their coefficients.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorollaryBounds {
    pub lambda_disk: f64,
    /// `∫(q′ + aq)² A² r dr`.
    pub remainder_rearrange: f64,
    /// `B ∫p_a|p_a′| e^{−Br²/2} A² r² dr / ∫p_a² e^{−Br²/2} r dr`.
    pub remainder_compare: f64,
    pub c: f64,
    pub bound_rearrange: f64,
    pub bound_compare: f64,
}

impl CorollaryBounds {
    /// Largest `c` with `λ ≥ λ_disk + c · remainder`, for each bound; `None` when unbounded.
    pub fn max_feasible_c(&self, lambda: f64) -> (Option<f64>, Option<f64>) {
        let gap = lambda - self.lambda_disk;
        let cap = |rem: f64| (rem > 0.0).then(|| gap / rem);
        (cap(self.remainder_rearrange), cap(self.remainder_compare))
    }
}

/// Evaluates both bounds; `state` is the radial minimizer for the induced potential.
pub fn corollary_bounds(profile: &RearrangementProfile, state: &RadialState, c: f64) -> Result<CorollaryBounds> {
    let lambda_disk = lambda_disk(profile.b, profile.r_max)?.value;
    corollary_bounds_with(profile, state, c, lambda_disk)
}

/// [`corollary_bounds`] with a precomputed `λ(B, D_R)`.
pub fn corollary_bounds_with(
    profile: &RearrangementProfile,
    state: &RadialState,
    c: f64,
    lambda_disk: f64,
) -> Result<CorollaryBounds> {
    if (state.grid.r_max - profile.r_max).abs() > 1e-9 * profile.r_max {
        return Err(Error::InvalidGrid("radial state and profile disagree on R".into()));
    }
    let remainder_rearrange = profile.weighted_energy(|asym| asym * asym);
    let grid = state.grid;
    let n = grid.n;
    let dr = grid.dr();
    let b = profile.b;
    let reference = -0.5 * b * (0.5 * grid.r_max).powi(2);
    let weight = |r: f64| (-0.5 * b * r * r - reference).exp();
    let mut num = 0.0;
    for k in 0..n {
        let rm = (k as f64 + 0.5) * dr;
        let pm = 0.5 * (state.p[k] + state.p[k + 1]);
        let asym = profile.asym_at(rm);
        num += pm * (state.dp[k] / dr) * weight(rm) * asym * asym * rm * rm * dr;
    }
    let den: f64 = (0..=n)
        .map(|i| {
            let r = grid.r(i);
            let w = if i == 0 { dr * dr / 8.0 } else if i == n { 0.5 * r * dr } else { r * dr };
            state.p[i] * state.p[i] * weight(r) * w
        })
        .sum();
    let remainder_compare = b * num / den;
    Ok(CorollaryBounds {
        lambda_disk,
        remainder_rearrange,
        remainder_compare,
        c,
        bound_rearrange: lambda_disk + c * remainder_rearrange,
        bound_compare: lambda_disk + c * remainder_compare,
    })
}

/// Threshold `s` with `|{q > s}| = |Ω|(1 − A/2)` and the area residual.
pub fn threshold_s(profile: &RearrangementProfile, asym_domain: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&asym_domain) {
        return Err(Error::InvalidArgument(format!("asymmetry must lie in [0, 1], got {asym_domain}")));
    }
    let target = profile.domain_area * (1.0 - 0.5 * asym_domain);
    // |{q > s}| = π r(s)², with r(s) the inverse of the non-increasing q.
    let area_above = |s: f64| {
        let (mut lo, mut hi) = (0.0, profile.r_max);
        if profile.q_at(0.0) <= s {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if profile.q_at(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        PI * lo * lo
    };
    if asym_domain == 0.0 {
        return Ok((0.0, (area_above(0.0) - target).abs()));
    }
    let (mut lo, mut hi) = (0.0, profile.q[0]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area_above(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * profile.q[0] {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    Ok((s, (area_above(s) - target).abs()))
}

/// `inf A²({|f| > q(r)})` over nodes with `R(1 − ε) < r < R`.
pub fn annulus_asym_inf(profile: &RearrangementProfile, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("ε must lie in (0, 1], got {eps}")));
    }
    let inner = profile.r_max * (1.0 - eps);
    profile
        .r
        .iter()
        .zip(&profile.level_asym)
        .filter(|(&r, _)| r > inner && r < profile.r_max)
        .map(|(_, a)| a * a)
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidArgument(format!("no level nodes inside the annulus for ε = {eps}")))
}
