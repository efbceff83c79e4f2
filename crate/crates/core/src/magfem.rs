//! P1 finite elements for the magnetic Dirichlet form `∫|(−i∇ − α)f|²`.
//!
//! The vector potential is the symmetric gauge `α = (B/2)(−(y − c_y), x − c_x)`
//! centered at the mesh centroid `c`. Entries follow the convention
//! `f*Kf = ∫|(−i∇ − α)f|²`, so
//! `K_uv = ∫ ∇φ_u·∇φ_v + i(φ_u α·∇φ_v − φ_v α·∇φ_u) + |α|² φ_u φ_v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::eigsolve::{
    dot, rayleigh_and_residual, smallest_eigenpair_with, SolveOptions, SparseHermitian, TripletBuilder, C64,
};
use crate::error::{Error, Result};
use crate::geom::{PlanarDomain, Point};
use crate::mesh::{mesh_star_domain, triangle_area, MeshLocator, TriMesh};

/// Six-point rule exact for polynomials of degree 4 on a triangle:
/// barycentric points and weights summing to one.
const QUADRATURE: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const B: f64 = 0.091_576_213_509_771;
    const WA: f64 = 0.223_381_589_678_011;
    const WB: f64 = 0.109_951_743_655_322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

/// Assembled stiffness and mass over the interior nodes of a mesh.
#[derive(Debug, Clone)]
pub struct MagneticForm {
    pub stiffness: SparseHermitian,
    pub mass: SparseHermitian,
    pub b: f64,
    pub gauge_center: Point,
    /// Mesh node of each unknown.
    pub dof_nodes: Vec<usize>,
    /// Unknown of each mesh node, `None` on the boundary.
    pub node_dofs: Vec<Option<usize>>,
    pub mesh: Arc<TriMesh>,
}

/// Principal eigenpair on a mesh.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda: f64,
    /// Nodal values on every mesh node, zero on the boundary, unit L² norm.
    pub eigenfunction: Vec<C64>,
    /// `‖Kf − λMf‖ / (|λ| ‖Mf‖)`.
    pub residual: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub shift_history: Vec<f64>,
    pub b: f64,
    pub mesh: Arc<TriMesh>,
}

impl EigenResult {
    /// Nodal values of `|f|`.
    pub fn modulus(&self) -> Vec<f64> {
        self.eigenfunction.iter().map(|v| v.norm()).collect()
    }
}

fn local_matrices(p: [Point; 3], b: f64, c: Point) -> Result<([[C64; 3]; 3], [[f64; 3]; 3], f64)> {
    let area = triangle_area(p[0], p[1], p[2]);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle { index: usize::MAX, area });
    }
    let mut grad = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let e = p[(k + 2) % 3];
        grad[k] = [(a[1] - e[1]) / (2.0 * area), (e[0] - a[0]) / (2.0 * area)];
    }
    let mut kl = [[C64::new(0.0, 0.0); 3]; 3];
    for u in 0..3 {
        for v in 0..3 {
            kl[u][v].re = area * (grad[u][0] * grad[v][0] + grad[u][1] * grad[v][1]);
        }
    }
    for (lam, w) in QUADRATURE {
        let x = [
            lam[0] * p[0][0] + lam[1] * p[1][0] + lam[2] * p[2][0],
            lam[0] * p[0][1] + lam[1] * p[1][1] + lam[2] * p[2][1],
        ];
        let alpha = [-0.5 * b * (x[1] - c[1]), 0.5 * b * (x[0] - c[0])];
        let a2 = alpha[0] * alpha[0] + alpha[1] * alpha[1];
        let adg: Vec<f64> = grad.iter().map(|g| alpha[0] * g[0] + alpha[1] * g[1]).collect();
        let wa = w * area;
        for u in 0..3 {
            for v in 0..3 {
                kl[u][v].re += wa * a2 * lam[u] * lam[v];
                kl[u][v].im += wa * (lam[u] * adg[v] - lam[v] * adg[u]);
            }
        }
    }
    // Exact Hermitian symmetry.
    for u in 0..3 {
        kl[u][u].im = 0.0;
        for v in 0..u {
            kl[u][v] = kl[v][u].conj();
        }
    }
    let mut ml = [[area / 12.0; 3]; 3];
    for (u, row) in ml.iter_mut().enumerate() {
        row[u] = area / 6.0;
    }
    Ok((kl, ml, area))
}

/// Assembles the magnetic stiffness and mass matrices with Dirichlet nodes removed.
pub fn assemble(mesh: &TriMesh, b: f64) -> Result<MagneticForm> {
    assemble_shared(Arc::new(mesh.clone()), b)
}

pub fn assemble_shared(mesh: Arc<TriMesh>, b: f64) -> Result<MagneticForm> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("field strength must be finite and nonnegative, got {b}")));
    }
    let mut node_dofs = vec![None; mesh.num_nodes()];
    let mut dof_nodes = Vec::new();
    for (i, &on_boundary) in mesh.boundary_flags().iter().enumerate() {
        if !on_boundary {
            node_dofs[i] = Some(dof_nodes.len());
            dof_nodes.push(i);
        }
    }
    if dof_nodes.is_empty() {
        return Err(Error::InvalidMesh("mesh has no interior nodes".into()));
    }
    let c = mesh.centroid();
    let nodes = mesh.nodes();
    let locals: Vec<Result<_>> = mesh
        .triangles()
        .par_iter()
        .enumerate()
        .map(|(t, tri)| {
            local_matrices(tri.map(|i| nodes[i]), b, c).map_err(|e| match e {
                Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { index: t, area },
                other => other,
            })
        })
        .collect();
    let n = dof_nodes.len();
    let mut kb = TripletBuilder::with_capacity(n, 9 * mesh.num_triangles());
    let mut mb = TripletBuilder::with_capacity(n, 9 * mesh.num_triangles());
    for (tri, local) in mesh.triangles().iter().zip(locals) {
        let (kl, ml, _) = local?;
        for u in 0..3 {
            let Some(du) = node_dofs[tri[u]] else { continue };
            for v in 0..3 {
                let Some(dv) = node_dofs[tri[v]] else { continue };
                kb.push(du, dv, kl[u][v]);
                mb.push_real(du, dv, ml[u][v]);
            }
        }
    }
    let stiffness = kb.build()?;
    let mass = mb.build()?;
    let defect = stiffness.hermitian_defect();
    if defect > 1e-13 * stiffness.max_abs() {
        return Err(Error::InvalidArgument(format!("assembled stiffness is not Hermitian (defect {defect:e})")));
    }
    Ok(MagneticForm {
        stiffness,
        mass,
        b,
        gauge_center: c,
        dof_nodes,
        node_dofs,
        mesh,
    })
}

impl MagneticForm {
    pub fn dofs(&self) -> usize {
        self.dof_nodes.len()
    }

    /// Restriction of a nodal vector to the unknowns.
    pub fn restrict(&self, nodal: &[C64]) -> Result<Vec<C64>> {
        if nodal.len() != self.node_dofs.len() {
            return Err(Error::InvalidArgument(format!(
                "vector has length {} for {} nodes",
                nodal.len(),
                self.node_dofs.len()
            )));
        }
        Ok(self.dof_nodes.iter().map(|&i| nodal[i]).collect())
    }

    /// Extension by zero to every mesh node.
    pub fn extend(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.node_dofs.len()];
        for (&i, &v) in self.dof_nodes.iter().zip(x) {
            out[i] = v;
        }
        out
    }
}

/// Default eigensolver settings for magnetic problems: Landau floor `B`.
pub fn solve_options(form: &MagneticForm, tol: f64) -> SolveOptions {
    SolveOptions {
        tol,
        floor: Some(form.b),
        ..SolveOptions::default()
    }
}

/// Smallest eigenvalue of `Kf = λMf` and its eigenfunction.
pub fn principal_eigenpair(form: &MagneticForm, tol: f64) -> Result<EigenResult> {
    principal_eigenpair_with(form, &solve_options(form, tol))
}

pub fn principal_eigenpair_with(form: &MagneticForm, opts: &SolveOptions) -> Result<EigenResult> {
    let report = smallest_eigenpair_with(&form.stiffness, &form.mass, opts)?;
    Ok(EigenResult {
        lambda: report.eigenvalue,
        eigenfunction: form.extend(&report.eigenvector),
        residual: report.residual,
        iterations: report.iterations,
        inner_iterations: report.inner_iterations,
        shift_history: report.shift_history,
        b: form.b,
        mesh: form.mesh.clone(),
    })
}

/// `f*Kf / f*Mf` for a nodal vector; boundary values are ignored.
pub fn rayleigh_quotient(form: &MagneticForm, nodal: &[C64]) -> Result<f64> {
    let x = form.restrict(nodal)?;
    let mx = form.mass.mul(&x);
    let den = dot(&x, &mx).re;
    if !(den > 0.0) {
        return Err(Error::InvalidArgument("vector vanishes on the interior nodes".into()));
    }
    Ok(form.stiffness.form(&x, &x).re / den)
}

/// Relative residual of a nodal vector as an approximate eigenvector.
pub fn residual(form: &MagneticForm, nodal: &[C64]) -> Result<f64> {
    let x = form.restrict(nodal)?;
    Ok(rayleigh_and_residual(&form.stiffness, &form.mass, &x)?.1)
}

/// `∫|f|²` with the consistent mass matrix.
pub fn mass_norm_sqr(form: &MagneticForm, nodal: &[C64]) -> Result<f64> {
    let x = form.restrict(nodal)?;
    Ok(form.mass.form(&x, &x).re)
}

/// Largest relative spread `(max − min)/max` of `|f|` over circles concentric
/// with a disk domain, for radii up to 0.9 of the disk radius.
pub fn angular_variation(result: &EigenResult) -> Result<f64> {
    let domain = result
        .mesh
        .domain()
        .ok_or_else(|| Error::Inapplicable("mesh carries no domain".into()))?;
    let (center, radius) = disk_of(domain)?;
    let modulus = result.modulus();
    let locator = MeshLocator::new(&result.mesh);
    let rings = 12;
    let samples = 96;
    let mut worst: f64 = 0.0;
    for j in 1..=rings {
        let r = 0.9 * radius * j as f64 / rings as f64;
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for s in 0..samples {
            let t = TAU * (s as f64 + 0.5) / samples as f64;
            let p = [center[0] + r * t.cos(), center[1] + r * t.sin()];
            let v = locator
                .interpolate(&modulus, p)
                .ok_or_else(|| Error::InvalidMesh(format!("sample point {p:?} outside the mesh")))?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi > 0.0 {
            worst = worst.max((hi - lo) / hi);
        }
    }
    Ok(worst)
}

fn disk_of(domain: &PlanarDomain) -> Result<(Point, f64)> {
    let star = domain.star_descriptor();
    match (domain.shape(), star) {
        (Some(shape), Some(star)) if shape.is_disk() => Ok((star.center, shape.radius_at(0.0))),
        (None, Some(star)) if domain.is_sampled_disk() => Ok((star.center, star.radii[0])),
        _ => Err(Error::Inapplicable(format!(
            "angular variation needs a disk, `{}` is not one",
            domain.label()
        ))),
    }
}

/// Richardson extrapolation for second-order convergence under halving of `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub error_bar: f64,
    /// `log₂((λ₀ − λ₁)/(λ₁ − λ₂))` from the last three levels.
    pub observed_order: Option<f64>,
}

/// Combines per-level values `λ_h, λ_{h/2}, …` assuming an `h²` error.
pub fn richardson(values: &[f64]) -> Result<Extrapolation> {
    let n = values.len();
    match n {
        0 => Err(Error::InvalidArgument("no refinement levels".into())),
        1 => Ok(Extrapolation {
            value: values[0],
            error_bar: f64::INFINITY,
            observed_order: None,
        }),
        2 => {
            let e = (4.0 * values[1] - values[0]) / 3.0;
            Ok(Extrapolation {
                value: e,
                error_bar: (e - values[1]).abs(),
                observed_order: None,
            })
        }
        _ => {
            let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
            let e1 = (4.0 * b - a) / 3.0;
            let e2 = (4.0 * c - b) / 3.0;
            let ratio = (a - b) / (b - c);
            Ok(Extrapolation {
                value: e2,
                error_bar: (e2 - e1).abs(),
                observed_order: if ratio > 0.0 && ratio.is_finite() {
                    Some(ratio.log2())
                } else {
                    None
                },
            })
        }
    }
}

/// One level of a refinement sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelValue {
    pub h: f64,
    pub nodes: usize,
    pub dofs: usize,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Eigenvalues on nested refinements together with their extrapolation.
#[derive(Debug, Clone)]
pub struct RefinedEigenvalue {
    pub levels: Vec<LevelValue>,
    pub extrapolation: Extrapolation,
    /// Result on the finest mesh.
    pub finest: EigenResult,
}

/// Solves on `mesh`, then on `levels − 1` successive uniform refinements.
pub fn refined_eigenvalue(mesh: &TriMesh, b: f64, levels: usize, tol: f64) -> Result<RefinedEigenvalue> {
    if levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let mut current = Arc::new(mesh.clone());
    let mut out = Vec::with_capacity(levels);
    let mut finest = None;
    for level in 0..levels {
        if level > 0 {
            current = Arc::new(current.refine()?);
        }
        let form = assemble_shared(current.clone(), b)?;
        let res = principal_eigenpair(&form, tol)?;
        out.push(LevelValue {
            h: current.h(),
            nodes: current.num_nodes(),
            dofs: form.dofs(),
            lambda: res.lambda,
            residual: res.residual,
            iterations: res.iterations,
        });
        finest = Some(res);
    }
    let values: Vec<f64> = out.iter().map(|l| l.lambda).collect();
    Ok(RefinedEigenvalue {
        extrapolation: richardson(&values)?,
        levels: out,
        finest: finest.expect("at least one level"),
    })
}

/// Meshes a star-shaped domain at `h` and runs [`refined_eigenvalue`].
pub fn domain_eigenvalue(domain: &PlanarDomain, b: f64, h: f64, levels: usize, tol: f64) -> Result<RefinedEigenvalue> {
    refined_eigenvalue(&mesh_star_domain(domain, h)?, b, levels, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::StarShape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const J01_SQ: f64 = 5.783_185_962_946_784;

    fn disk(r: f64) -> PlanarDomain {
        PlanarDomain::from_shape("disk", StarShape::Disk { radius: r }, [0.0, 0.0], 256).unwrap()
    }

    #[test]
    fn reference_triangle_stiffness() {
        let (k, m, area) = local_matrices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.0, [0.0, 0.0]).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for u in 0..3 {
            for v in 0..3 {
                assert!((k[u][v].re - want[u][v]).abs() < 1e-15);
                assert_eq!(k[u][v].im, 0.0);
            }
        }
        assert_eq!(area, 0.5);
        assert!((m.iter().flatten().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadrature_is_exact_for_quartics() {
        // ∫_T x^a y^b over the reference triangle is a! b! / (a + b + 2)!.
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q: f64 = QUADRATURE
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn zero_field_is_real_laplacian() {
        let m = mesh_star_domain(&disk(1.0), 0.2).unwrap();
        let form = assemble(&m, 0.0).unwrap();
        for i in 0..form.dofs() {
            let (_, vals) = form.stiffness.row(i);
            assert!(vals.iter().all(|v| v.im.abs() <= 1e-15));
        }
    }

    #[test]
    fn hermitian_within_tolerance() {
        let d = PlanarDomain::from_shape("e", StarShape::Ellipse { a: 1.5, b: 0.8 }, [2.0, -1.0], 256).unwrap();
        let form = assemble(&mesh_star_domain(&d, 0.15).unwrap(), 3.0).unwrap();
        assert!(form.stiffness.hermitian_defect() <= 1e-13 * form.stiffness.max_abs());
    }

    #[test]
    fn landau_floor_holds_for_random_vectors() {
        let form = assemble(&mesh_star_domain(&disk(1.0), 0.15).unwrap(), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let res = principal_eigenpair(&form, 1e-10).unwrap();
        assert!(res.lambda >= 1.0);
        for _ in 0..20 {
            let v: Vec<C64> = (0..form.mesh.num_nodes())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let q = rayleigh_quotient(&form, &v).unwrap();
            assert!(q >= 1.0 && q >= res.lambda);
        }
    }

    #[test]
    fn eigenfunction_is_normalized_and_consistent() {
        let form = assemble(&mesh_star_domain(&disk(1.0), 0.15).unwrap(), 2.0).unwrap();
        let res = principal_eigenpair(&form, 1e-10).unwrap();
        assert!((mass_norm_sqr(&form, &res.eigenfunction).unwrap() - 1.0).abs() < 1e-10);
        let q = rayleigh_quotient(&form, &res.eigenfunction).unwrap();
        assert!((q - res.lambda).abs() <= 1e-12 * res.lambda);
        assert!(res.residual <= 1e-10);
    }

    #[test]
    fn disk_bessel_limit() {
        let r = domain_eigenvalue(&disk(1.0), 0.0, 0.125, 3, 1e-10).unwrap();
        let err = (r.extrapolation.value - J01_SQ).abs() / J01_SQ;
        assert!(err < 1e-3, "extrapolated {} ({err})", r.extrapolation.value);
        let order = r.extrapolation.observed_order.unwrap();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
        // Conforming elements approach from above.
        assert!(r.levels.windows(2).all(|w| w[0].lambda > w[1].lambda && w[1].lambda > J01_SQ));
    }

    #[test]
    fn unit_square() {
        let thetas: Vec<f64> = (0..4).map(|k| std::f64::consts::FRAC_PI_4 + k as f64 * std::f64::consts::FRAC_PI_2).collect();
        let star = crate::geom::StarDescriptor {
            center: [0.5, 0.5],
            thetas,
            radii: vec![0.5f64.sqrt(); 4],
        };
        let d = PlanarDomain::star("square", star).unwrap();
        let r = domain_eigenvalue(&d, 0.0, 0.06, 3, 1e-10).unwrap();
        let target = 2.0 * std::f64::consts::PI.powi(2);
        assert!((r.extrapolation.value - target).abs() / target < 2e-3, "{}", r.extrapolation.value);
    }

    #[test]
    fn injected_bessel_profile() {
        let m = mesh_star_domain(&disk(1.0), 0.05).unwrap();
        let form = assemble(&m, 0.0).unwrap();
        let j = J01_SQ.sqrt();
        // J0 by its power series, accurate on [0, j].
        let j0 = |x: f64| {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..40 {
                term *= -(x * x) / (4.0 * (k * k) as f64);
                sum += term;
            }
            sum
        };
        let v: Vec<C64> = m.nodes().iter().map(|p| C64::new(j0(j * p[0].hypot(p[1]).min(1.0)), 0.0)).collect();
        let q = rayleigh_quotient(&form, &v).unwrap();
        assert!((q - J01_SQ).abs() / J01_SQ < 0.01, "{q}");
    }

    #[test]
    fn angular_variation_small_on_disk_and_inapplicable_elsewhere() {
        for b in [0.0, 1.0, 5.0] {
            let form = assemble(&mesh_star_domain(&disk(1.0), 0.06).unwrap(), b).unwrap();
            let res = principal_eigenpair(&form, 1e-10).unwrap();
            let var = angular_variation(&res).unwrap();
            assert!(var <= if b == 0.0 { 0.01 } else { 0.02 }, "B = {b}: {var}");
        }
        let e = PlanarDomain::from_shape("e", StarShape::Ellipse { a: 2.0, b: 0.5 }, [0.0, 0.0], 256).unwrap();
        let form = assemble(&mesh_star_domain(&e, 0.2).unwrap(), 1.0).unwrap();
        let res = principal_eigenpair(&form, 1e-8).unwrap();
        assert!(matches!(angular_variation(&res), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn richardson_on_exact_quadratic_error() {
        let vals: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|h| 3.0 + 2.0 * h * h).collect();
        let e = richardson(&vals).unwrap();
        assert!((e.value - 3.0).abs() < 1e-14);
        assert!(e.error_bar < 1e-14);
        assert!((e.observed_order.unwrap() - 2.0).abs() < 1e-9);
    }
}
