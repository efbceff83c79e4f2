use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pcg::{pcg, CgFailure, Preconditioner};
use super::sparse::{dot, norm, SparseHermitian, C64};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Knobs for [`smallest_eigenpair_with`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative residual `‖Kx − λMx‖ / (|λ| ‖Mx‖)` required on success.
    pub tol: f64,
    /// Cap on outer Rayleigh–Ritz cycles per shift.
    pub max_iter: usize,
    pub seed: u64,
    /// Known lower bound on the smallest eigenvalue, such as the Landau level `B`.
    pub floor: Option<f64>,
    /// Explicit shift; overrides the Gershgorin and floor estimate.
    pub shift: Option<f64>,
    /// Subspace dimension per cycle.
    pub basis: usize,
    /// Shift restarts allowed before giving up.
    pub max_restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 200,
            seed: 0,
            floor: None,
            shift: None,
            basis: 8,
            max_restarts: 6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub eigenvalue: f64,
    #[serde(skip)]
    pub eigenvector: Vec<C64>,
    /// Outer cycles over all shifts.
    pub iterations: usize,
    /// Conjugate-gradient steps over all inner solves.
    pub inner_iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub shift_history: Vec<f64>,
    pub preconditioner: String,
}

/// Smallest eigenpair of `K x = λ M x` with default options.
pub fn smallest_eigenpair(
    k: &SparseHermitian,
    m: &SparseHermitian,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SolveReport> {
    smallest_eigenpair_with(
        k,
        m,
        &SolveOptions {
            tol,
            max_iter,
            seed,
            ..SolveOptions::default()
        },
    )
}

/// Shift σ used when the caller supplies none.
pub fn default_shift(k: &SparseHermitian, m: &SparseHermitian, floor: Option<f64>) -> f64 {
    let gk = k.gershgorin_lower();
    let estimate = if gk >= 0.0 {
        gk / m.gershgorin_upper()
    } else {
        let dmin = m.diagonal().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
        gk / dmin
    };
    let base = match floor {
        Some(f) => estimate.max(f),
        None => estimate,
    };
    if base >= 0.0 {
        0.9 * base
    } else {
        1.1 * base
    }
}

fn start_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let s = if rng.random_bool(0.5) { 1e-3 } else { -1e-3 };
            C64::new(1.0 + s, 0.0)
        })
        .collect()
}

struct Basis {
    v: Vec<Vec<C64>>,
    mv: Vec<Vec<C64>>,
}

impl Basis {
    fn new() -> Self {
        Basis {
            v: Vec::new(),
            mv: Vec::new(),
        }
    }

    /// M-orthonormalizes `w` against the basis (two passes) and appends it.
    fn push(&mut self, m: &SparseHermitian, mut w: Vec<C64>) -> Result<bool> {
        let mut mw = m.mul(&w);
        let before = dot(&w, &mw).re;
        if !(before > 0.0) {
            if before < 0.0 || !before.is_finite() {
                return Err(Error::IndefiniteMass(format!("x*Mx = {before:e}")));
            }
            return Ok(false);
        }
        for _ in 0..2 {
            for (vj, mvj) in self.v.iter().zip(&self.mv) {
                let c = dot(mvj, &w);
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= vi * c;
                }
            }
            mw = m.mul(&w);
        }
        let after = dot(&w, &mw).re;
        if !(after > 1e-20 * before) {
            return Ok(false);
        }
        let s = 1.0 / after.sqrt();
        w.iter_mut().for_each(|x| *x *= s);
        mw.iter_mut().for_each(|x| *x *= s);
        self.v.push(w);
        self.mv.push(mw);
        Ok(true)
    }

    fn combine(&self, y: &[C64]) -> Vec<C64> {
        let n = self.v[0].len();
        let mut x = vec![ZERO; n];
        for (vj, &c) in self.v.iter().zip(y) {
            for (xi, vi) in x.iter_mut().zip(vj) {
                *xi += vi * c;
            }
        }
        x
    }
}

enum CycleEnd {
    Converged(Vec<C64>, f64, f64),
    ShiftTooHigh,
    Exhausted(f64, f64),
}

/// Smallest eigenpair of `K x = λ M x` by shift-and-invert subspace iteration.
///
/// Each cycle builds `span{x, y, T x, T² x, …}` with `T = (K − σM)⁻¹ M`,
/// where `x`, `y` are the two lowest Ritz vectors of the previous cycle, and
/// applies Rayleigh–Ritz with `K`. Inner solves use conjugate gradients
/// preconditioned by incomplete Cholesky. A failed inner solve lowers σ.
pub fn smallest_eigenpair_with(k: &SparseHermitian, m: &SparseHermitian, opts: &SolveOptions) -> Result<SolveReport> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::InvalidArgument(format!("K is {n}x{n} but M is {0}x{0}", m.dim())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty problem".into()));
    }
    if !(opts.tol > 0.0) || opts.basis < 3 {
        return Err(Error::InvalidArgument("tolerance must be positive and basis at least 3".into()));
    }
    if let Some(i) = m.diagonal().iter().position(|d| !(d.re > 0.0)) {
        return Err(Error::IndefiniteMass(format!("diagonal entry {i} is not positive")));
    }
    let mut sigma = opts.shift.unwrap_or_else(|| default_shift(k, m, opts.floor));
    let mut report = SolveReport {
        eigenvalue: f64::NAN,
        eigenvector: Vec::new(),
        iterations: 0,
        inner_iterations: 0,
        residual: f64::INFINITY,
        residual_history: Vec::new(),
        shift_history: Vec::new(),
        preconditioner: String::new(),
    };
    let mut x = start_vector(n, opts.seed);
    let mut y: Option<Vec<C64>> = None;
    let inner_tol = (opts.tol / 10.0).max(1e-15);
    for _restart in 0..=opts.max_restarts {
        report.shift_history.push(sigma);
        let a = k.add_scaled(-sigma, m)?;
        let precond = Preconditioner::new(&a);
        report.preconditioner = precond.name().to_string();
        let cap = 4 * n + 200;
        let mut end = None;
        for _cycle in 0..opts.max_iter {
            report.iterations += 1;
            let mut basis = Basis::new();
            basis.push(m, x.clone())?;
            if let Some(y) = &y {
                basis.push(m, y.clone())?;
            }
            // Expansion starts from the residual so inexact solves only perturb the correction.
            let (rho0, _) = rayleigh_and_residual(k, m, &x)?;
            let mut rhs: Vec<C64> = k.mul(&x).iter().zip(m.mul(&x)).map(|(a, b)| a - b * rho0).collect();
            let mut failed = false;
            while basis.v.len() < opts.basis.min(n) {
                match pcg(&a, &rhs, None, inner_tol, cap, &precond) {
                    Ok(out) => {
                        report.inner_iterations += out.iterations;
                        if !basis.push(m, out.x)? {
                            break;
                        }
                        rhs = basis.mv.last().unwrap().clone();
                    }
                    Err(CgFailure::NegativeCurvature { .. }) => {
                        failed = true;
                        break;
                    }
                    Err(CgFailure::Stagnation { .. }) => {
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                end = Some(CycleEnd::ShiftTooHigh);
                break;
            }
            let kv: Vec<Vec<C64>> = basis.v.iter().map(|v| k.mul(v)).collect();
            let dim = basis.v.len();
            let h = DMatrix::<C64>::from_fn(dim, dim, |i, j| {
                let a = dot(&basis.v[i], &kv[j]);
                let b = dot(&basis.v[j], &kv[i]).conj();
                (a + b) * 0.5
            });
            let eig = h.symmetric_eigen();
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let ritz = |c: usize| -> Vec<C64> {
                let col: Vec<C64> = (0..dim).map(|i| eig.eigenvectors[(i, c)]).collect();
                basis.combine(&col)
            };
            x = ritz(order[0]);
            y = if dim > 1 { Some(ritz(order[1])) } else { None };
            let (rho, res) = rayleigh_and_residual(k, m, &x)?;
            report.residual_history.push(res);
            if rho < sigma {
                end = Some(CycleEnd::ShiftTooHigh);
                break;
            }
            if res <= opts.tol {
                end = Some(CycleEnd::Converged(x.clone(), rho, res));
                break;
            }
            end = Some(CycleEnd::Exhausted(rho, res));
        }
        match end {
            Some(CycleEnd::Converged(v, rho, res)) => {
                report.eigenvector = normalize_phase(m, v);
                report.eigenvalue = rayleigh_and_residual(k, m, &report.eigenvector)?.0;
                debug_assert!((report.eigenvalue - rho).abs() <= 1e-12 * rho.abs().max(1.0));
                report.residual = res;
                return Ok(report);
            }
            Some(CycleEnd::ShiftTooHigh) => {
                let step = (0.5 * sigma.abs()).max(1.0);
                sigma -= step;
            }
            Some(CycleEnd::Exhausted(rho, res)) => {
                return Err(Error::NoConvergence {
                    iterations: report.iterations,
                    residual: res,
                    eigenvalue: rho,
                });
            }
            None => unreachable!("at least one cycle runs"),
        }
    }
    Err(Error::InnerStagnation(report.residual_history.last().cloned().unwrap_or(f64::INFINITY)))
}

/// Rayleigh quotient `x*Kx / x*Mx` and relative residual of `x`.
pub fn rayleigh_and_residual(k: &SparseHermitian, m: &SparseHermitian, x: &[C64]) -> Result<(f64, f64)> {
    let kx = k.mul(x);
    let mx = m.mul(x);
    let xmx = dot(x, &mx).re;
    if !(xmx > 0.0) {
        return Err(Error::IndefiniteMass(format!("x*Mx = {xmx:e}")));
    }
    let rho = dot(x, &kx).re / xmx;
    let r: Vec<C64> = kx.iter().zip(&mx).map(|(a, b)| a - b * rho).collect();
    let scale = rho.abs().max(f64::MIN_POSITIVE) * norm(&mx);
    Ok((rho, norm(&r) / scale))
}

/// Scales to unit M-norm and rotates the largest entry onto the positive real axis.
fn normalize_phase(m: &SparseHermitian, mut x: Vec<C64>) -> Vec<C64> {
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, v)| if v.norm() > bv { (i, v.norm()) } else { (bi, bv) });
    let phase = x[imax].conj() / x[imax].norm();
    let s = dot(&x, &m.mul(&x)).re.sqrt();
    x.iter_mut().for_each(|v| *v = *v * phase / s);
    x
}
