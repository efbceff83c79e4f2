use super::sparse::{dot, norm, SparseHermitian, C64};
use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Zero-fill incomplete Cholesky factor `A ≈ L L*`, stored by rows.
#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    diag: Vec<f64>,
}

impl IncompleteCholesky {
    /// Returns `None` on a nonpositive pivot.
    pub fn new(a: &SparseHermitian) -> Option<Self> {
        let n = a.dim();
        let mut row_ptr = vec![0usize];
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let (acols, avals) = a.row(i);
            let start = cols.len();
            for (&k, &v) in acols.iter().zip(avals) {
                if k >= i {
                    break;
                }
                // l_ik = (a_ik - Σ_{j<k} l_ij conj(l_kj)) / l_kk
                let mut s = v;
                let (mut p, pe) = (start, cols.len());
                let (mut q, qe) = (row_ptr[k], row_ptr[k + 1]);
                while p < pe && q < qe {
                    match cols[p].cmp(&cols[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s -= vals[p] * vals[q].conj();
                            p += 1;
                            q += 1;
                        }
                    }
                }
                cols.push(k);
                vals.push(s / diag[k]);
            }
            let d = a.get(i, i).re - vals[start..].iter().map(|v| v.norm_sqr()).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            diag[i] = d.sqrt();
            row_ptr.push(cols.len());
        }
        Some(IncompleteCholesky {
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    /// `z = (L L*)⁻¹ r`.
    pub fn apply(&self, r: &[C64], z: &mut [C64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.diag[i];
        }
        for i in (0..n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                z[self.cols[p]] -= self.vals[p].conj() * zi;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Preconditioner {
    IncompleteCholesky(IncompleteCholesky),
    Jacobi(Vec<f64>),
    Identity,
}

impl Preconditioner {
    /// Incomplete Cholesky, falling back to Jacobi when a pivot breaks down.
    pub fn new(a: &SparseHermitian) -> Self {
        match IncompleteCholesky::new(a) {
            Some(ic) => Preconditioner::IncompleteCholesky(ic),
            None => Self::jacobi(a),
        }
    }

    pub fn jacobi(a: &SparseHermitian) -> Self {
        let d = a.diagonal();
        if d.iter().all(|v| v.re > 0.0) {
            Preconditioner::Jacobi(d.iter().map(|v| 1.0 / v.re).collect())
        } else {
            Preconditioner::Identity
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preconditioner::IncompleteCholesky(_) => "ic0",
            Preconditioner::Jacobi(_) => "jacobi",
            Preconditioner::Identity => "identity",
        }
    }

    pub fn apply(&self, r: &[C64], z: &mut [C64]) {
        match self {
            Preconditioner::IncompleteCholesky(ic) => ic.apply(r, z),
            Preconditioner::Jacobi(inv) => {
                for ((zi, ri), d) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * d;
                }
            }
            Preconditioner::Identity => z.copy_from_slice(r),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CgFailure {
    /// `p* A p ≤ 0` was met, so `A` is not positive definite.
    NegativeCurvature { iteration: usize },
    /// Iteration cap reached with the given relative residual.
    Stagnation { residual: f64 },
}

/// Preconditioned conjugate gradients for Hermitian positive definite `a`.
pub fn pcg(
    a: &SparseHermitian,
    b: &[C64],
    x0: Option<&[C64]>,
    tol: f64,
    max_iter: usize,
    precond: &Preconditioner,
) -> std::result::Result<CgOutcome, CgFailure> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![ZERO; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![ZERO; n],
    };
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.mul(&x);
        for (ri, axi) in r.iter_mut().zip(&ax) {
            *ri -= axi;
        }
    }
    let mut z = vec![ZERO; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut ap = vec![ZERO; n];
    let mut res = norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual: res,
            });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(CgFailure::NegativeCurvature { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        res = norm(&r) / bnorm;
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    if res <= tol {
        return Ok(CgOutcome {
            x,
            iterations: max_iter,
            residual: res,
        });
    }
    Err(CgFailure::Stagnation { residual: res })
}

/// Solves `A x = b` for Hermitian positive definite `A` to relative residual `tol`.
pub fn inner_solve(a: &SparseHermitian, b: &[C64], tol: f64) -> Result<Vec<C64>> {
    if b.len() != a.dim() {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has length {} for dimension {}",
            b.len(),
            a.dim()
        )));
    }
    let precond = Preconditioner::new(a);
    let cap = 10 * a.dim() + 100;
    match pcg(a, b, None, tol, cap, &precond) {
        Ok(out) => Ok(out.x),
        Err(CgFailure::NegativeCurvature { iteration }) => Err(Error::InvalidArgument(format!(
            "matrix is not positive definite (curvature test failed at iteration {iteration})"
        ))),
        Err(CgFailure::Stagnation { residual }) => Err(Error::InnerStagnation(residual)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn identity_returns_rhs() {
        let a = SparseHermitian::identity(4);
        let b = vec![c(1.0), C64::new(0.0, 2.0), c(-3.0), c(0.5)];
        let x = inner_solve(&a, &b, 1e-14).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_divides_elementwise() {
        let a = SparseHermitian::from_real_dense(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 4.0, 0.0],
            vec![0.0, 0.0, 0.5],
        ])
        .unwrap();
        let x = inner_solve(&a, &[c(1.0), c(1.0), c(1.0)], 1e-14).unwrap();
        for (xi, want) in x.iter().zip([0.5, 0.25, 2.0]) {
            assert!((xi - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn ic0_is_exact_for_tridiagonal() {
        let n = 50;
        let mut rows = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            rows[i][i] = c(2.5);
            if i + 1 < n {
                rows[i][i + 1] = C64::new(-1.0, 0.3);
                rows[i + 1][i] = C64::new(-1.0, -0.3);
            }
        }
        let a = SparseHermitian::from_dense(&rows).unwrap();
        let pre = Preconditioner::new(&a);
        assert_eq!(pre.name(), "ic0");
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let out = pcg(&a, &b, None, 1e-13, 10, &pre).unwrap();
        assert!(out.iterations <= 2);
    }

    #[test]
    fn indefinite_matrix_reports_negative_curvature() {
        let a = SparseHermitian::from_real_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let out = pcg(&a, &[c(1.0), c(1.0)], None, 1e-12, 10, &Preconditioner::Identity);
        assert!(matches!(out, Err(CgFailure::NegativeCurvature { .. })));
    }
}
