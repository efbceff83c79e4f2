use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Hermitian,
    RealSymmetric,
}

/// Square sparse matrix in compressed row form with sorted column indices.
#[derive(Debug, Clone)]
pub struct SparseHermitian {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    symmetry: Symmetry,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: C64) {
        self.entries.push((i, j, v));
    }

    pub fn push_real(&mut self, i: usize, j: usize, v: f64) {
        self.entries.push((i, j, C64::new(v, 0.0)));
    }

    /// Builds the matrix, tagging it real-symmetric when every imaginary part is zero.
    pub fn build(mut self) -> Result<SparseHermitian> {
        if let Some(&(i, j, _)) = self.entries.iter().find(|e| e.0 >= self.n || e.1 >= self.n) {
            return Err(Error::InvalidArgument(format!(
                "entry ({i}, {j}) outside a {n}x{n} matrix",
                n = self.n
            )));
        }
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let symmetry = if values.iter().all(|v| v.im == 0.0) {
            Symmetry::RealSymmetric
        } else {
            Symmetry::Hermitian
        };
        Ok(SparseHermitian {
            n: self.n,
            row_ptr,
            col_idx,
            values,
            symmetry,
        })
    }
}

impl SparseHermitian {
    pub fn from_dense(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument("matrix is not square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn from_real_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| C64::new(v, 0.0)).collect())
            .collect();
        Self::from_dense(&rows)
    }

    pub fn identity(n: usize) -> Self {
        SparseHermitian {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
            symmetry: Symmetry::RealSymmetric,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|`, with structurally missing entries read as zero.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, _) = self.row(i);
            cols.iter().all(|&j| self.row(j).0.binary_search(&i).is_ok())
        })
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = C64::new(0.0, 0.0);
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `x* A y`.
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        dot(x, &self.mul(y))
    }

    /// `A + t B` over the union of both patterns.
    pub fn add_scaled(&self, t: f64, other: &SparseHermitian) -> Result<SparseHermitian> {
        if self.n != other.n {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(i, j, v);
            }
            let (cols, vals) = other.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(i, j, v * t);
            }
        }
        b.build()
    }

    /// Lower bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (cols, vals) = self.row(i);
                let mut d = 0.0;
                let mut off = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    if j == i {
                        d = v.re;
                    } else {
                        off += v.norm();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on the spectrum from Gershgorin discs.
    pub fn gershgorin_upper(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut d = vec![vec![C64::new(0.0, 0.0); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

/// `x* y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let mut b = TripletBuilder::new(2);
        b.push_real(1, 1, 2.0);
        b.push_real(0, 1, -1.0);
        b.push_real(0, 0, 1.0);
        b.push_real(0, 0, 1.0);
        b.push_real(1, 0, -1.0);
        let a = b.build().unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 0).re, 2.0);
        assert_eq!(a.symmetry(), Symmetry::RealSymmetric);
        assert_eq!(a.hermitian_defect(), 0.0);
        assert!(a.is_structurally_symmetric());
        let y = a.mul(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        assert_eq!(y, vec![C64::new(2.0, -1.0), C64::new(-1.0, 2.0)]);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let a = SparseHermitian::from_dense(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        assert!((a.hermitian_defect() - 2.0).abs() < 1e-15);
        assert_eq!(a.symmetry(), Symmetry::Hermitian);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.push_real(2, 0, 1.0);
        assert!(b.build().is_err());
    }
}
