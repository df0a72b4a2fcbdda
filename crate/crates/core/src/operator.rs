//! Sparse Hermitian operators on the tensor-product phase basis.
//!
//! Operators are stored as a sum of structured terms (diagonal vectors and
//! one- or two-axis finite-difference stencils) rather than raw triplets.
//! This keeps the Hamiltonian of the full circuit applyable without ever
//! materializing its entries, while `row_entries`/`to_coo` reproduce the
//! explicit (row, col, value) form on demand for export and for dense
//! cross-checks at small dimension.

use crate::basis::ProductBasis;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::Write;

/// Finite-difference stencil along one axis: `sum_t taps[t].1 * Shift(taps[t].0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisStencil {
    pub dof: usize,
    pub taps: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Real diagonal operator.
    Diagonal(Vec<f64>),
    /// `coeff * stencil` along one axis.
    Axis { coeff: Complex64, stencil: AxisStencil },
    /// `coeff * stencil_a * stencil_b` on two distinct axes.
    AxisPair {
        coeff: Complex64,
        a: AxisStencil,
        b: AxisStencil,
    },
}

/// Hermitian operator on the product basis in structured sparse form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    shape: [usize; 4],
    strides: [usize; 4],
    periodic: [bool; 4],
    terms: Vec<Term>,
    hermitian: bool,
}

impl SparseOperator {
    pub fn new(basis: &ProductBasis, terms: Vec<Term>, hermitian: bool) -> Self {
        let op = SparseOperator {
            dim: basis.dim(),
            shape: basis.dims(),
            strides: basis.strides(),
            periodic: basis.periodic_flags(),
            terms,
            hermitian,
        };
        debug_assert!(op.terms.iter().all(|t| match t {
            Term::Diagonal(d) => d.len() == op.dim,
            Term::Axis { stencil, .. } => stencil.dof < 4,
            Term::AxisPair { a, b, .. } => a.dof < 4 && b.dof < 4 && a.dof != b.dof,
        }));
        op
    }

    pub fn diagonal(basis: &ProductBasis, diag: Vec<f64>) -> Self {
        assert_eq!(diag.len(), basis.dim());
        Self::new(basis, vec![Term::Diagonal(diag)], true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Merge the terms of `other` into `self` (same basis assumed).
    pub fn add_assign(&mut self, other: &SparseOperator) {
        assert_eq!(self.dim, other.dim);
        self.terms.extend(other.terms.iter().cloned());
        self.hermitian = self.hermitian && other.hermitian;
    }

    pub fn scaled(&self, factor: f64) -> SparseOperator {
        let mut out = self.clone();
        for t in &mut out.terms {
            match t {
                Term::Diagonal(d) => d.iter_mut().for_each(|x| *x *= factor),
                Term::Axis { coeff, .. } => *coeff *= factor,
                Term::AxisPair { coeff, .. } => *coeff *= factor,
            }
        }
        out
    }

    /// y += H x
    pub fn apply_add(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for term in &self.terms {
            match term {
                Term::Diagonal(d) => {
                    for i in 0..self.dim {
                        y[i] += d[i] * x[i];
                    }
                }
                Term::Axis { coeff, stencil } => {
                    for &(off, c) in &stencil.taps {
                        self.axis_pass(*coeff * c, stencil.dof, off, x, y);
                    }
                }
                Term::AxisPair { coeff, a, b } => {
                    let (hi, lo) = if self.strides[a.dof] > self.strides[b.dof] {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    for &(off_hi, c_hi) in &hi.taps {
                        for &(off_lo, c_lo) in &lo.taps {
                            self.pair_pass(
                                *coeff * (c_hi * c_lo),
                                hi.dof,
                                off_hi,
                                lo.dof,
                                off_lo,
                                x,
                                y,
                            );
                        }
                    }
                }
            }
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::ZERO; self.dim];
        self.apply_add(x, &mut y);
        y
    }

    /// <bra|H|ket>
    pub fn expectation(&self, bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
        let hket = self.matvec(ket);
        bra.iter().zip(hket.iter()).map(|(b, h)| b.conj() * h).sum()
    }

    fn axis_pass(&self, coeff: Complex64, dof: usize, off: i64, x: &[Complex64], y: &mut [Complex64]) {
        if coeff == Complex64::ZERO {
            return;
        }
        let n = self.shape[dof] as i64;
        let s = self.strides[dof];
        let block = n as usize * s;
        let outer = self.dim / block;
        for o in 0..outer {
            let base = o * block;
            for i in 0..n {
                let j = i + off;
                let j = if self.periodic[dof] {
                    j.rem_euclid(n)
                } else if (0..n).contains(&j) {
                    j
                } else {
                    continue;
                };
                let dst = base + i as usize * s;
                let src = base + j as usize * s;
                for k in 0..s {
                    y[dst + k] += coeff * x[src + k];
                }
            }
        }
    }

    fn pair_pass(
        &self,
        coeff: Complex64,
        dof_hi: usize,
        off_hi: i64,
        dof_lo: usize,
        off_lo: i64,
        x: &[Complex64],
        y: &mut [Complex64],
    ) {
        if coeff == Complex64::ZERO {
            return;
        }
        let n_hi = self.shape[dof_hi] as i64;
        let s_hi = self.strides[dof_hi];
        let n_lo = self.shape[dof_lo] as i64;
        let s_lo = self.strides[dof_lo];
        let block_hi = n_hi as usize * s_hi;
        let block_lo = n_lo as usize * s_lo;
        let outer = self.dim / block_hi;
        let mid = s_hi / block_lo;
        for o in 0..outer {
            for i_hi in 0..n_hi {
                let j_hi = i_hi + off_hi;
                let j_hi = if self.periodic[dof_hi] {
                    j_hi.rem_euclid(n_hi)
                } else if (0..n_hi).contains(&j_hi) {
                    j_hi
                } else {
                    continue;
                };
                let dst_hi = o * block_hi + i_hi as usize * s_hi;
                let src_hi = o * block_hi + j_hi as usize * s_hi;
                for m in 0..mid {
                    for i_lo in 0..n_lo {
                        let j_lo = i_lo + off_lo;
                        let j_lo = if self.periodic[dof_lo] {
                            j_lo.rem_euclid(n_lo)
                        } else if (0..n_lo).contains(&j_lo) {
                            j_lo
                        } else {
                            continue;
                        };
                        let dst = dst_hi + m * block_lo + i_lo as usize * s_lo;
                        let src = src_hi + m * block_lo + j_lo as usize * s_lo;
                        for k in 0..s_lo {
                            y[dst + k] += coeff * x[src + k];
                        }
                    }
                }
            }
        }
    }

    fn axis_index(&self, row: usize, dof: usize) -> i64 {
        ((row / self.strides[dof]) % self.shape[dof]) as i64
    }

    fn shifted_col(&self, row: usize, dof: usize, off: i64) -> Option<usize> {
        let n = self.shape[dof] as i64;
        let i = self.axis_index(row, dof);
        let j = i + off;
        let j = if self.periodic[dof] {
            j.rem_euclid(n)
        } else if (0..n).contains(&j) {
            j
        } else {
            return None;
        };
        Some((row as i64 + (j - i) * self.strides[dof] as i64) as usize)
    }

    /// Merged sparse entries of one row, sorted by column.
    pub fn row_entries(&self, row: usize, out: &mut Vec<(usize, Complex64)>) {
        out.clear();
        for term in &self.terms {
            match term {
                Term::Diagonal(d) => out.push((row, Complex64::from(d[row]))),
                Term::Axis { coeff, stencil } => {
                    for &(off, c) in &stencil.taps {
                        if let Some(col) = self.shifted_col(row, stencil.dof, off) {
                            out.push((col, *coeff * c));
                        }
                    }
                }
                Term::AxisPair { coeff, a, b } => {
                    for &(off_a, c_a) in &a.taps {
                        let Some(col_a) = self.shifted_col(row, a.dof, off_a) else {
                            continue;
                        };
                        for &(off_b, c_b) in &b.taps {
                            if let Some(col) = self.shifted_col(col_a, b.dof, off_b) {
                                out.push((col, *coeff * (c_a * c_b)));
                            }
                        }
                    }
                }
            }
        }
        out.sort_by_key(|&(c, _)| c);
        out.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 += next.1;
                true
            } else {
                false
            }
        });
        out.retain(|&(_, v)| v.norm_sqr() > 0.0);
    }

    /// Explicit triplets, row-major. Intended for small dimensions.
    pub fn to_coo(&self) -> Vec<(usize, usize, Complex64)> {
        let mut entries = Vec::new();
        let mut scratch = Vec::new();
        for row in 0..self.dim {
            self.row_entries(row, &mut scratch);
            for &(col, v) in &scratch {
                entries.push((row, col, v));
            }
        }
        entries
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.to_coo() {
            m[(r, c)] += v;
        }
        m
    }

    /// Largest entrywise deviation |H[r,c] - conj(H[c,r])|.
    pub fn hermiticity_defect(&self) -> f64 {
        let dense = self.to_dense();
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((dense[(r, c)] - dense[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Write the operator in MatrixMarket coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let mut scratch = Vec::new();
        let mut nnz = 0usize;
        for row in 0..self.dim {
            self.row_entries(row, &mut scratch);
            nnz += scratch.len();
        }
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, nnz)?;
        for row in 0..self.dim {
            self.row_entries(row, &mut scratch);
            for &(col, v) in &scratch {
                writeln!(w, "{} {} {:.16e} {:.16e}", row + 1, col + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Shift a state vector along one axis by a whole number of grid points.
/// Open axes fill with zero; the periodic axis wraps.
pub fn shift_state(basis: &ProductBasis, v: &[Complex64], dof: usize, points: i64) -> Vec<Complex64> {
    let dims = basis.dims();
    let strides = basis.strides();
    let periodic = basis.periodic_flags();
    let n = dims[dof] as i64;
    let s = strides[dof];
    let block = dims[dof] * s;
    let outer = basis.dim() / block;
    let mut out = vec![Complex64::ZERO; basis.dim()];
    for o in 0..outer {
        let base = o * block;
        for i in 0..n {
            // the new state at index i takes its value from index i + points
            let j = i + points;
            let j = if periodic[dof] {
                j.rem_euclid(n)
            } else if (0..n).contains(&j) {
                j
            } else {
                continue;
            };
            let dst = base + i as usize * s;
            let src = base + j as usize * s;
            out[dst..dst + s].copy_from_slice(&v[src..src + s]);
        }
    }
    out
}

/// Guard for operations that materialize entries.
pub fn check_materializable(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        return Err(Error::Domain(format!(
            "operator dimension {dim} exceeds materialization limit {limit}"
        )));
    }
    Ok(())
}
