//! Dense complex matrix kernel and the `a`-centralizer decomposition.
//!
//! Everything downstream works with small (`n <= 8`) dense matrices over
//! `Complex64`.  The module provides the generator type `a = diag(i a_1,
//! ..., i a_n)`, the split of `gl(n, C)` into `a`-diagonal and
//! `a`-off-diagonal parts, the inverse of `ad(a)` on the off-diagonal part,
//! Hermitian projectors built from column bases, and the minimal polynomial
//! of `a` with deduplicated roots.

use crate::tol;
use crate::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Dimension cap: the constructions in this crate need `n <= 4`; dense
/// `O(n^3)` kernels stay negligible up to 8.
pub const MAX_DIM: usize = 8;

pub type C64 = Complex64;

/// Dense row-major complex matrix, possibly rectangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nr = rows.len();
        let nc = if nr > 0 { rows[0].len() } else { 0 };
        let mut m = Self::zeros(nr, nc);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), nc, "ragged rows");
            for (c, v) in row.iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(v: &[C64]) -> Self {
        Self::from_fn(v.len(), 1, |r, _| v[r])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * s)
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude (the max-entry norm used by all residuals).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from the Hermitian condition `m* = m`.
    pub fn hermitian_defect(&self) -> f64 {
        self.adjoint().max_abs_diff(self)
    }

    /// Deviation from skew-Hermitian `m* = -m`.
    pub fn skew_defect(&self) -> f64 {
        self.adjoint().max_abs_diff(&self.neg())
    }

    fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }

    /// Solve `self * X = rhs` by partial-pivot Gaussian elimination.
    /// Also returns a cheap condition estimate `max|pivot| / min|pivot|`.
    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
        assert!(self.is_square(), "solve needs a square matrix");
        assert_eq!(self.rows, rhs.rows, "dimension mismatch");
        let n = self.rows;
        let mut a = self.clone();
        let mut x = rhs.clone();
        let mut piv_max: f64 = 0.0;
        let mut piv_min = f64::INFINITY;
        for k in 0..n {
            let (mut best, mut best_val) = (k, a[(k, k)].norm());
            for r in k + 1..n {
                let v = a[(r, k)].norm();
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            if best_val == 0.0 {
                return Err(Error::SingularSystem("gaussian elimination"));
            }
            piv_max = piv_max.max(best_val);
            piv_min = piv_min.min(best_val);
            if best != k {
                for c in 0..n {
                    a.data.swap(k * n + c, best * n + c);
                }
                for c in 0..x.cols {
                    x.data.swap(k * x.cols + c, best * x.cols + c);
                }
            }
            let inv = C64::new(1.0, 0.0) / a[(k, k)];
            for r in k + 1..n {
                let f = a[(r, k)] * inv;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for c in k..n {
                    let v = a[(k, c)];
                    a[(r, c)] -= f * v;
                }
                for c in 0..x.cols {
                    let v = x[(k, c)];
                    x[(r, c)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            let inv = C64::new(1.0, 0.0) / a[(k, k)];
            for c in 0..x.cols {
                let mut s = x[(k, c)];
                for m in k + 1..n {
                    s -= a[(k, m)] * x[(m, c)];
                }
                x[(k, c)] = s * inv;
            }
        }
        Ok((x, piv_max / piv_min))
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        let (inv, _) = self.solve(&ComplexMatrix::identity(self.rows))?;
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl<'b> Add<&'b ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'b ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)] + rhs[(r, c)])
    }
}

impl<'b> Sub<&'b ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'b ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)] - rhs[(r, c)])
    }
}

impl Add<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl<'b> Mul<&'b ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'b ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let v = self[(r, k)];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += v * rhs[(k, c)];
                }
            }
        }
        out
    }
}

/// `[x, y] = xy - yx`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    &(x * y) - &(y * x)
}

/// The fixed diagonal generator `a = diag(i a_1, ..., i a_n)` of the
/// hierarchy.  `a` is skew-Hermitian by construction; `a` is regular iff the
/// `a_k` are pairwise distinct under the dedup tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGenerator {
    imag: Vec<f64>,
}

impl DiagonalGenerator {
    pub fn new(imag_parts: Vec<f64>) -> Result<Self> {
        let n = imag_parts.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(Error::Invalid(format!(
                "generator dimension {n} outside supported range 2..={MAX_DIM}"
            )));
        }
        if !imag_parts.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("generator entries must be finite".into()));
        }
        Ok(Self { imag: imag_parts })
    }

    pub fn n(&self) -> usize {
        self.imag.len()
    }

    pub fn imag_parts(&self) -> &[f64] {
        &self.imag
    }

    /// Diagonal entry `i a_k`.
    pub fn entry(&self, k: usize) -> C64 {
        C64::new(0.0, self.imag[k])
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let n = self.n();
        ComplexMatrix::from_fn(n, n, |r, c| {
            if r == c {
                self.entry(r)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// True iff entries `j` and `k` coincide under the dedup tolerance.
    pub fn same_class(&self, j: usize, k: usize) -> bool {
        (self.imag[j] - self.imag[k]).abs() <= tol::dedup_tol(self.imag[j], self.imag[k])
    }

    pub fn regular(&self) -> bool {
        let n = self.n();
        for j in 0..n {
            for k in j + 1..n {
                if self.same_class(j, k) {
                    return false;
                }
            }
        }
        true
    }

    /// Scale all entries by `r` (used by the dilation action).
    pub fn scaled(&self, r: f64) -> Self {
        Self {
            imag: self.imag.iter().map(|v| v * r).collect(),
        }
    }
}

/// Hermitian idempotent with a recorded rank.
#[derive(Debug, Clone)]
pub struct HermitianProjector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl HermitianProjector {
    /// Validate and wrap a projector candidate.
    pub fn new(matrix: ComplexMatrix, rank: usize) -> Result<Self> {
        let herm = matrix.hermitian_defect();
        let idem = (&matrix * &matrix).max_abs_diff(&matrix);
        let tr = matrix.trace();
        if herm > tol::TAU_ALG || idem > tol::TAU_ALG {
            return Err(Error::Invalid(format!(
                "not a Hermitian projector: |pi*-pi| = {herm:.3e}, |pi^2-pi| = {idem:.3e}"
            )));
        }
        if (tr.re - rank as f64).abs() > 1e-6 || tr.im.abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "trace {tr} does not match rank {rank}"
            )));
        }
        Ok(Self { matrix, rank })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    /// `I - pi`.
    pub fn complement(&self) -> ComplexMatrix {
        &ComplexMatrix::identity(self.n()) - &self.matrix
    }

    pub fn is_real(&self) -> bool {
        self.matrix
            .data()
            .iter()
            .all(|z| z.im.abs() <= tol::TAU_ALG)
    }
}

/// Solve `[a, w] = v` for `w` on the `a`-off-diagonal part: entrywise
/// `w_jk = v_jk / (i a_j - i a_k)`.
///
/// Fails with [`Error::NonOffDiagonalInput`] when `v` has an `a`-diagonal
/// component above `TAU_ALG`, which signals a misuse of the centralizer
/// split upstream.
pub fn ad_inverse(a: &DiagonalGenerator, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.n();
    assert_eq!((v.rows(), v.cols()), (n, n), "dimension mismatch");
    let mut worst_diag: f64 = 0.0;
    let mut w = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if a.same_class(r, c) {
                worst_diag = worst_diag.max(v[(r, c)].norm());
            } else {
                w[(r, c)] = v[(r, c)] / (a.entry(r) - a.entry(c));
            }
        }
    }
    if worst_diag > tol::TAU_ALG {
        return Err(Error::NonOffDiagonalInput(worst_diag));
    }
    Ok(w)
}

/// Split `m` into its `a`-diagonal and `a`-off-diagonal parts:
/// `diag_jk = m_jk` iff `a_j = a_k`, else 0.
pub fn split_a_diagonal(
    a: &DiagonalGenerator,
    m: &ComplexMatrix,
) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.n();
    assert_eq!((m.rows(), m.cols()), (n, n), "dimension mismatch");
    let mut d = ComplexMatrix::zeros(n, n);
    let mut o = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            if a.same_class(r, c) {
                d[(r, c)] = m[(r, c)];
            } else {
                o[(r, c)] = m[(r, c)];
            }
        }
    }
    (d, o)
}

/// `a`-off-diagonal projection.
pub fn offdiag_part(a: &DiagonalGenerator, m: &ComplexMatrix) -> ComplexMatrix {
    split_a_diagonal(a, m).1
}

/// `a`-diagonal projection.
pub fn diag_part(a: &DiagonalGenerator, m: &ComplexMatrix) -> ComplexMatrix {
    split_a_diagonal(a, m).0
}

/// Hermitian projector onto the column span of `u`: `pi = U (U*U)^{-1} U*`.
pub fn projector_from_basis(u: &ComplexMatrix) -> Result<HermitianProjector> {
    let k = u.cols();
    let ustar = u.adjoint();
    let gram = &ustar * u;
    // Rank gate: pivot-ratio of the Gram matrix against the column scale.
    let scale = (0..k).map(|i| gram[(i, i)].re).fold(0.0_f64, f64::max);
    let (ginv_ustar, cond) = match gram.solve(&ustar) {
        Ok(r) => r,
        Err(_) => return Err(Error::RankDeficient(0.0)),
    };
    if scale == 0.0 || cond > 1.0 / (tol::TAU_RANK * tol::TAU_RANK) {
        return Err(Error::RankDeficient(1.0 / cond));
    }
    let pi = &(u * &ginv_ustar);
    // Symmetrize away the last rounding bits so downstream invariant checks
    // see an exact Hermitian matrix.
    let pi = pi.adjoint().scale(C64::new(0.5, 0.0)) + pi.scale(C64::new(0.5, 0.0));
    HermitianProjector::new(pi, k)
}

/// Distinct eigenvalues `i a_k` of the generator, deduplicated under the
/// dedup tolerance; the monic polynomial with these roots annihilates `a`.
pub fn minimal_polynomial(a: &DiagonalGenerator) -> Vec<C64> {
    let mut roots: Vec<f64> = Vec::new();
    for &v in a.imag_parts() {
        if !roots.iter().any(|&r| (r - v).abs() <= tol::dedup_tol(r, v)) {
            roots.push(v);
        }
    }
    roots.into_iter().map(|v| C64::new(0.0, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ad_inverse_forced_2x2() {
        // a = diag(i, -i), v = [[0,1],[-1,0]] -> w = [[0,-i/2],[-i/2,0]]
        let a = DiagonalGenerator::new(vec![1.0, -1.0]).unwrap();
        let v = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(0.0, 0.0)],
        ]);
        let w = ad_inverse(&a, &v).unwrap();
        assert!((w[(0, 1)] - c(0.0, -0.5)).norm() < 1e-15);
        assert!((w[(1, 0)] - c(0.0, -0.5)).norm() < 1e-15);
        // zero case
        let z = ComplexMatrix::zeros(2, 2);
        assert_eq!(ad_inverse(&a, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ad_inverse_rejects_diagonal_input() {
        let a = DiagonalGenerator::new(vec![1.0, -1.0]).unwrap();
        let v = ComplexMatrix::identity(2);
        assert!(matches!(
            ad_inverse(&a, &v),
            Err(Error::NonOffDiagonalInput(_))
        ));
    }

    #[test]
    fn ad_inverse_round_trip_repeated_eigenvalue() {
        // a = diag(i, i, -i): block off-diagonal structure, ||[a, w] - v|| <= 1e-12
        let a = DiagonalGenerator::new(vec![1.0, 1.0, -1.0]).unwrap();
        let mut v = ComplexMatrix::zeros(3, 3);
        v[(0, 2)] = c(0.3, -0.8);
        v[(2, 0)] = c(-0.3, -0.8);
        v[(1, 2)] = c(-1.1, 0.2);
        v[(2, 1)] = c(1.1, 0.2);
        let w = ad_inverse(&a, &v).unwrap();
        let back = commutator(&a.to_matrix(), &w);
        assert!(back.max_abs_diff(&v) <= 1e-12);
    }

    #[test]
    fn split_parts_and_identity() {
        let a = DiagonalGenerator::new(vec![1.0, 1.0, -1.0]).unwrap();
        let ones = ComplexMatrix::from_fn(3, 3, |_, _| c(1.0, 0.0));
        let (d, o) = split_a_diagonal(&a, &ones);
        // 2x2 upper-left block plus the (3,3) entry
        assert_eq!(d[(0, 1)], c(1.0, 0.0));
        assert_eq!(d[(2, 2)], c(1.0, 0.0));
        assert_eq!(d[(0, 2)], c(0.0, 0.0));
        assert_eq!(o[(0, 2)], c(1.0, 0.0));
        assert!((&d + &o).max_abs_diff(&ones) == 0.0);

        let (di, oi) = split_a_diagonal(&a, &ComplexMatrix::identity(3));
        assert!(di.max_abs_diff(&ComplexMatrix::identity(3)) == 0.0);
        assert_eq!(oi.max_abs(), 0.0);
    }

    #[test]
    fn split_regular_is_plain_diagonal() {
        let a = DiagonalGenerator::new(vec![2.0, 0.5, -1.0]).unwrap();
        let m = ComplexMatrix::from_fn(3, 3, |r, cix| c((r * 3 + cix) as f64, 1.0));
        let (d, _) = split_a_diagonal(&a, &m);
        for r in 0..3 {
            for cix in 0..3 {
                if r != cix {
                    assert_eq!(d[(r, cix)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn projector_axis_and_line() {
        let e1 = ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let p = projector_from_basis(&e1).unwrap();
        assert!((p.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(p.matrix()[(1, 1)].norm() < 1e-15);

        let diag = ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let p = projector_from_basis(&diag).unwrap();
        for r in 0..2 {
            for cix in 0..2 {
                assert!((p.matrix()[(r, cix)] - c(0.5, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn projector_rank2_properties() {
        let u = ComplexMatrix::from_rows(&[
            vec![c(0.3, 0.1), c(-0.2, 0.9)],
            vec![c(1.1, -0.4), c(0.0, 0.3)],
            vec![c(-0.5, 0.2), c(0.7, 0.7)],
            vec![c(0.9, 0.0), c(0.4, -0.6)],
        ]);
        let p = projector_from_basis(&u).unwrap();
        let m = p.matrix();
        assert!((m * m).max_abs_diff(m) <= 1e-12);
        assert!(m.hermitian_defect() <= 1e-12);
        // pi U = U
        assert!((m * &u).max_abs_diff(&u) <= 1e-12);
        assert_eq!(p.rank(), 2);
    }

    #[test]
    fn projector_rank_deficient_rejected() {
        let u = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(1.0, 0.0), c(2.0, 0.0)],
        ]);
        assert!(matches!(
            projector_from_basis(&u),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn minimal_polynomial_dedup() {
        let a = DiagonalGenerator::new(vec![1.0, -1.0]).unwrap();
        let r = minimal_polynomial(&a);
        assert_eq!(r.len(), 2);

        let a = DiagonalGenerator::new(vec![1.0, 1.0, -1.0]).unwrap();
        let r = minimal_polynomial(&a);
        assert_eq!(r.len(), 2);

        // entries closer than the dedup tolerance collapse to one root
        let eps = 1e-12;
        let a = DiagonalGenerator::new(vec![1.0, 1.0 + eps]).unwrap();
        assert_eq!(minimal_polynomial(&a).len(), 1);
        assert!(!a.regular());
    }

    #[test]
    fn minimal_polynomial_annihilates() {
        let a = DiagonalGenerator::new(vec![1.0, 1.0, -0.5]).unwrap();
        let roots = minimal_polynomial(&a);
        let am = a.to_matrix();
        let mut acc = ComplexMatrix::identity(3);
        for r in roots {
            let shift = &am - &ComplexMatrix::identity(3).scale(r);
            acc = &acc * &shift;
        }
        assert!(acc.max_abs() <= 1e-12);
    }

    #[test]
    fn solve_and_inverse() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)],
            vec![c(0.0, 0.0), c(3.0, -1.0), c(1.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, 0.0), c(1.0, 2.0)],
        ]);
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-13);
    }

    proptest! {
        #[test]
        fn prop_ad_inverse_round_trip(seed in 0u64..1000) {
            // pseudo-random off-diagonal v for a = diag(i, i, -i)
            let a = DiagonalGenerator::new(vec![1.0, 1.0, -1.0]).unwrap();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let mut v = ComplexMatrix::zeros(3, 3);
            for r in 0..3 {
                for cix in 0..3 {
                    if !a.same_class(r, cix) {
                        v[(r, cix)] = c(next(), next());
                    }
                }
            }
            let w = ad_inverse(&a, &v).unwrap();
            let back = commutator(&a.to_matrix(), &w);
            prop_assert!(back.max_abs_diff(&v) <= 1e-12);
            // off-diagonality of w
            let (d, _) = split_a_diagonal(&a, &w);
            prop_assert!(d.max_abs() <= 1e-15);
        }

        #[test]
        fn prop_split_orthogonal(seed in 0u64..1000) {
            let a = DiagonalGenerator::new(vec![0.7, 0.7, -0.3, 1.9]).unwrap();
            let mut state = seed.wrapping_add(17).wrapping_mul(2862933555777941757);
            let mut next = || {
                state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            let m = ComplexMatrix::from_fn(4, 4, |_, _| c(next(), next()));
            let (d, o) = split_a_diagonal(&a, &m);
            prop_assert!((&d + &o).max_abs_diff(&m) <= 1e-15);
            // orthogonality under <x,y> = Re tr(x y*)
            let ip = (&d * &o.adjoint()).trace().re;
            prop_assert!(ip.abs() <= 1e-12);
        }
    }
}
