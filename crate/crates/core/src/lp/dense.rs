use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::abs;
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = 0.0;
                for l in 0..self.cols {
                    s += self.get(i, l) * other.get(l, j);
                }
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| abs(*x)).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Solves `a x = rhs` in place by Gaussian elimination with partial pivoting.
///
/// `a` is a row-major `d x d` matrix and is destroyed. On return `rhs` holds
/// the solution. Returns the determinant of the original matrix; when it is
/// zero `rhs` is left in an unspecified state.
pub fn lu_solve_in_place(a: &mut [f64], rhs: &mut [f64], d: usize) -> f64 {
    debug_assert_eq!(a.len(), d * d);
    debug_assert_eq!(rhs.len(), d);
    let mut det = 1.0;
    for col in 0..d {
        let mut piv = col;
        let mut best = abs(a[col * d + col]);
        for r in col + 1..d {
            let v = abs(a[r * d + col]);
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..d {
                a.swap(col * d + j, piv * d + j);
            }
            rhs.swap(col, piv);
            det = -det;
        }
        let p = a[col * d + col];
        det *= p;
        for r in col + 1..d {
            let f = a[r * d + col] / p;
            if f == 0.0 {
                continue;
            }
            for j in col..d {
                a[r * d + j] -= f * a[col * d + j];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    for col in (0..d).rev() {
        let mut s = rhs[col];
        for j in col + 1..d {
            s -= a[col * d + j] * rhs[j];
        }
        rhs[col] = s / a[col * d + col];
    }
    det
}

/// Determinant by pivoted elimination.
pub fn determinant(m: &DenseMatrix) -> f64 {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let d = m.rows;
    match d {
        0 => 1.0,
        1 => m.data[0],
        2 => m.data[0] * m.data[3] - m.data[1] * m.data[2],
        3 => det3(&m.data),
        _ => {
            let mut a = m.data.clone();
            let mut rhs = vec![0.0; d];
            lu_solve_in_place(&mut a, &mut rhs, d)
        }
    }
}

fn det3(a: &[f64]) -> f64 {
    a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
        + a[2] * (a[3] * a[7] - a[4] * a[6])
}

fn minor(m: &DenseMatrix, skip_row: usize, skip_col: usize) -> DenseMatrix {
    let d = m.rows;
    let mut out = DenseMatrix::zeros(d - 1, d - 1);
    let mut idx = 0;
    for i in (0..d).filter(|&i| i != skip_row) {
        for j in (0..d).filter(|&j| j != skip_col) {
            out.data[idx] = m.get(i, j);
            idx += 1;
        }
    }
    out
}

/// Determinant and adjugate, so that `m * adj = det * I`.
///
/// Closed-form cofactors up to 3x3; larger matrices take each cofactor from
/// a pivoted-elimination minor, which stays valid when `m` is singular.
pub fn det_and_adjugate(m: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    if m.rows != m.cols || m.rows == 0 {
        return Err(Error::Dimension(format!(
            "adjugate needs a nonempty square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let d = m.rows;
    let a = &m.data;
    let adj = match d {
        1 => DenseMatrix::identity(1),
        2 => DenseMatrix {
            rows: 2,
            cols: 2,
            data: vec![a[3], -a[1], -a[2], a[0]],
        },
        3 => {
            let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
                a[r0 * 3 + c0] * a[r1 * 3 + c1] - a[r0 * 3 + c1] * a[r1 * 3 + c0]
            };
            // adj[i][j] = cofactor(j, i)
            DenseMatrix {
                rows: 3,
                cols: 3,
                data: vec![
                    c(1, 2, 1, 2),
                    -c(0, 2, 1, 2),
                    c(0, 1, 1, 2),
                    -c(1, 2, 0, 2),
                    c(0, 2, 0, 2),
                    -c(0, 1, 0, 2),
                    c(1, 2, 0, 1),
                    -c(0, 2, 0, 1),
                    c(0, 1, 0, 1),
                ],
            }
        }
        _ => {
            let mut adj = DenseMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj.set(j, i, sign * determinant(&minor(m, i, j)));
                }
            }
            adj
        }
    };
    Ok((determinant(m), adj))
}

/// Numerical rank by row echelon reduction with complete pivot search per
/// column; entries at or below `tol` in magnitude count as zero.
pub fn rank(m: &DenseMatrix, tol: f64) -> usize {
    let (rows, cols) = (m.rows, m.cols);
    let mut a = m.data.clone();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut piv = r;
        let mut best = abs(a[r * cols + c]);
        for i in r + 1..rows {
            let v = abs(a[i * cols + c]);
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best <= tol {
            continue;
        }
        for j in 0..cols {
            a.swap(r * cols + j, piv * cols + j);
        }
        let p = a[r * cols + c];
        for i in r + 1..rows {
            let f = a[i * cols + c] / p;
            for j in c..cols {
                a[i * cols + j] -= f * a[r * cols + j];
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        abs(a - b) <= tol
    }

    #[test]
    fn two_by_two_adjugate() {
        let m = DenseMatrix::from_rows(&[[0.8, 0.2], [1.0, 1.0]]).unwrap();
        let (det, adj) = det_and_adjugate(&m).unwrap();
        assert!(close(det, 0.6, 1e-15));
        let want = [1.0, -0.2, -1.0, 0.8];
        for (a, b) in adj.as_slice().iter().zip(want) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn identity_and_scalar() {
        let (det, adj) = det_and_adjugate(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(det, 1.0);
        assert_eq!(adj, DenseMatrix::identity(3));
        let (det, adj) = det_and_adjugate(&DenseMatrix::from_rows(&[[2.0]]).unwrap()).unwrap();
        assert_eq!(det, 2.0);
        assert_eq!(adj.as_slice(), &[1.0]);
    }

    #[test]
    fn singular_four_by_four_adjugate_is_consistent() {
        let m = DenseMatrix::from_rows(&[
            [1.0, 2.0, 3.0, 4.0],
            [2.0, 4.0, 6.0, 8.0],
            [0.5, 0.1, 0.0, 0.3],
            [0.2, 0.9, 0.4, 0.7],
        ])
        .unwrap();
        let (det, adj) = det_and_adjugate(&m).unwrap();
        assert!(abs(det) < 1e-12);
        let prod = m.mul(&adj).unwrap();
        assert!(prod.as_slice().iter().all(|x| abs(*x) < 1e-12));
    }

    #[test]
    fn lu_solves_small_system() {
        let mut a = vec![0.8, 0.2, 1.0, 1.0];
        let mut b = vec![0.5, 1.0];
        let det = lu_solve_in_place(&mut a, &mut b, 2);
        assert!(close(det, 0.6, 1e-15));
        assert!(close(b[0], 0.5, 1e-15) && close(b[1], 0.5, 1e-15));
    }

    #[test]
    fn rank_examples() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert_eq!(rank(&m, 1e-9), 1);
        assert_eq!(rank(&DenseMatrix::identity(4), 1e-9), 4);
        assert_eq!(rank(&DenseMatrix::zeros(3, 2), 1e-9), 0);
    }

    proptest! {
        #[test]
        fn adjugate_identity(d in 1usize..6, seed in proptest::collection::vec(-1.0f64..1.0, 25)) {
            let m = DenseMatrix::from_row_major(d, d, seed[..d * d].to_vec()).unwrap();
            let (det, adj) = det_and_adjugate(&m).unwrap();
            let prod = m.mul(&adj).unwrap();
            let scale = 1f64.max(libm::pow(m.norm_inf(), d as f64));
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { det } else { 0.0 };
                    prop_assert!(abs(prod.get(i, j) - want) <= 1e-9 * scale);
                }
            }
        }

        #[test]
        fn lu_determinant_matches_cofactor(d in 1usize..4, seed in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let m = DenseMatrix::from_row_major(d, d, seed[..d * d].to_vec()).unwrap();
            let mut a = m.as_slice().to_vec();
            let mut rhs = vec![0.0; d];
            let lu = lu_solve_in_place(&mut a, &mut rhs, d);
            prop_assert!(abs(lu - determinant(&m)) <= 1e-12);
        }
    }
}
