//! Small dense linear algebra for the stability analyzer.
//!
//! Sizes here are tiny (a few dozen at most), so everything is plain
//! row-major `Vec<f64>` with textbook algorithms.

use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).take(self.rows).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// vᵀM
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| v[i] * self[(i, j)]).sum())
            .collect()
    }

    /// Solves `self · x = b` for each column of `b` by Gaussian elimination
    /// with partial pivoting. Returns `None` when a pivot falls below
    /// `tol` times the largest entry.
    pub fn solve(&self, b: &Matrix, tol: f64) -> Option<Matrix> {
        assert!(self.is_square() && b.rows == self.rows);
        let n = self.rows;
        let m = b.cols;
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))?;
            if a[(p, k)].abs() <= tol * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                for j in 0..m {
                    x.data.swap(k * m + j, p * m + j);
                }
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
                for j in 0..m {
                    x[(i, j)] -= f * x[(k, j)];
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..m {
                let s: f64 = (k + 1..n).map(|c| a[(k, c)] * x[(c, j)]).sum();
                x[(k, j)] = (x[(k, j)] - s) / a[(k, k)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self, tol: f64) -> Option<Matrix> {
        self.solve(&Matrix::identity(self.rows), tol)
    }

    /// Numerical rank via Gaussian elimination with full pivoting.
    pub fn rank(&self, tol: f64) -> usize {
        let mut a = self.clone();
        let scale = a.max_abs();
        if scale == 0.0 {
            return 0;
        }
        let (n, m) = (a.rows, a.cols);
        let mut rank = 0;
        let mut used_cols = vec![false; m];
        for _ in 0..n.min(m) {
            let mut best = (0, 0, 0.0);
            for i in rank..n {
                for j in (0..m).filter(|&j| !used_cols[j]) {
                    if a[(i, j)].abs() > best.2 {
                        best = (i, j, a[(i, j)].abs());
                    }
                }
            }
            if best.2 <= tol * scale {
                break;
            }
            let (p, c, _) = best;
            for j in 0..m {
                a.data.swap(rank * m + j, p * m + j);
            }
            used_cols[c] = true;
            for i in rank + 1..n {
                let f = a[(i, c)] / a[(rank, c)];
                for j in 0..m {
                    a[(i, j)] -= f * a[(rank, j)];
                }
            }
            rank += 1;
        }
        rank
    }

    /// Coefficients `[1, c1, …, cn]` of det(sI − A), highest power first,
    /// by the Faddeev–LeVerrier recursion.
    pub fn characteristic_polynomial(&self) -> Vec<f64> {
        assert!(self.is_square());
        let n = self.rows;
        let mut coeffs = vec![1.0];
        let mut m = Matrix::zeros(n, n);
        let eye = Matrix::identity(n);
        for k in 1..=n {
            let c_prev = *coeffs.last().unwrap();
            let shifted = &m + &eye.scale(c_prev);
            m = self * &shifted;
            coeffs.push(-m.trace() / k as f64);
        }
        coeffs
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    /// sorted ascending.
    pub fn symmetric_eigenvalues(&self, tol: f64) -> Vec<f64> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum::<f64>()
                .sqrt();
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl std::ops::Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|x| format!("{x:>12.6}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Coefficients of p(a·z + b) given p's coefficients (highest power first).
pub fn compose_affine(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    // Horner's scheme over polynomials in z
    let mut acc: Vec<f64> = vec![0.0];
    for &c in coeffs {
        // acc ← acc·(a z + b) + c, with acc stored highest power first
        let mut next = vec![0.0; acc.len() + 1];
        for (i, &x) in acc.iter().enumerate() {
            next[i] += a * x;
            next[i + 1] += b * x;
        }
        *next.last_mut().unwrap() += c;
        acc = next;
    }
    // drop the leading zero introduced by the initial accumulator
    acc.remove(0);
    acc
}

/// Number of roots of a real polynomial in the open right half plane, from
/// the sign changes of the first column of its Routh array. `None` when the
/// array degenerates (an all-zero row), which happens exactly when roots
/// are placed symmetrically about the origin, e.g. on the imaginary axis.
pub fn routh_rhp_roots(coeffs: &[f64]) -> Option<usize> {
    let first = coeffs.iter().position(|&c| c != 0.0)?;
    let p: Vec<f64> = coeffs[first..].to_vec();
    let degree = p.len() - 1;
    if degree == 0 {
        return Some(0);
    }
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let zero_tol = 1e-12 * scale;
    let width = degree / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|j| *p.get(2 * j).unwrap_or(&0.0)).collect();
    let mut curr: Vec<f64> = (0..width).map(|j| *p.get(2 * j + 1).unwrap_or(&0.0)).collect();
    let mut column = vec![prev[0]];
    for _ in 0..degree {
        if curr.iter().all(|c| c.abs() <= zero_tol) {
            return None;
        }
        if curr[0].abs() <= zero_tol {
            // epsilon substitution
            curr[0] = zero_tol.max(f64::MIN_POSITIVE);
        }
        column.push(curr[0]);
        let next: Vec<f64> = (0..width)
            .map(|j| {
                let a = *prev.get(j + 1).unwrap_or(&0.0);
                let b = *curr.get(j + 1).unwrap_or(&0.0);
                (curr[0] * a - prev[0] * b) / curr[0]
            })
            .collect();
        prev = curr;
        curr = next;
    }
    Some(
        column
            .windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count(),
    )
}

/// Roots of a real polynomial of degree ≤ 3 in closed form.
pub fn closed_form_roots(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    let first = coeffs.iter().position(|&c| c != 0.0)?;
    let p = &coeffs[first..];
    let lead = p[0];
    let c: Vec<f64> = p.iter().map(|x| x / lead).collect();
    match c.len() {
        1 => Some(vec![]),
        2 => Some(vec![Complex64::new(-c[1], 0.0)]),
        3 => {
            let (b, k) = (c[1], c[2]);
            let disc = b * b - 4.0 * k;
            if disc >= 0.0 {
                let r = disc.sqrt();
                // avoid cancellation in the smaller root
                let q = -0.5 * (b + b.signum() * r);
                if q == 0.0 {
                    return Some(vec![Complex64::new(0.0, 0.0); 2]);
                }
                Some(vec![Complex64::new(q, 0.0), Complex64::new(k / q, 0.0)])
            } else {
                let im = (-disc).sqrt() / 2.0;
                Some(vec![Complex64::new(-b / 2.0, im), Complex64::new(-b / 2.0, -im)])
            }
        }
        4 => {
            let (a, b, k) = (c[1], c[2], c[3]);
            // depressed cubic t³ + p t + q with s = t − a/3
            let pp = b - a * a / 3.0;
            let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + k;
            let shift = -a / 3.0;
            let disc = (qq / 2.0).powi(2) + (pp / 3.0).powi(3);
            if disc > 0.0 {
                let sq = disc.sqrt();
                let u = (-qq / 2.0 + sq).cbrt();
                let v = (-qq / 2.0 - sq).cbrt();
                let re = -(u + v) / 2.0 + shift;
                let im = (u - v) * 3f64.sqrt() / 2.0;
                Some(vec![
                    Complex64::new(u + v + shift, 0.0),
                    Complex64::new(re, im),
                    Complex64::new(re, -im),
                ])
            } else if pp == 0.0 {
                Some(vec![Complex64::new(shift, 0.0); 3])
            } else {
                let m = 2.0 * (-pp / 3.0).sqrt();
                let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
                let phi = arg.acos() / 3.0;
                Some(
                    (0..3)
                        .map(|k| {
                            let t = m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                            Complex64::new(t + shift, 0.0)
                        })
                        .collect(),
                )
            }
        }
        _ => None,
    }
}
