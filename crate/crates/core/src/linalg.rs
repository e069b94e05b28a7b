//! Dense complex least squares on tall matrices via Householder QR.
//!
//! The regressors built by the identification stage have a few dozen columns
//! and thousands of rows; columns are normalized to unit norm before the
//! factorization to control conditioning and the solution is rescaled after.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// `A x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (col, &xj) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.column(col)) {
                *o += a * xj;
            }
        }
        out
    }

    /// `A^H y` (conjugate transpose times a vector).
    pub fn conj_transpose_matvec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|col| {
                self.column(col)
                    .iter()
                    .zip(y)
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            })
            .collect()
    }
}

/// Least-squares solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: Vec<Complex64>,
    /// Condition estimate of the column-scaled matrix from the R diagonal.
    pub cond_estimate: f64,
    /// `||b - A x||`, read off the transformed right-hand side.
    pub residual_norm: f64,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Minimizes `||A x - b||` for a tall `A` (rows >= cols).
pub fn lstsq(a: &ComplexMatrix, b: &[Complex64]) -> Result<LstsqSolution> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if n == 0 || m < n {
        return Err(Error::InvalidParameter(format!(
            "least squares needs rows >= cols >= 1, got {m} x {n}"
        )));
    }

    // Column scaling to unit norm.
    let mut work = a.clone();
    let mut scales = vec![0.0f64; n];
    for (j, scale) in scales.iter_mut().enumerate() {
        let s = norm(work.column(j));
        if s == 0.0 {
            return Err(Error::RankDeficient(j));
        }
        *scale = s;
        for z in work.column_mut(j) {
            *z /= s;
        }
    }

    let mut rhs = b.to_vec();
    let mut r_diag = vec![0.0f64; n];

    // Householder QR, reflectors applied in place.
    for j in 0..n {
        let x_norm = norm(&work.column(j)[j..]);
        if x_norm == 0.0 {
            return Err(Error::RankDeficient(j));
        }
        let x0 = work.get(j, j);
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * x_norm;

        // v = x - alpha e1, normalized.
        let mut v: Vec<Complex64> = work.column(j)[j..].to_vec();
        v[0] -= alpha;
        let v_norm = norm(&v);
        if v_norm > 0.0 {
            for z in &mut v {
                *z /= v_norm;
            }
            for col in j..n {
                let target = &mut work.column_mut(col)[j..];
                let dot: Complex64 = v.iter().zip(target.iter()).map(|(vi, t)| vi.conj() * t).sum();
                for (t, vi) in target.iter_mut().zip(&v) {
                    *t -= 2.0 * dot * vi;
                }
            }
            let target = &mut rhs[j..];
            let dot: Complex64 = v.iter().zip(target.iter()).map(|(vi, t)| vi.conj() * t).sum();
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= 2.0 * dot * vi;
            }
        }
        work.column_mut(j)[j] = alpha;
        r_diag[j] = alpha.norm();
    }

    let r_max = r_diag.iter().cloned().fold(0.0, f64::max);
    let r_min = r_diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond_estimate = if r_min > 0.0 { r_max / r_min } else { f64::INFINITY };

    // Back-substitution on the upper triangle.
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for j in (0..n).rev() {
        let mut acc = rhs[j];
        for k in j + 1..n {
            acc -= work.get(j, k) * x[k];
        }
        x[j] = acc / work.get(j, j);
    }

    // Undo the column scaling.
    for (xj, s) in x.iter_mut().zip(&scales) {
        *xj /= s;
    }

    let residual_norm = norm(&rhs[n..]);
    Ok(LstsqSolution {
        x,
        cond_estimate,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for col in 0..cols {
            for z in m.column_mut(col) {
                *z = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        m
    }

    /// Normal-equations solve (A^H A) x = A^H b by Gaussian elimination,
    /// the independent cross-check for the QR path.
    fn solve_normal_equations(a: &ComplexMatrix, b: &[Complex64]) -> Vec<Complex64> {
        let n = a.cols();
        let mut gram = vec![vec![c(0.0, 0.0); n + 1]; n];
        for (i, row) in gram.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().take(n) {
                *cell = a
                    .column(i)
                    .iter()
                    .zip(a.column(j))
                    .map(|(p, q)| p.conj() * q)
                    .sum();
            }
            row[n] = a.column(i).iter().zip(b).map(|(p, q)| p.conj() * q).sum();
        }
        for pivot in 0..n {
            let (best, _) = (pivot..n)
                .map(|r| (r, gram[r][pivot].norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            gram.swap(pivot, best);
            let lead = gram[pivot][pivot];
            for col in pivot..=n {
                gram[pivot][col] /= lead;
            }
            for row in 0..n {
                if row != pivot {
                    let factor = gram[row][pivot];
                    for col in pivot..=n {
                        let sub = factor * gram[pivot][col];
                        gram[row][col] -= sub;
                    }
                }
            }
        }
        (0..n).map(|i| gram[i][n]).collect()
    }

    #[test]
    fn exact_system_is_recovered() {
        let mut rng = ChaCha12Rng::seed_from_u64(30);
        let a = random_matrix(&mut rng, 40, 6);
        let truth: Vec<Complex64> = (0..6)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let b = a.matvec(&truth);
        let sol = lstsq(&a, &b).unwrap();
        for (got, want) in sol.x.iter().zip(&truth) {
            assert!((got - want).norm() < 1e-10);
        }
        assert!(sol.residual_norm < 1e-10);
    }

    #[test]
    fn agrees_with_normal_equations() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 25, 4);
            let b: Vec<Complex64> = (0..25)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let qr = lstsq(&a, &b).unwrap();
            let ne = solve_normal_equations(&a, &b);
            for (got, want) in qr.x.iter().zip(&ne) {
                assert!((got - want).norm() < 1e-8, "QR {got} vs NE {want}");
            }
        }
    }

    #[test]
    fn residual_is_orthogonal_to_columns() {
        let mut rng = ChaCha12Rng::seed_from_u64(32);
        let a = random_matrix(&mut rng, 50, 8);
        let b: Vec<Complex64> = (0..50)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let sol = lstsq(&a, &b).unwrap();
        let fit = a.matvec(&sol.x);
        let resid: Vec<Complex64> = b.iter().zip(&fit).map(|(x, y)| x - y).collect();
        let gradient = a.conj_transpose_matvec(&resid);
        let b_norm = norm(&b);
        assert!(norm(&gradient) < 1e-10 * b_norm);
        // Reported residual matches the direct one.
        assert!((sol.residual_norm - norm(&resid)).abs() < 1e-9 * b_norm);
    }

    #[test]
    fn flags_rank_deficiency() {
        let mut a = ComplexMatrix::zeros(10, 2);
        for (i, z) in a.column_mut(0).iter_mut().enumerate() {
            *z = c(i as f64, 0.0);
        }
        // Second column collinear with the first.
        let first = a.column(0).to_vec();
        for (z, f) in a.column_mut(1).iter_mut().zip(&first) {
            *z = 2.0 * f;
        }
        let b = vec![c(1.0, 0.0); 10];
        match lstsq(&a, &b) {
            Err(Error::RankDeficient(_)) => {}
            Ok(sol) => assert!(
                sol.cond_estimate > 1e12,
                "collinear columns must surface as conditioning trouble"
            ),
            Err(other) => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn cond_estimate_is_small_for_orthogonal_columns() {
        let mut a = ComplexMatrix::zeros(8, 2);
        a.column_mut(0)[0] = c(3.0, 0.0);
        a.column_mut(1)[1] = c(0.5, 0.0);
        let b = vec![c(1.0, 0.0); 8];
        let sol = lstsq(&a, &b).unwrap();
        assert!((sol.cond_estimate - 1.0).abs() < 1e-12);
    }
}
