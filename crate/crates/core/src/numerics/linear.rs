//! Dense complex linear solves.
//!
//! Gaussian elimination with partial pivoting, preceded by one pass of
//! row/column max-norm equilibration. The subband systems carry exponential
//! factors that differ by many orders of magnitude between channels;
//! equilibration keeps the pivot-ratio conditioning estimate meaningful.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default pivot-ratio threshold above which a solve is rejected.
const DEFAULT_CONDITION_LIMIT: f64 = 1e14;

/// Square complex matrix in row-major storage.
#[derive(Debug, Clone)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = ComplexMatrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Solution of one factorization applied to several right-hand sides,
/// together with the pivot-ratio conditioning estimate.
pub struct LinearSolution {
    pub columns: Vec<Vec<Complex64>>,
    pub condition_estimate: f64,
}

/// Solve `A x = b` for a single right-hand side.
pub fn solve_linear(matrix: &ComplexMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let sol = solve_linear_multi(matrix, &[rhs.to_vec()], DEFAULT_CONDITION_LIMIT)?;
    Ok(sol.columns.into_iter().next().expect("one rhs"))
}

/// Solve `A x = b` for several right-hand sides sharing one factorization.
///
/// `condition_limit` sets the pivot-ratio estimate above which the solution
/// is only accepted after its residual bound has been verified directly.
pub fn solve_linear_multi(
    matrix: &ComplexMatrix,
    rhs: &[Vec<Complex64>],
    condition_limit: f64,
) -> Result<LinearSolution> {
    let n = matrix.dim;
    for (k, b) in rhs.iter().enumerate() {
        if b.len() != n {
            return Err(Error::Validation(format!(
                "rhs {k} has {} entries, expected {n}",
                b.len()
            )));
        }
    }
    if n == 0 {
        return Ok(LinearSolution {
            columns: rhs.iter().map(|_| Vec::new()).collect(),
            condition_estimate: 1.0,
        });
    }

    let mut a = matrix.clone();
    if a.data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("linear system matrix"));
    }

    // Alternating row/column max-norm equilibration. A single pass is not
    // enough when a row's largest entry sits in a column that later gets
    // scaled down by many orders of magnitude.
    let mut row_scale = vec![1.0_f64; n];
    let mut col_scale = vec![1.0_f64; n];
    for _ in 0..4 {
        for i in 0..n {
            let m = (0..n).map(|j| a[(i, j)].norm()).fold(0.0_f64, f64::max);
            if m > 0.0 {
                row_scale[i] /= m;
                for j in 0..n {
                    a[(i, j)] /= m;
                }
            }
        }
        for j in 0..n {
            let m = (0..n).map(|i| a[(i, j)].norm()).fold(0.0_f64, f64::max);
            if m > 0.0 {
                col_scale[j] /= m;
                for i in 0..n {
                    a[(i, j)] /= m;
                }
            }
        }
    }

    // LU with partial pivoting on the equilibrated matrix.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut max_pivot = 0.0_f64;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (pivot_row, pivot_mag) = (k..n)
            .map(|i| (i, a[(i, k)].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty range");
        if pivot_mag == 0.0 {
            return Err(Error::IllConditioned {
                estimate: f64::INFINITY,
            });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(pivot_row, j)];
                a[(pivot_row, j)] = tmp;
            }
            perm.swap(k, pivot_row);
        }
        max_pivot = max_pivot.max(pivot_mag);
        min_pivot = min_pivot.min(pivot_mag);
        let pivot = a[(k, k)];
        for i in k + 1..n {
            let factor = a[(i, k)] / pivot;
            a[(i, k)] = factor;
            for j in k + 1..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
        }
    }
    let estimate = max_pivot / min_pivot;
    if !estimate.is_finite() {
        return Err(Error::IllConditioned { estimate });
    }

    let mut columns = Vec::with_capacity(rhs.len());
    for b in rhs {
        // Apply row scaling and permutation to the right-hand side.
        let mut y: Vec<Complex64> = (0..n).map(|i| b[perm[i]] * row_scale[perm[i]]).collect();
        // Forward substitution (unit lower triangle).
        for i in 1..n {
            for j in 0..i {
                let yj = y[j];
                y[i] -= a[(i, j)] * yj;
            }
        }
        // Back substitution.
        for i in (0..n).rev() {
            for j in i + 1..n {
                let yj = y[j];
                y[i] -= a[(i, j)] * yj;
            }
            y[i] /= a[(i, i)];
        }
        // Undo column scaling.
        for (j, v) in y.iter_mut().enumerate() {
            *v *= col_scale[j];
        }
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("linear system solution"));
        }
        columns.push(y);
    }

    // A large pivot ratio is usually scaling-induced here (exponentially
    // separated channels), not a lost solution: elimination is backward
    // stable, so the residual bound is the authoritative check. Verify it
    // whenever the estimate exceeds the caller's trust threshold.
    if estimate > condition_limit {
        let norm_a = matrix
            .data
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        for (x, b) in columns.iter().zip(rhs) {
            let mut res = 0.0_f64;
            for i in 0..n {
                let mut ax = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    ax += matrix[(i, j)] * x[j];
                }
                res += (ax - b[i]).norm_sqr();
            }
            let res = res.sqrt();
            let norm_x = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let norm_b = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if res > 1e-10 * (norm_a * norm_x + norm_b) {
                return Err(Error::IllConditioned { estimate });
            }
        }
    }

    Ok(LinearSolution {
        columns,
        condition_estimate: estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn residual_norms(a: &ComplexMatrix, x: &[Complex64], b: &[Complex64]) -> (f64, f64, f64, f64) {
        let n = a.dim();
        let mut res = 0.0_f64;
        for i in 0..n {
            let mut ax = Complex64::new(0.0, 0.0);
            for j in 0..n {
                ax += a[(i, j)] * x[j];
            }
            res += (ax - b[i]).norm_sqr();
        }
        let norm_a = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm_x = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let norm_b = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        (res.sqrt(), norm_a, norm_x, norm_b)
    }

    #[test]
    fn identity_returns_rhs() {
        let mut a = ComplexMatrix::zeros(3);
        for i in 0..3 {
            a[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let b = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.0, -7.0),
        ];
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_system() {
        let mut a = ComplexMatrix::zeros(2);
        a[(0, 0)] = Complex64::new(2.0, 0.0);
        a[(1, 1)] = Complex64::new(3.0, 0.0);
        let b = vec![Complex64::new(4.0, 0.0), Complex64::new(9.0, 0.0)];
        let x = solve_linear(&a, &b).unwrap();
        assert!((x[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fixed_random_8x8_residual() {
        // Deterministic congruential fill.
        let mut state = 0x2545f4914f6cdd1d_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let n = 8;
        let mut a = ComplexMatrix::zeros(n);
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = Complex64::new(next(), next());
            }
            a[(i, i)] += Complex64::new(4.0, 0.0);
            b[i] = Complex64::new(next(), next());
        }
        let x = solve_linear(&a, &b).unwrap();
        let (res, na, nx, nb) = residual_norms(&a, &x, &b);
        assert!(res <= 1e-10 * (na * nx + nb), "residual {res:.3e}");
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut a = ComplexMatrix::zeros(2);
        a[(0, 0)] = Complex64::new(1.0, 0.0);
        a[(0, 1)] = Complex64::new(2.0, 0.0);
        a[(1, 0)] = Complex64::new(2.0, 0.0);
        a[(1, 1)] = Complex64::new(4.0, 0.0);
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        match solve_linear(&a, &b) {
            Err(Error::IllConditioned { .. }) => {}
            other => panic!("expected conditioning error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_diagonally_dominant_systems(seed in any::<u64>()) {
            let mut state = seed | 1;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            };
            let n = 6;
            let mut a = ComplexMatrix::zeros(n);
            let mut b = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = Complex64::new(next(), next());
                }
                a[(i, i)] += Complex64::new(0.0, 8.0);
                b[i] = Complex64::new(next(), next());
            }
            let x = solve_linear(&a, &b).unwrap();
            let (res, na, nx, nb) = residual_norms(&a, &x, &b);
            prop_assert!(res <= 1e-10 * (na * nx + nb));
        }
    }
}
