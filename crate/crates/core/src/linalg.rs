//! Small dense linear-algebra routines shared by the numeric models.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix (row-major `d x d`). Fails on non-positive pivots.
pub fn cholesky(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = matrix.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = matrix[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::ConvergenceFailure(format!(
                        "cholesky pivot {sum} at row {i} is not positive"
                    )));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves `L y = b` by forward substitution.
pub fn forward_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let mut y = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    y
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvectors are the columns, returned row-major as `vectors[i][j]` =
/// component `i` of eigenvector `j`.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-22 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut vectors = vec![vec![0.0; d]; d];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..d {
            vectors[i][new_j] = v[i][old_j];
        }
    }
    (eigenvalues, vectors)
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = vec![vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.2], vec![0.6, 1.2, 3.0]];
        let l = cholesky(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut rec = 0.0;
                for k in 0..3 {
                    rec += l[i][k] * l[j][k];
                }
                assert!((rec - m[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn forward_solve_inverts_lower_triangular() {
        let l = vec![vec![2.0, 0.0], vec![1.0, 3.0]];
        let y = forward_solve(&l, &[4.0, 11.0]);
        assert!((y[0] - 2.0).abs() < 1e-12);
        assert!((y[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Symmetric matrix with eigenvalues 3 and 1.
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (vals, vecs) = jacobi_eigen(&m);
        assert!((vals[0] - 3.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
        // A v = lambda v for the top eigenvector.
        let v0 = [vecs[0][0], vecs[1][0]];
        let av = [2.0 * v0[0] + v0[1], v0[0] + 2.0 * v0[1]];
        assert!((av[0] - 3.0 * v0[0]).abs() < 1e-10);
        assert!((av[1] - 3.0 * v0[1]).abs() < 1e-10);
    }

    #[test]
    fn jacobi_handles_diagonal_input() {
        let m = vec![vec![5.0, 0.0], vec![0.0, 2.0]];
        let (vals, _) = jacobi_eigen(&m);
        assert_eq!(vals, vec![5.0, 2.0]);
    }
}
