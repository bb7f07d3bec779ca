//! Eigenvalues of small dense real symmetric matrices.
//!
//! Matrices are stored row-major in a flat slice. Dimension 2 uses the
//! closed form; anything larger goes through cyclic Jacobi rotations.

/// Off-diagonal Frobenius norm below which Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-13;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of the `n`×`n` symmetric matrix `m`, in ascending order.
///
/// Only the upper triangle is trusted to be symmetric with the lower one;
/// callers are expected to pass a symmetric matrix.
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(m.len(), n * n, "matrix storage does not match dimension");
    let mut values = match n {
        0 => Vec::new(),
        1 => vec![m[0]],
        2 => {
            let (x, y) = eigenvalues_2x2(m[0], m[1], m[3]);
            vec![x, y]
        }
        _ => jacobi(m.to_vec(), n),
    };
    values.sort_by(f64::total_cmp);
    values
}

/// Closed-form eigenvalues of `[[p, q], [q, r]]`.
pub fn eigenvalues_2x2(p: f64, q: f64, r: f64) -> (f64, f64) {
    let mean = 0.5 * (p + r);
    let radius = (0.5 * (p - r)).hypot(q);
    (mean - radius, mean + radius)
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

fn jacobi(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                // A <- A J, then A <- J^T A
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
