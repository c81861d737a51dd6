use super::{Mat, SkewMat};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Thin QR factorization `a = Q·R` of a tall matrix.
///
/// Gram–Schmidt with one full re-orthogonalization pass per column, which keeps
/// `QᵀQ = I` at working precision for full-rank input. `R` has a positive
/// diagonal, so the factorization is unique.
pub fn qr_thin(a: &Mat) -> Result<(Mat, Mat)> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::Dimension(format!("QR needs rows ≥ cols, got {n}×{p}")));
    }
    let scale = a.frobenius();
    let mut q = Mat::zeros(n, p);
    let mut r = Mat::zeros(p, p);
    let mut v = vec![0.0; n];
    for j in 0..p {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[(i, j)];
        }
        for _pass in 0..2 {
            for k in 0..j {
                let c: f64 = (0..n).map(|i| q[(i, k)] * v[i]).sum();
                r[(k, j)] += c;
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= c * q[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > Tolerances::DEFAULT.rank * scale) {
            return Err(Error::RankDeficient { column: j, pivot: norm });
        }
        r[(j, j)] = norm;
        for (i, vi) in v.iter().enumerate() {
            q[(i, j)] = vi / norm;
        }
    }
    Ok((q, r))
}

/// Eigendecomposition of a symmetric matrix: `m = V · diag(values) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Mat,
}

/// Cyclic Jacobi eigensolver for small symmetric matrices.
pub fn sym_eigen(m: &Mat) -> Result<SymEigen> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigensolver needs a square matrix, got {:?}", m.shape())));
    }
    let n = m.rows();
    let mut a = m.sym();
    let mut v = Mat::identity(n);
    let scale = a.frobenius();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * 1e-2 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
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
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Orthonormal polar factor `U = a (aᵀa)^{-1/2}`, the closest point of
/// `St(p, n)` to `a` in the Frobenius norm.
pub fn polar_factor(a: &Mat) -> Result<Mat> {
    let (n, p) = a.shape();
    if n < p {
        return Err(Error::Dimension(format!("polar factor needs rows ≥ cols, got {n}×{p}")));
    }
    let gram = a.tr_mul_unchecked(a);
    let eig = sym_eigen(&gram)?;
    let largest = eig.values.last().copied().unwrap_or(0.0);
    let smallest = eig.values[0];
    if !(largest > 0.0) || smallest <= Tolerances::DEFAULT.rank * largest {
        return Err(Error::ProjectionUndefined(format!(
            "Gram matrix is singular (eigenvalues in [{smallest:.3e}, {largest:.3e}])"
        )));
    }
    let v = &eig.vectors;
    let inv_sqrt = Mat::from_fn(p, p, |i, j| (0..p).map(|k| v[(i, k)] * v[(j, k)] / eig.values[k].sqrt()).sum());
    Ok(a.mul_unchecked(&inv_sqrt))
}

const EXPM_TAYLOR_DEGREE: usize = 13;

/// Matrix exponential of a skew-symmetric matrix by scaling and squaring.
///
/// The scaled matrix `x / 2^s`, with `s = max(0, ⌈log₂‖x‖⌉ + 1)`, has norm at
/// most 1/2, where the degree-13 Taylor polynomial is accurate to roundoff.
pub fn expm_skew(x: &SkewMat) -> Mat {
    let m = x.as_mat();
    let p = m.rows();
    let norm = m.frobenius();
    let squarings = if norm > 0.0 { (norm.log2().ceil() as i64 + 1).max(0) as i32 } else { 0 };
    let scaled = m.scale(0.5f64.powi(squarings));

    // Horner form of Σ_{k≤13} yᵏ/k!.
    let mut acc = Mat::identity(p);
    for k in (1..=EXPM_TAYLOR_DEGREE).rev() {
        let mut next = scaled.mul_unchecked(&acc).scale(1.0 / k as f64);
        for i in 0..p {
            next[(i, i)] += 1.0;
        }
        acc = next;
    }
    for _ in 0..squarings {
        acc = acc.mul_unchecked(&acc);
    }
    acc
}
