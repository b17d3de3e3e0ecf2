//! Small dense helpers for square matrices stored row-major.
//!
//! Every matrix handled here is at most a handful of rows (metric tensors,
//! index-form Gram matrices), so plain loops are used throughout.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Inverse of an `n x n` row-major matrix by Gauss-Jordan elimination with
/// partial pivoting.
pub fn inverse<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    let mut m = a.to_vec();
    let mut inv = identity::<T>(n);
    let scale = a.iter().fold(T::zero(), |s, &x| s.max(x.abs()));
    if scale == T::zero() {
        return Err(Error::SingularMatrix { condition: f64::INFINITY });
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        let p = m[pivot * n + col];
        if p.abs() <= scale * lit(1e-14) {
            return Err(Error::SingularMatrix { condition: f64::INFINITY });
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p_inv = T::one() / p;
        for k in 0..n {
            m[col * n + k] *= p_inv;
            inv[col * n + k] *= p_inv;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col];
            if f == T::zero() {
                continue;
            }
            for k in 0..n {
                let mk = m[col * n + k];
                let ik = inv[col * n + k];
                m[row * n + k] -= f * mk;
                inv[row * n + k] -= f * ik;
            }
        }
    }
    Ok(inv)
}

/// Determinant via LU elimination.
pub fn determinant<T: Real>(a: &[T], n: usize) -> T {
    let mut m = a.to_vec();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        let p = m[pivot * n + col];
        if p == T::zero() {
            return T::zero();
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for k in col..n {
                let mk = m[col * n + k];
                m[row * n + k] -= f * mk;
            }
        }
    }
    det
}

pub fn identity<T: Real>(n: usize) -> Vec<T> {
    let mut id = vec![T::zero(); n * n];
    for i in 0..n {
        id[i * n + i] = T::one();
    }
    id
}

pub fn matmul<T: Real>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn transpose<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let mut t = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// `M v` for a square matrix.
pub fn matvec<T: Real>(a: &[T], v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

/// Bilinear form `u^T M v`.
pub fn bilinear<T: Real>(m: &[T], u: &[T], v: &[T]) -> T {
    let n = u.len();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s += u[i] * m[i * n + j] * v[j];
        }
    }
    s
}

/// Frobenius-norm condition estimate `|A|_F |A^-1|_F`.
pub fn condition_estimate<T: Real>(a: &[T], a_inv: &[T]) -> T {
    let f = |m: &[T]| m.iter().map(|&x| x * x).sum::<T>().sqrt();
    f(a) * f(a_inv)
}

/// Largest asymmetry `|M_ij - M_ji|`.
pub fn asymmetry<T: Real>(a: &[T], n: usize) -> T {
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[i * n + j] - a[j * n + i]).abs());
        }
    }
    worst
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    let mut m = a.to_vec();
    let off = |m: &[T]| {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s
    };
    let total: T = m.iter().map(|&x| x * x).sum();
    let eps = T::epsilon() * T::epsilon() * total.max(T::min_positive_value());
    for _sweep in 0..100 {
        if off(&m) <= eps {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a: [f64; 9] = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = inverse(&a, 3).unwrap();
        let p = matmul(&a, &inv, 3);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i * 3 + j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(matches!(inverse(&a, 2), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn determinant_of_permuted_diag() {
        let a: [f64; 4] = [0.0, 2.0, 3.0, 0.0];
        assert!((determinant(&a, 2) + 6.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matches_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let ev = symmetric_eigenvalues::<f64>(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((ev[0] - 1.0).abs() < 1e-13 && (ev[1] - 3.0).abs() < 1e-13);
    }
}
