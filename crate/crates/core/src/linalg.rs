//! Dense complex linear algebra for small operators.
//!
//! Everything here targets the small Hermitian matrices this crate works
//! with (dimensions of a few to a few dozen): validation helpers and a
//! cyclic Jacobi eigensolver for Hermitian matrices. The solver is
//! self-contained so the eigensystem checks do not depend on an external
//! backend.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Max elementwise deviation from Hermiticity, max |A - A^H|.
pub fn hermiticity_deviation(a: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest elementwise modulus.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// Frobenius norm of U^H U - I.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let eye = CMat::identity(n, n);
    (gram - eye).norm()
}

/// Checks `a` is square and Hermitian within `tol` (elementwise).
pub fn require_hermitian(a: &CMat, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(CoreError::DimensionMismatch {
            left: a.nrows(),
            right: a.ncols(),
        });
    }
    let dev = hermiticity_deviation(a);
    if dev > tol {
        return Err(CoreError::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Checks `u` is square and unitary within `tol` (Frobenius).
pub fn require_unitary(u: &CMat, tol: f64) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(CoreError::DimensionMismatch {
            left: u.nrows(),
            right: u.ncols(),
        });
    }
    let dev = unitarity_deviation(u);
    if dev > tol {
        return Err(CoreError::NotUnitary { deviation: dev });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns. Input is symmetrized (A + A^H)/2 first so callers may pass
/// matrices with floating-point Hermiticity noise.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh requires a square matrix");
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        }
    }
    let mut v = CMat::identity(n, n);
    let scale: f64 = m.norm().max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / r;
                let alpha = m[(p, p)].re;
                let beta = m[(q, q)].re;
                // Rotation angle from cot(2 theta) = (beta - alpha) / (2 r).
                let tau = (beta - alpha) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary J: identity except
                //   J[p,p] = c, J[p,q] = s,
                //   J[q,p] = -s e^{-i phi}, J[q,q] = c e^{-i phi}.
                let jp_p = C64::new(c, 0.0);
                let jp_q = C64::new(s, 0.0);
                let jq_p = -C64::new(s, 0.0) * phase.conj();
                let jq_q = C64::new(c, 0.0) * phase.conj();

                // M <- J^H M J, applied as column then row updates.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * jp_p + miq * jq_p;
                    m[(i, q)] = mip * jp_q + miq * jq_q;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = jp_p.conj() * mpj + jq_p.conj() * mqj;
                    m[(q, j)] = jp_q.conj() * mpj + jq_q.conj() * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jp_p + viq * jq_p;
                    v[(i, q)] = vip * jp_q + viq * jq_q;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let evals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for row in 0..n {
            vecs[(row, col)] = v[(row, i)];
        }
    }
    (sorted, vecs)
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    eigh(a).0
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    eigvalsh(a)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Stream;

    fn random_hermitian(n: usize, stream: &Stream) -> CMat {
        let mut a = CMat::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = C64::new(stream.gaussian(2 * k), stream.gaussian(2 * k + 1));
                k += 1;
            }
        }
        let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        h
    }

    #[test]
    fn eigh_diagonal_matrix() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.5, 0.0),
        ]));
        let (vals, _) = eigh(&m);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 0.5).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_pauli_y() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        );
        let (vals, vecs) = eigh(&m);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // residual check A v = lambda v
        for k in 0..2 {
            let v = vecs.column(k);
            let res = &m * v - v * C64::new(vals[k], 0.0);
            assert!(res.norm() < 1e-13);
        }
    }

    #[test]
    fn eigh_random_reconstruction() {
        let stream = Stream::new(7, 0);
        for n in 2..=8 {
            let a = random_hermitian(n, &Stream::new(7, n as u64));
            let (vals, vecs) = eigh(&a);
            // A V = V diag(vals)
            let lam = CMat::from_diagonal(&CVec::from_iterator(
                n,
                vals.iter().map(|&x| C64::new(x, 0.0)),
            ));
            let residual = (&a * &vecs - &vecs * lam).norm();
            assert!(residual < 1e-12 * a.norm().max(1.0), "residual {residual}");
            assert!(unitarity_deviation(&vecs) < 1e-12);
        }
        let _ = stream;
    }

    #[test]
    fn deviations_detect_bad_inputs() {
        let mut m = CMat::identity(3, 3);
        m[(0, 1)] = C64::new(0.1, 0.2);
        assert!(hermiticity_deviation(&m) > 0.1);
        assert!(require_hermitian(&m, 1e-12).is_err());
        let u = CMat::identity(3, 3) * C64::new(1.1, 0.0);
        assert!(require_unitary(&u, 1e-12).is_err());
    }
}
