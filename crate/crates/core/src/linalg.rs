//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest condition number accepted by [`inverse_checked`].
pub const MAX_CONDITION: f64 = 1e12;

pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Induced 1-norm (max column sum).
pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn norm2(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// LU inverse with a 1-norm condition estimate; fails above [`MAX_CONDITION`].
pub fn inverse_checked(a: &CMatrix, what: &str) -> Result<(CMatrix, f64)> {
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned {
            what: what.to_string(),
            cond: f64::INFINITY,
        })?;
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned {
            what: what.to_string(),
            cond,
        });
    }
    Ok((inv, cond))
}

/// Multiply a matrix on the left by a diagonal: `diag(d) · a`.
pub fn diag_left(d: &CVector, a: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= d[i];
    }
    out
}

/// Multiply a matrix on the right by a diagonal: `a · diag(d)`.
pub fn diag_right(a: &CMatrix, d: &CVector) -> CMatrix {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= d[j];
    }
    out
}

/// Eigen-decomposition of a general complex matrix via complex Schur form.
/// Eigenvectors are unit-normalized columns.
pub fn eig(a: &CMatrix) -> Result<(CVector, CMatrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((CVector::zeros(0), CMatrix::zeros(0, 0)));
    }
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::Domain(
            "eigen-decomposition of a non-finite matrix".into(),
        ));
    }
    // a tight tolerance first; some badly scaled matrices only converge
    // with a looser one
    let schur = [1e-15, 1e-13, 1e-11]
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(a.clone(), eps, 10_000))
        .ok_or_else(|| Error::Domain("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let scale = norm1(&t).max(f64::MIN_POSITIVE);
    let small = 1e-14 * scale;
    let mut vecs = CMatrix::zeros(n, n);
    let mut vals = CVector::zeros(n);
    for k in 0..n {
        let lam = t[(k, k)];
        vals[k] = lam;
        let mut v = CVector::zeros(n);
        v[k] = cr(1.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * v[j];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < small {
                d = cr(small);
            }
            v[i] = -s / d;
        }
        let mut x = &q * v;
        let nrm = x.norm();
        if nrm > 0.0 {
            x /= cr(nrm);
        }
        vecs.set_column(k, &x);
    }
    Ok((vals, vecs))
}

/// Parlett–Reinsch balancing: returns `D⁻¹ A D` with `D` a diagonal of
/// powers of two chosen so that rows and columns have comparable norms,
/// together with the diagonal of `D`.
pub fn balance(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].norm();
                    r += b[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let total = c + r;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if (c + r) < 0.95 * total {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    (b, d)
}

/// Matrix sign function by the scaled Newton iteration
/// `X ← (μX + (μX)⁻¹)/2`. Fails if an eigenvalue lies on (or too close to)
/// the imaginary axis.
pub fn matrix_sign(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let mut x = a.clone();
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let lu = x.clone().lu();
        let det = lu.determinant();
        let xi = lu
            .try_inverse()
            .ok_or_else(|| Error::Domain("matrix sign: singular iterate".into()))?;
        let mu = if det.norm() > 0.0 && det.is_finite() {
            det.norm().powf(-1.0 / n as f64)
        } else {
            1.0
        };
        let next = (&x * cr(mu) + xi * cr(1.0 / mu)) * cr(0.5);
        let change = norm1(&(&next - &x)) / norm1(&next);
        x = next;
        // stop at convergence, or once rounding makes the iteration stall
        if change <= 1e-14 || (change < 1e-10 && change >= last) {
            break;
        }
        last = change;
    }
    let defect = norm1(&(&x * &x - CMatrix::identity(n, n))) / norm1(&x).powi(2).max(1.0);
    if defect.is_nan() || defect >= 1e-8 {
        return Err(Error::Domain(format!(
            "matrix sign iteration did not converge (defect {defect:.1e})"
        )));
    }
    Ok(x)
}

/// Orthonormal basis of the invariant subspace of `a` belonging to the
/// eigenvalues with real part above `shift`, of expected dimension `dim`.
pub fn invariant_subspace(a: &CMatrix, shift: f64, dim: usize) -> Result<CMatrix> {
    let n = a.nrows();
    let (b, d) = balance(a);
    let sign = matrix_sign(&(b - CMatrix::identity(n, n) * cr(shift)))?;
    // undo the balancing: P = D sign D⁻¹ projects for `a`
    let sign = CMatrix::from_fn(n, n, |i, j| sign[(i, j)] * (d[i] / d[j]));
    let proj = (CMatrix::identity(n, n) + sign) * cr(0.5);
    // a pivoted QR of the projector: its leading columns span the range
    let qr = proj.col_piv_qr();
    let r = qr.r();
    let scale = r[(0, 0)].norm().max(f64::MIN_POSITIVE);
    let rank = (0..n)
        .take_while(|&i| r[(i, i)].norm() > 1e-8 * scale)
        .count();
    if rank != dim {
        return Err(Error::Domain(format!(
            "invariant subspace has dimension {rank}, expected {dim}"
        )));
    }
    Ok(qr.q().columns(0, dim).clone_owned())
}

/// Eigenphases `½ arg λ` of the eigenvalues.
pub fn eigenphases(vals: &CVector) -> Vec<f64> {
    vals.iter().map(|l| 0.5 * l.arg()).collect()
}

/// `‖A†A − 1‖₂`.
pub fn unitarity_residual(s: &CMatrix) -> f64 {
    let n = s.nrows();
    norm2(&(s.adjoint() * s - CMatrix::identity(n, n)))
}

/// `‖AB − BA‖₂`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    norm2(&(a * b - b * a))
}
