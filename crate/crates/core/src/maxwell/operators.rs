//! Radial block forms of `∇`, `∇·` and `∇×` on multipole channels.
//!
//! Fields are written with the radial factor pulled out, `φ = (1/r) u(r) Y_ℓ^m`
//! and `E = (1/r) ψ(r) Y^ℓ_{jm}`. In these variables every ladder identity
//! `(d/dr + c/r) f` with `f = u/r` becomes `(1/r)(d/dr + (c − 1)/r) u`, so each
//! operator is a first-order block `A ∂_r + B/r` with constant matrices.

use num_complex::Complex64;

use crate::angular::{BasisKind, ChannelBasis};
use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, CVector};

/// `ψ ↦ A ψ' + (B/r) ψ`, mapping channels of `cols` into channels of `rows`.
#[derive(Clone, Debug)]
pub struct FirstOrderBlockOperator {
    pub rows: ChannelBasis,
    pub cols: ChannelBasis,
    pub a: CMatrix,
    pub b: CMatrix,
}

/// `ψ ↦ P₂ ψ'' + (P₁/r) ψ' + (P₀/r²) ψ`.
#[derive(Clone, Debug)]
pub struct SecondOrderBlockOperator {
    pub rows: ChannelBasis,
    pub cols: ChannelBasis,
    pub p2: CMatrix,
    pub p1: CMatrix,
    pub p0: CMatrix,
}

impl FirstOrderBlockOperator {
    fn zeros(rows: &ChannelBasis, cols: &ChannelBasis) -> Self {
        Self {
            rows: rows.clone(),
            cols: cols.clone(),
            a: CMatrix::zeros(rows.dim(), cols.dim()),
            b: CMatrix::zeros(rows.dim(), cols.dim()),
        }
    }

    /// Entry `coef · (∂ + c/r)` from input channel `col` to output `row`.
    fn set(&mut self, row: usize, col: usize, coef: Complex64, c: f64) {
        self.a[(row, col)] += coef;
        self.b[(row, col)] += coef * c;
    }

    /// Apply to radial data `(ψ, ψ')` at `r`.
    pub fn apply(&self, r: f64, psi: &CVector, dpsi: &CVector) -> CVector {
        &self.a * dpsi + &self.b * psi / Complex64::new(r, 0.0)
    }

    /// `self ∘ inner`: `(A₂∂ + B₂/r)(A₁∂ + B₁/r)`.
    pub fn compose(&self, inner: &FirstOrderBlockOperator) -> Result<SecondOrderBlockOperator> {
        if self.cols != inner.rows {
            return invalid("composed operators do not share an intermediate basis");
        }
        let aa = &self.a * &inner.a;
        let ab = &self.a * &inner.b;
        let ba = &self.b * &inner.a;
        let bb = &self.b * &inner.b;
        Ok(SecondOrderBlockOperator {
            rows: self.rows.clone(),
            cols: inner.cols.clone(),
            p2: aa,
            p1: &ab + ba,
            p0: bb - ab,
        })
    }
}

impl SecondOrderBlockOperator {
    /// Apply to `(ψ, ψ', ψ'')` at `r`.
    pub fn apply(&self, r: f64, psi: &CVector, dpsi: &CVector, ddpsi: &CVector) -> CVector {
        let r = Complex64::new(r, 0.0);
        &self.p2 * ddpsi + &self.p1 * dpsi / r + &self.p0 * psi / (r * r)
    }

    /// Rows restricted to `rows` and columns to `cols` (sub-bases of this
    /// operator's bases).
    pub fn restricted(&self, rows: &ChannelBasis, cols: &ChannelBasis) -> Result<Self> {
        let (Some(ri), Some(ci)) = (rows.embedding_in(&self.rows), cols.embedding_in(&self.cols))
        else {
            return invalid("restriction basis is not contained in the operator basis");
        };
        let pick = |m: &CMatrix| CMatrix::from_fn(ri.len(), ci.len(), |i, j| m[(ri[i], ci[j])]);
        Ok(Self {
            rows: rows.clone(),
            cols: cols.clone(),
            p2: pick(&self.p2),
            p1: pick(&self.p1),
            p0: pick(&self.p0),
        })
    }
}

fn ladder(j: i32) -> (f64, f64) {
    let jf = f64::from(j);
    (
        ((jf + 1.0) / (2.0 * jf + 1.0)).sqrt(),
        (jf / (2.0 * jf + 1.0)).sqrt(),
    )
}

fn require(basis: &ChannelBasis, kind: BasisKind) -> Result<()> {
    if basis.kind != kind {
        return invalid(format!("expected a {kind:?} basis"));
    }
    Ok(())
}

/// `∇(u/r · Y_j^m)` from scalar channels into vector channels:
/// `Y^{j−1}`: `b(∂ + j/r)`, `Y^{j+1}`: `−a(∂ − (j+1)/r)`.
pub fn gradient(scalar: &ChannelBasis, vector: &ChannelBasis) -> Result<FirstOrderBlockOperator> {
    require(scalar, BasisKind::Scalar)?;
    require(vector, BasisKind::Vector)?;
    let mut op = FirstOrderBlockOperator::zeros(vector, scalar);
    for (col, c) in scalar.channels.iter().enumerate() {
        let (a, b) = ladder(c.l);
        let j = f64::from(c.l);
        if let Some(row) = vector.index_of(c.l, c.l - 1, c.m) {
            op.set(row, col, Complex64::new(b, 0.0), j);
        }
        if let Some(row) = vector.index_of(c.l, c.l + 1, c.m) {
            op.set(row, col, Complex64::new(-a, 0.0), -(j + 1.0));
        }
    }
    Ok(op)
}

/// `∇·(ψ/r · Y^ℓ_{jm})` from vector channels into scalar channels:
/// `Y^{j+1}`: `−a(∂ + (j+1)/r)`, `Y^{j}`: 0, `Y^{j−1}`: `b(∂ − j/r)`.
pub fn divergence(vector: &ChannelBasis, scalar: &ChannelBasis) -> Result<FirstOrderBlockOperator> {
    require(scalar, BasisKind::Scalar)?;
    require(vector, BasisKind::Vector)?;
    let mut op = FirstOrderBlockOperator::zeros(scalar, vector);
    for (col, c) in vector.channels.iter().enumerate() {
        let Some(row) = scalar.index_of(c.j, c.j, c.m) else {
            continue;
        };
        let (a, b) = ladder(c.j);
        let j = f64::from(c.j);
        if c.l == c.j + 1 {
            op.set(row, col, Complex64::new(-a, 0.0), j + 1.0);
        } else if c.l == c.j - 1 {
            op.set(row, col, Complex64::new(b, 0.0), -j);
        }
    }
    Ok(op)
}

/// `∇×(ψ/r · Y^ℓ_{jm})` within a vector basis (it preserves `j` and `m`).
pub fn curl(vector: &ChannelBasis) -> Result<FirstOrderBlockOperator> {
    require(vector, BasisKind::Vector)?;
    let mut op = FirstOrderBlockOperator::zeros(vector, vector);
    let i = Complex64::i();
    for (col, c) in vector.channels.iter().enumerate() {
        let (a, b) = ladder(c.j);
        let j = f64::from(c.j);
        let (l, m) = (c.l, c.m);
        if l == c.j + 1 {
            if let Some(row) = vector.index_of(c.j, c.j, m) {
                op.set(row, col, i * b, j + 1.0);
            }
        } else if l == c.j {
            if let Some(row) = vector.index_of(c.j, c.j + 1, m) {
                op.set(row, col, i * b, -(j + 1.0));
            }
            if let Some(row) = vector.index_of(c.j, c.j - 1, m) {
                op.set(row, col, i * a, j);
            }
        } else if let Some(row) = vector.index_of(c.j, c.j, m) {
            op.set(row, col, i * a, -j);
        }
    }
    Ok(op)
}

/// The blocks needed to assemble the generalized Helmholtz operator on a
/// vector basis.
#[derive(Clone, Debug)]
pub struct OperatorBlocks {
    /// The physical channel basis.
    pub basis: ChannelBasis,
    /// Enlarged vector basis holding `ε·E` before the divergence.
    pub inner_vector: ChannelBasis,
    /// Scalar basis holding `∇·(εE)`.
    pub inner_scalar: ChannelBasis,
    /// `∇` from `inner_scalar` into `inner_vector`.
    pub grad: FirstOrderBlockOperator,
    /// `∇·` from `inner_vector` into `inner_scalar`.
    pub div: FirstOrderBlockOperator,
    /// `∇×` on `basis`.
    pub curl: FirstOrderBlockOperator,
}

/// Smallest internal scalar truncation that keeps `∇·(εE)` exact.
pub fn minimal_internal_lmax(basis: &ChannelBasis) -> u32 {
    (basis.max + basis.source_lmax + 1).max(0) as u32
}

impl OperatorBlocks {
    /// Blocks for `basis` with internal scalar truncation `internal_lmax`
    /// (default [`minimal_internal_lmax`]).
    pub fn new(basis: &ChannelBasis, internal_lmax: Option<u32>) -> Result<Self> {
        require(basis, BasisKind::Vector)?;
        let need = minimal_internal_lmax(basis);
        let lx = internal_lmax.unwrap_or(need);
        if lx < need {
            return invalid(format!(
                "internal scalar truncation {lx} below jmax + source_lmax + 1 = {need}"
            ));
        }
        let inner_vector = ChannelBasis::vector(lx, basis.source_lmax.max(0) as u32);
        let inner_scalar = ChannelBasis::scalar(lx, basis.source_lmax.max(0) as u32);
        Ok(Self {
            grad: gradient(&inner_scalar, &inner_vector)?,
            div: divergence(&inner_vector, &inner_scalar)?,
            curl: curl(basis)?,
            basis: basis.clone(),
            inner_vector,
            inner_scalar,
        })
    }

    /// `∇(∇·)` on the enlarged vector basis.
    pub fn grad_div(&self) -> Result<SecondOrderBlockOperator> {
        self.grad.compose(&self.div)
    }

    /// `∇×∇×` on the physical basis.
    pub fn curl_curl(&self) -> Result<SecondOrderBlockOperator> {
        self.curl.compose(&self.curl)
    }
}
