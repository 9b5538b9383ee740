//! Assembly of the generalized Helmholtz operator
//! `∇×∇×E − ε∇[∇·(εE)] − k²εE` on a vector channel basis.
//!
//! With `X = εE` and the blocks `∇ = G₁∂ + G₀/r`, `∇· = V₁∂ + V₀/r`,
//!
//! ```text
//! ∇∇·X = G₁V₁ X'' + (G₁V₀ + G₀V₁)/r X' + (G₀V₀ − G₁V₀)/r² X,
//! ```
//!
//! and every multiplication by `ε = Σ ε_{ℓm}(r) Y_ℓ^m` is a sum of constant
//! coupling matrices weighted by the radial moments. All products of
//! constant matrices are formed once, so evaluating the operator at a radius
//! only forms weighted sums. The permittivity is split as `ε = 1 + χ`; the
//! vacuum part `∇×∇× − ∇∇· − k² = −∇² − k²` is handled analytically so that
//! `U` and `D₁` vanish identically where `χ` does.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use super::operators::{OperatorBlocks, SecondOrderBlockOperator};
use crate::angular::{BasisKind, ChannelBasis, CouplingTensor};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cr, diag_right, inverse_checked, CMatrix, CVector};
use crate::source::{FieldKind, MultipoleField};
use crate::variable_phase::{Coefficients, RadialOperator};

/// `−d₂ F'' + d₁ F' + d₀ F = 0` at one radius.
#[derive(Clone, Debug)]
pub struct OperatorTriple {
    pub d2: CMatrix,
    pub d1: CMatrix,
    pub d0: CMatrix,
}

impl OperatorTriple {
    /// `(D₁, D₀) = (d₂⁻¹d₁, d₂⁻¹d₀)` and the condition number of `d₂`.
    pub fn reduced(&self) -> Result<(CMatrix, CMatrix, f64)> {
        let (inv, cond) = inverse_checked(&self.d2, "d2")?;
        Ok((&inv * &self.d1, &inv * &self.d0, cond))
    }
}

/// Products `Z_a P Z_b` of one ordered pair of weights.
#[derive(Clone, Debug)]
struct PairTerm {
    a: usize,
    b: usize,
    /// Coefficient of `X''` (`G₁V₁`).
    k2: CMatrix,
    /// Coefficient of `X'/r`.
    k1: CMatrix,
    /// Coefficient of `X/r²`.
    k0: CMatrix,
}

/// Value and first two radial derivatives of one weight.
type Weight = (Complex64, Complex64, Complex64);

/// The generalized Helmholtz operator of a permittivity at fixed `k²`.
#[derive(Debug)]
pub struct MaxwellOperator {
    blocks: OperatorBlocks,
    field: MultipoleField,
    k2: Complex64,
    /// Source moments `(ℓ, m)`, weight index `i + 1` (index 0 is the unit).
    moments: Vec<(i32, i32)>,
    /// `Z_a` on the physical basis, per moment.
    square: Vec<CMatrix>,
    pairs: Vec<PairTerm>,
    curl_curl: SecondOrderBlockOperator,
    l2: CVector,
    worst_cond: AtomicU64,
}

impl Clone for MaxwellOperator {
    fn clone(&self) -> Self {
        Self {
            blocks: self.blocks.clone(),
            field: self.field.clone(),
            k2: self.k2,
            moments: self.moments.clone(),
            square: self.square.clone(),
            pairs: self.pairs.clone(),
            curl_curl: self.curl_curl.clone(),
            l2: self.l2.clone(),
            worst_cond: AtomicU64::new(self.worst_cond.load(Ordering::Relaxed)),
        }
    }
}

/// `out += s · m`.
fn acc(out: &mut CMatrix, s: Complex64, m: &CMatrix) {
    out.zip_apply(m, |o, x| *o += s * x);
}

fn complex(m: &nalgebra::DMatrix<f64>) -> CMatrix {
    m.map(cr)
}

impl MaxwellOperator {
    /// Build the operator for `field` on the vector basis `basis` at wave
    /// number `k` (only `k²` enters). `internal_lmax` overrides the scalar
    /// truncation used between the divergence and the gradient.
    pub fn new(
        field: &MultipoleField,
        basis: &ChannelBasis,
        k: Complex64,
        internal_lmax: Option<u32>,
    ) -> Result<Self> {
        if field.kind() != FieldKind::Permittivity {
            return invalid("the Maxwell engine needs a permittivity, not a potential");
        }
        if basis.kind != BasisKind::Vector {
            return Err(Error::BasisMismatch(
                "the Maxwell engine needs a vector basis".into(),
            ));
        }
        if basis.source_lmax < field.source_lmax() {
            return invalid(format!(
                "basis built for source multipoles up to {} but the permittivity has ℓ = {}",
                basis.source_lmax,
                field.source_lmax()
            ));
        }
        let blocks = OperatorBlocks::new(basis, internal_lmax)?;
        let moments = field.pattern();
        let inner = &blocks.inner_vector;
        let embed = basis.embedding_in(inner).ok_or_else(|| {
            Error::BasisMismatch("physical basis not contained in the internal basis".into())
        })?;
        let mut e = CMatrix::zeros(inner.dim(), basis.dim());
        for (c, &r) in embed.iter().enumerate() {
            e[(r, c)] = cr(1.0);
        }
        let zin = CouplingTensor::between(inner, basis, &moments)?;
        let zout = CouplingTensor::between(basis, inner, &moments)?;
        let zsq = CouplingTensor::new(basis, &moments)?;

        // left factors (B ← Bx) and right factors (Bx ← B) per weight index
        let mut left = vec![e.transpose()];
        let mut right = vec![e];
        for (_, z) in zout.entries() {
            left.push(complex(z));
        }
        for (_, z) in zin.entries() {
            right.push(complex(z));
        }
        let square = zsq.entries().iter().map(|(_, z)| complex(z)).collect();

        let (g, d) = (&blocks.grad, &blocks.div);
        let p11 = &g.a * &d.a;
        let p10 = &g.a * &d.b;
        let p1 = &p10 + &g.b * &d.a;
        let p0 = &g.b * &d.b - &p10;
        let mut pairs = Vec::new();
        for (a, l) in left.iter().enumerate() {
            let l11 = l * &p11;
            let l1 = l * &p1;
            let l0 = l * &p0;
            for (b, rt) in right.iter().enumerate() {
                pairs.push(PairTerm {
                    a,
                    b,
                    k2: &l11 * rt,
                    k1: &l1 * rt,
                    k0: &l0 * rt,
                });
            }
        }
        let curl_curl = blocks.curl_curl()?;
        let l2 = basis.l_squared().map(cr);
        Ok(Self {
            blocks,
            field: field.clone(),
            k2: k * k,
            moments,
            square,
            pairs,
            curl_curl,
            l2,
            worst_cond: AtomicU64::new(0f64.to_bits()),
        })
    }

    pub fn field(&self) -> &MultipoleField {
        &self.field
    }

    /// The `k²` the operator was assembled for.
    pub fn k_squared(&self) -> Complex64 {
        self.k2
    }

    pub fn blocks(&self) -> &OperatorBlocks {
        &self.blocks
    }

    /// Largest condition number of `d₂` met so far.
    pub fn worst_d2_condition(&self) -> f64 {
        f64::from_bits(self.worst_cond.load(Ordering::Relaxed))
    }

    /// Weight jets: index 0 is the unit, then `χ_a = ε_a − ε_a(∞)`.
    fn weights(&self, r: f64) -> Vec<Weight> {
        let zero = cr(0.0);
        let mut w = vec![(cr(1.0), zero, zero)];
        for &(l, m) in &self.moments {
            let j = self.field.moment(l, m, r);
            w.push((j.v - self.field.asymptotic(l, m), j.d1, j.d2));
        }
        w
    }

    /// `Σ χ_a Z_a` on the physical basis.
    fn chi_matrix(&self, w: &[Weight]) -> CMatrix {
        let n = self.blocks.basis.dim();
        let mut out = CMatrix::zeros(n, n);
        for (z, wa) in self.square.iter().zip(&w[1..]) {
            if wa.0 != cr(0.0) {
                acc(&mut out, wa.0, z);
            }
        }
        out
    }

    /// The `ε∇∇·ε` part: coefficients of `ψ''`, `ψ'`, `ψ` and the radial
    /// derivatives of the first two, optionally without the unit–unit term.
    fn gauge_part(&self, r: f64, w: &[Weight], with_vacuum: bool) -> [CMatrix; 5] {
        let n = self.blocks.basis.dim();
        let mut out: [CMatrix; 5] = std::array::from_fn(|_| CMatrix::zeros(n, n));
        let (ir, ir2) = (cr(1.0 / r), cr(1.0 / (r * r)));
        for t in &self.pairs {
            if !with_vacuum && t.a == 0 && t.b == 0 {
                continue;
            }
            let (a0, a1, _) = w[t.a];
            let (b0, b1, b2) = w[t.b];
            if a0 == cr(0.0) && a1 == cr(0.0) {
                continue;
            }
            if b0 == cr(0.0) && b1 == cr(0.0) && b2 == cr(0.0) {
                continue;
            }
            let [c2, c1, c0, c2p, c1p] = &mut out;
            acc(c2, a0 * b0, &t.k2);
            acc(c1, a0 * b1 * 2.0, &t.k2);
            acc(c1, a0 * b0 * ir, &t.k1);
            acc(c0, a0 * b2, &t.k2);
            acc(c0, a0 * b1 * ir, &t.k1);
            acc(c0, a0 * b0 * ir2, &t.k0);
            let ab_p = a1 * b0 + a0 * b1;
            acc(c2p, ab_p, &t.k2);
            acc(c1p, (a1 * b1 + a0 * b2) * 2.0, &t.k2);
            acc(c1p, ab_p * ir, &t.k1);
            acc(c1p, -a0 * b0 * ir2, &t.k1);
        }
        out
    }

    /// The full triple `(d₂, d₁, d₀)` composed literally from the blocks.
    pub fn triple(&self, r: f64) -> OperatorTriple {
        let w = self.weights(r);
        let [t2, t1, t0, _, _] = self.gauge_part(r, &w, true);
        let n = self.blocks.basis.dim();
        let cc = &self.curl_curl;
        let eps = CMatrix::identity(n, n) + self.chi_matrix(&w);
        let c2 = &cc.p2 - t2;
        let c1 = &cc.p1 * cr(1.0 / r) - t1;
        let c0 = &cc.p0 * cr(1.0 / (r * r)) - t0 - eps * self.k2;
        OperatorTriple {
            d2: -c2,
            d1: c1,
            d0: c0,
        }
    }

    /// Apply the triple to radial data `(ψ, ψ', ψ'')`: `−d₂ψ'' + d₁ψ' + d₀ψ`.
    pub fn residual(&self, r: f64, psi: &CVector, dpsi: &CVector, ddpsi: &CVector) -> CVector {
        let t = self.triple(r);
        -(&t.d2 * ddpsi) + &t.d1 * dpsi + &t.d0 * psi
    }

    fn record_condition(&self, cond: f64) {
        self.worst_cond.fetch_max(cond.to_bits(), Ordering::Relaxed);
    }
}

impl RadialOperator for MaxwellOperator {
    fn basis(&self) -> &ChannelBasis {
        &self.blocks.basis
    }

    /// `d₂ = 1 + Δ` with `Δ` the `χ`-dependent part of the `ψ''` coefficient;
    /// `D₁ = d₂⁻¹d₁`, `U = d₂⁻¹[δd₀ − Δ(L̂²/r² − k²)]` and
    /// `D₁' = d₂⁻¹(d₁' − Δ' D₁)`.
    fn coefficients(&self, r: f64) -> Result<Coefficients> {
        let w = self.weights(r);
        let [delta, t1, t0, delta_p, t1p] = self.gauge_part(r, &w, false);
        let n = self.blocks.basis.dim();
        let d2 = CMatrix::identity(n, n) + &delta;
        let (inv, cond) = inverse_checked(&d2, "d2")?;
        self.record_condition(cond);
        let d1 = -t1;
        let free = self.l2.map(|x| x / (r * r) - self.k2);
        let dd0 = -t0 - self.chi_matrix(&w) * self.k2;
        let u = &inv * (dd0 - diag_right(&delta, &free));
        let big_d1 = &inv * &d1;
        let d1p = &inv * (-t1p - delta_p * &big_d1);
        Ok(Coefficients {
            u,
            d1: Some(big_d1),
            d1p: Some(d1p),
        })
    }

    fn support_radius(&self) -> f64 {
        self.field.support_radius()
    }

    fn core_radius(&self) -> f64 {
        self.field.core_radius()
    }
}
