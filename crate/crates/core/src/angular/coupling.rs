//! Channel-coupling coefficients for multiplication by a multipole source.
//!
//! For a source `V(r⃗) = Σ V_{ℓ'm'}(r) Y_{ℓ'}^{m'}`, the matrix acting on the
//! channel coefficients is `V̂[out, in] = Σ V_{ℓ'm'}(r) Z[out, in; ℓ'm']`,
//! where `Z` is the angular overlap `∫ Y_out* · Y_{ℓ'}^{m'} Y_in dΩ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::{BasisKind, ChannelBasis};
use super::wigner::{cg, w3j, w6j};
use crate::error::{Error, Result};

fn sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn triangle(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// Scalar coupling `Z_{ℓℓ'ℓ''}^{mm'm''} = ∫ Y_ℓ^m Y_{ℓ'}^{m'} Y_{ℓ''}^{m''*} dΩ`.
pub fn scalar_coupling(l: i32, m: i32, lp: i32, mp: i32, l2: i32, m2: i32) -> f64 {
    if m + mp != m2 || (l + lp + l2) % 2 != 0 || !triangle(l, lp, l2) {
        return 0.0;
    }
    if m.abs() > l || mp.abs() > lp || m2.abs() > l2 {
        return 0.0;
    }
    let pre = (f64::from((2 * l + 1) * (2 * lp + 1) * (2 * l2 + 1)) / (4.0 * PI)).sqrt();
    sign(m2) * pre * w3j(l, lp, l2, 0, 0, 0) * w3j(l, lp, l2, m, mp, -m2)
}

/// Vector coupling `Z = ∫ Y^{ℓ''}_{j''m''}* · Y^{ℓ}_{jm} Y_{ℓ'}^{m'} dΩ`,
/// evaluated through a 6j symbol and two Clebsch–Gordan coefficients.
#[allow(clippy::too_many_arguments)]
pub fn vector_coupling(j: i32, l: i32, m: i32, lp: i32, mp: i32, j2: i32, l2: i32, m2: i32) -> f64 {
    if m + mp != m2 || (l + lp + l2) % 2 != 0 || !triangle(l, l2, lp) || !triangle(j, j2, lp) {
        return 0.0;
    }
    if m.abs() > j || mp.abs() > lp || m2.abs() > j2 {
        return 0.0;
    }
    let phase = sign(l2 + lp + l + m2 + mp + 1);
    let pre = (f64::from((2 * j + 1) * (2 * j2 + 1) * (2 * l + 1) * (2 * l2 + 1))
        / (4.0 * PI * f64::from(2 * lp + 1)))
    .sqrt();
    phase * pre * w6j(l, l2, lp, j2, j, 1) * cg(l, 0, l2, 0, lp, 0) * cg(j, m, j2, -m2, lp, -mp)
}

/// Precomputed coupling matrices, one per source moment `(ℓ', m')`.
///
/// Entry `[row, col]` couples input channel `col` of `cols` into output
/// channel `row` of `rows`. Immutable once built.
#[derive(Clone, Debug)]
pub struct CouplingTensor {
    rows: ChannelBasis,
    cols: ChannelBasis,
    entries: Vec<((i32, i32), DMatrix<f64>)>,
}

impl CouplingTensor {
    /// Square tensor over a single basis.
    pub fn new(basis: &ChannelBasis, moments: &[(i32, i32)]) -> Result<Self> {
        Self::between(basis, basis, moments)
    }

    /// Rectangular tensor mapping `cols` channels into `rows` channels.
    pub fn between(
        rows: &ChannelBasis,
        cols: &ChannelBasis,
        moments: &[(i32, i32)],
    ) -> Result<Self> {
        if rows.kind != cols.kind {
            return Err(Error::BasisMismatch(
                "row and column bases differ in kind".into(),
            ));
        }
        let mut entries = Vec::with_capacity(moments.len());
        for &(lp, mp) in moments {
            if lp < 0 || mp.abs() > lp {
                return Err(Error::InvalidArgument(format!(
                    "invalid source moment ({lp}, {mp})"
                )));
            }
            let mut z = DMatrix::zeros(rows.dim(), cols.dim());
            for (r, out) in rows.channels.iter().enumerate() {
                for (c, inp) in cols.channels.iter().enumerate() {
                    if inp.m + mp != out.m {
                        continue;
                    }
                    z[(r, c)] = match rows.kind {
                        BasisKind::Scalar => scalar_coupling(inp.l, inp.m, lp, mp, out.l, out.m),
                        BasisKind::Vector => {
                            vector_coupling(inp.j, inp.l, inp.m, lp, mp, out.j, out.l, out.m)
                        }
                    };
                }
            }
            entries.push(((lp, mp), z));
        }
        Ok(Self {
            rows: rows.clone(),
            cols: cols.clone(),
            entries,
        })
    }

    pub fn rows(&self) -> &ChannelBasis {
        &self.rows
    }

    pub fn cols(&self) -> &ChannelBasis {
        &self.cols
    }

    pub fn entries(&self) -> &[((i32, i32), DMatrix<f64>)] {
        &self.entries
    }

    pub fn get(&self, lp: i32, mp: i32) -> Option<&DMatrix<f64>> {
        self.entries
            .iter()
            .find(|(k, _)| *k == (lp, mp))
            .map(|(_, z)| z)
    }

    /// `Σ_{ℓ'm'} values[i] · Z_i`, with `values` in the order the tensor was
    /// built with.
    pub fn contract(&self, values: &[Complex64]) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.rows.dim(), self.cols.dim());
        for ((_, z), &v) in self.entries.iter().zip(values) {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.zip_apply(z, |o, zz| *o += v * zz);
        }
        out
    }
}
