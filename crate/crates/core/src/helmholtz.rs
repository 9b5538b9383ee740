//! Scalar and vector Helmholtz scattering off an asymmetric potential,
//! `(−∇² + V − k²)ψ = 0`.

use num_complex::Complex64;

use crate::angular::{BasisKind, ChannelBasis, CouplingTensor};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scattering::{Diagnostics, ScatteringResult};
use crate::source::{FieldKind, MultipoleField};
use crate::variable_phase::{self, Coefficients, RadialOperator, SolveOptions};

/// `V̂_{ab}(r) = Σ_{ℓ'm'} V_{ℓ'm'}(r) Z(a; ℓ'm'; b)` from precomputed couplings.
pub fn assemble_potential_matrix(
    field: &MultipoleField,
    tensor: &CouplingTensor,
    r: f64,
) -> CMatrix {
    let values: Vec<Complex64> = tensor
        .entries()
        .iter()
        .map(|((l, m), _)| field.moment(*l, *m, r).v)
        .collect();
    tensor.contract(&values)
}

/// A potential acting on a scalar or vector channel basis.
#[derive(Clone, Debug)]
pub struct PotentialOperator {
    field: MultipoleField,
    tensor: CouplingTensor,
}

impl PotentialOperator {
    pub fn new(field: &MultipoleField, basis: &ChannelBasis) -> Result<Self> {
        if field.kind() != FieldKind::Potential {
            return Err(Error::InvalidArgument(
                "Helmholtz engines need a potential, not a permittivity".into(),
            ));
        }
        let tensor = CouplingTensor::new(basis, &field.pattern())?;
        Ok(Self {
            field: field.clone(),
            tensor,
        })
    }

    pub fn field(&self) -> &MultipoleField {
        &self.field
    }

    pub fn potential_matrix(&self, r: f64) -> CMatrix {
        assemble_potential_matrix(&self.field, &self.tensor, r)
    }
}

impl RadialOperator for PotentialOperator {
    fn basis(&self) -> &ChannelBasis {
        self.tensor.rows()
    }
    fn coefficients(&self, r: f64) -> Result<Coefficients> {
        Ok(Coefficients {
            u: self.potential_matrix(r),
            d1: None,
            d1p: None,
        })
    }
    fn support_radius(&self) -> f64 {
        self.field.support_radius()
    }
    fn core_radius(&self) -> f64 {
        self.field.core_radius()
    }
}

/// Default channel basis for a truncation order: scalar `ℓ ≤ max` or
/// vector `j ≤ max`.
pub fn basis_for(kind: BasisKind, max: u32, field: &MultipoleField) -> ChannelBasis {
    let src = field.source_lmax().max(0) as u32;
    match kind {
        BasisKind::Scalar => ChannelBasis::scalar(max, src),
        BasisKind::Vector => ChannelBasis::vector(max, src),
    }
}

/// Variable phase S-matrix of a potential at complex `k`.
pub fn s_matrix(
    field: &MultipoleField,
    basis: &ChannelBasis,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<ScatteringResult> {
    let op = PotentialOperator::new(field, basis)?;
    let out = variable_phase::solve(&op, k, opts)?;
    let diag = Diagnostics {
        fit_sensitivity: out.fit_sensitivity,
        cond_wronskian_plus: out.cond_plus,
        cond_wronskian_minus: out.cond_minus,
        r_small: out.geometry.r_small,
        r0: out.geometry.r0,
        r_big: out.geometry.r_big,
        steps: out.steps,
        ..Default::default()
    };
    ScatteringResult::new(k, basis.clone(), out.s, diag)
}

/// S from the outgoing solution alone, extrapolated to `r_tiny`.
pub fn s_matrix_direct(
    field: &MultipoleField,
    basis: &ChannelBasis,
    k: Complex64,
    r_tiny: f64,
    opts: &SolveOptions,
) -> Result<CMatrix> {
    let op = PotentialOperator::new(field, basis)?;
    variable_phase::solve_direct(&op, k, r_tiny, opts)
}

/// `T = (S − 1)/2` of a potential at `k`.
pub fn t_matrix(
    field: &MultipoleField,
    basis: &ChannelBasis,
    k: Complex64,
    opts: &SolveOptions,
) -> Result<CMatrix> {
    Ok(s_matrix(field, basis, k, opts)?.t())
}
