//! Electromagnetic scattering off a position-dependent permittivity.
//!
//! Maxwell's curl-curl operator has a zero eigenvalue on longitudinal
//! fields, so its radial reduction has a singular leading coefficient.
//! Instead the solver works with the generalized Helmholtz equation
//!
//! ```text
//! ∇×∇×E − ε∇[∇·(εE)] = k² ε E,
//! ```
//!
//! whose transverse solutions are exactly Maxwell's while the longitudinal
//! ones acquire wave number `k`. The radial equation
//! `−d₂F'' + d₁F' + d₀F = 0` has an invertible `d₂`; the S-matrix follows
//! from the modified Wronskian `𝒲 − Φᵗ D₁ F` and is finally projected onto
//! the transverse (M, N) modes.

mod assembly;
mod operators;
mod solver;

pub use assembly::{MaxwellOperator, OperatorTriple};
pub use operators::{
    curl, divergence, gradient, minimal_internal_lmax, FirstOrderBlockOperator, OperatorBlocks,
    SecondOrderBlockOperator,
};
pub use solver::{
    gh_profiles, maxwell_s_matrix, maxwell_s_matrix_for, reconstruct_wavefunction, solve_operator,
    transverse_isometry, transverse_projector, GhProfiles, Wavefunction, COMMUTATOR_WARNING,
};
