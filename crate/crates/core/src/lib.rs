//! Variable phase S-matrices for scattering off asymmetric sources.
//!
//! Three engines share one radial integrator: the scalar Helmholtz equation
//! with a potential `V(r⃗)`, its vector (spin-1) counterpart, and Maxwell's
//! equations in an inhomogeneous, possibly dispersive permittivity `ε(r⃗)`.
//! Sources are given as multipole moments; the solver integrates the
//! regular solution outward in a coupled partial-wave basis and reads `S`
//! off at a fitting radius outside the source, at real or complex `k`.
//!
//! ```no_run
//! use num_complex::Complex64;
//! use varphase::angular::ChannelBasis;
//! use varphase::helmholtz;
//! use varphase::source::square_well;
//! use varphase::variable_phase::SolveOptions;
//!
//! let well = square_well(-1.0, 1.0, 50.0).unwrap();
//! let basis = ChannelBasis::scalar(2, 0);
//! let res = helmholtz::s_matrix(&well, &basis, Complex64::new(1.0, 0.0), &SolveOptions::default()).unwrap();
//! println!("unitarity residual {:.1e}", res.diagnostics.unitarity_residual);
//! ```

pub mod angular;
pub mod error;
pub mod helmholtz;
pub mod linalg;
pub mod maxwell;
pub mod ode;
pub mod oracles;
pub mod radial;
pub mod scattering;
pub mod source;
pub mod spectra;
pub mod variable_phase;
