//! Angular-momentum algebra: Wigner symbols, (vector) spherical harmonics,
//! channel bases and the coupling tensors that turn a multipole source into
//! channel-mixing matrices.

pub mod basis;
pub mod coupling;
pub mod harmonics;
pub mod quadrature;
pub mod wigner;

pub use basis::{BasisKind, Channel, ChannelBasis};
pub use coupling::{scalar_coupling, vector_coupling, CouplingTensor};
pub use harmonics::{
    spherical_basis_vector, spherical_harmonic, transverse_combination, vector_spherical_harmonic,
    Polarization, Vec3,
};
pub use quadrature::SphereQuadrature;
pub use wigner::{clebsch_gordan, wigner3j, wigner6j};
