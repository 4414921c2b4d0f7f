//! Numerical laboratory for pushed and pulled fronts of monostable
//! reaction-diffusion equations `u_t = Δu + f(u)`.
//!
//! The numerics are generic over the scalar type (`f32` or `f64`, see
//! [`Real`]); the aliases at the crate root fix the scalar to `f64`, which is
//! what the experiments use.

pub mod comparison;
pub mod fit;
pub mod front_dynamics;
pub mod ode;
pub mod pde1d;
pub mod pde2d;
pub mod profile;
pub mod reaction;
pub mod scalar;

pub use scalar::Real;

/// `f64` instantiations.
pub type Reaction = reaction::ReactionTerm<f64>;
pub type Profile = profile::FrontProfile<f64>;
pub type Grid1 = pde1d::Grid1D<f64>;
pub type Field1 = pde1d::Field1D<f64>;
pub type Grid2 = pde2d::Grid2D<f64>;
pub type Field2 = pde2d::Field2D<f64>;
pub type Graph = front_dynamics::GraphField<f64>;
pub type Residual = comparison::ResidualReport<f64>;
pub type Certificate = comparison::PairCertificate<f64>;
