//! Taylor–Hood discretization of the slip-wall flow problem on
//! `V = {div v = 0, v = 0 on Γ₀, v_ν = 0 on Γ₁}` with the energy inner
//! product `⟨u, v⟩_V = ∫ 𝔻u : 𝔻v`.

mod problem;
pub mod quadrature;
pub mod space;

pub use problem::{
    ConstraintFunctionals, DiscreteProblem, Discretization, KKind, RKind, ScalarField, VectorField,
};
pub use space::VelocitySpace;
