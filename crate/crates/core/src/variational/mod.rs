//! Energy functionals of first-order Lagrangians over gridded domains:
//! first and second variation, Euler-Lagrange residuals, the conserved
//! Hamiltonian, and geodesic and harmonic-map solvers.

pub mod first;
pub mod lagrangian;
pub mod problem;
pub mod second;
pub mod solvers;

pub use first::{
    energy, euler_lagrange_residual, first_variation, first_variation_fd, first_variation_formula,
    first_variation_weak, hamiltonian, material_variation, relative_drift, residual_field, vary, EulerLagrangeResidual,
    FirstVariation,
};
pub use lagrangian::{Anisotropic, Kinetic, KineticMinusPotential, Lagrangian, Potential, SecondPartials};
pub use problem::{Boundary, BoundaryNode, Domain, EnergyProblem, FieldConfiguration, Grid, VariationField};
pub use second::{
    index_form_spectrum, normal_mode, require_critical, second_variation, second_variation_fd, second_variation_form,
    unit_normal, SecondVariation,
};
pub use solvers::{
    discrete_tension, gradient_flow_harmonic, shoot_geodesic, solve_geodesic, sup_tension, FlowResult, GeodesicCurve,
};
