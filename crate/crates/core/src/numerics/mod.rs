//! Quadrature, special functions, ODE integration and root finding.

pub mod faddeeva;
pub mod gamma;
pub mod ode;
pub mod quad;
pub mod roots;

pub use faddeeva::{erfc, faddeeva, gaussian_segment, gaussian_segment_c, gaussian_segment_k};
pub use gamma::{arg_gamma, digamma, log_gamma_complex};
pub use ode::{integrate_ode, integrate_ode_with, OdeConfig, OdeSolution};
pub use quad::{
    integrate_adaptive, integrate_gaussian_weight, integrate_real_line, integrate_segments_par, integrate_to_infinity,
    integrate_with, QuadConfig, QuadResult,
};
pub use roots::{solve_root_1d, solve_root_2d};
