//! Numerical building blocks: special functions and quadrature.

pub mod grid;
pub mod quad;
pub mod special;

pub use grid::LogGrid;
pub use quad::{
    gauss_legendre, integrate, integrate_log_domain, integrate_oscillatory_im,
    integrate_oscillatory_im_from, integrate_panels, integrate_semi_infinite,
    integrate_semi_infinite_scaled, Estimate, FixedRule, InfiniteMap, QuadratureSpec,
};
pub use special::{
    generalized_incomplete_gamma, hyp2f1, lower_incomplete_gamma, reg_lower_gamma,
    reg_lower_gamma_complex, reg_upper_gamma, scaled_interval_gamma, upper_incomplete_gamma,
    SeriesSpec,
};
