//! Numerical primitives shared by every other module: dense linear algebra,
//! normal distribution functions and reproducible random streams.

pub mod linalg;
pub mod normal;
pub mod rng;

pub use linalg::{cholesky, solve_spd, Matrix};
pub use normal::{bvn_cdf, bvn_pdf, std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use rng::{draw_normal, draw_student_t, draw_uniform, Generator, MultivariateT, RngStream};
