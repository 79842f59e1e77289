//! Small numerical kernels: bracketed root finding, bounded maximization,
//! dense linear solves, Levenberg-Marquardt least squares and a Nelder-Mead
//! simplex search. All are generic over [`Scalar`](crate::Scalar).

mod linalg;
mod lm;
mod roots;
mod simplex;

pub use linalg::{invert, solve};
pub use lm::{levenberg_marquardt, LmFit, LmOptions};
pub use roots::{brent, golden_max, RootError};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
