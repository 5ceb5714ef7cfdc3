//! Numerical laboratory for the moduli space of quadratic rational maps.
//!
//! The crate reconstructs the multiplier curves `Per_n(w)` in Milnor's
//! `(sigma1, sigma2)` coordinates, measures their intersections with the
//! line at infinity, estimates Lyapunov exponents of the maximal entropy
//! measure by backward-orbit Monte Carlo, and carries out the exact
//! angle-doubling and totient-series bookkeeping behind limb masses and
//! Lelong weights.
//!
//! The numerical substrate (`algebra`, `grid`) is generic over the scalar
//! type through [`scalar::Real`]; the dynamics layers work at `f64`, where
//! all tolerances in this crate are calibrated. Concrete aliases for the
//! common instantiations live at the crate root.

pub mod acceptance;
pub mod algebra;
pub mod angles;
pub mod error;
pub mod grid;
pub mod lyapunov;
pub mod mandel;
pub mod moduli;
pub mod rng;
pub mod scalar;
pub mod spectra;
pub mod sphere;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex scalar over any supported real type.
pub type C<T> = num_complex::Complex<T>;
/// The concrete complex type used by the dynamics layers.
pub type C64 = num_complex::Complex64;
/// Univariate complex polynomial over `f64`.
pub type CPoly64 = algebra::CPoly<f64>;
/// Bivariate complex polynomial over `f64`.
pub type BiPoly64 = algebra::BiPoly<f64>;
/// Scalar field sampled on a rectangular slice grid, over `f64`.
pub type GridField64 = grid::GridField<f64>;
/// Nonnegative cell weights on a rectangular slice grid, over `f64`.
pub type GridMeasure64 = grid::GridMeasure<f64>;
