//! Complex scalar, polynomial and least-squares substrate.

mod bipoly;
mod fit;
mod poly;
mod roots;

pub use bipoly::{monomials, top_form, BiPoly, TopForm};
pub use fit::{fit_bivariate, min_singular_vector, solve_least_squares, BivariateFit};
pub use poly::CPoly;
pub use roots::{cubic_roots, poly_roots, poly_roots_with, quadratic_roots, RootFindConfig};
