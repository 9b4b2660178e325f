//! Exact multivariate polynomials over `ℝ²ⁿ = {(x, y)}` and the tests
//! deciding which polynomials lie in the closure of sums of products of
//! ridge functions `g(⟨w, x⟩) h(⟨w, y⟩)`.

mod closure;
mod mpoly;
mod multiindex;
mod parse;

pub use closure::{
    apply_diff, closure_check, enumerate_delta, find_witness, group_sums, in_closure_homogeneous, index_b, index_e,
    point_on_l, vanishes_on_l, vanishing_basis, vanishing_basis_elements, BasisElement, ClosureVerdict, DeltaSet,
    Witness, MAX_DEGREE, MAX_HALF_DIM,
};
pub use mpoly::{integer, rational, variable_name, MPoly};
pub use multiindex::MultiIndex;
pub use num_rational::BigRational;
pub use parse::{parse_decimal, parse_poly, parse_poly_in};
