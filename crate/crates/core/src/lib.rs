//! Exact algebra of truncated Chen-Fliess generating series.
//!
//! Series are sparse maps from words to exact rational coefficients,
//! truncated at a fixed word length. On top of the vector space structure
//! the crate provides the Cauchy and shuffle products, the composition
//! products used for cascades and multiplicative interconnections, the
//! Wiener-Fliess product with static maps, and closed-form multiplicative
//! feedback. The [`simulator`] module evaluates series numerically and
//! simulates the feedback loops directly, so every algebraic result can be
//! checked against a trajectory.

pub mod composition;
pub mod error;
pub mod feedback;
pub mod format;
pub mod products;
pub mod series;
pub mod simulator;
pub mod staticmaps;
pub mod words;

pub use composition::{compose, group_inverse, mixed_compose, mult_compose, DeltaSeries};
pub use error::{Error, ErrorClass, Result};
pub use feedback::{
    dynamic_feedback, iterate_dynamic_fixed_point, iterate_static_fixed_point, static_feedback,
    verify_dynamic_fixed_point, verify_static_fixed_point,
};
pub use products::{cauchy, cauchy_inverse, shuffle, shuffle_inverse, shuffle_power, shuffle_words};
pub use series::{integer, rational, Coefficient, Order, Series};
pub use simulator::{
    compare_loop_vs_formula, evaluate_fliess, iterated_integral, simulate_dynamic_loop, simulate_static_loop,
    ComparisonReport, Controller, Signal, SimConfig, Trajectory,
};
pub use staticmaps::{cauchy_comm, cauchy_inverse_comm, wiener_fliess, CommutativeSeries, Exponents};
pub use words::{Alphabet, Letter, Word};
