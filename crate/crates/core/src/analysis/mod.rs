//! Closed-form predictions, fringe fitting and the dimension bound.

pub mod fit;
pub mod visibility;

pub use fit::{fit_fringe, fit_fringe_free_frequency, net_visibility, FitResult, FringePoint};
pub use visibility::{dimension_bound, fringe_contrast, half_turn_grid, max_visibility, predicted_fringe, DimensionBound};
