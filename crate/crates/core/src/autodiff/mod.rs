//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{grad_check, grad_check_params, relative_error, GradCheckReport};
pub use params::{ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, UnaryFn, Var};
