//! Program IR for private computations, the rewrite passes that vectorize it,
//! a static cost model and an interpreter that runs it on the engine.
//!
//! Programs are s-expressions, one top-level form per line, `#` comments:
//!
//! ```text
//! (assign z (zeros (4)))
//! (loop i 0 4 (assign (idx z i) (mul (idx (priv x (4)) i) (idx (priv y (4)) i))))
//! (reveal z)
//! ```

mod cost;
mod interp;
mod ir;
mod parse;
pub mod passes;

pub use cost::{CostModel, CostReport};
pub use interp::{interpret, Bindings, Outcome, Value};
pub use ir::{Expr, Idx, Program, Stmt, Target};
pub use parse::parse_program;
pub use passes::{check_reject, common_factor, optimize, vectorize_expr, vectorize_loops};
