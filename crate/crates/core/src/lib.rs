//! Multi-energy-system planning toolkit.
//!
//! Assembles multi-period dispatch LPs over coupled energy carriers, extends
//! them with investment variables to equivalent-annual-cost and multi-horizon
//! pathway problems (optionally with concave learning-cost curves encoded as
//! SOS2 MILPs), and solves them either monolithically or by Benders
//! decomposition. The LP kernel returns exact row duals, which the Benders
//! loop turns into optimality cuts.

pub mod benders;
pub mod invest;
pub mod learning;
pub mod lp;
pub mod milp;
pub mod model;
