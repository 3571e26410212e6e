//! Markov-perfect equilibria of dynamic duopoly pricing models.
//!
//! Three models share one toolkit:
//!
//! * [`lbd`]: learning by doing on a capped experience grid, solved by
//!   backward induction and cross-checked by value iteration;
//! * [`switching`]: insider/outsider pricing with a switching cost, plus
//!   average-price comparative statics in the switching cost;
//! * [`predation`]: the limit of the learning model when the laggard may exit.
//!
//! All of them reduce to scalar monotone equations in the preference-shock
//! functions of [`shock_dist`], solved by [`scalar_root`]. [`sim`] runs
//! seeded Monte Carlo under solved policies.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod lbd;
pub mod predation;
pub mod scalar_root;
pub mod shock_dist;
pub mod sim;
pub mod switching;

pub use error::{Error, Result};
pub use lbd::{LbdEquilibrium, LbdParams, SolverConfig};
pub use predation::{PredationLimit, PredationParams};
pub use shock_dist::ShockDistribution;
pub use switching::{SwitchingEquilibrium, SwitchingParams};
