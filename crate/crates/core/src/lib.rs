//! Weighted network design games with proportional (Shapley) cost sharing
//! and affine edge costs.
//!
//! The model: players route positive weights along simple paths of a
//! directed multigraph; an edge used at total weight `w` costs
//! `a * w + b` and splits that cost among its users in proportion to
//! weight. The crate provides
//!
//! - the game accounting (loads, cost shares, social cost) and the
//!   potential `sum_e c_e(w_e) * log2(1 + w_e)` with its closed-form
//!   envelope ([`Instance`]),
//! - approximate best-response dynamics driven by exact shortest-path
//!   best responses, with certified output and iteration bounds
//!   ([`dynamics`]),
//! - exhaustive oracles for small instances, including a
//!   rational-arithmetic recheck mode ([`oracle`]),
//! - density-capped random instance generation and Monte-Carlo checks of
//!   the expectation bound behind the polynomial running-time guarantee
//!   ([`smoothed`]).
//!
//! Everything is deterministic given the inputs and explicit seeds.

#![forbid(unsafe_code)]

mod error;
mod game;

pub mod dynamics;
pub mod oracle;
pub mod smoothed;

pub use error::GameError;
pub use game::{
    AlphaBound, Edge, EdgeId, EdgeLoad, Instance, LoadMap, Player, PlayerId, PotentialBounds,
    Profile, VertexId, Violation, REL_TOL,
};
