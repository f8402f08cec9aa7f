//! Digraph reductions that delete arcs to avoid fixed orientations of short
//! cycles while keeping a prescribed minimum out-degree, together with the
//! gadget constructions showing where such reductions must fail, and
//! exhaustive oracles for small instances.
//!
//! The central question: given a forbidden digraph F, can every digraph of
//! large enough minimum out-degree be thinned to an F-free subdigraph that
//! still has minimum out-degree k? The [`reductions`] and [`regular`]
//! modules implement randomized arc-deletion schemes (driven by the
//! resampling engine in [`resample`]) whose outputs are re-verified
//! exhaustively; [`constructions`] builds the gadget families on which no
//! such reduction can succeed; [`oracle`] decides small cases by branch and
//! bound.

pub mod constructions;
pub mod digraph;
pub mod io;
pub mod oracle;
pub mod patterns;
pub mod reductions;
pub mod regular;
pub mod resample;
pub mod rng;

pub use digraph::{Digraph, Direction, GraphError};
pub use patterns::{Pattern, PatternError};
