//! Envy-free division of the unit interval when a dragon either grabs one of the
//! pieces or swallows one of the players.
//!
//! The crate computes a cut together with a *decision tree*: every player (or box)
//! is announced two candidates in advance, and for every possible dragon action the
//! tree is rooted at the dragon to produce an allocation, which is then checked
//! against the valuations directly.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cake;
pub mod chessboard;
pub mod cli;
pub mod error;
pub mod kkm;
pub mod marriage;
mod matching;
pub mod params;
pub mod scenario;
pub mod search;
mod ties;
pub mod tree;
pub mod valuation;

pub use cake::{tiles_from_cut, Cut, SimplexPoint, Tile};
pub use error::{Error, Result};
pub use marriage::{
    brute_force_tree_representatives, check_dragon_condition, sdr_avoiding, spanning_tree_representatives,
    RepresentativeTree, SetFamily,
};
pub use params::Params;
pub use tree::{is_labeled_spanning_tree, root_tree, tree_choice_probabilities, Assignment, LabeledTree, TreeEdge};
pub use valuation::{PiecewiseDensity, Regime, ValuationProfile};
