//! Numerical laboratory for greedy-approximation constants of conditional
//! bases in finite-dimensional sequence spaces.

pub mod bases;
pub mod cli;
pub mod conditionality;
pub mod greedy;
pub mod recipe;
pub mod report;
pub mod scenarios;
pub mod search;
pub mod spaces;
pub mod witness;
