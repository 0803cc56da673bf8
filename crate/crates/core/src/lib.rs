//! Valued constraint satisfaction problems and their Sherali-Adams relaxations.
//!
//! Everything here is exact: weights are rationals (plus `∞` for infeasible
//! tuples) and linear programs are solved with a rational simplex method.
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod consistency;
pub mod error;
pub mod gadgets;
pub mod gap;
pub mod instance;
pub mod lp;
pub mod rational;
pub mod relation;
pub mod sa;
pub mod tuples;

pub use error::{Error, Result, DEFAULT_BUDGET};
pub use instance::{Assignment, Constraint, Instance};
pub use lp::{check_point, solve_lp, LinearProgram, LpResult, Sense};
pub use rational::{ExtRat, Rational};
pub use relation::WeightedRelation;
