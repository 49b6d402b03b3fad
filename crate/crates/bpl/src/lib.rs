//! Command-line front end for the `bpl-core` demos and verification suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod demos;
pub mod error;
pub mod output;
