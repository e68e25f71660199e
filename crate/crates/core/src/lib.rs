//! Trade gravity estimation, correspondence analysis with Ward
//! classification, and aggregation of firm capital-control links for
//! Central-East European economies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ca;
pub mod cli;
pub mod domain;
pub mod error;
pub mod gravity;
pub mod ingest;
pub mod network;
pub mod plot;
pub mod synth;

pub use error::{Error, Result, ValidationError};
