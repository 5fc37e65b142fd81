//! Fair item reranking over a sequence of users where the accumulated
//! attention and relevance aggregates live as additive secret shares on two
//! non-colluding servers, and each user only ever sees a Laplace-perturbed
//! copy of `A - R`.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod mpc;
pub mod pipeline;
pub mod protocol;
pub mod ring;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
