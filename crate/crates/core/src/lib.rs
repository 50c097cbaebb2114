//! Controller synthesis for two-player partially observable stochastic games
//! with LTL objectives, via finite state controllers and the global Markov
//! chain they induce.

pub mod chain;
pub mod controller;
pub mod dot;
pub mod dra;
pub mod error;
pub mod graph;
pub mod grid;
pub mod ltl;
pub mod maxmin;
pub mod optimize;
pub mod posg;
pub mod product;
pub mod report;
pub mod simulation;
pub mod synthesis;
pub mod word;

pub use error::{Error, Result};
