//! Numerical engine for rate-induced tipping in nonautonomous ODEs
//! `x' = f(x, Λ(τ)) / r` driven by asymptotically constant inputs.
//!
//! Everything here is `no_std` + `alloc`. File formats, argv handling and
//! threads live in the `ratekit` companion crate.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

pub mod compact;
pub mod equilibria;
mod error;
pub mod expr;
pub mod manifolds;
pub mod numcore;
pub mod systems;
pub mod tipping;

pub use error::{Error, Result};
