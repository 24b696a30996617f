//! Static arbitrage detection and repair for European call quotes.

pub mod constraints;
pub mod lp;
pub mod normalize;
pub mod repair;
pub mod stress;
pub mod synthetic;
