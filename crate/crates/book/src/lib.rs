//! The guide's chapters, one module each, so `cargo test` runs every Rust
//! snippet in `book/src` as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/signals.md")]
pub mod signals {}
#[doc = include_str!("../../../book/src/risk.md")]
pub mod risk {}
#[doc = include_str!("../../../book/src/dayahead.md")]
pub mod dayahead {}
#[doc = include_str!("../../../book/src/hourahead.md")]
pub mod hourahead {}
#[doc = include_str!("../../../book/src/operation.md")]
pub mod operation {}
#[doc = include_str!("../../../book/src/campaign.md")]
pub mod campaign {}
#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}
