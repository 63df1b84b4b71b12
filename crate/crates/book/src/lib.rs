//! The chapters of `book/`, included so that their Rust blocks run as
//! doc-tests. There is no code here.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/predimension.md")]
pub mod predimension {}

#[doc = include_str!("../../../book/src/amalgamation.md")]
pub mod amalgamation {}

#[doc = include_str!("../../../book/src/measures.md")]
pub mod measures {}

#[doc = include_str!("../../../book/src/counterexample.md")]
pub mod counterexample {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
