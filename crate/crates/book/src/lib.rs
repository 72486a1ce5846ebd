//! The guide's chapters, compiled so their snippets run as doc-tests.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/segment-model.md")]
pub mod segment_model {}

#[doc = include_str!("../../../book/src/inverse-dynamics.md")]
pub mod inverse_dynamics {}

#[doc = include_str!("../../../book/src/grf-analysis.md")]
pub mod grf_analysis {}

#[doc = include_str!("../../../book/src/perception.md")]
pub mod perception {}

#[doc = include_str!("../../../book/src/active-cane.md")]
pub mod active_cane {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
