//! Code listings of the guide in `book/src`, compiled and run as doctests.
//! One module per chapter so a failing listing is easy to locate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/dreams.md")]
pub mod dreams {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/appearance.md")]
pub mod appearance {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/propagation.md")]
pub mod propagation {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}
#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
