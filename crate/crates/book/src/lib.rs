//! The guide under `book/` is compiled here so that `cargo test --doc`
//! runs every Rust block in it. One module per chapter keeps failures
//! traceable to their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/qseries.md")]
pub mod qseries {}
#[doc = include_str!("../../../book/src/hecke.md")]
pub mod hecke {}
#[doc = include_str!("../../../book/src/sympow.md")]
pub mod sympow {}
#[doc = include_str!("../../../book/src/twosquares.md")]
pub mod twosquares {}
#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("../../../book/src/lvalues.md")]
pub mod lvalues {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
