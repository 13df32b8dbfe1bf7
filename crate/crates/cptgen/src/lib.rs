//! Elicitation documents, table export, verification and the what-if
//! service built on `cptgen-core`.

pub mod document;
pub mod export;
pub mod questions;
pub mod verify;
pub mod service;
