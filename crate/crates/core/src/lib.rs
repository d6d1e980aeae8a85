//! Symbolic and numeric tools for partial differential equations that describe
//! pseudo-spherical surfaces.

pub mod expr;
pub mod forms;
pub mod catalog;
pub mod sff;
pub mod solutions;
pub mod frame;
