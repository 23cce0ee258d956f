//! Reference implementations used only by tests.
//!
//! Everything here is written directly from the definitions, without going
//! through the library's graph, program executor or geometry kernels, so
//! agreement between the two is meaningful.

pub mod answers;
pub mod geometry;
pub mod relation;
