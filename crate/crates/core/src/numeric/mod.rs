//! Small numerical kernels shared by the analytic modules.

pub mod banded;
pub mod quad;
pub mod rational;
pub mod roots;
pub mod stats;
