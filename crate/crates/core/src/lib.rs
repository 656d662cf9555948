pub mod catalog;
pub mod chart;
pub mod clifford;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod job;
pub mod linalg;
pub mod metricfile;
pub mod report;
pub mod spintractor;
pub mod tractor;
pub mod walker;

pub use chart::{Chart, Point};
pub use error::{Error, Result};
pub use expr::{parse_expr, Bindings, Compiled, Expr};
pub use report::Report;
