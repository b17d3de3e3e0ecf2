pub mod exprs;
pub mod fixtures;
pub mod gen;
pub mod suites;
