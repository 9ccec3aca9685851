pub mod config;
pub mod report;
pub mod surge;
pub mod trace;
