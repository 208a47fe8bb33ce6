//! Configuration, execution and figure reproduction for the `feyncoh` binary.

pub mod config;
pub mod figures;
pub mod presets;
pub mod run;
pub mod units;
