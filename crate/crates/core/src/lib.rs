pub mod branch_systems;
pub mod cli;
pub mod error;
pub mod measures;
pub mod numfmt;
pub mod oracle;
pub mod series;
pub mod spectrum;
pub mod thermo;
