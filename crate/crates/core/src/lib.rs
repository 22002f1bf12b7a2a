pub mod analyzers;
pub mod cluster;
pub mod interface;
pub mod mc;
pub mod qsim;
pub mod repeater;
mod serde_inf;
