pub mod cli;
pub mod engine;
pub mod error;
pub mod io;
pub mod orbit;
pub mod relay;
pub mod scalar;
pub mod stability;
