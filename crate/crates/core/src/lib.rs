pub mod chacha;
pub mod circuits;
pub mod cli;
pub mod leakage;
pub mod locking;
pub mod netlist;
pub mod profile;
pub mod rvc;
pub mod sweep;
