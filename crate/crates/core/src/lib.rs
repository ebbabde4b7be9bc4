//! Simulation and compilation for a universally programmable quantum
//! cellular automaton built from `Swap` and the controlled `π/4` rotation `G`.

pub mod autoqca;
pub mod ccqca;
pub mod compiler;
pub mod gatelib;
pub mod oracle;
pub mod register;
pub mod statevec;
pub mod universal;
