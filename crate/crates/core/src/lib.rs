pub mod channels;
pub mod environment;
pub mod graph;
pub mod lock;
pub mod solver;
pub mod verspec;
pub mod vinca;
