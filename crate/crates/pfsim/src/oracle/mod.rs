//! Exact small-volume oracles: enumeration, transfer matrices, frontier
//! dynamic programming and the checks built on them.

pub mod exact;
pub mod graph;
pub mod frontier;
pub mod quadrature;
pub mod transfer;
pub mod checks;
