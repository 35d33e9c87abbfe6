//! Exact computations in the dg-Hopf algebra of oriented directed graphs.

pub mod algebra;
pub mod axioms;
pub mod cli;
pub mod cobar;
pub mod feynman;
pub mod graph;
pub mod graphfile;
pub mod linalg;
pub mod lincomb;
pub mod perm;
pub mod polyalg;
