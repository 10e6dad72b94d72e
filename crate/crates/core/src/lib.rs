//! Exact triangulations and flips of point configurations inside a product of
//! two simplices, with the permutohedral constructions built on top of them.

mod dsu;

pub mod config;
pub mod lp;
pub mod regular;
pub mod triangulation;
pub mod perm3;
pub mod bigzono;
pub mod prodsimp;
