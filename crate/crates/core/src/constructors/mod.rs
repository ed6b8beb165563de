//! State constructions: named examples, the pairing-pattern truncations,
//! the seed-and-extend iteration, and the bipartite repair.

pub mod corpus;
pub mod method1;
pub mod method2;
pub mod pairing;
pub mod repair;
