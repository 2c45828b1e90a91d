//! Desk-scale experiments on degenerating surface-group representations.

pub mod charvar;
pub mod flat;
pub mod harmonic;
pub mod octagon;
pub mod rtree;
pub mod sl2c;
pub mod words;
