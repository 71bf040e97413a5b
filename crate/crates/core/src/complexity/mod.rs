//! Exact calculators for finite classes over finite instance sets.

mod class;
mod fat;
mod rademacher;

pub(crate) use class::cap;
pub use class::{Caps, FiniteClass};
pub use fat::{
    littlestone_dim, seq_fat, seq_fat_of_subclass, seq_fat_with, stat_fat, verify_certificate,
    BinaryTree, FatCertificate, SeqFat, SeqFatOracle, StatFat, Tree, WitnessTree,
};
pub use rademacher::{seq_rademacher, stat_rademacher};
