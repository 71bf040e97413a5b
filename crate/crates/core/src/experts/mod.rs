//! Exponential weights, Fat-SOA and the forced-label expert construction.

mod ewa;
mod generate;
mod soa;

pub use ewa::{ewa_bound, ewa_run, Ewa, EwaRun};
pub use generate::{
    agnostic_supervised_run, expert_count, generate_experts, generate_with, generic_bound,
    AgnosticRun, ExpertSet, ExpertSpec, ExpertState, ScaleSummary,
};
pub use soa::{alpha_grid, discretize, fat_soa_run, FatSoa, FatSoaRun, SoaUpdate};

#[cfg(test)]
mod tests;
