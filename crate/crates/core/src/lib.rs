//! Regularized evolution over hybrid classical/quantum actor-critic
//! networks trained with PPO on cart-pole.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the `qnas` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cartpole;
pub mod dna;
pub mod evolution;
pub mod hybridnet;
pub mod mutation;
pub mod ppo;
pub mod qsim;

pub use dna::{parse_genome, resolve_plan, serialize_genome, validate, Genome, LayerGene, NetworkPlan};
pub use mutation::{mutate, repair, MutationKind};
