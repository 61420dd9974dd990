//! Placement delivery arrays (PDAs) and the cascaded coded distributed
//! computing (CDC) schemes they generate.
//!
//! The pipeline goes: build or parse a PDA ([`pda`], [`builders`]), compile it
//! together with a replication factor into a complete MapReduce shuffle plan
//! ([`compile`]), execute that plan bit-exactly on synthetic data ([`sim`]),
//! and evaluate the closed-form load expressions with exact rational
//! arithmetic ([`analysis`]).

pub mod analysis;
pub mod builders;
pub mod compile;
pub mod pda;
pub mod rational;
pub mod sim;

pub use compile::{compile, CompiledScheme, FunctionAssignment};
pub use pda::{Pda, PdaEntry, PdaProfile};
pub use rational::Rational;
