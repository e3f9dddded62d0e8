//! Restricted Lie algebras of Cartan type over finite fields.
//!
//! The crate provides exact arithmetic for divided power algebras O(m;n), the Witt
//! algebras W(m;n) and their special, Hamiltonian and contact subalgebras, the
//! restricted p-map computed through faithful operator realizations, automorphism
//! actions with explicit normal-form reductions of nilpotent elements, the
//! semisimple semidirect products (S⊗O(m;1))⋊D, and the Zassenhaus algebra W(1;n)
//! with its minimal p-envelope.

pub mod automorphisms;
pub mod cartan_algebras;
pub mod cli;
pub mod divided_power;
pub mod error;
pub mod linalg;
pub mod maybe_rayon;
pub mod poly;
pub mod restricted;
pub mod rng;
pub mod scalars;
pub mod semidirect;
pub mod zassenhaus;

pub use error::{Error, Result};
pub use scalars::{Fe, FieldElement, FieldSpec};
