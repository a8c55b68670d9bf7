//! Weakest preconditions for quantum programs whose predicates are POVMs.
//!
//! Predicates are finite families of effects `0 ⪯ F_a ⪯ I` with `Σ F_a ⪯ I`.
//! Programs are positive trace-preserving maps, held as column-stacking
//! superoperators and optionally as Kraus lists. The weakest precondition
//! of `F` under `C` is the Hilbert-Schmidt adjoint `C*` applied atom by atom;
//! [`wp::verify_triple`] decides Hoare triples against it, and
//! [`campaign`] checks the surrounding theory on seeded random instances.

pub mod campaign;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod predicate;
pub mod program;
pub mod sampling;
pub mod state;
pub mod tolerance;
pub mod wp;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use predicate::{OutcomeSpace, Predicate};
pub use program::QuantumProgram;
pub use state::DensityState;
pub use tolerance::ToleranceConfig;
