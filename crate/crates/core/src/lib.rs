//! Cuntz-algebra implementers for Bogoliubov endomorphisms of the CCR
//! algebra, realized on particle-number-truncated bosonic Fock space.

pub mod bogoliubov;
pub mod cli;
pub mod corpus;
pub mod decomposition;
pub mod disk;
pub mod error;
pub mod exec;
pub mod fock;
pub mod implementer;
pub mod linalg;
pub mod oneparticle;
pub mod report;

pub use error::{Error, Result};
