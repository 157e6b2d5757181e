//! Compute/network co-scheduling on DAGs whose nodes are both compute tasks
//! and network flows.
//!
//! The crate covers the graph model and its path-length calculus
//! ([`dag`], [`decompose`], [`length`]), host resources and rate allocation
//! ([`resource`]), a deterministic fluid simulator ([`sim`]), scheduling
//! policies ([`sched`]), and offline analysis over traces ([`analysis`]).

pub mod analysis;
pub mod dag;
pub mod decompose;
pub mod error;
pub mod exec;
pub mod io;
pub mod length;
pub mod resource;
pub mod sched;
pub mod sim;

pub use dag::{Dag, Path, Task, TaskId, TaskKind, EPS};
pub use error::{Error, Result};
