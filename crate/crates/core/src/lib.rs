//! Exact computation of dynamic equilibria in networks with deterministic
//! queues, and tools for studying Braess-type paradoxes in them.

pub mod braess;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod flow;
pub mod gen;
pub mod lp;
pub mod network;
pub mod presets;
pub mod pwl;
pub mod scalar;
pub mod topology;

pub use error::{Error, Result};
pub use flow::FlowOverTime;
pub use network::{Edge, Instance, Network};
pub use pwl::Pwl;
pub use scalar::{Rational, Scalar};
