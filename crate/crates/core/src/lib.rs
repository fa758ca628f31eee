pub mod combinat;
pub mod exec;
pub mod lattice;
pub mod special;

pub use exec::Execution;
pub mod continuum;
pub mod pdx;
pub mod quadrature;
