pub mod barriers;
pub mod config;
pub mod domain_grid;
pub mod error;
pub mod free_boundary;
pub mod growth;
pub mod harness;
pub mod linalg;
pub mod orbits;
pub mod profiles;
pub mod quadrature;
pub mod solver;
pub mod vector_field;
