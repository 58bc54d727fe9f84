//! Analytic quantities of the limiting point process of scaled component
//! sizes of `G(n, p)` in the critical window `p = 1/n + lambda n^(-4/3)`,
//! and two independent Monte Carlo samplers for it.

pub mod bm_sim;
pub mod branching;
pub mod error;
pub mod excursion_mgf;
pub mod extremes;
pub mod graph_sim;
pub mod intensity;
pub mod moments;
pub mod points;
pub mod quadrature;
pub mod records;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
