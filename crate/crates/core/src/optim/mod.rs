//! Numerical engines: a dense simplex LP, a log-barrier saddle-point solver
//! and Blahut-Arimoto iterations.

pub mod ba;
pub mod barrier;
pub mod lp;
pub(crate) mod phi;
