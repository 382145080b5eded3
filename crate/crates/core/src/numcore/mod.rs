//! Numerical kernels: adaptive Runge–Kutta, Newton, dense eigenproblems.

pub mod eigen;
pub mod linalg;
pub mod newton;
pub mod ode;

pub use eigen::{eigen, eigenvalues, left_eigenvector, EigenDecomposition};
pub use linalg::{dist2, dot, norm2, Lu, Matrix};
pub use newton::{newton, NewtonOptions, NewtonSolution};
pub use ode::{integrate, DenseStep, EventFn, OdeOptions, Solver, Termination, Trajectory};
