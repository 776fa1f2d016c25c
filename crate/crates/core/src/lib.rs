//! Completely positive maps `φ: M_n → M_k` with prescribed values `φ(A_ν) = B_ν`.
//!
//! The interpolation problem is rewritten as a feasibility problem for the
//! Choi matrix `Φ ⪰ 0` under real trace constraints `tr(C·Φ) = b`
//! ([`constraints`]), which is then solved by minimizing an exponential
//! potential or by an analytic-center barrier method ([`solvers`]).
//! Infeasibility is witnessed by linear-functional certificates
//! ([`certify`]) and solutions are turned into Kraus operators ([`choi`]).

pub mod certify;
pub mod choi;
pub mod constraints;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{CMatrix, HermMatrix};
pub use num_complex::Complex64;
