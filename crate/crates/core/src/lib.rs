//! Numerical laboratory for the smoothness of zero-extensions of L^p
//! functions on the unit cube.
//!
//! The crate computes moduli of continuity of a function and of its
//! zero-extension, dyadic piecewise-constant approximations (uniform and
//! adaptive), approximation errors of convolution kernels, and Besov-type
//! exponents, together with checkers for the inequalities relating them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod besov;
pub mod dyadic;
pub mod error;
pub mod gates;
pub mod gridfn;
pub mod kernels;
pub mod moduli;

pub use adaptive::{build_partition, AdaptivePartition, CubeNode, CubeStatus};
pub use besov::{fit_exponent, BesovParams, Fineness, FitResult};
pub use dyadic::{DyadicCube, PiecewiseConstant};
pub use error::{Error, Result};
pub use gridfn::{
    corpus, lp_norm, sample, ExtendedGridFunction, FunctionSpec, GridFunction, Lattice, LatticeShift,
};
pub use kernels::{KernelFamily, KernelSpec};
pub use moduli::{
    omega, omega_big, zeta, Coverage, CurveKind, ModulusCurve, ModulusValue, OmegaBig, ShiftProfile, ShiftSet,
};
