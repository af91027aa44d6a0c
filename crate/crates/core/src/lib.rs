//! Monolithic fluid-structure interaction solver workbench.
//!
//! The crate couples an ALE Navier-Stokes fluid with a nearly incompressible
//! hyperelastic two-layer vessel wall on a conforming tetrahedral mesh,
//! linearizes the coupled system with Newton's method and solves the
//! resulting 3x3-block systems with block-factorization-preconditioned
//! GMRES, a coupled algebraic multigrid method and an AMLI (K-cycle)
//! variant.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`scalar::Real`] trait; the `*64` aliases at the crate root fix `f64`,
//! which is what the command line driver and the benchmark harness use.

pub mod assembly;
pub mod bench;
pub mod blockprec;
pub mod config;
pub mod dense;
pub mod driver;
pub mod error;
pub mod fsimg;
pub mod krylov;
pub mod materials;
pub mod mesh;
pub mod newton;
pub mod scalar;
pub mod solver;
pub mod subamg;
pub mod tensor;
pub mod util;

pub use error::Error;
pub use scalar::Real;

/// Concrete `f64` instantiations of the generic core types.
pub type Csr64 = krylov::Csr<f64>;
pub type DenseMat64 = dense::DenseMat<f64>;
pub type KinematicState64 = materials::KinematicState<f64>;
pub type MaterialParams64 = materials::MaterialParams<f64>;
pub type StressTangent64 = materials::StressTangent<f64>;
pub type BlockMat64 = assembly::BlockMat<f64>;
pub type BlockSystem64 = assembly::BlockSystem<f64>;
pub type FsiState64 = assembly::FsiState<f64>;
pub type SubHierarchy64 = subamg::SubHierarchy<f64>;
pub type MgHierarchy64 = fsimg::MgHierarchy<f64>;
pub type SolveReport64 = krylov::SolveReport;
