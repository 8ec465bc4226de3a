//! Hybrid quantum-classical convolutional multigrid solver for structured-grid PDEs.
//!
//! Discrete differential operators are expressed as fixed 3x3 convolution kernels.
//! Each kernel application can run either as a direct sliding dot product or as a
//! simulated quantum circuit: the kernel is decomposed into a linear combination of
//! translation unitaries (LCU), translations become diagonal phases in the Fourier
//! basis (QFT), and the operator block is recovered by ancilla post-selection.
//! A classical W-cycle multigrid scheduler drives the whole solve, with quantum
//! restriction/prolongation circuits for the inter-grid transfers.
//!
//! Module map:
//! - [`statevector`]: dense state-vector simulator (encoding, H, controlled phase,
//!   QFT, post-selection).
//! - [`qconv`]: LCU+QFT quantum convolution engine for 3x3 kernels on KxK windows.
//! - [`qtransfer`]: two-qubit restriction/prolongation circuits and field transfers.
//! - [`stencils`]: analytic FDM/ConvFEM kernels, operator assembly, CFL bound,
//!   explicit Euler stepping.
//! - [`multigrid`]: W-cycle solver with the hybrid sliding-window operator.
//! - [`pde_suite`]: benchmark problems (linear system, Poisson, diffusion,
//!   convection-diffusion, Navier-Stokes) with direct-solve reference oracles.

pub mod error;
pub mod field;
pub mod multigrid;
pub mod pde_suite;
pub mod qconv;
pub mod qtransfer;
pub mod statevector;
pub mod stencils;

pub use error::{Error, Result};
pub use field::{BoundaryKind, Field2D};
