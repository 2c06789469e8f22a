//! Exact numerics for quantum walks on the integer line driven by `M`
//! cyclically applied Hadamard coins, together with the limit laws these
//! walks converge to and a harness that measures the convergence.
//!
//! * [`coin_kernel`]: spectral data of the Fourier-space coin.
//! * [`walk_engine`]: exact position distributions in `O(t²)`.
//! * [`state_oracle`]: brute-force `2ᴹ`-dimensional reference evolution.
//! * [`limit_laws`]: densities, CDFs, moments and samplers of the limit laws.
//! * [`convergence_harness`]: KS distances, exponent fits and phase sweeps.
//! * [`verification`]: named check suites run by the CLI and the acceptance target.

pub mod coin_kernel;
pub mod convergence_harness;
pub mod limit_laws;
pub mod quadrature;
pub mod state_oracle;
pub mod verification;
pub mod walk_engine;

pub use num_complex::Complex64 as C64;
