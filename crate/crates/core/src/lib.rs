//! Bergman kernel of weight-`k` cusp forms on `SL(2,Z)` and restricted
//! equidistribution experiments built on it.
//!
//! * [`hyperbolic`]: points, matrices, Möbius action, invariants.
//! * [`modular`]: cosets, elliptic points, stabilizers, minimal displacement.
//! * [`kernel`]: certified lattice-sum evaluation of `R_k(z,w)` and its asymptotics.
//! * [`equidist`]: densities and integrals along geodesics, horizontal segments and regions.
//! * [`lemmas`]: sampled checks of the displacement lemmas.
//! * [`cuspform`]: the weight-12 form `Δ`, its Petersson norm and the pre-trace check.

pub mod cuspform;
pub mod equidist;
pub mod hyperbolic;
pub mod kernel;
pub mod lemmas;
pub mod modular;
pub mod quadrature;
pub mod summation;

pub use hyperbolic::{GammaMatrix, LogComplex, Point};
pub use kernel::{bergman_r, KernelResult, WeightConfig};
