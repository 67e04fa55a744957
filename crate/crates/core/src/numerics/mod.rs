//! Self-contained special functions and numerical kernels: integer-order
//! Bessel J, branch-managed complex square roots, dense complex linear
//! solves, complex scalar root finding, and periodic/spatial quadrature.
//!
//! Everything here is a pure function of its inputs.

pub mod bessel;
pub mod linear;
pub mod quadrature;
pub mod rootfind;
pub mod sqrt;

pub use bessel::bessel_jn;
pub use linear::{solve_linear, solve_linear_multi, ComplexMatrix, LinearSolution};
pub use quadrature::{periodic_average, simpson};
pub use rootfind::{find_root, RootFindSettings};
pub use sqrt::{branch_sqrt, BranchConvention};

use num_complex::Complex64;

/// `sin(z)/z`, continued analytically through `z = 0`.
pub(crate) fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `tan(z)/z`, continued analytically through `z = 0`.
pub(crate) fn tanc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) + z2 / 3.0 + 2.0 * z2 * z2 / 15.0
    } else {
        z.tan() / z
    }
}
