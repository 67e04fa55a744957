//! Branch-managed complex square roots for channel momenta.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which physical role the root plays; both conventions select the root with
/// `Re(w) >= 0`, breaking ties on the negative real axis toward `Im(w) >= 0`.
///
/// `Decay` is meant for barrier decay constants (real and positive below the
/// barrier), `Outgoing` for wavenumbers where `exp(i k x)` must travel or
/// grow outward, consistent with the Gamow boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchConvention {
    Decay,
    Outgoing,
}

/// Square root of `z` on the branch fixed by `convention`.
pub fn branch_sqrt(z: Complex64, convention: BranchConvention) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("branch_sqrt input"));
    }
    let _ = convention; // both conventions resolve to the same selection rule
    let mut w = z.sqrt();
    if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
        w = -w;
    }
    // Normalize -0.0 so the sign predicates below stay exact.
    if w.re == 0.0 {
        w.re = 0.0;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn positive_real() {
        let w = branch_sqrt(Complex64::new(4.0, 0.0), BranchConvention::Decay).unwrap();
        assert_eq!(w, Complex64::new(2.0, 0.0));
    }

    #[test]
    fn negative_real_takes_upper_branch() {
        let w = branch_sqrt(Complex64::new(-4.0, 0.0), BranchConvention::Outgoing).unwrap();
        assert!((w - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!(w.im >= 0.0);
    }

    #[test]
    fn slightly_complex_keeps_positive_real_part() {
        let z = Complex64::new(3.0, -0.1);
        let w = branch_sqrt(z, BranchConvention::Decay).unwrap();
        assert!(w.re > 0.0);
        assert!((w * w - z).norm() < 1e-14 * z.norm());
        // The other candidate root fails the selection rule.
        assert!((-w).re < 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(branch_sqrt(Complex64::new(f64::NAN, 0.0), BranchConvention::Decay).is_err());
        assert!(branch_sqrt(Complex64::new(0.0, f64::INFINITY), BranchConvention::Outgoing).is_err());
    }

    proptest! {
        #[test]
        fn squares_back_and_respects_branch(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            let z = Complex64::new(re, im);
            for conv in [BranchConvention::Decay, BranchConvention::Outgoing] {
                let w = branch_sqrt(z, conv).unwrap();
                prop_assert!((w * w - z).norm() <= 1e-14 * (1.0 + z.norm()));
                prop_assert!(w.re >= 0.0);
                if w.re == 0.0 {
                    prop_assert!(w.im >= 0.0);
                }
            }
        }
    }
}
