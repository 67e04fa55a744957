//! Periodic and spatial quadrature.

use crate::error::{Error, Result};

/// Average of `g` over one period by the composite trapezoid rule.
///
/// For smooth periodic integrands the trapezoid rule converges spectrally,
/// so modest sample counts already reach quadrature-noise level.
pub fn periodic_average<G>(mut g: G, period: f64, samples: usize) -> Result<f64>
where
    G: FnMut(f64) -> f64,
{
    if !(period > 0.0) {
        return Err(Error::Validation(format!(
            "periodic_average: period {period} must be positive"
        )));
    }
    if samples < 16 {
        return Err(Error::Validation(format!(
            "periodic_average: samples {samples} must be at least 16"
        )));
    }
    let h = period / samples as f64;
    let mut sum = 0.0;
    for k in 0..=samples {
        let value = g(k as f64 * h);
        if !value.is_finite() {
            return Err(Error::NonFinite("periodic_average integrand"));
        }
        let weight = if k == 0 || k == samples { 0.5 } else { 1.0 };
        sum += weight * value;
    }
    Ok(sum / samples as f64)
}

/// Composite Simpson integral of `f` over `[lo, hi]` with `panels` panels
/// (`panels` must be even and positive).
pub fn simpson<F>(mut f: F, lo: f64, hi: f64, panels: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if panels == 0 || panels % 2 != 0 {
        return Err(Error::Validation(format!(
            "simpson: panels {panels} must be even and positive"
        )));
    }
    let h = (hi - lo) / panels as f64;
    let mut sum = f(lo) + f(hi);
    for k in 1..panels {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(lo + k as f64 * h);
    }
    let value = sum * h / 3.0;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("simpson integrand"))
    }
}
