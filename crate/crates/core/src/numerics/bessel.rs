//! Bessel functions of the first kind for integer order.
//!
//! Two regimes are used. For small arguments the ascending power series
//!
//! ```text
//! J_n(x) = sum_m (-1)^m / (m! (m+n)!) (x/2)^(2m+n)
//! ```
//!
//! converges quickly and loses at most a few digits to cancellation. For
//! larger arguments the series cancellation grows, so the whole ladder
//! J_0..J_M is generated by Miller's backward recurrence and normalized
//! with `J_0 + 2 sum_k J_{2k} = 1`.

use crate::error::{Error, Result};

/// Crossover between the ascending series and Miller's recurrence.
const SERIES_LIMIT: f64 = 12.0;

/// Largest supported order magnitude.
pub const MAX_ORDER: i32 = 64;

/// Bessel function of the first kind `J_n(x)` for integer `n`, real `x >= 0`.
///
/// Negative orders use the symmetry `J_{-n}(x) = (-1)^n J_n(x)`.
pub fn bessel_jn(order: i32, argument: f64) -> Result<f64> {
    if !argument.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_jn: argument {argument} is not finite"
        )));
    }
    if argument < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_jn: argument {argument} is negative"
        )));
    }
    if order.abs() > MAX_ORDER {
        return Err(Error::Domain(format!(
            "bessel_jn: |order| = {} exceeds {MAX_ORDER}",
            order.abs()
        )));
    }

    let n = order.unsigned_abs() as usize;
    let value = if argument < SERIES_LIMIT {
        series_jn(n, argument)
    } else {
        miller_jn(n, argument)
    };

    if order < 0 && n % 2 == 1 {
        Ok(-value)
    } else {
        Ok(value)
    }
}

/// Ascending power series, summed until the term falls below machine
/// precision relative to the running sum.
fn series_jn(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    // term_0 = (x/2)^n / n!, built factor by factor to avoid overflow.
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let ratio = -half * half;
    let mut sum = term;
    for m in 1..=200 {
        term *= ratio / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence with the even-order sum normalization.
fn miller_jn(n: usize, x: f64) -> f64 {
    // Start high enough above both order and argument that the downward
    // recurrence has converged to the minimal solution by index n.
    let start = (n.max(x.ceil() as usize) + 52) & !1; // even
    let mut jp = 0.0_f64; // J~_{k+1}
    let mut jc = 1e-300_f64; // J~_k, k = start to begin with
    let mut target = 0.0;
    let mut norm = 2.0 * jc; // start is even and nonzero
    let mut k = start;
    while k > 0 {
        let jm = (2.0 * k as f64 / x) * jc - jp; // J~_{k-1} = (2k/x) J~_k - J~_{k+1}
        jp = jc;
        jc = jm;
        k -= 1;
        if k == n {
            target = jc;
        }
        if k % 2 == 0 {
            norm += if k == 0 { jc } else { 2.0 * jc };
        }
        // Rescale before the growing recurrence overflows.
        if jc.abs() > 1e250 {
            let s = 1e-250;
            jc *= s;
            jp *= s;
            norm *= s;
            target *= s;
        }
    }
    target / norm
}
