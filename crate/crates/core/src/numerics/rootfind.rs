//! Complex scalar root finding: damped Newton iteration with a central
//! finite-difference derivative, falling back to Muller steps when the
//! Newton direction stagnates.
//!
//! The residual callback returns `Result` so that callers can reject
//! individual evaluation points (poles, singular channels); a rejected
//! point is treated like a failed step and the damping halves it.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and iteration limits for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub struct RootFindSettings {
    /// Convergence threshold on `|f(z)|`.
    pub residual_tol: f64,
    /// Step size below which the iteration is considered stagnant.
    pub step_tol: f64,
    /// Maximum number of Newton/Muller iterations.
    pub max_iters: usize,
    /// Relative scale of the central finite-difference step.
    pub finite_diff_scale: f64,
}

impl Default for RootFindSettings {
    fn default() -> Self {
        RootFindSettings {
            residual_tol: 1e-10,
            step_tol: 1e-12,
            max_iters: 100,
            finite_diff_scale: 1e-7,
        }
    }
}

impl RootFindSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) || !(self.step_tol > 0.0) || self.max_iters < 1 {
            return Err(Error::Validation(
                "root finder settings require residual_tol > 0, step_tol > 0, max_iters >= 1"
                    .to_string(),
            ));
        }
        Ok(())
    }
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Find a root of `f` near `guess`.
///
/// Returns the first iterate whose residual magnitude falls below
/// `settings.residual_tol`; a converged input is returned unchanged, which
/// makes re-solving from a root exactly idempotent.
pub fn find_root<F>(mut f: F, guess: Complex64, settings: &RootFindSettings) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    settings.validate()?;
    if !finite(guess) {
        return Err(Error::NonFinite("root finder guess"));
    }

    let mut z = guess;
    let mut fz = f(z)?;
    if !finite(fz) {
        return Err(Error::NonFinite("residual at initial guess"));
    }

    let mut best = z;
    let mut best_mag = fz.norm();
    // Rolling window of accepted iterates for the Muller fallback.
    let mut history: Vec<(Complex64, Complex64)> = vec![(z, fz)];
    let mut tiny_steps = 0usize;

    for iteration in 0..settings.max_iters {
        if fz.norm() <= settings.residual_tol {
            return Ok(z);
        }

        // Damped Newton: halve the step until the residual improves.
        let mut accepted: Option<(Complex64, Complex64)> = None;
        if let Some(derivative) = central_derivative(&mut f, z, settings.finite_diff_scale) {
            if derivative.norm() > 0.0 {
                let full_step = -fz / derivative;
                let mut alpha = 1.0;
                for _ in 0..8 {
                    let trial = z + alpha * full_step;
                    if let Ok(ft) = f(trial) {
                        if finite(ft) && ft.norm() < fz.norm() {
                            accepted = Some((trial, ft));
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
            }
        }

        // Muller fallback once the Newton direction stagnates.
        if accepted.is_none() && history.len() >= 3 {
            let trio = &history[history.len() - 3..];
            if let Some(candidate) = muller_step(trio) {
                if let Ok(ft) = f(candidate) {
                    if finite(ft) && ft.norm() < fz.norm() {
                        accepted = Some((candidate, ft));
                    }
                }
            }
        }

        match accepted {
            Some((znew, fnew)) => {
                let step_len = (znew - z).norm();
                z = znew;
                fz = fnew;
                history.push((z, fz));
                if history.len() > 4 {
                    history.remove(0);
                }
                if fz.norm() < best_mag {
                    best = z;
                    best_mag = fz.norm();
                }
                // Steps collapsing below step_tol without reaching the
                // residual target means the iteration is pinned by floating
                // point; give up rather than spin.
                if step_len <= settings.step_tol * (1.0 + z.norm()) {
                    tiny_steps += 1;
                    if tiny_steps >= 3 && fz.norm() > settings.residual_tol {
                        return Err(Error::non_convergence(iteration + 1, best, best_mag));
                    }
                } else {
                    tiny_steps = 0;
                }
            }
            None => {
                return Err(Error::non_convergence(iteration + 1, best, best_mag));
            }
        }
    }

    if fz.norm() <= settings.residual_tol {
        Ok(z)
    } else {
        Err(Error::non_convergence(settings.max_iters, best, best_mag))
    }
}

/// Central finite difference along the real axis; for holomorphic residuals
/// the direction is immaterial. Falls back to smaller steps if either probe
/// point is rejected.
fn central_derivative<F>(f: &mut F, z: Complex64, rel_scale: f64) -> Option<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut h = rel_scale * z.norm().max(1.0);
    for _ in 0..3 {
        let dz = Complex64::new(h, 0.0);
        if let (Ok(fp), Ok(fm)) = (f(z + dz), f(z - dz)) {
            if finite(fp) && finite(fm) {
                let d = (fp - fm) / (2.0 * h);
                if finite(d) && d.norm() > 0.0 {
                    return Some(d);
                }
            }
        }
        h *= 0.25;
    }
    None
}

/// One Muller step from three iterates (oldest first).
fn muller_step(trio: &[(Complex64, Complex64)]) -> Option<Complex64> {
    let (z0, f0) = trio[0];
    let (z1, f1) = trio[1];
    let (z2, f2) = trio[2];
    let denom01 = z1 - z0;
    let denom12 = z2 - z1;
    if denom01.norm() == 0.0 || denom12.norm() == 0.0 {
        return None;
    }
    let q = denom12 / denom01;
    let a = q * f2 - q * (1.0 + q) * f1 + q * q * f0;
    let b = (2.0 * q + 1.0) * f2 - (1.0 + q) * (1.0 + q) * f1 + q * q * f0;
    let c = (1.0 + q) * f2;
    let disc = (b * b - 4.0 * a * c).sqrt();
    let d1 = b + disc;
    let d2 = b - disc;
    let denom = if d1.norm() >= d2.norm() { d1 } else { d2 };
    if denom.norm() == 0.0 {
        return None;
    }
    let step = -(z2 - z1) * 2.0 * c / denom;
    let candidate = z2 + step;
    if finite(candidate) {
        Some(candidate)
    } else {
        None
    }
}
