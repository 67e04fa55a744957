//! Wavefunction assembly, densities, and nondecay probabilities.
//!
//! A converged root's coefficient table defines the state region by region:
//! `A_n sin(k_n x)` inside the well, barrier exponentials dressed by Bessel
//! weights under the barrier, outgoing waves `t_n exp(i k'_n x)` beyond,
//! each channel carrying its `exp(-i n omega t)` phase on top of the global
//! `exp(-i eps t / hbar)`.
//!
//! The nondecay probability is the in-well norm relative to its initial
//! value, `P(t) = exp(2 Im(eps) t / hbar) h(t)` with `h` periodic and of
//! order one; replacing `h` by its one-period average gives the
//! coarse-grained, monotone `P_bar(t)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::FloquetRoot;
use crate::model::{channel_momenta, ChannelMomenta};
use crate::numerics::{bessel_jn, periodic_average, simpson};

/// Simpson panels per region for spatial integrals.
const SPATIAL_PANELS: usize = 512;

/// Trapezoid samples per period for the `h` average.
const TIME_SAMPLES: usize = 128;

/// Precomputed channel data for repeated wavefunction evaluations.
struct WaveContext {
    momenta: Vec<ChannelMomenta>,
    bessel: Vec<f64>,
    sidebands: i32,
    omega: f64,
    a: f64,
    b: f64,
}

impl WaveContext {
    fn build(root: &FloquetRoot) -> Result<WaveContext> {
        let n = root.truncation.sidebands as i32;
        let mut momenta = Vec::with_capacity(2 * n as usize + 1);
        for idx in -n..=n {
            momenta.push(channel_momenta(&root.well, root.epsilon, idx)?);
        }
        let alpha = root.well.drive_strength();
        let mut bessel = Vec::with_capacity(4 * n as usize + 1);
        for m in -2 * n..=2 * n {
            bessel.push(bessel_jn(m, alpha)?);
        }
        Ok(WaveContext {
            momenta,
            bessel,
            sidebands: n,
            omega: root.well.omega,
            a: root.well.a,
            b: root.well.b,
        })
    }

    fn momenta(&self, n: i32) -> &ChannelMomenta {
        &self.momenta[(n + self.sidebands) as usize]
    }

    fn j(&self, m: i32) -> f64 {
        self.bessel[(m + 2 * self.sidebands) as usize]
    }

    /// Periodic factor `Phi(x, t)` of the Floquet state (no global
    /// `exp(-i eps t / hbar)`).
    fn periodic_part(&self, root: &FloquetRoot, x: f64, t: f64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let table = &root.coefficients;
        let mut sum = Complex64::new(0.0, 0.0);
        if x < self.a {
            for n in -self.sidebands..=self.sidebands {
                let k_n = self.momenta(n).k;
                let phase = (-i * (n as f64 * self.omega * t)).exp();
                sum += table.inner.get(n) * (k_n * x).sin() * phase;
            }
        } else if x <= self.b {
            // Barrier profile at x, shared by every channel.
            let mut profile = Vec::with_capacity(2 * self.sidebands as usize + 1);
            for l in -self.sidebands..=self.sidebands {
                let q_l = self.momenta(l).q;
                profile.push(
                    table.barrier_growing.get(l) * (q_l * x).exp()
                        + table.barrier_decaying.get(l) * (-q_l * x).exp(),
                );
            }
            for n in -self.sidebands..=self.sidebands {
                let mut channel = Complex64::new(0.0, 0.0);
                for (slot, l) in (-self.sidebands..=self.sidebands).enumerate() {
                    channel += profile[slot] * self.j(n - l);
                }
                let phase = (-i * (n as f64 * self.omega * t)).exp();
                sum += channel * phase;
            }
        } else {
            for n in -self.sidebands..=self.sidebands {
                let kp_n = self.momenta(n).k_prime;
                let phase = (-i * (n as f64 * self.omega * t)).exp();
                sum += table.outgoing.get(n) * (i * kp_n * x).exp() * phase;
            }
        }
        sum
    }

    /// `integral_0^b |Phi(x, t)|^2 dx` by composite Simpson per region.
    fn in_well_norm(&self, root: &FloquetRoot, t: f64, panels: usize) -> Result<f64> {
        let density = |x: f64| self.periodic_part(root, x, t).norm_sqr();
        let well = simpson(density, 0.0, self.a, panels)?;
        let barrier = simpson(density, self.a, self.b, panels)?;
        Ok(well + barrier)
    }
}

/// Wavefunction amplitude `Psi(x, t)` of a converged root.
pub fn assemble_wavefunction(root: &FloquetRoot, x: f64, t: f64) -> Result<Complex64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "assemble_wavefunction: x = {x} is outside the half-line"
        )));
    }
    let ctx = WaveContext::build(root)?;
    let i = Complex64::new(0.0, 1.0);
    let global = (-i * root.epsilon * (t / root.well.hbar)).exp();
    let value = ctx.periodic_part(root, x, t) * global;
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite("wavefunction amplitude"))
    }
}

/// Probability density on a spatial grid at time `t`, normalized by the
/// `t = 0` in-well norm.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub x_grid: Vec<f64>,
    pub t: f64,
    pub values: Vec<f64>,
    /// The `t = 0` normalization integral that divided the raw density.
    pub normalization_stamp: f64,
}

/// `|Psi(x, t)|^2` on `x_grid`, normalized so the `t = 0` profile integrates
/// to one over `[0, b]`.
pub fn density_profile(root: &FloquetRoot, x_grid: &[f64], t: f64) -> Result<DensityProfile> {
    if x_grid.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(
            "density_profile: grid points must be finite and non-negative".into(),
        ));
    }
    let ctx = WaveContext::build(root)?;
    let stamp = ctx.in_well_norm(root, 0.0, SPATIAL_PANELS)?;
    if !(stamp > 0.0) {
        return Err(Error::NonFinite("normalization integral"));
    }
    let decay = (2.0 * root.epsilon.im * t / root.well.hbar).exp();
    let values: Vec<f64> = x_grid
        .iter()
        .map(|&x| decay * ctx.periodic_part(root, x, t).norm_sqr() / stamp)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("density value"));
    }
    Ok(DensityProfile {
        x_grid: x_grid.to_vec(),
        t,
        values,
        normalization_stamp: stamp,
    })
}

/// Periodic factor `h(t)`: the in-well norm of the periodic part relative to
/// its `t = 0` value; `h(0) = 1`.
pub fn periodic_factor(root: &FloquetRoot, t: f64) -> Result<f64> {
    let ctx = WaveContext::build(root)?;
    let norm0 = ctx.in_well_norm(root, 0.0, SPATIAL_PANELS)?;
    let norm_t = ctx.in_well_norm(root, t, SPATIAL_PANELS)?;
    Ok(norm_t / norm0)
}

/// Nondecay probability curves on a time grid.
#[derive(Debug, Clone)]
pub struct NondecayCurve {
    pub t_grid: Vec<f64>,
    /// `P(t) = exp(2 Im(eps) t / hbar) h(t)`.
    pub p_values: Vec<f64>,
    /// `P_bar(t) = exp(2 Im(eps) t / hbar) <h>`.
    pub p_bar_values: Vec<f64>,
    /// One-period average of `h`.
    pub h_mean: f64,
    pub im_epsilon: f64,
}

/// Evaluate `P`, `P_bar`, and `h` on a sorted, non-negative time grid.
pub fn nondecay_probability(root: &FloquetRoot, t_grid: &[f64]) -> Result<NondecayCurve> {
    if t_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::Domain(
            "nondecay_probability: times must be finite and non-negative".into(),
        ));
    }
    if t_grid.windows(2).any(|pair| pair[1] < pair[0]) {
        return Err(Error::Domain(
            "nondecay_probability: time grid must be sorted".into(),
        ));
    }
    let ctx = WaveContext::build(root)?;
    let norm0 = ctx.in_well_norm(root, 0.0, SPATIAL_PANELS)?;
    if !(norm0 > 0.0) {
        return Err(Error::NonFinite("normalization integral"));
    }

    // With no drive the periodic part is stationary and h is identically 1.
    let h_mean = if root.well.v1 == 0.0 || root.well.omega == 0.0 {
        1.0
    } else {
        let period = 2.0 * std::f64::consts::PI / root.well.omega;
        periodic_average(
            |t| match ctx.in_well_norm(root, t, SPATIAL_PANELS) {
                Ok(norm) => norm / norm0,
                Err(_) => f64::NAN,
            },
            period,
            TIME_SAMPLES,
        )?
    };

    let mut p_values = Vec::with_capacity(t_grid.len());
    let mut p_bar_values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let decay = (2.0 * root.epsilon.im * t / root.well.hbar).exp();
        let h = ctx.in_well_norm(root, t, SPATIAL_PANELS)? / norm0;
        p_values.push(decay * h);
        p_bar_values.push(decay * h_mean);
    }
    Ok(NondecayCurve {
        t_grid: t_grid.to_vec(),
        p_values,
        p_bar_values,
        h_mean,
        im_epsilon: root.epsilon.im,
    })
}

/// In-well norm of the periodic part with an explicit panel count, for
/// quadrature self-convergence checks.
#[cfg(test)]
pub(crate) fn in_well_norm_with_panels(root: &FloquetRoot, t: f64, panels: usize) -> Result<f64> {
    let ctx = WaveContext::build(root)?;
    ctx.in_well_norm(root, t, panels)
}
