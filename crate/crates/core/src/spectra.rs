//! Quasienergy branches over frequency and crossing classification.
//!
//! A sideband family of roots has the form `eps = eps0 + n hbar omega` with
//! a slowly varying horizontal representative `eps0(omega)` anchored at a
//! static level. Continuation follows `eps0` in its own frame, where the
//! dominant channel sits at the centre of the truncated band; the zone view
//! `eps0 + n hbar omega` is what branch diagrams plot and what the crossing
//! classifier compares.
//!
//! Branches are traced by predictor-corrector continuation: linear
//! extrapolation of the quasienergy from the last two samples, polished by
//! the root finder at each new frequency. Crossings between two branches are
//! classified from their zone-view geometry on a common grid: real parts
//! that intersect mark a direct crossing, a positive minimum gap together
//! with an exchange of the imaginary parts marks an avoided one.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::floquet::{
    natural_root, polish_root, reduce_to_first_zone, solve_floquet, FloquetRoot, Truncation,
};
use crate::model::{StaticLevel, WellConfig};

/// Depth ladder (in units of `V0`) for seeding a driven solve from a level
/// on or near the real axis. The quasienergy equation is evaluated on the
/// sheet the iterate sits on, so a seed must start below the axis for
/// decaying roots; too deep a start can overshoot back across the axis for
/// very narrow roots, hence the retreat to shallower nudges.
const SEED_DEPTHS: [f64; 4] = [1e-3, 1e-4, 1e-5, 0.0];

fn nudged(energy: Complex64, depth: f64, config: &WellConfig) -> Complex64 {
    if config.v1 > 0.0 {
        Complex64::new(energy.re, energy.im.min(-depth * config.v0))
    } else {
        energy
    }
}

/// Solve for the driven root that continues a static level, taking the
/// zone-reduced level energy as the guess and retrying from progressively
/// shallower below-axis nudges until the polish converges.
pub fn solve_from_level(
    config: &WellConfig,
    trunc: &Truncation,
    energy: Complex64,
) -> Result<FloquetRoot> {
    let zone = config.photon();
    let reduced = if zone > 0.0 {
        reduce_to_first_zone(energy, zone).0
    } else {
        energy
    };
    let mut last_err = None;
    for depth in SEED_DEPTHS {
        match solve_floquet(config, trunc, nudged(reduced, depth, config)) {
            Ok(root) => return Ok(root),
            Err(err) => last_err = Some(err),
        }
        if config.v1 == 0.0 {
            break;
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Identifies a branch by its parent static level and sideband offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchId {
    pub parent_index: usize,
    pub sideband_offset: i32,
}

/// A converged seed annotated with its provenance.
///
/// `root` is the polished representative — the zone representative when the
/// replica solve succeeded, the horizontal one when [`seed_branches`] fell
/// back to it; `natural_epsilon` is always the horizontal-frame value the
/// continuation starts from.
#[derive(Debug, Clone)]
pub struct SeededRoot {
    pub root: FloquetRoot,
    pub natural_epsilon: Complex64,
    pub parent: StaticLevel,
    pub parent_index: usize,
    pub sideband_offset: i32,
}

/// Solve for a sideband replica of a static level in the zone frame, where
/// its root hugs a pole of the reduced equation.
///
/// A level shifted by `n` photons enters the zone next to the frequency at
/// which its parent's subband block turns singular, so the residual near
/// the seed looks like `D + C/(z - p)` with the pole `p` at the shifted
/// level itself; the root sits at `p - C/D`. Two residual samples on either
/// side of the pole estimate that displacement directly, where a plain
/// Newton start on the pole would be deflected to an unrelated root.
pub fn solve_sideband_replica(
    config: &WellConfig,
    trunc: &Truncation,
    pole: Complex64,
) -> Result<FloquetRoot> {
    if config.v1 == 0.0 {
        return solve_from_level(config, trunc, pole);
    }
    let zone = config.photon();
    let reduced = if zone > 0.0 {
        reduce_to_first_zone(pole, zone).0
    } else {
        pole
    };
    let p = nudged(reduced, 1e-3, config);
    let radius = Complex64::new(1e-3 * config.v0, 0.0);
    let seed = (|| {
        let f_plus = crate::floquet::floquet_residual(config, trunc, p + radius).ok()?;
        let f_minus = crate::floquet::floquet_residual(config, trunc, p - radius).ok()?;
        let background = 0.5 * (f_plus + f_minus);
        if background.norm() == 0.0 {
            return None;
        }
        let displacement = -radius * (f_plus - f_minus) / (2.0 * background);
        (displacement.norm() <= 0.2 * zone).then_some(p + displacement)
    })();
    match seed {
        Some(seed) => solve_floquet(config, trunc, seed),
        None => solve_from_level(config, trunc, pole),
    }
}

/// Horizontal-frame polish of a level's driven root, with the below-axis
/// nudge ladder.
fn natural_level_root(
    config: &WellConfig,
    trunc: &Truncation,
    energy: Complex64,
) -> Result<FloquetRoot> {
    let mut last_err = None;
    for depth in SEED_DEPTHS {
        match natural_root(config, trunc, nudged(energy, depth, config)) {
            Ok(root) => return Ok(root),
            Err(err) => last_err = Some(err),
        }
        if config.v1 == 0.0 {
            break;
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Polish one root per `(level, offset)` pair at `omega_start`, seeded at
/// `E + n hbar omega` zone-reduced; non-convergent seeds are dropped and
/// duplicate roots (within 1e-8) deduplicated.
///
/// When the zone representative of a shifted level cannot be polished (a
/// high-|n| replica rides too tightly on its pole for the truncated band),
/// the seed falls back to the horizontal frame: the root is solved at the
/// level itself and the offset only tags the zone view.
pub fn seed_branches(
    config: &WellConfig,
    trunc: &Truncation,
    levels: &[StaticLevel],
    omega_start: f64,
    offsets: &[i32],
) -> Vec<SeededRoot> {
    let driven = config.with_omega(omega_start);
    let mut seeds: Vec<SeededRoot> = Vec::new();
    for (parent_index, level) in levels.iter().enumerate() {
        for &offset in offsets {
            let shifted = level.energy + Complex64::new(offset as f64 * driven.photon(), 0.0);
            let solved = if offset == 0 {
                solve_from_level(&driven, trunc, shifted)
            } else {
                solve_sideband_replica(&driven, trunc, shifted)
            };
            let (root, natural_epsilon) = match solved {
                Ok(root) => {
                    let natural =
                        root.epsilon - Complex64::new(offset as f64 * driven.photon(), 0.0);
                    (root, natural)
                }
                Err(_) => {
                    let Ok(root) = natural_level_root(&driven, trunc, level.energy) else {
                        continue;
                    };
                    let natural = root.epsilon;
                    (root, natural)
                }
            };
            if seeds
                .iter()
                .any(|s| (s.root.epsilon - root.epsilon).norm() < 1e-8)
            {
                continue;
            }
            seeds.push(SeededRoot {
                root,
                natural_epsilon,
                parent: *level,
                parent_index,
                sideband_offset: offset,
            });
        }
    }
    seeds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Converged,
    Interpolated,
}

#[derive(Debug, Clone, Copy)]
pub struct BranchSample {
    pub omega: f64,
    /// Horizontal-frame quasienergy `eps0` at this frequency.
    pub epsilon: Complex64,
    pub status: SampleStatus,
}

/// How a trace ended: the full range, or a gap the continuation could not
/// step across at the minimum step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchEnd {
    Completed,
    Gap { omega: f64 },
}

/// One quasienergy branch over a frequency range, samples ordered by
/// increasing frequency. Samples hold the horizontal representative; the
/// zone view adds `sideband_offset` photons.
#[derive(Debug, Clone)]
pub struct Branch {
    pub id: BranchId,
    pub parent: StaticLevel,
    pub hbar: f64,
    pub samples: Vec<BranchSample>,
    pub end: BranchEnd,
}

impl Branch {
    /// Frequency span covered by the samples.
    pub fn span(&self) -> Option<(f64, f64)> {
        match (self.samples.first(), self.samples.last()) {
            (Some(first), Some(last)) => Some((first.omega, last.omega)),
            _ => None,
        }
    }

    /// Zone-view quasienergy of a sample: `eps0 + n hbar omega`.
    pub fn zone_epsilon(&self, sample: &BranchSample) -> Complex64 {
        sample.epsilon
            + Complex64::new(
                self.id.sideband_offset as f64 * self.hbar * sample.omega,
                0.0,
            )
    }

    /// Linear interpolation of the horizontal-frame quasienergy at `omega`.
    pub fn interpolate(&self, omega: f64) -> Option<Complex64> {
        let samples = &self.samples;
        if samples.is_empty() {
            return None;
        }
        if omega < samples[0].omega - 1e-9 || omega > samples[samples.len() - 1].omega + 1e-9 {
            return None;
        }
        let pos = samples.partition_point(|s| s.omega < omega);
        if pos == 0 {
            return Some(samples[0].epsilon);
        }
        if pos == samples.len() {
            return Some(samples[samples.len() - 1].epsilon);
        }
        let (lo, hi) = (&samples[pos - 1], &samples[pos]);
        let spread = hi.omega - lo.omega;
        if spread <= 0.0 {
            return Some(lo.epsilon);
        }
        let weight = (omega - lo.omega) / spread;
        Some(lo.epsilon * (1.0 - weight) + hi.epsilon * weight)
    }

    /// Linear interpolation of the zone-view quasienergy at `omega`.
    pub fn zone_interpolate(&self, omega: f64) -> Option<Complex64> {
        self.interpolate(omega).map(|eps| {
            eps + Complex64::new(self.id.sideband_offset as f64 * self.hbar * omega, 0.0)
        })
    }
}

/// Trace the branch through `seed` across `omega_range` by adaptive
/// predictor-corrector continuation in the horizontal frame.
///
/// The step halves when the corrector fails or jumps away from the linear
/// prediction, down to `initial_step / 64` (below which the branch ends with
/// a recorded gap), and doubles back after four consecutive successes.
pub fn trace_branch(
    config: &WellConfig,
    trunc: &Truncation,
    seed: &SeededRoot,
    omega_range: (f64, f64),
    initial_step: f64,
) -> Result<Branch> {
    let (start, stop) = omega_range;
    if !(stop > start) {
        return Err(Error::Validation(format!(
            "trace_branch: empty frequency range [{start}, {stop}]"
        )));
    }
    if !(initial_step > 0.0) {
        return Err(Error::Validation(
            "trace_branch: initial_step must be positive".into(),
        ));
    }
    let seed_omega = seed.root.omega;
    let forward = if (seed_omega - start).abs() <= 1e-9 * (1.0 + start.abs()) {
        true
    } else if (seed_omega - stop).abs() <= 1e-9 * (1.0 + stop.abs()) {
        false
    } else {
        return Err(Error::Validation(format!(
            "trace_branch: seed omega {seed_omega} is not an endpoint of [{start}, {stop}]"
        )));
    };

    // Re-polish the seed in the horizontal frame; the two representatives
    // differ by the frame's truncation asymmetry, and a near-axis root may
    // need the below-axis nudge ladder to converge at all.
    let at_seed = config.with_omega(seed_omega);
    let mut polished = Err(Error::ContinuationStalled {
        omega: seed_omega,
        reason: "seed polish not attempted".into(),
    });
    for depth in SEED_DEPTHS {
        polished = polish_root(&at_seed, trunc, nudged(seed.natural_epsilon, depth, &at_seed));
        if polished.is_ok() || config.v1 == 0.0 {
            break;
        }
    }
    let seed_eps = polished?;
    if (seed_eps - seed.natural_epsilon).norm() > 0.05 * config.v0 {
        return Err(Error::ContinuationStalled {
            omega: seed_omega,
            reason: format!(
                "horizontal-frame polish moved the seed from {} to {seed_eps}",
                seed.natural_epsilon
            ),
        });
    }

    // Step bookkeeping in integer units of the minimum step keeps every
    // sample on a lattice, so refined traces revisit identical frequencies.
    let unit = initial_step / 64.0;
    let span_units = ((stop - start) / unit).floor().max(1.0) as i64;
    let origin = if forward { start } else { stop };
    let direction = if forward { 1.0 } else { -1.0 };
    let omega_at = |units: i64| origin + direction * units as f64 * unit;

    let mut samples = vec![BranchSample {
        omega: seed_omega,
        epsilon: seed_eps,
        status: SampleStatus::Converged,
    }];
    let mut prev_delta: Option<(Complex64, f64)> = None; // (last eps step, its d-omega)
    let mut pos_units = 0_i64;
    let mut step_units = 64_i64;
    let mut streak = 0_u32;
    let mut end = BranchEnd::Completed;

    while pos_units < span_units {
        let next_units = (pos_units + step_units).min(span_units);
        // Land exactly on the range end for the final sample.
        let omega_next = if next_units == span_units {
            if forward {
                stop
            } else {
                start
            }
        } else {
            omega_at(next_units)
        };
        let omega_here = samples.last().expect("nonempty").omega;
        let d_omega = (omega_next - omega_here).abs();

        let last = samples.last().expect("nonempty").epsilon;
        let predicted = match prev_delta {
            Some((delta, d_prev)) if d_prev > 0.0 => last + delta * (d_omega / d_prev),
            _ => last,
        };

        let driven = config.with_omega(omega_next);
        let corrected = polish_root(&driven, trunc, predicted);

        let allowed = match prev_delta {
            Some((delta, d_prev)) if d_prev > 0.0 => {
                let scaled = delta.norm() * (d_omega / d_prev);
                (0.5 * scaled).max(2e-4 * config.v0 * (d_omega / initial_step))
            }
            _ => (6.0 * d_omega).max(1e-3 * config.v0),
        };

        match corrected {
            Ok(eps) if (eps - predicted).norm() <= allowed => {
                prev_delta = Some((eps - last, d_omega));
                samples.push(BranchSample {
                    omega: omega_next,
                    epsilon: eps,
                    status: SampleStatus::Converged,
                });
                pos_units = next_units;
                streak += 1;
                if streak >= 4 && step_units < 64 {
                    step_units *= 2;
                    streak = 0;
                }
            }
            _ => {
                streak = 0;
                if step_units > 1 {
                    step_units /= 2;
                } else {
                    end = BranchEnd::Gap { omega: omega_next };
                    break;
                }
            }
        }
    }

    if !forward {
        samples.reverse();
    }
    if samples.len() < 2 {
        return Err(Error::ContinuationStalled {
            omega: seed_omega,
            reason: "no continuation step converged from the seed".into(),
        });
    }
    Ok(Branch {
        id: BranchId {
            parent_index: seed.parent_index,
            sideband_offset: seed.sideband_offset,
        },
        parent: seed.parent,
        hbar: config.hbar,
        samples,
        end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    Direct,
    Avoided,
}

/// Classification record for a crossing between two branches.
#[derive(Debug, Clone, Copy)]
pub struct CrossingEvent {
    pub kind: CrossingKind,
    /// Frequency of the real-part intersection (direct) or of the minimal
    /// gap (avoided).
    pub omega_at: f64,
    /// Minimal gap between the zone-view real parts; exactly zero for a
    /// direct crossing.
    pub min_gap: f64,
    /// Whether the imaginary parts exchanged across the crossing.
    pub exchanged_imaginary: bool,
    pub branches: (BranchId, BranchId),
}

/// Resample a branch's zone view on a uniform grid over `window`.
fn resample(branch: &Branch, window: (f64, f64), points: usize) -> Option<Vec<BranchSample>> {
    let (lo, hi) = window;
    let mut out = Vec::with_capacity(points);
    for j in 0..points {
        let omega = lo + (hi - lo) * j as f64 / (points - 1) as f64;
        let epsilon = branch.zone_interpolate(omega)?;
        out.push(BranchSample {
            omega,
            epsilon,
            status: SampleStatus::Interpolated,
        });
    }
    Some(out)
}

/// Classify the crossing between two branches inside `omega_window`.
///
/// Direct: the real-part gap changes sign while the imaginary parts do not
/// exchange. Avoided: the gap keeps its sign, attains a positive minimum
/// below `gap_threshold`, and the imaginary parts exchange. Anything else is
/// reported as a classification error rather than guessed.
pub fn classify_crossing(
    branch_a: &Branch,
    branch_b: &Branch,
    omega_window: (f64, f64),
    gap_threshold: f64,
) -> Result<CrossingEvent> {
    let (lo, hi) = omega_window;
    if !(hi > lo) {
        return Err(Error::Validation(format!(
            "classify_crossing: empty window [{lo}, {hi}]"
        )));
    }
    for (name, branch) in [("first", branch_a), ("second", branch_b)] {
        let Some((b_lo, b_hi)) = branch.span() else {
            return Err(Error::Classification(format!("{name} branch is empty")));
        };
        if b_lo > lo + 1e-9 || b_hi < hi - 1e-9 {
            return Err(Error::Classification(format!(
                "{name} branch covers [{b_lo:.6}, {b_hi:.6}], not the window [{lo:.6}, {hi:.6}]"
            )));
        }
        let in_window = branch
            .samples
            .iter()
            .filter(|s| s.omega >= lo - 1e-9 && s.omega <= hi + 1e-9)
            .count();
        if in_window < 8 {
            return Err(Error::Classification(format!(
                "{name} branch has only {in_window} samples inside the window"
            )));
        }
    }

    let points = 2048;
    let grid_a = resample(branch_a, omega_window, points).expect("span checked");
    let grid_b = resample(branch_b, omega_window, points).expect("span checked");

    let gap: Vec<f64> = grid_a
        .iter()
        .zip(&grid_b)
        .map(|(a, b)| a.epsilon.re - b.epsilon.re)
        .collect();
    let d_im: Vec<f64> = grid_a
        .iter()
        .zip(&grid_b)
        .map(|(a, b)| a.epsilon.im - b.epsilon.im)
        .collect();

    let scale = gap.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if scale < 1e-12 {
        return Err(Error::Classification(
            "real-part gap is identically zero (branch compared with itself?)".into(),
        ));
    }

    let sign_change = |values: &[f64]| -> Option<usize> {
        values
            .windows(2)
            .position(|pair| pair[0] != 0.0 && pair[0] * pair[1] < 0.0)
    };
    let gap_crossing = sign_change(&gap);
    let im_crossing = sign_change(&d_im);

    // Minimal |gap| with a parabolic refinement around the grid minimum.
    let (mut min_idx, mut min_gap) = (0usize, f64::INFINITY);
    for (j, g) in gap.iter().enumerate() {
        if g.abs() < min_gap {
            min_gap = g.abs();
            min_idx = j;
        }
    }
    let mut omega_min = grid_a[min_idx].omega;
    if min_idx > 0 && min_idx + 1 < points {
        let (f0, f1, f2) = (
            gap[min_idx - 1].abs(),
            gap[min_idx].abs(),
            gap[min_idx + 1].abs(),
        );
        let denom = f0 - 2.0 * f1 + f2;
        if denom > 0.0 {
            let shift = 0.5 * (f0 - f2) / denom;
            if shift.abs() <= 1.0 {
                let h = grid_a[1].omega - grid_a[0].omega;
                omega_min += shift * h;
                min_gap = (f1 - 0.25 * (f0 - f2) * shift).abs();
            }
        }
    }

    let ids = (branch_a.id, branch_b.id);
    match (gap_crossing, im_crossing) {
        (Some(j), None) => {
            let (g0, g1) = (gap[j], gap[j + 1]);
            let weight = g0 / (g0 - g1);
            let omega_at = grid_a[j].omega + weight * (grid_a[j + 1].omega - grid_a[j].omega);
            Ok(CrossingEvent {
                kind: CrossingKind::Direct,
                omega_at,
                min_gap: 0.0,
                exchanged_imaginary: false,
                branches: ids,
            })
        }
        (None, Some(_)) => {
            if min_gap < gap_threshold {
                Ok(CrossingEvent {
                    kind: CrossingKind::Avoided,
                    omega_at: omega_min,
                    min_gap,
                    exchanged_imaginary: true,
                    branches: ids,
                })
            } else {
                Err(Error::Classification(format!(
                    "imaginary parts exchange but the minimal gap {min_gap:.3e} exceeds the \
                     threshold {gap_threshold:.3e}"
                )))
            }
        }
        (Some(_), Some(_)) => Err(Error::Classification(
            "both the real parts and the imaginary parts change order in the window".into(),
        )),
        (None, None) => Err(Error::Classification(
            "no real-part crossing and no imaginary-part exchange in the window".into(),
        )),
    }
}

/// Outcome of one amplitude point of a crossing scan.
#[derive(Debug)]
pub struct CrossingScanEntry {
    pub v1: f64,
    pub outcome: Result<CrossingEvent>,
}

/// Classify the crossing between the branches of the two lowest static
/// levels for each drive amplitude in `v1_values`.
///
/// The second level enters the window on the sideband offset that brings it
/// next to the first level at the window centre. Ambiguous classifications
/// retry with halved continuation steps and a window shrunk around the
/// closest approach, up to three rounds; per-amplitude failures are recorded
/// inline and the scan continues.
pub fn crossing_scan(
    config: &WellConfig,
    trunc: &Truncation,
    v1_values: &[f64],
    omega_window: (f64, f64),
) -> Result<Vec<CrossingScanEntry>> {
    let (lo, hi) = omega_window;
    if !(hi > lo) {
        return Err(Error::Validation(format!(
            "crossing_scan: empty window [{lo}, {hi}]"
        )));
    }
    let levels = crate::model::enumerate_static_levels(&config.with_v1(0.0).with_omega(0.0), 512)?;
    if levels.len() < 2 {
        return Err(Error::Validation(format!(
            "crossing_scan needs two static levels, found {}",
            levels.len()
        )));
    }
    let low = levels[0];
    let high = levels[1];
    let mid = 0.5 * (lo + hi);
    let offset = -((high.energy.re - low.energy.re) / (config.hbar * mid)).round() as i32;

    let mut entries = Vec::with_capacity(v1_values.len());
    for &v1 in v1_values {
        let outcome = classify_pair(config, trunc, v1, (low, high), offset, omega_window);
        entries.push(CrossingScanEntry { v1, outcome });
    }
    Ok(entries)
}

fn classify_pair(
    config: &WellConfig,
    trunc: &Truncation,
    v1: f64,
    levels: (StaticLevel, StaticLevel),
    offset: i32,
    window: (f64, f64),
) -> Result<CrossingEvent> {
    let driven = config.with_v1(v1);
    let gap_threshold = 0.05 * driven.hbar * 0.5 * (window.0 + window.1);
    let mut step = 0.005 * driven.v0;
    let mut round_window = window;
    let mut last_err: Option<Error> = None;

    for _ in 0..3 {
        match trace_pair_and_classify(
            &driven,
            trunc,
            levels,
            offset,
            round_window,
            step,
            gap_threshold,
        ) {
            Ok(event) => return Ok(event),
            Err(err) => {
                // Shrink around the centre when the verdict was ambiguous.
                if let Error::Classification(_) = err {
                    let width = round_window.1 - round_window.0;
                    let centre = 0.5 * (round_window.0 + round_window.1);
                    let new_half = 0.25 * width;
                    round_window = (
                        (centre - new_half).max(window.0),
                        (centre + new_half).min(window.1),
                    );
                }
                step *= 0.5;
                last_err = Some(err);
            }
        }
    }
    Err(last_err.expect("three rounds attempted"))
}

fn trace_pair_and_classify(
    driven: &WellConfig,
    trunc: &Truncation,
    (low, high): (StaticLevel, StaticLevel),
    offset: i32,
    window: (f64, f64),
    step: f64,
    gap_threshold: f64,
) -> Result<CrossingEvent> {
    let start = window.0;
    let at_start = driven.with_omega(start);

    let seed_level = |level: StaticLevel, parent_index: usize, n: i32| -> Result<SeededRoot> {
        let mut last_err = None;
        for depth in SEED_DEPTHS {
            match natural_root(&at_start, trunc, nudged(level.energy, depth, &at_start)) {
                Ok(root) => {
                    let natural_epsilon = root.epsilon;
                    return Ok(SeededRoot {
                        root,
                        natural_epsilon,
                        parent: level,
                        parent_index,
                        sideband_offset: n,
                    });
                }
                Err(err) => last_err = Some(err),
            }
        }
        Err(last_err.expect("attempted"))
    };

    let seed_low = seed_level(low, 0, 0)?;
    let seed_high = seed_level(high, 1, offset)?;
    if (seed_high.natural_epsilon - seed_low.natural_epsilon).norm() < 1e-6 {
        return Err(Error::Classification(
            "the two branch seeds collapsed onto the same root".into(),
        ));
    }

    let branch_low = trace_branch(driven, trunc, &seed_low, window, step)?;
    let branch_high = trace_branch(driven, trunc, &seed_high, window, step)?;
    classify_crossing(&branch_low, &branch_high, window, gap_threshold)
}
