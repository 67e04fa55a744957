//! The driven-problem machinery.
//!
//! Expanding the periodic factor of a Floquet state over sidebands turns the
//! interface matching conditions into an infinite linear system coupling the
//! barrier coefficients `a_l`, `b_l` of every sideband. Truncating at `|n| <=
//! N` and eliminating the subband (`n != 0`) unknowns in favour of `a_0`,
//! `b_0` leaves the central-band conditions dressed by eight reduction
//! coefficients `F1..F8`; demanding a nontrivial solution then gives one
//! scalar equation for the quasienergy, evaluated by [`floquet_residual`].
//!
//! The subband unknowns are rescaled internally, each anchored at the
//! interface where its exponential peaks (`a~_l = a_l exp(q_l b)`,
//! `b~_l = b_l exp(-q_l a)`), so every matrix entry stays bounded and no
//! reconstruction step multiplies a solve error by `exp(+q_l (b-a))`; the
//! raw factors already reach 1e7 at moderate parameters.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    channel_momenta, check_central_channel, reduced_matching_residual, ChannelMomenta, WellConfig,
};
use crate::numerics::linear::{solve_linear_multi, ComplexMatrix};
use crate::numerics::rootfind::{find_root, RootFindSettings};
use crate::numerics::{bessel_jn, sinc};

/// Relative threshold below which a subband decay constant counts as singular.
const SINGULAR_REL: f64 = 1e-12;

/// Sideband truncation and numerical tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Truncation {
    /// Number of sidebands kept on each side of the central band.
    pub sidebands: usize,
    /// Residual tolerance for converged quasienergies.
    pub residual_tol: f64,
    /// Conditioning estimate above which the subband solve is rejected.
    pub condition_warn: f64,
}

impl Truncation {
    /// Default truncation for a drive: `N = max(2, ceil(V1/hw) + 1)`, which
    /// keeps `N > V1/(hbar omega)` with margin.
    pub fn for_drive(config: &WellConfig) -> Self {
        let alpha = config.drive_strength();
        let n = if alpha > 0.0 && alpha.is_finite() {
            (alpha.min(62.0).ceil() as usize + 1).max(2)
        } else {
            2
        };
        Truncation {
            sidebands: n,
            residual_tol: 1e-10,
            condition_warn: 1e12,
        }
    }

    pub fn with_sidebands(mut self, n: usize) -> Self {
        self.sidebands = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sidebands < 1 {
            return Err(Error::Validation("truncation requires N >= 1".into()));
        }
        if !(self.residual_tol > 0.0) || !(self.condition_warn > 1.0) {
            return Err(Error::Validation(
                "truncation tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn root_settings(&self) -> RootFindSettings {
        RootFindSettings {
            residual_tol: self.residual_tol,
            ..RootFindSettings::default()
        }
    }
}

/// Complex table indexed by the nonzero sidebands `l in {-N..N} \ {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandTable {
    sidebands: usize,
    data: Vec<Complex64>,
}

impl SubbandTable {
    pub fn zeros(sidebands: usize) -> Self {
        SubbandTable {
            sidebands,
            data: vec![Complex64::new(0.0, 0.0); 2 * sidebands],
        }
    }

    fn slot(&self, l: i32) -> usize {
        let n = self.sidebands as i32;
        debug_assert!(l != 0 && l.abs() <= n);
        if l < 0 {
            (l + n) as usize
        } else {
            (l + n - 1) as usize
        }
    }

    pub fn get(&self, l: i32) -> Complex64 {
        self.data[self.slot(l)]
    }

    pub fn set(&mut self, l: i32, value: Complex64) {
        let slot = self.slot(l);
        self.data[slot] = value;
    }

    /// Nonzero sideband indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = i32> {
        let n = self.sidebands as i32;
        (-n..=n).filter(|&l| l != 0)
    }
}

/// Complex table indexed by the full sideband range `n in -N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandSeries {
    sidebands: usize,
    data: Vec<Complex64>,
}

impl SidebandSeries {
    pub fn zeros(sidebands: usize) -> Self {
        SidebandSeries {
            sidebands,
            data: vec![Complex64::new(0.0, 0.0); 2 * sidebands + 1],
        }
    }

    pub fn get(&self, n: i32) -> Complex64 {
        self.data[(n + self.sidebands as i32) as usize]
    }

    pub fn set(&mut self, n: i32, value: Complex64) {
        let slot = (n + self.sidebands as i32) as usize;
        self.data[slot] = value;
    }

    pub fn indices(&self) -> impl Iterator<Item = i32> {
        let n = self.sidebands as i32;
        -n..=n
    }
}

/// Linear response of the subband coefficients to the central band:
/// `a_l = f_a[l] a_0 + f_b[l] b_0`, `b_l = g_a[l] a_0 + g_b[l] b_0`.
#[derive(Debug, Clone)]
pub struct SubbandSolution {
    pub f_a: SubbandTable,
    pub f_b: SubbandTable,
    pub g_a: SubbandTable,
    pub g_b: SubbandTable,
}

impl SubbandSolution {
    pub fn zeros(sidebands: usize) -> Self {
        SubbandSolution {
            f_a: SubbandTable::zeros(sidebands),
            f_b: SubbandTable::zeros(sidebands),
            g_a: SubbandTable::zeros(sidebands),
            g_b: SubbandTable::zeros(sidebands),
        }
    }

    pub fn sidebands(&self) -> usize {
        self.f_a.sidebands
    }

    /// Implied coefficient pair `(a_l, b_l)` for given `(a_0, b_0)`.
    pub fn coefficients(&self, l: i32, a0: Complex64, b0: Complex64) -> (Complex64, Complex64) {
        (
            self.f_a.get(l) * a0 + self.f_b.get(l) * b0,
            self.g_a.get(l) * a0 + self.g_b.get(l) * b0,
        )
    }
}

/// Channel momenta and Bessel weights reused across the assembly and
/// reduction steps at one evaluation point.
struct ChannelSet {
    sidebands: usize,
    momenta: Vec<ChannelMomenta>,
    /// `J_m(alpha)` for `|m| <= 2N`.
    bessel: Vec<f64>,
}

impl ChannelSet {
    fn build(config: &WellConfig, trunc: &Truncation, epsilon: Complex64) -> Result<ChannelSet> {
        let n = trunc.sidebands as i32;
        let threshold = SINGULAR_REL * config.v0;
        let mut momenta = Vec::with_capacity(2 * trunc.sidebands + 1);
        for idx in -n..=n {
            let cm = channel_momenta(config, epsilon, idx)?;
            // q_l = 0 degenerates the two barrier exponentials of channel l.
            let e_l = epsilon + Complex64::new(idx as f64 * config.photon(), 0.0);
            if (Complex64::new(config.v0, 0.0) - e_l).norm() < threshold {
                return Err(Error::SingularChannel {
                    what: "q (energy at the barrier top)",
                    channel: idx,
                });
            }
            momenta.push(cm);
        }
        let alpha = config.drive_strength();
        let mut bessel = Vec::with_capacity(4 * trunc.sidebands + 1);
        for m in -2 * n..=2 * n {
            bessel.push(bessel_jn(m, alpha)?);
        }
        Ok(ChannelSet {
            sidebands: trunc.sidebands,
            momenta,
            bessel,
        })
    }

    fn momenta(&self, n: i32) -> &ChannelMomenta {
        &self.momenta[(n + self.sidebands as i32) as usize]
    }

    fn j(&self, m: i32) -> f64 {
        self.bessel[(m + 2 * self.sidebands as i32) as usize]
    }
}

/// `A±(n, l) = cos(k_n a) ± (q_l/k_n) sin(k_n a)`, in the form
/// `cos(k_n a) ± q_l a sinc(k_n a)` which stays regular as `k_n -> 0`.
fn a_pm(k_n: Complex64, q_l: Complex64, a: f64, sign: f64) -> Complex64 {
    let ka = k_n * a;
    ka.cos() + sign * q_l * a * sinc(ka)
}

/// Solve the truncated subband elimination system at quasienergy `epsilon`.
///
/// The rows are the interface conditions at `x = a` (inner amplitude
/// eliminated) and at `x = b` (outgoing amplitude eliminated, multiplied
/// through by `k'_n` so channel thresholds do not inflate the matrix); the
/// system is solved once per central-band unit vector and the responses
/// unscaled back to the raw `a_l`, `b_l` coefficients.
pub fn subband_solve(
    config: &WellConfig,
    trunc: &Truncation,
    epsilon: Complex64,
) -> Result<SubbandSolution> {
    config.validate()?;
    trunc.validate()?;
    check_central_channel(config, epsilon)?;
    if config.v1 == 0.0 {
        return Ok(SubbandSolution::zeros(trunc.sidebands));
    }

    let channels = ChannelSet::build(config, trunc, epsilon)?;
    let n_side = trunc.sidebands as i32;
    let width = config.b - config.a;
    let i = Complex64::new(0.0, 1.0);
    let dim = 4 * trunc.sidebands;

    let nonzero: Vec<i32> = (-n_side..=n_side).filter(|&l| l != 0).collect();
    let col_a = |j: usize| 2 * j;
    let col_b = |j: usize| 2 * j + 1;

    let mut matrix = ComplexMatrix::zeros(dim);
    let mut rhs_a0 = vec![Complex64::new(0.0, 0.0); dim];
    let mut rhs_b0 = vec![Complex64::new(0.0, 0.0); dim];

    let q0 = channels.momenta(0).q;

    for (row_pair, &n) in nonzero.iter().enumerate() {
        let cm_n = channels.momenta(n);
        let row7 = 2 * row_pair;
        let row8 = 2 * row_pair + 1;
        for (col_pair, &l) in nonzero.iter().enumerate() {
            let q_l = channels.momenta(l).q;
            let j_nl = channels.j(n - l);
            let suppress = (-q_l * width).exp();
            matrix[(row7, col_a(col_pair))] = a_pm(cm_n.k, q_l, config.a, -1.0) * suppress * j_nl;
            matrix[(row7, col_b(col_pair))] = a_pm(cm_n.k, q_l, config.a, 1.0) * j_nl;
            matrix[(row8, col_a(col_pair))] = (cm_n.k_prime + i * q_l) * j_nl;
            matrix[(row8, col_b(col_pair))] = (cm_n.k_prime - i * q_l) * suppress * j_nl;
        }
        let j_n = channels.j(n);
        rhs_a0[row7] = -a_pm(cm_n.k, q0, config.a, -1.0) * (q0 * config.a).exp() * j_n;
        rhs_b0[row7] = -a_pm(cm_n.k, q0, config.a, 1.0) * (-q0 * config.a).exp() * j_n;
        rhs_a0[row8] = -(cm_n.k_prime + i * q0) * (q0 * config.b).exp() * j_n;
        rhs_b0[row8] = -(cm_n.k_prime - i * q0) * (-q0 * config.b).exp() * j_n;
    }

    let solution = solve_linear_multi(&matrix, &[rhs_a0, rhs_b0], trunc.condition_warn)?;

    let mut result = SubbandSolution::zeros(trunc.sidebands);
    for (col_pair, &l) in nonzero.iter().enumerate() {
        let q_l = channels.momenta(l).q;
        let unscale_a = (-q_l * config.b).exp();
        let unscale_b = (q_l * config.a).exp();
        result
            .f_a
            .set(l, solution.columns[0][col_a(col_pair)] * unscale_a);
        result
            .g_a
            .set(l, solution.columns[0][col_b(col_pair)] * unscale_b);
        result
            .f_b
            .set(l, solution.columns[1][col_a(col_pair)] * unscale_a);
        result
            .g_b
            .set(l, solution.columns[1][col_b(col_pair)] * unscale_b);
    }
    Ok(result)
}

/// Residual of the raw subband equations for a given central pair, relative
/// to the magnitude of their terms.
pub fn subband_residual(
    config: &WellConfig,
    trunc: &Truncation,
    epsilon: Complex64,
    sub: &SubbandSolution,
    a0: Complex64,
    b0: Complex64,
) -> Result<f64> {
    let channels = ChannelSet::build(config, trunc, epsilon)?;
    let i = Complex64::new(0.0, 1.0);
    let q0 = channels.momenta(0).q;
    let mut worst = 0.0_f64;

    for n in sub.f_a.indices() {
        let cm_n = channels.momenta(n);
        let mut acc7 = Complex64::new(0.0, 0.0);
        let mut acc8 = Complex64::new(0.0, 0.0);
        let mut scale7 = 0.0_f64;
        let mut scale8 = 0.0_f64;
        {
            let add = |acc: &mut Complex64, scale: &mut f64, term: Complex64| {
                *acc += term;
                *scale += term.norm();
            };
            let mut contribute = |l: Option<i32>, a_l: Complex64, b_l: Complex64| {
                let q_l = match l {
                    Some(l) => channels.momenta(l).q,
                    None => q0,
                };
                let j_w = match l {
                    Some(l) => channels.j(n - l),
                    None => channels.j(n),
                };
                add(
                    &mut acc7,
                    &mut scale7,
                    a_pm(cm_n.k, q_l, config.a, -1.0) * (q_l * config.a).exp() * j_w * a_l,
                );
                add(
                    &mut acc7,
                    &mut scale7,
                    a_pm(cm_n.k, q_l, config.a, 1.0) * (-q_l * config.a).exp() * j_w * b_l,
                );
                add(
                    &mut acc8,
                    &mut scale8,
                    (cm_n.k_prime + i * q_l) * (q_l * config.b).exp() * j_w * a_l,
                );
                add(
                    &mut acc8,
                    &mut scale8,
                    (cm_n.k_prime - i * q_l) * (-q_l * config.b).exp() * j_w * b_l,
                );
            };
            for l in sub.f_a.indices() {
                let (a_l, b_l) = sub.coefficients(l, a0, b0);
                contribute(Some(l), a_l, b_l);
            }
            contribute(None, a0, b0);
        }
        if scale7 > 0.0 {
            worst = worst.max(acc7.norm() / scale7);
        }
        if scale8 > 0.0 {
            worst = worst.max(acc8.norm() / scale8);
        }
    }
    Ok(worst)
}

/// The eight reduction coefficients dressing the central-band matching
/// conditions.
#[derive(Debug, Clone, Copy)]
pub struct FCoefficients {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: Complex64,
    pub f4: Complex64,
    pub f5: Complex64,
    pub f6: Complex64,
    pub f7: Complex64,
    pub f8: Complex64,
}

impl FCoefficients {
    pub fn unit() -> Self {
        let one = Complex64::new(1.0, 0.0);
        FCoefficients {
            f1: one,
            f2: one,
            f3: one,
            f4: one,
            f5: one,
            f6: one,
            f7: one,
            f8: one,
        }
    }

    pub fn as_array(&self) -> [Complex64; 8] {
        [
            self.f1, self.f2, self.f3, self.f4, self.f5, self.f6, self.f7, self.f8,
        ]
    }
}

/// Evaluate `F1..F8` from a subband solution.
///
/// Each coefficient is `J_0(alpha)` plus a sum over the nonzero sidebands
/// weighted by `J_{-l}(alpha)`; the whole set collapses to 1 as
/// `alpha = V1/(hbar omega) -> 0`.
pub fn f_coefficients(
    config: &WellConfig,
    trunc: &Truncation,
    epsilon: Complex64,
    sub: &SubbandSolution,
) -> Result<FCoefficients> {
    config.validate()?;
    trunc.validate()?;
    check_central_channel(config, epsilon)?;
    let channels = ChannelSet::build(config, trunc, epsilon)?;
    let q0 = channels.momenta(0).q;
    let j0 = Complex64::new(channels.j(0), 0.0);

    // Build the eight sideband sums; slots 0..3 belong to x = a, 4..7 to
    // x = b, ordered (value_a, value_b, slope_a, slope_b) per interface.
    let mut sums = [Complex64::new(0.0, 0.0); 8];
    for l in sub.f_a.indices() {
        let q_l = channels.momenta(l).q;
        let j_ml = channels.j(-l);
        let f_la = sub.f_a.get(l);
        let f_lb = sub.f_b.get(l);
        let g_la = sub.g_a.get(l);
        let g_lb = sub.g_b.get(l);
        for (x, base) in [(config.a, 0usize), (config.b, 4usize)] {
            let up = (q_l * x).exp();
            let down = (-q_l * x).exp();
            sums[base] += (f_la * up + g_la * down) * j_ml;
            sums[base + 1] += (f_lb * up + g_lb * down) * j_ml;
            sums[base + 2] += q_l / q0 * (f_la * up - g_la * down) * j_ml;
            sums[base + 3] += q_l / q0 * (f_lb * up - g_lb * down) * j_ml;
        }
    }

    let mut f = [j0; 8];
    for (x, base) in [(config.a, 0usize), (config.b, 4usize)] {
        let up = (q0 * x).exp();
        let down = (-q0 * x).exp();
        f[base] = j0 + down * sums[base];
        f[base + 1] = j0 + up * sums[base + 1];
        f[base + 2] = j0 + down * sums[base + 2];
        f[base + 3] = j0 - up * sums[base + 3];
    }
    for value in &f {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::NonFinite("reduction coefficient"));
        }
    }
    Ok(FCoefficients {
        f1: f[0],
        f2: f[1],
        f3: f[2],
        f4: f[3],
        f5: f[4],
        f6: f[5],
        f7: f[6],
        f8: f[7],
    })
}

/// Residual of the quasienergy equation at `epsilon`.
///
/// With `V1 = 0` this is bit-for-bit the static matching residual.
pub fn floquet_residual(
    config: &WellConfig,
    trunc: &Truncation,
    epsilon: Complex64,
) -> Result<Complex64> {
    config.validate()?;
    trunc.validate()?;
    check_central_channel(config, epsilon)?;
    let f = if config.v1 == 0.0 {
        FCoefficients::unit()
    } else {
        let sub = subband_solve(config, trunc, epsilon)?;
        f_coefficients(config, trunc, epsilon, &sub)?
    };
    let central = channel_momenta(config, epsilon, 0)?;
    reduced_matching_residual(&central, &f.as_array(), config.a, config.b)
}

/// Reduce `epsilon` to the first Floquet zone `0 <= Re < zone`, returning
/// the representative and the number of zone widths removed. The imaginary
/// part is preserved exactly.
pub fn reduce_to_first_zone(epsilon: Complex64, zone: f64) -> (Complex64, i64) {
    debug_assert!(zone > 0.0);
    let mut shifts = (epsilon.re / zone).floor();
    let mut re = epsilon.re - shifts * zone;
    if re >= zone {
        re -= zone;
        shifts += 1.0;
    }
    if re < 0.0 {
        re += zone;
        shifts -= 1.0;
    }
    (Complex64::new(re, epsilon.im), shifts as i64)
}

/// Full coefficient table of a converged Floquet state, `b_0` normalized
/// to 1.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    /// Inner-region amplitudes `A_n` of `sin(k_n x)`.
    pub inner: SidebandSeries,
    /// Growing barrier coefficients `a_l`.
    pub barrier_growing: SidebandSeries,
    /// Decaying barrier coefficients `b_l`.
    pub barrier_decaying: SidebandSeries,
    /// Outgoing amplitudes `t_n` of `exp(i k'_n x)`.
    pub outgoing: SidebandSeries,
}

/// A converged quasienergy with its coefficient table.
#[derive(Debug, Clone)]
pub struct FloquetRoot {
    /// Quasienergy in the first Floquet zone.
    pub epsilon: Complex64,
    /// Drive frequency the root was solved at.
    pub omega: f64,
    pub coefficients: CoefficientTable,
    pub truncation: Truncation,
    /// Configuration the root belongs to.
    pub well: WellConfig,
}

impl FloquetRoot {
    /// Re-evaluate the quasienergy residual at this root.
    pub fn residual(&self) -> Result<Complex64> {
        floquet_residual(&self.well, &self.truncation, self.epsilon)
    }

    /// Decaying or stable states have `Im(eps) <= 0`; a positive imaginary
    /// part at convergence marks an unphysical root.
    pub fn is_physical(&self) -> bool {
        self.epsilon.im <= 1e-12 * self.well.v0
    }

    /// Lifetime `hbar / (2 |Im eps|)` of a metastable root.
    pub fn lifetime(&self) -> Option<f64> {
        (self.epsilon.im < 0.0).then(|| self.well.hbar / (2.0 * self.epsilon.im.abs()))
    }
}

/// Solve for a Floquet root near `guess`, reduce it to the first zone, and
/// reconstruct the full coefficient table.
pub fn solve_floquet(
    config: &WellConfig,
    trunc: &Truncation,
    guess: Complex64,
) -> Result<FloquetRoot> {
    config.validate()?;
    trunc.validate()?;
    let zone = config.photon();
    let reduce = zone > 0.0;

    let mut seed = if reduce {
        reduce_to_first_zone(guess, zone).0
    } else {
        guess
    };
    let mut root = polish_root(config, trunc, seed)?;
    for _ in 0..3 {
        if !reduce || (root.re >= 0.0 && root.re < zone) {
            break;
        }
        seed = reduce_to_first_zone(root, zone).0;
        root = polish_root(config, trunc, seed)?;
    }
    if reduce && !(root.re >= 0.0 && root.re < zone) {
        return Err(Error::Validation(format!(
            "root {root} keeps escaping the first Floquet zone [0, {zone})"
        )));
    }

    let coefficients = reconstruct_table(config, trunc, root)?;
    Ok(FloquetRoot {
        epsilon: root,
        omega: config.omega,
        coefficients,
        truncation: *trunc,
        well: *config,
    })
}

/// Polish a quasienergy without zone handling or table reconstruction.
pub(crate) fn polish_root(
    config: &WellConfig,
    trunc: &Truncation,
    guess: Complex64,
) -> Result<Complex64> {
    find_root(
        |eps| floquet_residual(config, trunc, eps),
        guess,
        &trunc.root_settings(),
    )
}

/// Solve for a root near `guess` without reducing it to the first zone.
///
/// Branch continuation follows the horizontal representative of a sideband
/// family, which deliberately lives outside the zone so that the dominant
/// channel stays central in the truncated band; the zone view is recovered
/// by adding the family's photon offset.
pub(crate) fn natural_root(
    config: &WellConfig,
    trunc: &Truncation,
    guess: Complex64,
) -> Result<FloquetRoot> {
    config.validate()?;
    trunc.validate()?;
    let epsilon = polish_root(config, trunc, guess)?;
    let coefficients = reconstruct_table(config, trunc, epsilon)?;
    Ok(FloquetRoot {
        epsilon,
        omega: config.omega,
        coefficients,
        truncation: *trunc,
        well: *config,
    })
}

/// Back-substitute the full coefficient table at a converged root.
fn reconstruct_table(
    config: &WellConfig,
    trunc: &Truncation,
    epsilon: Complex64,
) -> Result<CoefficientTable> {
    let channels = ChannelSet::build(config, trunc, epsilon)?;
    let sub = if config.v1 == 0.0 {
        SubbandSolution::zeros(trunc.sidebands)
    } else {
        subband_solve(config, trunc, epsilon)?
    };
    let f = if config.v1 == 0.0 {
        FCoefficients::unit()
    } else {
        f_coefficients(config, trunc, epsilon, &sub)?
    };

    let central = channels.momenta(0);
    let i = Complex64::new(0.0, 1.0);
    let denom = f.f7 * central.q - i * f.f5 * central.k_prime;
    let denom_scale = (f.f7 * central.q).norm() + (f.f5 * central.k_prime).norm();
    if denom.norm() <= 1e-12 * denom_scale.max(1e-300) {
        return Err(Error::PoleProximity {
            what: "F7 q0 - i F5 k'0",
            magnitude: denom.norm(),
        });
    }
    let ratio = (f.f8 * central.q + i * f.f6 * central.k_prime) / denom;

    let b0 = Complex64::new(1.0, 0.0);
    let a0 = ratio * (-2.0 * central.q * config.b).exp() * b0;

    let mut barrier_growing = SidebandSeries::zeros(trunc.sidebands);
    let mut barrier_decaying = SidebandSeries::zeros(trunc.sidebands);
    barrier_growing.set(0, a0);
    barrier_decaying.set(0, b0);
    for l in sub.f_a.indices() {
        let (a_l, b_l) = sub.coefficients(l, a0, b0);
        barrier_growing.set(l, a_l);
        barrier_decaying.set(l, b_l);
    }

    let mut inner = SidebandSeries::zeros(trunc.sidebands);
    let mut outgoing = SidebandSeries::zeros(trunc.sidebands);
    for n in -(trunc.sidebands as i32)..=(trunc.sidebands as i32) {
        let cm_n = channels.momenta(n);
        // Interface sums at x = a and x = b for this channel.
        let mut value_a = Complex64::new(0.0, 0.0);
        let mut slope_a = Complex64::new(0.0, 0.0);
        let mut value_b = Complex64::new(0.0, 0.0);
        for l in -(trunc.sidebands as i32)..=(trunc.sidebands as i32) {
            let q_l = channels.momenta(l).q;
            let j_nl = channels.j(n - l);
            let a_l = barrier_growing.get(l);
            let b_l = barrier_decaying.get(l);
            let up = a_l * (q_l * config.a).exp() * j_nl;
            let down = b_l * (-q_l * config.a).exp() * j_nl;
            value_a += up + down;
            slope_a += q_l * (up - down);
            value_b += (a_l * (q_l * config.b).exp() + b_l * (-q_l * config.b).exp()) * j_nl;
        }
        let sin_a = (cm_n.k * config.a).sin();
        let kcos_a = cm_n.k * (cm_n.k * config.a).cos();
        // Take whichever interface line has the better-conditioned factor.
        let amplitude = if sin_a.norm() >= kcos_a.norm() {
            if sin_a.norm() < 1e-280 {
                return Err(Error::SingularChannel {
                    what: "sin(k_n a) in amplitude back-substitution",
                    channel: n,
                });
            }
            value_a / sin_a
        } else {
            slope_a / kcos_a
        };
        inner.set(n, amplitude);
        outgoing.set(n, value_b * (-i * cm_n.k_prime * config.b).exp());
    }

    for series in [&inner, &barrier_growing, &barrier_decaying, &outgoing] {
        for n in series.indices() {
            let value = series.get(n);
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(Error::NonFinite("reconstructed coefficient table"));
            }
        }
    }

    Ok(CoefficientTable {
        inner,
        barrier_growing,
        barrier_decaying,
        outgoing,
    })
}

/// Worst relative mismatch of the four interface conditions across all
/// retained sidebands for a reconstructed root.
pub fn boundary_matching_residual(root: &FloquetRoot) -> Result<f64> {
    let config = &root.well;
    let trunc = &root.truncation;
    let channels = ChannelSet::build(config, trunc, root.epsilon)?;
    let table = &root.coefficients;
    let i = Complex64::new(0.0, 1.0);
    let mut worst = 0.0_f64;

    for n in table.inner.indices() {
        let cm_n = channels.momenta(n);
        let mut value_a = Complex64::new(0.0, 0.0);
        let mut slope_a = Complex64::new(0.0, 0.0);
        let mut value_b = Complex64::new(0.0, 0.0);
        let mut slope_b = Complex64::new(0.0, 0.0);
        let mut scale_a = 0.0_f64;
        let mut scale_b = 0.0_f64;
        for l in table.barrier_growing.indices() {
            let q_l = channels.momenta(l).q;
            let j_nl = channels.j(n - l);
            let a_l = table.barrier_growing.get(l);
            let b_l = table.barrier_decaying.get(l);
            let up_a = a_l * (q_l * config.a).exp() * j_nl;
            let down_a = b_l * (-q_l * config.a).exp() * j_nl;
            let up_b = a_l * (q_l * config.b).exp() * j_nl;
            let down_b = b_l * (-q_l * config.b).exp() * j_nl;
            value_a += up_a + down_a;
            slope_a += q_l * (up_a - down_a);
            value_b += up_b + down_b;
            slope_b += q_l * (up_b - down_b);
            scale_a += up_a.norm() + down_a.norm();
            scale_b += up_b.norm() + down_b.norm();
        }
        let a_n = table.inner.get(n);
        let t_n = table.outgoing.get(n);
        let lines = [
            (a_n * (cm_n.k * config.a).sin(), value_a, scale_a),
            (cm_n.k * a_n * (cm_n.k * config.a).cos(), slope_a, scale_a),
            (t_n * (i * cm_n.k_prime * config.b).exp(), value_b, scale_b),
            (
                i * cm_n.k_prime * t_n * (i * cm_n.k_prime * config.b).exp(),
                slope_b,
                scale_b,
            ),
        ];
        for (lhs, rhs, scale) in lines {
            let denom = lhs.norm().max(rhs.norm()).max(1e-6 * scale);
            let diff = (lhs - rhs).norm();
            if diff > 0.0 && denom > 0.0 {
                worst = worst.max(diff / denom);
            }
        }
    }
    Ok(worst)
}
