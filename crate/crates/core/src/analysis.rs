//! Entanglement witness, angular-momentum decomposition, and the
//! emitter-loss threshold sweep.
//!
//! The witness `W = 1 - 4 Re[C0] + C_zz` is built from two collective pair
//! observables and detects entanglement whenever `W < 0`. It is bounded
//! below by `-2/(N-1)`, attained exactly on the half-excited symmetric
//! Dicke state.

use ndarray::ArrayView2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dicke::{c0_of_jm, multiplicity, JMLabel, JmBasis};
use crate::error::{Error, Result};
use crate::lindblad::{self, ExactOptions};
use crate::model::{InitialCondition, SystemParams, TimeGrid};

/// Pair coherences smaller than this count as neither super- nor subradiant.
pub const RADIANCE_NEUTRAL_THRESHOLD: f64 = 1e-12;

/// Resolution (in γ/g) to which the detection threshold is bisected.
pub const THRESHOLD_RESOLUTION: f64 = 0.01;

/// Entanglement witness value from the two collective pair observables.
pub fn witness(c0: C64, c_zz: f64) -> f64 {
    1.0 - 4.0 * c0.re + c_zz
}

/// Lower bound `-2/(N-1)` of the witness over all physical states.
pub fn witness_floor(n_emitters: usize) -> Result<f64> {
    if n_emitters < 2 {
        return Err(Error::InvalidParameter(
            "the witness floor needs at least 2 emitters".into(),
        ));
    }
    Ok(-2.0 / (n_emitters as f64 - 1.0))
}

/// Sign of the correlated-emission contribution of a state or sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadianceClass {
    /// pair coherence > threshold: emission faster than independent
    Superradiant,
    /// pair coherence < -threshold: emission slower than independent
    Subradiant,
    /// |pair coherence| within threshold of zero
    Neutral,
}

/// Classify a pair coherence value.
pub fn classify(c0: f64) -> RadianceClass {
    if c0 > RADIANCE_NEUTRAL_THRESHOLD {
        RadianceClass::Superradiant
    } else if c0 < -RADIANCE_NEUTRAL_THRESHOLD {
        RadianceClass::Subradiant
    } else {
        RadianceClass::Neutral
    }
}

/// Weight of one `(j, m)` eigenspace in an emitter state.
#[derive(Debug, Clone)]
pub struct JMComponent {
    pub label: JMLabel,
    /// population `Tr[rho P_jm]` carried by the whole eigenspace
    pub weight: f64,
    /// number of degenerate `(j, m)` copies
    pub multiplicity: u128,
    /// pair coherence of the normalized eigenspace mixture
    pub c0: f64,
    pub classification: RadianceClass,
}

fn swap_adjacent_index(state: usize, n: usize, i: usize) -> usize {
    let hi = n - 1 - i;
    let lo = n - 2 - i;
    let a = (state >> hi) & 1;
    let b = (state >> lo) & 1;
    if a == b {
        state
    } else {
        state ^ (1 << hi) ^ (1 << lo)
    }
}

fn permutation_asymmetry(rho: &ArrayView2<C64>, n: usize) -> f64 {
    let dim = 1usize << n;
    let mut norm = 0.0f64;
    for v in rho.iter() {
        norm += v.norm_sqr();
    }
    let norm = norm.sqrt().max(1e-300);
    let mut worst = 0.0f64;
    for i in 0..n - 1 {
        let mut diff = 0.0f64;
        for r in 0..dim {
            let pr = swap_adjacent_index(r, n, i);
            for c in 0..dim {
                let pc = swap_adjacent_index(c, n, i);
                diff += (rho[(pr, pc)] - rho[(r, c)]).norm_sqr();
            }
        }
        worst = worst.max(diff.sqrt() / norm);
    }
    worst
}

/// Resolve an emitter density matrix into `(j, m)` eigenspace populations.
///
/// The input must be a normalized `2^N x 2^N` state. States that are not
/// permutation symmetric (relative Frobenius asymmetry above 1e-6) still
/// decompose, but the sector weights then miss the coherences between
/// degenerate copies; a warning is printed for that case.
pub fn decompose(rho: &ArrayView2<C64>, n_emitters: usize) -> Result<Vec<JMComponent>> {
    if n_emitters < 2 {
        return Err(Error::InvalidParameter(
            "the sector decomposition needs at least 2 emitters".into(),
        ));
    }
    let dim = 1usize
        .checked_shl(n_emitters as u32)
        .ok_or_else(|| Error::InvalidParameter("emitter count too large".into()))?;
    if rho.dim() != (dim, dim) {
        return Err(Error::ShapeMismatch(format!(
            "expected {dim}x{dim} emitter state for N = {n_emitters}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let trace: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
    if (trace.re - 1.0).abs() > 1e-6 || trace.im.abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "emitter state must have unit trace, got {trace}"
        )));
    }
    let asym = permutation_asymmetry(rho, n_emitters);
    if asym > 1e-6 {
        eprintln!(
            "warning: emitter state is not permutation symmetric \
             (relative asymmetry {asym:.2e}); sector weights ignore \
             cross-copy coherences"
        );
    }
    let basis = JmBasis::new(n_emitters)?;
    let owned = rho.to_owned();
    let mut components = Vec::new();
    let mut total = 0.0;
    for sector in basis.sectors() {
        let label = sector.label;
        let weight = basis.sector_weight(&owned, &label)?;
        if weight < -1e-6 {
            return Err(Error::InvalidParameter(format!(
                "sector {label} carries negative population {weight}; \
                 the input is not a density matrix"
            )));
        }
        // rounding noise and residual integrator error can push an empty
        // sector's quadratic form a hair below zero
        let weight = weight.max(0.0);
        let c0 = c0_of_jm(&label)?;
        total += weight;
        components.push(JMComponent {
            label,
            weight,
            multiplicity: multiplicity(n_emitters, label.two_j())?,
            c0,
            classification: classify(c0),
        });
    }
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Internal(format!(
            "sector weights sum to {total}, expected 1"
        )));
    }
    Ok(components)
}

/// Split the total pair coherence into superradiant and subradiant parts.
///
/// Returns `(c0_sup, c0_sub)` with `c0_sup >= 0 >= c0_sub`; their sum is the
/// total pair coherence of the decomposed state. Neutral sectors contribute
/// to neither part.
pub fn radiance_split(components: &[JMComponent]) -> (f64, f64) {
    let mut sup = 0.0;
    let mut sub = 0.0;
    for comp in components {
        let contribution = comp.weight * comp.c0;
        match comp.classification {
            RadianceClass::Superradiant => sup += contribution,
            RadianceClass::Subradiant => sub += contribution,
            RadianceClass::Neutral => {}
        }
    }
    (sup, sub)
}

/// Witness evaluated along a trajectory, with its refined minimum.
#[derive(Debug, Clone)]
pub struct WitnessTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// true when the witness dips below zero anywhere on the trace
    pub detected: bool,
    /// minimum value, refined by a parabola through the lowest sample
    pub min_value: f64,
    /// location of the refined minimum
    pub min_time: f64,
    /// physical lower bound `-2/(N-1)`
    pub floor: f64,
    /// true when the (possibly approximate) dynamics undershot the bound
    /// by more than 1e-6
    pub below_floor: bool,
}

/// Evaluate the witness along sampled pair observables.
pub fn witness_trace(
    times: &[f64],
    c0: &[C64],
    c_zz: &[f64],
    n_emitters: usize,
) -> Result<WitnessTrace> {
    if times.is_empty() || times.len() != c0.len() || times.len() != c_zz.len() {
        return Err(Error::ShapeMismatch(format!(
            "witness trace needs equal nonempty sample lists, got {}/{}/{}",
            times.len(),
            c0.len(),
            c_zz.len()
        )));
    }
    let floor = witness_floor(n_emitters)?;
    let values: Vec<f64> =
        c0.iter().zip(c_zz).map(|(&a, &b)| witness(a, b)).collect();
    let imin = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite witness values"))
        .expect("nonempty trace")
        .0;
    let (mut min_value, mut min_time) = (values[imin], times[imin]);
    if imin > 0 && imin + 1 < values.len() {
        // parabola through the three samples around the discrete minimum
        let (t0, t1, t2) = (times[imin - 1], times[imin], times[imin + 1]);
        let (v0, v1, v2) = (values[imin - 1], values[imin], values[imin + 1]);
        let d10 = (v1 - v0) / (t1 - t0);
        let d21 = (v2 - v1) / (t2 - t1);
        let curv = (d21 - d10) / (t2 - t0);
        if curv > 0.0 {
            let tv = 0.5 * (t0 + t1 - d10 / curv);
            if tv > t0 && tv < t2 {
                let vv = v0 + d10 * (tv - t0) + curv * (tv - t0) * (tv - t1);
                if vv < min_value {
                    min_value = vv;
                    min_time = tv;
                }
            }
        }
    }
    Ok(WitnessTrace {
        times: times.to_vec(),
        values,
        detected: min_value < 0.0,
        min_value,
        min_time,
        floor,
        below_floor: min_value < floor - 1e-6,
    })
}

/// One evaluated point of a loss-threshold sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub gamma_over_g: f64,
    pub min_witness: f64,
    pub detected: bool,
}

/// Result of scanning the emitter decay rate for loss of detection.
#[derive(Debug, Clone)]
pub struct ThresholdSweep {
    pub points: Vec<SweepPoint>,
    /// γ/g above which the witness no longer detects entanglement,
    /// bisected to within `THRESHOLD_RESOLUTION`
    pub threshold_gamma_over_g: f64,
}

fn sweep_grid(base: &SystemParams) -> TimeGrid {
    // photon-exchange dynamics run at ~g√N; a few tens of coupling periods
    // comfortably cover the first witness minimum at every loss rate
    TimeGrid::new(20.0 / base.coupling_g, 601).with_tolerances(1e-7, 1e-10)
}

fn min_witness_at(base: &SystemParams, gamma_over_g: f64) -> Result<f64> {
    let mut params = base.clone();
    params.emitter_decay_gamma = gamma_over_g * params.coupling_g;
    params.validate()?;
    let ic = InitialCondition::PhotonFock(params.n_emitters / 2);
    let opts = ExactOptions { check_positivity: false, ..Default::default() };
    let run = lindblad::run(&params, &ic, &sweep_grid(base), &opts)?;
    if !run.quality.cutoff_ok {
        return Err(Error::SweepFailed(format!(
            "photon cutoff too small at gamma/g = {gamma_over_g}"
        )));
    }
    let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
    let c0s: Vec<C64> = run.records.iter().map(|r| r.c0).collect();
    let czzs: Vec<f64> = run.records.iter().map(|r| r.czz).collect();
    Ok(witness_trace(&times, &c0s, &czzs, params.n_emitters)?.min_value)
}

/// Scan γ/g over `[gamma_min, gamma_max]` with `n_grid` points, preparing
/// the cavity in the `N/2`-photon Fock state, and bisect the boundary where
/// the witness stops detecting entanglement.
///
/// Fails when the grid shows no sign change or a non-monotonic detection
/// pattern (detection must hold at low loss and fail at high loss).
pub fn threshold_sweep(
    base: &SystemParams,
    gamma_min_over_g: f64,
    gamma_max_over_g: f64,
    n_grid: usize,
) -> Result<ThresholdSweep> {
    if !(gamma_min_over_g >= 0.0)
        || !(gamma_max_over_g > gamma_min_over_g)
        || n_grid < 2
    {
        return Err(Error::InvalidParameter(format!(
            "invalid sweep range {gamma_min_over_g}..{gamma_max_over_g} with {n_grid} points"
        )));
    }
    if base.n_emitters < 2 || base.n_emitters % 2 != 0 {
        return Err(Error::InvalidParameter(
            "the threshold sweep prepares N/2 photons and needs even N >= 2".into(),
        ));
    }
    let gammas: Vec<f64> = (0..n_grid)
        .map(|i| {
            gamma_min_over_g
                + (gamma_max_over_g - gamma_min_over_g) * i as f64 / (n_grid - 1) as f64
        })
        .collect();
    let mins: Vec<Result<f64>> =
        gammas.par_iter().map(|&gg| min_witness_at(base, gg)).collect();
    let mut points = Vec::with_capacity(n_grid);
    for (&gg, min) in gammas.iter().zip(mins) {
        let min_witness = min?;
        points.push(SweepPoint { gamma_over_g: gg, min_witness, detected: min_witness < 0.0 });
    }
    // detection must be a prefix of the grid: true ... true false ... false
    let first_off = points.iter().position(|p| !p.detected);
    let (mut lo, mut hi) = match first_off {
        None => {
            return Err(Error::SweepFailed(
                "entanglement detected over the whole range; raise the upper bound".into(),
            ))
        }
        Some(0) => {
            return Err(Error::SweepFailed(
                "no entanglement detected anywhere in the range; lower the lower bound".into(),
            ))
        }
        Some(i) => {
            if points[i..].iter().any(|p| p.detected) {
                return Err(Error::SweepFailed(
                    "detection pattern is not monotonic across the sweep range".into(),
                ));
            }
            (points[i - 1].gamma_over_g, points[i].gamma_over_g)
        }
    };
    while hi - lo > THRESHOLD_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if min_witness_at(base, mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdSweep { points, threshold_gamma_over_g: 0.5 * (lo + hi) })
}
