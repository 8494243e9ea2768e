//! Exact open-system solver for N two-level emitters coupled to one lossy
//! cavity mode.
//!
//! The joint state lives on (emitter computational basis) ⊗ (photon Fock
//! basis up to `n_max`), with emitter 0 as the most significant bit and
//! `|1>` = excited. In the frame rotating at the cavity frequency the
//! Hamiltonian is
//!
//! ```text
//! H = (Δ/2) Σ_i σ_i^z + g Σ_i (σ_i^+ a + σ_i^- a†)
//! ```
//!
//! and the state evolves under
//!
//! ```text
//! dρ/dt = -i[H,ρ] + κ D[a]ρ + γ Σ_i D[σ_i^-]ρ + (γ_φ/2) Σ_i D[σ_i^z]ρ .
//! ```
//!
//! The right-hand side is evaluated as `Gρ + (Gρ)† + jumps`, where
//! `G = -iH - (κ/2) a†a - (γ/2) Σ σ^+σ^-` is sparse and the jump terms are
//! applied with bit operations; this keeps ρ Hermitian to rounding error by
//! construction. The dephasing channel contributes a pure damping
//! `-γ_φ · popcount(e ⊕ e')` of each emitter coherence, which is applied
//! directly.

use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64 as C64;

use crate::cluster::EmissionRates;
use crate::dicke;
use crate::error::{Error, Result};
use crate::linalg::{self, Csr};
use crate::model::{InitialCondition, SystemParams, TimeGrid};
use crate::ode::{self, AdaptiveOptions, IntegrationStats};

/// Largest joint dimension `2^N (n_max+1)` the solver will build.
pub const DIM_LIMIT: usize = 4096;
/// Spectral positivity checks are performed only up to this dimension.
pub const POSITIVITY_CHECK_MAX_DIM: usize = 512;
/// Largest emitter count accepted by [`negativity`].
pub const MAX_NEGATIVITY_EMITTERS: usize = 8;
/// A run is flagged when the top Fock level holds at least this population.
pub const CUTOFF_POPULATION_LIMIT: f64 = 1e-6;

/// Time-evolution generator for fixed parameters and photon cutoff.
pub struct Generator {
    params: SystemParams,
    n_max: usize,
    n_ph: usize,
    dim: usize,
    drift: Csr,
    /// photon number of each basis state
    n_of: Vec<u32>,
    /// emitter bitmask of each basis state
    e_of: Vec<u32>,
    /// sqrt(n) lookup for n in 0..=n_max+1
    sqrt_n: Vec<f64>,
}

impl Generator {
    /// Default photon cutoff: total excitation is bounded by the initial
    /// excitation, so `N + n_p + 4` leaves headroom above the reachable space.
    pub fn default_n_max(params: &SystemParams, ic: &InitialCondition) -> usize {
        params.n_emitters + ic.initial_photons() + 4
    }

    pub fn new(params: &SystemParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        let n_em = params.n_emitters;
        if n_em > 24 {
            return Err(Error::DimensionLimit { dim: usize::MAX, limit: DIM_LIMIT });
        }
        let n_ph = n_max + 1;
        let dim = (1usize << n_em) * n_ph;
        if dim > DIM_LIMIT {
            return Err(Error::DimensionLimit { dim, limit: DIM_LIMIT });
        }
        let n_of: Vec<u32> = (0..dim).map(|x| (x % n_ph) as u32).collect();
        let e_of: Vec<u32> = (0..dim).map(|x| (x / n_ph) as u32).collect();
        let sqrt_n: Vec<f64> = (0..=n_max + 1).map(|n| (n as f64).sqrt()).collect();

        let g = params.coupling_g;
        let delta = params.detuning_delta;
        let kappa = params.cavity_loss_kappa;
        let gamma = params.emitter_decay_gamma;
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for x in 0..dim {
            let e = e_of[x] as usize;
            let n = n_of[x] as usize;
            let k = (e as u32).count_ones() as f64;
            // -iH diagonal + damping diagonal
            let h_diag = 0.5 * delta * (2.0 * k - n_em as f64);
            let damp = 0.5 * kappa * n as f64 + 0.5 * gamma * k;
            triplets.push((x, x, C64::new(-damp, -h_diag)));
            // -i g (σ_i^+ a + σ_i^- a†)
            for i in 0..n_em {
                let bit = 1usize << (n_em - 1 - i);
                if e & bit == 0 {
                    if n >= 1 {
                        // σ^+ a : (e, n) -> (e|bit, n-1)
                        let to = (e | bit) * n_ph + (n - 1);
                        triplets.push((to, x, C64::new(0.0, -g * sqrt_n[n])));
                    }
                } else if n < n_max {
                    // σ^- a† : (e, n) -> (e&!bit, n+1)
                    let to = (e & !bit) * n_ph + (n + 1);
                    triplets.push((to, x, C64::new(0.0, -g * sqrt_n[n + 1])));
                }
            }
        }
        let drift = Csr::from_triplets(dim, triplets);
        Ok(Generator { params: params.clone(), n_max, n_ph, dim, drift, n_of, e_of, sqrt_n })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }
    pub fn n_max(&self) -> usize {
        self.n_max
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Flattened density matrix of the requested initial condition, with the
    /// photon mode in vacuum unless the condition itself is a Fock state.
    pub fn initial_state(&self, ic: &InitialCondition) -> Result<Array1<C64>> {
        ic.validate(self.params.n_emitters)?;
        let n_em = self.params.n_emitters;
        let dim = self.dim;
        let mut rho = Array1::<C64>::zeros(dim * dim);
        let idx = |e: usize, n: usize| e * self.n_ph + n;
        match ic {
            InitialCondition::FullyInverted => {
                let x = idx((1usize << n_em) - 1, 0);
                rho[x * dim + x] = C64::new(1.0, 0.0);
            }
            InitialCondition::FullySeparableHalfInverted => {
                let w = 1.0 / (1usize << n_em) as f64;
                for e in 0..(1usize << n_em) {
                    let x = idx(e, 0);
                    rho[x * dim + x] = C64::new(w, 0.0);
                }
            }
            InitialCondition::DickeState(k) => {
                let v = dicke::dicke_state(n_em, *k)?;
                for (e1, a1) in v.iter().enumerate() {
                    if a1.norm() == 0.0 {
                        continue;
                    }
                    for (e2, a2) in v.iter().enumerate() {
                        if a2.norm() == 0.0 {
                            continue;
                        }
                        rho[idx(e1, 0) * dim + idx(e2, 0)] = a1 * a2.conj();
                    }
                }
            }
            InitialCondition::PhotonFock(np) => {
                if *np > self.n_max {
                    return Err(Error::InvalidInitialCondition(format!(
                        "Fock state n_p = {np} exceeds photon cutoff n_max = {}",
                        self.n_max
                    )));
                }
                let x = idx(0, *np);
                rho[x * dim + x] = C64::new(1.0, 0.0);
            }
        }
        Ok(rho)
    }

    /// Full master-equation right-hand side on the flattened state.
    ///
    /// `scratch` must be a `dim x dim` buffer; it holds `Gρ` internally.
    pub fn apply(&self, y: &[C64], dy: &mut [C64], scratch: &mut Array2<C64>) {
        let dim = self.dim;
        debug_assert_eq!(y.len(), dim * dim);
        let rho = ArrayView2::from_shape((dim, dim), y).expect("contiguous state");
        self.drift.mul_dense(&rho, scratch);
        let w = scratch.as_slice().expect("contiguous scratch");
        // dρ/dt = Gρ + (Gρ)†  — Hermitian by construction
        for r in 0..dim {
            for c in 0..dim {
                dy[r * dim + c] = w[r * dim + c] + w[c * dim + r].conj();
            }
        }
        let kappa = self.params.cavity_loss_kappa;
        if kappa > 0.0 {
            // κ a ρ a† : source has one photon more on both sides; the photon
            // index is least significant, so the source index is x+1 / y+1.
            for r in 0..dim {
                let nr = self.n_of[r] as usize;
                if nr >= self.n_max {
                    continue;
                }
                let fr = kappa * self.sqrt_n[nr + 1];
                for c in 0..dim {
                    let nc = self.n_of[c] as usize;
                    if nc >= self.n_max {
                        continue;
                    }
                    dy[r * dim + c] += fr * self.sqrt_n[nc + 1] * y[(r + 1) * dim + (c + 1)];
                }
            }
        }
        let gamma = self.params.emitter_decay_gamma;
        if gamma > 0.0 {
            // γ Σ_i σ_i^- ρ σ_i^+ : source has emitter i excited on both sides
            for i in 0..self.params.n_emitters {
                let bit = 1u32 << (self.params.n_emitters - 1 - i);
                let off = bit as usize * self.n_ph;
                for r in 0..dim {
                    if self.e_of[r] & bit != 0 {
                        continue;
                    }
                    for c in 0..dim {
                        if self.e_of[c] & bit != 0 {
                            continue;
                        }
                        dy[r * dim + c] += gamma * y[(r + off) * dim + (c + off)];
                    }
                }
            }
        }
        let gamma_phi = self.params.pure_dephasing_gamma_phi;
        if gamma_phi > 0.0 {
            // (γ_φ/2) Σ_i (σ_i^z ρ σ_i^z − ρ) = −γ_φ popcount(e_r ⊕ e_c) ρ
            for r in 0..dim {
                let er = self.e_of[r];
                for c in 0..dim {
                    let differing = (er ^ self.e_of[c]).count_ones() as f64;
                    if differing > 0.0 {
                        dy[r * dim + c] -= gamma_phi * differing * y[r * dim + c];
                    }
                }
            }
        }
    }

    pub fn trace(&self, rho: &[C64]) -> f64 {
        (0..self.dim).map(|x| rho[x * self.dim + x].re).sum()
    }

    pub fn mean_photon(&self, rho: &[C64]) -> f64 {
        (0..self.dim).map(|x| self.n_of[x] as f64 * rho[x * self.dim + x].re).sum()
    }

    /// Per-emitter average inversion `(1/N) Σ_i <σ_i^z>`.
    pub fn mean_inversion(&self, rho: &[C64]) -> f64 {
        let n_em = self.params.n_emitters as f64;
        (0..self.dim)
            .map(|x| {
                let k = self.e_of[x].count_ones() as f64;
                (2.0 * k - n_em) / n_em * rho[x * self.dim + x].re
            })
            .sum()
    }

    /// `<σ_i^+ σ_j^->` for one ordered emitter pair (i ≠ j).
    pub fn pair_coherence(&self, rho: &[C64], i: usize, j: usize) -> C64 {
        let n_em = self.params.n_emitters;
        let bi = 1u32 << (n_em - 1 - i);
        let bj = 1u32 << (n_em - 1 - j);
        let mut acc = C64::new(0.0, 0.0);
        for x in 0..self.dim {
            let e = self.e_of[x];
            // Tr[ρ σ_i^+ σ_j^-] = Σ_x ρ[x, y] with y = x with j lowered, i raised
            if e & bj != 0 && e & bi == 0 {
                let e_to = (e & !bj) | bi;
                let to = e_to as usize * self.n_ph + self.n_of[x] as usize;
                acc += rho[x * self.dim + to];
            }
        }
        acc
    }

    /// `C0`: pair coherence averaged over all ordered pairs i ≠ j.
    /// Defined for N ≥ 2; reported as 0 for a single emitter.
    pub fn mean_pair_coherence(&self, rho: &[C64]) -> C64 {
        let n_em = self.params.n_emitters;
        if n_em < 2 {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n_em {
            for j in 0..n_em {
                if i != j {
                    acc += self.pair_coherence(rho, i, j);
                }
            }
        }
        acc / (n_em * (n_em - 1)) as f64
    }

    /// `C_zz`: `<σ_i^z σ_j^z>` averaged over pairs i ≠ j, via
    /// `Σ_{i≠j} z_i z_j = (2k - N)^2 - N` on each diagonal element.
    pub fn mean_pair_zz(&self, rho: &[C64]) -> f64 {
        let n_em = self.params.n_emitters;
        if n_em < 2 {
            return 0.0;
        }
        let nf = n_em as f64;
        (0..self.dim)
            .map(|x| {
                let z = 2.0 * self.e_of[x].count_ones() as f64 - nf;
                (z * z - nf) / (nf * (nf - 1.0)) * rho[x * self.dim + x].re
            })
            .sum()
    }

    /// Photon gain rate from the emitters: `−2g Σ_i Im<σ_i^+ a>`, so that
    /// `dn/dt = flux − κn` is an exact operator identity.
    pub fn emission_flux(&self, rho: &[C64]) -> f64 {
        let n_em = self.params.n_emitters;
        let mut sum_im = 0.0;
        for i in 0..n_em {
            let bi = 1u32 << (n_em - 1 - i);
            // <σ_i^+ a> = Σ_x sqrt(n_x) ρ[x, y], x = (e: i ground, n ≥ 1),
            // y = (e|bit_i, n-1)
            for x in 0..self.dim {
                let e = self.e_of[x];
                let n = self.n_of[x] as usize;
                if e & bi == 0 && n >= 1 {
                    let to = (e | bi) as usize * self.n_ph + (n - 1);
                    sum_im += self.sqrt_n[n] * rho[x * self.dim + to].im;
                }
            }
        }
        -2.0 * self.params.coupling_g * sum_im
    }

    /// Population of the top Fock level (cutoff-adequacy monitor).
    pub fn top_fock_population(&self, rho: &[C64]) -> f64 {
        let mut acc = 0.0;
        for e in 0..(1usize << self.params.n_emitters) {
            let x = e * self.n_ph + self.n_max;
            acc += rho[x * self.dim + x].re;
        }
        acc
    }

    /// Partial trace over the photon mode.
    pub fn reduce_to_emitters(&self, rho: &[C64]) -> Array2<C64> {
        let qdim = 1usize << self.params.n_emitters;
        let mut out = Array2::<C64>::zeros((qdim, qdim));
        for e1 in 0..qdim {
            for e2 in 0..qdim {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..self.n_ph {
                    acc += rho[(e1 * self.n_ph + n) * self.dim + (e2 * self.n_ph + n)];
                }
                out[(e1, e2)] = acc;
            }
        }
        out
    }

    /// `<D_{N,⌊N/2⌋}| ρ_q |D_{N,⌊N/2⌋}>` computed directly from the joint state.
    pub fn dicke_overlap(&self, rho: &[C64]) -> Result<f64> {
        let n_em = self.params.n_emitters;
        let v = dicke::dicke_state(n_em, n_em / 2)?;
        let mut acc = C64::new(0.0, 0.0);
        for (e1, a1) in v.iter().enumerate() {
            if a1.norm() == 0.0 {
                continue;
            }
            for (e2, a2) in v.iter().enumerate() {
                if a2.norm() == 0.0 {
                    continue;
                }
                for n in 0..self.n_ph {
                    acc += a1.conj()
                        * rho[(e1 * self.n_ph + n) * self.dim + (e2 * self.n_ph + n)]
                        * *a2;
                }
            }
        }
        Ok(acc.re)
    }

    /// All scalar observables of one snapshot.
    pub fn observables(&self, t: f64, rho: &[C64]) -> Result<ObservableRecord> {
        let reduced = self.reduce_to_emitters(rho);
        let purity = reduced.iter().map(|z| z.norm_sqr()).sum();
        Ok(ObservableRecord {
            t,
            sz: self.mean_inversion(rho),
            n: self.mean_photon(rho),
            c0: self.mean_pair_coherence(rho),
            czz: self.mean_pair_zz(rho),
            purity,
            dicke_overlap: self.dicke_overlap(rho)?,
        })
    }
}

/// Scalar observables of one snapshot, shared by both solvers' outputs.
/// `purity` and `dicke_overlap` are exact-solver quantities.
#[derive(Debug, Clone, Copy)]
pub struct ObservableRecord {
    pub t: f64,
    pub sz: f64,
    pub n: f64,
    pub c0: C64,
    pub czz: f64,
    pub purity: f64,
    pub dicke_overlap: f64,
}

/// Numerical-quality summary of a finished trajectory.
#[derive(Debug, Clone)]
pub struct QualityReport {
    /// top Fock population stayed below [`CUTOFF_POPULATION_LIMIT`]
    pub cutoff_ok: bool,
    pub max_top_fock_population: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// dual-route check: |Tr[L(ρ)a†a] − (flux − κn)|, normalized
    pub max_rate_identity_error: f64,
    pub positivity_checked: bool,
    pub min_eigenvalue: f64,
    pub positivity_ok: bool,
}

impl QualityReport {
    pub fn all_ok(&self) -> bool {
        self.cutoff_ok
            && self.max_trace_drift <= 1e-8
            && self.max_hermiticity_error <= 1e-9
            && self.positivity_ok
    }
}

/// Options for [`run`].
#[derive(Debug, Clone)]
pub struct ExactOptions {
    /// photon cutoff; `None` uses [`Generator::default_n_max`]
    pub n_max: Option<usize>,
    /// retry with a larger cutoff when the adequacy flag fires
    pub auto_extend: bool,
    /// store the reduced emitter state at every sample
    pub keep_reduced: bool,
    /// spectral positivity check on thinned samples (dims ≤ 512)
    pub check_positivity: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { n_max: None, auto_extend: true, keep_reduced: false, check_positivity: true }
    }
}

/// A finished exact trajectory.
pub struct ExactRun {
    pub params: SystemParams,
    pub initial: InitialCondition,
    pub n_max: usize,
    pub records: Vec<ObservableRecord>,
    pub rates: Vec<EmissionRates>,
    pub reduced: Option<Vec<Array2<C64>>>,
    pub quality: QualityReport,
    pub stats: IntegrationStats,
}

/// Integrate one trajectory, handing every snapshot to the callback as a
/// `dim x dim` view.
pub fn integrate<S>(
    gen: &Generator,
    rho0: Array1<C64>,
    grid: &TimeGrid,
    mut on_snapshot: S,
) -> Result<IntegrationStats>
where
    S: FnMut(usize, f64, &ArrayView2<C64>),
{
    grid.validate()?;
    let dim = gen.dim();
    if rho0.len() != dim * dim {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, generator needs {}",
            rho0.len(),
            dim * dim
        )));
    }
    let samples = grid.sample_times();
    let opts = AdaptiveOptions { rel_tol: grid.rel_tol, abs_tol: grid.abs_tol, ..Default::default() };
    let mut scratch = Array2::<C64>::zeros((dim, dim));
    ode::integrate_sampled(
        |_t, y, dy| {
            gen.apply(
                y.as_slice().expect("contiguous"),
                dy.as_slice_mut().expect("contiguous"),
                &mut scratch,
            );
        },
        rho0,
        &samples,
        &opts,
        |idx, t, y| {
            let view = ArrayView2::from_shape((dim, dim), y.as_slice().expect("contiguous"))
                .expect("snapshot shape");
            on_snapshot(idx, t, &view);
        },
    )
}

/// Integrate and collect full density-matrix snapshots (small problems only).
pub fn integrate_dense(
    gen: &Generator,
    rho0: Array1<C64>,
    grid: &TimeGrid,
) -> Result<Vec<Array2<C64>>> {
    let mut out = Vec::with_capacity(grid.n_samples);
    integrate(gen, rho0, grid, |_idx, _t, rho| out.push(rho.to_owned()))?;
    Ok(out)
}

fn rates_from_snapshot(gen: &Generator, rec: &ObservableRecord, flux: f64) -> EmissionRates {
    let p = gen.params();
    let i0 = p.single_emitter_rate();
    let nf = p.n_emitters as f64;
    let gamma_se = i0 * 0.5 * nf * (1.0 + rec.sz);
    let gamma_ste = i0 * nf * rec.n * rec.sz;
    // the remainder of the measured photon flux is the correlated part
    let gamma_ce = flux - gamma_se - gamma_ste;
    EmissionRates {
        gamma_se,
        gamma_ste,
        gamma_ce,
        cavity_loss: p.cavity_loss_kappa * rec.n,
        gamma_tot: flux,
    }
}

/// Run one exact trajectory end to end: build the generator, integrate,
/// extract observables and rates, and track numerical quality. When the
/// photon-cutoff flag fires and `auto_extend` is set, the run is repeated
/// with a larger cutoff (up to three extensions).
pub fn run(
    params: &SystemParams,
    ic: &InitialCondition,
    grid: &TimeGrid,
    opts: &ExactOptions,
) -> Result<ExactRun> {
    params.validate()?;
    ic.validate(params.n_emitters)?;
    grid.validate()?;
    let mut n_max = opts.n_max.unwrap_or_else(|| Generator::default_n_max(params, ic));
    loop {
        let run = run_fixed_cutoff(params, ic, grid, opts, n_max)?;
        if run.quality.cutoff_ok || !opts.auto_extend {
            return Ok(run);
        }
        let extended = n_max + 4;
        let dim = (1usize << params.n_emitters) * (extended + 1);
        // give up once the widened cutoff no longer fits; the run keeps its flag
        if dim > DIM_LIMIT || extended > 3 * Generator::default_n_max(params, ic) + 16 {
            return Ok(run);
        }
        n_max = extended;
    }
}

fn run_fixed_cutoff(
    params: &SystemParams,
    ic: &InitialCondition,
    grid: &TimeGrid,
    opts: &ExactOptions,
    n_max: usize,
) -> Result<ExactRun> {
    let gen = Generator::new(params, n_max)?;
    let rho0 = gen.initial_state(ic)?;
    let dim = gen.dim();
    let n_samples = grid.n_samples;
    let positivity_active = opts.check_positivity && dim <= POSITIVITY_CHECK_MAX_DIM;
    let positivity_stride = (n_samples / 50).max(1);

    let mut records: Vec<ObservableRecord> = Vec::with_capacity(n_samples);
    let mut rates: Vec<EmissionRates> = Vec::with_capacity(n_samples);
    let mut reduced: Vec<Array2<C64>> = Vec::new();
    let mut quality = QualityReport {
        cutoff_ok: true,
        max_top_fock_population: 0.0,
        max_trace_drift: 0.0,
        max_hermiticity_error: 0.0,
        max_rate_identity_error: 0.0,
        positivity_checked: positivity_active,
        min_eigenvalue: 0.0,
        positivity_ok: true,
    };
    let mut rhs_buf = vec![C64::new(0.0, 0.0); dim * dim];
    let mut rhs_scratch = Array2::<C64>::zeros((dim, dim));
    let mut first_error: Option<Error> = None;

    let stats = integrate(&gen, rho0, grid, |idx, t, rho| {
        if first_error.is_some() {
            return;
        }
        let flat = rho.as_slice().expect("contiguous snapshot");
        let rec = match gen.observables(t, flat) {
            Ok(r) => r,
            Err(e) => {
                first_error = Some(e);
                return;
            }
        };
        let flux = gen.emission_flux(flat);
        rates.push(rates_from_snapshot(&gen, &rec, flux));

        quality.max_trace_drift = quality.max_trace_drift.max((gen.trace(flat) - 1.0).abs());
        quality.max_hermiticity_error =
            quality.max_hermiticity_error.max(linalg::hermiticity_error(rho));
        let top = gen.top_fock_population(flat);
        quality.max_top_fock_population = quality.max_top_fock_population.max(top);

        // dual route for dn/dt: generator action vs the flux formula
        gen.apply(flat, &mut rhs_buf, &mut rhs_scratch);
        let dn_dt_gen: f64 =
            (0..dim).map(|x| gen.n_of[x] as f64 * rhs_buf[x * dim + x].re).sum();
        let dn_dt_flux = flux - gen.params().cavity_loss_kappa * rec.n;
        let scale = 1.0 + dn_dt_flux.abs() + gen.params().cavity_loss_kappa * rec.n;
        quality.max_rate_identity_error =
            quality.max_rate_identity_error.max((dn_dt_gen - dn_dt_flux).abs() / scale);

        if positivity_active && (idx % positivity_stride == 0 || idx + 1 == n_samples) {
            match linalg::eigvalsh(rho) {
                Ok(evals) => {
                    let min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
                    quality.min_eigenvalue = quality.min_eigenvalue.min(min);
                }
                Err(e) => first_error = Some(e),
            }
        }
        if opts.keep_reduced {
            reduced.push(gen.reduce_to_emitters(flat));
        }
        records.push(rec);
    })?;
    if let Some(e) = first_error {
        return Err(e);
    }
    quality.cutoff_ok = quality.max_top_fock_population < CUTOFF_POPULATION_LIMIT;
    quality.positivity_ok = quality.min_eigenvalue >= -1e-8;
    Ok(ExactRun {
        params: params.clone(),
        initial: ic.clone(),
        n_max,
        records,
        rates,
        reduced: if opts.keep_reduced { Some(reduced) } else { None },
        quality,
        stats,
    })
}

/// Negativity of an emitter state across the bipartition (subset | rest):
/// the absolute sum of negative eigenvalues of the partial transpose over
/// the given emitters. Eigenvalues in `[-1e-8, 0)` are treated as zero.
pub fn negativity(rho_q: &ArrayView2<C64>, subset: &[usize]) -> Result<f64> {
    let qdim = rho_q.nrows();
    if rho_q.ncols() != qdim || !qdim.is_power_of_two() {
        return Err(Error::ShapeMismatch(format!(
            "emitter state must be square with power-of-two dimension, got {}x{}",
            qdim,
            rho_q.ncols()
        )));
    }
    let n_em = qdim.trailing_zeros() as usize;
    if n_em > MAX_NEGATIVITY_EMITTERS {
        return Err(Error::DimensionLimit { dim: qdim, limit: 1 << MAX_NEGATIVITY_EMITTERS });
    }
    let mut seen = vec![false; n_em];
    for &i in subset {
        if i >= n_em {
            return Err(Error::InvalidParameter(format!(
                "bipartition index {i} out of range for N = {n_em}"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidParameter(format!("duplicate bipartition index {i}")));
        }
        seen[i] = true;
    }
    if subset.is_empty() || subset.len() == n_em {
        return Err(Error::InvalidParameter(
            "bipartition must be a proper non-empty subset of the emitters".into(),
        ));
    }
    let mask: usize = subset.iter().map(|&i| 1usize << (n_em - 1 - i)).sum();
    let mut pt = Array2::<C64>::zeros((qdim, qdim));
    for r in 0..qdim {
        for c in 0..qdim {
            let rt = (r & !mask) | (c & mask);
            let ct = (c & !mask) | (r & mask);
            pt[(rt, ct)] = rho_q[(r, c)];
        }
    }
    let evals = linalg::eigvalsh(&pt.view())?;
    Ok(evals.iter().filter(|&&v| v < -1e-8).map(|&v| -v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{JMLabel, JmBasis};
    use crate::model::InitialCondition as Ic;

    fn grid(t_end: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t_end, n)
    }

    #[test]
    fn ground_vacuum_is_stationary() {
        let params = SystemParams::from_ratios(2, 0.5, 0.2, 0.1);
        let gen = Generator::new(&params, 2).unwrap();
        let dim = gen.dim();
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        rho[0] = C64::new(1.0, 0.0); // (e = 0, n_ph = 0) is index 0
        let mut dy = vec![C64::new(0.0, 0.0); dim * dim];
        let mut scratch = Array2::<C64>::zeros((dim, dim));
        gen.apply(&rho, &mut dy, &mut scratch);
        let worst = dy.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(worst < 1e-15, "ground+vacuum must be a fixed point, residual {worst}");
    }

    #[test]
    fn photon_decay_matches_exponential() {
        // negligible coupling isolates the cavity: n(t) = exp(-κ t)
        let params = SystemParams {
            n_emitters: 1,
            coupling_g: 1e-9,
            cavity_loss_kappa: 1.0,
            emitter_decay_gamma: 0.0,
            pure_dephasing_gamma_phi: 0.0,
            detuning_delta: 0.0,
        };
        let run = run(
            &params,
            &Ic::PhotonFock(1),
            &grid(5.0, 41),
            &ExactOptions { n_max: Some(3), ..Default::default() },
        )
        .unwrap();
        for rec in &run.records {
            let expect = (-rec.t).exp();
            assert!(
                (rec.n - expect).abs() < 1e-6,
                "t = {}: n = {} vs {expect}",
                rec.t,
                rec.n
            );
        }
    }

    #[test]
    fn vacuum_rabi_oscillation_two_emitters() {
        // closed system, one photon, both emitters ground:
        // n(t) = cos^2(sqrt(2) g t) from the two-level reduction
        let params = SystemParams::from_ratios(2, 0.0, 0.0, 0.0);
        let run = run(&params, &Ic::PhotonFock(1), &grid(6.0, 121), &ExactOptions::default())
            .unwrap();
        for rec in &run.records {
            let expect = (std::f64::consts::SQRT_2 * rec.t).cos().powi(2);
            assert!(
                (rec.n - expect).abs() < 1e-6,
                "t = {}: n = {} vs {expect}",
                rec.t,
                rec.n
            );
        }
        // at the swap point the emitters hold the Dicke one-excitation state
        let quarter = std::f64::consts::FRAC_PI_2 / std::f64::consts::SQRT_2;
        let idx = run
            .records
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let da = (a.1.t - quarter).abs();
                let db = (b.1.t - quarter).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        assert!(run.records[idx].n < 1e-2);
        assert!(run.records[idx].dicke_overlap > 0.99);
    }

    fn fitted_decay_rate(times: &[f64], values: &[f64]) -> f64 {
        // least-squares slope of log(values) over times
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = times.len() as f64;
        let mt = times.iter().sum::<f64>() / n;
        let ml = logs.iter().sum::<f64>() / n;
        let num: f64 = times.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
        let den: f64 = times.iter().map(|t| (t - mt) * (t - mt)).sum();
        -num / den
    }

    #[test]
    fn purcell_decay_pins_dephasing_convention() {
        // single excited emitter in a lossy cavity decays at γ + I0 with
        // I0 = 4g²/(κ+γ+2γ_φ); a wrong dephasing convention shifts the rate
        // by ~10% at these parameters, far outside the asserted band.
        for (gamma_phi, tol) in [(0.0, 0.02), (5.0, 0.03)] {
            let params = SystemParams::from_ratios(1, 20.0, 0.1, gamma_phi);
            let expected = params.emitter_decay_gamma + params.single_emitter_rate();
            let run = run(
                &params,
                &Ic::FullyInverted,
                &grid(3.0 / expected, 201),
                &ExactOptions::default(),
            )
            .unwrap();
            // fit on a window after the short adiabatic transient
            let pairs: Vec<(f64, f64)> = run
                .records
                .iter()
                .filter(|r| r.t > 0.5 / expected)
                .map(|r| (r.t, 0.5 * (1.0 + r.sz)))
                .collect();
            let times: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let pops: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let rate = fitted_decay_rate(&times, &pops);
            assert!(
                (rate - expected).abs() < tol * expected,
                "γ_φ = {gamma_phi}: fitted {rate} vs γ+I0 = {expected}"
            );
        }
    }

    #[test]
    fn fully_inverted_emission_bookkeeping() {
        // every excitation eventually leaves through the cavity or directly:
        // ∫ (κ n + γ N(1+sz)/2) dt → N
        let params = SystemParams::from_ratios(4, 20.0, 1.0, 0.0);
        let run =
            run(&params, &Ic::FullyInverted, &grid(30.0, 601), &ExactOptions::default()).unwrap();
        let mut total = 0.0;
        for w in run.records.windows(2) {
            let f = |r: &ObservableRecord| {
                params.cavity_loss_kappa * r.n
                    + params.emitter_decay_gamma * 2.0 * (1.0 + r.sz)
            };
            total += 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t);
        }
        assert!((total - 4.0).abs() < 0.04, "total emitted excitation {total}");
        assert!(run.quality.all_ok());
    }

    #[test]
    fn closed_system_conserves_jsq_and_excitation() {
        // with all dissipation off, Tr[ρ J²] and total excitation are constant
        let params = SystemParams::from_ratios(3, 0.0, 0.0, 0.0);
        let gen = Generator::new(&params, Generator::default_n_max(&params, &Ic::PhotonFock(2)))
            .unwrap();
        // mixed emitter state spanning several j sectors, plus two photons
        let dim = gen.dim();
        let mut rho0 = Array1::<C64>::zeros(dim * dim);
        let n_ph = gen.n_max() + 1;
        let w = 1.0 / 8.0;
        for e in 0..8usize {
            let x = e * n_ph + 2;
            rho0[x * dim + x] = C64::new(w, 0.0);
        }
        let jsq = crate::dicke::jsq_matrix(3).unwrap();
        let mut jsq_values = Vec::new();
        let mut exc_values = Vec::new();
        let mut trace_drift = 0.0f64;
        integrate(&gen, rho0, &grid(8.0, 81), |_i, _t, rho| {
            let flat = rho.as_slice().unwrap();
            let red = gen.reduce_to_emitters(flat);
            let mut jv = 0.0;
            for a in 0..8 {
                for b in 0..8 {
                    jv += (red[(b, a)] * jsq[(a, b)]).re;
                }
            }
            jsq_values.push(jv);
            let exc = 1.5 * (1.0 + gen.mean_inversion(flat)) + gen.mean_photon(flat);
            exc_values.push(exc);
            trace_drift = trace_drift.max((gen.trace(flat) - 1.0).abs());
        })
        .unwrap();
        for v in &jsq_values {
            assert!((v - jsq_values[0]).abs() < 1e-6, "J² drifted: {v} vs {}", jsq_values[0]);
        }
        for v in &exc_values {
            assert!((v - exc_values[0]).abs() < 1e-6, "excitation drifted");
        }
        assert!(trace_drift <= 1e-8);
    }

    #[test]
    fn reduction_recovers_product_factor() {
        let params = SystemParams::from_ratios(2, 1.0, 0.0, 0.0);
        let gen = Generator::new(&params, 2).unwrap();
        let rho0 = gen.initial_state(&Ic::DickeState(1)).unwrap();
        let red = gen.reduce_to_emitters(rho0.as_slice().unwrap());
        // |D_{2,1}> density matrix on the emitters, photon factor traced away
        for (r, c, expect) in
            [(1, 1, 0.5), (2, 2, 0.5), (1, 2, 0.5), (2, 1, 0.5), (0, 0, 0.0), (3, 3, 0.0)]
        {
            assert!((red[(r, c)].re - expect).abs() < 1e-15);
            assert!(red[(r, c)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn purity_matches_independent_contraction() {
        // purity of the reduced state vs a direct contraction of the full ρ:
        // Tr[ρ_q²] = Σ_{e1,e2} |Σ_n ρ[(e1,n),(e2,n)]|²
        let params = SystemParams::from_ratios(2, 2.0, 0.5, 0.3);
        let run = run(
            &params,
            &Ic::FullyInverted,
            &grid(3.0, 31),
            &ExactOptions { keep_reduced: true, ..Default::default() },
        )
        .unwrap();
        let gen = Generator::new(&params, run.n_max).unwrap();
        let rho0 = gen.initial_state(&Ic::FullyInverted).unwrap();
        let snaps = integrate_dense(&gen, rho0, &grid(3.0, 31)).unwrap();
        for (rec, snap) in run.records.iter().zip(&snaps) {
            let flat = snap.as_slice().unwrap();
            let n_ph = gen.n_max() + 1;
            let dim = gen.dim();
            let mut direct = 0.0;
            for e1 in 0..4usize {
                for e2 in 0..4usize {
                    let mut acc = C64::new(0.0, 0.0);
                    for n in 0..n_ph {
                        acc += flat[(e1 * n_ph + n) * dim + (e2 * n_ph + n)];
                    }
                    direct += acc.norm_sqr();
                }
            }
            assert!((rec.purity - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn observables_on_reference_states() {
        let params = SystemParams::from_ratios(4, 20.0, 1.0, 0.0);
        let gen = Generator::new(&params, 4).unwrap();
        // half-inverted Dicke state ⊗ vacuum
        let rho = gen.initial_state(&Ic::DickeState(2)).unwrap();
        let rec = gen.observables(0.0, rho.as_slice().unwrap()).unwrap();
        assert!(rec.sz.abs() < 1e-12);
        assert!((rec.c0.re - 1.0 / 3.0).abs() < 1e-12 && rec.c0.im.abs() < 1e-15);
        assert!((rec.czz + 1.0 / 3.0).abs() < 1e-12);
        assert!((rec.purity - 1.0).abs() < 1e-12);
        assert!((rec.dicke_overlap - 1.0).abs() < 1e-12);
        // fully inverted product
        let rho = gen.initial_state(&Ic::FullyInverted).unwrap();
        let rec = gen.observables(0.0, rho.as_slice().unwrap()).unwrap();
        assert!((rec.sz - 1.0).abs() < 1e-15);
        assert!(rec.c0.norm() < 1e-15);
        assert!((rec.czz - 1.0).abs() < 1e-15);
        // fully separable half-inverted mixture
        let rho = gen.initial_state(&Ic::FullySeparableHalfInverted).unwrap();
        let rec = gen.observables(0.0, rho.as_slice().unwrap()).unwrap();
        assert!(rec.sz.abs() < 1e-15);
        assert!(rec.c0.norm() < 1e-15);
        assert!(rec.czz.abs() < 1e-15);
        assert!((rec.purity - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn negativity_reference_values() {
        // separable product states are PPT
        let params = SystemParams::from_ratios(3, 1.0, 0.0, 0.0);
        let gen = Generator::new(&params, 1).unwrap();
        let rho = gen.initial_state(&Ic::FullySeparableHalfInverted).unwrap();
        let red = gen.reduce_to_emitters(rho.as_slice().unwrap());
        for subset in [vec![0usize], vec![1], vec![0, 2]] {
            assert!(negativity(&red.view(), &subset).unwrap() < 1e-12);
        }
        // two-emitter singlet: textbook value 1/2
        let basis = JmBasis::new(2).unwrap();
        let singlet = basis.rho_jm(&JMLabel::new(2, 0, 0).unwrap()).unwrap();
        let neg = negativity(&singlet.view(), &[1]).unwrap();
        assert!((neg - 0.5).abs() < 1e-10);
        // half-inverted Dicke mixture at N=4 is entangled across any cut
        let basis = JmBasis::new(4).unwrap();
        let rho20 = basis.rho_jm(&JMLabel::new(4, 4, 0).unwrap()).unwrap();
        for subset in [vec![0usize], vec![0, 1]] {
            let neg = negativity(&rho20.view(), &subset).unwrap();
            assert!(neg > 1e-3, "subset {subset:?}: negativity {neg}");
        }
        // complement subsets give the same value (same PT spectrum)
        let a = negativity(&rho20.view(), &[0]).unwrap();
        let b = negativity(&rho20.view(), &[1, 2, 3]).unwrap();
        assert!((a - b).abs() < 1e-10);
        // invalid bipartitions
        assert!(negativity(&rho20.view(), &[]).is_err());
        assert!(negativity(&rho20.view(), &[0, 1, 2, 3]).is_err());
        assert!(negativity(&rho20.view(), &[7]).is_err());
        assert!(negativity(&rho20.view(), &[0, 0]).is_err());
    }

    #[test]
    fn pair_correlations_stay_permutation_symmetric() {
        let params = SystemParams::from_ratios(3, 20.0, 1.0, 0.5);
        let gen = Generator::new(&params, Generator::default_n_max(&params, &Ic::FullyInverted))
            .unwrap();
        let rho0 = gen.initial_state(&Ic::FullyInverted).unwrap();
        let snaps = integrate_dense(&gen, rho0, &grid(4.0, 9)).unwrap();
        for snap in &snaps {
            let flat = snap.as_slice().unwrap();
            let mut values = Vec::new();
            for i in 0..3usize {
                for j in 0..3usize {
                    if i != j {
                        values.push(gen.pair_coherence(flat, i, j));
                    }
                }
            }
            for v in &values {
                assert!((v - values[0]).norm() < 1e-8, "pairs disagree: {values:?}");
            }
        }
    }

    #[test]
    fn rate_identity_and_quality_on_burst_run() {
        let params = SystemParams::from_ratios(2, 20.0, 1.0, 0.0);
        let run =
            run(&params, &Ic::FullyInverted, &grid(10.0, 101), &ExactOptions::default()).unwrap();
        assert!(run.quality.max_rate_identity_error < 1e-9);
        assert!(run.quality.max_trace_drift <= 1e-8);
        assert!(run.quality.max_hermiticity_error <= 1e-9);
        assert!(run.quality.cutoff_ok);
        assert!(run.quality.positivity_checked);
        assert!(run.quality.positivity_ok, "min eigenvalue {}", run.quality.min_eigenvalue);
        // decomposition columns always re-sum to the measured flux
        for r in &run.rates {
            assert!(
                (r.gamma_se + r.gamma_ste + r.gamma_ce - r.gamma_tot).abs() < 1e-12
            );
        }
    }

    #[test]
    fn cutoff_flag_fires_and_auto_extends() {
        let params = SystemParams::from_ratios(2, 0.1, 0.1, 0.0);
        // deliberately starved cutoff: two excitations cannot fit in n_max=1
        let starved = run_fixed_cutoff(
            &params,
            &Ic::FullyInverted,
            &grid(3.0, 31),
            &ExactOptions { auto_extend: false, ..Default::default() },
            1,
        )
        .unwrap();
        assert!(!starved.quality.cutoff_ok);
        // the driver recovers by widening the cutoff
        let recovered = run(
            &params,
            &Ic::FullyInverted,
            &grid(3.0, 31),
            &ExactOptions { n_max: Some(1), auto_extend: true, ..Default::default() },
        )
        .unwrap();
        assert!(recovered.quality.cutoff_ok);
        assert!(recovered.n_max > 1);
    }

    #[test]
    fn dimension_guard() {
        let params = SystemParams::from_ratios(12, 1.0, 0.0, 0.0);
        assert!(matches!(
            Generator::new(&params, 4),
            Err(Error::DimensionLimit { .. })
        ));
    }
}
