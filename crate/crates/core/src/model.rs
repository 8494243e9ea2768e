//! System parameters, initial conditions, and sampling grids.
//!
//! Conventions used across the crate:
//! * All rates are quoted in units of the emitter-cavity coupling `g`
//!   (configuration front-ends set `g = 1` and pass ratios).
//! * Dissipation channels: cavity loss `kappa` on the mode, radiative decay
//!   `gamma` per emitter, and pure dephasing applied as `gamma_phi/2` on each
//!   emitter's population-difference operator, so that dephasing adds exactly
//!   `2 gamma_phi` to the polarization linewidth.
//! * The cavity-enhanced single-emitter emission rate is
//!   `I0 = 4 g^2 / (kappa + gamma + 2 gamma_phi)`.

use crate::error::{Error, Result};

/// Physical parameters of N identical two-level emitters coupled to one
/// lossy cavity mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Number of emitters, N >= 1.
    pub n_emitters: usize,
    /// Emitter-cavity coupling g > 0; the unit all rates are quoted in.
    pub coupling_g: f64,
    /// Cavity intensity loss rate kappa >= 0.
    pub cavity_loss_kappa: f64,
    /// Radiative decay rate gamma >= 0 per emitter (non-cavity modes).
    pub emitter_decay_gamma: f64,
    /// Pure dephasing rate gamma_phi >= 0 per emitter.
    pub pure_dephasing_gamma_phi: f64,
    /// Emitter-cavity detuning; 0 means resonant.
    pub detuning_delta: f64,
}

/// Ratio threshold below which the dissipative (weak-coupling) treatment of
/// the emitter-photon hierarchy is trusted.
pub const WEAK_COUPLING_THRESHOLD: f64 = 0.05;

impl SystemParams {
    /// Resonant parameter set from rate ratios (rates in units of g).
    pub fn from_ratios(n_emitters: usize, kappa_over_g: f64, gamma_over_g: f64, gamma_phi_over_g: f64) -> Self {
        SystemParams {
            n_emitters,
            coupling_g: 1.0,
            cavity_loss_kappa: kappa_over_g,
            emitter_decay_gamma: gamma_over_g,
            pure_dephasing_gamma_phi: gamma_phi_over_g,
            detuning_delta: 0.0,
        }
    }

    /// Check finiteness and sign constraints.
    pub fn validate(&self) -> Result<()> {
        if self.n_emitters == 0 {
            return Err(Error::InvalidParameter("n_emitters must be >= 1".into()));
        }
        for (name, v) in [
            ("coupling_g", self.coupling_g),
            ("cavity_loss_kappa", self.cavity_loss_kappa),
            ("emitter_decay_gamma", self.emitter_decay_gamma),
            ("pure_dephasing_gamma_phi", self.pure_dephasing_gamma_phi),
            ("detuning_delta", self.detuning_delta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if self.coupling_g <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "coupling_g must be > 0, got {}",
                self.coupling_g
            )));
        }
        for (name, v) in [
            ("cavity_loss_kappa", self.cavity_loss_kappa),
            ("emitter_decay_gamma", self.emitter_decay_gamma),
            ("pure_dephasing_gamma_phi", self.pure_dephasing_gamma_phi),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Cavity-enhanced emission rate of a single emitter,
    /// `I0 = 4 g^2 / (kappa + gamma + 2 gamma_phi)`.
    ///
    /// Returns `+inf` for a dissipation-free system; callers that require a
    /// finite rate (the correlation solver) validate separately.
    pub fn single_emitter_rate(&self) -> f64 {
        let denom =
            self.cavity_loss_kappa + self.emitter_decay_gamma + 2.0 * self.pure_dephasing_gamma_phi;
        4.0 * self.coupling_g * self.coupling_g / denom
    }

    /// `g^2 / (gamma + kappa)`: small values mean the photon-assisted
    /// coherences relax fast and may be eliminated adiabatically.
    pub fn weak_coupling_ratio(&self) -> f64 {
        self.coupling_g * self.coupling_g / (self.emitter_decay_gamma + self.cavity_loss_kappa)
    }

    /// True when [`Self::weak_coupling_ratio`] is below
    /// [`WEAK_COUPLING_THRESHOLD`].
    pub fn weak_coupling(&self) -> bool {
        self.weak_coupling_ratio() < WEAK_COUPLING_THRESHOLD
    }

    /// True when the emitters are resonant with the cavity mode.
    pub fn resonant(&self) -> bool {
        self.detuning_delta == 0.0
    }
}

/// Supported initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialCondition {
    /// Every emitter excited, cavity in vacuum.
    FullyInverted,
    /// Product of maximally mixed single-emitter states, cavity in vacuum.
    FullySeparableHalfInverted,
    /// Symmetric state with exactly `k` excitations, cavity in vacuum.
    DickeState(usize),
    /// All emitters in the ground state, cavity in Fock state `n_p`.
    PhotonFock(usize),
}

impl InitialCondition {
    /// Validate against the emitter count.
    pub fn validate(&self, n_emitters: usize) -> Result<()> {
        match *self {
            InitialCondition::DickeState(k) if k > n_emitters => {
                Err(Error::InvalidInitialCondition(format!(
                    "Dicke excitation number k = {k} exceeds N = {n_emitters}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Photon number the state starts with.
    pub fn initial_photons(&self) -> usize {
        match *self {
            InitialCondition::PhotonFock(n_p) => n_p,
            _ => 0,
        }
    }

    /// Stable identifier used in configuration files and output headers.
    pub fn label(&self) -> String {
        match *self {
            InitialCondition::FullyInverted => "fully_inverted".into(),
            InitialCondition::FullySeparableHalfInverted => "fshi".into(),
            InitialCondition::DickeState(k) => format!("dicke:{k}"),
            InitialCondition::PhotonFock(n_p) => format!("fock:{n_p}"),
        }
    }
}

/// Output sampling grid and integrator tolerances.
///
/// Times are in units of `1/g`. The grid is uniform from 0 to `t_end`
/// inclusive; the adaptive stepper lands on each sample exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl TimeGrid {
    /// Grid with the density-matrix solver's default tolerances. These sit
    /// an order of magnitude below the solver's positivity floor of -1e-8,
    /// so integration error never masquerades as a physics violation.
    pub fn new(t_end: f64, n_samples: usize) -> Self {
        TimeGrid { t_end, n_samples, rel_tol: 1e-9, abs_tol: 1e-12 }
    }

    /// Grid with the correlation solver's default tolerances — the same as
    /// the density-matrix defaults; its state vector is only four entries,
    /// so accuracy at this level is cheap.
    pub fn new_cluster(t_end: f64, n_samples: usize) -> Self {
        TimeGrid { t_end, n_samples, rel_tol: 1e-9, abs_tol: 1e-12 }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_samples must be >= 2, got {}",
                self.n_samples
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// The sample times `0, t_end/(n-1), ..., t_end`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_samples;
        (0..n).map(|i| self.t_end * i as f64 / (n - 1) as f64).collect()
    }
}
