//! Run configuration: the on-disk schema, parsing, validation, and the
//! canonical hash that ties every output file to the settings that
//! produced it.

use serde::Deserialize;
use sha2::{Digest, Sha256};
use superradiance::model::{InitialCondition, SystemParams, TimeGrid};

use crate::CliError;

/// Which solver executes a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Exact,
    Cluster,
    /// Run both solvers on the same grid and report their witness gap.
    Both,
}

impl Solver {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "exact" => Ok(Solver::Exact),
            "cluster" => Ok(Solver::Cluster),
            "both" => Ok(Solver::Both),
            other => Err(CliError::config(format!(
                "unknown solver '{other}' (expected exact, cluster, or both)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Cluster => "cluster",
            Solver::Both => "both",
        }
    }
}

/// On-disk configuration schema. Field names are the file keys; unknown
/// keys are hard errors so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_emitters: usize,
    pub kappa_over_g: f64,
    pub gamma_over_g: f64,
    pub gamma_phi_over_g: f64,
    pub detuning_over_g: f64,
    /// `fully_inverted`, `fshi`, `dicke:<k>`, or `fock:<n>`
    pub initial_condition: String,
    pub t_end_g: f64,
    pub n_samples: usize,
    /// `exact`, `cluster`, or `both`
    pub solver: String,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Parse the textual initial-condition identifier used in configs and
/// output headers.
pub fn parse_initial_condition(s: &str) -> Result<InitialCondition, CliError> {
    if s == "fully_inverted" {
        return Ok(InitialCondition::FullyInverted);
    }
    if s == "fshi" {
        return Ok(InitialCondition::FullySeparableHalfInverted);
    }
    if let Some(k) = s.strip_prefix("dicke:") {
        let k = k.parse().map_err(|_| {
            CliError::config(format!("bad excitation count in initial condition '{s}'"))
        })?;
        return Ok(InitialCondition::DickeState(k));
    }
    if let Some(n) = s.strip_prefix("fock:") {
        let n = n.parse().map_err(|_| {
            CliError::config(format!("bad photon number in initial condition '{s}'"))
        })?;
        return Ok(InitialCondition::PhotonFock(n));
    }
    Err(CliError::config(format!(
        "unknown initial condition '{s}' (expected fully_inverted, fshi, dicke:<k>, or fock:<n>)"
    )))
}

/// One fully resolved solver run: everything that determines its numbers.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub params: SystemParams,
    pub ic: InitialCondition,
    pub grid: TimeGrid,
    pub solver: Solver,
    pub correlations_on: bool,
}

impl RunSpec {
    /// Canonical key-value rendering; the hash input. Field order is fixed
    /// and floats use round-trip scientific formatting, so equal settings
    /// always hash equally.
    pub fn canonical_string(&self) -> String {
        let p = &self.params;
        let g = p.coupling_g;
        format!(
            "n_emitters={}\nkappa_over_g={:e}\ngamma_over_g={:e}\ngamma_phi_over_g={:e}\n\
             detuning_over_g={:e}\ninitial_condition={}\nt_end_g={:e}\nn_samples={}\n\
             rel_tol={:e}\nabs_tol={:e}\nsolver={}\ncorrelations={}\n",
            p.n_emitters,
            p.cavity_loss_kappa / g,
            p.emitter_decay_gamma / g,
            p.pure_dephasing_gamma_phi / g,
            p.detuning_delta / g,
            self.ic.label(),
            self.grid.t_end,
            self.grid.n_samples,
            self.grid.rel_tol,
            self.grid.abs_tol,
            self.solver.as_str(),
            self.correlations_on,
        )
    }

    pub fn config_hash(&self) -> String {
        hex_digest(self.canonical_string().as_bytes())
    }

    /// Validate the physics side of the run.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        self.ic.validate(self.params.n_emitters)?;
        self.grid.validate()?;
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Overrides collected from command-line flags; applied on top of a config
/// file or a built-in scenario definition.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub solver: Option<Solver>,
    pub gamma_phi_over_g: Option<f64>,
    pub n_emitters: Option<usize>,
    pub no_correlations: bool,
}

impl Overrides {
    pub fn apply(&self, spec: &mut RunSpec) {
        if let Some(s) = self.solver {
            spec.solver = s;
        }
        if let Some(gp) = self.gamma_phi_over_g {
            spec.params.pure_dephasing_gamma_phi = gp * spec.params.coupling_g;
        }
        if let Some(n) = self.n_emitters {
            spec.params.n_emitters = n;
        }
        if self.no_correlations {
            spec.correlations_on = false;
        }
    }
}

/// Build the resolved run from a parsed config file plus flag overrides.
pub fn resolve(config: &RunConfig, overrides: &Overrides) -> Result<RunSpec, CliError> {
    let params = SystemParams {
        n_emitters: config.n_emitters,
        coupling_g: 1.0,
        cavity_loss_kappa: config.kappa_over_g,
        emitter_decay_gamma: config.gamma_over_g,
        pure_dephasing_gamma_phi: config.gamma_phi_over_g,
        detuning_delta: config.detuning_over_g,
    };
    let ic = parse_initial_condition(&config.initial_condition)?;
    let grid = TimeGrid::new(config.t_end_g, config.n_samples);
    let mut spec = RunSpec {
        params,
        ic,
        grid,
        solver: Solver::parse(&config.solver)?,
        correlations_on: true,
    };
    overrides.apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}

/// Parse a `start:end:count` range expression.
pub fn parse_range(s: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "bad range '{s}' (expected start:end:count)"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::config(format!("bad range start '{}'", parts[0])))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::config(format!("bad range end '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::config(format!("bad range count '{}'", parts[2])))?;
    if !(start.is_finite() && end.is_finite()) || end <= start || count < 2 {
        return Err(CliError::config(format!(
            "bad range '{s}' (need finite start < end and count >= 2)"
        )));
    }
    Ok((start, end, count))
}

/// The evenly spaced grid points of a parsed range.
pub fn range_points((start, end, count): (f64, f64, usize)) -> Vec<f64> {
    (0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> &'static str {
        "n_emitters = 3\nkappa_over_g = 20.0\ngamma_over_g = 1.0\n\
         gamma_phi_over_g = 0.0\ndetuning_over_g = 0.0\n\
         initial_condition = \"fully_inverted\"\nt_end_g = 2.0\n\
         n_samples = 51\nsolver = \"cluster\"\n"
    }

    #[test]
    fn parses_complete_config() {
        let config: RunConfig = toml::from_str(sample_config()).unwrap();
        let spec = resolve(&config, &Overrides::default()).unwrap();
        assert_eq!(spec.params.n_emitters, 3);
        assert_eq!(spec.solver, Solver::Cluster);
        assert!(spec.correlations_on);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{}{}", sample_config(), "extra_key = 1\n");
        let err = toml::from_str::<RunConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("extra_key"));
    }

    #[test]
    fn rejects_missing_keys() {
        let text = sample_config().replace("n_samples = 51\n", "");
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn initial_condition_identifiers_round_trip() {
        for s in ["fully_inverted", "fshi", "dicke:25", "fock:2"] {
            let ic = parse_initial_condition(s).unwrap();
            assert_eq!(ic.label(), s);
        }
        assert!(parse_initial_condition("dicke:x").is_err());
        assert!(parse_initial_condition("inverted").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let config: RunConfig = toml::from_str(sample_config()).unwrap();
        let spec = resolve(&config, &Overrides::default()).unwrap();
        let again = resolve(&config, &Overrides::default()).unwrap();
        assert_eq!(spec.config_hash(), again.config_hash());
        let overrides = Overrides { no_correlations: true, ..Default::default() };
        let other = resolve(&config, &overrides).unwrap();
        assert_ne!(spec.config_hash(), other.config_hash());
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0.5:1.5:3").unwrap(), (0.5, 1.5, 3));
        let pts = range_points((0.5, 1.5, 3));
        assert_eq!(pts, vec![0.5, 1.0, 1.5]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("2:1:5").is_err());
        assert!(parse_range("1:2:1").is_err());
    }
}
