//! Built-in scenarios and custom-config runs.
//!
//! Four scenarios reproduce the toolkit's headline analyses end to end;
//! `run <config.toml>` executes a single user-defined trajectory. All of
//! them write time-series files under the shared column contract plus a
//! JSON manifest tying every file to its config hash.

use std::path::{Path, PathBuf};

use superradiance::analysis;
use superradiance::cluster::{self, ClusterRun};
use superradiance::dicke::JMLabel;
use superradiance::lindblad::{self, ExactOptions, ExactRun};
use superradiance::model::{InitialCondition, SystemParams, TimeGrid};

use crate::config::{
    hex_digest, parse_range, range_points, resolve, Overrides, RunConfig, RunSpec, Solver,
};
use crate::output::{self, fmt_float, OutputSet, TimeRow};
use crate::CliError;

/// Largest emitter count for which a `both`-solver comparison runs the
/// density-matrix side.
pub const MAX_BOTH_EMITTERS: usize = 8;

pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const SCENARIOS: [ScenarioInfo; 4] = [
    ScenarioInfo {
        name: "fig1",
        summary: "superradiant burst, N=50, kappa/g=20, gamma/g=1: correlated vs \
                  uncorrelated emission rates, Dicke comparison, peak-rate scaling over N",
    },
    ScenarioInfo {
        name: "fig2",
        summary: "entanglement witness traces, N=50: fully inverted, half-inverted \
                  product, and half-excited Dicke initial states",
    },
    ScenarioInfo {
        name: "fig3",
        summary: "collective-sector decomposition, N=4 exact: sector weights, \
                  superradiant/subradiant split, purity",
    },
    ScenarioInfo {
        name: "fig4",
        summary: "witness after photon-number preparation, N=2 and 4 exact, \
                  kappa/g=gamma/g=0.1, plus the gamma/g detection-threshold sweep",
    },
];

/// Everything a `run` invocation carries besides the target name.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub sweep_gamma: Option<String>,
}

fn overdamped(n: usize) -> SystemParams {
    SystemParams::from_ratios(n, 20.0, 1.0, 0.0)
}

fn weakly_damped(n: usize) -> SystemParams {
    SystemParams::from_ratios(n, 0.1, 0.1, 0.0)
}

fn apply_gamma_phi(params: &mut SystemParams, overrides: &Overrides) {
    if let Some(gp) = overrides.gamma_phi_over_g {
        params.pure_dephasing_gamma_phi = gp * params.coupling_g;
    }
}

fn run_cluster_spec(spec: &RunSpec) -> Result<ClusterRun, CliError> {
    spec.validate()?;
    Ok(cluster::run(&spec.params, &spec.ic, &spec.grid, spec.correlations_on)?)
}

fn run_exact_spec(spec: &RunSpec, keep_reduced: bool) -> Result<ExactRun, CliError> {
    spec.validate()?;
    let opts = ExactOptions { keep_reduced, ..Default::default() };
    Ok(lindblad::run(&spec.params, &spec.ic, &spec.grid, &opts)?)
}

/// Numerical-quality complaints for a finished exact run; empty when clean.
fn quality_complaints(file: &str, run: &ExactRun) -> Vec<String> {
    let q = &run.quality;
    let mut v = Vec::new();
    if !q.cutoff_ok {
        v.push(format!(
            "{file}: photon cutoff inadequate (top Fock population {:.2e})",
            q.max_top_fock_population
        ));
    }
    if q.max_trace_drift > 1e-8 {
        v.push(format!("{file}: trace drift {:.2e}", q.max_trace_drift));
    }
    if q.max_hermiticity_error > 1e-9 {
        v.push(format!("{file}: hermiticity error {:.2e}", q.max_hermiticity_error));
    }
    if !q.positivity_ok {
        v.push(format!(
            "{file}: positivity violated (min eigenvalue {:.2e})",
            q.min_eigenvalue
        ));
    }
    v
}

fn max_witness_gap(a: &[TimeRow], b: &[TimeRow]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.witness - y.witness).abs()).fold(0.0, f64::max)
}

fn reject_sweep_flag(target: &str, ctx: &RunContext) -> Result<(), CliError> {
    if ctx.sweep_gamma.is_some() {
        return Err(CliError::config(format!(
            "--sweep-gamma applies to the fig4 scenario, not to {target}; \
             use the `sweep` command for custom configs"
        )));
    }
    Ok(())
}

fn reject_no_correlations(target: &str, ctx: &RunContext, reason: &str) -> Result<(), CliError> {
    if ctx.overrides.no_correlations {
        return Err(CliError::config(format!(
            "--no-correlations does not apply to {target}: {reason}"
        )));
    }
    Ok(())
}

/// Dispatch a `run` target: a built-in scenario name or a config-file path.
pub fn run_target(target: &str, ctx: &RunContext) -> Result<(), CliError> {
    match target {
        "fig1" => run_fig1(ctx),
        "fig2" => run_fig2(ctx),
        "fig3" => run_fig3(ctx),
        "fig4" => run_fig4(ctx),
        other => {
            let path = Path::new(other);
            if path.is_file() {
                run_custom(path, ctx)
            } else if other.ends_with(".toml") {
                Err(CliError::config(format!("config file not found: {other}")))
            } else {
                Err(CliError::config(format!(
                    "unknown scenario '{other}' (built-ins: fig1, fig2, fig3, fig4; \
                     or pass a config-file path)"
                )))
            }
        }
    }
}

pub fn list_scenarios() {
    for s in &SCENARIOS {
        println!("{:6}  {}", s.name, s.summary);
    }
}

/// fig1: the correlation-driven emission burst and its scaling with N.
fn run_fig1(ctx: &RunContext) -> Result<(), CliError> {
    reject_sweep_flag("fig1", ctx)?;
    reject_no_correlations("fig1", ctx, "it already writes correlated and uncorrelated outputs")?;
    if let Some(s) = ctx.overrides.solver {
        if s != Solver::Cluster {
            return Err(CliError::config(
                "fig1 runs at N=50, beyond the density-matrix solver; only --solver cluster applies",
            ));
        }
    }
    let n = ctx.overrides.n_emitters.unwrap_or(50);
    let mut params = overdamped(n);
    apply_gamma_phi(&mut params, &ctx.overrides);
    let grid = TimeGrid::new_cluster(9.0, 1201);
    let mut out = OutputSet::new(&ctx.out_dir)?;

    let trajectories = [
        ("fig1_correlated.csv", InitialCondition::FullyInverted, true),
        ("fig1_uncorrelated.csv", InitialCondition::FullyInverted, false),
        ("fig1_dicke.csv", InitialCondition::DickeState(n / 2), true),
    ];
    for (file, ic, correlations_on) in trajectories {
        let spec = RunSpec {
            params: params.clone(),
            ic,
            grid: grid.clone(),
            solver: Solver::Cluster,
            correlations_on,
        };
        let run = run_cluster_spec(&spec)?;
        out.write_series(
            file,
            &spec.config_hash(),
            spec.params.weak_coupling(),
            None,
            &output::rows_from_cluster(&run),
        )?;
        println!("wrote {}", out.path(file).display());
    }

    // peak-rate scaling over emitter number, correlations on and off
    let n_list = [10usize, 20, 50, 100];
    let peak_grid = TimeGrid::new_cluster(9.0, 2001);
    let mut scaling_rows = Vec::new();
    for &ni in &n_list {
        let mut p = params.clone();
        p.n_emitters = ni;
        let mut peaks = [0.0; 2];
        for (slot, corr) in [(0usize, true), (1usize, false)] {
            let run = cluster::run(&p, &InitialCondition::FullyInverted, &peak_grid, corr)?;
            peaks[slot] = cluster::peak_se_rate(&run);
        }
        scaling_rows.push(format!(
            "{},{},{}",
            ni,
            fmt_float(peaks[0]),
            fmt_float(peaks[1])
        ));
    }
    let alpha_on = cluster::max_se_rate_scaling(&n_list, &params, true)?;
    let alpha_off = cluster::max_se_rate_scaling(&n_list, &params, false)?;
    let base_spec = RunSpec {
        params: params.clone(),
        ic: InitialCondition::FullyInverted,
        grid: peak_grid,
        solver: Solver::Cluster,
        correlations_on: true,
    };
    let scaling_hash = hex_digest(
        format!("{}scaling_n=10,20,50,100\n", base_spec.canonical_string()).as_bytes(),
    );
    let file = "fig1_scaling.csv";
    output::write_table(
        &out.path(file),
        &scaling_hash,
        &["n_emitters", "peak_rate_correlated", "peak_rate_uncorrelated"],
        scaling_rows,
    )?;
    out.record(file, &scaling_hash, params.weak_coupling(), None);
    println!("wrote {}", out.path(file).display());
    println!("fig1 scaling exponent of the peak emission rate over N:");
    println!("  correlations on:  {alpha_on:.3}");
    println!("  correlations off: {alpha_off:.3}");
    out.finish("fig1_manifest.json")
}

/// fig2: witness traces for three initial states.
fn run_fig2(ctx: &RunContext) -> Result<(), CliError> {
    reject_sweep_flag("fig2", ctx)?;
    let n = ctx.overrides.n_emitters.unwrap_or(50);
    let solver = ctx.overrides.solver.unwrap_or(Solver::Cluster);
    if solver == Solver::Both && n > MAX_BOTH_EMITTERS {
        return Err(CliError::config(format!(
            "--solver both runs the density-matrix solver and needs N <= {MAX_BOTH_EMITTERS}; \
             fig2 defaults to N=50 — add --n-emitters"
        )));
    }
    if solver == Solver::Exact {
        reject_no_correlations("fig2 --solver exact", ctx, "no correlation-solver run happens")?;
    }
    let mut params = overdamped(n);
    apply_gamma_phi(&mut params, &ctx.overrides);
    let grid = TimeGrid::new_cluster(9.0, 1201);
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let mut complaints = Vec::new();

    let traces = [
        ("fig2_fully_inverted", InitialCondition::FullyInverted),
        ("fig2_fshi", InitialCondition::FullySeparableHalfInverted),
        ("fig2_dicke", InitialCondition::DickeState(n / 2)),
    ];
    for (stem, ic) in traces {
        let spec = RunSpec {
            params: params.clone(),
            ic,
            grid: grid.clone(),
            solver,
            correlations_on: !ctx.overrides.no_correlations,
        };
        let written = write_solver_outputs(&spec, stem, &mut out, &mut complaints)?;
        for file in &written {
            println!("wrote {}", out.path(file).display());
        }
        if let Some(gap) = written.gap {
            println!(
                "fig2 {}: max pointwise witness difference cluster vs exact = {:.3e}",
                spec.ic.label(),
                gap
            );
        }
    }
    out.finish("fig2_manifest.json")?;
    quality_exit(complaints)
}

/// fig3: exact sector decomposition of the emitter state during the burst.
fn run_fig3(ctx: &RunContext) -> Result<(), CliError> {
    reject_sweep_flag("fig3", ctx)?;
    reject_no_correlations("fig3", ctx, "it is a density-matrix scenario")?;
    if let Some(s) = ctx.overrides.solver {
        if s != Solver::Exact {
            return Err(CliError::config(
                "fig3 decomposes the exact emitter state; only --solver exact applies",
            ));
        }
    }
    let n = ctx.overrides.n_emitters.unwrap_or(4);
    if n < 2 {
        return Err(CliError::config("fig3 needs at least 2 emitters"));
    }
    let mut params = overdamped(n);
    apply_gamma_phi(&mut params, &ctx.overrides);
    let spec = RunSpec {
        params,
        ic: InitialCondition::FullyInverted,
        grid: TimeGrid::new(10.0, 501),
        solver: Solver::Exact,
        correlations_on: true,
    };
    let run = run_exact_spec(&spec, true)?;
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let hash = spec.config_hash();

    let file = "fig3_timeseries.csv";
    out.write_series(
        file,
        &hash,
        spec.params.weak_coupling(),
        Some(run.quality.cutoff_ok),
        &output::rows_from_exact(&run),
    )?;
    println!("wrote {}", out.path(file).display());

    let reduced = run.reduced.as_ref().expect("reduced states were requested");
    let g = spec.params.coupling_g;
    let mut columns: Vec<String> = vec!["t_g".into()];
    let mut rows = Vec::with_capacity(reduced.len());
    for (rec, rho) in run.records.iter().zip(reduced) {
        let components = analysis::decompose(&rho.view(), n)?;
        if columns.len() == 1 {
            columns.extend(components.iter().map(|c| weight_column(&c.label)));
            columns.push("c0_sup".into());
            columns.push("c0_sub".into());
            columns.push("purity".into());
        }
        let (sup, sub) = analysis::radiance_split(&components);
        let mut fields = Vec::with_capacity(columns.len());
        fields.push(fmt_float(rec.t * g));
        fields.extend(components.iter().map(|c| fmt_float(c.weight)));
        fields.push(fmt_float(sup));
        fields.push(fmt_float(sub));
        fields.push(fmt_float(rec.purity));
        rows.push(fields.join(","));
    }
    let file = "fig3_decomposition.csv";
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    output::write_table(&out.path(file), &hash, &column_refs, rows)?;
    out.record(file, &hash, spec.params.weak_coupling(), Some(run.quality.cutoff_ok));
    println!("wrote {}", out.path(file).display());

    out.finish("fig3_manifest.json")?;
    quality_exit(quality_complaints("fig3_timeseries.csv", &run))
}

/// fig4: witness after cavity Fock preparation and the loss-threshold sweep.
fn run_fig4(ctx: &RunContext) -> Result<(), CliError> {
    reject_no_correlations("fig4", ctx, "it is a density-matrix scenario")?;
    if let Some(s) = ctx.overrides.solver {
        if s != Solver::Exact {
            return Err(CliError::config(
                "fig4 measures exact-state entanglement; only --solver exact applies",
            ));
        }
    }
    let n_list: Vec<usize> = match ctx.overrides.n_emitters {
        None => vec![2, 4],
        Some(n) if n >= 2 && n % 2 == 0 => vec![n],
        Some(n) => {
            return Err(CliError::config(format!(
                "fig4 prepares N/2 photons and needs even N >= 2, got {n}"
            )))
        }
    };
    let sweep_range = match &ctx.sweep_gamma {
        Some(s) => parse_range(s)?,
        None => (0.4, 1.8, 8),
    };
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let mut complaints = Vec::new();
    let mut sweep_rows = Vec::new();
    let mut threshold_rows = Vec::new();
    let mut sweep_hash_input = String::new();

    for &n in &n_list {
        let mut params = weakly_damped(n);
        apply_gamma_phi(&mut params, &ctx.overrides);
        let spec = RunSpec {
            params: params.clone(),
            ic: InitialCondition::PhotonFock(n / 2),
            grid: TimeGrid::new(20.0, 801),
            solver: Solver::Exact,
            correlations_on: true,
        };
        let run = run_exact_spec(&spec, false)?;
        let file = format!("fig4_n{n}.csv");
        let rows = output::rows_from_exact(&run);
        out.write_series(
            &file,
            &spec.config_hash(),
            spec.params.weak_coupling(),
            Some(run.quality.cutoff_ok),
            &rows,
        )?;
        complaints.extend(quality_complaints(&file, &run));
        println!("wrote {}", out.path(&file).display());

        let (lo, hi, count) = sweep_range;
        let sweep = analysis::threshold_sweep(&params, lo, hi, count)?;
        for p in &sweep.points {
            sweep_rows.push(format!(
                "{},{},{},{}",
                n,
                fmt_float(p.gamma_over_g),
                fmt_float(p.min_witness),
                u8::from(p.detected)
            ));
        }
        threshold_rows.push(format!("{},{}", n, fmt_float(sweep.threshold_gamma_over_g)));
        println!(
            "fig4 N={n}: witness detection lost above gamma/g = {:.2}",
            sweep.threshold_gamma_over_g
        );
        sweep_hash_input.push_str(&spec.canonical_string());
        sweep_hash_input.push_str(&format!("sweep_gamma={lo:e}:{hi:e}:{count}\n"));
    }

    let sweep_hash = hex_digest(sweep_hash_input.as_bytes());
    let file = "fig4_sweep.csv";
    output::write_table(
        &out.path(file),
        &sweep_hash,
        &["n_emitters", "gamma_over_g", "min_witness", "detected"],
        sweep_rows,
    )?;
    out.record(file, &sweep_hash, true, None);
    println!("wrote {}", out.path(file).display());

    let file = "fig4_thresholds.csv";
    output::write_table(
        &out.path(file),
        &sweep_hash,
        &["n_emitters", "critical_gamma_over_g"],
        threshold_rows,
    )?;
    out.record(file, &sweep_hash, true, None);
    println!("wrote {}", out.path(file).display());

    out.finish("fig4_manifest.json")?;
    quality_exit(complaints)
}

/// Custom config-file run: one trajectory (or a cluster/exact pair).
fn run_custom(path: &Path, ctx: &RunContext) -> Result<(), CliError> {
    reject_sweep_flag(&path.display().to_string(), ctx)?;
    let config = RunConfig::from_path(path)?;
    let spec = resolve(&config, &ctx.overrides)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| CliError::config(format!("cannot derive a file stem from {}", path.display())))?;
    let mut out = OutputSet::new(&ctx.out_dir)?;
    let mut complaints = Vec::new();
    let written = write_solver_outputs(&spec, &stem, &mut out, &mut complaints)?;
    for file in &written {
        println!("wrote {}", out.path(file).display());
    }
    if let Some(gap) = written.gap {
        println!("max pointwise witness difference cluster vs exact = {gap:.3e}");
    }
    out.finish(&format!("{stem}_manifest.json"))?;
    quality_exit(complaints)
}

/// Files written for one spec, plus the witness gap for `both` runs.
struct WrittenOutputs {
    files: Vec<String>,
    gap: Option<f64>,
}

impl<'a> IntoIterator for &'a WrittenOutputs {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;
    fn into_iter(self) -> Self::IntoIter {
        self.files.iter()
    }
}

/// Run a spec with its chosen solver(s) and write `<stem>.csv` (single
/// solver) or the `<stem>_cluster.csv` / `<stem>_exact.csv` pair (`both`).
fn write_solver_outputs(
    spec: &RunSpec,
    stem: &str,
    out: &mut OutputSet,
    complaints: &mut Vec<String>,
) -> Result<WrittenOutputs, CliError> {
    match spec.solver {
        Solver::Cluster => {
            let run = run_cluster_spec(spec)?;
            let file = format!("{stem}.csv");
            out.write_series(
                &file,
                &spec.config_hash(),
                spec.params.weak_coupling(),
                None,
                &output::rows_from_cluster(&run),
            )?;
            Ok(WrittenOutputs { files: vec![file], gap: None })
        }
        Solver::Exact => {
            let run = run_exact_spec(spec, false)?;
            let file = format!("{stem}.csv");
            out.write_series(
                &file,
                &spec.config_hash(),
                spec.params.weak_coupling(),
                Some(run.quality.cutoff_ok),
                &output::rows_from_exact(&run),
            )?;
            complaints.extend(quality_complaints(&file, &run));
            Ok(WrittenOutputs { files: vec![file], gap: None })
        }
        Solver::Both => {
            if spec.params.n_emitters > MAX_BOTH_EMITTERS {
                return Err(CliError::config(format!(
                    "--solver both runs the density-matrix solver and needs N <= {MAX_BOTH_EMITTERS}, \
                     got N = {}",
                    spec.params.n_emitters
                )));
            }
            let mut cl_spec = spec.clone();
            cl_spec.solver = Solver::Cluster;
            let mut ex_spec = spec.clone();
            ex_spec.solver = Solver::Exact;
            let cl_run = run_cluster_spec(&cl_spec)?;
            let ex_run = run_exact_spec(&ex_spec, false)?;
            let cl_rows = output::rows_from_cluster(&cl_run);
            let ex_rows = output::rows_from_exact(&ex_run);
            let cl_file = format!("{stem}_cluster.csv");
            let ex_file = format!("{stem}_exact.csv");
            out.write_series(
                &cl_file,
                &cl_spec.config_hash(),
                cl_spec.params.weak_coupling(),
                None,
                &cl_rows,
            )?;
            out.write_series(
                &ex_file,
                &ex_spec.config_hash(),
                ex_spec.params.weak_coupling(),
                Some(ex_run.quality.cutoff_ok),
                &ex_rows,
            )?;
            complaints.extend(quality_complaints(&ex_file, &ex_run));
            Ok(WrittenOutputs {
                files: vec![cl_file, ex_file],
                gap: Some(max_witness_gap(&cl_rows, &ex_rows)),
            })
        }
    }
}

fn half_int(doubled: i64) -> String {
    if doubled % 2 == 0 {
        format!("{}", doubled / 2)
    } else {
        format!("{}", doubled as f64 / 2.0)
    }
}

fn weight_column(label: &JMLabel) -> String {
    format!("w_j{}_m{}", half_int(label.two_j() as i64), half_int(label.two_m() as i64))
}

fn quality_exit(complaints: Vec<String>) -> Result<(), CliError> {
    if complaints.is_empty() {
        Ok(())
    } else {
        Err(CliError::quality(format!(
            "outputs were written, but numerical-quality flags fired: {}",
            complaints.join("; ")
        )))
    }
}

/// `sweep` verb: rerun one config over a gamma/g grid in parallel and
/// summarize each point (refined witness minimum, detection, peak rate).
pub fn run_sweep(
    config_path: &Path,
    gamma_range: &str,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<(), CliError> {
    use rayon::prelude::*;

    let config = RunConfig::from_path(config_path)?;
    let base = resolve(&config, overrides)?;
    if base.solver == Solver::Both {
        return Err(CliError::config(
            "sweep runs one solver per point; set solver to exact or cluster",
        ));
    }
    let range = parse_range(gamma_range)?;
    let gammas = range_points(range);
    let results: Vec<Result<(String, Vec<String>), CliError>> = gammas
        .par_iter()
        .map(|&gg| {
            let mut spec = base.clone();
            spec.params.emitter_decay_gamma = gg * spec.params.coupling_g;
            let row = sweep_point(&spec, gg)?;
            Ok(row)
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut complaints = Vec::new();
    for result in results {
        let (row, point_complaints) = result?;
        rows.push(row);
        complaints.extend(point_complaints);
    }

    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| {
            CliError::config(format!("cannot derive a file stem from {}", config_path.display()))
        })?;
    let mut out = OutputSet::new(out_dir)?;
    let (lo, hi, count) = range;
    let hash = hex_digest(
        format!("{}sweep_gamma={lo:e}:{hi:e}:{count}\n", base.canonical_string()).as_bytes(),
    );
    let file = format!("{stem}_sweep.csv");
    output::write_table(
        &out.path(&file),
        &hash,
        &["gamma_over_g", "min_witness", "detected", "peak_gamma_tot"],
        rows,
    )?;
    out.record(&file, &hash, base.params.weak_coupling(), None);
    println!("wrote {}", out.path(&file).display());
    out.finish(&format!("{stem}_sweep_manifest.json"))?;
    quality_exit(complaints)
}

/// One sweep point: run the configured solver, summarize the witness trace
/// and the peak total emission rate. Returns the CSV row plus any quality
/// complaints.
fn sweep_point(spec: &RunSpec, gamma_over_g: f64) -> Result<(String, Vec<String>), CliError> {
    let tag = format!("gamma/g={gamma_over_g}");
    let (rows, complaints) = match spec.solver {
        Solver::Cluster => (output::rows_from_cluster(&run_cluster_spec(spec)?), Vec::new()),
        Solver::Exact => {
            let run = run_exact_spec(spec, false)?;
            let complaints = quality_complaints(&tag, &run);
            (output::rows_from_exact(&run), complaints)
        }
        Solver::Both => unreachable!("rejected before the sweep starts"),
    };
    let n = spec.params.n_emitters;
    let min_witness = if n >= 2 {
        let times: Vec<f64> = rows.iter().map(|r| r.t_g).collect();
        let c0s: Vec<num_complex::Complex64> =
            rows.iter().map(|r| num_complex::Complex64::new(r.re_c0, r.im_c0)).collect();
        let czzs: Vec<f64> = rows.iter().map(|r| r.czz).collect();
        analysis::witness_trace(&times, &c0s, &czzs, n)?.min_value
    } else {
        rows.iter().map(|r| r.witness).fold(f64::INFINITY, f64::min)
    };
    let peak_gamma_tot = rows.iter().map(|r| r.gamma_tot).fold(f64::NEG_INFINITY, f64::max);
    let row = format!(
        "{},{},{},{}",
        fmt_float(gamma_over_g),
        fmt_float(min_witness),
        u8::from(min_witness < 0.0),
        fmt_float(peak_gamma_tot)
    );
    Ok((row, complaints))
}
