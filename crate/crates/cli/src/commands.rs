//! Subcommand pipelines. Each writes its artifacts into the output
//! directory and reports whether every executed check passed.

use std::fs;
use std::path::{Path, PathBuf};

use eerds_core::equilibrium::{verify_equilibrium, Equilibrium};
use eerds_core::model::check_hypotheses;
use eerds_core::scenario::{energy_of, perturbed_equilibrium, reference_scenarios, Setup};
use eerds_core::simulator::{Simulator, Trajectory};
use eerds_core::state::State;
use eerds_core::verifier::{self, CheckRecord, CheckSummary, VerificationReport};
use serde::Serialize;
use serde_json::Value;

use crate::config::{parse_config, Format, InitialKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::plot;

/// Trajectory CSV header.
pub const CSV_HEADER: [&str; 11] = ["t", "S", "E", "Q", "H", "P", "l1_n", "l1_p", "l1_u", "h1_psi", "dt"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    CheckModel,
    Equilibrium,
    Constants,
    Simulate,
    VerifyEep,
    Report,
    Plot,
}

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub states: Option<usize>,
    pub margin: Option<f64>,
    pub scenarios: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub message: String,
    pub artifacts: Vec<PathBuf>,
}

/// Loads the configuration named by `opts`, or reference scenario A when
/// none is given, and applies the overrides.
pub fn load(opts: &Options) -> CliResult<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::from_scenario(&reference_scenarios()[0], 128),
    };
    if let Some(out) = &opts.out {
        cfg.output.out_dir = out.clone();
    }
    if let Some(seed) = opts.seed {
        cfg.verify.seed = seed;
        cfg.initial.seed = seed;
    }
    if let Some(states) = opts.states {
        cfg.verify.states = states;
    }
    if let Some(margin) = opts.margin {
        cfg.verify.margin = margin;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_subcommand(cmd: Subcommand, opts: &Options) -> CliResult<Outcome> {
    if matches!(cmd, Subcommand::Report | Subcommand::Plot) {
        // post-processing only needs the output directory
        let dir = match (&opts.config, &opts.out) {
            (_, Some(out)) => out.clone(),
            (Some(_), None) => load(opts)?.output.out_dir,
            (None, None) => PathBuf::from("out"),
        };
        return if cmd == Subcommand::Report { report(&dir) } else { plot_from_dir(&dir) };
    }
    let cfg = load(opts)?;
    let dir = &cfg.output.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    match cmd {
        Subcommand::CheckModel => check_model(&cfg),
        Subcommand::Equilibrium => equilibrium(&cfg),
        Subcommand::Constants => constants(&cfg),
        Subcommand::Simulate => simulate(&cfg),
        Subcommand::VerifyEep => verify_eep(&cfg, opts),
        Subcommand::Report | Subcommand::Plot => unreachable!("handled above"),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn outcome(pass: bool, message: String, artifacts: Vec<PathBuf>) -> CliResult<Outcome> {
    Ok(Outcome { pass, message, artifacts })
}

fn check_model(cfg: &RunConfig) -> CliResult<Outcome> {
    let setup = cfg.setup()?;
    let report = check_hypotheses(&setup.model);
    #[derive(Serialize)]
    struct Doc<'a> {
        pass: bool,
        scenario: &'a str,
        hypotheses: &'a eerds_core::model::HypothesisReport,
    }
    let pass = report.all_pass();
    let path = write_json(
        &cfg.output.out_dir,
        "check-model.json",
        &Doc { pass, scenario: &setup.name, hypotheses: &report },
    )?;
    outcome(pass, format!("model hypotheses {}", if pass { "hold" } else { "violated" }), vec![path])
}

fn equilibrium(cfg: &RunConfig) -> CliResult<Outcome> {
    let setup = cfg.setup()?;
    let report = verify_equilibrium(&setup.equilibrium, &setup.model, &setup.grid)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        pass: bool,
        scenario: &'a str,
        equilibrium: &'a Equilibrium,
        checks: &'a [eerds_core::equilibrium::EquilibriumCheck],
    }
    let pass = report.all_pass();
    let path = write_json(
        &cfg.output.out_dir,
        "equilibrium.json",
        &Doc { pass, scenario: &setup.name, equilibrium: &setup.equilibrium, checks: &report.checks },
    )?;
    outcome(pass, format!("u_inf = {}", setup.equilibrium.u_inf), vec![path])
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantEntry {
    pub name: &'static str,
    pub value: f64,
    pub formula: &'static str,
}

/// Every certified constant with the closed form it evaluates.
pub fn constant_entries(setup: &Setup) -> Vec<ConstantEntry> {
    let h = &setup.constants.hypothesis;
    let k = &setup.constants.curvature;
    let e = &setup.constants.eep;
    let c = |name, value, formula| ConstantEntry { name, value, formula };
    vec![
        c("g_w", h.g_w, "beta / (1 - beta)"),
        c("big_g_w", h.big_g_w, "(1 - beta) / beta"),
        c("g_sigma", h.g_sigma, "(1 + c_u) / (beta c_u), times (1 - alpha) for the power entropy"),
        c("c_theta", h.c_theta, "configured temperature floor"),
        c("c_u_max", h.c_u_max, "configured energy ceiling C_u"),
        c("c_u", h.c_u, "(sigma')^-1(1 / c_theta)"),
        c("c_theta_max", h.c_theta_max, "1 / sigma'(C_u)"),
        c("n_max", h.n_max, "w(C_u) / (c_theta w'(C_u))"),
        c("c_f", h.c_f, "F0, or 1 / (k1 + (k2 + k3) N_max) for Shockley-Read-Hall"),
        c("c_p", h.c_p, "(L / pi)^2"),
        c("eps_min", h.eps_min, "min eps"),
        c("eps_max", h.eps_max, "max eps"),
        c("big_k_sigma", k.big_k_sigma, "sup of -sigma''/2 over [c_u, C_u]"),
        c("big_k_w", k.big_k_w, "sup of -w''/2 over [c_u, C_u]"),
        c("k_sigma", k.k_sigma, "inf of -sigma''/2 over (0, C_u]"),
        c("k_w", k.k_w, "inf of -w''/2 over [0, C_u]"),
        c("c1", e.c1, "max{2/w(0) + C_P/(theta_inf eps_min), 2(2 w'(0)^2/w(0) + K_w) + K_sigma}"),
        c(
            "c2_tilde",
            e.c2_tilde,
            "(max{1, sigma'(C_u)/(4 eps_max c_F)} + 2 max{G_sigma, G_w}^2) 2 eps_max/(1 - 2 g_w) \
             max{1/sigma'(C_u), C_P/eps_min (C_P w(C_u)^2/(4 eps_min c_theta w'(C_u)^2) - 1/sigma''(C_u))}",
        ),
        c("c2", e.c2, "(2 + max{4 w'(0)^2 - 1, 0}) C2_tilde"),
        c(
            "c3_per_h0",
            e.c3_per_h0,
            "max{2|Omega|(2 w(C_u)/(3 c_theta w'(C_u)) + 4 w(C_u)/3 + w'(0)^2/(2 k_w)), |Omega|/k_sigma, 2(1 + C_P) theta_inf/eps_min}",
        ),
        c("rate", e.rate, "1 / (C1 C2)"),
    ]
}

fn constants(cfg: &RunConfig) -> CliResult<Outcome> {
    let setup = cfg.setup()?;
    #[derive(Serialize)]
    struct Doc<'a> {
        pass: bool,
        scenario: &'a str,
        cells: usize,
        energy: f64,
        constants: Vec<ConstantEntry>,
    }
    let entries = constant_entries(&setup);
    let pass = entries.iter().all(|e| e.value.is_finite() && e.value >= 0.0);
    let path = write_json(
        &cfg.output.out_dir,
        "constants.json",
        &Doc {
            pass,
            scenario: &setup.name,
            cells: setup.grid.cells(),
            energy: setup.equilibrium.energy,
            constants: entries,
        },
    )?;
    outcome(pass, format!("C1 C2 = {}", setup.constants.eep.c1c2()), vec![path])
}

/// Initial state from `[initial]` and the setup re-centred on its energy.
pub fn initial_state(cfg: &RunConfig, setup: &Setup) -> CliResult<(State, Setup)> {
    let (g, eq) = (&setup.grid, &setup.equilibrium);
    let s = match cfg.initial.kind {
        InitialKind::Equilibrium => return Ok((eq.state(g.cells()), setup.clone())),
        InitialKind::Perturbed => perturbed_equilibrium(g, eq, cfg.initial.amplitude)?,
        InitialKind::Random => verifier::random_admissible_state(cfg.initial.seed, g, &setup.model, &setup.bounds, eq, cfg.initial.amplitude)?,
    };
    let run = setup.with_energy(energy_of(&s, g)?)?;
    Ok((s, run))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub pass: bool,
    pub scenario: String,
    pub cells: usize,
    pub t_end: f64,
    pub steps: u64,
    pub rejections: u64,
    pub fixed_point_time: Option<f64>,
    pub equilibrium: Equilibrium,
    pub h0: f64,
    pub c3: f64,
    pub predicted_rate: f64,
    /// `None` when `H` vanishes too early for a fit.
    pub fitted_rate: Option<f64>,
    pub fitted_rate_note: &'static str,
    pub envelope_violations: usize,
    pub distance_bound_violations: usize,
    pub entropy_decrease_violations: usize,
    pub max_charge_drift: f64,
    pub max_relative_energy_drift: f64,
    pub final_distance: f64,
    pub entropy_production_law: CheckRecord,
}

pub fn summarize(setup: &Setup, traj: &Trajectory, t_end: f64) -> CliResult<SimulationSummary> {
    let fitted = traj.fitted_decay_rate();
    let last = traj.samples.last().ok_or_else(|| CliError::Missing("empty trajectory".into()))?;
    let envelope_violations = traj.envelope_violations();
    let distance_bound_violations = traj.distance_bound_violations();
    Ok(SimulationSummary {
        pass: envelope_violations == 0 && distance_bound_violations == 0,
        scenario: setup.name.clone(),
        cells: setup.grid.cells(),
        t_end,
        steps: traj.steps,
        rejections: traj.rejections,
        fixed_point_time: traj.fixed_point_time,
        equilibrium: setup.equilibrium,
        h0: traj.h0,
        c3: traj.c3,
        predicted_rate: traj.predicted_rate,
        fitted_rate: fitted,
        fitted_rate_note: if fitted.is_some() { "least squares on -log H over the second half" } else { "undefined: H vanishes" },
        envelope_violations,
        distance_bound_violations,
        entropy_decrease_violations: traj.entropy_decrease_violations(),
        max_charge_drift: traj.max_charge_drift(),
        max_relative_energy_drift: traj.max_relative_energy_drift(),
        final_distance: last.l1_n + last.l1_p + last.l1_u + last.h1_psi,
        entropy_production_law: verifier::check_entropy_production_law(traj)?,
    })
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for s in &traj.samples {
        let row = [
            s.t,
            s.entropy,
            s.energy,
            s.charge,
            s.relative_entropy,
            s.production,
            s.l1_n,
            s.l1_p,
            s.l1_u,
            s.h1_psi,
            s.dt,
        ];
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

fn simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let base = cfg.setup()?;
    let (s0, setup) = initial_state(cfg, &base)?;
    let sim_cfg = cfg.simulation.sim_config(setup.constants.eep.rate);
    let sim = Simulator::new(setup.model, setup.grid.clone(), setup.bounds, sim_cfg)?;
    let traj = sim.run(&s0, &setup.equilibrium, &setup.constants)?;
    let summary = summarize(&setup, &traj, sim_cfg.t_end)?;
    let dir = &cfg.output.out_dir;
    let mut artifacts = Vec::new();
    if cfg.output.wants(Format::Csv) {
        let p = dir.join("trajectory.csv");
        write_trajectory_csv(&p, &traj)?;
        artifacts.push(p);
    }
    if cfg.output.wants(Format::Json) {
        artifacts.push(write_json(dir, "simulate.json", &summary)?);
    }
    if cfg.output.wants(Format::Svg) {
        let rows = plot::rows_from_trajectory(&traj);
        let p = dir.join("plot.svg");
        let svg = plot::render(&rows, &plot::PlotMeta::from_summary(&summary));
        fs::write(&p, svg).map_err(|source| CliError::Io { path: p.clone(), source })?;
        artifacts.push(p);
    }
    let msg = format!(
        "{} steps, H0 = {:e}, fitted rate {}, predicted {:e}",
        summary.steps,
        summary.h0,
        summary.fitted_rate.map_or("undefined".into(), |r| format!("{r:e}")),
        summary.predicted_rate
    );
    outcome(summary.pass, msg, artifacts)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyDoc {
    pub pass: bool,
    pub states: usize,
    pub seed: u64,
    pub margin: f64,
    pub amplitude: f64,
    pub scenarios: Vec<String>,
    pub digest: String,
    pub summary: Vec<CheckSummary>,
    pub failures: Vec<CheckRecord>,
}

/// Setups for the battery: every `--scenario` path (the word `reference`
/// expands to the three built-in scenarios), else the main configuration.
pub fn battery_setups(cfg: &RunConfig, opts: &Options) -> CliResult<Vec<Setup>> {
    let cells = cfg.verify.cells.unwrap_or(cfg.domain.cells);
    if opts.scenarios.is_empty() {
        return Ok(vec![cfg.scenario().setup(cells)?]);
    }
    let mut out = Vec::new();
    for p in &opts.scenarios {
        if p.as_os_str() == "reference" {
            for sc in reference_scenarios() {
                out.push(sc.setup(cells)?);
            }
        } else {
            let c = parse_config(p)?;
            out.push(c.scenario().setup(c.verify.cells.unwrap_or(c.domain.cells))?);
        }
    }
    Ok(out)
}

pub fn verify_report(cfg: &RunConfig, setups: &[Setup]) -> CliResult<VerificationReport> {
    let v = &cfg.verify;
    let mut report = verifier::eep_battery(setups, v.states, v.seed, v.amplitude, v.margin, v.execution)?;
    for (i, su) in setups.iter().enumerate() {
        let seed = verifier::derive_seed(v.seed, (v.states + i) as u64);
        report.extend(verifier::scalar_inequality_suite(v.scalar_samples, seed, &su.model, su.constants.hypothesis.g_w)?);
    }
    report.extend(verifier::ckp_suite(v.scalar_samples, v.seed, &setups[0].grid)?);
    Ok(report)
}

fn verify_eep(cfg: &RunConfig, opts: &Options) -> CliResult<Outcome> {
    let setups = battery_setups(cfg, opts)?;
    let report = verify_report(cfg, &setups)?;
    let v = &cfg.verify;
    let doc = VerifyDoc {
        pass: report.all_pass(),
        states: v.states,
        seed: v.seed,
        margin: v.margin,
        amplitude: v.amplitude,
        scenarios: setups.iter().map(|s| s.name.clone()).collect(),
        digest: verifier::digest(report.records.iter().flat_map(|r| [&r.lhs, &r.rhs])),
        summary: report.summary(),
        failures: report.failures().cloned().collect(),
    };
    let path = write_json(&cfg.output.out_dir, "verify.json", &doc)?;
    let msg = format!("{} checks, {} failures", report.records.len(), doc.failures.len());
    outcome(doc.pass, msg, vec![path])
}

/// Folds every JSON document in `dir` into `report.json`, keyed by file
/// name.
fn report(dir: &Path) -> CliResult<Outcome> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "report.json"))
        .collect();
    names.sort();
    let mut docs = serde_json::Map::new();
    let mut pass = true;
    for p in &names {
        let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
        let value: Value = serde_json::from_str(&text)?;
        pass &= value.get("pass").and_then(Value::as_bool).unwrap_or(true);
        let key = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        docs.insert(key, value);
    }
    if docs.is_empty() {
        return Err(CliError::Missing(format!("no JSON reports in {}", dir.display())));
    }
    let mut doc = serde_json::Map::new();
    doc.insert("pass".into(), Value::Bool(pass));
    doc.insert("reports".into(), Value::Object(docs));
    let path = write_json(dir, "report.json", &Value::Object(doc))?;
    outcome(pass, format!("{} reports aggregated", names.len()), vec![path])
}

fn plot_from_dir(dir: &Path) -> CliResult<Outcome> {
    let csv_path = dir.join("trajectory.csv");
    let json_path = dir.join("simulate.json");
    if !csv_path.exists() || !json_path.exists() {
        return Err(CliError::Missing(format!("run `simulate` first: {} and {} are needed", csv_path.display(), json_path.display())));
    }
    let rows = plot::read_rows(&csv_path)?;
    let text = fs::read_to_string(&json_path).map_err(|source| CliError::Io { path: json_path.clone(), source })?;
    let meta = plot::PlotMeta::from_json(&serde_json::from_str(&text)?)?;
    let svg = plot::render(&rows, &meta);
    let path = dir.join("plot.svg");
    fs::write(&path, svg).map_err(|source| CliError::Io { path: path.clone(), source })?;
    outcome(true, format!("{} samples plotted", rows.len()), vec![path])
}
