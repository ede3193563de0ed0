//! TOML run configuration.
//!
//! `[model]` and `[domain]` are required. Every other section falls back to
//! documented defaults, and unknown keys anywhere are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use eerds_core::exec::Execution;
use eerds_core::model::{ModelFunctions, PowerWeight, ReactionRate, ThermalEntropy};
use eerds_core::scenario::{Permittivity, Scenario, Setup};
use eerds_core::simulator::{JouleCoupling, SimConfig};
use eerds_core::state::Bounds;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub domain: DomainSection,
    pub bounds: Bounds,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: ThermalEntropy,
    pub weight: PowerWeight,
    pub rate: ReactionRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "default_name")]
    pub name: String,
    pub length: f64,
    pub cells: usize,
    #[serde(default = "default_permittivity")]
    pub permittivity: Permittivity,
    /// Total energy `E0` of the reference equilibrium.
    pub energy: f64,
}

fn default_name() -> String {
    "custom".into()
}

fn default_permittivity() -> Permittivity {
    Permittivity::Uniform { value: 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    /// Absolute end time; overrides `t_end_units` when set.
    pub t_end: Option<f64>,
    /// End time in units of the predicted decay time `C1 C2`.
    pub t_end_units: f64,
    pub dt_init: f64,
    pub cfl: f64,
    pub sample_every: usize,
    pub positivity_floor: Option<f64>,
    pub joule: JouleCoupling,
    pub fast_forward: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            t_end: None,
            t_end_units: 20.0,
            dt_init: d.dt_init,
            cfl: d.cfl,
            sample_every: d.sample_every,
            positivity_floor: d.positivity_floor,
            joule: d.joule,
            fast_forward: d.fast_forward,
        }
    }
}

impl SimulationSection {
    /// Solver settings for a run whose predicted rate is `rate`.
    pub fn sim_config(&self, rate: f64) -> SimConfig {
        SimConfig {
            t_end: self.t_end.unwrap_or(self.t_end_units / rate),
            dt_init: self.dt_init,
            cfl: self.cfl,
            sample_every: self.sample_every,
            positivity_floor: self.positivity_floor,
            joule: self.joule,
            fast_forward: self.fast_forward,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Equilibrium,
    /// One cosine mode per component.
    #[default]
    Perturbed,
    /// Seeded random low-frequency perturbation.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: InitialKind::Perturbed, amplitude: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub states: usize,
    pub seed: u64,
    pub margin: f64,
    pub amplitude: f64,
    /// Resolution of the battery; the domain's when unset.
    pub cells: Option<usize>,
    pub scalar_samples: usize,
    pub execution: Execution,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            states: 1000,
            seed: 0,
            margin: 1.1,
            amplitude: 0.5,
            cells: None,
            scalar_samples: 10_000,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl RunConfig {
    pub fn from_scenario(sc: &Scenario, cells: usize) -> Self {
        Self {
            model: ModelSection {
                sigma: sc.model.sigma,
                weight: sc.model.weight,
                rate: sc.model.rate,
            },
            domain: DomainSection {
                name: sc.name.clone(),
                length: sc.length,
                cells,
                permittivity: sc.permittivity,
                energy: sc.energy,
            },
            bounds: sc.bounds,
            simulation: SimulationSection::default(),
            initial: InitialSection::default(),
            verify: VerifySection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            name: self.domain.name.clone(),
            model: ModelFunctions {
                sigma: self.model.sigma,
                weight: self.model.weight,
                rate: self.model.rate,
            },
            length: self.domain.length,
            permittivity: self.domain.permittivity,
            bounds: self.bounds,
            energy: self.domain.energy,
        }
    }

    pub fn setup(&self) -> CliResult<Setup> {
        Ok(self.scenario().setup(self.domain.cells)?)
    }

    /// Checks everything that can be checked without running anything: the
    /// model hypotheses, the equilibrium band and the solver settings.
    pub fn validate(&self) -> CliResult<()> {
        let setup = self.setup()?;
        self.simulation.sim_config(setup.constants.eep.rate).validate()?;
        if !(0.0..1.0).contains(&self.initial.amplitude) {
            return Err(CliError::Invalid(format!("initial.amplitude = {} must lie in [0, 1)", self.initial.amplitude)));
        }
        if !(0.0..1.0).contains(&self.verify.amplitude) {
            return Err(CliError::Invalid(format!("verify.amplitude = {} must lie in [0, 1)", self.verify.amplitude)));
        }
        if self.verify.margin.is_nan() || self.verify.margin <= 0.0 {
            return Err(CliError::Invalid(format!("verify.margin = {} must be positive", self.verify.margin)));
        }
        if self.verify.cells.is_some_and(|c| c < 2) {
            return Err(CliError::Invalid("verify.cells must be at least 2".into()));
        }
        Ok(())
    }
}

/// Parses and validates a TOML document.
pub fn parse_config_str(text: &str, origin: &Path) -> CliResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
sigma = { family = "log", a = 1.0 }
weight = { b = 1.0, beta = 0.25 }
rate = { family = "constant", f0 = 1.0 }

[domain]
length = 1.0
cells = 64
energy = 1.0

[bounds]
c_theta = 0.5
c_u_max = 2.0
"#;

    fn parse(text: &str) -> CliResult<RunConfig> {
        parse_config_str(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.simulation, SimulationSection::default());
        assert_eq!(cfg.verify.states, 1000);
        assert_eq!(cfg.verify.margin, 1.1);
        assert_eq!(cfg.domain.permittivity, Permittivity::Uniform { value: 1.0 });
        assert_eq!(cfg.output.formats.len(), 3);
        assert_eq!(cfg.domain.name, "custom");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&format!("{MINIMAL}\n[simulation]\ncfl = 0.1\nstep = 3\n")).unwrap_err();
        assert!(err.to_string().contains("step"), "{err}");
        let err = parse(&MINIMAL.replace("f0 = 1.0", "f0 = 1.0, k1 = 2.0")).unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }), "{err}");
    }

    #[test]
    fn hypothesis_violation_surfaces_at_validation() {
        let err = parse(&MINIMAL.replace("beta = 0.25", "beta = 0.5")).unwrap_err();
        assert!(matches!(err, CliError::Core(eerds_core::Error::Hypothesis(_))), "{err}");
    }

    #[test]
    fn missing_domain_is_named() {
        let text = MINIMAL.replace("[domain]\nlength = 1.0\ncells = 64\nenergy = 1.0\n", "");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("domain"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse("[model]\nsigma = {\n").unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn scenario_round_trip() {
        let sc = eerds_core::scenario::scenario_c();
        let cfg = RunConfig::from_scenario(&sc, 32);
        assert_eq!(cfg.scenario(), sc);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }
}
