//! Run configuration file: TOML with four sections, every key optional,
//! unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cases::{ScenarioOptions, SCENARIOS};
use crate::certificates::CertificateOptions;
use crate::dynamics::{Advection, Scheme, SimConfig};
use crate::error::{Error, Result};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_VAR: &str = "AXISYM_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub nu: f64,
    pub radius: f64,
    pub half_height: f64,
    pub nr: usize,
    pub nz: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub cfl_safety: f64,
    /// Snapshot cadence in steps.
    pub record_every: usize,
    pub scheme: Scheme,
    pub advection: Advection,
    pub keep_states: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            nu: d.nu,
            radius: d.radius,
            half_height: d.half_height,
            nr: d.nr,
            nz: d.nz,
            dt: d.dt,
            horizon: d.horizon,
            cfl_safety: d.cfl_safety,
            record_every: d.record_every,
            scheme: d.scheme,
            advection: d.advection,
            keep_states: d.keep_states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub amplitude: Option<f64>,
    pub forcing: f64,
    pub small_data_margin: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = ScenarioOptions::default();
        Self {
            name: "rest".into(),
            amplitude: d.amplitude,
            forcing: d.forcing,
            small_data_margin: d.small_data_margin,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Run directory; relative paths resolve against the output root.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateSection {
    pub eps0: f64,
    pub delta: f64,
    pub s_values: Vec<f64>,
    pub c0: f64,
    pub sigma: f64,
    pub d: f64,
    pub energy_tol: f64,
}

impl Default for CertificateSection {
    fn default() -> Self {
        let d = CertificateOptions::default();
        Self {
            eps0: d.eps0,
            delta: d.delta,
            s_values: d.s_values,
            c0: d.c0,
            sigma: d.sigma,
            d: d.d,
            energy_tol: d.energy_tol,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationSection,
    pub scenario: ScenarioSection,
    pub output: OutputSection,
    pub certificates: CertificateSection,
}

impl RunConfig {
    /// Parses and validates; nothing is computed on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Artifact(format!("cannot read config {}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> Result<()> {
        if !SCENARIOS.contains(&self.scenario.name.as_str()) {
            return Err(Error::UnknownScenario {
                name: self.scenario.name.clone(),
                available: SCENARIOS.join(", "),
            });
        }
        self.sim_config().validate()?;
        self.certificate_options().validate()
    }

    pub fn sim_config(&self) -> SimConfig {
        let s = &self.simulation;
        // the interaction bound needs |v_phi|_sigma as well as the lambda exponents
        let mut exponents = self.certificates.s_values.clone();
        exponents.push(self.certificates.sigma);
        exponents.sort_by(f64::total_cmp);
        exponents.dedup();
        SimConfig {
            nu: s.nu,
            radius: s.radius,
            half_height: s.half_height,
            nr: s.nr,
            nz: s.nz,
            dt: s.dt,
            horizon: s.horizon,
            scenario: self.scenario.name.clone(),
            scenario_options: ScenarioOptions {
                amplitude: self.scenario.amplitude,
                forcing: self.scenario.forcing,
                small_data_margin: self.scenario.small_data_margin,
            },
            cfl_safety: s.cfl_safety,
            record_every: s.record_every,
            scheme: s.scheme,
            advection: s.advection,
            keep_states: s.keep_states,
            lebesgue_exponents: exponents,
        }
    }

    pub fn certificate_options(&self) -> CertificateOptions {
        let c = &self.certificates;
        CertificateOptions {
            nu: self.simulation.nu,
            advection: self.simulation.advection,
            eps0: c.eps0,
            delta: c.delta,
            s_values: c.s_values.clone(),
            c0: c.c0,
            sigma: c.sigma,
            d: c.d,
            energy_tol: c.energy_tol,
        }
    }

    /// Run directory: absolute `output.dir` as is, otherwise joined to the
    /// output root (the environment override, else the config file's directory).
    pub fn run_dir(&self, config_path: &Path) -> PathBuf {
        let dir = self.output.dir.clone().unwrap_or_else(|| PathBuf::from(&self.scenario.name));
        if dir.is_absolute() {
            return dir;
        }
        let root = match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(r) if !r.is_empty() => PathBuf::from(r),
            _ => config_path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        root.join(dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.sim_config().lebesgue_exponents, vec![4.0, 6.0, 10.0]);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::parse(
            "[simulation]\nnr = 16\nT = 0.5\nscheme = \"imex2\"\nadvection = \"centered\"\n\
             [scenario]\nname = \"vortex_ring\"\namplitude = 2.0\n[certificates]\nsigma = 5.0\n",
        )
        .unwrap();
        let sim = cfg.sim_config();
        assert_eq!((sim.nr, sim.horizon, sim.scheme, sim.advection), (16, 0.5, Scheme::Imex2, Advection::Centered));
        assert_eq!(sim.scenario_options.amplitude, Some(2.0));
        assert_eq!(sim.lebesgue_exponents, vec![4.0, 5.0, 6.0, 10.0]);
        assert_eq!(cfg.certificate_options().advection, Advection::Centered);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("[simulation]\nNx = 3\n").unwrap_err();
        assert!(err.to_string().contains("Nx"), "{err}");
        let err = RunConfig::parse("[extras]\n").unwrap_err();
        assert!(err.to_string().contains("extras"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::parse("[simulation]\ndt = -1.0\n").is_err());
        assert!(RunConfig::parse("[simulation]\nscheme = \"rk4\"\n").is_err());
        assert!(matches!(RunConfig::parse("[scenario]\nname = \"storm\"\n"), Err(Error::UnknownScenario { .. })));
        assert!(RunConfig::parse("[certificates]\ndelta = 2.0\n").is_err());
    }
}
