use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blowup::PivotConfig;
use crate::error::{Error, Result};
use crate::flowmap_maximal::AdmissibilityThresholds;
use crate::grid_spectral::GridSpec;
use crate::localization::LocalFrame;
use crate::ns_solver::SolverConfig;

/// Initial velocity of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    TaylorGreen,
    /// Divergence-free band-limited noise with modes `|m_i| ≤ max_mode`.
    Random { max_mode: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub n: usize,
    pub length: f64,
    pub viscosity: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub dealias: bool,
    pub amplitude: f64,
    pub initial: InitialKind,
    /// Optional VLF1 file replacing the generated initial field.
    pub initial_file: Option<PathBuf>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            n: 32,
            length: 2.0 * std::f64::consts::PI,
            viscosity: 1.0,
            dt: 1e-3,
            t_end: 2.25,
            snapshot_stride: 25,
            dealias: true,
            amplitude: 1.0,
            initial: InitialKind::TaylorGreen,
            initial_file: None,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            grid: GridSpec::new(self.n, self.length)?,
            viscosity: self.viscosity,
            dt: self.dt,
            t_end: self.t_end,
            dealias: self.dealias,
            snapshot_stride: self.snapshot_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PivotSection {
    pub p: f64,
    pub delta: f64,
    pub eta: f64,
    /// Midpoint of the admitted range when absent.
    pub nu: Option<f64>,
}

impl Default for PivotSection {
    fn default() -> Self {
        let d = PivotConfig::default();
        Self { p: d.p, delta: d.delta, eta: d.eta, nu: None }
    }
}

impl PivotSection {
    pub fn pivot_config(&self) -> Result<PivotConfig> {
        let mut cfg = PivotConfig::with_p(self.p, self.delta, self.eta)?;
        if let Some(nu) = self.nu {
            cfg.nu = nu;
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzSection {
    /// Derivative order of `|∇ⁿω|`.
    pub n: u32,
    pub q: f64,
    /// Threshold constants swept in the report.
    pub c_n: Vec<f64>,
}

impl Default for LorentzSection {
    fn default() -> Self {
        Self { n: 1, q: 2.0, c_n: vec![0.01, 0.1, 1.0, 10.0, 100.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationSection {
    pub center: [f64; 3],
    pub length: f64,
    pub radii: [f64; 4],
    pub sharpness: f64,
    /// Radius of the ball where harmonicity is measured.
    pub region_radius: f64,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        Self { center: [0.3, 0.2, 0.1], length: 1.5, radii: [1.1, 1.35, 1.4, 2.0], sharpness: 1.0, region_radius: 0.9 }
    }
}

impl LocalizationSection {
    pub fn frame(&self) -> Result<LocalFrame> {
        LocalFrame::new(self.center, self.length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub points: Vec<[f64; 3]>,
    /// Probe time; the last snapshot when absent.
    pub time: Option<f64>,
    /// Ratio of the geometric `ε` ladder.
    pub ladder_ratio: f64,
    /// Relative width at which bisection of `ε*` stops.
    pub tolerance: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { points: vec![[0.3, 0.2, 0.1], [1.0, -0.5, 0.7]], time: None, ladder_ratio: 2.0, tolerance: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeGiorgiSection {
    pub levels: u32,
    /// Length unit of the shrinking cylinders, centred at the localization centre.
    pub length: f64,
    /// `sup |v|` on the innermost cylinder after normalization.
    pub normalize_to: Option<f64>,
}

impl Default for DeGiorgiSection {
    fn default() -> Self {
        Self { levels: 6, length: 1.0, normalize_to: Some(0.995) }
    }
}

/// Everything one experiment needs. Missing keys take defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub solver: SolverSection,
    pub thresholds: AdmissibilityThresholds,
    pub pivot: PivotSection,
    pub lorentz: LorentzSection,
    pub localization: LocalizationSection,
    pub probes: ProbeSection,
    pub degiorgi: DeGiorgiSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: PathBuf::from("out"),
            solver: SolverSection::default(),
            thresholds: AdmissibilityThresholds::default(),
            pivot: PivotSection::default(),
            lorentz: LorentzSection::default(),
            localization: LocalizationSection::default(),
            probes: ProbeSection::default(),
            degiorgi: DeGiorgiSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(f) = &cfg.solver.initial_file {
            if f.is_relative() {
                cfg.solver.initial_file = Some(base.join(f));
            }
        }
        if let Some(f) = &cfg.solver.initial_file {
            if !f.exists() {
                return Err(Error::InvalidArgument(format!("initial file {} does not exist", f.display())));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.solver_config()?;
        self.thresholds.validate()?;
        self.pivot.pivot_config()?;
        if !(self.lorentz.q > 1.0) || self.lorentz.c_n.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::InvalidArgument("lorentz needs q > 1 and positive C_n".into()));
        }
        self.localization.frame()?;
        let r = self.localization.radii;
        if !(0.0 < r[0] && r[0] < r[1] && r[1] < r[2] && r[2] < r[3]) {
            return Err(Error::InvalidArgument(format!("cut-off radii {r:?} must increase")));
        }
        if !(self.probes.ladder_ratio > 1.0 && self.probes.tolerance > 0.0) {
            return Err(Error::InvalidArgument("probe ladder ratio must exceed 1 and tolerance be positive".into()));
        }
        if !(self.degiorgi.length > 0.0) {
            return Err(Error::InvalidArgument("degiorgi.length must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_override_defaults() {
        let cfg = ExperimentConfig::from_toml("seed = 7\nsolver.n = 16\nsolver.t_end = 0.0\nthresholds.eta0 = 0.1\n").unwrap();
        assert_eq!((cfg.seed, cfg.solver.n, cfg.solver.t_end, cfg.thresholds.eta0), (7, 16, 0.0, 0.1));
        assert_eq!(cfg.thresholds.eta1, 0.05);
        assert_eq!(cfg.pivot, PivotSection::default());
    }

    #[test]
    fn round_trip_and_rejections() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        assert!(ExperimentConfig::from_toml("solver.dt = -1.0").is_err());
        assert!(ExperimentConfig::from_toml("solver.bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("pivot.p = 2.5").is_err());
        assert!(ExperimentConfig::from_toml("solver.initial = { random = { max_mode = 3 } }").is_ok());
    }

    #[test]
    fn shipped_config_lists_the_defaults() {
        let text = include_str!("../../../../configs/taylor_green.toml");
        assert_eq!(ExperimentConfig::from_toml(text).unwrap(), ExperimentConfig::default());
    }
}
