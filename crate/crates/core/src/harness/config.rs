//! Experiment configuration: which problem, which κ_s values, how many
//! seeds, and solver settings layered over per-experiment presets.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{BpdnConfig, FhConfig, MatCompConfig};
use crate::prox::ProxMode;
use crate::solver::{HessianKind, SolverParams, SIGMA_MIN_INEXACT_ORACLE};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IR2N_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "ir2n-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Bpdn,
    Matcomp,
    Fh,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Bpdn, Experiment::Matcomp, Experiment::Fh];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Bpdn => "bpdn",
            Experiment::Matcomp => "matcomp",
            Experiment::Fh => "fh",
        }
    }

    pub fn default_epsilon(self) -> f64 {
        match self {
            Experiment::Bpdn => 1e-6,
            Experiment::Matcomp => 1e-3,
            Experiment::Fh => 1e-5,
        }
    }

    /// The two least-squares problems have a constant Hessian that is cheap
    /// to form; the ODE fit uses a quasi-Newton model.
    pub fn default_hessian(self) -> HessianChoice {
        match self {
            Experiment::Bpdn | Experiment::Matcomp => HessianChoice::Exact,
            Experiment::Fh => HessianChoice::Lsr1,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}' (expected bpdn, matcomp or fh)")))
    }
}

/// A κ_s value, or the sentinel for exact proximal evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaSetting {
    Exact,
    Value(f64),
}

impl KappaSetting {
    pub fn default_grid() -> Vec<KappaSetting> {
        let mut grid: Vec<KappaSetting> =
            [1e-7, 1e-5, 1e-3, 1e-2, 1e-1, 0.5, 0.9, 0.99].into_iter().map(KappaSetting::Value).collect();
        grid.push(KappaSetting::Exact);
        grid
    }

    pub fn mode(self) -> ProxMode {
        match self {
            KappaSetting::Exact => ProxMode::Exact,
            KappaSetting::Value(_) => ProxMode::Inexact,
        }
    }

    /// κ_s handed to the solver; ignored in exact mode.
    pub fn value(self) -> f64 {
        match self {
            KappaSetting::Exact => 1.0,
            KappaSetting::Value(v) => v,
        }
    }

    /// File-name friendly label such as `1e-7` or `exact`.
    pub fn label(self) -> String {
        match self {
            KappaSetting::Exact => "exact".into(),
            KappaSetting::Value(v) => format!("{v:e}"),
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            KappaSetting::Value(v) if !(v > 0.0 && v <= 1.0) => {
                Err(Error::InvalidParameter(format!("kappa_s must lie in (0, 1], got {v}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KappaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for KappaSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("exact") {
            return Ok(KappaSetting::Exact);
        }
        let v: f64 = s.parse().map_err(|_| Error::Parse(format!("bad kappa_s value '{s}'")))?;
        let k = KappaSetting::Value(v);
        k.validate()?;
        Ok(k)
    }
}

impl Serialize for KappaSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KappaSetting::Exact => s.serialize_str("exact"),
            KappaSetting::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for KappaSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let k = match Raw::deserialize(d)? {
            Raw::Num(v) => KappaSetting::Value(v),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom)?,
        };
        k.validate().map_err(serde::de::Error::custom)?;
        Ok(k)
    }
}

/// Hessian model requested for an experiment. `Exact` is the constant
/// Hessian of a least-squares objective and is rejected for the ODE fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianChoice {
    Zero,
    Diag,
    Lsr1,
    Exact,
}

impl HessianChoice {
    pub fn kind(self) -> Option<HessianKind> {
        match self {
            HessianChoice::Zero => Some(HessianKind::Zero),
            HessianChoice::Diag => Some(HessianKind::SpectralDiagonal),
            HessianChoice::Lsr1 => Some(HessianKind::lsr1()),
            HessianChoice::Exact => None,
        }
    }
}

impl FromStr for HessianChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(HessianChoice::Zero),
            "diag" => Ok(HessianChoice::Diag),
            "lsr1" => Ok(HessianChoice::Lsr1),
            "exact" => Ok(HessianChoice::Exact),
            _ => Err(Error::Parse(format!("unknown hessian '{s}' (expected zero, diag, lsr1 or exact)"))),
        }
    }
}

/// Solver settings that replace the experiment preset when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub sigma_min: Option<f64>,
    pub sigma0: Option<f64>,
    pub max_iter: Option<usize>,
    pub kappa_in: Option<f64>,
    pub inner_max_iter: Option<usize>,
    pub prox_tol: Option<f64>,
    pub prox_max_iter: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, p: &mut SolverParams) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut p.theta1, self.theta1);
        set(&mut p.theta2, self.theta2);
        set(&mut p.gamma1, self.gamma1);
        set(&mut p.gamma2, self.gamma2);
        set(&mut p.gamma3, self.gamma3);
        set(&mut p.eta1, self.eta1);
        set(&mut p.eta2, self.eta2);
        set(&mut p.sigma_min, self.sigma_min);
        set(&mut p.sigma0, self.sigma0);
        set(&mut p.inner.kappa_in, self.kappa_in);
        set(&mut p.prox_tol, self.prox_tol);
        if let Some(v) = self.max_iter {
            p.max_iter = v;
        }
        if let Some(v) = self.inner_max_iter {
            p.inner.max_iter = v;
        }
        if let Some(v) = self.prox_max_iter {
            p.prox_max_iter = v;
        }
    }
}

/// Reset cap used by the experiment presets. The models of all three
/// problems are far from isotropic, so a cap of a few units would replace
/// nearly every step by the Cauchy step.
pub const PRESET_THETA2: f64 = 1.0 / f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "KappaSetting::default_grid")]
    pub kappa_s: Vec<KappaSetting>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// First seed; runs use `first_seed .. first_seed + seeds`.
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default)]
    pub solver: SolverOverrides,
    pub hessian: Option<HessianChoice>,
    pub epsilon: Option<f64>,
    /// Length of the accuracy schedule; enables inexact objective and
    /// gradient evaluations (fh only).
    pub prec_n: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Run seeds and κ_s values concurrently.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    #[serde(default)]
    pub bpdn: BpdnConfig,
    #[serde(default)]
    pub matcomp: MatCompConfig,
    #[serde(default)]
    pub fh: FhConfig,
}

fn default_seeds() -> usize {
    10
}

fn default_parallel() -> bool {
    true
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            kappa_s: KappaSetting::default_grid(),
            seeds: default_seeds(),
            first_seed: 0,
            solver: SolverOverrides::default(),
            hessian: None,
            epsilon: None,
            prec_n: None,
            out_dir: None,
            parallel: true,
            bpdn: BpdnConfig::default(),
            matcomp: MatCompConfig::default(),
            fh: FhConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seeds must be at least 1".into()));
        }
        if self.kappa_s.is_empty() {
            return Err(Error::InvalidParameter("kappa_s list is empty".into()));
        }
        for k in &self.kappa_s {
            k.validate()?;
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("epsilon must be positive, got {e}")));
            }
        }
        match self.prec_n {
            Some(0) => return Err(Error::InvalidParameter("prec_n must be at least 1".into())),
            Some(_) if self.experiment != Experiment::Fh => {
                return Err(Error::InvalidParameter("the accuracy schedule only applies to fh".into()))
            }
            _ => {}
        }
        if self.experiment == Experiment::Fh && self.hessian() == HessianChoice::Exact {
            return Err(Error::InvalidParameter("fh has no constant Hessian; use zero, diag or lsr1".into()));
        }
        // surfaces bad overrides before any run starts
        self.solver_params(KappaSetting::Exact, 0).validate()
    }

    pub fn hessian(&self) -> HessianChoice {
        self.hessian.unwrap_or(self.experiment.default_hessian())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.experiment.default_epsilon())
    }

    pub fn seed_range(&self) -> std::ops::Range<u64> {
        self.first_seed..self.first_seed + self.seeds as u64
    }

    /// Preset, then overrides, then the run-specific mode, κ_s and seed.
    pub fn solver_params(&self, kappa: KappaSetting, seed: u64) -> SolverParams {
        let mut p = SolverParams { theta2: PRESET_THETA2, epsilon: self.epsilon(), seed, ..Default::default() };
        if self.prec_n.is_some() {
            p.sigma_min = SIGMA_MIN_INEXACT_ORACLE;
        }
        self.solver.apply(&mut p);
        p.sigma0 = p.sigma0.max(p.sigma_min);
        p.mode = kappa.mode();
        p.kappa_s = kappa.value();
        p
    }

    /// Explicit setting, else `$IR2N_OUT_DIR`, else `./ir2n-out`.
    pub fn resolve_out_dir(&self) -> PathBuf {
        resolve_out_dir(self.out_dir.as_deref())
    }
}

pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_parsing() {
        assert_eq!("exact".parse::<KappaSetting>().unwrap(), KappaSetting::Exact);
        assert_eq!("1e-7".parse::<KappaSetting>().unwrap(), KappaSetting::Value(1e-7));
        assert!("0".parse::<KappaSetting>().is_err());
        assert!("1.5".parse::<KappaSetting>().is_err());
        assert!("abc".parse::<KappaSetting>().is_err());
        assert_eq!(KappaSetting::Value(1e-7).label(), "1e-7");
    }

    #[test]
    fn default_grid_ends_with_exact() {
        let g = KappaSetting::default_grid();
        assert_eq!(g.len(), 9);
        assert_eq!(g[8], KappaSetting::Exact);
        assert_eq!(g[0], KappaSetting::Value(1e-7));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            experiment = "fh"
            kappa_s = [1e-7, "exact"]
            seeds = 2
            prec_n = 100
            [solver]
            max_iter = 50
            [fh]
            noise_scale = 0.05
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.kappa_s, vec![KappaSetting::Value(1e-7), KappaSetting::Exact]);
        assert_eq!(cfg.fh.noise_scale, 0.05);
        let p = cfg.solver_params(KappaSetting::Value(1e-7), 3);
        assert_eq!(p.max_iter, 50);
        assert_eq!(p.sigma_min, SIGMA_MIN_INEXACT_ORACLE);
        assert_eq!(p.mode, ProxMode::Inexact);
        assert_eq!(p.epsilon, 1e-5);
        let back = ExperimentConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_inconsistent_settings() {
        assert!(ExperimentConfig::from_toml_str("experiment = \"bpdn\"\nprec_n = 10").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"fh\"\nhessian = \"exact\"").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"bpdn\"\nseeds = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"bpdn\"\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("experiment = \"nosuch\"").is_err());
    }

    #[test]
    fn explicit_out_dir_wins() {
        let mut cfg = ExperimentConfig::new(Experiment::Bpdn);
        cfg.out_dir = Some("here".into());
        assert_eq!(cfg.resolve_out_dir(), PathBuf::from("here"));
    }
}
