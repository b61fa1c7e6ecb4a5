//! Run configuration: TOML file with one section per module, then flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use palatini_core::algebra::AlgebraKind;
use serde::Deserialize;

use crate::io::parse_algebra;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    YmEvolve,
    PalatiniEvolve,
    PcaAnalyze,
    CheckInvariants,
    LambdaSweep,
    ReductionReport,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::YmEvolve,
        Scenario::PalatiniEvolve,
        Scenario::PcaAnalyze,
        Scenario::CheckInvariants,
        Scenario::LambdaSweep,
        Scenario::ReductionReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::YmEvolve => "ym-evolve",
            Scenario::PalatiniEvolve => "palatini-evolve",
            Scenario::PcaAnalyze => "pca-analyze",
            Scenario::CheckInvariants => "check-invariants",
            Scenario::LambdaSweep => "lambda-sweep",
            Scenario::ReductionReport => "reduction-report",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config { field: "scenario".into(), message: format!("unknown scenario `{s}`") })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub algebra: AlgebraSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub kind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub d: Option<usize>,
    pub sites: Option<usize>,
    pub h: Option<f64>,
    pub n_t: Option<usize>,
    pub dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub lambdas: Option<Vec<f64>>,
    pub steps: Option<usize>,
    pub step_dt: Option<f64>,
    pub amplitude: Option<f64>,
    pub perturbation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub check: Option<f64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub algebra: Option<String>,
    pub lambdas: Option<Vec<f64>>,
    pub steps: Option<usize>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub algebra: AlgebraKind,
    pub d: usize,
    pub sites: usize,
    pub h: f64,
    pub n_t: usize,
    pub dt: f64,
    pub lambdas: Vec<f64>,
    pub steps: usize,
    pub step_dt: f64,
    pub amplitude: f64,
    pub perturbation: f64,
    pub seed: u64,
    pub tol: f64,
    pub out: PathBuf,
}

struct Defaults {
    algebra: AlgebraKind,
    d: usize,
    sites: usize,
    h: f64,
    n_t: usize,
    dt: f64,
    tol: f64,
    amplitude: f64,
}

fn defaults(s: Scenario) -> Defaults {
    let base = Defaults { algebra: AlgebraKind::Su2, d: 1, sites: 8, h: 0.25, n_t: 8, dt: 0.05, tol: 1e-6, amplitude: 0.5 };
    match s {
        Scenario::YmEvolve => Defaults { d: 2, sites: 4, h: 0.5, amplitude: 0.2, ..base },
        Scenario::PalatiniEvolve => Defaults { algebra: AlgebraKind::Lorentz(2), d: 2, sites: 3, h: 0.5, tol: 1e-10, ..base },
        Scenario::PcaAnalyze => Defaults { tol: 1e-10, ..base },
        Scenario::CheckInvariants => base,
        // tolerance on the fitted slope
        Scenario::LambdaSweep => Defaults { d: 2, sites: 6, h: 0.4, dt: 0.02, tol: 0.2, amplitude: 0.1, ..base },
        Scenario::ReductionReport => Defaults { algebra: AlgebraKind::Abelian(1), d: 2, sites: 4, h: 0.5, tol: 1e-8, ..base },
    }
}

fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), message: message.into() }
}

pub fn parse_file_config(text: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let field = msg.split('`').nth(1).unwrap_or("config").to_string();
        CliError::Config { field, message: msg }
    })
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_file_config(&text)
}

/// Merge file and flags for `scenario`, then validate.
pub fn resolve(scenario: Scenario, file: FileConfig, over: Overrides) -> Result<RunConfig, CliError> {
    if let Some(s) = &file.scenario {
        let named: Scenario = s.parse()?;
        if named != scenario {
            return Err(config_err("scenario", format!("config is for `{named}`, command is `{scenario}`")));
        }
    }
    let def = defaults(scenario);
    let algebra = match over.algebra.or(file.algebra.kind) {
        Some(s) => parse_algebra(&s).map_err(|m| config_err("algebra.kind", m))?,
        None => def.algebra,
    };
    let seed = over.seed.or(file.seed).ok_or_else(|| config_err("seed", "a seed is required (config `seed` or --seed)"))?;
    let cfg = RunConfig {
        scenario,
        algebra,
        d: file.mesh.d.unwrap_or(def.d),
        sites: file.mesh.sites.unwrap_or(def.sites),
        h: file.mesh.h.unwrap_or(def.h),
        n_t: file.mesh.n_t.unwrap_or(def.n_t),
        dt: file.mesh.dt.unwrap_or(def.dt),
        lambdas: over.lambdas.or(file.run.lambdas).unwrap_or_else(|| vec![1.0, 0.1, 0.01]),
        steps: over.steps.or(file.run.steps).unwrap_or(100),
        step_dt: file.run.step_dt.unwrap_or(0.01),
        amplitude: file.run.amplitude.unwrap_or(def.amplitude),
        perturbation: file.run.perturbation.unwrap_or(0.0),
        seed,
        tol: over.tol.or(file.tolerances.check).unwrap_or(def.tol),
        out: over.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if !(1..=3).contains(&c.d) {
        return Err(config_err("mesh.d", "spatial dimension must be 1, 2 or 3"));
    }
    if c.sites < 3 {
        return Err(config_err("mesh.sites", "need at least 3 sites per axis"));
    }
    if !(c.h > 0.0) {
        return Err(config_err("mesh.h", "spacing must be positive"));
    }
    if c.n_t < 1 {
        return Err(config_err("mesh.n_t", "need at least one time slice"));
    }
    if !(c.dt > 0.0) {
        return Err(config_err("mesh.dt", "time step must be positive"));
    }
    if let Some(l) = c.lambdas.iter().find(|l| !(**l >= 0.0)) {
        return Err(config_err("run.lambdas", format!("coupling must be non-negative, got {l}")));
    }
    if c.scenario == Scenario::LambdaSweep && (c.lambdas.len() < 2 || c.lambdas.contains(&0.0)) {
        return Err(config_err("run.lambdas", "a sweep needs at least two positive couplings"));
    }
    if !(c.step_dt > 0.0) {
        return Err(config_err("run.step_dt", "time step must be positive"));
    }
    if !(c.amplitude >= 0.0) {
        return Err(config_err("run.amplitude", "amplitude must be non-negative"));
    }
    if !(c.perturbation >= 0.0) {
        return Err(config_err("run.perturbation", "perturbation must be non-negative"));
    }
    if !(c.tol > 0.0) {
        return Err(config_err("tolerances.check", "tolerance must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_name_the_field() {
        let e = parse_file_config("seed = 1\n[mesh]\nsitez = 4\n").unwrap_err();
        match e {
            CliError::Config { field, .. } => assert_eq!(field, "sitez"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_override_file_and_seed_is_required() {
        let file = parse_file_config("seed = 1\n[tolerances]\ncheck = 1e-3\n[algebra]\nkind = \"abelian:2\"\n").unwrap();
        let over = Overrides { seed: Some(9), tol: Some(1e-4), ..Default::default() };
        let c = resolve(Scenario::CheckInvariants, file, over).unwrap();
        assert_eq!((c.seed, c.tol, c.algebra), (9, 1e-4, AlgebraKind::Abelian(2)));

        let e = resolve(Scenario::CheckInvariants, FileConfig::default(), Overrides::default()).unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "seed"));
    }

    #[test]
    fn rejects_bad_values() {
        let over = Overrides { seed: Some(1), lambdas: Some(vec![1.0, -0.1]), ..Default::default() };
        let e = resolve(Scenario::LambdaSweep, FileConfig::default(), over).unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "run.lambdas"));
        let file = parse_file_config("scenario = \"pca-analyze\"\nseed = 2\n").unwrap();
        assert!(resolve(Scenario::YmEvolve, file, Overrides::default()).is_err());
        let file = parse_file_config("seed = 2\n[mesh]\nh = -1.0\n").unwrap();
        let e = resolve(Scenario::YmEvolve, file, Overrides::default()).unwrap_err();
        assert!(matches!(e, CliError::Config { ref field, .. } if field == "mesh.h"));
    }
}
