//! Scenario configuration files.
//!
//! A config is a single JSON object with flat kebab-case keys. Command-line
//! flags use the same names and override file values.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use elastica_core::{ContinuationSettings, ElasticaParams, NewtonSettings, OrdinateKind};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    RotateArm,
    VaryArmLength,
    RotateLoad,
    VaryLoad,
    RotateClamp,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::RotateArm,
        ScenarioKind::VaryArmLength,
        ScenarioKind::RotateLoad,
        ScenarioKind::VaryLoad,
        ScenarioKind::RotateClamp,
    ];

    /// The parameter each scenario sweeps.
    pub fn sweep(self) -> OrdinateKind {
        match self {
            ScenarioKind::RotateArm => OrdinateKind::Psi,
            ScenarioKind::VaryArmLength => OrdinateKind::Epsilon,
            ScenarioKind::RotateLoad => OrdinateKind::Alpha,
            ScenarioKind::VaryLoad => OrdinateKind::LoadP,
            ScenarioKind::RotateClamp => OrdinateKind::Theta0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::RotateArm => "rotate-arm",
            ScenarioKind::VaryArmLength => "vary-arm-length",
            ScenarioKind::RotateLoad => "rotate-load",
            ScenarioKind::VaryLoad => "vary-load",
            ScenarioKind::RotateClamp => "rotate-clamp",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario `{s}`")))
    }
}

/// How a starting equilibrium is obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SeedSpec {
    /// Newton from `θ ≡ θ₀` at the context parameters.
    Straight,
    /// Straight state perturbed by `sign·delta·sin(πs/2)`, solved just
    /// above the first critical load and carried to the context load.
    Buckled { delta: f64, sign: f64 },
    /// A stored point written by an earlier run.
    File { path: PathBuf },
    /// Equilibria where a branch of `from`, swept in `via` from `start`
    /// towards `range[1]` until it leaves `range`, passes through
    /// `via = target` (modulo 2π for angles).
    Crossing {
        via: OrdinateKind,
        start: f64,
        range: [f64; 2],
        target: f64,
        from: Box<SeedSpec>,
        /// Keep only crossings with this Morse index.
        index: Option<usize>,
        /// Keep at most this many crossings, in branch order.
        limit: Option<usize>,
    },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Straight
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_sign() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum SeedObject {
    Straight,
    Buckled {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_sign")]
        sign: f64,
    },
    File {
        path: PathBuf,
    },
    Crossing {
        via: OrdinateKind,
        #[serde(default)]
        start: f64,
        range: [f64; 2],
        target: f64,
        #[serde(default)]
        from: Option<Box<SeedSpec>>,
        #[serde(default)]
        index: Option<usize>,
        #[serde(default)]
        limit: Option<usize>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Name(String),
    Object(SeedObject),
}

impl<'de> Deserialize<'de> for SeedSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        Ok(match SeedRepr::deserialize(d)? {
            SeedRepr::Name(s) => match s.as_str() {
                "straight" => SeedSpec::Straight,
                "buckled" => SeedSpec::Buckled {
                    delta: default_delta(),
                    sign: default_sign(),
                },
                _ => return Err(D::Error::custom(format!("unknown seed `{s}`"))),
            },
            SeedRepr::Object(o) => match o {
                SeedObject::Straight => SeedSpec::Straight,
                SeedObject::Buckled { delta, sign } => SeedSpec::Buckled { delta, sign },
                SeedObject::File { path } => SeedSpec::File { path },
                SeedObject::Crossing {
                    via,
                    start,
                    range,
                    target,
                    from,
                    index,
                    limit,
                } => SeedSpec::Crossing {
                    via,
                    start,
                    range,
                    target,
                    from: from.unwrap_or_default(),
                    index,
                    limit,
                },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Output file stem; defaults to the scenario name.
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: ScenarioKind,
    /// Optional; must agree with the scenario when given.
    #[serde(default)]
    pub sweep: Option<OrdinateKind>,
    #[serde(rename = "P", alias = "load", default)]
    pub load: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub psi: Option<f64>,
    #[serde(default)]
    pub theta0: Option<f64>,
    /// Interval of the swept parameter. The branch starts moving towards
    /// the second entry and stops once it leaves the interval. Angle sweeps
    /// default to `[0, 6π]`.
    #[serde(default)]
    pub range: Option<[f64; 2]>,
    /// Starting value of the swept parameter; defaults to `range[0]`.
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default = "default_mesh")]
    pub mesh: usize,
    #[serde(default = "default_ds_init")]
    pub ds_init: f64,
    #[serde(default = "default_ds_min")]
    pub ds_min: f64,
    #[serde(default = "default_ds_max")]
    pub ds_max: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tol_residual")]
    pub tol_residual: f64,
    #[serde(default = "default_fold_tol")]
    pub fold_tol: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<SeedSpec>,
    /// Swept-parameter values at which centerlines are sampled and drawn.
    #[serde(default)]
    pub labels: Vec<f64>,
    /// Check that branch states repeat after 2π in the swept angle.
    #[serde(default)]
    pub periodicity: bool,
    /// Grid size for counting coexisting equilibria.
    #[serde(default = "default_coexistence_samples")]
    pub coexistence_samples: usize,
    #[serde(default = "default_true")]
    pub svg: bool,
}

fn default_mesh() -> usize {
    201
}
fn default_ds_init() -> f64 {
    0.01
}
fn default_ds_min() -> f64 {
    1e-5
}
fn default_ds_max() -> f64 {
    0.05
}
fn default_max_steps() -> usize {
    20000
}
fn default_tol_residual() -> f64 {
    1e-10
}
fn default_fold_tol() -> f64 {
    1e-8
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_seeds() -> Vec<SeedSpec> {
    vec![SeedSpec::Straight]
}
fn default_coexistence_samples() -> usize {
    181
}
fn default_true() -> bool {
    true
}

/// Values given on the command line for `run`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub mesh: Option<usize>,
    pub ds_init: Option<f64>,
    pub no_svg: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(mesh) = o.mesh {
            self.mesh = mesh;
        }
        if let Some(ds) = o.ds_init {
            self.ds_init = ds;
        }
        if o.no_svg {
            self.svg = false;
        }
        self.validate()
    }

    pub fn sweep_kind(&self) -> OrdinateKind {
        self.scenario.sweep()
    }

    pub fn stem(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.scenario.name().to_string())
    }

    pub fn sweep_range(&self) -> [f64; 2] {
        match self.range {
            Some(r) => r,
            None => [0.0, 6.0 * PI],
        }
    }

    pub fn sweep_start(&self) -> f64 {
        self.start.unwrap_or(self.sweep_range()[0])
    }

    fn fixed_value(&self, kind: OrdinateKind) -> Option<f64> {
        match kind {
            OrdinateKind::LoadP => self.load,
            OrdinateKind::Alpha => self.alpha,
            OrdinateKind::Epsilon => self.epsilon,
            OrdinateKind::Psi => self.psi,
            OrdinateKind::Theta0 => self.theta0,
        }
    }

    /// Fixed parameters with the swept entry at its starting value.
    /// Unset angles and the arm length default to zero.
    pub fn base_params(&self) -> ElasticaParams {
        let mut p = ElasticaParams::new(
            self.load.unwrap_or(0.0),
            self.alpha.unwrap_or(0.0),
            self.epsilon.unwrap_or(0.0),
            self.psi.unwrap_or(0.0),
            self.theta0.unwrap_or(0.0),
        );
        p.set(self.sweep_kind(), self.sweep_start());
        p
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings {
            tol_residual: self.tol_residual,
            ..NewtonSettings::default()
        }
    }

    pub fn continuation(&self) -> ContinuationSettings {
        let mut s = ContinuationSettings::new(self.sweep_kind(), self.sweep_range());
        self.tune(&mut s);
        s
    }

    /// Applies the step and tolerance settings to `s`.
    pub fn tune(&self, s: &mut ContinuationSettings) {
        s.ds_init = self.ds_init;
        s.ds_min = self.ds_min;
        s.ds_max = self.ds_max;
        s.max_steps = self.max_steps;
        s.corrector.tol_residual = self.tol_residual;
        s.fold_tol = self.fold_tol;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let kind = self.sweep_kind();
        if let Some(s) = self.sweep {
            if s != kind {
                return Err(CliError::Config(format!(
                    "scenario {} sweeps {}, not {s}",
                    self.scenario, kind
                )));
            }
        }
        if self.fixed_value(kind).is_some() {
            return Err(CliError::Config(format!(
                "{kind} is the sweep parameter of {}; set it through `range`",
                self.scenario
            )));
        }
        if kind != OrdinateKind::LoadP && self.load.is_none() {
            return Err(CliError::Config("missing load `P`".into()));
        }
        if self.range.is_none() && !kind.is_angle() {
            return Err(CliError::Config(format!("{kind} sweeps need a `range`")));
        }
        let [a, b] = self.sweep_range();
        let x0 = self.sweep_start();
        if !(a.min(b) <= x0 && x0 <= a.max(b)) {
            return Err(CliError::Config(format!(
                "start {x0} lies outside the range"
            )));
        }
        if self.mesh < 3 {
            return Err(CliError::Config("mesh needs at least 3 nodes".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("no seeds given".into()));
        }
        if self.coexistence_samples < 2 {
            return Err(CliError::Config(
                "coexistence-samples must be at least 2".into(),
            ));
        }
        if self.periodicity && !kind.is_angle() {
            return Err(CliError::Config(format!(
                "periodicity checks need an angle sweep, not {kind}"
            )));
        }
        self.base_params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.continuation()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        for seed in &self.seeds {
            check_seed(seed)?;
        }
        Ok(())
    }
}

fn check_seed(seed: &SeedSpec) -> Result<(), CliError> {
    match seed {
        SeedSpec::Straight | SeedSpec::File { .. } => Ok(()),
        SeedSpec::Buckled { delta, sign } => {
            if !(delta.is_finite() && *delta > 0.0) || !(*sign == 1.0 || *sign == -1.0) {
                return Err(CliError::Config(
                    "buckled seed needs delta > 0 and sign ±1".into(),
                ));
            }
            Ok(())
        }
        SeedSpec::Crossing {
            start,
            range,
            target,
            from,
            ..
        } => {
            if ![*start, range[0], range[1], *target]
                .iter()
                .all(|v| v.is_finite())
                || range[0] == range[1]
            {
                return Err(CliError::Config(
                    "crossing seed needs a finite, non-empty range".into(),
                ));
            }
            check_seed(from)
        }
    }
}
