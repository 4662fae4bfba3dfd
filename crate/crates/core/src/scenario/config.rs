//! Scenario files: physical blocks shared by every run plus a list of
//! `[[run]]` entries, each naming a pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bath::{BathKind, BathSpec, OscillatorSpec, ThermalSpec};
use crate::decoherence::Regime;
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::response::{DriveSpec, MomentOptions};
use crate::wigner::{equilibrium_covariance, CatSpec, GridSpec, PhaseGaussian, COVERAGE_SIGMAS, DEFAULT_POINTS};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorBlock {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub spring_constant: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for OscillatorBlock {
    fn default() -> Self {
        Self { mass: 1.0, spring_constant: 1.0, hbar: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    pub kind: BathKind,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Defaults to the oscillator mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalBlock {
    pub kt: f64,
    #[serde(default)]
    pub low_temperature_override: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_factor: Option<f64>,
}

/// Explicit phase-space grid; omitted axes follow the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_half: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_half: Option<f64>,
    #[serde(default = "default_points")]
    pub nq: usize,
    #[serde(default = "default_points")]
    pub np: usize,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { q_half: None, p_half: None, nq: DEFAULT_POINTS, np: DEFAULT_POINTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Record (and dump, if enabled) every n-th step of grid evolutions.
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub dump_grids: bool,
    /// Emit a gnuplot script next to the tables.
    #[serde(default)]
    pub plot_script: bool,
}

/// Initial Wigner function of a grid run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Cat {
        d: f64,
        sigma: f64,
        #[serde(default)]
        kick_variance: f64,
    },
    /// Minimal-uncertainty packet.
    Packet {
        #[serde(default)]
        q0: f64,
        #[serde(default)]
        p0: f64,
        sigma: f64,
    },
    Gaussian { mean: [f64; 2], cov: Mat2 },
    Equilibrium,
}

impl InitialState {
    /// Mean and covariance ranges that the grid must cover.
    fn extent(&self, osc: &OscillatorSpec, th: &ThermalSpec) -> Result<(f64, f64)> {
        let s = COVERAGE_SIGMAS;
        let cover = |g: &PhaseGaussian| (g.mean[0].abs() + s * g.cov[0][0].sqrt(), g.mean[1].abs() + s * g.cov[1][1].sqrt());
        Ok(match *self {
            InitialState::Cat { d, sigma, kick_variance } => cover(&CatSpec::new(d, sigma).packet(1.0, osc.hbar, kick_variance)),
            InitialState::Packet { q0, p0, sigma } => cover(&PhaseGaussian::minimal(q0, p0, sigma, osc.hbar)),
            InitialState::Gaussian { mean, cov } => cover(&PhaseGaussian { mean, cov }),
            InitialState::Equilibrium => {
                let c = equilibrium_covariance(osc, th)?;
                (s * c[0][0].sqrt(), s * c[1][1].sqrt())
            }
        })
    }
}

fn default_lambdas() -> Vec<i32> {
    vec![-1, 0, 1]
}

fn default_eq_tolerance() -> f64 {
    1e-4
}

fn default_decohere_tolerance() -> f64 {
    0.05
}

fn default_samples() -> usize {
    10
}

fn default_paths() -> usize {
    100_000
}

fn default_z_max() -> f64 {
    3.0
}

fn default_points_x() -> usize {
    2049
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Evolver {
    /// Constant-coefficient master (`lambda = 0`) or pre-master (`+-1`) equation.
    #[default]
    Lambda,
    /// Exact equation with time-dependent coefficients.
    Hpz,
    /// Gaussian transition kernel applied to the initial grid.
    Kernel,
}

/// One pipeline invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunSpec {
    /// Evolve a grid and tabulate its moments.
    Evolve {
        name: String,
        #[serde(default)]
        evolver: Evolver,
        #[serde(default)]
        lambda: i32,
        initial: InitialState,
        t_final: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        /// Fail the run if the uncertainty detector fires.
        #[serde(default)]
        require_physical: bool,
        /// Require the detector to fire.
        #[serde(default)]
        expect_violation: bool,
    },
    /// Evolve the equilibrium state under each `lambda` and measure its drift.
    EquilibriumCheck {
        name: String,
        #[serde(default = "default_lambdas")]
        lambdas: Vec<i32>,
        t_final: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default = "default_eq_tolerance")]
        tolerance: f64,
    },
    /// Cat-state attenuation, simulated and closed form.
    Decohere {
        name: String,
        regime: Regime,
        cat: CatSpec,
        times: Vec<f64>,
        #[serde(default = "default_decohere_tolerance")]
        tolerance: f64,
        /// Exponent imposed on the short-time fit; defaults to the regime's law.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fit_exponent: Option<f64>,
        #[serde(default = "default_points_x")]
        points: usize,
    },
    /// Coordinate pre-master grid moments against a classical Langevin
    /// Monte Carlo.
    KramersCompare {
        name: String,
        initial: InitialState,
        t_final: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_paths")]
        paths: usize,
        #[serde(default = "default_z_max")]
        z_max: f64,
    },
    /// Tabulate the time-dependent master-equation coefficients.
    Coefficients {
        name: String,
        t_final: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
    },
}

impl RunSpec {
    pub fn name(&self) -> &str {
        match self {
            RunSpec::Evolve { name, .. }
            | RunSpec::EquilibriumCheck { name, .. }
            | RunSpec::Decohere { name, .. }
            | RunSpec::KramersCompare { name, .. }
            | RunSpec::Coefficients { name, .. } => name,
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            RunSpec::Evolve { .. } => "evolve",
            RunSpec::EquilibriumCheck { .. } => "equilibrium-check",
            RunSpec::Decohere { .. } => "decohere",
            RunSpec::KramersCompare { .. } => "kramers-compare",
            RunSpec::Coefficients { .. } => "coefficients",
        }
    }
}

/// A complete scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oscillator: OscillatorBlock,
    pub bath: BathBlock,
    pub thermal: ThermalBlock,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, rename = "run")]
    pub runs: Vec<RunSpec>,
}

/// Physical parameters resolved from the blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub osc: OscillatorSpec,
    pub bath: BathSpec,
    pub th: ThermalSpec,
    pub moments: MomentOptions,
    pub drive: DriveSpec,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_value(toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parse after applying `key.path=value` overrides to the raw table.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    fn from_value(value: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn physics(&self) -> Physics {
        let o = self.oscillator;
        let osc = OscillatorSpec::new(o.mass, o.spring_constant, o.hbar);
        let b = self.bath;
        let mass = b.mass.unwrap_or(o.mass);
        let bath = match b.kind {
            BathKind::Ohmic => BathSpec::ohmic(b.gamma, mass),
            BathKind::SingleRelaxationTime => BathSpec::single_relaxation_time(b.gamma, b.tau.unwrap_or(0.0), mass),
        };
        let mut moments = MomentOptions {
            low_temperature_override: self.thermal.low_temperature_override,
            ..MomentOptions::default()
        };
        if let Some(c) = self.thermal.cutoff_factor {
            moments.cutoff_factor = c;
        }
        Physics {
            osc,
            bath,
            th: ThermalSpec::new(self.thermal.kt),
            moments,
            drive: self.drive.clone(),
        }
    }

    /// Grid for an initial state: explicit extents where given, otherwise
    /// enough to hold the state and, for a confining potential, the
    /// equilibrium spread.
    pub fn grid_for(&self, initial: &InitialState) -> Result<GridSpec> {
        let ph = self.physics();
        let (mut q, mut p) = initial.extent(&ph.osc, &ph.th)?;
        if ph.osc.spring_constant > 0.0 {
            let (qe, pe) = InitialState::Equilibrium.extent(&ph.osc, &ph.th)?;
            q = q.max(qe);
            p = p.max(pe);
        }
        GridSpec::symmetric(self.grid.q_half.unwrap_or(q), self.grid.p_half.unwrap_or(p), self.grid.nq, self.grid.np)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        let ph = self.physics();
        ph.osc.validate().map_err(cfg_err)?;
        ph.bath.validate().map_err(cfg_err)?;
        ph.th.validate().map_err(cfg_err)?;
        ph.drive.validate().map_err(cfg_err)?;
        if self.bath.kind == BathKind::SingleRelaxationTime && self.bath.tau.is_none() {
            return Err(Error::Config("bath.tau is required for the single-relaxation-time bath".into()));
        }
        let mut names = std::collections::HashSet::new();
        for run in &self.runs {
            let name = run.name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(Error::Config(format!("run name {name:?} must be non-empty [A-Za-z0-9_-]")));
            }
            if !names.insert(name.to_string()) {
                return Err(Error::Config(format!("duplicate run name {name:?}")));
            }
            validate_run(run, &ph).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("run {name}: {m}")),
                other => Error::Config(format!("run {name}: {other}")),
            })?;
        }
        Ok(())
    }
}

fn check_time(what: &str, t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be > 0, got {t}")))
    }
}

fn check_lambda(l: i32) -> Result<()> {
    if (-1..=1).contains(&l) {
        Ok(())
    } else {
        Err(Error::Config(format!("lambda must be -1, 0 or 1, got {l}")))
    }
}

fn check_initial(initial: &InitialState, hbar: f64) -> Result<()> {
    match *initial {
        InitialState::Cat { d, sigma, kick_variance } => {
            CatSpec::new(d, sigma).validate()?;
            if !(kick_variance >= 0.0) {
                return Err(Error::Config("kick_variance must be >= 0".into()));
            }
        }
        InitialState::Packet { sigma, .. } => check_time("packet sigma", sigma)?,
        InitialState::Gaussian { mean, cov } => {
            let g = PhaseGaussian { mean, cov };
            g.validate()?;
            let d = crate::linalg::det(&cov);
            if d < 0.25 * hbar * hbar * (1.0 - 1e-12) {
                return Err(Error::Config(format!("gaussian covariance determinant {d} is below hbar^2/4")));
            }
        }
        InitialState::Equilibrium => {}
    }
    Ok(())
}

fn validate_run(run: &RunSpec, ph: &Physics) -> Result<()> {
    match run {
        RunSpec::Evolve { lambda, initial, t_final, dt, require_physical, expect_violation, evolver, .. } => {
            check_lambda(*lambda)?;
            check_time("t_final", *t_final)?;
            if let Some(dt) = dt {
                check_time("dt", *dt)?;
            }
            check_initial(initial, ph.osc.hbar)?;
            if *require_physical && *expect_violation {
                return Err(Error::Config("require_physical and expect_violation are exclusive".into()));
            }
            if *evolver == Evolver::Kernel && ph.drive != DriveSpec::None {
                return Err(Error::Config("the kernel evolver does not take a drive".into()));
            }
        }
        RunSpec::EquilibriumCheck { lambdas, t_final, dt, tolerance, .. } => {
            if lambdas.is_empty() {
                return Err(Error::Config("lambdas must not be empty".into()));
            }
            for l in lambdas {
                check_lambda(*l)?;
            }
            check_time("t_final", *t_final)?;
            if let Some(dt) = dt {
                check_time("dt", *dt)?;
            }
            check_time("tolerance", *tolerance)?;
            if ph.osc.spring_constant <= 0.0 {
                return Err(Error::Config("equilibrium-check needs a confining potential".into()));
            }
        }
        RunSpec::Decohere { regime, cat, times, tolerance, fit_exponent, points, .. } => {
            cat.validate()?;
            if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("times must be non-empty, ascending and >= 0".into()));
            }
            check_time("tolerance", *tolerance)?;
            if let Some(n) = fit_exponent {
                check_time("fit_exponent", *n)?;
            }
            if *points < 64 {
                return Err(Error::Config("points must be at least 64".into()));
            }
            if *regime == Regime::Entangled && ph.osc.spring_constant != 0.0 {
                return Err(Error::Config("the entangled regime needs spring_constant = 0".into()));
            }
        }
        RunSpec::KramersCompare { initial, t_final, dt, samples, paths, z_max, .. } => {
            if matches!(ph.drive, DriveSpec::Deterministic { .. } | DriveSpec::CorrelatedRandom { .. }) {
                return Err(Error::Config("kramers-compare takes no drive or a delta-correlated one".into()));
            }
            check_initial(initial, ph.osc.hbar)?;
            if matches!(initial, InitialState::Cat { .. }) {
                return Err(Error::Config("kramers-compare needs a Gaussian initial state".into()));
            }
            check_time("t_final", *t_final)?;
            if let Some(dt) = dt {
                check_time("dt", *dt)?;
            }
            if *samples == 0 || *paths < 2 {
                return Err(Error::Config("samples must be >= 1 and paths >= 2".into()));
            }
            check_time("z_max", *z_max)?;
        }
        RunSpec::Coefficients { t_final, dt, .. } => {
            check_time("t_final", *t_final)?;
            if let Some(dt) = dt {
                check_time("dt", *dt)?;
            }
        }
    }
    Ok(())
}

/// Set `a.b.c = value` in a raw table; numeric path segments index arrays
/// (`run.0.t_final`). The value is read as a TOML literal, or as a string
/// when it does not parse.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let mut cur = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    for part in &parts[1..] {
        cur = match cur {
            toml::Value::Table(t) => t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new())),
            toml::Value::Array(a) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("override {key:?}: {part:?} is not an array index")))?;
                a.get_mut(i)
                    .ok_or_else(|| Error::Config(format!("override {key:?}: index {i} out of range")))?
            }
            _ => return Err(Error::Config(format!("override {key:?}: {part:?} is not inside a table"))),
        };
    }
    *cur = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 11
[oscillator]
mass = 1.0
spring_constant = 1.0
[bath]
kind = "ohmic"
gamma = 0.2
[thermal]
kt = 5.0
[[run]]
name = "eq"
mode = "equilibrium-check"
t_final = 1.0
[[run]]
name = "cat"
mode = "evolve"
lambda = 0
t_final = 0.5
initial = { kind = "cat", d = 3.0, sigma = 1.0 }
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.runs.len(), 2);
        assert_eq!(cfg.runs[0].mode(), "equilibrium-check");
        let again = ScenarioConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("kt = 5.0", "kt = 5.0\ntemperature = 3");
        assert!(matches!(ScenarioConfig::parse(&bad), Err(Error::Config(_))));
        let bad_run = SAMPLE.replace("t_final = 1.0", "t_final = 1.0\nsteps = 3");
        assert!(matches!(ScenarioConfig::parse(&bad_run), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_reach_nested_and_array_entries() {
        let cfg = ScenarioConfig::parse_with_overrides(
            SAMPLE,
            &["thermal.kt=7.5".into(), "run.1.lambda=-1".into(), "run.0.name=eq2".into()],
        )
        .unwrap();
        assert_eq!(cfg.thermal.kt, 7.5);
        assert!(matches!(cfg.runs[1], RunSpec::Evolve { lambda: -1, .. }));
        assert_eq!(cfg.runs[0].name(), "eq2");
        assert!(ScenarioConfig::parse_with_overrides(SAMPLE, &["run.5.lambda=1".into()]).is_err());
        assert!(ScenarioConfig::parse_with_overrides(SAMPLE, &["nonsense".into()]).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let bad = SAMPLE.replace("gamma = 0.2", "gamma = -1.0");
        assert!(matches!(ScenarioConfig::parse(&bad), Err(Error::Config(_))));
        let dup = SAMPLE.replace("name = \"cat\"", "name = \"eq\"");
        assert!(matches!(ScenarioConfig::parse(&dup), Err(Error::Config(_))));
    }

    #[test]
    fn empty_run_list_is_valid() {
        let cfg = ScenarioConfig::parse("[bath]\nkind = \"ohmic\"\ngamma = 0.1\n[thermal]\nkt = 1.0\n").unwrap();
        assert!(cfg.runs.is_empty());
    }
}
