//! Run configuration: JSON schema, per-command validation, and construction
//! of the core objects a run needs.

use phaselab_core::families::{AbstractFamily, GeneralizedOscillator, ParamPoint};
use phaselab_core::holonomy::{ParamLoop, DEFAULT_QUADRATURE, DEFAULT_SEGMENTS};
use phaselab_core::koopman::ModeVector;
use serde::Deserialize;

/// Commands mirror the library operations one to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Hannay,
    Berry,
    AaPhase,
    VerifyRelation,
    KoopmanCheck,
    LiouvilleCheck,
    Resonance,
}

impl Command {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "hannay" => Some(Command::Hannay),
            "berry" => Some(Command::Berry),
            "aa-phase" => Some(Command::AaPhase),
            "verify-relation" => Some(Command::VerifyRelation),
            "koopman-check" => Some(Command::KoopmanCheck),
            "liouville-check" => Some(Command::LiouvilleCheck),
            "resonance" => Some(Command::Resonance),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Hannay => "hannay",
            Command::Berry => "berry",
            Command::AaPhase => "aa-phase",
            Command::VerifyRelation => "verify-relation",
            Command::KoopmanCheck => "koopman-check",
            Command::LiouvilleCheck => "liouville-check",
            Command::Resonance => "resonance",
        }
    }

    pub const ALL: [Command; 7] = [
        Command::Hannay,
        Command::Berry,
        Command::AaPhase,
        Command::VerifyRelation,
        Command::KoopmanCheck,
        Command::LiouvilleCheck,
        Command::Resonance,
    ];
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind")]
pub enum FamilySpec {
    /// Generalized oscillator H = (X q^2 + 2 Y q p + Z p^2)/2 with
    /// parameters (X, Y, Z).
    #[serde(rename = "oscillator")]
    Oscillator,
    /// Action-quadratic family H(I; x) = x_0 I + x_1 I^2 / 2 with an
    /// x-independent chart (zero deformation one-form).
    #[serde(rename = "action-quadratic")]
    ActionQuadratic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind")]
pub enum LoopSpec {
    #[serde(rename = "constant")]
    Constant { at: Vec<f64> },
    #[serde(rename = "circle")]
    Circle { center: Vec<f64>, radius: f64, plane: (usize, usize) },
    #[serde(rename = "polyline")]
    Polyline { vertices: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateAmp {
    pub mode: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub residual: Option<f64>,
    pub group_law: Option<f64>,
    pub composition: Option<f64>,
    pub norm_drift: Option<f64>,
    pub closure: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind")]
pub enum RegionSpec {
    #[serde(rename = "rect")]
    Rect { q: (f64, f64), p: (f64, f64) },
    #[serde(rename = "disk")]
    Disk { center: (f64, f64), radius: f64 },
    #[serde(rename = "energy-ball")]
    EnergyBall { e_max: f64, q_half_width: f64, p_half_width: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind")]
pub enum SystemSpec {
    /// Oscillator with fixed parameters, exact rotation flow.
    #[serde(rename = "oscillator")]
    Oscillator { x: Vec<f64> },
    /// Quartic oscillator H = p^2/2 + q^4/4, leapfrog flow.
    #[serde(rename = "quartic")]
    Quartic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub system: SystemSpec,
    pub region: RegionSpec,
    pub t: f64,
    pub dt: Option<f64>,
    pub samples: usize,
    pub observables: Vec<String>,
}

/// Raw configuration file contents; unknown fields are rejected so typos
/// surface as config errors.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub family: Option<FamilySpec>,
    pub x0: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    #[serde(rename = "loop")]
    pub loop_spec: Option<LoopSpec>,
    pub orientation: Option<String>,
    pub turns: Option<u32>,
    pub segments: Option<usize>,
    pub quadrature: Option<usize>,
    pub modes: Option<Vec<Vec<i64>>>,
    pub epsilons: Option<Vec<f64>>,
    pub phi0_samples: Option<usize>,
    pub n_max: Option<i64>,
    pub omega: Option<Vec<f64>>,
    pub state: Option<Vec<StateAmp>>,
    pub t_loop: Option<f64>,
    pub steps: Option<usize>,
    pub trials: Option<usize>,
    pub k_max: Option<i64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub emit_tables: Option<bool>,
    pub sweep_segments: Option<Vec<usize>>,
    pub tolerances: Option<Tolerances>,
    pub mc: Option<McSpec>,
}

/// A config error carries the offending field or parse diagnostics; the CLI
/// maps it to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(text: &str) -> Result<RawConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

fn require<'a, V>(field: Option<&'a V>, name: &str, command: Command) -> Result<&'a V, ConfigError> {
    field.ok_or_else(|| {
        ConfigError(format!("field `{name}` is required for command `{}`", command.name()))
    })
}

/// Family instantiation: every CLI family is 1-dof, so the canonical and
/// abstract cases are wrapped behind one enum.
pub enum BuiltFamily {
    Oscillator(GeneralizedOscillator),
    Abstract(AbstractFamily<f64>),
}

impl BuiltFamily {
    pub fn as_integrable(&self) -> &dyn phaselab_core::families::IntegrableFamily<f64> {
        match self {
            BuiltFamily::Oscillator(f) => f,
            BuiltFamily::Abstract(f) => f,
        }
    }

    pub fn as_canonical(
        &self,
    ) -> Option<&dyn phaselab_core::families::CanonicalFamily<f64>> {
        match self {
            BuiltFamily::Oscillator(f) => Some(f),
            BuiltFamily::Abstract(_) => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltFamily::Oscillator(_) => "oscillator",
            BuiltFamily::Abstract(_) => "action-quadratic",
        }
    }
}

pub fn build_family(spec: &FamilySpec) -> BuiltFamily {
    match spec {
        FamilySpec::Oscillator => BuiltFamily::Oscillator(GeneralizedOscillator::new()),
        FamilySpec::ActionQuadratic => BuiltFamily::Abstract(
            AbstractFamily::new(
                1,
                2,
                |i: &[f64], x: &ParamPoint<f64>| x[0] * i[0] + 0.5 * x[1] * i[0] * i[0],
                |_i, _phi, _x, _dir| vec![0.0],
            )
            .with_frequency(|i, x| vec![x[0] + x[1] * i[0]]),
        ),
    }
}

pub fn build_loop(raw: &RawConfig, command: Command) -> Result<ParamLoop<f64>, ConfigError> {
    let spec = require(raw.loop_spec.as_ref(), "loop", command)?;
    let build_point = |coords: &[f64]| {
        ParamPoint::new(coords.to_vec()).map_err(|e| ConfigError(format!("loop point: {e}")))
    };
    let mut lp = match spec {
        LoopSpec::Constant { at } => ParamLoop::constant(build_point(at)?),
        LoopSpec::Circle { center, radius, plane } => {
            ParamLoop::circle(build_point(center)?, *radius, *plane)
                .map_err(|e| ConfigError(format!("loop: {e}")))?
        }
        LoopSpec::Polyline { vertices } => {
            let points = vertices
                .iter()
                .map(|v| build_point(v))
                .collect::<Result<Vec<_>, _>>()?;
            ParamLoop::polyline(points).map_err(|e| ConfigError(format!("loop: {e}")))?
        }
    };
    if let Some(turns) = raw.turns {
        lp = lp.repeated(turns).map_err(|e| ConfigError(format!("turns: {e}")))?;
    }
    match raw.orientation.as_deref() {
        None | Some("forward") => {}
        Some("reversed") => lp = lp.reversed(),
        Some(other) => {
            return Err(ConfigError(format!(
                "field `orientation` must be \"forward\" or \"reversed\", got \"{other}\""
            )))
        }
    }
    Ok(lp)
}

pub fn build_modes(raw: &RawConfig, command: Command) -> Result<Vec<ModeVector>, ConfigError> {
    let modes = require(raw.modes.as_ref(), "modes", command)?;
    if modes.is_empty() {
        return Err(ConfigError("field `modes` must not be empty".into()));
    }
    Ok(modes.iter().map(|m| ModeVector::new(m.clone())).collect())
}

pub fn mu_slice(raw: &RawConfig, command: Command) -> Result<&[f64], ConfigError> {
    Ok(require(raw.mu.as_ref(), "mu", command)?.as_slice())
}

pub fn segments(raw: &RawConfig) -> usize {
    raw.segments.unwrap_or(DEFAULT_SEGMENTS)
}

pub fn quadrature(raw: &RawConfig) -> usize {
    raw.quadrature.unwrap_or(DEFAULT_QUADRATURE)
}
