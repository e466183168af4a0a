//! Experiment descriptions.
//!
//! A config is a JSON object with the common keys `kind`, `name`, `seed`,
//! `ball_cap` and `out`; every other key belongs to the kind and unknown keys
//! are rejected with the path of the offending key.

use std::path::{Path, PathBuf};

use afp_core::convex::{ConvexModel, Seminorm};
use afp_core::folner::SidesRule;
use afp_core::group::{ElementSpec, Group};
use afp_core::reiter::{Init, Method};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{LabError, Result};

/// Overrides the default ball cap when a config does not set `ball_cap`.
pub const BALL_CAP_ENV: &str = "AFP_LAB_BALL_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    FolnerProfile,
    AfpRun,
    Reiter,
    Kesten,
    Counterexample,
    Embed,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::FolnerProfile => "folner_profile",
            Kind::AfpRun => "afp_run",
            Kind::Reiter => "reiter",
            Kind::Kesten => "kesten",
            Kind::Counterexample => "counterexample",
            Kind::Embed => "embed",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    kind: Kind,
    name: Option<String>,
    seed: Option<u64>,
    ball_cap: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: Option<u64>,
    pub ball_cap: Option<usize>,
    pub out: Option<PathBuf>,
    pub spec: Spec,
    /// The config as given, with command-line overrides applied.
    pub echo: Value,
}

#[derive(Clone, Debug)]
pub enum Spec {
    FolnerProfile(FolnerProfileSpec),
    AfpRun(AfpRunSpec),
    Reiter(ReiterSpec),
    Kesten(KestenSpec),
    Counterexample(CounterexampleSpec),
    Embed(EmbedSpec),
}

impl Spec {
    pub fn kind(&self) -> Kind {
        match self {
            Spec::FolnerProfile(_) => Kind::FolnerProfile,
            Spec::AfpRun(_) => Kind::AfpRun,
            Spec::Reiter(_) => Kind::Reiter,
            Spec::Kesten(_) => Kind::Kesten,
            Spec::Counterexample(_) => Kind::Counterexample,
            Spec::Embed(_) => Kind::Embed,
        }
    }

    /// Whether the experiment draws random numbers.
    pub fn needs_seed(&self) -> bool {
        match self {
            Spec::AfpRun(s) => s.decomposition_checks > 0 || matches!(s.action, ActionSpec::Affine { .. }),
            Spec::Embed(_) => true,
            _ => false,
        }
    }
}

/// Mirrors [`SidesRule`] with braced variants, which serde checks for
/// unknown keys.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SidesSpec {
    Doubling {},
    Linear { start: u64, step: u64 },
}

impl From<SidesSpec> for SidesRule {
    fn from(s: SidesSpec) -> Self {
        match s {
            SidesSpec::Doubling {} => SidesRule::Doubling,
            SidesSpec::Linear { start, step } => SidesRule::Linear { start, step },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Boxes { sides: SidesSpec },
    /// Word-metric balls for the experiment's generators.
    Balls {},
    WholeGroup {},
    Explicit { sets: Vec<Vec<ElementSpec>> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerProfileSpec {
    pub group: Group,
    pub gens: Option<Vec<ElementSpec>>,
    pub schedule: ScheduleSpec,
    pub max_index: usize,
    /// Assertion on the largest ratio at the last index.
    pub max_final_ratio: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    /// `Sym(n)` permuting the coordinates of the simplex.
    Permutation {},
    /// `ℤᵈ` on the unit disk; `v` rotates by `Σ vᵢ·angles[i]`.
    Rotation { angles: Vec<f64> },
    /// `F_k` on `prob(ℕ)` by left multiplication.
    LeftRegular {},
    /// Generator images as affine maps of a given model.
    Affine { model: ConvexModel, maps: Vec<MapSpec> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Success,
    NoDecay,
}

fn default_epsilon() -> f64 {
    1e-2
}

fn default_max_index() -> usize {
    12
}

fn default_seminorm() -> Seminorm {
    Seminorm::Norm(afp_core::convex::Norm::L2)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfpRunSpec {
    pub group: Group,
    pub gens: Option<Vec<ElementSpec>>,
    pub action: ActionSpec,
    pub schedule: ScheduleSpec,
    pub x0: Vec<f64>,
    #[serde(default = "default_seminorm")]
    pub seminorm: Seminorm,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_index")]
    pub max_index: usize,
    pub expect: Option<Expect>,
    /// Random `(index, point, γ)` decomposition checks on top of the run.
    #[serde(default)]
    pub decomposition_checks: usize,
    /// Assertion on the final displacement.
    pub max_final_displacement: Option<f64>,
}

fn default_p() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReiterSpec {
    pub group: Group,
    pub gens: Option<Vec<ElementSpec>>,
    pub radius: usize,
    #[serde(default = "default_p")]
    pub p: u32,
    pub method: Method,
    pub iterations: Option<usize>,
    pub step0: Option<f64>,
    pub init: Option<Init>,
    pub trace_every: Option<usize>,
    pub max_objective: Option<f64>,
    pub min_objective: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KestenSpec {
    pub group: Group,
    /// Closed under inverses before use.
    pub gens: Option<Vec<ElementSpec>>,
    pub radius: usize,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub min_estimate: Option<f64>,
    pub max_estimate: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSpec {
    pub radii: Option<Vec<usize>>,
    pub threshold: Option<f64>,
    pub lp_max_radius: Option<usize>,
    pub iterations: Option<usize>,
    pub step0: Option<f64>,
    pub control_radius: Option<usize>,
    pub control_threshold: Option<f64>,
}

fn default_samples() -> usize {
    1000
}

fn default_commutation_samples() -> usize {
    100
}

fn default_commutation_radius() -> usize {
    2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSpec {
    pub domain: ConvexModel,
    pub members: Option<usize>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Transport the coordinate permutation action of a simplex domain.
    #[serde(default)]
    pub conjugate: bool,
    #[serde(default = "default_commutation_samples")]
    pub commutation_samples: usize,
    #[serde(default = "default_commutation_radius")]
    pub commutation_radius: usize,
}

fn typed<T: DeserializeOwned>(source: &str, prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            (p, ".") => p.to_string(),
            ("", i) => i.to_string(),
            (p, i) => format!("{p}.{i}"),
        };
        LabError::config(source, path, e.into_inner().to_string())
    })
}

impl ExperimentConfig {
    /// Parses a config object. `source` names it in error messages and
    /// `default_name` is used when the config has no `name`.
    pub fn from_value(source: &str, value: Value, default_name: Option<&str>) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(LabError::config(source, ".", "expected a JSON object"));
        };
        let echo = Value::Object(map.clone());
        let mut common = Map::new();
        for key in ["kind", "name", "seed", "ball_cap", "out"] {
            if let Some(v) = map.remove(key) {
                common.insert(key.to_string(), v);
            }
        }
        let common: Common = typed(source, "", Value::Object(common))?;
        let rest = Value::Object(map);
        let spec = match common.kind {
            Kind::FolnerProfile => Spec::FolnerProfile(typed(source, "", rest)?),
            Kind::AfpRun => Spec::AfpRun(typed(source, "", rest)?),
            Kind::Reiter => Spec::Reiter(typed(source, "", rest)?),
            Kind::Kesten => Spec::Kesten(typed(source, "", rest)?),
            Kind::Counterexample => Spec::Counterexample(typed(source, "", rest)?),
            Kind::Embed => Spec::Embed(typed(source, "", rest)?),
        };
        let name = match (common.name, default_name) {
            (Some(n), _) => n,
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(LabError::config(source, "name", "missing field `name`")),
        };
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(LabError::config(source, "name", format!("{name:?} is not usable as a file name")));
        }
        let config = ExperimentConfig {
            name,
            seed: common.seed,
            ball_cap: common.ball_cap,
            out: common.out,
            spec,
            echo,
        };
        config.check_seed(source)?;
        Ok(config)
    }

    pub fn from_str(source: &str, text: &str, default_name: Option<&str>) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| LabError::config(source, ".", format!("invalid JSON: {e}")))?;
        Self::from_value(source, value, default_name)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let stem = path.file_stem().and_then(|s| s.to_str());
        Self::from_str(&path.display().to_string(), &text, stem)
    }

    /// Replaces the seed, as `--seed` does.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        if let Value::Object(map) = &mut self.echo {
            map.insert("seed".to_string(), Value::from(seed));
        }
    }

    fn check_seed(&self, source: &str) -> Result<()> {
        if self.seed.is_none() && self.spec.needs_seed() {
            return Err(LabError::config(
                source,
                "seed",
                format!("a seed is required for {} experiments that sample", self.spec.kind().label()),
            ));
        }
        Ok(())
    }

    /// Config `ball_cap`, then the environment override, then the default.
    pub fn limits(&self) -> Result<afp_core::Limits> {
        if let Some(cap) = self.ball_cap {
            return Ok(afp_core::Limits::with_cap(cap));
        }
        match std::env::var(BALL_CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(afp_core::Limits::with_cap)
                .map_err(|_| LabError::config(BALL_CAP_ENV, ".", format!("{v:?} is not a ball cap"))),
            Err(_) => Ok(afp_core::Limits::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> Result<ExperimentConfig> {
        ExperimentConfig::from_value("test", v, Some("t"))
    }

    fn path_of(err: LabError) -> String {
        match err {
            LabError::Config { path, .. } => path,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parses_a_profile() {
        let c = parse(json!({
            "kind": "folner_profile",
            "group": {"group": "Z", "dim": 1},
            "schedule": {"type": "boxes", "sides": {"rule": "doubling"}},
            "max_index": 10
        }))
        .unwrap();
        assert_eq!(c.name, "t");
        assert!(matches!(c.spec, Spec::FolnerProfile(_)));
    }

    #[test]
    fn unknown_keys_carry_their_path() {
        let err = parse(json!({
            "kind": "folner_profile",
            "group": {"group": "Z", "dim": 1},
            "schedule": {"type": "boxes", "sides": {"rule": "doubling", "bogus": 1}},
            "max_index": 10
        }))
        .unwrap_err();
        // Tagged enums are buffered, so the path stops at the enum.
        assert!(err.to_string().contains("bogus"), "{err}");
        assert_eq!(path_of(err), "schedule");

        let err = parse(json!({"kind": "kesten", "group": {"group": "F", "rank": 2}, "radius": 3, "radus": 1}))
            .unwrap_err();
        assert!(err.to_string().contains("radus"), "{err}");

        let err = parse(json!({"kind": "kesten", "group": {"group": "F", "rank": 2}, "radius": "x"})).unwrap_err();
        assert_eq!(path_of(err), "radius");

        let err = parse(json!({"kind": "nope"})).unwrap_err();
        assert_eq!(path_of(err), "kind");
    }

    #[test]
    fn sampling_experiments_need_a_seed() {
        let embed = json!({"kind": "embed", "domain": {"kind": "simplex", "coords": 3}});
        assert_eq!(path_of(parse(embed.clone()).unwrap_err()), "seed");
        let mut with_seed = embed;
        with_seed["seed"] = json!(7);
        assert_eq!(parse(with_seed).unwrap().seed, Some(7));
    }

    #[test]
    fn seed_override_reaches_the_echo() {
        let mut c = parse(json!({"kind": "counterexample", "seed": 1})).unwrap();
        c.override_seed(9);
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.echo["seed"], json!(9));
    }

    #[test]
    fn config_cap_wins() {
        let c = parse(json!({"kind": "counterexample", "ball_cap": 17})).unwrap();
        assert_eq!(c.limits().unwrap().ball_cap, 17);
    }
}
