use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::games::{bimatrix_to_game, BimatrixGame, GameDefinition};
use crate::learners::{LearnerConfig, Rule};

const DEFAULTS_JSON: &str = include_str!("../../configs/defaults.json");

/// A suite game by identifier, or an explicit payoff table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Named(String),
    Bimatrix { bimatrix: BimatrixGame },
}

impl GameSpec {
    pub fn build(&self) -> Result<GameDefinition> {
        match self {
            GameSpec::Named(id) => GameDefinition::by_name(id),
            GameSpec::Bimatrix { bimatrix } => Ok(bimatrix_to_game(bimatrix.clone())),
        }
    }
}

/// One seeded experiment as read from a JSON file.
///
/// `opponent` defaults to `rule` (self-play).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<Rule>,
    #[serde(default)]
    pub learner: LearnerConfig,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        self.learner.validate()
    }

    pub fn rules(&self) -> [Rule; 2] {
        [self.rule, self.opponent.unwrap_or(self.rule)]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checked-in defaults for `rule` (against `opponent`) on a suite game.
    pub fn suite(game: &str, rule: Rule, opponent: Option<Rule>, seed: u64) -> Result<Self> {
        let d = defaults().game(game)?;
        let mut keys = vec![rule.to_string()];
        if let Some(o) = opponent.filter(|&o| o != rule) {
            keys.push(format!("{rule}_vs_{o}"));
        }
        let (learner, steps) = d.resolve(&keys, rule)?;
        Ok(Self {
            game: GameSpec::Named(game.into()),
            rule,
            opponent,
            learner,
            steps,
            seed,
            record_every: 1,
        })
    }
}

/// Per-game defaults: base hyperparameters, the fixed CPBOS preferences and
/// per-rule (or per-pairing, `"pbos_vs_sos"`) partial overrides.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDefaults {
    pub steps: usize,
    #[serde(default)]
    pub learner: Map<String, Value>,
    #[serde(default)]
    pub cpbos_c: [f64; 2],
    #[serde(default)]
    pub overrides: BTreeMap<String, Map<String, Value>>,
}

impl GameDefaults {
    /// Merge the base object with the overrides named by `keys`, later keys
    /// winning. `steps` may appear in an override.
    pub fn resolve(&self, keys: &[String], rule: Rule) -> Result<(LearnerConfig, usize)> {
        let mut merged = self.learner.clone();
        let mut steps = self.steps;
        if rule == Rule::Cpbos {
            merged.insert("c_init".into(), serde_json::to_value(self.cpbos_c)?);
        }
        for (key, ov) in keys.iter().filter_map(|k| Some((k, self.overrides.get(k)?))) {
            for (k, v) in ov {
                if k == "steps" {
                    steps = v
                        .as_u64()
                        .ok_or_else(|| Error::Config(format!("override '{key}': steps must be an integer")))?
                        as usize;
                } else {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
        let learner: LearnerConfig = serde_json::from_value(Value::Object(merged))?;
        learner.validate()?;
        Ok((learner, steps))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub games: BTreeMap<String, GameDefaults>,
    pub benchmark: GameDefaults,
}

impl Defaults {
    pub fn game(&self, id: &str) -> Result<&GameDefaults> {
        let canonical = GameDefinition::by_name(id)?.name;
        self.games
            .get(&canonical)
            .ok_or_else(|| Error::Config(format!("no defaults for game '{id}'")))
    }
}

/// The checked-in defaults, parsed once.
pub fn defaults() -> &'static Defaults {
    static CELL: std::sync::OnceLock<Defaults> = std::sync::OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(DEFAULTS_JSON).expect("configs/defaults.json is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::SUITE;

    #[test]
    fn every_suite_game_and_rule_resolves() {
        for g in SUITE {
            for r in Rule::ALL {
                let cfg = ExperimentConfig::suite(g, r, None, 0).unwrap();
                cfg.validate().unwrap();
            }
        }
        let (l, s) = defaults().benchmark.resolve(&["pbos".into()], Rule::Pbos).unwrap();
        l.validate().unwrap();
        assert!(s >= 1);
    }

    #[test]
    fn cpbos_uses_pinned_preferences() {
        let cfg = ExperimentConfig::suite("ultimatum", Rule::Cpbos, None, 0).unwrap();
        assert_eq!(cfg.learner.c_init, [1.0, -1.0]);
    }

    #[test]
    fn json_forms() {
        let cfg = ExperimentConfig::from_json(r#"{"game":"tandem","rule":"sos","steps":10}"#).unwrap();
        assert_eq!(cfg.rules(), [Rule::Sos, Rule::Sos]);
        assert_eq!(cfg.record_every, 1);
        let cfg = ExperimentConfig::from_json(
            r#"{"game":{"bimatrix":{"payoff1":[[1,0],[0,1]],"payoff2":[[0,1],[1,0]]}},
                "rule":"pbos","opponent":"cgd","steps":3,"learner":{"alpha":0.2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.rules(), [Rule::Pbos, Rule::Cgd]);
        assert_eq!(cfg.learner.alpha, 0.2);
        assert!(cfg.game.build().unwrap().bimatrix().is_some());
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            r#"{"game":"tandem","rule":"sos","steps":0}"#,
            r#"{"game":"tandem","rule":"sos","steps":5,"record_every":0}"#,
            r#"{"game":"tandem","rule":"sos","steps":5,"learner":{"alpha":-1}}"#,
            r#"{"game":"tandem","rule":"sos","steps":5,"extra":1}"#,
            r#"{"game":"tandem","rule":"mystery","steps":5}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
        let cfg = ExperimentConfig::from_json(r#"{"game":"chess","rule":"sos","steps":5}"#).unwrap();
        assert!(cfg.game.build().is_err());
    }
}
