//! Update rules for two-player differentiable games.
//!
//! Naive simultaneous gradient descent, LOLA, SOS and CGD act on the raw
//! losses. CPBOS runs SOS on the preference-modified losses
//! `L1 + c1·L2`, `L2 + c2·L1` with `c` held fixed; PBOS additionally learns
//! `c` from the predicted change in its modified loss.

mod directions;
mod preference;

pub use directions::{
    cgd_step, interpolated_direction, lola_direction, lookahead_direction, shaping_terms, sos_direction, ShapingTerms, SosDiagnostics,
};
pub use preference::{c_gradients, modified_losses, PreferenceState, K_GUARD};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::derivkit::{eval_bundle, DerivativeBundle};
use crate::error::{Error, Result};
use crate::games::GameDefinition;
use crate::record::RunRecord;

/// Runs abort once any parameter exceeds this magnitude.
pub const THETA_LIMIT: f64 = 1e6;
/// Runs abort once any preference exceeds this magnitude.
pub const C_LIMIT: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Naive,
    Lola,
    Sos,
    Cgd,
    Cpbos,
    Pbos,
}

impl Rule {
    pub const ALL: [Rule; 6] = [Rule::Naive, Rule::Lola, Rule::Sos, Rule::Cgd, Rule::Cpbos, Rule::Pbos];
    pub const BASELINES: [Rule; 3] = [Rule::Lola, Rule::Sos, Rule::Cgd];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Naive => "naive",
            Rule::Lola => "lola",
            Rule::Sos => "sos",
            Rule::Cgd => "cgd",
            Rule::Cpbos => "cpbos",
            Rule::Pbos => "pbos",
        }
    }

    /// Rules that optimize the preference-modified losses.
    pub fn uses_preferences(self) -> bool {
        matches!(self, Rule::Cpbos | Rule::Pbos)
    }

    /// Rules whose step is chosen by the SOS criterion.
    pub fn is_sos_family(self) -> bool {
        matches!(self, Rule::Sos | Rule::Cpbos | Rule::Pbos)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown rule '{s}'")))
    }
}

/// Hyperparameters shared by both players of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Learning rate for θ (also the look-ahead rate of LOLA/SOS).
    pub alpha: f64,
    /// Initial preference learning rate.
    pub beta0: f64,
    /// Geometric decay of the preference rate per step.
    pub rho: f64,
    /// SOS criterion hyperparameters.
    pub a: f64,
    pub b: f64,
    /// Discount of the response estimator.
    pub gamma_pref: f64,
    pub c_init: [f64; 2],
    /// Standard deviation of the zero-mean normal θ initialization.
    pub init_std: f64,
    /// CGD step size; `alpha` when absent.
    pub cgd_beta: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta0: 0.05,
            rho: 0.999,
            a: 0.5,
            b: 0.1,
            gamma_pref: 0.9,
            c_init: [0.0, 0.0],
            init_std: 1.0,
            cgd_beta: None,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0) {
            return fail(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.beta0 >= 0.0) {
            return fail(format!("beta0 must be >= 0, got {}", self.beta0));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return fail(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !open_unit(self.a) || !open_unit(self.b) {
            return fail(format!("a and b must lie in (0, 1), got {} and {}", self.a, self.b));
        }
        if !(0.0..=1.0).contains(&self.gamma_pref) {
            return fail(format!("gamma_pref must lie in [0, 1], got {}", self.gamma_pref));
        }
        if !(self.init_std >= 0.0) || self.c_init.iter().any(|c| !c.is_finite()) {
            return fail("init_std must be >= 0 and c_init finite".into());
        }
        if let Some(b) = self.cgd_beta {
            if !(b > 0.0) {
                return fail(format!("cgd_beta must be > 0, got {b}"));
            }
        }
        Ok(())
    }

    pub fn cgd_rate(&self) -> f64 {
        self.cgd_beta.unwrap_or(self.alpha)
    }
}

/// Joint parameters plus preference state of a running match.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub theta: [Vec<f64>; 2],
    pub pref: PreferenceState,
    pub step: usize,
}

impl LearnerState {
    /// Seeded normal initialization of θ; preferences start at `c_init`.
    pub fn init(game: &GameDefinition, cfg: &LearnerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (d1, d2) = game.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::Config(e.to_string()))?;
        let theta1: Vec<f64> = (0..d1).map(|_| normal.sample(&mut rng)).collect();
        let theta2: Vec<f64> = (0..d2).map(|_| normal.sample(&mut rng)).collect();
        Ok(Self::from_parts(theta1, theta2, cfg))
    }

    pub fn from_parts(theta1: Vec<f64>, theta2: Vec<f64>, cfg: &LearnerConfig) -> Self {
        Self {
            theta: [theta1, theta2],
            pref: PreferenceState::new(cfg.c_init, cfg.beta0),
            step: 0,
        }
    }

    fn out_of_bounds(&self) -> bool {
        let theta_bad = self.theta.iter().flatten().any(|v| !(v.abs() <= THETA_LIMIT));
        let c_bad = self.pref.c.iter().any(|v| !(v.abs() <= C_LIMIT));
        theta_bad || c_bad
    }
}

/// The losses a learner optimizes: raw for baselines, preference-modified
/// (own c, opponent's true c) for CPBOS/PBOS.
fn view(rule: Rule, raw: &DerivativeBundle, c: [f64; 2]) -> DerivativeBundle {
    if rule.uses_preferences() {
        modified_losses(raw, c[0], c[1])
    } else {
        raw.clone()
    }
}

/// Joint step Δθ of `rule` on the given losses, plus SOS diagnostics when the
/// rule computes them.
pub fn joint_step(rule: Rule, bundle: &DerivativeBundle, cfg: &LearnerConfig) -> Result<(DVector<f64>, Option<SosDiagnostics>)> {
    let alpha = cfg.alpha;
    Ok(match rule {
        Rule::Naive => (bundle.xi() * -alpha, None),
        Rule::Lola => (lola_direction(bundle, alpha) * -alpha, None),
        Rule::Sos | Rule::Cpbos | Rule::Pbos => {
            let (dir, diag) = sos_direction(bundle, alpha, cfg.a, cfg.b);
            (dir * -alpha, Some(diag))
        }
        Rule::Cgd => (cgd_step(bundle, alpha, cfg.cgd_rate())?, None),
    })
}

/// One simultaneous update of both players.
///
/// Player `i` applies the θ_i block of `rules[i]`'s update computed from the
/// shared pre-step parameters. Players using PBOS then move their own
/// preference by `−β·∇_c ΔL`, using gradients at the pre-step parameters and
/// the response coefficient estimated from the observed preference history.
/// The returned record describes the pre-step state and this step's update.
pub fn step(state: &mut LearnerState, rules: [Rule; 2], game: &GameDefinition, cfg: &LearnerConfig) -> Result<RunRecord> {
    let raw = eval_bundle(game, &state.theta[0], &state.theta[1])?;
    let c = state.pref.c;
    let (d1, _) = raw.dims();

    let mut delta = [DVector::zeros(0), DVector::zeros(0)];
    let mut diag = [None, None];
    let mut xi_eff: Vec<f64> = Vec::with_capacity(raw.xi().len());
    let mut views: [Option<DerivativeBundle>; 2] = [None, None];
    for i in 0..2 {
        // self-play reuses the first player's computation
        let (full, d, v) = if i == 1 && rules[1] == rules[0] {
            let v = views[0].clone().expect("first view computed");
            (delta[0].clone(), diag[0], v)
        } else {
            let v = view(rules[i], &raw, c);
            let (full, d) = joint_step(rules[i], &v, cfg)?;
            (full, d, v)
        };
        let xi_v = v.xi();
        let range = if i == 0 { 0..d1 } else { d1..xi_v.len() };
        xi_eff.extend(xi_v.iter().skip(range.start).take(range.len()));
        delta[i] = full;
        diag[i] = d;
        views[i] = Some(v);
    }

    let diag_shown = diag[0].or(diag[1]).unwrap_or_else(|| {
        let v = views[0].as_ref().expect("view");
        sos_direction(v, cfg.alpha, cfg.a, cfg.b).1
    });
    let xi_norm = xi_eff.iter().map(|v| v * v).sum::<f64>().sqrt();

    let pref = &mut state.pref;
    pref.estimate_k(cfg.gamma_pref);
    let k_used = pref.k;
    if rules.contains(&Rule::Pbos) {
        let g = c_gradients(&raw, c, k_used, cfg.alpha);
        for i in 0..2 {
            if rules[i] == Rule::Pbos {
                pref.c[i] -= pref.beta * g[i];
            }
        }
    }

    let [l1, l2] = raw.values();
    let record = RunRecord {
        step: state.step,
        l1,
        l2,
        l1_mod: l1 + c[0] * l2,
        l2_mod: l2 + c[1] * l1,
        c1: c[0],
        c2: c[1],
        k1: k_used[0],
        k2: k_used[1],
        p: diag_shown.p,
        p1: diag_shown.p1,
        p2: diag_shown.p2,
        xi_norm,
        theta1: state.theta[0].clone(),
        theta2: state.theta[1].clone(),
        diverged: false,
    };

    for (v, dv) in state.theta[0].iter_mut().zip(delta[0].iter().take(d1)) {
        *v += dv;
    }
    for (v, dv) in state.theta[1].iter_mut().zip(delta[1].iter().skip(d1)) {
        *v += dv;
    }
    pref.record();
    pref.beta *= cfg.rho;
    pref.t += 1;
    state.step += 1;

    let mut record = record;
    record.diverged = state.out_of_bounds();
    Ok(record)
}

/// One PBOS self-play iteration.
pub fn pbos_step(state: &mut LearnerState, game: &GameDefinition, cfg: &LearnerConfig) -> Result<RunRecord> {
    step(state, [Rule::Pbos, Rule::Pbos], game, cfg)
}

/// One CPBOS self-play iteration with preferences pinned to `c`.
pub fn cpbos_step(state: &mut LearnerState, game: &GameDefinition, cfg: &LearnerConfig, c: [f64; 2]) -> Result<RunRecord> {
    state.pref.c = c;
    step(state, [Rule::Cpbos, Rule::Cpbos], game, cfg)
}

/// One cross-play iteration: player 1 follows `rule_a`, player 2 `rule_b`.
pub fn crossplay_step(
    state: &mut LearnerState,
    rule_a: Rule,
    rule_b: Rule,
    game: &GameDefinition,
    cfg: &LearnerConfig,
) -> Result<RunRecord> {
    step(state, [rule_a, rule_b], game, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{stag_hunt, tandem};

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("exact-lola".parse::<Rule>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        let bad = LearnerConfig {
            a: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LearnerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = LearnerConfig {
            rho: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lola_without_interaction_is_naive() {
        let g = crate::games::bimatrix_to_game(crate::games::BimatrixGame::new([[1.0, 1.0], [0.0, 0.0]], [[2.0, 0.0], [2.0, 0.0]]));
        let b = eval_bundle(&g, &[0.4], &[0.1]).unwrap();
        let cfg = LearnerConfig::default();
        let (lola, _) = joint_step(Rule::Lola, &b, &cfg).unwrap();
        let (naive, _) = joint_step(Rule::Naive, &b, &cfg).unwrap();
        assert_eq!(lola, naive);
    }

    #[test]
    fn frozen_preferences_match_sos() {
        let cfg = LearnerConfig {
            beta0: 0.0,
            ..Default::default()
        };
        let mut a = LearnerState::init(&stag_hunt(), &cfg, 3).unwrap();
        let mut b = a.clone();
        for _ in 0..200 {
            let ra = pbos_step(&mut a, &stag_hunt(), &cfg).unwrap();
            let rb = step(&mut b, [Rule::Sos, Rule::Sos], &stag_hunt(), &cfg).unwrap();
            assert_eq!(ra.theta1, rb.theta1);
            assert_eq!(ra.theta2, rb.theta2);
            assert_eq!((ra.c1, ra.c2), (0.0, 0.0));
        }
    }

    #[test]
    fn crossplay_updates_use_the_pre_step_point() {
        let cfg = LearnerConfig::default();
        let game = tandem();
        let mut s = LearnerState::from_parts(vec![0.3], vec![-0.2], &cfg);
        let raw = eval_bundle(&game, &[0.3], &[-0.2]).unwrap();
        let (naive, _) = joint_step(Rule::Naive, &raw, &cfg).unwrap();
        let (lola, _) = joint_step(Rule::Lola, &raw, &cfg).unwrap();
        crossplay_step(&mut s, Rule::Naive, Rule::Lola, &game, &cfg).unwrap();
        assert_eq!(s.theta[0][0], 0.3 + naive[0]);
        assert_eq!(s.theta[1][0], -0.2 + lola[1]);
    }

    #[test]
    fn divergence_is_flagged() {
        let cfg = LearnerConfig::default();
        let mut s = LearnerState::from_parts(vec![2e6], vec![0.0], &cfg);
        let r = step(&mut s, [Rule::Naive, Rule::Naive], &tandem(), &cfg).unwrap();
        assert!(r.diverged);
    }
}
