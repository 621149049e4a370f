//! Seeded experiment execution: self-play, cross-play, the random bimatrix
//! benchmark and vector-field sampling.
//!
//! Every run draws its initial parameters from a generator derived from the
//! configured seed, so replays are bit-identical.

mod benchmark;
mod config;
mod field;

pub use benchmark::{benchmark_game, run_benchmark, BenchmarkSummary, RuleScore};
pub use config::{defaults, Defaults, ExperimentConfig, GameDefaults, GameSpec};
pub use field::{emit_vector_field, write_field_csv, FieldSample, GridSpec};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::games::GameDefinition;
use crate::learners::{step, LearnerConfig, LearnerState, Rule};
use crate::record::RunRecord;

/// Fraction of the recorded trajectory averaged into the final losses.
pub const FINAL_WINDOW: f64 = 0.05;

/// Mix a master seed with a run index (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub diverged: bool,
    pub final_state: LearnerState,
}

/// End-of-run values: window means plus the last recorded point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub l1: f64,
    pub l2: f64,
    pub c1: f64,
    pub c2: f64,
    pub xi_norm: f64,
    pub last_l1: f64,
    pub last_l2: f64,
    pub last_xi_norm: f64,
    pub diverged: bool,
}

impl FinalSummary {
    pub fn avg_joint_loss(&self) -> f64 {
        0.5 * (self.l1 + self.l2)
    }
}

impl RunOutput {
    /// Means over the last 5% of recorded rows (at least one row).
    pub fn summary(&self) -> FinalSummary {
        summarize(&self.records, self.diverged)
    }
}

pub fn summarize(records: &[RunRecord], diverged: bool) -> FinalSummary {
    let n = records.len();
    let w = ((n as f64 * FINAL_WINDOW).ceil() as usize).clamp(1, n.max(1));
    let tail = &records[n.saturating_sub(w)..];
    let mean = |f: fn(&RunRecord) -> f64| tail.iter().map(f).sum::<f64>() / tail.len().max(1) as f64;
    let last = records.last();
    FinalSummary {
        l1: mean(|r| r.l1),
        l2: mean(|r| r.l2),
        c1: mean(|r| r.c1),
        c2: mean(|r| r.c2),
        xi_norm: mean(|r| r.xi_norm),
        last_l1: last.map_or(f64::NAN, |r| r.l1),
        last_l2: last.map_or(f64::NAN, |r| r.l2),
        last_xi_norm: last.map_or(f64::NAN, |r| r.xi_norm),
        diverged,
    }
}

/// Train `rules` against each other from a seeded start for `steps` updates.
///
/// Divergence stops the run; the partial trajectory, ending with the flagged
/// row, is returned.
pub fn run_match(
    game: &GameDefinition,
    rules: [Rule; 2],
    learner: &LearnerConfig,
    steps: usize,
    seed: u64,
    record_every: usize,
) -> Result<RunOutput> {
    let mut state = LearnerState::init(game, learner, seed)?;
    let mut records = Vec::with_capacity(steps / record_every.max(1) + 1);
    let mut diverged = false;
    for t in 0..steps {
        let rec = step(&mut state, rules, game, learner)?;
        let stop = rec.diverged;
        if stop || t % record_every.max(1) == 0 || t + 1 == steps {
            records.push(rec);
        }
        if stop {
            diverged = true;
            break;
        }
    }
    Ok(RunOutput {
        records,
        diverged,
        final_state: state,
    })
}

/// Self-play (or fixed cross-play) run described by an experiment config.
pub fn run_selfplay(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let game = cfg.game.build()?;
    run_match(&game, cfg.rules(), &cfg.learner, cfg.steps, cfg.seed, cfg.record_every)
}

/// PBOS (player 1) against each of LOLA, SOS and CGD (player 2).
pub fn run_crossplay_suite(cfg: &ExperimentConfig) -> Result<BTreeMap<(Rule, Rule), RunOutput>> {
    cfg.validate()?;
    let game = cfg.game.build()?;
    let mut out = BTreeMap::new();
    for opp in Rule::BASELINES {
        let run = run_match(&game, [Rule::Pbos, opp], &cfg.learner, cfg.steps, cfg.seed, cfg.record_every)?;
        out.insert((Rule::Pbos, opp), run);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::tandem;

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn replay_is_bit_identical() {
        let cfg = LearnerConfig::default();
        let a = run_match(&tandem(), [Rule::Pbos, Rule::Pbos], &cfg, 300, 5, 1).unwrap();
        let b = run_match(&tandem(), [Rule::Pbos, Rule::Pbos], &cfg, 300, 5, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_window() {
        let cfg = LearnerConfig::default();
        let run = run_match(&tandem(), [Rule::Sos, Rule::Sos], &cfg, 100, 1, 1).unwrap();
        let s = run.summary();
        let tail = &run.records[95..];
        let want = tail.iter().map(|r| r.l1).sum::<f64>() / 5.0;
        assert_eq!(s.l1, want);
        assert_eq!(s.last_l1, run.records[99].l1);
    }

    #[test]
    fn record_every_thins_rows() {
        let cfg = LearnerConfig::default();
        let run = run_match(&tandem(), [Rule::Sos, Rule::Sos], &cfg, 100, 1, 10).unwrap();
        let steps: Vec<usize> = run.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 99]);
    }
}
