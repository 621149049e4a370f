use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, run_match};
use crate::error::{Error, Result};
use crate::games::{bimatrix_to_game, random_bimatrix, BimatrixGame};
use crate::learners::{LearnerConfig, Rule};
use crate::nash::{best_ne_metric, BestNe};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleScore {
    /// Mean final (L1 + L2)/2 over non-diverged games.
    pub mean_joint_loss: f64,
    /// Same, using the last recorded step instead of the final window.
    pub mean_last_joint_loss: f64,
    pub diverged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub n_games: usize,
    pub seed: u64,
    pub steps: usize,
    pub rules: BTreeMap<Rule, RuleScore>,
    pub best_ne: BestNe,
    /// Lowest-loss rule among LOLA, SOS and CGD, when benchmarked.
    pub best_baseline: Option<Rule>,
    /// `100·(baseline − pbos)/(baseline − best_ne)` using the joint reading.
    pub proximity_improvement: Option<f64>,
    pub proximity_improvement_separate: Option<f64>,
}

/// Game `i` of a benchmark with master seed `seed`.
pub fn benchmark_game(seed: u64, i: usize) -> BimatrixGame {
    random_bimatrix(derive_seed(seed, 2 * i as u64))
}

/// Train each rule in self-play on `n_games` random games.
///
/// Game `i` and its θ initialization use generators derived from
/// `(seed, i)`; every rule starts game `i` from the same θ.
pub fn run_benchmark(n_games: usize, seed: u64, rules: &[Rule], cfg: &LearnerConfig, steps: usize) -> Result<BenchmarkSummary> {
    if n_games == 0 {
        return Err(Error::Config("n_games must be >= 1".into()));
    }
    if steps == 0 {
        return Err(Error::Config("steps must be >= 1".into()));
    }
    cfg.validate()?;
    let games: Vec<BimatrixGame> = (0..n_games).map(|i| benchmark_game(seed, i)).collect();

    let per_game: Vec<Vec<Option<(f64, f64)>>> = games
        .par_iter()
        .enumerate()
        .map(|(i, bm)| {
            let game = bimatrix_to_game(bm.clone());
            let init_seed = derive_seed(seed, 2 * i as u64 + 1);
            rules
                .iter()
                .map(|&r| {
                    let run = run_match(&game, [r, r], cfg, steps, init_seed, 1)?;
                    let s = run.summary();
                    Ok((!s.diverged).then(|| (s.avg_joint_loss(), 0.5 * (s.last_l1 + s.last_l2))))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut scores = BTreeMap::new();
    for (k, &rule) in rules.iter().enumerate() {
        let ok: Vec<(f64, f64)> = per_game.iter().filter_map(|g| g[k]).collect();
        let n = ok.len().max(1) as f64;
        scores.insert(
            rule,
            RuleScore {
                mean_joint_loss: ok.iter().map(|v| v.0).sum::<f64>() / n,
                mean_last_joint_loss: ok.iter().map(|v| v.1).sum::<f64>() / n,
                diverged: n_games - ok.len(),
            },
        );
    }

    let best_ne = best_ne_metric(&games);
    let best_baseline = Rule::BASELINES
        .into_iter()
        .filter(|r| scores.contains_key(r))
        .min_by(|a, b| scores[a].mean_joint_loss.total_cmp(&scores[b].mean_joint_loss));
    let improvement = |reference: f64| {
        let base = scores[&best_baseline?].mean_joint_loss;
        let pbos = scores.get(&Rule::Pbos)?.mean_joint_loss;
        Some(100.0 * (base - pbos) / (base - reference))
    };

    Ok(BenchmarkSummary {
        n_games,
        seed,
        steps,
        proximity_improvement: improvement(best_ne.joint),
        proximity_improvement_separate: improvement(best_ne.separate),
        rules: scores,
        best_ne,
        best_baseline,
    })
}
