//! Built-in property suite: derivative agreement, learner algebra and
//! run-level invariants, each reported as a named pass/fail check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::derivkit::{eval_bundle, fd_verify, DerivativeBundle, Jet, LossDerivs, Real};
use crate::error::Result;
use crate::games::{bimatrix_to_game, matching_pennies, random_bimatrix, tandem, GameDefinition, SUITE};
use crate::harness::run_match;
use crate::learners::{
    c_gradients, interpolated_direction, lola_direction, lookahead_direction, modified_losses, sos_direction, step, LearnerConfig,
    LearnerState, PreferenceState, Rule,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Seeded parameter points for a game: N(0, 1), or N(0, 0.5) for IPD blocks.
pub fn sample_points(game: &GameDefinition, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (d1, d2) = game.dims();
    let std = if d1 > 1 { 0.5 } else { 1.0 };
    let normal = Normal::new(0.0, std).expect("valid std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = (0..d1).map(|_| normal.sample(&mut rng)).collect();
            let b = (0..d2).map(|_| normal.sample(&mut rng)).collect();
            (a, b)
        })
        .collect()
}

fn suite_games() -> Vec<GameDefinition> {
    SUITE.iter().map(|g| GameDefinition::by_name(g).expect("suite game")).collect()
}

/// Exact derivatives against central differences at 100 points per game;
/// each block within max(1e-6, 1e-4·‖block‖).
pub fn check_finite_differences() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for game in suite_games() {
        for (k, (a, b)) in sample_points(&game, 100, 11).into_iter().enumerate() {
            let report = fd_verify(&game, &a, &b, 1e-5, f64::INFINITY)?;
            for blk in &report.blocks {
                let tol = f64::max(1e-6, 1e-4 * blk.norm);
                worst = worst.max(blk.max_abs / tol);
                if blk.max_abs >= tol {
                    failures.push(format!("{} point {k} {}: {:.3e}", game.name, blk.name, blk.max_abs));
                }
            }
        }
    }
    Ok(CheckOutcome::new(
        "finite-difference agreement",
        failures.is_empty(),
        match failures.first() {
            Some(f) => format!("{} failing blocks, first {f}", failures.len()),
            None => format!("worst error/tolerance {worst:.3}"),
        },
    ))
}

/// ∇12 L = (∇21 L)ᵀ entrywise within 1e-12, for both losses.
pub fn check_mixed_partial_symmetry() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for game in suite_games() {
        for (a, b) in sample_points(&game, 100, 12) {
            let bundle = eval_bundle(&game, &a, &b)?;
            for l in 0..2 {
                worst = worst.max((bundle.hess(l, 0, 1) - bundle.hess(l, 1, 0).transpose()).amax());
            }
        }
    }
    Ok(CheckOutcome::new(
        "mixed-partial symmetry",
        worst <= 1e-12,
        format!("max deviation {worst:.3e}"),
    ))
}

/// Gradient with respect to the own block of the first-order surrogate
/// `L_i + (∇_{-i} L_i)ᵀ (−α ∇_{-i} L_{-i})`, by differentiating the surrogate
/// itself through one more level of dual numbers.
pub fn surrogate_gradient(game: &GameDefinition, theta1: &[f64], theta2: &[f64], alpha: f64, player: usize) -> Result<Vec<f64>> {
    let own = if player == 0 { theta1 } else { theta2 };
    let n = own.len();
    let own_jets: Vec<Jet<f64>> = own.iter().enumerate().map(|(i, &v)| Jet::variable(v, i, n)).collect();
    let s = surrogate(game, theta1, theta2, &own_jets, alpha, player)?;
    Ok((0..n).map(|i| s.tangent(i)).collect())
}

fn surrogate<S: Real>(game: &GameDefinition, theta1: &[f64], theta2: &[f64], own: &[S], alpha: f64, player: usize) -> Result<S> {
    let other = if player == 0 { theta2 } else { theta1 };
    let m = other.len();
    let own_lifted: Vec<Jet<S>> = own.iter().cloned().map(Jet::constant).collect();
    let other_vars: Vec<Jet<S>> = other.iter().enumerate().map(|(k, &v)| Jet::variable(S::cst(v), k, m)).collect();
    let [l1, l2] = if player == 0 {
        game.losses(&own_lifted, &other_vars)?
    } else {
        game.losses(&other_vars, &own_lifted)?
    };
    let (mine, theirs) = if player == 0 { (l1, l2) } else { (l2, l1) };
    let mut total = mine.v.clone();
    for k in 0..m {
        total = total + mine.tangent(k) * theirs.tangent(k).scale(-alpha);
    }
    Ok(total)
}

/// LOLA direction ≡ SOS with p = 1 ≡ surrogate gradient, 20 points × 6 games.
pub fn check_lola_surrogate() -> Result<CheckOutcome> {
    let alpha = 0.1;
    let mut worst = 0.0f64;
    for game in suite_games() {
        let (d1, _) = game.dims();
        for (a, b) in sample_points(&game, 20, 13) {
            let bundle = eval_bundle(&game, &a, &b)?;
            let lola = lola_direction(&bundle, alpha);
            let p1 = interpolated_direction(&bundle, alpha, 1.0);
            worst = worst.max((&lola - &p1).amax());
            let g1 = surrogate_gradient(&game, &a, &b, alpha, 0)?;
            let g2 = surrogate_gradient(&game, &a, &b, alpha, 1)?;
            let oracle = DVector::from_iterator(lola.len(), g1.into_iter().chain(g2));
            worst = worst.max((&lola - &oracle).amax());
            debug_assert_eq!(oracle.len(), d1 + b.len());
        }
    }
    Ok(CheckOutcome::new(
        "SOS p=1 = LOLA = surrogate gradient",
        worst < 1e-8,
        format!("max deviation {worst:.3e}"),
    ))
}

/// ξ_p at p = 0 is the LookAhead direction.
pub fn check_p_zero_lookahead() -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    for game in suite_games() {
        for (a, b) in sample_points(&game, 20, 14) {
            let bundle = eval_bundle(&game, &a, &b)?;
            let d = interpolated_direction(&bundle, 0.1, 0.0) - lookahead_direction(&bundle, 0.1);
            worst = worst.max(d.amax());
        }
    }
    Ok(CheckOutcome::new(
        "SOS p=0 = LookAhead",
        worst == 0.0,
        format!("max deviation {worst:.3e}"),
    ))
}

/// On Tandem's line x + y = 1, ξ = 0, the SOS direction vanishes and a
/// full SOS step leaves θ in place.
pub fn check_fixed_points() -> Result<CheckOutcome> {
    let cfg = LearnerConfig::default();
    let game = tandem();
    let mut worst = 0.0f64;
    for k in 0..21 {
        let x = -5.0 + 0.5 * k as f64;
        let bundle = eval_bundle(&game, &[x], &[1.0 - x])?;
        let (dir, diag) = sos_direction(&bundle, cfg.alpha, cfg.a, cfg.b);
        worst = worst.max(dir.amax()).max(diag.p2);
        let mut state = LearnerState::from_parts(vec![x], vec![1.0 - x], &cfg);
        step(&mut state, [Rule::Sos, Rule::Sos], &game, &cfg)?;
        worst = worst.max((state.theta[0][0] - x).abs()).max((state.theta[1][0] - (1.0 - x)).abs());
    }
    Ok(CheckOutcome::new(
        "fixed-point preservation",
        worst < 1e-12,
        format!("max movement {worst:.3e}"),
    ))
}

/// Matching Pennies is zero-sum, so full mutual care (c = 1) cancels the
/// preference gradients.
pub fn check_zero_sum() -> Result<CheckOutcome> {
    let game = matching_pennies();
    let mut worst = 0.0f64;
    for (a, b) in sample_points(&game, 100, 15) {
        let bundle = eval_bundle(&game, &a, &b)?;
        let [l1, l2] = bundle.values();
        worst = worst.max((l1 + l2).abs());
        let g = c_gradients(&bundle, [1.0, 1.0], [1.0, 1.0], 0.1);
        worst = worst.max(g[0].abs()).max(g[1].abs());
    }
    Ok(CheckOutcome::new(
        "zero-sum identity (matching pennies)",
        worst < 1e-12,
        format!("max residual {worst:.3e}"),
    ))
}

/// c1·c2 = 1 ⇒ c2·L1' = L2' (values, gradients and curvature) at 100
/// random games and points.
pub fn check_cooperation_identity() -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let game = match i % 3 {
            0 => tandem(),
            1 => bimatrix_to_game(random_bimatrix(rng.random())),
            _ => GameDefinition::by_name(SUITE[i % SUITE.len()])?,
        };
        let (a, b) = sample_points(&game, 1, rng.random()).pop().expect("one point");
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let c1: f64 = sign * rng.random_range(0.1..5.0);
        let c2 = 1.0 / c1;
        let m = modified_losses(&eval_bundle(&game, &a, &b)?, c1, c2);
        let [l1m, l2m] = &m.loss;
        let scaled = l1m.plus_scaled(l1m, c2 - 1.0);
        let scale = 1.0 + l2m.value.abs();
        worst = worst.max((scaled.value - l2m.value).abs() / scale);
        for i in 0..2 {
            worst = worst.max((&scaled.grad[i] - &l2m.grad[i]).amax() / scale);
            for j in 0..2 {
                worst = worst.max((&scaled.hess[i][j] - &l2m.hess[i][j]).amax() / scale);
            }
        }
    }
    Ok(CheckOutcome::new(
        "maximization-of-cooperation identity",
        worst < 1e-10,
        format!("max relative residual {worst:.3e}"),
    ))
}

/// A fresh estimator sits on the guard path with K = 1.
pub fn check_k_guard() -> Result<CheckOutcome> {
    let mut p = PreferenceState::new([0.3, -0.7], 0.05);
    p.estimate_k(0.9);
    let ok = p.k == [1.0, 1.0] && !p.guard_released();
    Ok(CheckOutcome::new("K guard on fresh state", ok, format!("K = {:?}", p.k)))
}

fn scalar_bundle(g: [[f64; 2]; 2]) -> DerivativeBundle {
    let one = |v: f64| DVector::from_element(1, v);
    let zero = || DMatrix::zeros(1, 1);
    let loss = |l: usize| LossDerivs {
        value: 0.0,
        grad: [one(g[l][0]), one(g[l][1])],
        hess: [[zero(), zero()], [zero(), zero()]],
    };
    DerivativeBundle { loss: [loss(0), loss(1)] }
}

/// Same-sign preference drift once the estimator guard has released.
///
/// Part 1: at constructed points with ∇1 L1' = ∇2 L2' = 0 and K taken from a
/// released estimator, Δc1 and Δc2 share a sign. Part 2: a Tandem self-play
/// run with a large preference rate releases the guard, reaches
/// modified-loss stationarity and keeps sign(Δc1) = sign(Δc2) thereafter.
pub fn check_same_sign_drift() -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut constructed = 0;
    let mut bad = 0;
    while constructed < 200 {
        let mut pref = PreferenceState::new([0.0, 0.0], 1.0);
        let corr = rng.random_range(-1.0..1.0f64);
        for _ in 0..6 {
            let d1: f64 = rng.random_range(-0.5..0.5);
            let d2 = corr * d1 + 0.1 * rng.random_range(-0.5..0.5);
            pref.c = [pref.c[0] + d1, pref.c[1] + d2];
            pref.record();
            pref.estimate_k(0.9);
        }
        if !pref.guard_released() {
            continue;
        }
        constructed += 1;
        let c = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let g21: f64 = rng.random_range(-2.0..2.0);
        let g12: f64 = rng.random_range(-2.0..2.0);
        let g = [[-c[0] * g12, g21], [g12, -c[1] * g21]];
        let grads = c_gradients(&scalar_bundle(g), c, pref.k, 0.1);
        let (dc1, dc2) = (-grads[0], -grads[1]);
        if dc1 * dc2 < 0.0 {
            bad += 1;
        }
    }

    let cfg = LearnerConfig {
        beta0: 1.0,
        gamma_pref: 1.0,
        c_init: [0.2, 0.2],
        init_std: 0.5,
        ..LearnerConfig::default()
    };
    let game = tandem();
    let mut traj_checked = 0;
    let mut diverged = false;
    for seed in 0..3 {
        let mut state = LearnerState::init(&game, &cfg, seed)?;
        let mut stationary = false;
        for _ in 0..1000 {
            let before = state.pref.c;
            let rec = step(&mut state, [Rule::Pbos, Rule::Pbos], &game, &cfg)?;
            diverged |= rec.diverged;
            stationary |= state.pref.guard_released() && rec.xi_norm < 1e-3;
            if stationary {
                traj_checked += 1;
                if (state.pref.c[0] - before[0]) * (state.pref.c[1] - before[1]) < 0.0 {
                    bad += 1;
                }
            }
        }
    }
    let ok = bad == 0 && traj_checked > 0 && !diverged;
    Ok(CheckOutcome::new(
        "same-sign preference drift",
        ok,
        format!("{constructed} constructed points, {traj_checked} trajectory steps, {bad} violations"),
    ))
}

/// Small preference rates keep c nearly still relative to θ on Tandem.
pub fn check_scale_separation() -> Result<CheckOutcome> {
    let cfg = LearnerConfig {
        alpha: 1e-3,
        beta0: 1e-4,
        ..LearnerConfig::default()
    };
    let run = run_match(&tandem(), [Rule::Pbos, Rule::Pbos], &cfg, 1000, 5, 1)?;
    let mut max_dc = 0.0f64;
    let mut max_dtheta = 0.0f64;
    for w in run.records.windows(2) {
        max_dc = max_dc.max((w[1].c1 - w[0].c1).hypot(w[1].c2 - w[0].c2));
        max_dtheta = max_dtheta.max((w[1].theta1[0] - w[0].theta1[0]).hypot(w[1].theta2[0] - w[0].theta2[0]));
    }
    let ratio = max_dc / max_dtheta;
    Ok(CheckOutcome::new(
        "preference/parameter scale separation",
        ratio < 0.1,
        format!("ratio {ratio:.3e}"),
    ))
}

/// Two identical seeded runs agree bit for bit.
pub fn check_determinism() -> Result<CheckOutcome> {
    let cfg = LearnerConfig::default();
    let mut ok = true;
    for g in ["tandem", "ipd", "stag_hunt"] {
        let game = GameDefinition::by_name(g)?;
        for rules in [[Rule::Pbos, Rule::Pbos], [Rule::Cgd, Rule::Cgd], [Rule::Pbos, Rule::Lola]] {
            let a = run_match(&game, rules, &cfg, 200, 99, 1)?;
            let b = run_match(&game, rules, &cfg, 200, 99, 1)?;
            ok &= a == b;
        }
    }
    Ok(CheckOutcome::new("bit-determinism", ok, String::new()))
}

/// Every check, in reporting order.
pub fn run_property_suite() -> Result<Vec<CheckOutcome>> {
    let checks: [fn() -> Result<CheckOutcome>; 12] = [
        check_finite_differences,
        check_mixed_partial_symmetry,
        check_lola_surrogate,
        check_p_zero_lookahead,
        check_fixed_points,
        check_zero_sum,
        check_cooperation_identity,
        check_k_guard,
        check_same_sign_drift,
        check_scale_separation,
        check_determinism,
        check_fd_rejects_zero_tolerance,
    ];
    checks.iter().map(|c| c()).collect()
}

/// The verifier is not vacuous: a zero tolerance cannot pass.
pub fn check_fd_rejects_zero_tolerance() -> Result<CheckOutcome> {
    let report = fd_verify(&tandem(), &[0.3], &[0.2], 1e-5, 0.0)?;
    Ok(CheckOutcome::new(
        "finite-difference check is strict",
        !report.passed,
        String::new(),
    ))
}
