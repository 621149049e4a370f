//! Exact Nash equilibria of 2×2 bimatrix games and the best-equilibrium
//! reference used by the random-game benchmark.

use serde::{Deserialize, Serialize};

use crate::games::BimatrixGame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NashKind {
    Pure,
    Mixed,
}

/// An equilibrium as the probabilities of row 0 (`p1`) and column 0 (`p2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashPoint {
    pub p1: f64,
    pub p2: f64,
    pub kind: NashKind,
    pub expected_losses: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NashSet {
    pub points: Vec<NashPoint>,
    /// Some player is indifferent against a pure action of the other, so the
    /// equilibria may form segments. Their extreme points are still listed.
    pub degenerate: bool,
}

fn point(bm: &BimatrixGame, p1: f64, p2: f64) -> NashPoint {
    let kind = if [p1, p2].iter().all(|&v| v == 0.0 || v == 1.0) {
        NashKind::Pure
    } else {
        NashKind::Mixed
    };
    NashPoint {
        p1,
        p2,
        kind,
        expected_losses: bm.expected_losses(&p1, &p2),
    }
}

/// Root in (0, 1) of `q·x + (1 − q)·y`, if any.
fn interior_root(x: f64, y: f64) -> Option<f64> {
    let den = y - x;
    if den == 0.0 {
        return None;
    }
    let q = y / den;
    (q > 0.0 && q < 1.0).then_some(q)
}

/// Probability of action 0 for a pure index.
fn prob(i: usize) -> f64 {
    if i == 0 {
        1.0
    } else {
        0.0
    }
}

/// All pure equilibria, the interior mixed equilibrium when it exists, and
/// the interior endpoints of equilibrium segments in degenerate games.
pub fn enumerate_nash(bm: &BimatrixGame) -> NashSet {
    let a = &bm.payoff1;
    let b = &bm.payoff2;
    let mut points = Vec::new();

    for i in 0..2 {
        for j in 0..2 {
            if a[i][j] >= a[1 - i][j] && b[i][j] >= b[i][1 - j] {
                points.push(point(bm, prob(i), prob(j)));
            }
        }
    }

    // player 1 indifferent at q, player 2 indifferent at p
    let q = interior_root(a[0][0] - a[1][0], a[0][1] - a[1][1]);
    let p = interior_root(b[0][0] - b[0][1], b[1][0] - b[1][1]);
    if let (Some(p), Some(q)) = (p, q) {
        points.push(point(bm, p, q));
    }

    // segment endpoints: one player pure and indifferent opponent mixing
    for i in 0..2 {
        if b[i][0] == b[i][1] {
            // row i must stay a best response against the column mix q
            if let Some(q) = interior_root(a[i][0] - a[1 - i][0], a[i][1] - a[1 - i][1]) {
                points.push(point(bm, prob(i), q));
            }
        }
    }
    for j in 0..2 {
        if a[0][j] == a[1][j] {
            if let Some(p) = interior_root(b[0][j] - b[0][1 - j], b[1][j] - b[1][1 - j]) {
                points.push(point(bm, p, prob(j)));
            }
        }
    }

    points.sort_by(|x, y| (x.p1, x.p2).partial_cmp(&(y.p1, y.p2)).unwrap());
    points.dedup_by(|x, y| (x.p1 - y.p1).abs() < 1e-12 && (x.p2 - y.p2).abs() < 1e-12);

    let degenerate = a[0][0] == a[1][0] || a[0][1] == a[1][1] || b[0][0] == b[0][1] || b[1][0] == b[1][1];
    NashSet { points, degenerate }
}

/// Best-equilibrium reference values of a game under both readings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestNe {
    /// min over equilibria of (L1 + L2)/2
    pub joint: f64,
    /// (min over equilibria of L1 + min over equilibria of L2)/2
    pub separate: f64,
}

pub fn best_ne(bm: &BimatrixGame) -> BestNe {
    let set = enumerate_nash(bm);
    let mut joint = f64::INFINITY;
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    for pt in &set.points {
        let [l1, l2] = pt.expected_losses;
        joint = joint.min(0.5 * (l1 + l2));
        min1 = min1.min(l1);
        min2 = min2.min(l2);
    }
    BestNe {
        joint,
        separate: 0.5 * (min1 + min2),
    }
}

/// Average of [`best_ne`] over a list of games.
pub fn best_ne_metric(games: &[BimatrixGame]) -> BestNe {
    assert!(!games.is_empty(), "best_ne_metric needs at least one game");
    let n = games.len() as f64;
    let (j, s) = games
        .iter()
        .map(best_ne)
        .fold((0.0, 0.0), |(j, s), b| (j + b.joint, s + b.separate));
    BestNe {
        joint: j / n,
        separate: s / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::random_bimatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Deviation oracle: no unilateral switch to any mix lowers the deviator's loss.
    fn is_equilibrium(bm: &BimatrixGame, pt: &NashPoint, rng: &mut ChaCha8Rng) -> bool {
        let [l1, l2] = bm.expected_losses(&pt.p1, &pt.p2);
        (0..100).all(|k| {
            let dev: f64 = match k {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random(),
            };
            let d1 = bm.expected_losses(&dev, &pt.p2)[0];
            let d2 = bm.expected_losses(&pt.p1, &dev)[1];
            d1 >= l1 - 1e-9 && d2 >= l2 - 1e-9
        })
    }

    #[test]
    fn stag_hunt_has_two_pure_and_one_mixed() {
        let set = enumerate_nash(&BimatrixGame::stag_hunt());
        let pure: Vec<_> = set.points.iter().filter(|p| p.kind == NashKind::Pure).collect();
        assert_eq!(pure.len(), 2);
        assert!(pure.iter().any(|p| p.p1 == 1.0 && p.p2 == 1.0));
        assert!(pure.iter().any(|p| p.p1 == 0.0 && p.p2 == 0.0));
        let mixed: Vec<_> = set.points.iter().filter(|p| p.kind == NashKind::Mixed).collect();
        assert_eq!(mixed.len(), 1);
        // indifference: 4q − 10(1−q) = 3q + (1−q) ⇒ q = 11/12
        assert!((mixed[0].p2 - 11.0 / 12.0).abs() < 1e-12);
        assert!(!set.degenerate);
    }

    #[test]
    fn matching_pennies_is_uniform_mixed() {
        let set = enumerate_nash(&BimatrixGame::matching_pennies());
        assert_eq!(set.points.len(), 1);
        let pt = set.points[0];
        assert_eq!((pt.p1, pt.p2, pt.kind), (0.5, 0.5, NashKind::Mixed));
    }

    #[test]
    fn stackelberg_unique_pure_down_left() {
        let set = enumerate_nash(&BimatrixGame::stackelberg_leader());
        assert_eq!(set.points.len(), 1);
        let pt = set.points[0];
        assert_eq!((pt.p1, pt.p2), (0.0, 1.0));
        assert_eq!(pt.expected_losses, [-2.0, -1.0]);
    }

    #[test]
    fn best_ne_examples() {
        assert_eq!(best_ne(&BimatrixGame::stag_hunt()).joint, -4.0);
        let zero = BimatrixGame::new([[0.0; 2]; 2], [[0.0; 2]; 2]);
        assert_eq!(best_ne_metric(&[zero]).joint, 0.0);
    }

    #[test]
    fn random_games_always_have_verified_equilibria() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..1000 {
            let bm = random_bimatrix(seed);
            let set = enumerate_nash(&bm);
            assert!(!set.points.is_empty(), "no equilibrium for {bm:?}");
            for pt in &set.points {
                assert!(is_equilibrium(&bm, pt, &mut rng), "{pt:?} in {bm:?}");
            }
        }
    }

    #[test]
    fn degenerate_game_lists_segment_endpoint() {
        // player 2 indifferent in row 0; player 1 prefers row 0 iff q ≥ 1/2
        let bm = BimatrixGame::new([[1.0, 0.0], [0.0, 1.0]], [[2.0, 2.0], [0.0, 1.0]]);
        let set = enumerate_nash(&bm);
        assert!(set.degenerate);
        assert!(set.points.iter().any(|p| p.p1 == 1.0 && (p.p2 - 0.5).abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for pt in &set.points {
            assert!(is_equilibrium(&bm, pt, &mut rng));
        }
    }
}
