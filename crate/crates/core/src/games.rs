//! The game suite: Tandem, the iterated prisoner's dilemma, the Ultimatum
//! game, and 2×2 bimatrix games (Matching Pennies, Stackelberg Leader, Stag
//! Hunt and randomly drawn ones).
//!
//! Every loss is minus the expected payoff. Probability-valued strategies are
//! logits squashed by the logistic function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derivkit::Real;
use crate::error::{Error, Result};

/// Payoff matrices of a 2×2 game; player 1 picks the row, player 2 the column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimatrixGame {
    pub payoff1: [[f64; 2]; 2],
    pub payoff2: [[f64; 2]; 2],
}

impl BimatrixGame {
    pub fn new(payoff1: [[f64; 2]; 2], payoff2: [[f64; 2]; 2]) -> Self {
        Self { payoff1, payoff2 }
    }

    /// Expected losses when row 0 is played with probability `p` and column 0
    /// with probability `q`.
    pub fn expected_losses<S: Real>(&self, p: &S, q: &S) -> [S; 2] {
        let np = (-p.clone()).add_cst(1.0);
        let nq = (-q.clone()).add_cst(1.0);
        let weights = [p.clone() * q.clone(), p.clone() * nq.clone(), np.clone() * q.clone(), np * nq];
        let cell = |m: &[[f64; 2]; 2], k: usize| m[k / 2][k % 2];
        let mut out = [S::cst(0.0), S::cst(0.0)];
        for (k, w) in weights.iter().enumerate() {
            out[0] = out[0].clone() - w.scale(cell(&self.payoff1, k));
            out[1] = out[1].clone() - w.scale(cell(&self.payoff2, k));
        }
        out
    }

    pub fn matching_pennies() -> Self {
        Self::new([[1.0, -1.0], [-1.0, 1.0]], [[-1.0, 1.0], [1.0, -1.0]])
    }

    pub fn stackelberg_leader() -> Self {
        Self::new([[1.0, 3.0], [2.0, 4.0]], [[0.0, 2.0], [1.0, 0.0]])
    }

    pub fn stag_hunt() -> Self {
        Self::new([[4.0, -10.0], [3.0, 1.0]], [[4.0, 3.0], [-10.0, 1.0]])
    }

    pub fn prisoners_dilemma() -> Self {
        Self::new([[-1.0, -3.0], [0.0, -2.0]], [[-1.0, 0.0], [-3.0, -2.0]])
    }
}

/// Iterated prisoner's dilemma settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpdSpec {
    pub gamma: f64,
}

impl Default for IpdSpec {
    fn default() -> Self {
        Self { gamma: 0.96 }
    }
}

/// Joint-action states, player 1's action first.
pub const IPD_STATES: [&str; 4] = ["CC", "CD", "DC", "DD"];

/// Per-step stage losses by state, from the payoff table with sign flipped.
const IPD_LOSS1: [f64; 4] = [1.0, 3.0, 0.0, 2.0];
const IPD_LOSS2: [f64; 4] = [1.0, 0.0, 3.0, 2.0];

/// Policy slot each player reads in joint state `s`. Slots are
/// `[start, CC, CD, DC, DD]` from the player's own perspective (own action
/// first), so player 2 reads CD and DC swapped.
const IPD_SLOT1: [usize; 4] = [1, 2, 3, 4];
const IPD_SLOT2: [usize; 4] = [1, 3, 2, 4];

/// Normalized discounted IPD losses.
///
/// Actions form a Markov chain over the four joint states. With `p0` the
/// first-round joint-action distribution and `P` the transition matrix, the
/// discounted state occupancy is `x = (I − γPᵀ)⁻¹ p0` and
/// `L_i = (1 − γ)·xᵀ r_i`; a constant stage loss `v` therefore yields `v`.
pub fn ipd_exact_loss<S: Real>(theta1: &[S], theta2: &[S], spec: &IpdSpec) -> Result<[S; 2]> {
    if theta1.len() != 5 || theta2.len() != 5 {
        return Err(Error::Config(format!(
            "IPD policies need 5 logits each, got {} and {}",
            theta1.len(),
            theta2.len()
        )));
    }
    let gamma = spec.gamma;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("IPD discount {gamma} outside [0, 1)")));
    }
    let c1: Vec<S> = theta1.iter().map(Real::sigmoid).collect();
    let c2: Vec<S> = theta2.iter().map(Real::sigmoid).collect();
    let joint = |a: &S, b: &S| -> [S; 4] {
        let na = (-a.clone()).add_cst(1.0);
        let nb = (-b.clone()).add_cst(1.0);
        [a.clone() * b.clone(), a.clone() * nb.clone(), na.clone() * b.clone(), na * nb]
    };
    let p0 = joint(&c1[0], &c2[0]);
    // a[i][j] = δ_ij − γ·P[j][i]
    let mut a: Vec<Vec<S>> = vec![vec![S::cst(0.0); 4]; 4];
    for s in 0..4 {
        let row = joint(&c1[IPD_SLOT1[s]], &c2[IPD_SLOT2[s]]);
        for (t, prob) in row.into_iter().enumerate() {
            a[t][s] = -prob.scale(gamma);
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i].add_cst(1.0);
    }
    let x = solve_dominant(a, p0.to_vec())?;
    let mut l1 = S::cst(0.0);
    let mut l2 = S::cst(0.0);
    for (s, occ) in x.iter().enumerate() {
        l1 = l1 + occ.scale(IPD_LOSS1[s]);
        l2 = l2 + occ.scale(IPD_LOSS2[s]);
    }
    Ok([l1.scale(1.0 - gamma), l2.scale(1.0 - gamma)])
}

/// Gaussian elimination without pivoting. `I − γPᵀ` is strictly column
/// diagonally dominant for γ < 1, which keeps every pivot away from zero.
fn solve_dominant<S: Real>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    for k in 0..n {
        let pivot = a[k][k].clone();
        if pivot.re().abs() < 1e-300 || !pivot.re().is_finite() {
            return Err(Error::Numerical("singular I - γP in IPD loss".into()));
        }
        let inv = pivot.recip();
        for i in (k + 1)..n {
            let f = a[i][k].clone() * inv.clone();
            for j in (k + 1)..n {
                a[i][j] = a[i][j].clone() - f.clone() * a[k][j].clone();
            }
            b[i] = b[i].clone() - f * b[k].clone();
        }
    }
    let mut x = vec![S::cst(0.0); n];
    for k in (0..n).rev() {
        let mut acc = b[k].clone();
        for j in (k + 1)..n {
            acc = acc - a[k][j].clone() * x[j].clone();
        }
        x[k] = acc / a[k][k].clone();
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GameKind {
    Tandem,
    Ipd(IpdSpec),
    Ultimatum,
    Bimatrix(BimatrixGame),
}

/// A two-player differentiable game with twice-differentiable losses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDefinition {
    pub name: String,
    pub kind: GameKind,
}

impl GameDefinition {
    pub fn dims(&self) -> (usize, usize) {
        match self.kind {
            GameKind::Ipd(_) => (5, 5),
            _ => (1, 1),
        }
    }

    /// `(L1, L2)` at `(theta1, theta2)` in any scalar type.
    pub fn losses<S: Real>(&self, theta1: &[S], theta2: &[S]) -> Result<[S; 2]> {
        let (d1, d2) = self.dims();
        if theta1.len() != d1 || theta2.len() != d2 {
            return Err(Error::Config(format!(
                "{} expects parameter blocks of length ({d1}, {d2}), got ({}, {})",
                self.name,
                theta1.len(),
                theta2.len()
            )));
        }
        match &self.kind {
            GameKind::Tandem => {
                let (x, y) = (&theta1[0], &theta2[0]);
                let s2 = (x.clone() + y.clone()).square();
                Ok([s2.clone() - x.scale(2.0), s2 - y.scale(2.0)])
            }
            GameKind::Ipd(spec) => ipd_exact_loss(theta1, theta2, spec),
            GameKind::Ultimatum => {
                let fair = theta1[0].sigmoid();
                let accept = theta2[0].sigmoid();
                let unfair_accepted = (-fair.clone()).add_cst(1.0) * accept;
                Ok([
                    -(fair.scale(5.0) + unfair_accepted.scale(8.0)),
                    -(fair.scale(5.0) + unfair_accepted.scale(2.0)),
                ])
            }
            GameKind::Bimatrix(bm) => Ok(bm.expected_losses(&theta1[0].sigmoid(), &theta2[0].sigmoid())),
        }
    }

    /// Plain-valued losses.
    pub fn eval(&self, theta1: &[f64], theta2: &[f64]) -> Result<[f64; 2]> {
        self.losses(theta1, theta2)
    }

    /// Underlying payoff table for bimatrix-backed games.
    pub fn bimatrix(&self) -> Option<&BimatrixGame> {
        match &self.kind {
            GameKind::Bimatrix(bm) => Some(bm),
            _ => None,
        }
    }

    /// Look up a suite game by identifier.
    pub fn by_name(id: &str) -> Result<Self> {
        match id {
            "tandem" => Ok(tandem()),
            "ipd" => Ok(ipd()),
            "matching_pennies" | "mp" => Ok(matching_pennies()),
            "ultimatum" => Ok(ultimatum()),
            "stackelberg" | "stackelberg_leader" => Ok(stackelberg_leader()),
            "stag_hunt" => Ok(stag_hunt()),
            other => Err(Error::Config(format!("unknown game '{other}'"))),
        }
    }
}

/// Identifiers of the six suite games, in reporting order.
pub const SUITE: [&str; 6] = ["tandem", "ipd", "ultimatum", "matching_pennies", "stackelberg", "stag_hunt"];

pub fn tandem() -> GameDefinition {
    GameDefinition {
        name: "tandem".into(),
        kind: GameKind::Tandem,
    }
}

pub fn ipd() -> GameDefinition {
    GameDefinition {
        name: "ipd".into(),
        kind: GameKind::Ipd(IpdSpec::default()),
    }
}

pub fn ultimatum() -> GameDefinition {
    GameDefinition {
        name: "ultimatum".into(),
        kind: GameKind::Ultimatum,
    }
}

pub fn matching_pennies() -> GameDefinition {
    named_bimatrix("matching_pennies", BimatrixGame::matching_pennies())
}

pub fn stackelberg_leader() -> GameDefinition {
    named_bimatrix("stackelberg", BimatrixGame::stackelberg_leader())
}

pub fn stag_hunt() -> GameDefinition {
    named_bimatrix("stag_hunt", BimatrixGame::stag_hunt())
}

pub fn bimatrix_to_game(bm: BimatrixGame) -> GameDefinition {
    named_bimatrix("bimatrix", bm)
}

fn named_bimatrix(name: &str, bm: BimatrixGame) -> GameDefinition {
    GameDefinition {
        name: name.into(),
        kind: GameKind::Bimatrix(bm),
    }
}

/// A 2×2 game with every payoff an integer drawn uniformly from [−7, 7].
pub fn random_bimatrix(seed: u64) -> BimatrixGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for row in m.iter_mut() {
            for cell in row.iter_mut() {
                *cell = rng.random_range(-7i32..=7) as f64;
            }
        }
        m
    };
    let payoff1 = draw();
    let payoff2 = draw();
    BimatrixGame { payoff1, payoff2 }
}
