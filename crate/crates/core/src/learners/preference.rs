//! Preference parameters: the modified-loss transform, the discounted
//! least-squares estimate of how the opponent's preference responds to one's
//! own, and the gradient of the predicted loss change with respect to `c`.

use crate::derivkit::DerivativeBundle;

/// Below this value of |S1·S2| both response coefficients are pinned to 1.
pub const K_GUARD: f64 = 0.01;

/// `L1' = L1 + c1·L2` and `L2' = L2 + c2·L1`, applied to every block.
pub fn modified_losses(bundle: &DerivativeBundle, c1: f64, c2: f64) -> DerivativeBundle {
    let [l1, l2] = &bundle.loss;
    DerivativeBundle {
        loss: [l1.plus_scaled(l2, c1), l2.plus_scaled(l1, c2)],
    }
}

/// Preference pair with its response estimator and decaying learning rate.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceState {
    pub c: [f64; 2],
    /// Up to two most recent recorded pairs, oldest first.
    pub history: Vec<[f64; 2]>,
    pub s: [f64; 2],
    pub r: f64,
    pub k: [f64; 2],
    pub beta: f64,
    pub t: usize,
}

impl PreferenceState {
    pub fn new(c: [f64; 2], beta0: f64) -> Self {
        Self {
            c,
            history: vec![c],
            s: [0.0; 2],
            r: 0.0,
            k: [1.0; 2],
            beta: beta0,
            t: 0,
        }
    }

    /// Append the current pair to the history window.
    pub fn record(&mut self) {
        self.history.push(self.c);
        if self.history.len() > 2 {
            self.history.remove(0);
        }
    }

    /// Update `S1, S2, r` from the latest recorded change and refresh `K`.
    ///
    /// With fewer than two recorded pairs there is no change to observe and
    /// the guard path applies.
    pub fn estimate_k(&mut self, gamma: f64) {
        if let [prev, last] = self.history[..] {
            let d1 = last[0] - prev[0];
            let d2 = last[1] - prev[1];
            self.s[0] = gamma * self.s[0] + d1 * d1;
            self.s[1] = gamma * self.s[1] + d2 * d2;
            self.r = gamma * self.r + d1 * d2;
        }
        if (self.s[0] * self.s[1]).abs() <= K_GUARD {
            self.k = [1.0, 1.0];
        } else {
            self.k = [self.r / self.s[0], self.r / self.s[1]];
        }
    }

    /// Whether the last K update used the estimate rather than the guard.
    pub fn guard_released(&self) -> bool {
        (self.s[0] * self.s[1]).abs() > K_GUARD
    }
}

/// `(∇_{c1} ΔL1, ∇_{c2} ΔL2)` from the unmodified loss derivatives, with the
/// opponent's preference tied to one's own through `K`.
pub fn c_gradients(raw: &DerivativeBundle, c: [f64; 2], k: [f64; 2], alpha: f64) -> [f64; 2] {
    let g11 = raw.grad(0, 0);
    let g21 = raw.grad(0, 1);
    let g12 = raw.grad(1, 0);
    let g22 = raw.grad(1, 1);

    let m1_block1 = g11 + g12 * c[0];
    let m1_block2 = g21 + g22 * c[0];
    let grad_c1 = m1_block1.dot(&(g12 * -alpha)) + m1_block2.dot(&(g21 * (-alpha * k[0])));

    let m2_block1 = g12 + g11 * c[1];
    let m2_block2 = g22 + g21 * c[1];
    let grad_c2 = m2_block1.dot(&(g12 * (-alpha * k[1]))) + m2_block2.dot(&(g21 * -alpha));

    [grad_c1, grad_c2]
}
