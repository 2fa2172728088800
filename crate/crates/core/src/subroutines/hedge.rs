use crate::error::{CocoError, Result};
use crate::linalg::{dot, norm_inf};

/// AdaHedge: exponential weights with learning rate `ln N / Delta`, where `Delta` is the
/// cumulative mixability gap. Needs no bound on the loss range.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaHedge {
    cumulative_losses: Vec<f64>,
    mix_gap: f64,
    weights: Vec<f64>,
}

/// What happened in one AdaHedge round.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeRound {
    /// Weights the round was played with.
    pub played: Vec<f64>,
    /// Learning rate the round was played with (`+inf` before any mixability gap).
    pub learning_rate: f64,
    /// `<w, l>`.
    pub expected_loss: f64,
    pub mix_loss: f64,
    pub mixability_gap: f64,
}

impl AdaHedge {
    pub fn new(num_experts: usize) -> Result<Self> {
        if num_experts == 0 {
            return Err(CocoError::InvalidParameter("AdaHedge needs at least one expert".into()));
        }
        Ok(Self {
            cumulative_losses: vec![0.0; num_experts],
            mix_gap: 0.0,
            weights: vec![1.0 / num_experts as f64; num_experts],
        })
    }

    pub fn num_experts(&self) -> usize {
        self.weights.len()
    }

    /// Distribution for the next round.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cumulative_losses(&self) -> &[f64] {
        &self.cumulative_losses
    }

    pub fn cumulative_mix_gap(&self) -> f64 {
        self.mix_gap
    }

    pub fn learning_rate(&self) -> f64 {
        learning_rate(self.num_experts(), self.mix_gap)
    }

    pub fn step(&mut self, losses: &[f64]) -> Result<HedgeRound> {
        if losses.len() != self.num_experts() {
            return Err(CocoError::LengthMismatch {
                expected: self.num_experts(),
                found: losses.len(),
            });
        }
        if losses.iter().any(|l| l.is_nan()) {
            return Err(CocoError::NonFinite("hedge loss (NaN)"));
        }
        if losses.iter().any(|l| l.is_infinite()) {
            return Err(CocoError::NonFinite("hedge loss"));
        }

        let eta = self.learning_rate();
        let w = &self.weights;
        let expected_loss = dot(w, losses);
        // Smallest loss over the support keeps the log-sum-exp stable and gives the
        // eta = +inf limit directly.
        let support_min = w
            .iter()
            .zip(losses)
            .filter(|(wi, _)| **wi > 0.0)
            .map(|(_, l)| *l)
            .fold(f64::INFINITY, f64::min);
        let mix_loss = if eta.is_infinite() {
            support_min
        } else {
            let s: f64 = w
                .iter()
                .zip(losses)
                .map(|(wi, l)| wi * (-eta * (l - support_min)).exp())
                .sum();
            support_min - s.ln() / eta
        };
        let mixability_gap = (expected_loss - mix_loss).max(0.0);

        let round = HedgeRound {
            played: self.weights.clone(),
            learning_rate: eta,
            expected_loss,
            mix_loss,
            mixability_gap,
        };

        self.mix_gap += mixability_gap;
        for (cum, l) in self.cumulative_losses.iter_mut().zip(losses) {
            *cum += l;
        }
        self.weights = weights_for(&self.cumulative_losses, self.learning_rate());
        Ok(round)
    }
}

fn learning_rate(num_experts: usize, mix_gap: f64) -> f64 {
    if mix_gap > 0.0 {
        (num_experts as f64).ln() / mix_gap
    } else {
        f64::INFINITY
    }
}

/// `w_i ∝ exp(-eta (L_i - min L))`; uniform over the minimisers when `eta = +inf`.
fn weights_for(cumulative_losses: &[f64], eta: f64) -> Vec<f64> {
    let min = cumulative_losses
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = if eta.is_infinite() {
        cumulative_losses
            .iter()
            .map(|l| if *l == min { 1.0 } else { 0.0 })
            .collect()
    } else {
        cumulative_losses
            .iter()
            .map(|l| (-eta * (l - min)).exp())
            .collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// `2 sqrt((4 + ln N) * sum_t ||l_t||_inf^2)`.
pub fn adahedge_regret_bound(num_experts: usize, loss_inf_sq_sum: f64) -> f64 {
    2.0 * ((4.0 + (num_experts as f64).ln()) * loss_inf_sq_sum).sqrt()
}

/// Accumulates `||l||_inf^2` for a loss stream.
pub(crate) fn loss_inf_sq(losses: &[f64]) -> f64 {
    let m = norm_inf(losses);
    m * m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_losses_leave_weights_unchanged() {
        let mut h = AdaHedge::new(3).unwrap();
        h.step(&[0.0, 1.0, 3.0]).unwrap();
        h.step(&[2.0, 0.0, -1.0]).unwrap();
        let before = h.weights().to_vec();
        let r = h.step(&[0.7, 0.7, 0.7]).unwrap();
        assert_eq!(r.mixability_gap, 0.0);
        for (a, b) in before.iter().zip(h.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn first_round_is_uniform_then_favours_the_better_expert() {
        let mut h = AdaHedge::new(2).unwrap();
        let r = h.step(&[0.0, 1.0]).unwrap();
        assert_eq!(r.played, vec![0.5, 0.5]);
        assert!(r.learning_rate.is_infinite());
        // eta = inf: mix loss is the best loss on the support, gap = 0.5.
        assert_eq!(r.mix_loss, 0.0);
        assert_eq!(r.mixability_gap, 0.5);
        // eta = ln 2 / 0.5 after the update.
        assert!((h.learning_rate() - 2.0 * 2.0_f64.ln()).abs() < 1e-15);
        let w = h.weights();
        assert!(w[0] > w[1]);
        // exp(-eta * 1) = exp(-2 ln 2) = 1/4 -> weights (4/5, 1/5).
        assert!((w[0] - 0.8).abs() < 1e-12 && (w[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ties_split_uniformly_before_any_gap() {
        let mut h = AdaHedge::new(3).unwrap();
        h.step(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(h.weights(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn nan_loss_rejected() {
        let mut h = AdaHedge::new(2).unwrap();
        assert!(h.step(&[f64::NAN, 0.0]).is_err());
        assert!(h.step(&[0.0]).is_err());
        assert!(AdaHedge::new(0).is_err());
    }

    #[test]
    fn single_expert_never_accumulates_gap() {
        let mut h = AdaHedge::new(1).unwrap();
        for l in [3.0, -2.0, 100.0] {
            let r = h.step(&[l]).unwrap();
            assert_eq!(r.mixability_gap, 0.0);
        }
        assert_eq!(h.weights(), &[1.0]);
    }

    #[test]
    fn gap_non_negative_and_jensen() {
        let mut h = AdaHedge::new(4).unwrap();
        let mut prev_gap = 0.0;
        for t in 0..200 {
            let x = t as f64;
            let l = [x.sin(), (1.7 * x).cos() * 3.0, 0.01 * x, -(0.3 * x).sin()];
            let r = h.step(&l).unwrap();
            assert!(r.mixability_gap >= 0.0);
            assert!(r.expected_loss >= r.mix_loss - 1e-12);
            assert!(h.cumulative_mix_gap() >= prev_gap);
            prev_gap = h.cumulative_mix_gap();
            let s: f64 = h.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
