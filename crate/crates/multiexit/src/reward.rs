//! Per-pedestrian per-frame reward.
//!
//! Four components: progress toward the nearest open exit, alignment of the
//! collision-free velocity with the exit direction, smoothness between
//! consecutive collision-free velocities, and a constant per-frame time
//! penalty on non-terminal frames.

use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    /// Distance exponent, range (0, 1].
    pub w4: f64,
    /// Subtracted each non-terminal frame.
    pub penalty: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w1: 15.0,
            w2: 1.25,
            w3: 0.5,
            w4: 0.4,
            penalty: 2.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) {
        assert!(self.w4 > 0.0 && self.w4 <= 1.0, "w4 must lie in (0, 1]");
        assert!(
            self.w1.is_finite()
                && self.w2.is_finite()
                && self.w3.is_finite()
                && self.penalty.is_finite()
        );
    }
}

fn goal_term(p: Vec2, open_exits: &[Vec2], w4: f64) -> f64 {
    open_exits
        .iter()
        .map(|e| 1.0 - p.distance(*e).powf(w4))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Progress toward the nearest open exit: the best exit term at the current
/// position minus the best at the previous position.
pub fn goal_reward(p_now: Vec2, p_prev: Vec2, open_exits: &[Vec2], w4: f64) -> f64 {
    if open_exits.is_empty() {
        return 0.0;
    }
    goal_term(p_now, open_exits, w4) - goal_term(p_prev, open_exits, w4)
}

/// Best cosine-like alignment of the collision-free velocity with any open
/// exit direction, scaled by the maximum speed. Range [-1, 1] for
/// |opt_v| <= v_max.
pub fn alignment_reward(opt_v: Vec2, p: Vec2, open_exits: &[Vec2], v_max: f64) -> f64 {
    assert!(v_max > 0.0);
    let best = open_exits
        .iter()
        .filter_map(|e| (*e - p).normalized())
        .map(|dir| opt_v.dot(dir) / v_max)
        .fold(f64::NEG_INFINITY, f64::max);
    // No open exits, or all coincident with the pedestrian: contributes 0.
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Dot product of consecutive collision-free velocities. Magnitude-dependent
/// by construction; the first frame uses a zero previous velocity.
pub fn smooth_reward(opt_v_now: Vec2, opt_v_prev: Vec2) -> f64 {
    opt_v_now.dot(opt_v_prev)
}

/// Weighted aggregate of the three components plus the time penalty on
/// non-terminal frames.
pub fn total_reward(
    goal: f64,
    alignment: f64,
    smooth: f64,
    weights: &RewardWeights,
    terminal: bool,
) -> f64 {
    let penalty = if terminal { 0.0 } else { -weights.penalty };
    weights.w1 * goal + weights.w2 * alignment + weights.w3 * smooth + penalty
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EXIT: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[test]
    fn goal_reward_zero_when_stationary() {
        let p = Vec2::new(3.0, 4.0);
        assert_eq!(goal_reward(p, p, &[EXIT], 0.4), 0.0);
    }

    #[test]
    fn goal_reward_single_exit_distance_drop() {
        // Distance 10 -> 9: reward 10^0.4 - 9^0.4.
        let r = goal_reward(Vec2::new(9.0, 0.0), Vec2::new(10.0, 0.0), &[EXIT], 0.4);
        let expected = 10.0_f64.powf(0.4) - 9.0_f64.powf(0.4);
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.10366).abs() < 1e-5);
    }

    #[test]
    fn goal_reward_nearer_exit_dominates() {
        // Exits at distances (5, 20) now and (6, 20) previously.
        let far = Vec2::new(0.0, -20.0);
        let r = goal_reward(Vec2::new(5.0, 0.0), Vec2::new(6.0, 0.0), &[EXIT, far], 0.4);
        let expected = 6.0_f64.powf(0.4) - 5.0_f64.powf(0.4);
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.14402).abs() < 1e-5);
    }

    #[test]
    fn alignment_extremes() {
        let p = Vec2::new(10.0, 0.0);
        let v_max = 2.5;
        let toward = (EXIT - p).normalized().unwrap() * v_max;
        assert!((alignment_reward(toward, p, &[EXIT], v_max) - 1.0).abs() < 1e-12);
        assert_eq!(alignment_reward(Vec2::ZERO, p, &[EXIT], v_max), 0.0);
    }

    #[test]
    fn alignment_forty_five_degrees() {
        let p = Vec2::new(10.0, 0.0); // exit direction is -x
        let v = Vec2::new(-1.0, 1.0).normalized().unwrap() * 2.5;
        let r = alignment_reward(v, p, &[EXIT], 2.5);
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn alignment_skips_coincident_exit() {
        // Pedestrian on the exit center: direction undefined, term skipped.
        let r = alignment_reward(Vec2::new(1.0, 0.0), EXIT, &[EXIT], 2.5);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn smooth_reward_examples() {
        assert_eq!(smooth_reward(Vec2::new(2.0, 0.0), Vec2::new(0.0, 2.0)), 0.0);
        assert_eq!(smooth_reward(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)), 1.0);
        assert_eq!(smooth_reward(Vec2::new(2.0, 0.0), Vec2::new(2.0, 0.0)), 4.0);
    }

    #[test]
    fn total_reward_composite_example() {
        let w = RewardWeights::default();
        let goal = 10.0_f64.powf(0.4) - 9.0_f64.powf(0.4);
        let r = total_reward(goal, 1.0, 1.0, &w, false);
        assert!((r - 0.80490).abs() < 1e-5, "{r}");
        assert_eq!(total_reward(0.0, 0.0, 0.0, &w, true), 0.0);
        assert_eq!(total_reward(0.0, 0.0, 0.0, &w, false), -2.5);
    }

    proptest! {
        #[test]
        fn goal_reward_is_antisymmetric(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
        ) {
            let a = Vec2::new(ax, ay);
            let b = Vec2::new(bx, by);
            let exits = [EXIT, Vec2::new(30.0, 30.0)];
            let fwd = goal_reward(a, b, &exits, 0.4);
            let rev = goal_reward(b, a, &exits, 0.4);
            prop_assert!((fwd + rev).abs() < 1e-9);
        }

        #[test]
        fn goal_reward_telescopes(
            pts in proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 2..20),
        ) {
            let path: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let exits = [EXIT, Vec2::new(30.0, 30.0)];
            let total: f64 = path.windows(2)
                .map(|w| goal_reward(w[1], w[0], &exits, 0.4))
                .sum();
            let direct = goal_reward(*path.last().unwrap(), path[0], &exits, 0.4);
            prop_assert!((total - direct).abs() < 1e-8);
        }

        #[test]
        fn alignment_stays_in_unit_range(
            vx in -1.0..1.0f64, vy in -1.0..1.0f64,
            px in -50.0..50.0f64, py in -50.0..50.0f64,
        ) {
            let v_max = 2.5;
            let v = Vec2::new(vx, vy).clamp_norm(1.0) * v_max;
            let r = alignment_reward(v, Vec2::new(px, py), &[EXIT], v_max);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }
}
