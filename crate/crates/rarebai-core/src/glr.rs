//! The generalized likelihood ratio stopping statistic.
//!
//! At a batch end the empirical best arm `k*` is tested against its nearest
//! challenger:
//!
//! ```text
//!   Z = min over b != k* of  inf over x <= y of
//!       N_k* Kinf_L(p_hat_k*, x) + N_b Kinf_U(p_hat_b, y)
//! ```
//!
//! Both divergences are monotone in their targets, so the inner infimum is
//! attained at a common crossing mean in `[mean_b, mean_k*]` and reuses the
//! exact inner machinery on the empirical distributions. The divergences are
//! solved exactly here even when the sampling weights come from the
//! approximate problem.

use crate::exact::{inner_point, SolveError};
use crate::instance::{EmpiricalState, StateError};

/// Stopping threshold `beta(t, delta) = ln((K-1)/delta) + 5 ln(t+1) + 2`.
pub fn stopping_threshold(k: usize, t: u64, delta: f64) -> f64 {
    crate::math::ln((k as f64 - 1.0) / delta) + 5.0 * crate::math::ln(t as f64 + 1.0) + 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlrResult {
    /// Empirically best arm (lowest index on ties).
    pub best: usize,
    /// Challenger attaining the minimum.
    pub challenger: usize,
    pub z: f64,
}

/// Evaluate the statistic from the empirical state; `bounds` are the known
/// per-arm reward bounds `B_i gamma^(-alpha_i)`.
pub fn glr_statistic(state: &EmpiricalState, bounds: &[f64]) -> Result<GlrResult, SolveError> {
    let k = state.k();
    for arm in 0..k {
        if state.pulls(arm) == 0 {
            return Err(SolveError::BracketFailure {
                context: "unsampled arm in stopping statistic",
                lo: arm as f64,
                hi: k as f64,
            });
        }
    }
    let best = state.empirical_best();
    let best_dist = state
        .reward_distribution(best)
        .map_err(state_to_solve)?;
    let n_best = state.pulls(best) as f64;
    let mut z = f64::INFINITY;
    let mut challenger = usize::MAX;
    for b in 0..k {
        if b == best {
            continue;
        }
        let zb = if state.mean(b) >= state.mean(best) {
            0.0
        } else {
            let adv = state.reward_distribution(b).map_err(state_to_solve)?;
            inner_point(&best_dist, &adv, bounds[b], n_best, state.pulls(b) as f64, 1e-10)?.value
        };
        if zb < z {
            z = zb;
            challenger = b;
        }
    }
    Ok(GlrResult { best, challenger, z })
}

fn state_to_solve(e: StateError) -> SolveError {
    match e {
        StateError::NoSamples { arm } => SolveError::BracketFailure {
            context: "unsampled arm in stopping statistic",
            lo: arm as f64,
            hi: arm as f64,
        },
        StateError::ArmOutOfRange { arm, k } => SolveError::BracketFailure {
            context: "arm index out of range",
            lo: arm as f64,
            hi: k as f64,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ArmSpec, BanditInstance, EmpiricalState};
    use crate::kinf::oracle::{kinf_oracle, Direction};
    use crate::FiniteDistribution;

    fn instance() -> BanditInstance {
        BanditInstance::new(
            0.1,
            alloc::vec![
                ArmSpec::new(1.0, alloc::vec![(2.0, 0.5)], 3.0),
                ArmSpec::new(1.0, alloc::vec![(1.0, 0.5)], 3.0),
            ],
        )
    }

    #[test]
    fn threshold_closed_form() {
        // K = 2, t = 1, delta = 0.01: ln(100) + 5 ln 2 + 2.
        let b = stopping_threshold(2, 1, 0.01);
        assert!((b - (100.0f64.ln() + 5.0 * 2.0f64.ln() + 2.0)).abs() < 1e-12);
        assert!((b - 10.0709).abs() < 1e-4);
        // Increasing in t, decreasing in delta.
        assert!(stopping_threshold(2, 10, 0.01) > b);
        assert!(stopping_threshold(2, 1, 0.1) < b);
    }

    #[test]
    fn equal_means_give_zero() {
        let inst = instance();
        let mut state = EmpiricalState::new(&inst);
        for arm in 0..2 {
            for _ in 0..5 {
                state.record(arm, None);
            }
        }
        let bounds = [30.0, 30.0];
        let res = glr_statistic(&state, &bounds).unwrap();
        assert_eq!(res.z, 0.0);
        assert_eq!(res.best, 0); // lowest index on ties
    }

    #[test]
    fn unsampled_arm_is_an_error() {
        let inst = instance();
        let mut state = EmpiricalState::new(&inst);
        state.record(0, Some(2.0));
        assert!(glr_statistic(&state, &[30.0, 30.0]).is_err());
    }

    #[test]
    fn zero_best_arm_against_single_nonzero() {
        // Arm 1 all zeros, arm 2 one nonzero: k* = 2 and the challenger term
        // uses a point mass at zero, whose upper divergence has the
        // single-atom closed form.
        let inst = instance();
        let mut state = EmpiricalState::new(&inst);
        for _ in 0..10 {
            state.record(0, None);
        }
        for _ in 0..9 {
            state.record(1, None);
        }
        state.record(1, Some(1.0));
        let bounds = [inst.arms[0].reward_bound(0.1), inst.arms[1].reward_bound(0.1)];
        let res = glr_statistic(&state, &bounds).unwrap();
        assert_eq!(res.best, 1);
        assert!(res.z.is_finite() && res.z > 0.0);
        // Cross-check the challenger side against the primal oracle at the
        // solved crossing mean: reconstruct the inner objective directly.
        let best_dist = state.reward_distribution(1).unwrap();
        let adv_dist = state.reward_distribution(0).unwrap();
        let obj = |x: f64| {
            10.0 * kinf_oracle(&best_dist, x, bounds[1], Direction::Lower)
                + 10.0 * kinf_oracle(&adv_dist, x, bounds[0], Direction::Upper)
        };
        let mut grid_min = f64::INFINITY;
        let hi = state.mean(1);
        for s in 1..300 {
            let x = hi * s as f64 / 300.0;
            let v = obj(x);
            if v < grid_min {
                grid_min = v;
            }
        }
        assert!((res.z - grid_min).abs() < 1e-2 * grid_min.max(1.0), "z {} grid {}", res.z, grid_min);
    }

    #[test]
    fn statistic_scales_with_counts() {
        let inst = instance();
        let mut state = EmpiricalState::new(&inst);
        for _ in 0..20 {
            state.record(0, None);
        }
        for _ in 0..4 {
            state.record(0, Some(2.0));
        }
        for _ in 0..24 {
            state.record(1, None);
        }
        let bounds = [30.0, 30.0];
        let z1 = glr_statistic(&state, &bounds).unwrap().z;
        // Double every count: same frequencies, twice the statistic.
        let mut doubled = EmpiricalState::new(&inst);
        for _ in 0..40 {
            doubled.record(0, None);
        }
        for _ in 0..8 {
            doubled.record(0, Some(2.0));
        }
        for _ in 0..48 {
            doubled.record(1, None);
        }
        let z2 = glr_statistic(&doubled, &bounds).unwrap().z;
        assert!((z2 - 2.0 * z1).abs() < 1e-6 * z2, "z1 {z1} z2 {z2}");
        assert!(z2 >= z1);
    }

    #[test]
    fn works_on_raw_distributions_with_distinct_bounds() {
        // Smoke test that the reward-unit path with per-arm bounds stays
        // consistent with a hand-built finite distribution computation.
        let inst = instance();
        let mut state = EmpiricalState::new(&inst);
        for _ in 0..18 {
            state.record(0, None);
        }
        state.record(0, Some(2.0));
        state.record(0, Some(2.0));
        for _ in 0..20 {
            state.record(1, None);
        }
        let bounds = [inst.arms[0].reward_bound(0.1), inst.arms[1].reward_bound(0.1)];
        let res = glr_statistic(&state, &bounds).unwrap();
        let best = FiniteDistribution::new(&[(20.0, 0.1), (0.0, 0.9)]).unwrap();
        let adv = FiniteDistribution::new(&[(0.0, 1.0)]).unwrap();
        let direct = inner_point(&best, &adv, bounds[1], 20.0, 20.0, 1e-10).unwrap();
        assert!((res.z - direct.value).abs() < 1e-9);
    }
}
