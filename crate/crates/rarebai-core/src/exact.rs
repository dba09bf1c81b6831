//! The exact max-min sample-allocation problem.
//!
//! For weights `w` on the simplex and each adversary arm `i`, the inner
//! problem is
//!
//! ```text
//!   P_i(w) = inf over x in [mu_i, mu_1] of
//!            w_1 Kinf_L(p_1, x) + w_i Kinf_U(p_i, x)
//! ```
//!
//! with the upper problem bounded by the adversary's known reward bound.
//! The outer problem maximizes `min_i P_i` over the simplex; at the optimum
//! the `P_i` equalize and the envelope-gradient ratios sum to one. The
//! solver parameterizes by the common level `v`, matches each `P_i` to `v`
//! by bisection on `w_i / w_1`, and bisects the level until the ratio-sum
//! condition holds.

use alloc::vec::Vec;

use crate::dist::FiniteDistribution;
use crate::instance::BanditInstance;
use crate::kinf::{kinf_lower, kinf_upper, KinfError};
use crate::math;
use crate::root::{brent_min, safeguarded_root, RootError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("best mean is not unique")]
    NoUniqueBest,
    #[error("degenerate mean interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("bracket failure in {context} on [{lo}, {hi}]")]
    BracketFailure { context: &'static str, lo: f64, hi: f64 },
    #[error(
        "no convergence after {iterations} iterations (condition residual {residual}, spread {spread})"
    )]
    NonConvergence { iterations: usize, residual: f64, spread: f64 },
    #[error("delta {0} outside (0, 1)")]
    BadDelta(f64),
    #[error(transparent)]
    Kinf(#[from] KinfError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Knobs shared by the exact and approximate outer solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveTolerances {
    /// Residual allowed in the ratio-sum optimality condition.
    pub condition_residual: f64,
    /// Relative spread allowed between the equalized inner values.
    pub equalization_spread: f64,
    /// Tolerance on inner one-dimensional minimizations over `x`.
    pub x_tol: f64,
    /// Cap on outer-level bisection steps.
    pub outer_cap: usize,
    /// Cap on per-adversary bisection steps.
    pub inner_cap: usize,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        Self {
            condition_residual: 1e-6,
            equalization_spread: 1e-6,
            x_tol: 1e-10,
            outer_cap: 200,
            inner_cap: 200,
        }
    }
}

impl SolveTolerances {
    pub fn relaxed(&self) -> Self {
        Self {
            condition_residual: self.condition_residual * 100.0,
            equalization_spread: self.equalization_spread * 100.0,
            x_tol: self.x_tol * 100.0,
            ..*self
        }
    }
}

/// Solved inner problem for one adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub adversary: usize,
    /// Crossing mean where the two tilted distributions meet.
    pub x_star: f64,
    /// `P_i` at the supplied weights.
    pub value: f64,
    /// Best-arm dual multiplier at `x_star`.
    pub lambda_l1: f64,
    /// Adversary dual multiplier at `x_star`.
    pub lambda_u: f64,
    /// `Kinf_L(p_1, x_star)`, the derivative of `P_i` in `w_1`.
    pub grad_w1: f64,
    /// `Kinf_U(p_i, x_star)`, the derivative of `P_i` in `w_i`.
    pub grad_wi: f64,
    pub k_1i: f64,
    pub k_i: f64,
    pub c_1i: f64,
    pub c_i: f64,
}

/// Envelope-theorem gradient of `P_i` at the solved point.
pub fn envelope_gradient(inner: &InnerSolution) -> (f64, f64) {
    (inner.grad_w1, inner.grad_wi)
}

/// Solved outer problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    pub best: usize,
    pub weights: Vec<f64>,
    pub value: f64,
    pub inner: Vec<InnerSolution>,
    /// `|sum_i grad ratio - 1|` at the returned weights.
    pub condition_residual: f64,
    /// `max_{i,j} |P_i - P_j| / value` at the returned weights.
    pub equalization_spread: f64,
}

/// Inner minimization engine over plain reward distributions; also used by
/// the stopping statistic on empirical data.
pub(crate) struct InnerPoint {
    pub x_star: f64,
    pub value: f64,
    pub value_l: f64,
    pub value_u: f64,
    pub lambda_l: f64,
    pub lambda_u: f64,
}

pub(crate) fn inner_point(
    best: &FiniteDistribution,
    adv: &FiniteDistribution,
    adv_bound: f64,
    w_best: f64,
    w_adv: f64,
    x_tol: f64,
) -> Result<InnerPoint, SolveError> {
    let mu_best = best.mean();
    let mu_adv = adv.mean();
    let hi = mu_best.min(adv_bound * (1.0 - 1e-12));
    let lo = mu_adv.max(1e-12 * hi.max(1.0));
    if !(hi > lo) {
        // Means already crossed (or equal): the inner value is zero at the
        // shared point.
        return Ok(InnerPoint {
            x_star: mu_best.min(hi),
            value: 0.0,
            value_l: 0.0,
            value_u: 0.0,
            lambda_l: 0.0,
            lambda_u: 0.0,
        });
    }
    if w_best == 0.0 {
        let sol_l = kinf_lower(best, lo)?;
        return Ok(InnerPoint {
            x_star: lo,
            value: 0.0,
            value_l: sol_l.value,
            value_u: 0.0,
            lambda_l: sol_l.lambda,
            lambda_u: 0.0,
        });
    }
    if w_adv == 0.0 {
        let sol_u = kinf_upper(adv, hi, adv_bound)?;
        return Ok(InnerPoint {
            x_star: hi,
            value: 0.0,
            value_l: 0.0,
            value_u: sol_u.value,
            lambda_l: 0.0,
            lambda_u: sol_u.lambda,
        });
    }
    let objective = |x: f64| -> f64 {
        let l = kinf_lower(best, x).map(|s| s.value).unwrap_or(f64::INFINITY);
        let u = kinf_upper(adv, x, adv_bound).map(|s| s.value).unwrap_or(f64::INFINITY);
        w_best * l + w_adv * u
    };
    let (x_star, value) = brent_min(objective, lo, hi, x_tol, 400);
    let sol_l = kinf_lower(best, x_star)?;
    let sol_u = kinf_upper(adv, x_star, adv_bound)?;
    Ok(InnerPoint {
        x_star,
        value,
        value_l: sol_l.value,
        value_u: sol_u.value,
        lambda_l: sol_l.lambda,
        lambda_u: sol_u.lambda,
    })
}

/// Solve the inner problem for `adversary` against `best` at weights
/// `(w_best, w_adv)` and package the reformulation scalars.
pub fn inner_exact(
    instance: &BanditInstance,
    best: usize,
    adversary: usize,
    w_best: f64,
    w_adv: f64,
) -> Result<InnerSolution, SolveError> {
    inner_exact_tol(instance, best, adversary, w_best, w_adv, 1e-10)
}

fn inner_exact_tol(
    instance: &BanditInstance,
    best: usize,
    adversary: usize,
    w_best: f64,
    w_adv: f64,
    x_tol: f64,
) -> Result<InnerSolution, SolveError> {
    let mu_best = instance.arms[best].mean();
    let mu_adv = instance.arms[adversary].mean();
    if !(mu_best > mu_adv) {
        return Err(SolveError::DegenerateInterval { lo: mu_adv, hi: mu_best });
    }
    let best_dist = instance.arms[best].reward_distribution(instance.gamma);
    let adv_dist = instance.arms[adversary].reward_distribution(instance.gamma);
    let adv_bound = instance.arms[adversary].reward_bound(instance.gamma);
    let pt = inner_point(&best_dist, &adv_dist, adv_bound, w_best, w_adv, x_tol)?;
    let ga1 = math::gamma_pow(instance.gamma, -instance.arms[best].alpha);
    let gai = math::gamma_pow(instance.gamma, -instance.arms[adversary].alpha);
    Ok(InnerSolution {
        adversary,
        x_star: pt.x_star,
        value: pt.value,
        lambda_l1: pt.lambda_l,
        lambda_u: pt.lambda_u,
        grad_w1: pt.value_l,
        grad_wi: pt.value_u,
        k_1i: 1.0 - pt.x_star * pt.lambda_l,
        k_i: 1.0 + pt.x_star * pt.lambda_u,
        c_1i: pt.lambda_l * ga1,
        c_i: pt.lambda_u * gai,
    })
}

struct AdversaryCtx {
    index: usize,
    dist: FiniteDistribution,
    bound: f64,
    mean: f64,
}

/// Maximize `min_i P_i` over the simplex by level bisection.
pub fn solve_exact_maxmin(
    instance: &BanditInstance,
    tol: &SolveTolerances,
) -> Result<MaxMinSolution, SolveError> {
    if !instance.unique_best() {
        return Err(SolveError::NoUniqueBest);
    }
    let best = instance.best_arm();
    let best_dist = instance.arms[best].reward_distribution(instance.gamma);
    let adversaries: Vec<AdversaryCtx> = instance
        .arms
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(i, arm)| AdversaryCtx {
            index: i,
            dist: arm.reward_distribution(instance.gamma),
            bound: arm.reward_bound(instance.gamma),
            mean: arm.mean(),
        })
        .collect();
    let mu_second = adversaries.iter().map(|a| a.mean).fold(f64::NEG_INFINITY, f64::max);
    // The level can never reach the best arm's divergence at the runner-up
    // mean: that is the supremum of P_2 over all weight ratios.
    let v_max = kinf_lower(&best_dist, mu_second.max(1e-12))?.value;
    if !(v_max > 0.0) {
        return Err(SolveError::DegenerateInterval { lo: mu_second, hi: instance.arms[best].mean() });
    }

    // Match P_i to the level by bisection on r = w_i / w_1.
    let equalize = |ctx: &AdversaryCtx, v: f64| -> Result<(f64, InnerPoint), SolveError> {
        let eval = |r: f64| -> Result<InnerPoint, SolveError> {
            inner_point(&best_dist, &ctx.dist, ctx.bound, 1.0, r, tol.x_tol)
        };
        let mut r_hi = 1.0;
        let mut p_hi = eval(r_hi)?;
        let mut doublings = 0;
        while p_hi.value < v {
            r_hi *= 4.0;
            p_hi = eval(r_hi)?;
            doublings += 1;
            if doublings > tol.inner_cap {
                return Err(SolveError::BracketFailure {
                    context: "equalization weight ratio",
                    lo: 0.0,
                    hi: r_hi,
                });
            }
        }
        let r = safeguarded_root(
            |r| eval(r).map(|p| p.value - v).unwrap_or(f64::INFINITY),
            0.0,
            r_hi,
            0.0,
            1e-9 * v,
            tol.inner_cap,
        )?;
        Ok((r, eval(r)?))
    };

    // Ratio-sum condition as a function of the level.
    let condition = |v: f64| -> Result<(f64, Vec<(f64, InnerPoint)>), SolveError> {
        let mut solved = Vec::with_capacity(adversaries.len());
        let mut sum = 0.0;
        for ctx in &adversaries {
            let (r, pt) = equalize(ctx, v)?;
            sum += if pt.value_u > 0.0 { pt.value_l / pt.value_u } else { f64::INFINITY };
            solved.push((r, pt));
        }
        Ok((sum - 1.0, solved))
    };

    let mut lo = v_max * 1e-9;
    let mut hi = v_max * (1.0 - 1e-9);
    let (mut s_lo, _) = condition(lo)?;
    let mut guard = 0;
    while s_lo > 0.0 {
        lo *= 1e-3;
        s_lo = condition(lo)?.0;
        guard += 1;
        if guard > 20 {
            return Err(SolveError::BracketFailure { context: "outer level (low)", lo, hi });
        }
    }
    let (mut s_hi, _) = condition(hi)?;
    guard = 0;
    while s_hi < 0.0 {
        hi = v_max - (v_max - hi) * 1e-2;
        s_hi = condition(hi)?.0;
        guard += 1;
        if guard > 20 {
            return Err(SolveError::BracketFailure { context: "outer level (high)", lo, hi });
        }
    }
    let v_star = safeguarded_root(
        |v| condition(v).map(|(s, _)| s).unwrap_or(f64::INFINITY),
        lo,
        hi,
        0.0,
        tol.condition_residual * 0.25,
        tol.outer_cap,
    )?;
    let (residual, solved) = condition(v_star)?;

    // Assemble simplex weights from the ratios r_i = w_i / w_1.
    let k = instance.k();
    let mut unnorm = alloc::vec![0.0; k];
    unnorm[best] = 1.0;
    for (ctx, &(r, _)) in adversaries.iter().zip(&solved) {
        unnorm[ctx.index] = r;
    }
    let total: f64 = unnorm.iter().sum();
    let weights: Vec<f64> = unnorm.iter().map(|u| u / total).collect();

    // Final inner solutions at the normalized weights.
    let mut inner = Vec::with_capacity(adversaries.len());
    let mut value = f64::INFINITY;
    for ctx in &adversaries {
        let sol = inner_exact_tol(
            instance,
            best,
            ctx.index,
            weights[best],
            weights[ctx.index],
            tol.x_tol,
        )?;
        value = value.min(sol.value);
        inner.push(sol);
    }
    let spread = {
        let vals: Vec<f64> = inner.iter().map(|s| s.value).collect();
        let max = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if value > 0.0 {
            (max - min) / value
        } else {
            0.0
        }
    };
    let residual = math::abs(residual);
    if residual > tol.condition_residual || spread > tol.equalization_spread {
        return Err(SolveError::NonConvergence {
            iterations: tol.outer_cap,
            residual,
            spread,
        });
    }
    Ok(MaxMinSolution {
        best,
        weights,
        value,
        inner,
        condition_residual: residual,
        equalization_spread: spread,
    })
}

/// Expected-sample lower bound `log(1 / (2.4 delta)) / V*`.
pub fn lower_bound_samples(value: f64, delta: f64) -> Result<f64, SolveError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SolveError::BadDelta(delta));
    }
    Ok(math::ln(1.0 / (2.4 * delta)) / value)
}
