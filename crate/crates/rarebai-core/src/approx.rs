//! The Poisson-approximate max-min problem and its monotone cascade.
//!
//! Replacing each KL divergence with its compound-Poisson form
//! `gamma^alpha * sum_j [p_j ln(p_j / q_j) + (q_j - p_j)]` turns the inner
//! problem into two coupled tilted-mean equations in the multipliers
//! `C_1i` (best arm) and `C_i` (adversary):
//!
//! ```text
//!   x* = sum_j a_1j p_1j / (1 + a_1j C_1i) = sum_j a_ij p_ij / (1 - a_ij C_i)
//! ```
//!
//! with `C_i` clamped at `1/B_i` (mass moved to the bound) once the crossing
//! mean exceeds the threshold `F_0(0)`. Everything here works in the scaled
//! `(a, p)` coordinates, so the multipliers stay order one regardless of the
//! rarity scale; `gamma^alpha` factors enter only through exponent
//! differences when weights are assembled.
//!
//! The outer solve follows the cascade: one scalar parameter (the best-arm
//! multiplier against the runner-up, `C_12`) determines every other
//! multiplier through the equalization of inner values, and the optimality
//! condition `sum_i h_i = 1` is monotone in that parameter.

use alloc::vec::Vec;

use crate::exact::{inner_exact, SolveError, SolveTolerances};
use crate::instance::{ArmSpec, BanditInstance};
use crate::math;
use crate::root::safeguarded_root;

const CASCADE_TOL: f64 = 1e-12;
const CASCADE_ITERS: usize = 300;

/// KL divergence between Poisson intensities:
/// `lp ln(lp/lq) + lq - lp`, with `0 ln 0 = 0`.
pub fn poisson_kl(lambda_p: f64, lambda_q: f64) -> Result<f64, SolveError> {
    if lambda_q <= 0.0 {
        if lambda_p > 0.0 {
            return Err(SolveError::DegenerateInterval { lo: lambda_q, hi: lambda_p });
        }
        return Ok(lambda_q - lambda_p);
    }
    if lambda_p == 0.0 {
        return Ok(lambda_q);
    }
    Ok(lambda_p * math::ln(lambda_p / lambda_q) + lambda_q - lambda_p)
}

/// Poisson-approximate KL between two arms sharing an atom menu:
/// `gamma^alpha sum_j [p_j ln(p_j/q_j) + (q_j - p_j)]`.
pub fn approx_kl(arm_p: &ArmSpec, arm_q: &ArmSpec, gamma: f64) -> Result<f64, SolveError> {
    if arm_p.atoms.len() != arm_q.atoms.len()
        || arm_p
            .atoms
            .iter()
            .zip(&arm_q.atoms)
            .any(|(&(a, _), &(b, _))| a != b)
    {
        return Err(SolveError::BracketFailure {
            context: "approx_kl atom menus differ",
            lo: arm_p.atoms.len() as f64,
            hi: arm_q.atoms.len() as f64,
        });
    }
    let mut sum = 0.0;
    for (&(_, p), &(_, q)) in arm_p.atoms.iter().zip(&arm_q.atoms) {
        sum += poisson_kl(p, q)?;
    }
    Ok(math::gamma_pow(gamma, arm_p.alpha) * sum)
}

/// Per-adversary solution of the approximate inner problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxInnerSolution {
    pub adversary: usize,
    pub c_1i: f64,
    pub c_i: f64,
    /// Crossing mean of the two tilted distributions.
    pub x_star_a: f64,
    /// `P_{i,a}` at the weights in force.
    pub value: f64,
    /// True when `C_i` is pinned at `1/B_i` and mass sits on the bound.
    pub clamped: bool,
}

/// Solved approximate outer problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSolution {
    pub best: usize,
    pub weights: Vec<f64>,
    pub value: f64,
    pub inner: Vec<ApproxInnerSolution>,
    /// `|sum_i h_i - 1|` at the accepted cascade point.
    pub condition_residual: f64,
}

/// Scaled-coordinate views of one arm used throughout the cascade.
#[derive(Debug, Clone)]
pub(crate) struct ArmView {
    atoms: Vec<(f64, f64)>,
    bound: f64,
    alpha: f64,
    mean: f64,
    max_atom: f64,
    /// `F_0(0) = B * S`, infinite if an atom already sits at the bound.
    clamp_threshold: f64,
}

impl ArmView {
    pub(crate) fn new(arm: &ArmSpec) -> Self {
        let max_atom = arm.atoms.iter().map(|&(a, _)| a).fold(0.0, f64::max);
        let clamp_threshold = if arm.atoms.iter().any(|&(a, _)| a >= arm.bound) {
            f64::INFINITY
        } else {
            arm.bound * arm.atoms.iter().map(|&(a, p)| a * p / (arm.bound - a)).sum::<f64>()
        };
        Self {
            atoms: arm.atoms.clone(),
            bound: arm.bound,
            alpha: arm.alpha,
            mean: arm.mean(),
            max_atom,
            clamp_threshold,
        }
    }

    /// Best-arm tilted mean `sum a p / (1 + c a)`, decreasing in `c`.
    pub(crate) fn tilt_down_mean(&self, c: f64) -> f64 {
        self.atoms.iter().map(|&(a, p)| a * p / (1.0 + c * a)).sum()
    }

    /// Adversary tilted mean `sum a p / (1 - c a)`, increasing in `c`.
    pub(crate) fn tilt_up_mean(&self, c: f64) -> f64 {
        let mut s = 0.0;
        for &(a, p) in &self.atoms {
            let d = 1.0 - c * a;
            if d <= 0.0 {
                return f64::INFINITY;
            }
            s += a * p / d;
        }
        s
    }

    /// Invert `tilt_down_mean` on `x in (0, mean]`.
    pub(crate) fn c1_at(&self, x: f64) -> Result<f64, SolveError> {
        if x >= self.mean {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while self.tilt_down_mean(hi) > x {
            hi *= 4.0;
            guard += 1;
            if guard > 300 {
                return Err(SolveError::BracketFailure {
                    context: "best-arm tilt multiplier",
                    lo: 0.0,
                    hi,
                });
            }
        }
        Ok(safeguarded_root(
            |c| self.tilt_down_mean(c) - x,
            0.0,
            hi,
            CASCADE_TOL,
            0.0,
            CASCADE_ITERS,
        )?)
    }

    /// Invert `tilt_up_mean` on `x >= mean`, clamping at `1/B` when the
    /// demanded mean exceeds `F_0(0)` (the `n+1` support extension).
    pub(crate) fn ci_at(&self, x: f64) -> Result<(f64, bool), SolveError> {
        if x <= self.mean {
            return Ok((0.0, false));
        }
        if x > self.clamp_threshold {
            return Ok((1.0 / self.bound, true));
        }
        let edge = (1.0 - 1e-14) / self.max_atom;
        Ok((
            safeguarded_root(
                |c| {
                    let m = self.tilt_up_mean(c);
                    if m.is_finite() {
                        m - x
                    } else {
                        f64::INFINITY
                    }
                },
                0.0,
                edge,
                CASCADE_TOL,
                0.0,
                CASCADE_ITERS,
            )?,
            false,
        ))
    }

    /// `sum p ln(1 + c a) - c x`, the approximate best-arm divergence.
    pub(crate) fn kla_down(&self, c: f64, x: f64) -> f64 {
        let s: f64 = self.atoms.iter().map(|&(a, p)| p * math::ln_1p(c * a)).sum();
        (s - c * x).max(0.0)
    }

    /// `sum p ln(1 - c a) + c x`, the approximate adversary divergence.
    pub(crate) fn kla_up(&self, c: f64, x: f64) -> f64 {
        let s: f64 = self.atoms.iter().map(|&(a, p)| p * math::ln_1p(-c * a)).sum();
        (s + c * x).max(0.0)
    }
}

/// The cascade over one instance: precomputed arm views plus the index
/// bookkeeping for the best and runner-up arms.
pub struct ApproxCascade {
    gamma: f64,
    best: usize,
    second: usize,
    views: Vec<ArmView>,
}

impl ApproxCascade {
    pub fn new(instance: &BanditInstance) -> Result<Self, SolveError> {
        if !instance.unique_best() {
            return Err(SolveError::NoUniqueBest);
        }
        let best = instance.best_arm();
        let views: Vec<ArmView> = instance.arms.iter().map(ArmView::new).collect();
        let mut second = usize::MAX;
        for i in 0..views.len() {
            if i != best && (second == usize::MAX || views[i].mean > views[second].mean) {
                second = i;
            }
        }
        Ok(Self { gamma: instance.gamma, best, second, views })
    }

    pub fn best(&self) -> usize {
        self.best
    }

    pub fn second(&self) -> usize {
        self.second
    }

    /// Largest admissible `C_12`: the best-arm multiplier whose tilted mean
    /// hits the runner-up mean.
    pub fn c12_max(&self) -> Result<f64, SolveError> {
        self.views[self.best].c1_at(self.views[self.second].mean)
    }

    /// `g_i(r)`: the best-arm multiplier matching adversary `i` tilted by
    /// `r`. Defined while the adversary's tilted mean stays at most the best
    /// mean.
    pub fn g(&self, i: usize, r: f64) -> Result<f64, SolveError> {
        let adv = &self.views[i];
        if r < 0.0 || r >= 1.0 / adv.max_atom {
            return Err(SolveError::BracketFailure {
                context: "g argument outside domain",
                lo: 0.0,
                hi: 1.0 / adv.max_atom,
            });
        }
        let target = adv.tilt_up_mean(r);
        if !target.is_finite() || target > self.views[self.best].mean {
            return Err(SolveError::BracketFailure {
                context: "g target above best mean",
                lo: target,
                hi: self.views[self.best].mean,
            });
        }
        self.views[self.best].c1_at(target)
    }

    /// Inner state for adversary `i` at crossing mean `x`.
    fn point_at(&self, i: usize, x: f64) -> Result<CascadePoint, SolveError> {
        let best = &self.views[self.best];
        let adv = &self.views[i];
        let c1 = best.c1_at(x)?;
        let (ci, clamped) = adv.ci_at(x)?;
        Ok(CascadePoint {
            x,
            c1,
            ci,
            clamped,
            kla_best: best.kla_down(c1, x),
            kla_adv: adv.kla_up(ci, x),
        })
    }

    /// Equalized value factor `P_{i,a} / (w_1 gamma^{alpha_1})` at `x`.
    fn value_factor(&self, p: &CascadePoint) -> f64 {
        if p.ci <= 0.0 {
            // Degenerate tilt: the adversary term vanishes quadratically.
            return p.kla_best;
        }
        p.kla_best + (p.c1 / p.ci) * p.kla_adv
    }

    /// Solve `value_factor(x_i) = v` for adversary `i`; the factor is
    /// decreasing in the crossing mean.
    fn equalize(&self, i: usize, v: f64) -> Result<CascadePoint, SolveError> {
        let mu_i = self.views[i].mean;
        let mu_1 = self.views[self.best].mean;
        let span = mu_1 - mu_i;
        let mut off = 1e-9;
        let f = |x: f64| -> f64 {
            match self.point_at(i, x) {
                Ok(p) => self.value_factor(&p) - v,
                Err(_) => f64::INFINITY,
            }
        };
        let hi = mu_1 - 1e-14 * span.max(1.0);
        let mut lo = mu_i + off * span;
        let mut guard = 0;
        while f(lo) < 0.0 {
            off *= 1e-3;
            lo = mu_i + off * span;
            guard += 1;
            if guard > 8 {
                return Err(SolveError::BracketFailure {
                    context: "cascade equalization",
                    lo: mu_i,
                    hi: mu_1,
                });
            }
        }
        let x = safeguarded_root(f, lo, hi, CASCADE_TOL * span, 0.0, CASCADE_ITERS)?;
        self.point_at(i, x)
    }

    /// `xi_i(s)`: the multiplier `C_1i` equalizing adversary `i` with the
    /// runner-up at `C_12 = s`. Identity for the runner-up itself.
    pub fn xi(&self, i: usize, s: f64) -> Result<f64, SolveError> {
        if i == self.second {
            return Ok(s);
        }
        let v = self.level_at(s)?;
        Ok(self.equalize(i, v)?.c1)
    }

    /// Common value factor determined by `C_12 = s`.
    fn level_at(&self, s: f64) -> Result<f64, SolveError> {
        let best = &self.views[self.best];
        let x2 = best.tilt_down_mean(s);
        let p2 = self.point_at(self.second, x2)?;
        Ok(self.value_factor(&p2))
    }

    /// Optimality summand for adversary `i` as a function of `C_12 = s`:
    /// `gamma^(alpha_1 - alpha_i)` times the envelope-gradient ratio.
    pub fn h(&self, i: usize, s: f64) -> Result<f64, SolveError> {
        let point = if i == self.second {
            self.point_at(i, self.views[self.best].tilt_down_mean(s))?
        } else {
            let v = self.level_at(s)?;
            self.equalize(i, v)?
        };
        let factor = math::gamma_pow(
            self.gamma,
            self.views[self.best].alpha - self.views[i].alpha,
        );
        if point.kla_adv <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(factor * point.kla_best / point.kla_adv)
    }

    /// The regime-splitting constant: the sum of gradient ratios over the
    /// rarest non-best arms, in the limit where the runner-up tilt vanishes
    /// (its crossing mean sits at `mu_2`, the closed form of the `s -> 0`
    /// limit of the runner-up multiplier).
    pub fn zeta(&self) -> Result<f64, SolveError> {
        let alpha_max = self
            .views
            .iter()
            .map(|v| v.alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        let mu2 = self.views[self.second].mean;
        let best = &self.views[self.best];
        let c = best.c1_at(mu2)?;
        let v_lim = best.kla_down(c, mu2);
        let mut zeta = 0.0;
        for i in 0..self.views.len() {
            if i == self.best || self.views[i].alpha != alpha_max {
                continue;
            }
            let p = if i == self.second {
                return Err(SolveError::BracketFailure {
                    context: "zeta undefined when the runner-up is rarest",
                    lo: self.views[i].alpha,
                    hi: alpha_max,
                });
            } else {
                self.equalize(i, v_lim)?
            };
            if p.kla_adv <= 0.0 {
                return Ok(f64::INFINITY);
            }
            zeta += p.kla_best / p.kla_adv;
        }
        Ok(zeta)
    }

    /// Run the cascade to the accepted point `sum_i h_i = 1`.
    pub fn solve(&self, tol: &SolveTolerances) -> Result<ApproxSolution, SolveError> {
        let s_max = self.c12_max()?;
        let sum_minus_one = |s: f64| -> f64 {
            let mut sum = 0.0;
            for i in 0..self.views.len() {
                if i == self.best {
                    continue;
                }
                match self.h(i, s) {
                    Ok(h) => sum += h,
                    Err(_) => return f64::INFINITY,
                }
            }
            sum - 1.0
        };
        let mut lo = s_max * 1e-9;
        let mut guard = 0;
        while sum_minus_one(lo) > 0.0 {
            lo *= 1e-3;
            guard += 1;
            if guard > 20 {
                return Err(SolveError::BracketFailure {
                    context: "cascade outer parameter (low)",
                    lo,
                    hi: s_max,
                });
            }
        }
        let mut hi = s_max * (1.0 - 1e-9);
        guard = 0;
        while sum_minus_one(hi) < 0.0 {
            hi = s_max - (s_max - hi) * 1e-2;
            guard += 1;
            if guard > 20 {
                return Err(SolveError::BracketFailure {
                    context: "cascade outer parameter (high)",
                    lo,
                    hi,
                });
            }
        }
        let s_star = safeguarded_root(sum_minus_one, lo, hi, 0.0, 1e-8 * 0.5, tol.outer_cap.max(CASCADE_ITERS))?;
        let residual = math::abs(sum_minus_one(s_star));
        if residual > 1e-8 {
            return Err(SolveError::NonConvergence {
                iterations: tol.outer_cap,
                residual,
                spread: 0.0,
            });
        }

        // Assemble multipliers and weights. The weight ratio for each
        // adversary comes from C_1i w_1 g^{a_1} = C_i w_i g^{a_i}; the
        // gamma powers enter through exponent differences only.
        let v = self.level_at(s_star)?;
        let a1 = self.views[self.best].alpha;
        let k = self.views.len();
        let mut unnorm = alloc::vec![0.0; k];
        unnorm[self.best] = 1.0;
        let mut points: Vec<(usize, CascadePoint)> = Vec::with_capacity(k - 1);
        for i in 0..k {
            if i == self.best {
                continue;
            }
            let p = if i == self.second {
                self.point_at(i, self.views[self.best].tilt_down_mean(s_star))?
            } else {
                self.equalize(i, v)?
            };
            let ratio = if p.ci > 0.0 { p.c1 / p.ci } else { 0.0 };
            unnorm[i] = ratio * math::gamma_pow(self.gamma, a1 - self.views[i].alpha);
            points.push((i, p));
        }
        let total: f64 = unnorm.iter().sum();
        let weights: Vec<f64> = unnorm.iter().map(|u| u / total).collect();
        let value = math::gamma_pow(self.gamma, a1) * v / total;
        let inner = points
            .into_iter()
            .map(|(i, p)| ApproxInnerSolution {
                adversary: i,
                c_1i: p.c1,
                c_i: p.ci,
                x_star_a: p.x,
                value: weights[self.best] * math::gamma_pow(self.gamma, a1) * self.value_factor(&p),
                clamped: p.clamped,
            })
            .collect();
        Ok(ApproxSolution {
            best: self.best,
            weights,
            value,
            inner,
            condition_residual: residual,
        })
    }
}

#[derive(Debug, Clone)]
struct CascadePoint {
    x: f64,
    c1: f64,
    ci: f64,
    clamped: bool,
    kla_best: f64,
    kla_adv: f64,
}

/// `g_i(r)` on `instance` (see [`ApproxCascade::g`]).
pub fn g(instance: &BanditInstance, i: usize, r: f64) -> Result<f64, SolveError> {
    ApproxCascade::new(instance)?.g(i, r)
}

/// `xi_i(s)` on `instance` (see [`ApproxCascade::xi`]).
pub fn xi(instance: &BanditInstance, i: usize, s: f64) -> Result<f64, SolveError> {
    ApproxCascade::new(instance)?.xi(i, s)
}

/// `h_i(s)` on `instance` (see [`ApproxCascade::h`]).
pub fn h(instance: &BanditInstance, i: usize, s: f64) -> Result<f64, SolveError> {
    ApproxCascade::new(instance)?.h(i, s)
}

/// Solve the approximate max-min problem.
pub fn solve_approx_maxmin(
    instance: &BanditInstance,
    tol: &SolveTolerances,
) -> Result<ApproxSolution, SolveError> {
    ApproxCascade::new(instance)?.solve(tol)
}

/// Approximate inner problem at fixed weights, for gap measurement.
pub fn approx_inner(
    instance: &BanditInstance,
    best: usize,
    adversary: usize,
    w_best: f64,
    w_adv: f64,
) -> Result<ApproxInnerSolution, SolveError> {
    let views: Vec<ArmView> = instance.arms.iter().map(ArmView::new).collect();
    let bview = &views[best];
    let aview = &views[adversary];
    let a1 = bview.alpha;
    let ai = aview.alpha;
    if w_best == 0.0 || w_adv == 0.0 {
        let x = if w_best == 0.0 { aview.mean } else { bview.mean };
        return Ok(ApproxInnerSolution {
            adversary,
            c_1i: 0.0,
            c_i: 0.0,
            x_star_a: x,
            value: 0.0,
            clamped: false,
        });
    }
    // rho = (w_i gamma^{alpha_i}) / (w_1 gamma^{alpha_1}); C_1i = rho C_i.
    let rho = (w_adv / w_best) * math::gamma_pow(instance.gamma, ai - a1);
    let crossing = |ci: f64| -> f64 {
        let up = aview.tilt_up_mean(ci);
        if !up.is_finite() {
            return f64::NEG_INFINITY;
        }
        bview.tilt_down_mean(rho * ci) - up
    };
    let edge = (1.0 - 1e-14) / aview.max_atom;
    let unclamped = safeguarded_root(crossing, 0.0, edge, CASCADE_TOL, 0.0, CASCADE_ITERS)?;
    let (ci, clamped) = if aview.clamp_threshold.is_finite() && unclamped > 1.0 / aview.bound {
        (1.0 / aview.bound, true)
    } else {
        (unclamped, false)
    };
    let c1 = rho * ci;
    let x = bview.tilt_down_mean(c1);
    let value = w_best * math::gamma_pow(instance.gamma, a1) * bview.kla_down(c1, x)
        + w_adv * math::gamma_pow(instance.gamma, ai) * aview.kla_up(ci, x);
    Ok(ApproxInnerSolution { adversary, c_1i: c1, c_i: ci, x_star_a: x, value, clamped })
}

/// Per-adversary `|P_i - P_{i,a}|` at common weights `w`.
pub fn approximation_gap(instance: &BanditInstance, w: &[f64]) -> Result<Vec<(usize, f64)>, SolveError> {
    let best = instance.best_arm();
    let mut gaps = Vec::new();
    for i in 0..instance.k() {
        if i == best {
            continue;
        }
        let exact = inner_exact(instance, best, i, w[best], w[i])?;
        let approx = approx_inner(instance, best, i, w[best], w[i])?;
        gaps.push((i, math::abs(exact.value - approx.value)));
    }
    Ok(gaps)
}

/// Appendix-style meeting check: every solved crossing mean sits above the
/// runner-up mean (within 1e-8).
pub fn approx_mean_meeting_check(solution: &ApproxSolution, mu_second: f64) -> bool {
    solution.inner.iter().all(|s| s.x_star_a >= mu_second - 1e-8)
}
