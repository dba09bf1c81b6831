//! Minimal KL divergence to mean-constrained distributions on `[0, B]`.
//!
//! `kinf_upper(eta, x, B)` is the smallest `KL(eta, kappa)` over
//! distributions `kappa` supported on `[0, B]` with mean at least `x`;
//! `kinf_lower(eta, x)` is the analogue with mean at most `x`. Both are
//! computed through their one-dimensional concave duals
//!
//! ```text
//!   upper: max over l in [0, 1/(B-x)] of sum_j eta_j ln(1 + l (x - y_j))
//!   lower: max over l in [0, 1/x]     of sum_j eta_j ln(1 - l (x - y_j))
//! ```
//!
//! solved by safeguarded bisection on the (monotone) derivative. A direct
//! primal minimizer, [`oracle::kinf_oracle`], lives in a submodule and is the
//! independent cross-check used by the test suites.

use crate::dist::FiniteDistribution;
use crate::math;
use crate::root::{safeguarded_root, RootError};

/// Absolute tolerance on the dual multiplier.
pub const LAMBDA_TOL: f64 = 1e-12;
/// Absolute tolerance on the stationarity residual.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinfError {
    #[error("target mean {x} outside the open interval (0, {hi})")]
    TargetOutOfRange { x: f64, hi: f64 },
    #[error("support point {value} exceeds the bound {bound}")]
    SupportExceedsBound { value: f64, bound: f64 },
    #[error("an atom sits exactly at the bound {bound}")]
    AtomAtBound { bound: f64 },
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Which of Lemma-style dual cases held at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualRegime {
    /// Constraint slack: the multiplier is 0 and the divergence 0.
    InteriorZero,
    /// Multiplier pinned at the domain edge; mass moves to the boundary
    /// point (`B` for the upper problem, `0` for the lower one).
    Boundary,
    /// Interior stationary point: the tilted mean equals `x` exactly.
    InteriorRoot,
}

/// Solution of the upper problem `kinf_upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolutionU {
    pub lambda: f64,
    pub value: f64,
    /// Probability the primal optimizer places on the bound.
    pub mass_at_bound: f64,
    pub regime: DualRegime,
}

/// Solution of the lower problem `kinf_lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolutionL {
    pub lambda: f64,
    pub value: f64,
    /// Probability the primal optimizer places at 0 when the support lacks
    /// it and the multiplier is pinned at `1/x`.
    pub mass_at_zero: f64,
    pub regime: DualRegime,
}

impl DualSolutionU {
    /// Primal optimizer over `supp(eta)`; together with `mass_at_bound` this
    /// is a probability vector with mean `x` whenever `lambda > 0`.
    pub fn primal(&self, eta: &FiniteDistribution, x: f64) -> alloc::vec::Vec<(f64, f64)> {
        eta.atoms()
            .iter()
            .map(|&(y, p)| (y, p / (1.0 + self.lambda * (x - y))))
            .collect()
    }
}

impl DualSolutionL {
    pub fn primal(&self, eta: &FiniteDistribution, x: f64) -> alloc::vec::Vec<(f64, f64)> {
        eta.atoms()
            .iter()
            .map(|&(y, p)| (y, p / (1.0 - self.lambda * (x - y))))
            .collect()
    }
}

/// `K_inf^U(eta, x)` for support within `[0, bound]`, `0 < x < bound`.
pub fn kinf_upper(
    eta: &FiniteDistribution,
    x: f64,
    bound: f64,
) -> Result<DualSolutionU, KinfError> {
    if !(x > 0.0 && x < bound) {
        return Err(KinfError::TargetOutOfRange { x, hi: bound });
    }
    if eta.max_value() > bound {
        return Err(KinfError::SupportExceedsBound { value: eta.max_value(), bound });
    }
    let mu = eta.mean();
    if x <= mu {
        return Ok(DualSolutionU {
            lambda: 0.0,
            value: 0.0,
            mass_at_bound: 0.0,
            regime: DualRegime::InteriorZero,
        });
    }
    // Decide between the pinned-multiplier case and an interior root by the
    // sign of the dual derivative at the right endpoint.
    let retained: f64 = eta
        .atoms()
        .iter()
        .map(|&(y, p)| {
            if y < bound {
                p * (bound - x) / (bound - y)
            } else {
                f64::INFINITY
            }
        })
        .sum();
    let lam_max = 1.0 / (bound - x);
    if retained < 1.0 {
        let value = eta
            .atoms()
            .iter()
            .map(|&(y, p)| p * math::ln((bound - y) / (bound - x)))
            .sum();
        return Ok(DualSolutionU {
            lambda: lam_max,
            value,
            mass_at_bound: 1.0 - retained,
            regime: DualRegime::Boundary,
        });
    }
    let deriv = |l: f64| -> f64 {
        let mut s = 0.0;
        for &(y, p) in eta.atoms() {
            let d = 1.0 + l * (x - y);
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += p * (x - y) / d;
        }
        s
    };
    let lambda = safeguarded_root(deriv, 0.0, lam_max, LAMBDA_TOL, RESIDUAL_TOL, MAX_ITER)?;
    let value = eta
        .atoms()
        .iter()
        .map(|&(y, p)| p * math::ln_1p(lambda * (x - y)))
        .sum::<f64>()
        .max(0.0);
    Ok(DualSolutionU { lambda, value, mass_at_bound: 0.0, regime: DualRegime::InteriorRoot })
}

/// `K_inf^L(eta, x)` for `x > 0`. The bound plays no role on this side.
pub fn kinf_lower(eta: &FiniteDistribution, x: f64) -> Result<DualSolutionL, KinfError> {
    if x <= 0.0 {
        return Err(KinfError::TargetOutOfRange { x, hi: f64::INFINITY });
    }
    let mu = eta.mean();
    if x >= mu {
        return Ok(DualSolutionL {
            lambda: 0.0,
            value: 0.0,
            mass_at_zero: 0.0,
            regime: DualRegime::InteriorZero,
        });
    }
    // Derivative at the right endpoint 1/x. With an atom at 0 this is -inf
    // and the root is interior; otherwise the multiplier may pin at 1/x and
    // the optimizer moves mass to the added point 0.
    let lam_max = 1.0 / x;
    let retained: f64 = eta
        .atoms()
        .iter()
        .map(|&(y, p)| if y > 0.0 { p * x / y } else { f64::INFINITY })
        .sum();
    if retained < 1.0 {
        let value = eta
            .atoms()
            .iter()
            .map(|&(y, p)| p * math::ln(y / x))
            .sum();
        return Ok(DualSolutionL {
            lambda: lam_max,
            value,
            mass_at_zero: 1.0 - retained,
            regime: DualRegime::Boundary,
        });
    }
    let deriv = |l: f64| -> f64 {
        let mut s = 0.0;
        for &(y, p) in eta.atoms() {
            let d = 1.0 - l * (x - y);
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += p * (y - x) / d;
        }
        s
    };
    let lambda = safeguarded_root(deriv, 0.0, lam_max, LAMBDA_TOL, RESIDUAL_TOL, MAX_ITER)?;
    let value = eta
        .atoms()
        .iter()
        .map(|&(y, p)| p * math::ln_1p(-lambda * (x - y)))
        .sum::<f64>()
        .max(0.0);
    Ok(DualSolutionL { lambda, value, mass_at_zero: 0.0, regime: DualRegime::InteriorRoot })
}

/// Threshold mean above which the upper problem places mass on the bound,
/// for a rare-event arm with scaled atoms `(a_j, p_j)` and scaled bound `b`:
/// `F_0(gamma) = b S / (1 + gamma^alpha S)` with `S = sum a_j p_j / (b - a_j)`.
pub fn f0_threshold(
    atoms: &[(f64, f64)],
    bound: f64,
    gamma_alpha: f64,
) -> Result<f64, KinfError> {
    let mut s = 0.0;
    for &(a, p) in atoms {
        if a >= bound {
            return Err(KinfError::AtomAtBound { bound });
        }
        s += a * p / (bound - a);
    }
    Ok(bound * s / (1.0 + gamma_alpha * s))
}

pub mod oracle {
    //! Direct primal minimizer of `KL(eta, .)` under a mean constraint,
    //! independent of the dual formulas above. Test use only: it is slow and
    //! exists so the duals have something honest to disagree with.

    use alloc::vec::Vec;

    use crate::dist::FiniteDistribution;
    use crate::math;
    use crate::root::golden_min;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Direction {
        Upper,
        Lower,
    }

    /// Minimizes `KL(eta, kappa)` over `kappa` on `supp(eta)` plus the
    /// boundary point (`bound` for Upper, `0` for Lower) subject to the mean
    /// constraint, by coordinate descent over mean-preserving three-point
    /// mass moves.
    pub fn kinf_oracle(
        eta: &FiniteDistribution,
        x: f64,
        bound: f64,
        direction: Direction,
    ) -> f64 {
        let mu = eta.mean();
        match direction {
            Direction::Upper if x <= mu => return 0.0,
            Direction::Lower if x >= mu => return 0.0,
            _ => {}
        }
        // Support menu: eta's atoms plus the movable boundary point.
        let extra = match direction {
            Direction::Upper => bound,
            Direction::Lower => 0.0,
        };
        let mut support: Vec<f64> = eta.atoms().iter().map(|&(v, _)| v).collect();
        if !support.iter().any(|&v| v == extra) {
            support.push(extra);
            support.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let probs: Vec<f64> = support
            .iter()
            .map(|&v| eta.prob_at(v))
            .collect();
        let m = support.len();
        let objective = |k: &[f64]| -> f64 {
            let mut s = 0.0;
            for j in 0..m {
                if probs[j] > 0.0 {
                    if k[j] <= 0.0 {
                        return f64::INFINITY;
                    }
                    s += probs[j] * math::ln(probs[j] / k[j]);
                }
            }
            s
        };
        if m == 1 {
            // Nothing can move; only feasible if the constraint is slack,
            // which was handled above.
            return f64::INFINITY;
        }
        if m == 2 {
            // The mean pins kappa uniquely.
            let (z0, z1) = (support[0], support[1]);
            let q1 = (x - z0) / (z1 - z0);
            return objective(&[1.0 - q1, q1]);
        }

        let zmin = support[0];
        let zmax = support[m - 1];
        // Two feasible interior starts with mean exactly x.
        let start_mix = |target: f64| -> Vec<f64> {
            // (1-t) eta + t delta_target
            let t = (x - mu) / (target - mu);
            let mut k: Vec<f64> = probs.iter().map(|&p| (1.0 - t) * p).collect();
            let idx = support.iter().position(|&v| v == target).unwrap();
            k[idx] += t;
            k
        };
        let primary = if x > mu { start_mix(zmax) } else { start_mix(zmin) };
        let two_point = {
            let mut k = alloc::vec![0.0; m];
            k[0] = (zmax - x) / (zmax - zmin);
            k[m - 1] = (x - zmin) / (zmax - zmin);
            let mut blend: Vec<f64> = primary.iter().zip(&k).map(|(a, b)| 0.9 * a + 0.1 * b).collect();
            // Guard against drift in the mean from rounding.
            let mean: f64 = blend.iter().zip(&support).map(|(p, v)| p * v).sum();
            if math::abs(mean - x) > 1e-12 {
                // project back along the (zmin, zmax) direction
                let shift = (x - mean) / (zmax - zmin);
                blend[0] -= shift;
                blend[m - 1] += shift;
            }
            blend
        };

        let mut best = f64::INFINITY;
        for start in [primary, two_point] {
            if start.iter().any(|&p| p < -1e-15) {
                continue;
            }
            let v = descend(&support, &probs, start, &objective);
            if v < best {
                best = v;
            }
        }
        best
    }

    /// Cyclic descent over directions that shift mass among three support
    /// points while holding both the total mass and the mean fixed.
    fn descend<F: Fn(&[f64]) -> f64>(
        support: &[f64],
        _probs: &[f64],
        mut k: Vec<f64>,
        objective: &F,
    ) -> f64 {
        let m = support.len();
        let mut current = objective(&k);
        for _sweep in 0..400 {
            let mut improved = 0.0f64;
            for i in 0..m {
                for j in (i + 1)..m {
                    for l in (j + 1)..m {
                        let d = [
                            support[j] - support[l],
                            support[l] - support[i],
                            support[i] - support[j],
                        ];
                        // Feasible step range keeping all three coordinates >= 0.
                        let mut t_lo = f64::NEG_INFINITY;
                        let mut t_hi = f64::INFINITY;
                        for (idx, &di) in [i, j, l].iter().zip(d.iter()) {
                            if di > 0.0 {
                                t_lo = t_lo.max(-k[*idx] / di);
                            } else if di < 0.0 {
                                t_hi = t_hi.min(-k[*idx] / di);
                            }
                        }
                        if !(t_hi > t_lo) {
                            continue;
                        }
                        let eval = |t: f64| {
                            let mut kt = k.clone();
                            kt[i] += t * d[0];
                            kt[j] += t * d[1];
                            kt[l] += t * d[2];
                            objective(&kt)
                        };
                        let (t_star, f_star) = golden_min(eval, t_lo, t_hi, 1e-13, 200);
                        if f_star < current - 1e-15 {
                            improved += current - f_star;
                            k[i] += t_star * d[0];
                            k[j] += t_star * d[1];
                            k[l] += t_star * d[2];
                            current = f_star;
                        }
                    }
                }
            }
            if improved < 1e-13 {
                break;
            }
        }
        current
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::{kinf_oracle, Direction};
    use super::*;

    fn dist(pairs: &[(f64, f64)]) -> FiniteDistribution {
        FiniteDistribution::new(pairs).unwrap()
    }

    #[test]
    fn upper_zero_regime_iff_x_below_mean() {
        let eta = dist(&[(0.0, 0.9), (10.0, 0.1)]); // mean 1
        let sol = kinf_upper(&eta, 1.0, 100.0).unwrap();
        assert_eq!(sol.regime, DualRegime::InteriorZero);
        assert_eq!(sol.value, 0.0);
        let sol = kinf_upper(&eta, 1.0 + 1e-9, 100.0).unwrap();
        assert!(sol.regime != DualRegime::InteriorZero);
        assert!(sol.value > 0.0);
    }

    #[test]
    fn lower_zero_regime_iff_x_above_mean() {
        let eta = dist(&[(0.0, 0.5), (2.0, 0.5)]); // mean 1
        let sol = kinf_lower(&eta, 1.0).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.lambda, 0.0);
        let sol = kinf_lower(&eta, 0.999_999).unwrap();
        assert!(sol.value > 0.0);
    }

    #[test]
    fn upper_against_primal_oracle() {
        let eta = dist(&[(0.0, 0.99), (100.0, 0.01)]); // mean 1
        let dual = kinf_upper(&eta, 2.0, 100.0).unwrap();
        let primal = kinf_oracle(&eta, 2.0, 100.0, Direction::Upper);
        assert!(
            (dual.value - primal).abs() < 1e-6,
            "dual {} vs primal {}",
            dual.value,
            primal
        );
    }

    #[test]
    fn lower_against_primal_oracle() {
        let eta = dist(&[(0.0, 0.9), (10.0, 0.1)]); // mean 1
        let dual = kinf_lower(&eta, 0.5).unwrap();
        let primal = kinf_oracle(&eta, 0.5, 10.0, Direction::Lower);
        assert!(
            (dual.value - primal).abs() < 1e-6,
            "dual {} vs primal {}",
            dual.value,
            primal
        );
    }

    #[test]
    fn point_mass_at_zero_gives_boundary_closed_form() {
        let eta = dist(&[(0.0, 1.0)]);
        let b = 4.0;
        let x = 2.0;
        let sol = kinf_upper(&eta, x, b).unwrap();
        assert_eq!(sol.regime, DualRegime::Boundary);
        assert!((sol.value - (b / (b - x)).ln()).abs() < 1e-12);
        assert!((sol.mass_at_bound - x / b).abs() < 1e-12);
        let primal = kinf_oracle(&eta, x, b, Direction::Upper);
        assert!((sol.value - primal).abs() < 1e-9);
    }

    #[test]
    fn interior_root_hits_mean_equation() {
        let eta = dist(&[(0.0, 0.6), (1.0, 0.3), (3.0, 0.1)]); // mean 0.6
        let x = 1.4;
        let b = 3.5;
        let sol = kinf_upper(&eta, x, b).unwrap();
        assert_eq!(sol.regime, DualRegime::InteriorRoot);
        let tilted_mean: f64 = sol
            .primal(&eta, x)
            .iter()
            .map(|&(y, q)| y * q)
            .sum();
        assert!((tilted_mean - x).abs() < 1e-8);
        let total: f64 = sol.primal(&eta, x).iter().map(|&(_, q)| q).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lower_primal_reconstruction_is_tight() {
        let eta = dist(&[(0.0, 0.8), (2.0, 0.1), (6.0, 0.1)]); // mean 0.8
        let x = 0.3;
        let sol = kinf_lower(&eta, x).unwrap();
        assert_eq!(sol.regime, DualRegime::InteriorRoot);
        let primal = sol.primal(&eta, x);
        let total: f64 = primal.iter().map(|&(_, q)| q).sum();
        let mean: f64 = primal.iter().map(|&(y, q)| y * q).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!((mean - x).abs() < 1e-8);
    }

    #[test]
    fn lower_without_zero_atom_pins_at_edge() {
        let eta = dist(&[(4.0, 1.0)]);
        let x = 1.0;
        let sol = kinf_lower(&eta, x).unwrap();
        assert_eq!(sol.regime, DualRegime::Boundary);
        assert!((sol.value - (4.0f64 / 1.0).ln()).abs() < 1e-12);
        let primal = kinf_oracle(&eta, x, 4.0, Direction::Lower);
        assert!((sol.value - primal).abs() < 1e-9);
    }

    #[test]
    fn upper_monotone_in_target() {
        let eta = dist(&[(0.0, 0.7), (1.0, 0.2), (2.0, 0.1)]); // mean 0.4
        let b = 5.0;
        let mut prev = 0.0;
        for i in 1..40 {
            let x = 0.4 + (b - 0.4 - 1e-3) * i as f64 / 40.0;
            let v = kinf_upper(&eta, x, b).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn lower_monotone_in_target() {
        let eta = dist(&[(0.0, 0.7), (1.0, 0.2), (2.0, 0.1)]);
        let mut prev = f64::INFINITY;
        for i in 1..40 {
            let x = 0.4 * i as f64 / 40.0;
            let v = kinf_lower(&eta, x).unwrap().value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn boundary_switch_tracks_retained_mass() {
        // For fixed eta, the upper regime flips from interior-root to
        // boundary exactly where sum eta_j (B-x)/(B-y_j) crosses 1.
        let eta = dist(&[(0.0, 0.95), (1.0, 0.05)]);
        let b = 3.0;
        let retained = |x: f64| -> f64 {
            eta.atoms().iter().map(|&(y, p)| p * (b - x) / (b - y)).sum()
        };
        // Bracket the crossing point of retained(x) = 1 above the mean.
        let mut lo = eta.mean() + 1e-6;
        let mut hi = b - 1e-6;
        assert!(retained(lo) > 1.0 && retained(hi) < 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if retained(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let below = kinf_upper(&eta, lo - 1e-7, b).unwrap();
        let above = kinf_upper(&eta, hi + 1e-7, b).unwrap();
        assert_eq!(below.regime, DualRegime::InteriorRoot);
        assert_eq!(above.regime, DualRegime::Boundary);
        assert!(above.mass_at_bound > 0.0 && below.mass_at_bound == 0.0);
    }

    #[test]
    fn f0_closed_forms() {
        // atoms [(1.0, 0.5)], B = 2: S = 0.5, F0(0) = 2 / (1/0.5) = 1.
        let f0 = f0_threshold(&[(1.0, 0.5)], 2.0, 0.0).unwrap();
        assert!((f0 - 1.0).abs() < 1e-15);
        // gamma^alpha = 1: 2 / (2 + 1) = 2/3.
        let f1 = f0_threshold(&[(1.0, 0.5)], 2.0, 1.0).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
        // F0(gamma) < F0(0) for gamma > 0.
        assert!(f1 < f0);
        // Atom at the bound is an error.
        assert!(matches!(
            f0_threshold(&[(2.0, 0.5)], 2.0, 0.0),
            Err(KinfError::AtomAtBound { .. })
        ));
    }

    #[test]
    fn dual_matches_oracle_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..120 {
            let n = rng.random_range(1..=5);
            let b = 1.0 + rng.random_range(0.0..9.0);
            let mut pairs: alloc::vec::Vec<(f64, f64)> = alloc::vec::Vec::new();
            let mut mass_left = 1.0;
            for j in 0..n {
                let v = rng.random_range(0.0..b * 0.95);
                let p = if j == n - 1 {
                    mass_left
                } else {
                    let p = rng.random_range(0.01..mass_left * 0.8);
                    mass_left -= p;
                    p
                };
                pairs.push((v, p));
            }
            let eta = dist(&pairs);
            let mu = eta.mean();
            let xu = mu + rng.random_range(0.0..(b - mu) * 0.9) + 1e-6;
            let du = kinf_upper(&eta, xu, b).unwrap();
            let pu = kinf_oracle(&eta, xu, b, Direction::Upper);
            assert!(
                (du.value - pu).abs() < 1e-5,
                "case {case}: upper dual {} vs oracle {} (x={xu}, b={b}, eta={:?})",
                du.value,
                pu,
                eta
            );
            if mu > 1e-6 {
                let xl = rng.random_range(mu * 0.05..mu * 0.95);
                let dl = kinf_lower(&eta, xl).unwrap();
                let pl = kinf_oracle(&eta, xl, b, Direction::Lower);
                assert!(
                    (dl.value - pl).abs() < 1e-5,
                    "case {case}: lower dual {} vs oracle {} (x={xl}, eta={:?})",
                    dl.value,
                    pl,
                    eta
                );
            }
        }
    }
}
