//! The sampling algorithms: track-and-stop with approximate weights (TS(A)),
//! track-and-stop with exact weights (TS(E)), and successive elimination.
//!
//! Both track-and-stop variants share one loop; they differ only in which
//! lower-bound solver turns the empirical instance into sampling weights.
//! The stopping statistic is always the exact one.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use rarebai_core::approx::solve_approx_maxmin;
use rarebai_core::exact::{solve_exact_maxmin, SolveError, SolveTolerances};
use rarebai_core::glr::{glr_statistic, stopping_threshold};
use rarebai_core::instance::{ArmSpec, BanditInstance, EmpiricalState};

/// Hard cap on samples per trial; a trial that reaches it aborts loudly.
pub const SAMPLE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Track-and-stop on the Poisson-approximate lower bound.
    Tsa,
    /// Track-and-stop on the exact lower bound.
    Tse,
    /// Successive elimination.
    Se,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Tsa => "tsa",
            Algorithm::Tse => "tse",
            Algorithm::Se => "se",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsa" => Ok(Algorithm::Tsa),
            "tse" => Ok(Algorithm::Tse),
            "se" => Ok(Algorithm::Se),
            other => Err(format!("unknown algorithm '{other}' (expected tsa, tse, se)")),
        }
    }
}

/// Confidence and batching knobs shared by the track-and-stop loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub delta: f64,
    /// Batch size `m`; defaults to `ceil(gamma^(-alpha_max))`.
    pub batch_size: u64,
}

impl StoppingRule {
    pub fn for_instance(instance: &BanditInstance, delta: f64, batch_size: Option<u64>) -> Self {
        let alpha_max = instance
            .arms
            .iter()
            .map(|a| a.alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        let default_m = instance.gamma.powf(-alpha_max).ceil() as u64;
        StoppingRule { delta, batch_size: batch_size.unwrap_or(default_m) }
    }

    /// `beta(t, delta) = ln((K-1)/delta) + 5 ln(t+1) + 2`.
    pub fn threshold(&self, k: usize, t: u64) -> f64 {
        stopping_threshold(k, t, self.delta)
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub algorithm: Algorithm,
    pub recommended: usize,
    /// Total samples drawn.
    pub stopping_time: u64,
    pub arm_counts: Vec<u64>,
    /// Batches completed (elimination rounds for SE).
    pub batches: u64,
    /// Wall time spent inside the lower-bound weight solver only; the
    /// stopping statistic is excluded so the solver comparison is clean.
    pub solver_time_s: f64,
    pub total_time_s: f64,
    pub seed: u64,
    pub trial: u64,
    /// Statistic at the stopping batch and at the batch before it.
    pub z_final: f64,
    pub z_prev: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum TrialError {
    #[error("batch size {m} smaller than the number of arms {k}")]
    BatchTooSmall { m: u64, k: usize },
    #[error("trial {trial} (seed {seed}) hit the sample cap {cap}")]
    SampleCapExceeded { trial: u64, seed: u64, cap: u64 },
    #[error("weight solver failed at batch {batch} of trial {trial} (seed {seed}): {source}")]
    SolverFailure {
        batch: u64,
        trial: u64,
        seed: u64,
        #[source]
        source: SolveError,
    },
    #[error("stopping statistic failed at batch {batch}: {source}")]
    Statistic {
        batch: u64,
        #[source]
        source: SolveError,
    },
}

/// Independent per-trial stream: one master seed, one stream per trial, so
/// trials parallelize and algorithms pair by (seed, trial).
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Forced-exploration targets `s_i = (sqrt((l+1) m) - N_i)^+`, rounded up.
pub fn forced_exploration(l: u64, m: u64, counts: &[u64]) -> Vec<u64> {
    let target = (((l + 1) * m) as f64).sqrt();
    counts
        .iter()
        .map(|&n| {
            let d = target - n as f64;
            if d > 0.0 {
                d.ceil() as u64
            } else {
                0
            }
        })
        .collect()
}

/// Distribute `m` samples against shortfalls `s`, minimizing the largest
/// unmet shortfall (the common-fill-level rule). Greedy one-at-a-time to the
/// arm with the largest remaining shortfall, lowest index on ties.
pub fn water_fill(s: &[u64], m: u64) -> Vec<u64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut alloc = vec![0u64; s.len()];
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> =
        s.iter().enumerate().map(|(i, &si)| (si, Reverse(i))).collect();
    let mut left = m;
    while left > 0 {
        let Some((short, Reverse(i))) = heap.pop() else { break };
        if short == 0 {
            break;
        }
        alloc[i] += 1;
        left -= 1;
        heap.push((short - 1, Reverse(i)));
    }
    alloc
}

/// Forced-exploration plan for one batch: shortfall targets plus the final
/// allocation after the load-balancing rule when the batch cannot cover
/// them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortfallPlan {
    pub shortfalls: Vec<u64>,
    pub allocation: Vec<u64>,
    /// Whether the batch covered every shortfall.
    pub covered: bool,
}

pub fn forced_exploration_shortfall(l: u64, m: u64, counts: &[u64]) -> ShortfallPlan {
    let shortfalls = forced_exploration(l, m, counts);
    let total: u64 = shortfalls.iter().sum();
    if m >= total {
        ShortfallPlan { allocation: shortfalls.clone(), shortfalls, covered: true }
    } else {
        let allocation = water_fill(&shortfalls, m);
        ShortfallPlan { shortfalls, allocation, covered: false }
    }
}

/// Per-arm samples to draw in the next batch: forced exploration first, the
/// remainder multinomial on the tracking weights.
pub fn plan_batch<R: Rng + ?Sized>(
    l: u64,
    m: u64,
    counts: &[u64],
    weights: &[f64],
    rng: &mut R,
) -> Vec<u64> {
    let plan = forced_exploration_shortfall(l, m, counts);
    if !plan.covered {
        return plan.allocation;
    }
    let mut alloc = plan.allocation;
    let spent: u64 = alloc.iter().sum();
    let mut remaining = m - spent;
    let mut rem_prob = 1.0f64;
    let k = counts.len();
    for i in 0..k {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            alloc[i] += remaining;
            break;
        }
        let q = weights[i];
        let cond = (q / rem_prob).clamp(0.0, 1.0);
        let c = if cond >= 1.0 {
            remaining
        } else {
            use rand_distr::Distribution;
            rand_distr::Binomial::new(remaining, cond).expect("valid binomial").sample(rng)
        };
        alloc[i] += c;
        remaining -= c;
        rem_prob -= q;
    }
    alloc
}

/// Turn the empirical state into the rarity-form instance the weight
/// solvers run on. Arms with no nonzero samples get a pseudo-atom at their
/// known bound with the smallest observable probability `1/N_i`.
fn empirical_instance(
    instance: &BanditInstance,
    state: &EmpiricalState,
) -> (BanditInstance, Vec<usize>) {
    let mut zero_arms = Vec::new();
    let mut arms = Vec::with_capacity(instance.k());
    for i in 0..instance.k() {
        let spec = &instance.arms[i];
        let n = state.pulls(i) as f64;
        let inv_g = instance.gamma.powf(-spec.alpha);
        let mut atoms: Vec<(f64, f64)> = state
            .atom_counts(i)
            .iter()
            .map(|&(a, c)| (a, (c as f64 / n) * inv_g))
            .collect();
        if atoms.is_empty() {
            atoms.push((spec.bound, inv_g / n));
            zero_arms.push(i);
        }
        arms.push(ArmSpec::new(spec.alpha, atoms, spec.bound));
    }
    (BanditInstance::new(instance.gamma, arms), zero_arms)
}

/// Sampling weights for the next batch. Falls back to uniform while the
/// empirical instance is degenerate (tied means, or a pseudo-atom arm
/// leading), and pins uniform weight on arms that have produced no nonzero
/// sample yet.
fn batch_weights(
    instance: &BanditInstance,
    state: &EmpiricalState,
    exact: bool,
    tol: &SolveTolerances,
) -> Result<Vec<f64>, SolveError> {
    let k = instance.k();
    let uniform = vec![1.0 / k as f64; k];
    let (emp, zero_arms) = empirical_instance(instance, state);
    let solvable = emp.unique_best() && !zero_arms.contains(&emp.best_arm());
    let mut weights = if solvable {
        let solved = if exact {
            solve_exact_maxmin(&emp, tol).map(|s| s.weights)
        } else {
            solve_approx_maxmin(&emp, tol).map(|s| s.weights)
        };
        match solved {
            Ok(w) => w,
            Err(_) => {
                // One retry at relaxed tolerances before giving up.
                let relaxed = tol.relaxed();
                if exact {
                    solve_exact_maxmin(&emp, &relaxed)?.weights
                } else {
                    solve_approx_maxmin(&emp, &relaxed)?.weights
                }
            }
        }
    } else {
        uniform.clone()
    };
    for &i in &zero_arms {
        weights[i] = 1.0 / k as f64;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(weights)
}

/// Track-and-stop with the approximate (Poisson) weight solver.
pub fn run_tsa(
    instance: &BanditInstance,
    rule: &StoppingRule,
    master_seed: u64,
    trial: u64,
    tol: &SolveTolerances,
) -> Result<TrialReport, TrialError> {
    run_track_and_stop(instance, rule, master_seed, trial, tol, false)
}

/// Track-and-stop with the exact weight solver.
pub fn run_tse(
    instance: &BanditInstance,
    rule: &StoppingRule,
    master_seed: u64,
    trial: u64,
    tol: &SolveTolerances,
) -> Result<TrialReport, TrialError> {
    run_track_and_stop(instance, rule, master_seed, trial, tol, true)
}

fn run_track_and_stop(
    instance: &BanditInstance,
    rule: &StoppingRule,
    master_seed: u64,
    trial: u64,
    tol: &SolveTolerances,
    exact: bool,
) -> Result<TrialReport, TrialError> {
    let start = Instant::now();
    let k = instance.k();
    let m = rule.batch_size;
    if m < k as u64 {
        return Err(TrialError::BatchTooSmall { m, k });
    }
    let mut rng = trial_rng(master_seed, trial);
    let mut state = EmpiricalState::new(instance);
    let bounds: Vec<f64> = instance
        .arms
        .iter()
        .map(|a| a.reward_bound(instance.gamma))
        .collect();
    let mut solver_time = Duration::ZERO;

    // Initial batch: floor(m/K) per arm.
    let per_arm = m / k as u64;
    for arm in 0..k {
        let draw = instance.sample_counts(arm, per_arm, &mut rng);
        state.record_draw(arm, &instance.arms[arm].atoms, &draw);
    }
    let mut l: u64 = 1;
    let mut z = glr_statistic(&state, &bounds)
        .map_err(|source| TrialError::Statistic { batch: l, source })?;
    let mut z_prev = f64::NAN;
    let solve_start = Instant::now();
    let mut weights = batch_weights(instance, &state, exact, tol)
        .map_err(|source| TrialError::SolverFailure { batch: l, trial, seed: master_seed, source })?;
    solver_time += solve_start.elapsed();

    loop {
        // At least two batches before a stop is allowed.
        if l >= 2 && z.z >= rule.threshold(k, l * m) {
            break;
        }
        if state.total_pulls() >= SAMPLE_CAP {
            return Err(TrialError::SampleCapExceeded {
                trial,
                seed: master_seed,
                cap: SAMPLE_CAP,
            });
        }
        let counts: Vec<u64> = (0..k).map(|i| state.pulls(i)).collect();
        let plan = plan_batch(l, m, &counts, &weights, &mut rng);
        for arm in 0..k {
            if plan[arm] > 0 {
                let draw = instance.sample_counts(arm, plan[arm], &mut rng);
                state.record_draw(arm, &instance.arms[arm].atoms, &draw);
            }
        }
        l += 1;
        z_prev = z.z;
        z = glr_statistic(&state, &bounds)
            .map_err(|source| TrialError::Statistic { batch: l, source })?;
        let solve_start = Instant::now();
        weights = batch_weights(instance, &state, exact, tol).map_err(|source| {
            TrialError::SolverFailure { batch: l, trial, seed: master_seed, source }
        })?;
        solver_time += solve_start.elapsed();
    }

    Ok(TrialReport {
        algorithm: if exact { Algorithm::Tse } else { Algorithm::Tsa },
        recommended: state.empirical_best(),
        stopping_time: state.total_pulls(),
        arm_counts: (0..k).map(|i| state.pulls(i)).collect(),
        batches: l,
        solver_time_s: solver_time.as_secs_f64(),
        total_time_s: start.elapsed().as_secs_f64(),
        seed: master_seed,
        trial,
        z_final: z.z,
        z_prev,
    })
}

/// Successive elimination on `[0, 1]`-rescaled rewards.
pub fn run_successive_elimination(
    instance: &BanditInstance,
    delta: f64,
    master_seed: u64,
    trial: u64,
) -> Result<TrialReport, TrialError> {
    let start = Instant::now();
    let k = instance.k();
    let mut rng = trial_rng(master_seed, trial);
    let denom = instance
        .arms
        .iter()
        .map(|a| a.reward_bound(instance.gamma))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut surviving: Vec<usize> = (0..k).collect();
    let mut sums = vec![0.0f64; k];
    let mut counts = vec![0u64; k];
    let mut tau: u64 = 0;
    let mut t: u64 = 0;
    while surviving.len() > 1 {
        t += 1;
        for &i in &surviving {
            sums[i] += instance.sample_arm(i, &mut rng) / denom;
            counts[i] += 1;
        }
        tau += surviving.len() as u64;
        if tau >= SAMPLE_CAP {
            return Err(TrialError::SampleCapExceeded {
                trial,
                seed: master_seed,
                cap: SAMPLE_CAP,
            });
        }
        let xi = ((4.0 * k as f64 * (t as f64) * (t as f64) / delta).ln() / t as f64).sqrt();
        let mu_max = surviving
            .iter()
            .map(|&i| sums[i] / t as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        surviving.retain(|&i| mu_max - sums[i] / (t as f64) < 2.0 * xi);
    }
    Ok(TrialReport {
        algorithm: Algorithm::Se,
        recommended: surviving[0],
        stopping_time: tau,
        arm_counts: counts,
        batches: t,
        solver_time_s: 0.0,
        total_time_s: start.elapsed().as_secs_f64(),
        seed: master_seed,
        trial,
        z_final: f64::NAN,
        z_prev: f64::NAN,
    })
}

/// Dispatch by algorithm id.
pub fn run_trial(
    instance: &BanditInstance,
    algorithm: Algorithm,
    rule: &StoppingRule,
    master_seed: u64,
    trial: u64,
    tol: &SolveTolerances,
) -> Result<TrialReport, TrialError> {
    match algorithm {
        Algorithm::Tsa => run_tsa(instance, rule, master_seed, trial, tol),
        Algorithm::Tse => run_tse(instance, rule, master_seed, trial, tol),
        Algorithm::Se => run_successive_elimination(instance, rule.delta, master_seed, trial),
    }
}
