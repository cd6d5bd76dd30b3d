//! Monte Carlo density sweeps: the fraction of random modification
//! instances that are solvable, as a function of the operator density
//! `alpha = o / n`, with Wilson confidence intervals and a 0.5-crossing
//! threshold estimate.
//!
//! Trial `t` at grid index `i` draws its instance from the sub-seed
//! `derive_seed(seed, [i, t])`. Counts are integer sums, so a sweep gives
//! the same curve on one thread or many.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::upper_bound_alpha;
use crate::error::{invalid, Error, Result};
use crate::generate::{
    derive_seed, gen_modification_instance, gen_modification_setup, gen_operator, ModelParams,
};
use crate::modify::{one_step_solvable, solves_in_one_step};
use crate::oracle::{plan_bfs, SearchBudget, SearchOutcome};

pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_TRIALS: usize = 2000;

const PROBE_STREAM: u64 = 0x70_72_6f_62_65;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    OneStep,
    Bfs(SearchBudget),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Instance parameters; `o` and `seed` are set per trial.
    pub base: ModelParams,
    pub densities: Vec<f64>,
    pub trials: usize,
    pub confidence: f64,
    pub solver: Solver,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(base: ModelParams, densities: Vec<f64>) -> Self {
        SweepConfig {
            base,
            densities,
            trials: DEFAULT_TRIALS,
            confidence: DEFAULT_CONFIDENCE,
            solver: Solver::OneStep,
            seed: base.seed,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams { o: 0, ..self.base }.validate()?;
        if self.base.m == 0 {
            return Err(invalid("sweeps need m >= 1 so that a goal literal is unachieved"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        check_confidence(self.confidence)?;
        if self.densities.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(invalid("densities must be finite and nonnegative"));
        }
        if self.densities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("densities must be strictly increasing"));
        }
        Ok(())
    }

    /// Operator count for density `alpha`, rounded half up.
    pub fn operators_for(&self, alpha: f64) -> usize {
        (alpha * self.base.n as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub operators: usize,
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub config: SweepConfig,
    pub points: Vec<CurvePoint>,
    pub threshold_estimate: Option<f64>,
}

fn check_confidence(confidence: f64) -> Result<()> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence {confidence} must lie strictly between 0 and 1")));
    }
    Ok(())
}

/// Wilson score interval for `successes` out of `trials` at the given
/// two-sided confidence level.
pub fn wilson_ci(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!("{successes} successes out of {trials} trials")));
    }
    check_confidence(confidence)?;
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    Ok((low, high))
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

/// Decides one random instance. The one-step solver draws operators lazily
/// and stops at the first one that solves; the instance is the same one
/// [`gen_modification_instance`] would build.
pub fn run_trial(params: &ModelParams, solver: Solver) -> Result<bool> {
    match solver {
        Solver::OneStep => {
            let setup = gen_modification_setup(params)?;
            let goal = setup.goal();
            for id in 0..params.o {
                if solves_in_one_step(&gen_operator(params, id)?, &setup.initial.belief, &goal) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Solver::Bfs(budget) => match plan_bfs(&gen_modification_instance(params)?, budget)? {
            SearchOutcome::FoundPlan(_) => Ok(true),
            SearchOutcome::NoPlanWithinDepth => Ok(false),
            SearchOutcome::BudgetExhausted => Err(Error::Budget(format!(
                "search budget exhausted on trial seed {}",
                params.seed
            ))),
        },
    }
}

fn count_successes(config: &SweepConfig, index: usize, operators: usize) -> Result<u64> {
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let params =
                ModelParams { o: operators, seed: derive_seed(config.seed, &[index as u64, t]), ..config.base };
            run_trial(&params, config.solver).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

fn run_point(config: &SweepConfig, index: usize, alpha: f64) -> Result<CurvePoint> {
    let operators = config.operators_for(alpha);
    let successes = count_successes(config, index, operators)?;
    let trials = config.trials as u64;
    let (ci_low, ci_high) = wilson_ci(successes, trials, config.confidence)?;
    Ok(CurvePoint {
        alpha,
        operators,
        trials,
        successes,
        p_hat: successes as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}

pub fn run_sweep(config: &SweepConfig) -> Result<Curve> {
    config.validate()?;
    in_pool(config.workers, || {
        let points = config
            .densities
            .iter()
            .enumerate()
            .map(|(i, &alpha)| run_point(config, i, alpha))
            .collect::<Result<Vec<_>>>()?;
        let threshold_estimate = estimate_threshold(&points);
        Ok(Curve { config: config.clone(), points, threshold_estimate })
    })?
}

/// First crossing of `p_hat` through 0.5, linearly interpolated between the
/// last point below 0.5 and the first point at or above it.
pub fn estimate_threshold(points: &[CurvePoint]) -> Option<f64> {
    let first = points.iter().position(|p| p.p_hat >= 0.5)?;
    if first == 0 {
        return Some(points[0].alpha);
    }
    let (lo, hi) = (&points[first - 1], &points[first]);
    Some(lo.alpha + (0.5 - lo.p_hat) / (hi.p_hat - lo.p_hat) * (hi.alpha - lo.alpha))
}

/// How the adaptive grid is laid out: probe by doubling from `start` until
/// the solvable fraction exceeds `target`, then sweep `points` evenly spaced
/// densities over the bracket, extending at the same spacing while the last
/// point is still at or below `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGrid {
    pub start: f64,
    pub points: usize,
    pub target: f64,
    pub max_alpha: f64,
}

impl Default for AdaptiveGrid {
    fn default() -> Self {
        AdaptiveGrid { start: 0.25, points: 24, target: 0.95, max_alpha: 4096.0 }
    }
}

/// Runs a sweep over an adaptively chosen grid. `template.densities` is
/// ignored; the returned curve echoes the grid actually used.
pub fn adaptive_sweep(template: &SweepConfig, grid: AdaptiveGrid) -> Result<Curve> {
    if !(grid.start > 0.0 && grid.start.is_finite()) || grid.points < 2 || grid.max_alpha < grid.start {
        return Err(invalid("adaptive grid needs start > 0, at least two points and max_alpha >= start"));
    }
    let probe = SweepConfig {
        densities: vec![grid.start],
        seed: derive_seed(template.seed, &[PROBE_STREAM]),
        ..template.clone()
    };
    probe.validate()?;

    in_pool(template.workers, || {
        let mut alpha = grid.start;
        let mut index = 0;
        while run_point(&probe, index, alpha)?.p_hat <= grid.target && alpha * 2.0 <= grid.max_alpha {
            alpha *= 2.0;
            index += 1;
        }
        let step = (alpha - grid.start) / (grid.points - 1) as f64;
        let mut densities: Vec<f64> = (0..grid.points).map(|i| grid.start + step * i as f64).collect();
        densities[grid.points - 1] = alpha;

        let mut config = SweepConfig { densities: densities.clone(), ..template.clone() };
        let mut points = densities
            .iter()
            .enumerate()
            .map(|(i, &a)| run_point(&config, i, a))
            .collect::<Result<Vec<_>>>()?;
        while points.last().is_some_and(|p| p.p_hat <= grid.target) {
            let next = alpha + step;
            if next > grid.max_alpha {
                break;
            }
            alpha = next;
            points.push(run_point(&config, points.len(), alpha)?);
            config.densities.push(alpha);
        }
        let threshold_estimate = estimate_threshold(&points);
        Ok(Curve { config, points, threshold_estimate })
    })?
}

/// Per-trial tallies of one-step solvability and of the weaker event that
/// the target literal is a postcondition of at least one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialCounts {
    pub trials: u64,
    pub solvable: u64,
    pub target_in_post: u64,
}

/// Generates `trials` complete modification instances with `o` operators
/// (trial `t` from `derive_seed(base.seed, [t])`) and tallies both events.
pub fn one_step_counts(base: &ModelParams, o: usize, trials: usize) -> Result<TrialCounts> {
    let tallies = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let params = ModelParams { o, seed: derive_seed(base.seed, &[t]), ..*base };
            let inst = gen_modification_instance(&params)?;
            let target = inst.target()[0];
            let solvable = one_step_solvable(&inst).is_some();
            let covered = inst.operators().iter().any(|op| op.post().contains(&target));
            Ok((u64::from(solvable), u64::from(covered)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(TrialCounts { trials: trials as u64, solvable: tallies.0, target_in_post: tallies.1 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundReport {
    pub sigma: f64,
    pub operators: usize,
    pub counts: TrialCounts,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `fraction <= sigma + CI half-width`.
    pub pass: bool,
}

/// Checks that with `floor(alpha_ub)` operators at most about a `sigma`
/// fraction of instances is one-step solvable.
pub fn check_upper_bound(base: &ModelParams, sigma: f64, trials: usize) -> Result<UpperBoundReport> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let operators = upper_bound_alpha(base.n, base.c, sigma)?.floor() as usize;
    let counts = one_step_counts(base, operators, trials)?;
    let (ci_low, ci_high) = wilson_ci(counts.solvable, counts.trials, DEFAULT_CONFIDENCE)?;
    let fraction = counts.solvable as f64 / counts.trials as f64;
    let pass = fraction <= sigma + (ci_high - ci_low) / 2.0;
    Ok(UpperBoundReport { sigma, operators, counts, fraction, ci_low, ci_high, pass })
}
