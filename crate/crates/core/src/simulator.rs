//! Monte Carlo evaluation of policies.
//!
//! Trial `k` draws everything from a ChaCha8 stream keyed by
//! `(master_seed, k)`, so trials are independent, individually replayable
//! and may run on any number of threads. Summaries accumulate in fixed-point
//! integers, which makes merging associative and bitwise order-independent.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{Belief, LOG_ODDS_TIE_TOL};
use crate::bounds::BoundsReport;
use crate::error::{Error, Result};
use crate::policy::{build_policy, fixed_n_policy, Policy, PolicyKind, Step};
use crate::{Model, Rule};

/// Binary digits kept for posterior errors and their squares.
const ERROR_BITS: i32 = 96;
/// Binary digits kept for the products `τ · error`.
const CROSS_BITS: i32 = 64;

fn to_fixed(x: f64, bits: i32) -> u128 {
    (x * 2f64.powi(bits)).round() as u128
}

fn from_fixed(x: u128, bits: i32) -> f64 {
    x as f64 * 2f64.powi(-bits)
}

/// Generator for trial `index` of a run seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// One simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub index: u64,
    pub true_hypothesis: usize,
    pub stopping_time: usize,
    pub declared: usize,
    pub correct: bool,
    /// `1 - max ρ(τ)`.
    pub posterior_error: f64,
    pub truncated: bool,
    /// Master seed; with `index` it identifies the trial's random stream.
    pub seed: u64,
}

/// Aggregate of a set of trials.
///
/// `pe` is the mean terminal posterior error, an unbiased estimate of the
/// MAP error probability that stays informative when errors are rare; the
/// 0/1 error rate is kept alongside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationSummary {
    pub trials: u64,
    pub truncated: u64,
    pub wrong: u64,
    pub master_seed: u64,
    penalty_bits: u64,
    sum_tau: u128,
    sum_tau_sq: u128,
    sum_err: u128,
    sum_err_sq: u128,
    sum_tau_err: u128,
}

impl SimulationSummary {
    pub fn empty(penalty: f64, master_seed: u64) -> Self {
        Self {
            trials: 0,
            truncated: 0,
            wrong: 0,
            master_seed,
            penalty_bits: penalty.to_bits(),
            sum_tau: 0,
            sum_tau_sq: 0,
            sum_err: 0,
            sum_err_sq: 0,
            sum_tau_err: 0,
        }
    }

    pub fn push(&mut self, record: &TrialRecord) {
        let tau = record.stopping_time as u128;
        let e = record.posterior_error;
        self.trials += 1;
        self.truncated += record.truncated as u64;
        self.wrong += !record.correct as u64;
        self.sum_tau += tau;
        self.sum_tau_sq += tau * tau;
        self.sum_err += to_fixed(e, ERROR_BITS);
        self.sum_err_sq += to_fixed(e * e, ERROR_BITS);
        self.sum_tau_err += to_fixed(record.stopping_time as f64 * e, CROSS_BITS);
    }

    /// Combines two disjoint sets of trials from the same run.
    pub fn merge(mut self, other: &Self) -> Self {
        debug_assert_eq!(self.penalty_bits, other.penalty_bits);
        self.trials += other.trials;
        self.truncated += other.truncated;
        self.wrong += other.wrong;
        self.sum_tau += other.sum_tau;
        self.sum_tau_sq += other.sum_tau_sq;
        self.sum_err += other.sum_err;
        self.sum_err_sq += other.sum_err_sq;
        self.sum_tau_err += other.sum_tau_err;
        self
    }

    pub fn penalty(&self) -> f64 {
        f64::from_bits(self.penalty_bits)
    }

    fn n(&self) -> f64 {
        self.trials as f64
    }

    pub fn mean_tau(&self) -> f64 {
        self.sum_tau as f64 / self.n()
    }

    fn var_tau(&self) -> f64 {
        if self.trials < 2 {
            return 0.0;
        }
        let n = self.trials as u128;
        // exact in integers: N Στ² − (Στ)²
        let numer = n * self.sum_tau_sq - self.sum_tau * self.sum_tau;
        numer as f64 / (self.n() * (self.n() - 1.0))
    }

    fn var_err(&self) -> f64 {
        if self.trials < 2 {
            return 0.0;
        }
        let s = from_fixed(self.sum_err, ERROR_BITS);
        let sq = from_fixed(self.sum_err_sq, ERROR_BITS);
        ((sq - s * s / self.n()) / (self.n() - 1.0)).max(0.0)
    }

    fn cov_tau_err(&self) -> f64 {
        if self.trials < 2 {
            return 0.0;
        }
        let cross = from_fixed(self.sum_tau_err, CROSS_BITS);
        let s = from_fixed(self.sum_err, ERROR_BITS);
        (cross - self.sum_tau as f64 * s / self.n()) / (self.n() - 1.0)
    }

    pub fn se_tau(&self) -> f64 {
        (self.var_tau() / self.n()).sqrt()
    }

    /// P̄e: mean terminal posterior error.
    pub fn pe(&self) -> f64 {
        from_fixed(self.sum_err, ERROR_BITS) / self.n()
    }

    pub fn se_pe(&self) -> f64 {
        (self.var_err() / self.n()).sqrt()
    }

    /// Fraction of trials whose declaration was wrong.
    pub fn error_rate(&self) -> f64 {
        self.wrong as f64 / self.n()
    }

    pub fn se_error_rate(&self) -> f64 {
        let p = self.error_rate();
        (p * (1.0 - p) / self.n()).sqrt()
    }

    /// `E[τ] + L · P̄e`.
    pub fn cost(&self) -> f64 {
        self.mean_tau() + self.penalty() * self.pe()
    }

    pub fn se_cost(&self) -> f64 {
        let l = self.penalty();
        let var = self.var_tau() + l * l * self.var_err() + 2.0 * l * self.cov_tau_err();
        (var.max(0.0) / self.n()).sqrt()
    }
}

/// Draws θ by inverting the prior CDF at a point of stratum `index mod M`.
fn draw_hypothesis<R: Rng + ?Sized>(prior: &[f64], index: u64, rng: &mut R) -> usize {
    let m = prior.len() as u64;
    let u = ((index % m) as f64 + rng.random::<f64>()) / m as f64;
    let mut cumulative = 0.0;
    let mut last = 0;
    for (i, &p) in prior.iter().enumerate() {
        if p > 0.0 {
            last = i;
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
    }
    last
}

/// Runs `policy` from `belief` under hypothesis `theta`.
fn run_path<R: Rng + ?Sized>(
    model: &Model,
    policy: &Policy,
    theta: usize,
    mut belief: Belief<f64>,
    rng: &mut R,
) -> Result<(Belief<f64>, usize, bool)> {
    let mut t = 0;
    loop {
        match policy.step(&belief, t, rng) {
            Step::Stop => return Ok((belief, t, false)),
            Step::Truncate => return Ok((belief, t, true)),
            Step::Action(a) => {
                let z = model.sample(theta, a, rng)?;
                belief = belief.bayes_update(model, a, &z)?;
                t += 1;
            }
        }
    }
}

fn check_policy(model: &Model, policy: &Policy) -> Result<()> {
    if policy.num_actions() != model.num_actions() {
        return Err(Error::Argument(format!(
            "policy has {} actions, model has {}",
            policy.num_actions(),
            model.num_actions()
        )));
    }
    if !policy.descriptor().phase_two.is_empty()
        && policy.descriptor().phase_two.len() != model.num_hypotheses()
    {
        return Err(Error::Argument(
            "policy was built for another hypothesis count".into(),
        ));
    }
    Ok(())
}

/// Replays trial `index` of a run.
pub fn run_trial(model: &Model, policy: &Policy, master_seed: u64, index: u64) -> Result<TrialRecord> {
    let mut rng = trial_rng(master_seed, index);
    let theta = draw_hypothesis(model.prior(), index, &mut rng);
    let (belief, tau, truncated) = run_path(model, policy, theta, Belief::prior(model)?, &mut rng)?;
    let declared = policy.declare(&belief);
    Ok(TrialRecord {
        index,
        true_hypothesis: theta,
        stopping_time: tau,
        declared,
        correct: declared == theta,
        posterior_error: belief.posterior_error(),
        truncated,
        seed: master_seed,
    })
}

/// Summary of the trials with indices in `range`; shards of a run merge
/// into exactly the summary of the whole run.
pub fn run_trial_range(
    model: &Model,
    policy: &Policy,
    range: Range<u64>,
    master_seed: u64,
) -> Result<SimulationSummary> {
    check_policy(model, policy)?;
    let empty = || SimulationSummary::empty(model.penalty(), master_seed);
    range
        .into_par_iter()
        .map(|k| run_trial(model, policy, master_seed, k))
        .try_fold(empty, |mut acc, record| {
            acc.push(&record?);
            Ok::<_, Error>(acc)
        })
        .try_reduce(empty, |a, b| Ok(a.merge(&b)))
}

/// Runs `trials` independent trials.
pub fn run_trials(
    model: &Model,
    policy: &Policy,
    trials: u64,
    master_seed: u64,
) -> Result<SimulationSummary> {
    if trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    run_trial_range(model, policy, 0..trials, master_seed)
}

/// Runs `trials` trials and also returns every record, ordered by index.
pub fn run_trials_with_records(
    model: &Model,
    policy: &Policy,
    trials: u64,
    master_seed: u64,
) -> Result<(SimulationSummary, Vec<TrialRecord>)> {
    if trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    check_policy(model, policy)?;
    let records = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(model, policy, master_seed, k))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = SimulationSummary::empty(model.penalty(), master_seed);
    for r in &records {
        summary.push(r);
    }
    Ok((summary, records))
}

/// Policy family plus the parameters needed to rebuild it at any L.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Rule of a fixed policy.
    pub lambda: Option<Rule>,
    /// First-phase exit level of the two-phase policy.
    pub phase_threshold: Option<f64>,
    /// Fixed policies only: stop after this many steps instead of by threshold.
    pub fixed_n: Option<usize>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            lambda: None,
            phase_threshold: None,
            fixed_n: None,
        }
    }

    /// Whether building needs a bounds report.
    pub fn needs_bounds(&self) -> bool {
        !(self.kind == PolicyKind::Fixed && self.fixed_n.is_some())
    }

    /// Builds the policy at the model's penalty. `bounds` may be `None` only
    /// when [`Self::needs_bounds`] is false.
    pub fn build(&self, model: &Model, bounds: Option<&BoundsReport>) -> Result<Policy> {
        if let (PolicyKind::Fixed, Some(n)) = (self.kind, self.fixed_n) {
            let lambda = self
                .lambda
                .clone()
                .ok_or_else(|| Error::Argument("fixed policy needs a rule".into()))?;
            if lambda.num_actions() != model.num_actions() {
                return Err(Error::Argument(format!(
                    "rule has {} weights for {} actions",
                    lambda.num_actions(),
                    model.num_actions()
                )));
            }
            return fixed_n_policy(lambda, n);
        }
        if self.fixed_n.is_some() {
            return Err(Error::Argument(
                "a fixed horizon applies to fixed policies only".into(),
            ));
        }
        let bounds = bounds.ok_or_else(|| Error::Argument("policy needs a bounds report".into()))?;
        build_policy(
            self.kind,
            model,
            bounds,
            self.lambda.as_ref(),
            self.phase_threshold,
        )
    }
}

/// One row of a cost-versus-L sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub penalty: f64,
    pub log_l: f64,
    pub summary: SimulationSummary,
}

impl SweepRow {
    pub fn cost_over_log_l(&self) -> f64 {
        self.summary.cost() / self.log_l
    }
}

fn check_penalties(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Argument("at least one L value is required".into()));
    }
    if values.iter().any(|l| !(*l > 1.0) || !l.is_finite()) {
        return Err(Error::Argument("L values must be finite and exceed 1".into()));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("L values must be strictly increasing".into()));
    }
    Ok(())
}

/// Rebuilds the policy at each L (coefficients fixed) and simulates it.
pub fn sweep_l(
    model: &Model,
    bounds: Option<&BoundsReport>,
    spec: &PolicySpec,
    penalties: &[f64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    check_penalties(penalties)?;
    penalties
        .iter()
        .map(|&l| {
            let at_l = model.with_penalty(l)?;
            let policy = spec.build(&at_l, bounds)?;
            Ok(SweepRow {
                penalty: l,
                log_l: l.ln(),
                summary: run_trials(&at_l, &policy, trials, master_seed)?,
            })
        })
        .collect()
}

/// Monte Carlo pairwise error rates `e_ij(n) = P(ρ_i(n) < ρ_j(n) | θ = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseRates {
    pub rates: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    /// Fraction of paths with `ρ_i(n) = ρ_j(n)` (log-odds within the tie tolerance).
    pub ties: Vec<Vec<f64>>,
    pub horizon: usize,
    pub trials: u64,
}

/// Estimates `e_ij(n)` under i.i.d. `lambda` actions, `trials` paths per hypothesis.
pub fn pairwise_error_rates(
    model: &Model,
    lambda: &Rule,
    horizon: usize,
    trials: u64,
    master_seed: u64,
) -> Result<PairwiseRates> {
    if trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    let policy = fixed_n_policy(lambda.clone(), horizon)?;
    check_policy(model, &policy)?;
    let m = model.num_hypotheses();
    let prior = Belief::prior(model)?;
    let mut rates = vec![vec![0.0; m]; m];
    let mut stderr = vec![vec![0.0; m]; m];
    let mut ties = vec![vec![0.0; m]; m];
    for i in 0..m {
        let counts = (0..trials)
            .into_par_iter()
            .map(|k| -> Result<Vec<(u64, u64)>> {
                let mut rng = trial_rng(master_seed, i as u64 * trials + k);
                let (belief, _, _) = run_path(model, &policy, i, prior.clone(), &mut rng)?;
                (0..m)
                    .map(|j| {
                        if j == i {
                            return Ok((0, 0));
                        }
                        let odds = belief.log_odds(i, j)?;
                        Ok((
                            (odds < -LOG_ODDS_TIE_TOL) as u64,
                            (odds.abs() <= LOG_ODDS_TIE_TOL) as u64,
                        ))
                    })
                    .collect()
            })
            .try_reduce(
                || vec![(0, 0); m],
                |a, b| Ok(a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect()),
            )?;
        for j in (0..m).filter(|&j| j != i) {
            let p = counts[j].0 as f64 / trials as f64;
            rates[i][j] = p;
            stderr[i][j] = (p * (1.0 - p) / trials as f64).sqrt();
            ties[i][j] = counts[j].1 as f64 / trials as f64;
        }
    }
    Ok(PairwiseRates {
        rates,
        stderr,
        ties,
        horizon,
        trials,
    })
}

/// Bisection settings for matching a sequential policy's mean stopping time to a budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetMatching {
    /// Relative tolerance on the mean stopping time.
    pub tolerance: f64,
    /// Trials per bisection probe (common random numbers across probes).
    pub probe_trials: u64,
    pub max_iterations: usize,
}

impl Default for BudgetMatching {
    fn default() -> Self {
        Self {
            tolerance: 0.02,
            probe_trials: 4000,
            max_iterations: 80,
        }
    }
}

/// One budget of an exponent estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub budget: f64,
    /// Penalty the policy ran at (sequential policies), or the sample size (non-sequential).
    pub penalty: f64,
    pub matched: bool,
    pub mean_tau: f64,
    pub pe: f64,
    pub se_pe: f64,
    /// No error mass was observed; `pe` is the `1/(2N)` floor.
    pub floored: bool,
}

/// Least-squares slope of `-log P̂e` against the realized mean stopping time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub slope: f64,
    pub stderr: f64,
    /// Some point was floored, so the slope only bounds the exponent from below.
    pub lower_bound_only: bool,
    pub points: Vec<BudgetPoint>,
    pub matching: BudgetMatching,
}

const PROBE_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;
const MAX_LOG_L: f64 = 700.0;

/// Estimates the error exponent of a policy family.
///
/// Non-sequential policies (`nn`) run exactly `round(t)` steps with the D̂
/// rule. Sequential ones are tuned by bisection on `log L` until the probe
/// mean of τ is within the matching tolerance of `t`; the final estimate
/// then uses fresh trials at that L.
pub fn estimate_error_exponent(
    model: &Model,
    bounds: &BoundsReport,
    spec: &PolicySpec,
    budgets: &[f64],
    trials: u64,
    master_seed: u64,
    matching: &BudgetMatching,
) -> Result<ExponentEstimate> {
    if budgets.len() < 2 {
        return Err(Error::Argument(
            "slope estimation needs at least two budgets".into(),
        ));
    }
    if budgets.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument(
            "budgets must be positive and strictly increasing".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::Argument("at least one trial is required".into()));
    }
    let mut points = Vec::with_capacity(budgets.len());
    for &t in budgets {
        let (penalty, matched, summary) = match spec.kind {
            _ if spec.kind == PolicyKind::Fixed && spec.fixed_n.is_some() => {
                return Err(Error::Argument(
                    "exponent budgets set the horizon; drop the fixed horizon".into(),
                ));
            }
            PolicyKind::Nn => {
                let n = t.round() as usize;
                let policy = fixed_n_policy(bounds.d_hat.lambda.clone(), n)?;
                (n as f64, true, run_trials(model, &policy, trials, master_seed)?)
            }
            _ => {
                let (log_l, matched) = match_budget(model, bounds, spec, t, master_seed, matching)?;
                let at_l = model.with_penalty(log_l.exp())?;
                let policy = spec.build(&at_l, Some(bounds))?;
                let summary = run_trials(&at_l, &policy, trials, master_seed ^ PROBE_SEED_MIX)?;
                (log_l.exp(), matched, summary)
            }
        };
        let floored = summary.pe() <= 0.0;
        points.push(BudgetPoint {
            budget: t,
            penalty,
            matched,
            mean_tau: summary.mean_tau(),
            pe: if floored {
                0.5 / trials as f64
            } else {
                summary.pe()
            },
            se_pe: summary.se_pe(),
            floored,
        });
    }
    let (slope, stderr) = fit_slope(&points);
    Ok(ExponentEstimate {
        slope,
        stderr,
        lower_bound_only: points.iter().any(|p| p.floored),
        points,
        matching: *matching,
    })
}

fn probe_mean_tau(
    model: &Model,
    bounds: &BoundsReport,
    spec: &PolicySpec,
    log_l: f64,
    seed: u64,
    trials: u64,
) -> Result<f64> {
    let at_l = model.with_penalty(log_l.exp())?;
    let policy = spec.build(&at_l, Some(bounds))?;
    Ok(run_trials(&at_l, &policy, trials, seed)?.mean_tau())
}

/// Bisection on `log L`; common random numbers make the probe mean monotone in L.
fn match_budget(
    model: &Model,
    bounds: &BoundsReport,
    spec: &PolicySpec,
    target: f64,
    seed: u64,
    matching: &BudgetMatching,
) -> Result<(f64, bool)> {
    let probe = |log_l: f64| probe_mean_tau(model, bounds, spec, log_l, seed, matching.probe_trials);
    let within = |tau: f64| (tau - target).abs() <= matching.tolerance * target;
    let mut lo = 1e-6;
    let mut hi = 1.0;
    let mut best = (f64::INFINITY, hi);
    loop {
        let tau = probe(hi)?;
        if within(tau) {
            return Ok((hi, true));
        }
        if (tau - target).abs() < best.0 {
            best = ((tau - target).abs(), hi);
        }
        if tau > target {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MAX_LOG_L {
            return Err(Error::Budget(format!(
                "budget {target} needs log L above {MAX_LOG_L}"
            )));
        }
    }
    for _ in 0..matching.max_iterations {
        let mid = 0.5 * (lo + hi);
        let tau = probe(mid)?;
        if within(tau) {
            return Ok((mid, true));
        }
        if (tau - target).abs() < best.0 {
            best = ((tau - target).abs(), mid);
        }
        if tau > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((best.1, false))
}

/// Weighted least squares with delta-method weights `(P̂e / se)^2`; ordinary
/// least squares with residual error when some standard error is zero.
fn fit_slope(points: &[BudgetPoint]) -> (f64, f64) {
    let xs: Vec<f64> = points.iter().map(|p| p.mean_tau).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.pe.ln()).collect();
    let weighted = points.iter().all(|p| p.se_pe > 0.0 && !p.floored);
    let ws: Vec<f64> = if weighted {
        points.iter().map(|p| (p.pe / p.se_pe).powi(2)).collect()
    } else {
        vec![1.0; points.len()]
    };
    let sw: f64 = ws.iter().sum();
    let xbar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws.iter().zip(&xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    let sxy: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    if sxx <= 0.0 {
        return (f64::NAN, f64::INFINITY);
    }
    let slope = sxy / sxx;
    let stderr = if weighted {
        (1.0 / sxx).sqrt()
    } else if points.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - ybar - slope * (x - xbar)).powi(2))
            .sum();
        (rss / (points.len() - 2) as f64 / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, stderr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::BoundsSettings;
    use crate::policy::{sa_policy, sn_policy};

    fn ex1(l: f64) -> Model {
        Model::finite(
            vec![
                vec![vec![0.9, 0.1], vec![0.4, 0.6]],
                vec![vec![0.4, 0.6], vec![0.9, 0.1]],
            ],
            vec![0.5, 0.5],
            l,
        )
        .unwrap()
    }

    #[test]
    fn prior_declaration() {
        let m = ex1(10.0);
        let p = fixed_n_policy(Rule::vertex(2, 0), 0).unwrap();
        let s = run_trials(&m, &p, 1000, 1).unwrap();
        assert_eq!(s.pe(), 0.5);
        assert_eq!(s.se_pe(), 0.0);
        assert_eq!(s.mean_tau(), 0.0);
        assert_eq!(s.cost(), 5.0);
        // stratification assigns exactly half of the trials to each hypothesis
        assert_eq!(s.wrong, 500);
    }

    #[test]
    fn deterministic_and_shard_invariant() {
        let m = ex1(1e3);
        let bounds = BoundsReport::compute(&m, &BoundsSettings::default()).unwrap();
        let p = sa_policy(&m, &bounds, None).unwrap();
        let a = run_trials(&m, &p, 2000, 42).unwrap();
        let b = run_trials(&m, &p, 2000, 42).unwrap();
        assert_eq!(a, b);
        let shards = [0..700, 700..1300, 1300..2000];
        let merged = shards
            .iter()
            .rev()
            .map(|r| run_trial_range(&m, &p, r.clone(), 42).unwrap())
            .fold(SimulationSummary::empty(1e3, 42), |acc, s| acc.merge(&s));
        assert_eq!(merged, a);
        let (with_records, records) = run_trials_with_records(&m, &p, 2000, 42).unwrap();
        assert_eq!(with_records, a);
        assert_eq!(records[17], run_trial(&m, &p, 42, 17).unwrap());
        assert_ne!(run_trials(&m, &p, 2000, 43).unwrap(), a);
    }

    #[test]
    fn cost_identity_and_error_bound() {
        let m = ex1(1e4);
        let bounds = BoundsReport::compute(&m, &BoundsSettings::default()).unwrap();
        let p = sn_policy(&m, &bounds).unwrap();
        let (s, records) = run_trials_with_records(&m, &p, 10_000, 3).unwrap();
        assert_eq!(s.cost(), s.mean_tau() + 1e4 * s.pe());
        assert!(s.pe() <= 1e-4 + 3.0 * s.se_pe());
        assert!(records.iter().all(|r| r.posterior_error <= 1e-4 && !r.truncated));
        assert_eq!(s.truncated, 0);
        let mean = records.iter().map(|r| r.stopping_time as f64).sum::<f64>() / 1e4;
        assert!((mean - s.mean_tau()).abs() < 1e-12);
    }

    #[test]
    fn summary_statistics_match_direct_computation() {
        let m = ex1(50.0);
        let p = fixed_n_policy(Rule::uniform(2), 3).unwrap();
        let (s, records) = run_trials_with_records(&m, &p, 5000, 8).unwrap();
        let n = records.len() as f64;
        let e: Vec<f64> = records.iter().map(|r| r.posterior_error).collect();
        let mean = e.iter().sum::<f64>() / n;
        let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((s.pe() - mean).abs() < 1e-12);
        assert!((s.se_pe() - (var / n).sqrt()).abs() < 1e-9);
        let costs: Vec<f64> = records
            .iter()
            .map(|r| r.stopping_time as f64 + 50.0 * r.posterior_error)
            .collect();
        let cm = costs.iter().sum::<f64>() / n;
        let cv = costs.iter().map(|x| (x - cm).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((s.se_cost() - (cv / n).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn stratified_hypothesis_draws_follow_prior() {
        let prior = [0.2, 0.5, 0.3];
        let mut counts = [0usize; 3];
        for k in 0..30_000u64 {
            let mut rng = trial_rng(5, k);
            counts[draw_hypothesis(&prior, k, &mut rng)] += 1;
        }
        for i in 0..3 {
            let f = counts[i] as f64 / 30_000.0;
            assert!((f - prior[i]).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn pairwise_rates_examples() {
        let m = ex1(10.0);
        let r = pairwise_error_rates(&m, &Rule::uniform(2), 0, 100, 1).unwrap();
        assert_eq!(r.rates[0][1], 0.0);
        assert_eq!(r.ties[0][1], 1.0);
        let same = Model::finite(
            vec![vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        let r = pairwise_error_rates(&same, &Rule::uniform(1), 10, 500, 1).unwrap();
        assert_eq!(r.rates[0][1] + r.ties[0][1], 1.0);
        let r = pairwise_error_rates(&m, &Rule::vertex(2, 0), 1, 20_000, 4).unwrap();
        assert!((r.rates[0][1] - 0.1).abs() <= 3.0 * r.stderr[0][1]);
    }

    #[test]
    fn rejects_bad_sweeps() {
        let m = ex1(10.0);
        let bounds = BoundsReport::compute(&m, &BoundsSettings::default()).unwrap();
        let spec = PolicySpec::new(PolicyKind::Sn);
        assert!(sweep_l(&m, Some(&bounds), &spec, &[100.0, 10.0], 10, 0).is_err());
        assert!(sweep_l(&m, Some(&bounds), &spec, &[1.0], 10, 0).is_err());
        let rows = sweep_l(&m, Some(&bounds), &spec, &[10.0, 100.0], 200, 0).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1].cost_over_log_l() - rows[1].summary.cost() / 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn budget_matching_hits_target() {
        let m = ex1(10.0);
        let bounds = BoundsReport::compute(&m, &BoundsSettings::default()).unwrap();
        let spec = PolicySpec::new(PolicyKind::Sa);
        let matching = BudgetMatching::default();
        let (log_l, matched) = match_budget(&m, &bounds, &spec, 12.0, 1, &matching).unwrap();
        assert!(matched);
        let tau = probe_mean_tau(&m, &bounds, &spec, log_l, 1, matching.probe_trials).unwrap();
        assert!((tau - 12.0).abs() <= 0.24);
    }

    #[test]
    fn slope_fit_on_exact_line() {
        let points: Vec<BudgetPoint> = [10.0, 20.0, 30.0]
            .iter()
            .map(|&t| BudgetPoint {
                budget: t,
                penalty: 1.0,
                matched: true,
                mean_tau: t,
                pe: (-0.3 * t - 1.0f64).exp(),
                se_pe: 0.0,
                floored: false,
            })
            .collect();
        let (slope, stderr) = fit_slope(&points);
        assert!((slope - 0.3).abs() < 1e-12);
        assert!(stderr < 1e-6);
    }
}
