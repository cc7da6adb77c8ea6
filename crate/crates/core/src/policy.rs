//! Sensing policies: non-sequential non-adaptive, sequential non-adaptive,
//! the two-phase sequential adaptive policy, and fixed-rule policies.
//!
//! Every policy is a pure function of the current belief and step count.
//! It either stops or names the randomized rule the next action is drawn
//! from. Declarations are always MAP.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::bounds::BoundsReport;
use crate::error::{Error, Result};
use crate::{Model, Rule};

/// Multiplier of `log L / max min R` in the safety horizon.
pub const SAFETY_FACTOR: f64 = 1000.0;
/// Default belief level at which the two-phase policy leaves its first phase.
pub const DEFAULT_PHASE_THRESHOLD: f64 = 0.5;
/// Step cap for threshold policies built without a safety horizon.
pub const DEFAULT_STEP_CAP: usize = 10_000_000;
/// D̂ at or below this cannot define a sample size.
pub const D_HAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Fixed sample size, i.i.d. actions.
    Nn,
    /// Posterior-threshold stop, i.i.d. actions.
    Sn,
    /// Posterior-threshold stop, two-phase action selection.
    Sa,
    /// User-supplied rule with either stop.
    Fixed,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Nn => "nn",
            PolicyKind::Sn => "sn",
            PolicyKind::Sa => "sa",
            PolicyKind::Fixed => "fixed",
        }
    }
}

/// When a policy retires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StopRule {
    /// After exactly `n` observations.
    FixedN { n: usize },
    /// Once the posterior error `1 - max ρ` is at most `1/penalty`.
    Threshold { penalty: f64 },
}

impl StopRule {
    pub fn threshold(penalty: f64) -> Result<Self> {
        if !(penalty > 1.0) || !penalty.is_finite() {
            return Err(Error::Argument(format!(
                "penalty must be finite and exceed 1, got {penalty}"
            )));
        }
        Ok(StopRule::Threshold { penalty })
    }
}

/// Immutable, serializable description of a policy; enough to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDescriptor {
    pub kind: PolicyKind,
    pub stop: StopRule,
    /// i.i.d. rule, or the first-phase rule of the two-phase policy.
    pub lambda: Rule,
    /// Second-phase rules λ*_i per hypothesis (two-phase policy only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase_two: Vec<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_threshold: Option<f64>,
    /// Threshold policies abort as truncated after this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_horizon: Option<usize>,
}

/// What a policy does at the current belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision<'a> {
    Stop,
    /// The safety horizon was reached before the stopping rule fired.
    Truncate,
    Sample(&'a Rule),
}

/// Outcome of one step with the action drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Stop,
    Truncate,
    Action(usize),
}

/// Executable policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    descriptor: PolicyDescriptor,
}

impl Policy {
    /// Validates a descriptor, e.g. one read back from a manifest.
    pub fn from_descriptor(descriptor: PolicyDescriptor) -> Result<Self> {
        let d = &descriptor;
        Rule::new(d.lambda.weights().to_vec())?;
        let k = d.lambda.num_actions();
        for rule in &d.phase_two {
            Rule::new(rule.weights().to_vec())?;
            if rule.num_actions() != k {
                return Err(Error::Argument(
                    "phase-two rules must share the action count".into(),
                ));
            }
        }
        if let StopRule::Threshold { penalty } = d.stop {
            StopRule::threshold(penalty)?;
        }
        match d.kind {
            PolicyKind::Sa => {
                if d.phase_two.len() < 2 {
                    return Err(Error::Argument(
                        "two-phase policy needs one rule per hypothesis".into(),
                    ));
                }
                let t = d.phase_threshold.unwrap_or(DEFAULT_PHASE_THRESHOLD);
                check_phase_threshold(t, d.phase_two.len())?;
            }
            _ if !d.phase_two.is_empty() || d.phase_threshold.is_some() => {
                return Err(Error::Argument(
                    "only the two-phase policy has phase parameters".into(),
                ));
            }
            _ => {}
        }
        Ok(Self { descriptor })
    }

    pub fn descriptor(&self) -> &PolicyDescriptor {
        &self.descriptor
    }

    pub fn kind(&self) -> PolicyKind {
        self.descriptor.kind
    }

    pub fn num_actions(&self) -> usize {
        self.descriptor.lambda.num_actions()
    }

    /// Stopping decision and action rule at `belief` after `step` observations.
    pub fn decide(&self, belief: &Belief<f64>, step: usize) -> Decision<'_> {
        let d = &self.descriptor;
        match d.stop {
            StopRule::FixedN { n } => {
                if step >= n {
                    return Decision::Stop;
                }
            }
            StopRule::Threshold { penalty } => {
                if belief.posterior_error() <= 1.0 / penalty {
                    return Decision::Stop;
                }
                if step >= d.safety_horizon.unwrap_or(DEFAULT_STEP_CAP) {
                    return Decision::Truncate;
                }
            }
        }
        if d.kind == PolicyKind::Sa {
            let threshold = d.phase_threshold.unwrap_or(DEFAULT_PHASE_THRESHOLD);
            if belief.max_prob() >= threshold {
                return Decision::Sample(&d.phase_two[belief.map_hypothesis()]);
            }
        }
        Decision::Sample(&d.lambda)
    }

    /// Draws the next action, if any.
    pub fn step<R: Rng + ?Sized>(&self, belief: &Belief<f64>, step: usize, rng: &mut R) -> Step {
        match self.decide(belief, step) {
            Decision::Stop => Step::Stop,
            Decision::Truncate => Step::Truncate,
            Decision::Sample(rule) => Step::Action(rule.sample(rng)),
        }
    }

    /// MAP declaration.
    pub fn declare(&self, belief: &Belief<f64>) -> usize {
        belief.map_hypothesis()
    }
}

fn check_phase_threshold(t: f64, m: usize) -> Result<()> {
    // the default 0.5 equals 1/M for two hypotheses, so the lower end is closed
    if !(t >= 1.0 / m as f64 && t < 1.0) {
        return Err(Error::Argument(format!(
            "phase threshold must lie in [1/{m}, 1), got {t}"
        )));
    }
    Ok(())
}

fn check_dimensions(model: &Model, bounds: &BoundsReport) -> Result<()> {
    if bounds.reliabilities.len() != model.num_hypotheses()
        || bounds.maxmin_r.lambda.num_actions() != model.num_actions()
    {
        return Err(Error::Argument(
            "bounds report does not belong to this model".into(),
        ));
    }
    Ok(())
}

/// `ceil(1000 · log L / max min R)`.
pub fn safety_horizon(penalty: f64, maxmin_r: f64) -> usize {
    (SAFETY_FACTOR * penalty.ln() / maxmin_r).ceil().max(1.0) as usize
}

/// `n̂ = ceil((log L + log(M-1) - min_{i,j} log ρ_i/ρ_j) / D̂)`, the o(log L) term set to zero.
pub fn nn_sample_size(model: &Model, d_hat: f64) -> Result<usize> {
    if !(d_hat > D_HAT_TOL) {
        return Err(Error::Assumption(format!(
            "D̂ = {d_hat} cannot define a sample size"
        )));
    }
    let prior = model.prior();
    let logs: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = model.num_hypotheses() as f64;
    let n = (model.penalty().ln() + (m - 1.0).ln() - (lo - hi)) / d_hat;
    Ok(n.ceil().max(0.0) as usize)
}

/// Non-sequential non-adaptive policy: `n̂` i.i.d. draws from the D̂ rule.
pub fn nn_policy(model: &Model, bounds: &BoundsReport) -> Result<Policy> {
    check_dimensions(model, bounds)?;
    let n = nn_sample_size(model, bounds.d_hat.value)?;
    Policy::from_descriptor(PolicyDescriptor {
        kind: PolicyKind::Nn,
        stop: StopRule::FixedN { n },
        lambda: bounds.d_hat.lambda.clone(),
        phase_two: Vec::new(),
        phase_threshold: None,
        safety_horizon: None,
    })
}

/// Sequential non-adaptive policy: i.i.d. draws from the weighted-harmonic
/// optimizer, stopping once the posterior error drops to `1/L`.
pub fn sn_policy(model: &Model, bounds: &BoundsReport) -> Result<Policy> {
    check_dimensions(model, bounds)?;
    Policy::from_descriptor(PolicyDescriptor {
        kind: PolicyKind::Sn,
        stop: StopRule::threshold(model.penalty())?,
        lambda: bounds.thm_bounds.sn_lambda.clone(),
        phase_two: Vec::new(),
        phase_threshold: None,
        safety_horizon: Some(safety_horizon(model.penalty(), bounds.maxmin_r.value)),
    })
}

/// Two-phase sequential adaptive policy.
///
/// While `max ρ < phase_threshold` actions come from the max-min rule, which
/// separates every pair; afterwards from λ*_î for the MAP hypothesis î.
pub fn sa_policy(model: &Model, bounds: &BoundsReport, phase_threshold: Option<f64>) -> Result<Policy> {
    check_dimensions(model, bounds)?;
    let t = phase_threshold.unwrap_or(DEFAULT_PHASE_THRESHOLD);
    check_phase_threshold(t, model.num_hypotheses())?;
    Policy::from_descriptor(PolicyDescriptor {
        kind: PolicyKind::Sa,
        stop: StopRule::threshold(model.penalty())?,
        lambda: bounds.maxmin_r.lambda.clone(),
        phase_two: bounds.reliabilities.iter().map(|r| r.lambda.clone()).collect(),
        phase_threshold: Some(t),
        safety_horizon: Some(safety_horizon(model.penalty(), bounds.maxmin_r.value)),
    })
}

/// i.i.d. draws from `lambda` with the given stop rule.
pub fn fixed_lambda_policy(lambda: Rule, stop: StopRule) -> Result<Policy> {
    Policy::from_descriptor(PolicyDescriptor {
        kind: PolicyKind::Fixed,
        stop,
        lambda,
        phase_two: Vec::new(),
        phase_threshold: None,
        safety_horizon: None,
    })
}

/// Fixed-horizon policy; `n = 0` declares from the prior.
pub fn fixed_n_policy(lambda: Rule, n: usize) -> Result<Policy> {
    fixed_lambda_policy(lambda, StopRule::FixedN { n })
}

impl Policy {
    /// Replaces the safety horizon of a threshold policy.
    pub fn with_safety_horizon(mut self, horizon: usize) -> Self {
        self.descriptor.safety_horizon = Some(horizon);
        self
    }
}

/// Builds a policy of `kind` for `model` at its current penalty.
///
/// `lambda` is required for [`PolicyKind::Fixed`], which then stops by the
/// posterior threshold; `phase_threshold` applies to [`PolicyKind::Sa`].
pub fn build_policy(
    kind: PolicyKind,
    model: &Model,
    bounds: &BoundsReport,
    lambda: Option<&Rule>,
    phase_threshold: Option<f64>,
) -> Result<Policy> {
    match kind {
        PolicyKind::Nn => nn_policy(model, bounds),
        PolicyKind::Sn => sn_policy(model, bounds),
        PolicyKind::Sa => sa_policy(model, bounds, phase_threshold),
        PolicyKind::Fixed => {
            let lambda = lambda.ok_or_else(|| Error::Argument("fixed policy needs a rule".into()))?;
            if lambda.num_actions() != model.num_actions() {
                return Err(Error::Argument(format!(
                    "rule has {} weights for {} actions",
                    lambda.num_actions(),
                    model.num_actions()
                )));
            }
            Ok(
                fixed_lambda_policy(lambda.clone(), StopRule::threshold(model.penalty())?)?
                    .with_safety_horizon(safety_horizon(model.penalty(), bounds.maxmin_r.value)),
            )
        }
    }
}
