//! Posterior beliefs over hypotheses and Bayes updates in log space.

use crate::error::{Error, Result};
use crate::model::{normalization_tol, Observation, ObservationModel};
use crate::scalar::Scalar;

/// Log-odds within this of zero count as ties when ordering two beliefs.
pub const LOG_ODDS_TIE_TOL: f64 = 1e-9;

/// Posterior probability vector ρ, stored as normalized log-masses with a
/// cached linear-scale copy.
///
/// Zero masses are `-inf` in log space and stay zero under every update.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<T> {
    log_probs: Vec<T>,
    probs: Vec<T>,
}

impl<T: Scalar> Belief<T> {
    /// Builds a belief from a probability vector that sums to one.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Argument("belief needs at least one hypothesis".into()));
        }
        if probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(Error::Argument("belief entries must be nonnegative".into()));
        }
        let total = probs.iter().fold(T::zero(), |acc, &p| acc + p);
        if (total - T::one()).abs() > normalization_tol::<T>() {
            return Err(Error::Argument(format!("belief sums to {total}, not 1")));
        }
        let log_masses = probs
            .iter()
            .map(|&p| if p > T::zero() { p.ln() } else { T::neg_infinity() })
            .collect();
        Self::from_log_masses(log_masses)
    }

    /// Belief proportional to `exp(log_masses)`; fails if every mass is zero.
    pub fn from_log_masses(log_masses: Vec<T>) -> Result<Self> {
        if log_masses.is_empty() {
            return Err(Error::Argument("belief needs at least one hypothesis".into()));
        }
        if log_masses.iter().any(|l| l.is_nan() || *l == T::infinity()) {
            return Err(Error::Argument("log-masses must be finite or -inf".into()));
        }
        let max = log_masses.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return Err(Error::ImpossibleObservation);
        }
        let shifted: Vec<T> = log_masses.iter().map(|&l| (l - max).exp()).collect();
        let total = shifted.iter().fold(T::zero(), |acc, &w| acc + w);
        let log_total = max + total.ln();
        Ok(Self {
            log_probs: log_masses.iter().map(|&l| l - log_total).collect(),
            probs: shifted.iter().map(|&w| w / total).collect(),
        })
    }

    pub fn uniform(m: usize) -> Self {
        Self::from_log_masses(vec![T::zero(); m]).expect("uniform belief is valid")
    }

    /// The model's prior as a belief.
    pub fn prior(model: &ObservationModel<T>) -> Result<Self> {
        Self::new(model.prior().to_vec())
    }

    pub fn num_hypotheses(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// `log ρ_i`, `-inf` for zero entries.
    pub fn log_probs(&self) -> &[T] {
        &self.log_probs
    }

    /// MAP hypothesis, lowest index on ties.
    pub fn map_hypothesis(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn max_prob(&self) -> T {
        self.probs[self.map_hypothesis()]
    }

    /// `1 - max_i ρ_i`, summed over the non-MAP entries to keep tiny errors accurate.
    pub fn posterior_error(&self) -> T {
        let map = self.map_hypothesis();
        self.probs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != map)
            .fold(T::zero(), |acc, (_, &p)| acc + p)
    }

    /// `log ρ_i - log ρ_j`; infinite when exactly one side is zero.
    pub fn log_odds(&self, i: usize, j: usize) -> Result<T> {
        let m = self.num_hypotheses();
        for idx in [i, j] {
            if idx >= m {
                return Err(Error::Index {
                    what: "hypothesis",
                    index: idx,
                    limit: m,
                });
            }
        }
        if i == j {
            return Err(Error::Argument("log-odds need two distinct hypotheses".into()));
        }
        let (li, lj) = (self.log_probs[i], self.log_probs[j]);
        match (li == T::neg_infinity(), lj == T::neg_infinity()) {
            (true, true) => Err(Error::UndefinedOdds),
            (true, false) => Ok(T::neg_infinity()),
            (false, true) => Ok(T::infinity()),
            (false, false) => Ok(li - lj),
        }
    }

    /// Posterior after observing `z` under action `a`.
    pub fn bayes_update(&self, model: &ObservationModel<T>, a: usize, z: &Observation<T>) -> Result<Self> {
        if model.num_hypotheses() != self.num_hypotheses() {
            return Err(Error::Argument(format!(
                "belief has {} hypotheses, model has {}",
                self.num_hypotheses(),
                model.num_hypotheses()
            )));
        }
        let mut log_masses = Vec::with_capacity(self.num_hypotheses());
        for (i, &lp) in self.log_probs.iter().enumerate() {
            let lq = model.log_density(i, a, z)?;
            if lq.is_nan() || lq == T::infinity() {
                return Err(Error::Domain(format!(
                    "density of hypothesis {} is not finite",
                    i + 1
                )));
            }
            log_masses.push(if lp == T::neg_infinity() { lp } else { lp + lq });
        }
        Self::from_log_masses(log_masses)
    }
}
