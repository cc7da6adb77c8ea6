//! Exact evaluation of policies on small finite-alphabet models.
//!
//! Three independent evaluators:
//! - the depth-first tree search of [`exact_eval`]
//! - the backward recursion over observation-count states of [`dp_eval`]
//! - the type-class enumeration of [`exact_pairwise`]
//!
//! They provide ground truth for Monte Carlo estimates.

use std::collections::HashMap;

use serde::Serialize;

use crate::belief::{Belief, LOG_ODDS_TIE_TOL};
use crate::divergences::alpha_max;
use crate::error::{Error, Result};
use crate::model::{Density, KernelType, Observation};
use crate::policy::{fixed_n_policy, Decision, Policy};
use crate::simulator::run_trials;
use crate::{Model, Rule};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
/// Allowed gap between the empirical pairwise exponent and `g(α*)`.
pub const SANDWICH_SLACK: f64 = 0.15;
/// Monte Carlo agreement band, in standard errors.
pub const AGREEMENT_SIGMAS: f64 = 4.0;

/// Limits on an exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleBudget {
    /// Every path must have stopped by this depth.
    pub horizon: usize,
    /// Maximum number of enumerated nodes (or type classes).
    pub node_budget: u64,
}

impl OracleBudget {
    pub fn new(horizon: usize) -> Result<Self> {
        Self::with_nodes(horizon, DEFAULT_NODE_BUDGET)
    }

    pub fn with_nodes(horizon: usize, node_budget: u64) -> Result<Self> {
        if horizon == 0 || node_budget == 0 {
            return Err(Error::Argument(
                "oracle horizon and node budget must be positive".into(),
            ));
        }
        Ok(Self { horizon, node_budget })
    }
}

/// Exact objective of a policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactEvaluation {
    pub mean_tau: f64,
    pub pe: f64,
    /// `E[τ] + L · P̄e`.
    pub cost: f64,
    pub nodes: u64,
    /// Largest deviation from 1 of the probability accounted for at any depth
    /// (mass of live nodes plus mass already stopped).
    pub max_mass_defect: f64,
}

fn finite_rows(model: &Model) -> Result<Vec<Vec<&[f64]>>> {
    if model.kernel_type() != KernelType::Finite {
        return Err(Error::Argument(
            "exact evaluation needs a finite-alphabet model".into(),
        ));
    }
    (0..model.num_hypotheses())
        .map(|i| {
            (0..model.num_actions())
                .map(|a| match model.kernel(i, a)? {
                    Density::Finite(row) => Ok(row.as_slice()),
                    Density::Gaussian { .. } => unreachable!("finite model"),
                })
                .collect()
        })
        .collect()
}

fn check_actions(model: &Model, k: usize) -> Result<()> {
    if k != model.num_actions() {
        return Err(Error::Argument(format!(
            "policy has {k} actions, model has {}",
            model.num_actions()
        )));
    }
    Ok(())
}

struct Tree<'a> {
    model: &'a Model,
    rows: Vec<Vec<&'a [f64]>>,
    policy: &'a Policy,
    budget: OracleBudget,
    nodes: u64,
    tau: f64,
    pe: f64,
    alive: Vec<f64>,
    stopped: Vec<f64>,
}

impl Tree<'_> {
    /// `mass[θ]` is the joint probability of θ and the path so far.
    fn visit(&mut self, belief: &Belief<f64>, mass: &[f64], depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget.node_budget {
            return Err(Error::Budget(format!(
                "tree enumeration exceeded {} nodes",
                self.budget.node_budget
            )));
        }
        let p: f64 = mass.iter().sum();
        self.alive[depth] += p;
        match self.policy.decide(belief, depth) {
            Decision::Stop => {
                let declared = self.policy.declare(belief);
                self.tau += p * depth as f64;
                self.pe += mass
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != declared)
                    .map(|(_, w)| w)
                    .sum::<f64>();
                self.stopped[depth] += p;
                Ok(())
            }
            Decision::Truncate => Err(Error::Horizon(format!(
                "policy truncated a path at depth {depth}"
            ))),
            Decision::Sample(rule) => {
                if depth >= self.budget.horizon {
                    return Err(Error::Horizon(format!(
                        "a path is still running at horizon {}",
                        self.budget.horizon
                    )));
                }
                let rule = rule.clone();
                for (a, &w) in rule.weights().iter().enumerate() {
                    if w <= 0.0 {
                        continue;
                    }
                    for z in 0..self.rows[0][a].len() {
                        let child: Vec<f64> = mass
                            .iter()
                            .enumerate()
                            .map(|(i, m)| m * w * self.rows[i][a][z])
                            .collect();
                        if child.iter().all(|c| *c == 0.0) {
                            continue;
                        }
                        let next = belief.bayes_update(self.model, a, &Observation::Symbol(z))?;
                        self.visit(&next, &child, depth + 1)?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Exact `E[τ]`, `P̄e` and cost by depth-first enumeration of the
/// (action, observation) tree, pruning zero-probability branches.
pub fn exact_eval(model: &Model, policy: &Policy, budget: OracleBudget) -> Result<ExactEvaluation> {
    check_actions(model, policy.num_actions())?;
    let rows = finite_rows(model)?;
    let mut tree = Tree {
        model,
        rows,
        policy,
        budget,
        nodes: 0,
        tau: 0.0,
        pe: 0.0,
        alive: vec![0.0; budget.horizon + 1],
        stopped: vec![0.0; budget.horizon + 1],
    };
    tree.visit(&Belief::prior(model)?, model.prior(), 0)?;
    let mut stopped_before = 0.0;
    let mut defect: f64 = 0.0;
    for d in 0..=budget.horizon {
        defect = defect.max((tree.alive[d] + stopped_before - 1.0).abs());
        stopped_before += tree.stopped[d];
    }
    Ok(ExactEvaluation {
        mean_tau: tree.tau,
        pe: tree.pe,
        cost: tree.tau + model.penalty() * tree.pe,
        nodes: tree.nodes,
        max_mass_defect: defect,
    })
}

/// Per-hypothesis expected remaining steps and error probability at a count state.
type StateValue = (Vec<f64>, Vec<f64>);

struct Lattice<'a> {
    rows: Vec<Vec<&'a [f64]>>,
    log_prior: Vec<f64>,
    /// Offset of action `a`'s symbols in a count vector.
    offsets: Vec<usize>,
    policy: &'a Policy,
    horizon: usize,
    node_budget: u64,
    memo: HashMap<Vec<u32>, StateValue>,
}

impl Lattice<'_> {
    /// Belief from sufficient statistics, without sequential updates.
    fn belief(&self, counts: &[u32]) -> Option<Belief<f64>> {
        let m = self.log_prior.len();
        let log_masses: Vec<f64> = (0..m)
            .map(|i| {
                let mut l = self.log_prior[i];
                for (a, &off) in self.offsets.iter().enumerate() {
                    for (z, &q) in self.rows[i][a].iter().enumerate() {
                        let c = counts[off + z];
                        if c > 0 {
                            l += if q > 0.0 {
                                c as f64 * q.ln()
                            } else {
                                f64::NEG_INFINITY
                            };
                        }
                    }
                }
                l
            })
            .collect();
        Belief::from_log_masses(log_masses).ok()
    }

    fn value(&mut self, counts: &mut Vec<u32>, depth: usize) -> Result<StateValue> {
        if let Some(v) = self.memo.get(counts.as_slice()) {
            return Ok(v.clone());
        }
        if self.memo.len() as u64 >= self.node_budget {
            return Err(Error::Budget(format!(
                "count lattice exceeded {} states",
                self.node_budget
            )));
        }
        let m = self.log_prior.len();
        let Some(belief) = self.belief(counts) else {
            // unreachable under every hypothesis; always weighted by zero
            return Ok((vec![0.0; m], vec![0.0; m]));
        };
        let value = match self.policy.decide(&belief, depth) {
            Decision::Stop => {
                let declared = self.policy.declare(&belief);
                (
                    vec![0.0; m],
                    (0..m).map(|i| (i != declared) as u8 as f64).collect(),
                )
            }
            Decision::Truncate => {
                return Err(Error::Horizon(format!(
                    "policy truncated a state at depth {depth}"
                )))
            }
            Decision::Sample(rule) => {
                if depth >= self.horizon {
                    return Err(Error::Horizon(format!(
                        "a state is still running at horizon {}",
                        self.horizon
                    )));
                }
                let weights = rule.weights().to_vec();
                let mut steps = vec![1.0; m];
                let mut errors = vec![0.0; m];
                for (a, &w) in weights.iter().enumerate() {
                    if w <= 0.0 {
                        continue;
                    }
                    for z in 0..self.rows[0][a].len() {
                        if (0..m).all(|i| self.rows[i][a][z] == 0.0) {
                            continue;
                        }
                        let slot = self.offsets[a] + z;
                        counts[slot] += 1;
                        let (t, e) = self.value(counts, depth + 1)?;
                        counts[slot] -= 1;
                        for i in 0..m {
                            let q = w * self.rows[i][a][z];
                            steps[i] += q * t[i];
                            errors[i] += q * e[i];
                        }
                    }
                }
                (steps, errors)
            }
        };
        self.memo.insert(counts.clone(), value.clone());
        Ok(value)
    }
}

/// Second exact evaluator: backward recursion over observation-count vectors,
/// with beliefs rebuilt from counts. Valid because every policy here decides
/// from (belief, step) only.
pub fn dp_eval(model: &Model, policy: &Policy, budget: OracleBudget) -> Result<ExactEvaluation> {
    check_actions(model, policy.num_actions())?;
    let rows = finite_rows(model)?;
    let mut offsets = Vec::with_capacity(model.num_actions());
    let mut total = 0;
    for a in 0..model.num_actions() {
        offsets.push(total);
        total += rows[0][a].len();
    }
    let mut lattice = Lattice {
        rows,
        log_prior: model.prior().iter().map(|p| p.ln()).collect(),
        offsets,
        policy,
        horizon: budget.horizon,
        node_budget: budget.node_budget,
        memo: HashMap::new(),
    };
    let (steps, errors) = lattice.value(&mut vec![0; total], 0)?;
    let prior = model.prior();
    let mean_tau: f64 = prior.iter().zip(&steps).map(|(p, t)| p * t).sum();
    let pe: f64 = prior.iter().zip(&errors).map(|(p, e)| p * e).sum();
    Ok(ExactEvaluation {
        mean_tau,
        pe,
        cost: mean_tau + model.penalty() * pe,
        nodes: lattice.memo.len() as u64,
        max_mass_defect: 0.0,
    })
}

/// Exponent check for one unordered pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSandwich {
    pub i: usize,
    pub j: usize,
    /// `-log max{e_ij, e_ji} / n`.
    pub empirical_exponent: f64,
    pub alpha_star: f64,
    /// `g(α*) = max_α (1-α) Σ_a λ_a D_α(q_i^a || q_j^a)`.
    pub g_alpha: f64,
}

impl PairSandwich {
    pub fn gap(&self) -> f64 {
        (self.empirical_exponent - self.g_alpha).abs()
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.gap() <= slack
    }
}

/// Exact pairwise error probabilities after `n` i.i.d. draws from λ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseExact {
    pub horizon: usize,
    /// `e[i][j] = P(ρ_i(n) < ρ_j(n) | θ = i)`.
    pub errors: Vec<Vec<f64>>,
    /// `P(ρ_i(n) = ρ_j(n) | θ = i)`.
    pub ties: Vec<Vec<f64>>,
    /// Type classes enumerated (count vectors over (action, symbol) cells).
    pub types: u64,
    /// Largest deviation from 1 of the enumerated probability under any θ.
    pub max_mass_defect: f64,
    pub sandwich: Vec<PairSandwich>,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc.saturating_mul((n - t) as u128) / (t + 1) as u128;
    }
    acc
}

/// Calls `f` on every vector of `cells` non-negative integers summing to `n`.
fn for_each_composition(n: u32, cells: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(slot: usize, left: u32, counts: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if slot + 1 == counts.len() {
            counts[slot] = left;
            f(counts);
            return;
        }
        for c in 0..=left {
            counts[slot] = c;
            rec(slot + 1, left - c, counts, f);
        }
    }
    let mut counts = vec![0; cells];
    rec(0, n, &mut counts, f);
}

/// Exact `e_ij(n)` by enumerating the multinomial type classes of the
/// (action, observation) counts; the belief is a function of the counts.
///
/// Also evaluates the pairwise exponent `-log max{e_ij, e_ji}/n` against
/// `g(α*)` for every pair.
pub fn exact_pairwise(model: &Model, lambda: &Rule, n: usize, budget: OracleBudget) -> Result<PairwiseExact> {
    check_actions(model, lambda.num_actions())?;
    let rows = finite_rows(model)?;
    let m = model.num_hypotheses();
    // cells (a, z) of actions in the support of λ
    let cells: Vec<(usize, usize)> = (0..model.num_actions())
        .filter(|&a| lambda.weights()[a] > 0.0)
        .flat_map(|a| (0..rows[0][a].len()).map(move |z| (a, z)))
        .collect();
    let c = cells.len() as u64;
    let types = binomial(n as u64 + c - 1, c - 1);
    if types > budget.node_budget as u128 {
        return Err(Error::Budget(format!(
            "{types} type classes exceed the budget of {}",
            budget.node_budget
        )));
    }
    let log_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    // log of cell probabilities under each hypothesis, and log-likelihoods
    let log_cell: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            cells
                .iter()
                .map(|&(a, z)| (lambda.weights()[a] * rows[i][a][z]).ln())
                .collect()
        })
        .collect();
    let log_q: Vec<Vec<f64>> = (0..m)
        .map(|i| cells.iter().map(|&(a, z)| rows[i][a][z].ln()).collect())
        .collect();
    let log_prior: Vec<f64> = model.prior().iter().map(|p| p.ln()).collect();

    let mut errors = vec![vec![0.0; m]; m];
    let mut ties = vec![vec![0.0; m]; m];
    let mut mass = vec![0.0; m];
    let mut count = 0u64;
    for_each_composition(n as u32, cells.len(), &mut |counts| {
        count += 1;
        let log_coef = log_fact[n] - counts.iter().map(|&k| log_fact[k as usize]).sum::<f64>();
        let loglik: Vec<f64> = (0..m)
            .map(|i| {
                counts
                    .iter()
                    .zip(&log_q[i])
                    .filter(|(k, _)| **k > 0)
                    .map(|(&k, l)| k as f64 * l)
                    .sum()
            })
            .collect();
        for i in 0..m {
            let lp: f64 = log_coef
                + counts
                    .iter()
                    .zip(&log_cell[i])
                    .filter(|(k, _)| **k > 0)
                    .map(|(&k, l)| k as f64 * l)
                    .sum::<f64>();
            if lp == f64::NEG_INFINITY {
                continue;
            }
            let p = lp.exp();
            mass[i] += p;
            for j in (0..m).filter(|&j| j != i) {
                let odds = (log_prior[i] + loglik[i]) - (log_prior[j] + loglik[j]);
                if odds < -LOG_ODDS_TIE_TOL {
                    errors[i][j] += p;
                } else if odds.abs() <= LOG_ODDS_TIE_TOL {
                    ties[i][j] += p;
                }
            }
        }
    });
    let max_mass_defect = mass.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    let mut sandwich = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let opt = alpha_max(model, i, j, lambda)?;
            let worst = errors[i][j].max(errors[j][i]);
            sandwich.push(PairSandwich {
                i,
                j,
                empirical_exponent: -worst.ln() / n as f64,
                alpha_star: opt.alpha_star,
                g_alpha: opt.value,
            });
        }
    }
    Ok(PairwiseExact {
        horizon: n,
        errors,
        ties,
        types: count,
        max_mass_defect,
        sandwich,
    })
}

/// One Monte Carlo versus exact comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub policy: String,
    pub exact_pe: f64,
    pub exact_mean_tau: f64,
    /// Tree search versus count-lattice recursion.
    pub oracle_gap: f64,
    pub mc_pe: f64,
    pub mc_se: f64,
    pub mc_mean_tau: f64,
    pub trials: u64,
}

impl AgreementRow {
    /// `|P̄e_MC − P̄e_exact|` in Monte Carlo standard errors (0 when both agree exactly).
    pub fn z_score(&self) -> f64 {
        let diff = (self.mc_pe - self.exact_pe).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.mc_se
        }
    }

    pub fn agrees(&self) -> bool {
        self.z_score() <= AGREEMENT_SIGMAS && self.oracle_gap <= 1e-10
    }
}

/// Compares both exact evaluators and Monte Carlo on the fixed-horizon
/// policies with the uniform rule and with each single action.
pub fn agreement_suite(
    model: &Model,
    horizon: usize,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<AgreementRow>> {
    let budget = OracleBudget::new(horizon)?;
    let k = model.num_actions();
    let mut rules = vec![("uniform".to_string(), Rule::uniform(k))];
    if k > 1 {
        rules.extend((0..k).map(|a| (format!("action {}", a + 1), Rule::vertex(k, a))));
    }
    rules
        .into_iter()
        .map(|(name, rule)| {
            let policy = fixed_n_policy(rule, horizon)?;
            let tree = exact_eval(model, &policy, budget)?;
            let dp = dp_eval(model, &policy, budget)?;
            let mc = run_trials(model, &policy, trials, master_seed)?;
            Ok(AgreementRow {
                policy: format!("{name}, n = {horizon}"),
                exact_pe: tree.pe,
                exact_mean_tau: tree.mean_tau,
                oracle_gap: (tree.pe - dp.pe).abs().max((tree.mean_tau - dp.mean_tau).abs()),
                mc_pe: mc.pe(),
                mc_se: mc.se_pe(),
                mc_mean_tau: mc.mean_tau(),
                trials,
            })
        })
        .collect()
}
