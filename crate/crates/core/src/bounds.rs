//! Reliability functions, simplex optimizations and the leading-order cost
//! coefficients, gains and error exponents of each policy class.
//!
//! Every reported bound drops its `o(log L)` term, so each value is the
//! leading-order expression only.

use serde::Serialize;

use crate::convex::{
    minimize_weighted_inverse, simplex_grid, simplex_grid_len, ConvexSettings, ReliabilityData,
};
use crate::divergences::{alpha_max, scaled_renyi};
use crate::error::{Error, Result};
use crate::lp::{evaluate_min, solve_maxmin};
use crate::{Model, Rule};

/// Finite stand-in for infinite KL terms inside the linear programs.
pub const KL_CAP: f64 = 1e6;
/// Largest action count allowed for the default D̂ grid.
pub const DEFAULT_GRID_MAX_ACTIONS: usize = 6;
pub const DEFAULT_GRID_RESOLUTION: f64 = 0.02;
/// Grid used to certify the harmonic-reliability optimum.
pub const HARMONIC_CERT_RESOLUTION: f64 = 0.01;
pub const HARMONIC_CERT_MAX_ACTIONS: usize = 4;
/// Hard cap on enumerated grid points for any explicit resolution.
pub const MAX_GRID_POINTS: u128 = 20_000_000;

const ALPHA_TABLE_POINTS: usize = 65;
const POLISH_ITERATIONS: usize = 500;
const POLISH_STEP_TOL: f64 = 1e-6;
const SCREEN_CANDIDATES: usize = 8;

/// Tunables shared by every bound computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsSettings {
    /// D̂ grid resolution; `None` uses the default, allowed only for `K <= 6`.
    pub grid_resolution: Option<f64>,
    pub random_starts: usize,
    /// Seed of the random restarts of the convex solver.
    pub seed: u64,
}

impl Default for BoundsSettings {
    fn default() -> Self {
        let convex = ConvexSettings::default();
        Self {
            grid_resolution: None,
            random_starts: convex.random_starts,
            seed: convex.seed,
        }
    }
}

impl BoundsSettings {
    fn convex(&self) -> ConvexSettings {
        ConvexSettings {
            random_starts: self.random_starts,
            seed: self.seed,
            ..ConvexSettings::default()
        }
    }
}

/// KL table `d[a][i][j]` with infinite entries capped at [`KL_CAP`].
#[derive(Debug, Clone, PartialEq)]
pub struct KlTable {
    pub values: Vec<Vec<Vec<f64>>>,
    /// Some entry was infinite and replaced by the cap.
    pub capped: bool,
}

impl KlTable {
    pub fn new(model: &Model) -> Self {
        let raw = model.kl_table();
        let capped = raw.iter().flatten().flatten().any(|v| v.is_infinite());
        let values = raw
            .into_iter()
            .map(|per_i| {
                per_i
                    .into_iter()
                    .map(|per_j| per_j.into_iter().map(|v| v.min(KL_CAP)).collect())
                    .collect()
            })
            .collect();
        Self { values, capped }
    }

    fn num_actions(&self) -> usize {
        self.values.len()
    }

    fn num_hypotheses(&self) -> usize {
        self.values[0].len()
    }

    /// Row `(D(q_i^a || q_j^a))_a`.
    fn row(&self, i: usize, j: usize) -> Vec<f64> {
        self.values.iter().map(|per_a| per_a[i][j]).collect()
    }

    /// Payoff rows `j ≠ i` for hypothesis `i`.
    fn payoff_for(&self, i: usize) -> Vec<Vec<f64>> {
        (0..self.num_hypotheses())
            .filter(|&j| j != i)
            .map(|j| self.row(i, j))
            .collect()
    }

    fn reliability_data(&self) -> ReliabilityData {
        ReliabilityData {
            alternatives: (0..self.num_hypotheses()).map(|i| self.payoff_for(i)).collect(),
            num_actions: self.num_actions(),
        }
    }
}

fn check_rule(model: &Model, lambda: &Rule) -> Result<()> {
    if lambda.num_actions() != model.num_actions() {
        return Err(Error::Argument(format!(
            "rule has {} weights for {} actions",
            lambda.num_actions(),
            model.num_actions()
        )));
    }
    Ok(())
}

/// `R(i, λ) = min_{j≠i} Σ_a λ_a D(q_i^a || q_j^a)`, with uncapped KL terms.
pub fn reliability(model: &Model, i: usize, lambda: &Rule) -> Result<f64> {
    check_rule(model, lambda)?;
    let m = model.num_hypotheses();
    if m < 2 {
        return Err(Error::Argument(
            "reliability needs at least two hypotheses".into(),
        ));
    }
    if i >= m {
        return Err(Error::Index {
            what: "hypothesis",
            index: i,
            limit: m,
        });
    }
    let table = model.kl_table();
    Ok((0..m)
        .filter(|&j| j != i)
        .map(|j| {
            lambda
                .weights()
                .iter()
                .enumerate()
                .filter(|(_, w)| **w > 0.0)
                .map(|(a, w)| w * table[a][i][j])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min))
}

fn assumption_error(i: usize) -> Error {
    Error::Assumption(format!(
        "hypothesis {} cannot be distinguished from some alternative under any action",
        i + 1
    ))
}

/// Per-hypothesis maximal rule λ*_i and its reliability `R(i, λ*_i)`.
pub fn max_reliability(model: &Model, i: usize) -> Result<(Rule, f64)> {
    let m = model.num_hypotheses();
    if i >= m {
        return Err(Error::Index {
            what: "hypothesis",
            index: i,
            limit: m,
        });
    }
    max_reliability_with(&KlTable::new(model), i)
}

fn max_reliability_with(table: &KlTable, i: usize) -> Result<(Rule, f64)> {
    let sol = solve_maxmin(&table.payoff_for(i))?;
    if sol.value <= 1e-12 {
        return Err(assumption_error(i));
    }
    Ok((Rule::normalized(sol.weights), sol.value))
}

/// Harmonic mean of `R(i, λ)` over hypotheses; 0 if any reliability is 0.
pub fn harmonic_reliability(model: &Model, lambda: &Rule) -> Result<f64> {
    let rs = (0..model.num_hypotheses())
        .map(|i| reliability(model, i, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(harmonic_mean(&rs))
}

pub(crate) fn harmonic_mean(values: &[f64]) -> f64 {
    if values.iter().any(|v| *v <= 0.0) {
        return 0.0;
    }
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// Optimizer of a simplex program with its attained value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleValue {
    pub lambda: Rule,
    pub value: f64,
}

/// `max_λ R̄(λ)` with its grid certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicOptimum {
    pub lambda: Rule,
    pub value: f64,
    /// `Some(true)` when the value dominates every point of the 0.01 grid
    /// (checked only for `K <= 4`).
    pub grid_certified: Option<bool>,
}

/// Maximizes the harmonic reliability over the simplex.
pub fn max_harmonic_reliability(model: &Model) -> Result<HarmonicOptimum> {
    max_harmonic_with(&KlTable::new(model), &BoundsSettings::default())
}

fn max_harmonic_with(table: &KlTable, settings: &BoundsSettings) -> Result<HarmonicOptimum> {
    let m = table.num_hypotheses();
    let k = table.num_actions();
    let data = table.reliability_data();
    let mut starts = Vec::new();
    if let Ok(sol) = solve_maxmin(&all_pairs_payoff(table)) {
        starts.push(sol.weights);
    }
    for i in 0..m {
        if let Ok(sol) = solve_maxmin(&table.payoff_for(i)) {
            starts.push(sol.weights);
        }
    }
    let weights = vec![1.0; m];
    let sol = minimize_weighted_inverse(&data, &weights, &starts, &settings.convex())
        .ok_or_else(|| Error::Assumption("some reliability is zero for every rule".into()))?;
    let mut lambda = sol.lambda;
    let mut value = m as f64 / sol.objective;
    let mut grid_certified = None;
    if k <= HARMONIC_CERT_MAX_ACTIONS && k > 1 {
        let steps = (1.0 / HARMONIC_CERT_RESOLUTION).round() as usize;
        let mut certified = true;
        for p in simplex_grid(k, steps) {
            let f = data.weighted_inverse(&weights, &p);
            if f.is_finite() {
                let v = m as f64 / f;
                if v > value + 1e-12 {
                    certified = false;
                    value = v;
                    lambda = p;
                }
            }
        }
        grid_certified = Some(certified);
    }
    Ok(HarmonicOptimum {
        lambda: Rule::normalized(lambda),
        value,
        grid_certified,
    })
}

fn all_pairs_payoff(table: &KlTable) -> Vec<Vec<f64>> {
    let m = table.num_hypotheses();
    (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| table.row(i, j))
        .collect()
}

/// `max_λ min_i R(i, λ)` by a single linear program over all ordered pairs.
pub fn maxmin_reliability(model: &Model) -> Result<RuleValue> {
    maxmin_with(&KlTable::new(model))
}

fn maxmin_with(table: &KlTable) -> Result<RuleValue> {
    let sol = solve_maxmin(&all_pairs_payoff(table))?;
    if sol.value <= 1e-12 {
        return Err(Error::Assumption(
            "no rule separates every pair of hypotheses".into(),
        ));
    }
    Ok(RuleValue {
        lambda: Rule::normalized(sol.weights),
        value: sol.value,
    })
}

/// `min_i max_λ R(i, λ)`.
pub fn minmax_reliability(model: &Model) -> Result<f64> {
    let table = KlTable::new(model);
    let mut best = f64::INFINITY;
    for i in 0..model.num_hypotheses() {
        best = best.min(max_reliability_with(&table, i)?.1);
    }
    Ok(best)
}

/// Grid-certified `D̂ = max_λ min_{i≠j} max_α (1-α) Σ_a λ_a D_α(q_i^a || q_j^a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DHat {
    pub lambda: Rule,
    pub value: f64,
    /// Resolution `h` of the simplex grid the value is certified against.
    pub grid_resolution: f64,
}

/// Computes D̂ by grid search plus a local pattern search on the simplex.
///
/// The outer objective is not concave, so the result is only certified at
/// the grid resolution.
pub fn d_hat(model: &Model, grid_resolution: Option<f64>) -> Result<DHat> {
    let k = model.num_actions();
    let resolution = match grid_resolution {
        Some(h) if h > 0.0 && h <= 1.0 => h,
        Some(h) => return Err(Error::Argument(format!("grid resolution must lie in (0,1], got {h}"))),
        None if k <= DEFAULT_GRID_MAX_ACTIONS => DEFAULT_GRID_RESOLUTION,
        None => {
            return Err(Error::Budget(format!(
                "{k} actions exceed the default D̂ grid budget ({DEFAULT_GRID_MAX_ACTIONS}); pass a coarser resolution"
            )))
        }
    };
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let points = simplex_grid_len(k, steps);
    if points > MAX_GRID_POINTS {
        return Err(Error::Budget(format!(
            "a {resolution} grid over {k} actions has {points} points (limit {MAX_GRID_POINTS})"
        )));
    }
    let m = model.num_hypotheses();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();

    // screening table: (1-α) D_α on a fixed α grid, laid out [pair][alpha][action]
    let mut table = vec![0.0; pairs.len() * ALPHA_TABLE_POINTS * k];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        for s in 0..ALPHA_TABLE_POINTS {
            let alpha = s as f64 / (ALPHA_TABLE_POINTS - 1) as f64;
            for a in 0..k {
                let v = scaled_renyi(model.kernel(i, a)?, model.kernel(j, a)?, alpha)?;
                table[(p * ALPHA_TABLE_POINTS + s) * k + a] = v.min(KL_CAP);
            }
        }
    }
    let screen = |lambda: &[f64]| -> f64 {
        let mut worst = f64::INFINITY;
        for p in 0..pairs.len() {
            let mut best = 0.0f64;
            for s in 0..ALPHA_TABLE_POINTS {
                let base = (p * ALPHA_TABLE_POINTS + s) * k;
                let v: f64 = table[base..base + k].iter().zip(lambda).map(|(h, w)| h * w).sum();
                best = best.max(v);
            }
            worst = worst.min(best);
            if worst <= 0.0 {
                break;
            }
        }
        worst
    };

    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(SCREEN_CANDIDATES + 1);
    for point in simplex_grid(k, steps) {
        let v = screen(&point);
        if candidates.len() < SCREEN_CANDIDATES || v > candidates[candidates.len() - 1].0 {
            let pos = candidates.partition_point(|(c, _)| *c >= v);
            candidates.insert(pos, (v, point));
            candidates.truncate(SCREEN_CANDIDATES);
        }
    }

    let exact = |lambda: &[f64]| -> Result<f64> {
        let rule = Rule::normalized(lambda.to_vec());
        let mut worst = f64::INFINITY;
        for &(i, j) in &pairs {
            worst = worst.min(alpha_max(model, i, j, &rule)?.value.min(KL_CAP));
        }
        Ok(worst)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (_, point) in candidates {
        let v = exact(&point)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, point));
        }
    }
    let (mut value, mut lambda) = best.expect("a simplex grid is never empty");

    // pattern search along mass transfers between pairs of actions
    let mut step = resolution;
    let mut iterations = 0;
    while k > 1 && step >= POLISH_STEP_TOL && iterations < POLISH_ITERATIONS {
        iterations += 1;
        let mut improved = false;
        'directions: for from in 0..k {
            for to in 0..k {
                if from == to || lambda[from] <= 0.0 {
                    continue;
                }
                let moved = step.min(lambda[from]);
                let mut trial = lambda.clone();
                trial[from] -= moved;
                trial[to] += moved;
                let v = exact(&trial)?;
                if v > value + 1e-15 {
                    value = v;
                    lambda = trial;
                    improved = true;
                    break 'directions;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(DHat {
        lambda: Rule::normalized(lambda),
        value,
        grid_resolution: resolution,
    })
}

/// Leading-order bound expressions at the model's prior and penalty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremBounds {
    pub log_l: f64,
    pub v_nn_upper: f64,
    pub v_nn_lower: f64,
    /// `2 log L / max_λ min_i R(i, λ)`, the factor-two lower form for a uniform prior.
    pub v_nn_lower_factor_two: f64,
    pub v_sn_upper: f64,
    pub v_sn_lower: f64,
    /// Rule attaining the sequential non-adaptive upper bound.
    pub sn_lambda: Rule,
    pub v_sa_upper: f64,
    pub v_sa_lower: f64,
    pub v_na_lower: f64,
    /// Hypothesis whose maximal reliability is smallest; indexes the
    /// prior term of the non-sequential adaptive bound.
    pub na_hypothesis: usize,
    /// Some lower bound exceeds its upper bound (possible at small L).
    pub lower_exceeds_upper: bool,
}

/// Sequentiality and adaptivity gain coefficients, per unit of log L.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gains {
    /// Lower bound on `(V_NN - V_SN) / log L`.
    pub sequentiality: f64,
    /// `(V_SN - V_SA) / log L`.
    pub adaptivity: f64,
    /// Some single rule attains every `R(i, λ*_i)`, so adaptivity gains nothing.
    pub zero_adaptivity: bool,
}

/// Maximal error exponents by policy class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponents {
    pub e_nn: f64,
    pub e_sn: f64,
    pub e_sa: f64,
    /// Upper bound on the non-sequential adaptive exponent.
    pub e_na_upper: f64,
}

/// Per-hypothesis maximal rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReliability {
    pub lambda: Rule,
    pub value: f64,
}

/// Every coefficient, bound, gain and exponent of a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub d_hat: DHat,
    pub reliabilities: Vec<HypothesisReliability>,
    pub r_bar_star: f64,
    pub max_r_bar: HarmonicOptimum,
    pub maxmin_r: RuleValue,
    pub minmax_r: f64,
    pub thm_bounds: TheoremBounds,
    pub gains: Gains,
    pub exponents: Exponents,
    /// Infinite KL terms were capped at [`KL_CAP`].
    pub kl_capped: bool,
    /// The likelihood ratio is unbounded.
    pub unbounded_likelihood_ratio: bool,
    pub settings: BoundsSettings,
}

/// Tolerance of the coefficient ordering checks.
pub const ORDERING_TOL: f64 = 1e-6;

impl BoundsReport {
    /// Computes the full report; fails if some pair of hypotheses is indistinguishable.
    pub fn compute(model: &Model, settings: &BoundsSettings) -> Result<Self> {
        let validation = model.validate();
        if let Some(&(i, j)) = validation.indistinguishable_pairs.first() {
            return Err(Error::Assumption(format!(
                "hypotheses {} and {} are indistinguishable under every action",
                i + 1,
                j + 1
            )));
        }
        let table = KlTable::new(model);
        let m = model.num_hypotheses();
        let reliabilities = (0..m)
            .map(|i| {
                max_reliability_with(&table, i).map(|(lambda, value)| HypothesisReliability { lambda, value })
            })
            .collect::<Result<Vec<_>>>()?;
        let r_star: Vec<f64> = reliabilities.iter().map(|r| r.value).collect();
        let r_bar_star = harmonic_mean(&r_star);
        let max_r_bar = max_harmonic_with(&table, settings)?;
        let maxmin_r = maxmin_with(&table)?;
        let minmax_r = r_star.iter().copied().fold(f64::INFINITY, f64::min);
        let d_hat = d_hat(model, settings.grid_resolution)?;
        let thm_bounds = theorem_bounds_with(
            model,
            &table,
            &d_hat,
            &reliabilities,
            &maxmin_r,
            minmax_r,
            settings,
        )?;
        let gains = gains_from(maxmin_r.value, max_r_bar.value, r_bar_star);
        let exponents = Exponents {
            e_nn: d_hat.value,
            e_sn: max_r_bar.value,
            e_sa: r_bar_star,
            e_na_upper: minmax_r,
        };
        Ok(Self {
            d_hat,
            reliabilities,
            r_bar_star,
            max_r_bar,
            maxmin_r,
            minmax_r,
            thm_bounds,
            gains,
            exponents,
            kl_capped: table.capped,
            unbounded_likelihood_ratio: !validation.bounded_likelihood_ratio(),
            settings: *settings,
        })
    }

    /// Violations of the coefficient ordering `R̄* ≥ max R̄ ≥ max min R ≥ D̂`,
    /// `D̂ ≤ max min R / 2` and `min max R ≥ max min R`.
    pub fn ordering_violations(&self) -> Vec<String> {
        let tol = ORDERING_TOL;
        let mut out = Vec::new();
        if self.r_bar_star + tol < self.max_r_bar.value {
            out.push(format!("R̄* {} < max R̄ {}", self.r_bar_star, self.max_r_bar.value));
        }
        if self.max_r_bar.value + tol < self.maxmin_r.value {
            out.push(format!(
                "max R̄ {} < max min R {}",
                self.max_r_bar.value, self.maxmin_r.value
            ));
        }
        if self.maxmin_r.value + tol < self.d_hat.value {
            out.push(format!(
                "max min R {} < D̂ {}",
                self.maxmin_r.value, self.d_hat.value
            ));
        }
        if self.d_hat.value > 0.5 * self.maxmin_r.value + tol {
            out.push(format!(
                "D̂ {} > max min R / 2 = {}",
                self.d_hat.value,
                0.5 * self.maxmin_r.value
            ));
        }
        if self.minmax_r + 1e-9 < self.maxmin_r.value {
            out.push(format!(
                "min max R {} < max min R {}",
                self.minmax_r, self.maxmin_r.value
            ));
        }
        out
    }

    /// Rows `(name, value, λ or empty, certificate)` for CSV emission.
    pub fn rows(&self) -> Vec<CoefficientRow> {
        let row = |name: &str, value: f64, lambda: Option<&Rule>, cert: &str| CoefficientRow {
            name: name.to_string(),
            value,
            lambda: lambda.map(|l| l.weights().to_vec()),
            certificate: cert.to_string(),
        };
        let mut rows = vec![row(
            "d_hat",
            self.d_hat.value,
            Some(&self.d_hat.lambda),
            &format!("grid-certified at resolution {}", self.d_hat.grid_resolution),
        )];
        for (i, r) in self.reliabilities.iter().enumerate() {
            rows.push(row(&format!("r_star_{}", i + 1), r.value, Some(&r.lambda), "lp"));
        }
        rows.push(row("r_bar_star", self.r_bar_star, None, "lp"));
        let cert = match self.max_r_bar.grid_certified {
            Some(true) => "convex; dominates 0.01 grid",
            Some(false) => "convex; replaced by better 0.01 grid point",
            None => "convex",
        };
        rows.push(row(
            "max_r_bar",
            self.max_r_bar.value,
            Some(&self.max_r_bar.lambda),
            cert,
        ));
        rows.push(row(
            "maxmin_r",
            self.maxmin_r.value,
            Some(&self.maxmin_r.lambda),
            "lp",
        ));
        rows.push(row("minmax_r", self.minmax_r, None, "lp"));
        let b = &self.thm_bounds;
        for (name, v) in [
            ("v_nn_upper", b.v_nn_upper),
            ("v_nn_lower", b.v_nn_lower),
            ("v_nn_lower_factor_two", b.v_nn_lower_factor_two),
        ] {
            rows.push(row(name, v, None, "leading order"));
        }
        rows.push(row(
            "v_sn_upper",
            b.v_sn_upper,
            Some(&b.sn_lambda),
            "leading order",
        ));
        for (name, v) in [
            ("v_sn_lower", b.v_sn_lower),
            ("v_sa_upper", b.v_sa_upper),
            ("v_sa_lower", b.v_sa_lower),
            ("v_na_lower", b.v_na_lower),
        ] {
            rows.push(row(name, v, None, "leading order"));
        }
        rows.push(row(
            "gain_sequentiality",
            self.gains.sequentiality,
            None,
            "per log L; lower bound",
        ));
        rows.push(row("gain_adaptivity", self.gains.adaptivity, None, "per log L"));
        rows.push(row("e_nn", self.exponents.e_nn, None, "exponent"));
        rows.push(row("e_sn", self.exponents.e_sn, None, "exponent"));
        rows.push(row("e_sa", self.exponents.e_sa, None, "exponent"));
        rows.push(row(
            "e_na_upper",
            self.exponents.e_na_upper,
            None,
            "exponent upper bound",
        ));
        rows
    }
}

/// One coefficient in tabular form.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub name: String,
    pub value: f64,
    pub lambda: Option<Vec<f64>>,
    pub certificate: String,
}

fn log_ratio(prior: &[f64], i: usize, k: usize) -> f64 {
    prior[i].ln() - prior[k].ln()
}

/// Evaluates the leading-order theorem bounds for a model.
pub fn theorem_bounds(model: &Model) -> Result<TheoremBounds> {
    Ok(BoundsReport::compute(model, &BoundsSettings::default())?.thm_bounds)
}

fn theorem_bounds_with(
    model: &Model,
    table: &KlTable,
    d_hat: &DHat,
    reliabilities: &[HypothesisReliability],
    maxmin: &RuleValue,
    minmax: f64,
    settings: &BoundsSettings,
) -> Result<TheoremBounds> {
    let l = model.penalty();
    if !(l > 1.0) {
        return Err(Error::Argument(format!("penalty L must exceed 1, got {l}")));
    }
    let log_l = l.ln();
    let prior = model.prior();
    let m = prior.len();
    let all_ratios = || (0..m).flat_map(|i| (0..m).map(move |j| (i, j)));
    let min_all = all_ratios()
        .map(|(i, j)| log_ratio(prior, i, j))
        .fold(f64::INFINITY, f64::min);
    let max_all = all_ratios()
        .map(|(i, j)| log_ratio(prior, i, j))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_other = |i: usize| {
        (0..m)
            .filter(|&k| k != i)
            .map(|k| log_ratio(prior, i, k))
            .fold(f64::INFINITY, f64::min)
    };
    let max_other = |i: usize| {
        (0..m)
            .filter(|&k| k != i)
            .map(|k| log_ratio(prior, i, k))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let upper_num: Vec<f64> = (0..m).map(|i| log_l - min_other(i)).collect();
    let lower_num: Vec<f64> = (0..m).map(|i| log_l - max_other(i)).collect();

    let data = table.reliability_data();
    let mut starts = vec![maxmin.lambda.weights().to_vec()];
    starts.extend(reliabilities.iter().map(|r| r.lambda.weights().to_vec()));
    let convex = settings.convex();
    // the solver needs nonnegative weights; negative terms only arise at small L
    let solve = |num: &[f64]| -> Result<(Rule, f64)> {
        let w: Vec<f64> = (0..m).map(|i| (prior[i] * num[i]).max(0.0)).collect();
        let lambda = if w.iter().all(|v| *v == 0.0) {
            maxmin.lambda.weights().to_vec()
        } else {
            minimize_weighted_inverse(&data, &w, &starts, &convex)
                .ok_or_else(|| Error::Assumption("some reliability is zero for every rule".into()))?
                .lambda
        };
        let value: f64 = (0..m)
            .map(|i| prior[i] * num[i] / data.reliability(i, &lambda).0)
            .sum();
        Ok((Rule::normalized(lambda), value))
    };
    let (sn_lambda, v_sn_upper) = solve(&upper_num)?;
    let (_, v_sn_lower) = solve(&lower_num)?;

    let sa = |num: &[f64]| -> f64 { (0..m).map(|i| prior[i] * num[i] / reliabilities[i].value).sum() };
    let na_hypothesis = (0..m)
        .min_by(|&a, &b| reliabilities[a].value.total_cmp(&reliabilities[b].value))
        .expect("at least two hypotheses");

    let v_nn_upper = (log_l - min_all) / d_hat.value;
    let v_nn_lower = (log_l - max_all) / d_hat.value;
    let v_sa_upper = sa(&upper_num);
    let v_sa_lower = sa(&lower_num);
    let lower_exceeds_upper = v_nn_lower > v_nn_upper || v_sn_lower > v_sn_upper || v_sa_lower > v_sa_upper;
    Ok(TheoremBounds {
        log_l,
        v_nn_upper,
        v_nn_lower,
        v_nn_lower_factor_two: 2.0 * log_l / maxmin.value,
        v_sn_upper,
        v_sn_lower,
        sn_lambda,
        v_sa_upper,
        v_sa_lower,
        v_na_lower: (log_l - max_other(na_hypothesis)) / minmax,
        na_hypothesis,
        lower_exceeds_upper,
    })
}

fn gains_from(maxmin: f64, max_r_bar: f64, r_bar_star: f64) -> Gains {
    Gains {
        sequentiality: 2.0 / maxmin - 1.0 / max_r_bar,
        adaptivity: 1.0 / max_r_bar - 1.0 / r_bar_star,
        zero_adaptivity: (max_r_bar - r_bar_star).abs() <= ORDERING_TOL,
    }
}

/// Sequentiality and adaptivity gain coefficients of a model.
pub fn gains(model: &Model) -> Result<Gains> {
    Ok(BoundsReport::compute(model, &BoundsSettings::default())?.gains)
}

/// Maximal error exponents of a model.
pub fn error_exponents(model: &Model) -> Result<Exponents> {
    Ok(BoundsReport::compute(model, &BoundsSettings::default())?.exponents)
}

/// Closed forms for two hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryReport {
    /// `D(q_1^a || q_2^a)` per action.
    pub kl_12: Vec<f64>,
    /// `D(q_2^a || q_1^a)` per action.
    pub kl_21: Vec<f64>,
    pub r1_star: f64,
    pub r2_star: f64,
    pub r_bar_star: f64,
    /// `R̄(λ)` at the maximizing rule of the harmonic reliability.
    pub r_bar_at_optimum: f64,
    pub argmax_12: Vec<usize>,
    pub argmax_21: Vec<usize>,
    /// The argmax action sets are disjoint: adaptivity gains grow with log L.
    pub logarithmic_adaptivity_gain: bool,
    /// Largest deviation between the closed forms and the generic solvers.
    pub max_deviation: f64,
    pub generic_matches: bool,
}

/// Tolerance of argmax ties in the binary adaptivity predicate.
pub const ARGMAX_TIE_TOL: f64 = 1e-9;

/// Two-hypothesis closed forms and the adaptivity-gain predicate.
pub fn binary_specialize(model: &Model) -> Result<BinaryReport> {
    if model.num_hypotheses() != 2 {
        return Err(Error::Argument(format!(
            "binary closed forms need exactly 2 hypotheses, got {}",
            model.num_hypotheses()
        )));
    }
    let raw = model.kl_table();
    let kl_12: Vec<f64> = raw.iter().map(|t| t[0][1]).collect();
    let kl_21: Vec<f64> = raw.iter().map(|t| t[1][0]).collect();
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (r1_star, r2_star) = (max_of(&kl_12), max_of(&kl_21));
    let argmax = |v: &[f64], best: f64| -> Vec<usize> {
        (0..v.len()).filter(|&a| v[a] >= best - ARGMAX_TIE_TOL).collect()
    };
    let argmax_12 = argmax(&kl_12, r1_star);
    let argmax_21 = argmax(&kl_21, r2_star);
    let disjoint = !argmax_12.iter().any(|a| argmax_21.contains(a));
    let r_bar_star = 1.0 / (0.5 / r1_star + 0.5 / r2_star);

    let table = KlTable::new(model);
    let generic_r1 = max_reliability_with(&table, 0)?.1;
    let generic_r2 = max_reliability_with(&table, 1)?.1;
    let generic_bar_star = harmonic_mean(&[generic_r1, generic_r2]);
    let opt = max_harmonic_with(&table, &BoundsSettings::default())?;
    let w = opt.lambda.weights();
    let dot = |v: &[f64]| v.iter().zip(w).map(|(d, x)| d * x).sum::<f64>();
    let r_bar_at_optimum = 1.0 / (0.5 / dot(&kl_12) + 0.5 / dot(&kl_21));
    let deviation = [
        (generic_r1 - r1_star.min(KL_CAP)).abs(),
        (generic_r2 - r2_star.min(KL_CAP)).abs(),
        (generic_bar_star - r_bar_star).abs(),
        (harmonic_reliability(model, &opt.lambda)? - r_bar_at_optimum).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(BinaryReport {
        kl_12,
        kl_21,
        r1_star,
        r2_star,
        r_bar_star,
        r_bar_at_optimum,
        argmax_12,
        argmax_21,
        logarithmic_adaptivity_gain: disjoint,
        max_deviation: deviation,
        generic_matches: deviation <= 1e-9,
    })
}

/// First action whose pairwise KL divergences dominate every other action's
/// (within 1e-9), i.e. the KL consequence of all actions being garblings of it.
pub fn dominance_check(model: &Model) -> Option<usize> {
    let table = model.kl_table();
    let m = model.num_hypotheses();
    let k = model.num_actions();
    (0..k).find(|&star| {
        (0..k).all(|a| (0..m).all(|i| (0..m).all(|j| i == j || table[a][i][j] <= table[star][i][j] + 1e-9)))
    })
}

/// `min_r` of the all-pairs payoff at `λ`; exposed for feasibility checks.
pub fn maxmin_objective(model: &Model, lambda: &Rule) -> f64 {
    evaluate_min(&all_pairs_payoff(&KlTable::new(model)), lambda.weights())
}
