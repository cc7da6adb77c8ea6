//! Simplex utilities and the convex program `min_λ Σ_i w_i / R_i(λ)`.
//!
//! Each `R_i(λ) = min_j c_ijᵀ λ` is concave and piecewise linear, so the
//! weighted sum of reciprocals is convex on the region where every `R_i`
//! with positive weight is positive. The solver runs projected subgradient
//! descent from several starts and then polishes the best point with a
//! log-barrier Newton method on the epigraph form
//! `min Σ w_i / t_i  s.t.  c_ijᵀλ ≥ t_i, λ ∈ Δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (idx + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// All points of the simplex in `R^k` whose coordinates are multiples of `1/steps`.
pub fn simplex_grid(k: usize, steps: usize) -> SimplexGrid {
    let mut counts = vec![0; k];
    if k > 0 {
        counts[k - 1] = steps;
    }
    SimplexGrid {
        counts,
        steps,
        done: k == 0,
    }
}

/// Number of points in [`simplex_grid`]: `C(steps + k - 1, k - 1)`.
pub fn simplex_grid_len(k: usize, steps: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let (n, r) = ((steps + k - 1) as u128, (k - 1) as u128);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Iterator over simplex grid points.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    counts: Vec<usize>,
    steps: usize,
    done: bool,
}

impl Iterator for SimplexGrid {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let n = self.steps as f64;
        let point = self.counts.iter().map(|&c| c as f64 / n).collect();
        // odometer over the first k-1 coordinates with their sum capped at `steps`
        let k = self.counts.len();
        if k == 1 {
            self.done = true;
            return Some(point);
        }
        let mut pos = k - 2;
        loop {
            self.counts[pos] += 1;
            let used: usize = self.counts[..k - 1].iter().sum();
            if used <= self.steps {
                self.counts[k - 1] = self.steps - used;
                break;
            }
            self.counts[pos] = 0;
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
        }
        Some(point)
    }
}

/// Uniform draw from the simplex (flat Dirichlet).
pub fn random_simplex_point<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Reliability structure: `alternatives[i]` lists the vectors `c_ij` (one entry per action).
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityData {
    pub alternatives: Vec<Vec<Vec<f64>>>,
    pub num_actions: usize,
}

impl ReliabilityData {
    /// `R_i(λ)` and the index of an active alternative.
    pub fn reliability(&self, i: usize, lambda: &[f64]) -> (f64, usize) {
        self.alternatives[i]
            .iter()
            .enumerate()
            .map(|(j, c)| (c.iter().zip(lambda).map(|(x, w)| x * w).sum::<f64>(), j))
            .fold(
                (f64::INFINITY, 0),
                |best, cur| if cur.0 < best.0 { cur } else { best },
            )
    }

    /// `Σ_i w_i / R_i(λ)`; `+inf` when a positively weighted reliability vanishes.
    pub fn weighted_inverse(&self, weights: &[f64], lambda: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let (r, _) = self.reliability(i, lambda);
                if r <= 0.0 {
                    return f64::INFINITY;
                }
                acc += w / r;
            }
        }
        acc
    }

    fn subgradient(&self, weights: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_actions];
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                let (r, j) = self.reliability(i, lambda);
                let scale = -w / (r * r);
                for (ga, c) in g.iter_mut().zip(&self.alternatives[i][j]) {
                    *ga += scale * c;
                }
            }
        }
        g
    }
}

/// Settings of [`minimize_weighted_inverse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexSettings {
    pub random_starts: usize,
    pub seed: u64,
    /// Stop a run when the best value improved by less than this over `patience` iterations.
    pub improvement_tol: f64,
    pub patience: usize,
    pub max_iterations: usize,
}

impl Default for ConvexSettings {
    fn default() -> Self {
        Self {
            random_starts: 5,
            seed: 0x5eed_1a3b,
            improvement_tol: 1e-9,
            patience: 200,
            max_iterations: 20_000,
        }
    }
}

/// Minimizer and value of the weighted inverse-reliability program.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSolution {
    pub lambda: Vec<f64>,
    pub objective: f64,
}

fn subgradient_run(
    data: &ReliabilityData,
    weights: &[f64],
    start: Vec<f64>,
    settings: &ConvexSettings,
) -> ConvexSolution {
    let mut x = start;
    let mut best = ConvexSolution {
        objective: data.weighted_inverse(weights, &x),
        lambda: x.clone(),
    };
    let mut reference = best.objective;
    let mut since_reference = 0;
    for it in 0..settings.max_iterations {
        let f = data.weighted_inverse(weights, &x);
        if !f.is_finite() {
            // fell onto a face where some reliability vanishes: retreat toward the best point
            x = x.iter().zip(&best.lambda).map(|(a, b)| 0.5 * (a + b)).collect();
            continue;
        }
        if f < best.objective {
            best = ConvexSolution {
                objective: f,
                lambda: x.clone(),
            };
        }
        since_reference += 1;
        if since_reference >= settings.patience {
            if reference - best.objective < settings.improvement_tol {
                break;
            }
            reference = best.objective;
            since_reference = 0;
        }
        let g = data.subgradient(weights, &x);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let step = 0.5 / ((it + 1) as f64).sqrt();
        let moved: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi / norm).collect();
        x = project_simplex(&moved);
    }
    best
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Log-barrier Newton polish from an interior starting rule.
fn barrier_polish(data: &ReliabilityData, weights: &[f64], start: &[f64]) -> Option<ConvexSolution> {
    let k = data.num_actions;
    let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let m = active.len();
    if m == 0 {
        return None;
    }
    let uniform = 1.0 / k as f64;
    let mut lambda: Vec<f64> = start.iter().map(|w| 0.9 * w + 0.1 * uniform).collect();
    let mut t: Vec<f64> = active
        .iter()
        .map(|&i| 0.5 * data.reliability(i, &lambda).0)
        .collect();
    if t.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let n_ineq: usize = active.iter().map(|&i| data.alternatives[i].len()).sum::<usize>() + k + m;
    let n = k + m;

    let slacks = |lambda: &[f64], t: &[f64]| -> Option<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(m);
        for (p, &i) in active.iter().enumerate() {
            let mut row = Vec::with_capacity(data.alternatives[i].len());
            for c in &data.alternatives[i] {
                let s = c.iter().zip(lambda).map(|(x, w)| x * w).sum::<f64>() - t[p];
                if !(s > 0.0) {
                    return None;
                }
                row.push(s);
            }
            out.push(row);
        }
        if lambda.iter().any(|w| !(*w > 0.0)) || t.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        Some(out)
    };
    let phi = |tau: f64, lambda: &[f64], t: &[f64]| -> f64 {
        let Some(s) = slacks(lambda, t) else {
            return f64::INFINITY;
        };
        let mut v = 0.0;
        for (p, &i) in active.iter().enumerate() {
            v += tau * weights[i] / t[p] - t[p].ln();
            v -= s[p].iter().map(|x| x.ln()).sum::<f64>();
        }
        v - lambda.iter().map(|w| w.ln()).sum::<f64>()
    };

    let mut tau = 1.0;
    while (n_ineq as f64) / tau > 1e-13 {
        for _ in 0..100 {
            let s = slacks(&lambda, &t)?;
            let mut grad = vec![0.0; n];
            let mut hess = vec![vec![0.0; n]; n];
            for a in 0..k {
                grad[a] -= 1.0 / lambda[a];
                hess[a][a] += 1.0 / (lambda[a] * lambda[a]);
            }
            for (p, &i) in active.iter().enumerate() {
                let tp = k + p;
                let w = weights[i];
                grad[tp] += -tau * w / (t[p] * t[p]) - 1.0 / t[p];
                hess[tp][tp] += 2.0 * tau * w / (t[p] * t[p] * t[p]) + 1.0 / (t[p] * t[p]);
                for (c, &sv) in data.alternatives[i].iter().zip(&s[p]) {
                    let inv = 1.0 / sv;
                    let inv2 = inv * inv;
                    for a in 0..k {
                        grad[a] -= c[a] * inv;
                        for b in 0..k {
                            hess[a][b] += c[a] * c[b] * inv2;
                        }
                        hess[a][tp] -= c[a] * inv2;
                        hess[tp][a] -= c[a] * inv2;
                    }
                    grad[tp] += inv;
                    hess[tp][tp] += inv2;
                }
            }
            // KKT system with the equality Σ λ_a = 1
            let mut kkt = vec![vec![0.0; n + 1]; n + 1];
            for r in 0..n {
                kkt[r][..n].copy_from_slice(&hess[r]);
            }
            for a in 0..k {
                kkt[a][n] = 1.0;
                kkt[n][a] = 1.0;
            }
            let mut rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            rhs.push(0.0);
            let step = solve_dense(kkt, rhs)?;
            let dx = &step[..n];
            let decrement: f64 = -dx.iter().zip(&grad).map(|(d, g)| d * g).sum::<f64>();
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let f0 = phi(tau, &lambda, &t);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let nl: Vec<f64> = (0..k).map(|a| lambda[a] + alpha * dx[a]).collect();
                let nt: Vec<f64> = (0..m).map(|p| t[p] + alpha * dx[k + p]).collect();
                let f1 = phi(tau, &nl, &nt);
                if f1 <= f0 - 0.25 * alpha * decrement {
                    lambda = nl;
                    t = nt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        tau *= 8.0;
    }
    let total: f64 = lambda.iter().map(|w| w.max(0.0)).sum();
    let lambda: Vec<f64> = lambda.iter().map(|w| w.max(0.0) / total).collect();
    let objective = data.weighted_inverse(weights, &lambda);
    objective
        .is_finite()
        .then_some(ConvexSolution { lambda, objective })
}

/// Minimizes `Σ_i w_i / R_i(λ)` over the simplex.
///
/// `extra_starts` are added to the uniform start and `settings.random_starts`
/// seeded Dirichlet starts. Returns `None` when every start has an infinite
/// objective, i.e. some positively weighted reliability is zero everywhere
/// the solver looked.
pub fn minimize_weighted_inverse(
    data: &ReliabilityData,
    weights: &[f64],
    extra_starts: &[Vec<f64>],
    settings: &ConvexSettings,
) -> Option<ConvexSolution> {
    let k = data.num_actions;
    if k == 1 {
        let lambda = vec![1.0];
        let objective = data.weighted_inverse(weights, &lambda);
        return objective
            .is_finite()
            .then_some(ConvexSolution { lambda, objective });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut starts = vec![vec![1.0 / k as f64; k]];
    for _ in 0..settings.random_starts {
        starts.push(random_simplex_point(k, &mut rng));
    }
    starts.extend(extra_starts.iter().cloned());

    let mut best: Option<ConvexSolution> = None;
    let consider = |cand: ConvexSolution, best: &mut Option<ConvexSolution>| {
        if cand.objective.is_finite() && best.as_ref().is_none_or(|b| cand.objective < b.objective) {
            *best = Some(cand);
        }
    };
    for start in starts {
        let run = subgradient_run(data, weights, start, settings);
        consider(run, &mut best);
    }
    let anchor = best.clone()?;
    if let Some(polished) = barrier_polish(data, weights, &anchor.lambda) {
        consider(polished, &mut best);
    }
    if let Some(polished) = barrier_polish(data, weights, &vec![1.0 / k as f64; k]) {
        consider(polished, &mut best);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_properties() {
        let p = project_simplex(&[0.2, 0.3, 0.5]);
        assert!((p[0] - 0.2).abs() < 1e-15 && (p[2] - 0.5).abs() < 1e-15);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.7, 0.7, -3.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn grid_enumerates_every_composition_once() {
        for (k, steps) in [(1, 5), (2, 4), (3, 10), (4, 6)] {
            let pts: Vec<Vec<f64>> = simplex_grid(k, steps).collect();
            assert_eq!(
                pts.len() as u128,
                simplex_grid_len(k, steps),
                "k={k} steps={steps}"
            );
            let mut keys: Vec<Vec<i64>> = pts
                .iter()
                .map(|p| p.iter().map(|x| (x * steps as f64).round() as i64).collect())
                .collect();
            for key in &keys {
                assert_eq!(key.iter().sum::<i64>(), steps as i64);
                assert!(key.iter().all(|&c| c >= 0));
            }
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), pts.len());
        }
    }

    fn ex1_data() -> ReliabilityData {
        let (d12a, d21a) = (0.550_660_6, 0.750_683_6);
        ReliabilityData {
            alternatives: vec![vec![vec![d12a, d21a]], vec![vec![d21a, d12a]]],
            num_actions: 2,
        }
    }

    #[test]
    fn symmetric_two_action_optimum_is_the_midpoint() {
        let data = ex1_data();
        let sol = minimize_weighted_inverse(&data, &[1.0, 1.0], &[], &ConvexSettings::default()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-6, "{:?}", sol.lambda);
        let harmonic = 2.0 / sol.objective;
        assert!((harmonic - (0.550_660_6 + 0.750_683_6) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn matches_grid_on_a_three_action_instance() {
        let data = ReliabilityData {
            alternatives: vec![
                vec![vec![0.3, 1.1, 0.2], vec![0.9, 0.1, 0.4]],
                vec![vec![0.5, 0.2, 1.3], vec![0.2, 0.8, 0.3]],
                vec![vec![1.0, 0.3, 0.6], vec![0.4, 0.4, 0.9]],
            ],
            num_actions: 3,
        };
        let w = [1.0, 2.0, 0.5];
        let sol = minimize_weighted_inverse(&data, &w, &[], &ConvexSettings::default()).unwrap();
        let grid_best = simplex_grid(3, 400)
            .map(|p| data.weighted_inverse(&w, &p))
            .fold(f64::INFINITY, f64::min);
        assert!(
            sol.objective <= grid_best + 1e-12,
            "{} vs {}",
            sol.objective,
            grid_best
        );
    }

    #[test]
    fn zero_weights_are_ignored() {
        let data = ex1_data();
        let sol = minimize_weighted_inverse(&data, &[1.0, 0.0], &[], &ConvexSettings::default()).unwrap();
        // only R_1 matters: its best vertex is the second action
        assert!((sol.lambda[1] - 1.0).abs() < 1e-6);
    }
}
