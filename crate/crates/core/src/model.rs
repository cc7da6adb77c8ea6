//! Hypotheses, sensing actions, observation kernels, prior and penalty.
//!
//! Indices are zero-based in the library: hypothesis `i` ranges over `0..M`
//! and action `a` over `0..K`. The CLI renders them one-based.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::divergences::kl;
use crate::error::{Error, Result};
use crate::scalar::{is_zero, Scalar};

/// One observation drawn from a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation<T> {
    /// Symbol index of a finite alphabet.
    Symbol(usize),
    /// Real-valued observation of a Gaussian kernel.
    Value(T),
}

/// Observation density q for one (hypothesis, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Density<T> {
    /// Probability row over a finite alphabet `0..row.len()`.
    Finite(Vec<T>),
    Gaussian {
        mean: T,
        variance: T,
    },
}

impl<T: Scalar> Density<T> {
    /// Builds a finite row, mapping entries at or below the zero floor to exact zeros.
    pub fn finite(row: Vec<T>) -> Self {
        Density::Finite(
            row.into_iter()
                .map(|p| {
                    if is_zero(p) && p >= T::zero() {
                        T::zero()
                    } else {
                        p
                    }
                })
                .collect(),
        )
    }

    pub fn gaussian(mean: T, variance: T) -> Self {
        Density::Gaussian { mean, variance }
    }

    /// Number of symbols, or `None` for continuous densities.
    pub fn alphabet_size(&self) -> Option<usize> {
        match self {
            Density::Finite(row) => Some(row.len()),
            Density::Gaussian { .. } => None,
        }
    }

    pub fn pdf(&self, z: &Observation<T>) -> Result<T> {
        match (self, z) {
            (Density::Finite(row), Observation::Symbol(s)) => row.get(*s).copied().ok_or(Error::Index {
                what: "symbol",
                index: *s,
                limit: row.len(),
            }),
            (Density::Gaussian { mean, variance }, Observation::Value(x)) => {
                let d = *x - *mean;
                let two = T::lit(2.0);
                Ok((-(d * d) / (two * *variance)).exp() / (two * T::PI() * *variance).sqrt())
            }
            _ => Err(Error::Domain("observation kind does not match the kernel".into())),
        }
    }

    /// Natural log of the density; `-inf` for impossible observations.
    pub fn log_pdf(&self, z: &Observation<T>) -> Result<T> {
        match (self, z) {
            (Density::Gaussian { mean, variance }, Observation::Value(x)) => {
                let d = *x - *mean;
                let two = T::lit(2.0);
                Ok(-(d * d) / (two * *variance) - T::lit(0.5) * (two * T::PI() * *variance).ln())
            }
            _ => {
                let p = self.pdf(z)?;
                Ok(if p > T::zero() { p.ln() } else { T::neg_infinity() })
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation<T> {
        match self {
            Density::Finite(row) => {
                let u = T::lit(rng.random::<f64>());
                let mut cumulative = T::zero();
                let mut last_positive = 0;
                for (s, &p) in row.iter().enumerate() {
                    if p > T::zero() {
                        last_positive = s;
                        cumulative = cumulative + p;
                        if u < cumulative {
                            return Observation::Symbol(s);
                        }
                    }
                }
                // u landed in the rounding gap above the last cumulative sum
                Observation::Symbol(last_positive)
            }
            Density::Gaussian { mean, variance } => {
                let normal = Normal::new(mean.as_f64(), variance.as_f64().sqrt())
                    .expect("variance validated positive");
                Observation::Value(T::lit(normal.sample(rng)))
            }
        }
    }

    fn check(&self, label: &str, tol: T, errors: &mut Vec<String>) {
        match self {
            Density::Finite(row) => {
                if row.is_empty() {
                    errors.push(format!("{label}: empty probability row"));
                    return;
                }
                if row.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
                    errors.push(format!("{label}: negative or non-finite probability"));
                }
                let sum = row.iter().fold(T::zero(), |acc, &p| acc + p);
                if (sum - T::one()).abs() > tol {
                    errors.push(format!("{label}: row sums to {sum}, not 1"));
                }
            }
            Density::Gaussian { mean, variance } => {
                if !mean.is_finite() {
                    errors.push(format!("{label}: non-finite mean"));
                }
                if !(*variance > T::zero()) || !variance.is_finite() {
                    errors.push(format!("{label}: variance must be positive and finite"));
                }
            }
        }
    }
}

/// Kernel family shared by every density of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelType {
    Finite,
    Gaussian,
}

/// Active hypothesis testing instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel<T> {
    kernels: Vec<Vec<Density<T>>>,
    prior: Vec<T>,
    penalty: T,
}

pub(crate) fn normalization_tol<T: Scalar>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> ObservationModel<T> {
    /// Builds a model from `kernels[i][a]`, checking every structural invariant.
    pub fn new(kernels: Vec<Vec<Density<T>>>, prior: Vec<T>, penalty: T) -> Result<Self> {
        let mut errors = Vec::new();
        let m = kernels.len();
        if m < 2 {
            errors.push(format!("need at least 2 hypotheses, got {m}"));
        }
        let k = kernels.first().map_or(0, Vec::len);
        if k < 1 {
            errors.push("need at least 1 action".to_string());
        }
        if kernels.iter().any(|row| row.len() != k) {
            errors.push("every hypothesis needs one kernel per action".to_string());
        }
        let tol = normalization_tol::<T>();
        let mut kind = None;
        for (i, row) in kernels.iter().enumerate() {
            for (a, q) in row.iter().enumerate() {
                let label = format!("kernel[{}][{}]", i + 1, a + 1);
                q.check(&label, tol, &mut errors);
                let this = match q {
                    Density::Finite(_) => KernelType::Finite,
                    Density::Gaussian { .. } => KernelType::Gaussian,
                };
                if *kind.get_or_insert(this) != this {
                    errors.push(format!("{label}: mixed kernel families"));
                }
            }
        }
        // every row of one action shares an alphabet
        for a in 0..k {
            let sizes: Vec<_> = kernels
                .iter()
                .filter_map(|row| row.get(a).and_then(Density::alphabet_size))
                .collect();
            if sizes.windows(2).any(|w| w[0] != w[1]) {
                errors.push(format!(
                    "action {}: alphabet sizes differ across hypotheses",
                    a + 1
                ));
            }
        }
        if prior.len() != m {
            errors.push(format!("prior has {} entries, expected {m}", prior.len()));
        }
        if prior.iter().any(|p| !(*p > T::zero())) {
            errors.push("prior entries must be strictly positive".to_string());
        }
        let total = prior.iter().fold(T::zero(), |acc, &p| acc + p);
        if (total - T::one()).abs() > tol {
            errors.push(format!("prior sums to {total}, not 1"));
        }
        if !(penalty > T::one()) || !penalty.is_finite() {
            errors.push(format!("penalty L must be finite and > 1, got {penalty}"));
        }
        if errors.is_empty() {
            Ok(Self {
                kernels,
                prior,
                penalty,
            })
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// Finite model from probability rows `rows[i][a][z]`.
    pub fn finite(rows: Vec<Vec<Vec<T>>>, prior: Vec<T>, penalty: T) -> Result<Self> {
        let kernels = rows
            .into_iter()
            .map(|per_action| per_action.into_iter().map(Density::finite).collect())
            .collect();
        Self::new(kernels, prior, penalty)
    }

    /// Gaussian model from `(mean, variance)` pairs `params[i][a]`.
    pub fn gaussian(params: Vec<Vec<(T, T)>>, prior: Vec<T>, penalty: T) -> Result<Self> {
        let kernels = params
            .into_iter()
            .map(|per_action| {
                per_action
                    .into_iter()
                    .map(|(m, v)| Density::gaussian(m, v))
                    .collect()
            })
            .collect();
        Self::new(kernels, prior, penalty)
    }

    pub fn num_hypotheses(&self) -> usize {
        self.kernels.len()
    }

    pub fn num_actions(&self) -> usize {
        self.kernels[0].len()
    }

    pub fn kernel_type(&self) -> KernelType {
        match self.kernels[0][0] {
            Density::Finite(_) => KernelType::Finite,
            Density::Gaussian { .. } => KernelType::Gaussian,
        }
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn penalty(&self) -> T {
        self.penalty
    }

    /// Same kernels and prior with a different penalty.
    pub fn with_penalty(&self, penalty: T) -> Result<Self> {
        Self::new(self.kernels.clone(), self.prior.clone(), penalty)
    }

    /// Same kernels and penalty with a different prior.
    pub fn with_prior(&self, prior: Vec<T>) -> Result<Self> {
        Self::new(self.kernels.clone(), prior, self.penalty)
    }

    /// Alphabet size of action `a` (finite models only).
    pub fn alphabet_size(&self, a: usize) -> Option<usize> {
        self.kernels[0].get(a).and_then(Density::alphabet_size)
    }

    pub fn kernel(&self, i: usize, a: usize) -> Result<&Density<T>> {
        let m = self.num_hypotheses();
        let k = self.num_actions();
        if i >= m {
            return Err(Error::Index {
                what: "hypothesis",
                index: i,
                limit: m,
            });
        }
        if a >= k {
            return Err(Error::Index {
                what: "action",
                index: a,
                limit: k,
            });
        }
        Ok(&self.kernels[i][a])
    }

    /// q_i^a(z).
    pub fn density(&self, i: usize, a: usize, z: &Observation<T>) -> Result<T> {
        self.kernel(i, a)?.pdf(z)
    }

    pub fn log_density(&self, i: usize, a: usize, z: &Observation<T>) -> Result<T> {
        self.kernel(i, a)?.log_pdf(z)
    }

    /// Draws an observation from q_i^a.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, a: usize, rng: &mut R) -> Result<Observation<T>> {
        Ok(self.kernel(i, a)?.sample(rng))
    }

    /// Largest likelihood ratio `sup q_i^a(z) / q_j^a(z)` over all i, j, a, z.
    ///
    /// Zero over zero is skipped and positive over zero is `+inf`. Gaussian
    /// kernels give `+inf` unless every hypothesis shares the same Gaussian
    /// for each action.
    pub fn likelihood_ratio_bound(&self) -> T {
        let mut xi = T::one();
        for a in 0..self.num_actions() {
            for qi in self.kernels.iter().map(|row| &row[a]) {
                for qj in self.kernels.iter().map(|row| &row[a]) {
                    match (qi, qj) {
                        (Density::Finite(p), Density::Finite(q)) => {
                            for (&x, &y) in p.iter().zip(q) {
                                if x > T::zero() {
                                    if y > T::zero() {
                                        xi = xi.max(x / y);
                                    } else {
                                        return T::infinity();
                                    }
                                }
                            }
                        }
                        (g, h) => {
                            if g != h {
                                return T::infinity();
                            }
                        }
                    }
                }
            }
        }
        xi
    }

    /// KL divergence table `kl[a][i][j] = D(q_i^a || q_j^a)`.
    pub fn kl_table(&self) -> Vec<Vec<Vec<T>>> {
        let m = self.num_hypotheses();
        (0..self.num_actions())
            .map(|a| {
                (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                kl(&self.kernels[i][a], &self.kernels[j][a])
                                    .expect("kernels of one action share a domain")
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks the standing assumptions: pairwise distinguishability and a
    /// bounded likelihood ratio.
    pub fn validate(&self) -> ValidationReport {
        let m = self.num_hypotheses();
        let table = self.kl_table();
        let threshold = T::lit(1e-12);
        let mut indistinguishable = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if i != j && !table.iter().any(|per_action| per_action[i][j] > threshold) {
                    indistinguishable.push((i, j));
                }
            }
        }
        let xi = self.likelihood_ratio_bound().as_f64();
        ValidationReport {
            indistinguishable_pairs: indistinguishable,
            likelihood_ratio_bound: xi,
            prior_positive: self.prior.iter().all(|p| *p > T::zero()),
        }
    }
}

/// Outcome of [`ObservationModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Ordered pairs (i, j) with D(q_i^a || q_j^a) = 0 under every action.
    pub indistinguishable_pairs: Vec<(usize, usize)>,
    /// ξ; `+inf` when some likelihood ratio is unbounded.
    pub likelihood_ratio_bound: f64,
    pub prior_positive: bool,
}

impl ValidationReport {
    /// Every ordered pair of hypotheses is separable by some action.
    pub fn distinguishable(&self) -> bool {
        self.indistinguishable_pairs.is_empty()
    }

    pub fn bounded_likelihood_ratio(&self) -> bool {
        self.likelihood_ratio_bound.is_finite()
    }

    /// Bounds can be computed and policies constructed.
    pub fn usable(&self) -> bool {
        self.distinguishable() && self.prior_positive
    }
}

/// Randomized sensing rule: a probability vector over actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomizedRule<T> {
    weights: Vec<T>,
}

impl<T: Scalar> RandomizedRule<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Argument(
                "randomized rule needs at least one action".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Argument("rule weights must be nonnegative".into()));
        }
        let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        if (total - T::one()).abs() > normalization_tol::<T>() {
            return Err(Error::Argument(format!("rule weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Projects a nonnegative vector onto the simplex by rescaling.
    pub(crate) fn normalized(mut weights: Vec<T>) -> Self {
        for w in weights.iter_mut() {
            if *w < T::zero() {
                *w = T::zero();
            }
        }
        let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        for w in weights.iter_mut() {
            *w = *w / total;
        }
        Self { weights }
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![T::one() / T::lit(k as f64); k],
        }
    }

    /// Point mass on action `a`.
    pub fn vertex(k: usize, a: usize) -> Self {
        let mut weights = vec![T::zero(); k];
        weights[a] = T::one();
        Self { weights }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn num_actions(&self) -> usize {
        self.weights.len()
    }

    /// Draws an action index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = T::lit(rng.random::<f64>());
        let mut cumulative = T::zero();
        let mut last = 0;
        for (a, &w) in self.weights.iter().enumerate() {
            if w > T::zero() {
                last = a;
                cumulative = cumulative + w;
                if u < cumulative {
                    return a;
                }
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn ex1() -> ObservationModel<f64> {
        ObservationModel::finite(
            vec![
                vec![vec![0.9, 0.1], vec![0.4, 0.6]],
                vec![vec![0.4, 0.6], vec![0.9, 0.1]],
            ],
            vec![0.5, 0.5],
            1e4,
        )
        .unwrap()
    }

    #[test]
    fn density_lookup_and_normal_pdf() {
        let m = ex1();
        assert_eq!(m.density(0, 0, &Observation::Symbol(0)).unwrap(), 0.9);
        assert_eq!(m.density(1, 0, &Observation::Symbol(1)).unwrap(), 0.6);
        let g = Density::gaussian(0.0_f64, 1.0);
        let v = g.pdf(&Observation::Value(0.0)).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn density_index_errors() {
        let m = ex1();
        assert!(matches!(
            m.density(2, 0, &Observation::Symbol(0)),
            Err(Error::Index {
                what: "hypothesis",
                ..
            })
        ));
        assert!(matches!(
            m.density(0, 2, &Observation::Symbol(0)),
            Err(Error::Index { what: "action", .. })
        ));
        assert!(matches!(
            m.density(0, 0, &Observation::Symbol(2)),
            Err(Error::Index { what: "symbol", .. })
        ));
        assert!(matches!(
            m.density(0, 0, &Observation::Value(0.3)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_density_integrates_to_one() {
        let g = Density::gaussian(1.5_f64, 2.0);
        let sd = 2.0_f64.sqrt();
        let (lo, hi) = (1.5 - 10.0 * sd, 1.5 + 10.0 * sd);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        // composite Simpson
        let mut acc = 0.0;
        for k in 0..=n {
            let x = lo + k as f64 * h;
            let w = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * g.pdf(&Observation::Value(x)).unwrap();
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_row_always_samples_its_atom() {
        let q = Density::finite(vec![1.0_f64, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert_eq!(q.sample(&mut rng), Observation::Symbol(0));
        }
    }

    #[test]
    fn bernoulli_sampling_frequency() {
        let m = ex1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| m.sample(0, 0, &mut rng).unwrap() == Observation::Symbol(0))
            .count();
        assert!((zeros as f64 / n as f64 - 0.9).abs() < 0.001);
    }

    #[test]
    fn gaussian_sample_mean() {
        let q = Density::gaussian(2.0_f64, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            if let Observation::Value(x) = q.sample(&mut rng) {
                sum += x;
            }
        }
        assert!((sum / n as f64 - 2.0).abs() < 0.004);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = ex1();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|t| m.sample(t % 2, t % 2, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        // random 2x2 model with 4 symbols; critical value chi2(3) at 0.001 is 16.266
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut random_row = || {
            let raw: Vec<f64> = (0..4).map(|_| 0.05 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let rows = vec![vec![random_row(), random_row()], vec![random_row(), random_row()]];
        let m = ObservationModel::finite(rows, vec![0.5, 0.5], 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        for i in 0..2 {
            for a in 0..2 {
                let mut counts = [0usize; 4];
                for _ in 0..n {
                    if let Observation::Symbol(s) = m.sample(i, a, &mut rng).unwrap() {
                        counts[s] += 1;
                    }
                }
                let chi2: f64 = (0..4)
                    .map(|s| {
                        let expected = n as f64 * m.density(i, a, &Observation::Symbol(s)).unwrap();
                        (counts[s] as f64 - expected).powi(2) / expected
                    })
                    .sum();
                assert!(chi2 < 16.266, "chi2 = {chi2} for ({i},{a})");
            }
        }
    }

    #[test]
    fn likelihood_ratio_bound_cases() {
        assert!((ex1().likelihood_ratio_bound() - 6.0).abs() < 1e-12);
        let same = ObservationModel::finite(
            vec![vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        assert_eq!(same.likelihood_ratio_bound(), 1.0);
        let g = ObservationModel::gaussian(vec![vec![(0.0, 1.0)], vec![(1.0, 1.0)]], vec![0.5, 0.5], 10.0)
            .unwrap();
        assert_eq!(g.likelihood_ratio_bound(), f64::INFINITY);
        let separated = ObservationModel::finite(
            vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        assert_eq!(separated.likelihood_ratio_bound(), f64::INFINITY);
    }

    #[test]
    fn validation_reports() {
        let r = ex1().validate();
        assert!(r.distinguishable() && r.bounded_likelihood_ratio() && r.usable());
        assert!((r.likelihood_ratio_bound - 6.0).abs() < 1e-12);

        let same = ObservationModel::finite(
            vec![vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        let r = same.validate();
        assert_eq!(r.indistinguishable_pairs, vec![(0, 1), (1, 0)]);
        assert!(!r.usable());

        let g = ObservationModel::gaussian(vec![vec![(0.0, 1.0)], vec![(1.0, 1.0)]], vec![0.5, 0.5], 10.0)
            .unwrap();
        let r = g.validate();
        assert!(r.distinguishable() && !r.bounded_likelihood_ratio() && r.usable());
    }

    #[test]
    fn malformed_models_list_violations() {
        let err = ObservationModel::finite(
            vec![vec![vec![0.5, 0.6]], vec![vec![0.3, 0.7]]],
            vec![0.0, 1.0],
            1.0,
        )
        .unwrap_err();
        match err {
            Error::Validation(v) => assert_eq!(v.len(), 3, "{v:?}"),
            e => panic!("unexpected {e:?}"),
        }
        assert!(
            ObservationModel::gaussian(vec![vec![(0.0, 0.0)], vec![(0.0, 1.0)]], vec![0.5, 0.5], 2.0)
                .is_err()
        );
        assert!(ObservationModel::finite(vec![vec![vec![1.0]]], vec![1.0], 2.0).is_err());
    }

    #[test]
    fn tiny_probabilities_become_exact_zeros() {
        let q = Density::finite(vec![1.0_f64, 1e-301]);
        assert_eq!(q, Density::Finite(vec![1.0, 0.0]));
    }

    #[test]
    fn generic_over_f32() {
        let m = ObservationModel::<f32>::finite(
            vec![vec![vec![0.9, 0.1]], vec![vec![0.4, 0.6]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        assert!((m.likelihood_ratio_bound() - 6.0).abs() < 1e-5);
        assert!(m.validate().usable());
    }

    #[test]
    fn rule_validation_and_sampling() {
        assert!(RandomizedRule::new(vec![0.5_f64, 0.6]).is_err());
        assert!(RandomizedRule::new(vec![-0.1_f64, 1.1]).is_err());
        let r = RandomizedRule::new(vec![0.25_f64, 0.75]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let ones = (0..n).filter(|_| r.sample(&mut rng) == 1).count() as f64;
        let sd = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((ones - 0.75 * n as f64).abs() < 3.0 * sd);
        let v = RandomizedRule::<f64>::vertex(3, 2);
        assert!((0..100).all(|_| v.sample(&mut rng) == 2));
    }
}
