//! KL and Rényi divergences (natural log) and the Chernoff-type α-maximization.
//!
//! Zero conventions for finite alphabets: `0 log(a/0) = 0` and
//! `b log(b/0) = +inf`. Gaussian pairs use closed forms throughout.

use crate::error::{Error, Result};
use crate::model::{Density, ObservationModel, RandomizedRule};
use crate::scalar::Scalar;

/// Maximizer of `(1-α) Σ_a λ_a D_α(q_i^a || q_j^a)` over `α ∈ [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaOptimum<T> {
    pub alpha_star: T,
    pub value: T,
}

/// Bracket width at which the golden-section search stops.
pub const ALPHA_BRACKET_TOL: f64 = 1e-9;

fn mismatch() -> Error {
    Error::Domain("densities are defined on different observation spaces".into())
}

/// Kullback-Leibler divergence D(p || q).
pub fn kl<T: Scalar>(p: &Density<T>, q: &Density<T>) -> Result<T> {
    match (p, q) {
        (Density::Finite(p), Density::Finite(q)) => {
            if p.len() != q.len() {
                return Err(mismatch());
            }
            let mut acc = T::zero();
            for (&x, &y) in p.iter().zip(q) {
                if x > T::zero() {
                    if y > T::zero() {
                        acc = acc + x * (x / y).ln();
                    } else {
                        return Ok(T::infinity());
                    }
                }
            }
            // rounding can leave a tiny negative sum for p ≈ q
            Ok(acc.max(T::zero()))
        }
        (
            Density::Gaussian {
                mean: mp,
                variance: vp,
            },
            Density::Gaussian {
                mean: mq,
                variance: vq,
            },
        ) => {
            let d = *mp - *mq;
            let half = T::lit(0.5);
            let v = half * (*vq / *vp).ln() + (*vp + d * d) / (T::lit(2.0) * *vq) - half;
            Ok(v.max(T::zero()))
        }
        _ => Err(mismatch()),
    }
}

/// `(1-α) D_α(p || q) = -log ∫ p^α q^(1-α)`, finite for `α < 1` unless the
/// supports are disjoint. At `α = 1` this is the continuous limit
/// `-log P(supp q)`, which is 0 for mutually absolutely continuous pairs.
pub fn scaled_renyi<T: Scalar>(p: &Density<T>, q: &Density<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if p == q {
        return Ok(T::zero());
    }
    match (p, q) {
        (Density::Finite(p), Density::Finite(q)) => {
            if p.len() != q.len() {
                return Err(mismatch());
            }
            let one_minus = T::one() - alpha;
            let mut c = T::zero();
            for (&x, &y) in p.iter().zip(q) {
                if x > T::zero() && y > T::zero() {
                    c = c + (alpha * x.ln() + one_minus * y.ln()).exp();
                }
            }
            if c > T::zero() {
                Ok((-c.ln()).max(T::zero()))
            } else {
                Ok(T::infinity())
            }
        }
        (
            Density::Gaussian {
                mean: mp,
                variance: vp,
            },
            Density::Gaussian {
                mean: mq,
                variance: vq,
            },
        ) => {
            let one_minus = T::one() - alpha;
            let mixed = alpha * *vq + one_minus * *vp;
            let d = *mp - *mq;
            let half = T::lit(0.5);
            let v = one_minus * half * (*vq / *vp).ln() - half * (*vq / mixed).ln()
                + alpha * one_minus * d * d / (T::lit(2.0) * mixed);
            Ok(v.max(T::zero()))
        }
        _ => Err(mismatch()),
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "Rényi order must lie in [0,1], got {alpha}"
        )))
    }
}

/// Rényi divergence of order `α ∈ [0,1]`; equals [`kl`] at `α = 1`.
pub fn renyi<T: Scalar>(p: &Density<T>, q: &Density<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    if alpha == T::one() {
        return kl(p, q);
    }
    let scaled = scaled_renyi(p, q, alpha)?;
    Ok(scaled / (T::one() - alpha))
}

/// Golden-section search for the maximum of a concave function on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The endpoints are compared against the final
/// interior point so monotone functions report the boundary exactly.
pub fn golden_section_max<T: Scalar, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T, bracket_tol: T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // floating steps stop shrinking near machine precision
    let mut guard = 0;
    while b - a > bracket_tol && guard < 400 {
        guard += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// `g(α) = Σ_a λ_a (1-α) D_α(q_i^a || q_j^a)`; zero-weight actions contribute nothing.
pub fn chernoff_objective<T: Scalar>(
    model: &ObservationModel<T>,
    i: usize,
    j: usize,
    lambda: &RandomizedRule<T>,
    alpha: T,
) -> Result<T> {
    let mut acc = T::zero();
    for (a, &w) in lambda.weights().iter().enumerate() {
        if w > T::zero() {
            acc = acc + w * scaled_renyi(model.kernel(i, a)?, model.kernel(j, a)?, alpha)?;
        }
    }
    Ok(acc)
}

/// Maximizes [`chernoff_objective`] over `α ∈ [0,1]` by golden-section search.
pub fn alpha_max<T: Scalar>(
    model: &ObservationModel<T>,
    i: usize,
    j: usize,
    lambda: &RandomizedRule<T>,
) -> Result<AlphaOptimum<T>> {
    if i == j {
        return Err(Error::Argument("alpha_max needs two distinct hypotheses".into()));
    }
    if lambda.num_actions() != model.num_actions() {
        return Err(Error::Argument(
            "rule length differs from the action count".into(),
        ));
    }
    // surface index errors before the search
    model.kernel(i, 0)?;
    model.kernel(j, 0)?;
    let objective = |alpha: T| chernoff_objective(model, i, j, lambda, alpha).expect("indices checked above");
    let tol = T::lit(ALPHA_BRACKET_TOL).max(T::epsilon() * T::lit(8.0));
    let (alpha_star, value) = golden_section_max(objective, T::zero(), T::one(), tol);
    Ok(AlphaOptimum {
        alpha_star,
        value: value.max(T::zero()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bern(p: f64) -> Density<f64> {
        Density::finite(vec![p, 1.0 - p])
    }

    fn ex1() -> ObservationModel<f64> {
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
    fn kl_examples() {
        assert_eq!(kl(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        let v = kl(&bern(0.5), &bern(0.25)).unwrap();
        assert!((v - (0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln())).abs() < 1e-12);
        assert!((v - 0.143_841).abs() < 1e-6);
        let g = kl(&Density::gaussian(0.0_f64, 1.0), &Density::gaussian(1.0, 1.0)).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
        assert!((kl(&bern(1.0), &bern(0.5)).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl(&bern(0.5), &bern(1.0)).unwrap(), f64::INFINITY);
        assert!((kl(&bern(0.9), &bern(0.4)).unwrap() - 0.550_661).abs() < 1e-6);
        assert!((kl(&bern(0.4), &bern(0.9)).unwrap() - 0.750_684).abs() < 1e-6);
    }

    #[test]
    fn kl_domain_mismatch() {
        let three = Density::finite(vec![0.2, 0.3, 0.5]);
        assert!(matches!(kl(&bern(0.5), &three), Err(Error::Domain(_))));
        assert!(matches!(
            kl(&bern(0.5), &Density::gaussian(0.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_kl_unequal_variance() {
        // log(σq/σp) + (σp² + Δ²)/(2σq²) - 1/2 with σp² = 1, σq² = 4, Δ = 1
        let v = kl(&Density::gaussian(0.0, 1.0), &Density::gaussian(1.0, 4.0)).unwrap();
        assert!((v - (2f64.ln() + 2.0 / 8.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn renyi_examples() {
        let (p, q) = (bern(0.9), bern(0.4));
        assert_eq!(renyi(&p, &q, 1.0).unwrap(), kl(&p, &q).unwrap());
        let half = renyi(&p, &q, 0.5).unwrap();
        assert!((half - (-2.0 * (0.36f64.sqrt() + 0.06f64.sqrt()).ln())).abs() < 1e-12);
        assert!((half - 0.336_958).abs() < 1e-6);
        assert!(renyi(&p, &q, 0.0).unwrap().abs() < 1e-15);
        assert!(matches!(renyi(&p, &q, 1.5), Err(Error::Argument(_))));
        assert!(matches!(renyi(&p, &q, -0.1), Err(Error::Argument(_))));
    }

    #[test]
    fn gaussian_renyi_limits() {
        let p = Density::gaussian(0.3_f64, 1.2);
        let q = Density::gaussian(-0.5, 0.7);
        let near_one = renyi(&p, &q, 1.0 - 1e-7).unwrap();
        assert!((near_one - kl(&p, &q).unwrap()).abs() < 1e-5);
        assert!(renyi(&p, &q, 0.0).unwrap().abs() < 1e-12);
        // equal variances: D_α = α Δ² / (2σ²)
        let v = renyi(
            &Density::gaussian(0.0_f64, 2.0),
            &Density::gaussian(1.0, 2.0),
            0.3,
        )
        .unwrap();
        assert!((v - 0.3 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_max_examples() {
        let same = ObservationModel::finite(
            vec![vec![vec![0.3, 0.7]], vec![vec![0.3, 0.7]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        let r = RandomizedRule::uniform(1);
        assert_eq!(alpha_max(&same, 0, 1, &r).unwrap().value, 0.0);

        let sym = ObservationModel::finite(
            vec![vec![vec![0.9_f64, 0.1]], vec![vec![0.1, 0.9]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        let opt = alpha_max(&sym, 0, 1, &r).unwrap();
        assert!((opt.alpha_star - 0.5).abs() < 1e-6);

        assert!(matches!(alpha_max(&sym, 1, 1, &r), Err(Error::Argument(_))));
    }

    #[test]
    fn alpha_max_on_ex1_is_the_bhattacharyya_point() {
        let m = ex1();
        let r = RandomizedRule::uniform(2);
        let opt = alpha_max(&m, 0, 1, &r).unwrap();
        assert!((opt.alpha_star - 0.5).abs() < 1e-6);
        assert!((opt.value - 0.5 * 0.336_958_08).abs() < 1e-6);
    }

    #[test]
    fn alpha_max_generic_f32() {
        let m = ObservationModel::<f32>::finite(
            vec![vec![vec![0.9, 0.1]], vec![vec![0.1, 0.9]]],
            vec![0.5, 0.5],
            10.0,
        )
        .unwrap();
        let opt = alpha_max(&m, 0, 1, &RandomizedRule::uniform(1)).unwrap();
        assert!((opt.alpha_star - 0.5).abs() < 1e-3);
    }

    fn row(raw: Vec<f64>) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    }

    prop_compose! {
        fn full_support_row(n: usize)(raw in proptest::collection::vec(0.01f64..1.0, n)) -> Vec<f64> {
            row(raw)
        }
    }

    prop_compose! {
        fn pair()(n in 2usize..6)(p in full_support_row(n), q in full_support_row(n)) -> (Vec<f64>, Vec<f64>) {
            (p, q)
        }
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative_and_zero_on_the_diagonal((p, q) in pair()) {
            let (dp, dq) = (Density::finite(p.clone()), Density::finite(q.clone()));
            let v = kl(&dp, &dq).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(kl(&dp, &dp).unwrap().abs() < 1e-12);
            let max_gap = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if max_gap > 1e-3 {
                prop_assert!(v > 1e-12);
            }
        }

        #[test]
        fn renyi_is_nondecreasing_in_order((p, q) in pair()) {
            let (dp, dq) = (Density::finite(p), Density::finite(q));
            let mut prev = 0.0;
            for k in 0..=100 {
                let v = renyi(&dp, &dq, k as f64 / 100.0).unwrap();
                prop_assert!(v + 1e-12 >= prev, "order {} gave {} < {}", k, v, prev);
                prev = v;
            }
        }

        #[test]
        fn scaled_renyi_obeys_the_kl_envelope((p, q) in pair()) {
            let (dp, dq) = (Density::finite(p), Density::finite(q));
            let forward = kl(&dp, &dq).unwrap();
            let backward = kl(&dq, &dp).unwrap();
            for k in 0..=100 {
                let alpha = k as f64 / 100.0;
                let lhs = scaled_renyi(&dp, &dq, alpha).unwrap();
                let rhs = ((1.0 - alpha) * forward).min(alpha * backward);
                prop_assert!(lhs <= rhs + 1e-9);
            }
        }

        #[test]
        fn alpha_max_matches_a_dense_grid(
            rows in proptest::collection::vec(full_support_row(3), 4),
            w in 0.0f64..1.0,
        ) {
            let m = ObservationModel::finite(
                vec![vec![rows[0].clone(), rows[1].clone()], vec![rows[2].clone(), rows[3].clone()]],
                vec![0.5, 0.5],
                10.0,
            ).unwrap();
            let lambda = RandomizedRule::new(vec![w, 1.0 - w]).unwrap();
            let opt = alpha_max(&m, 0, 1, &lambda).unwrap();
            let grid = (0..=10_000)
                .map(|k| chernoff_objective(&m, 0, 1, &lambda, k as f64 / 10_000.0).unwrap())
                .fold(0.0, f64::max);
            prop_assert!((opt.value - grid).abs() < 1e-6);
            prop_assert!(opt.value + 1e-12 >= grid);
            prop_assert!((0.0..=1.0).contains(&opt.alpha_star));
        }
    }
}
