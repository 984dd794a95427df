//! Log-barrier online mirror descent over the base-policy simplex.
//!
//! Each update builds an importance-weighted loss vector, finds the
//! normalization constant via bracketed root finding, and moves the
//! inverse probabilities: `1/p'_i = 1/p_i + eta * (lbar_i - lambda)`.

use serde::{Deserialize, Serialize};

use crate::types::SamplingDistribution;
use crate::{Error, Result};

/// Absolute residual tolerance for the normalization solve.
pub const LAMBDA_RESIDUAL_TOL: f64 = 1e-10;

/// Hard iteration cap for the solver (10 x 64 bisections).
pub const LAMBDA_MAX_ITERS: usize = 640;

/// Importance weights are capped here before the solve. Unreachable under
/// probability clipping; pure numerical safety for degenerate inputs.
pub const IMPORTANCE_WEIGHT_CAP: f64 = 1e12;

/// Mirror-descent state: the current (unsmoothed) distribution and the
/// fixed learning rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorralState {
    dist: SamplingDistribution,
    eta: f64,
}

impl CorralState {
    pub fn new(dist: SamplingDistribution, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Config(format!("learning rate eta must be > 0, got {eta}")));
        }
        Ok(Self { dist, eta })
    }

    pub fn dist(&self) -> &SamplingDistribution {
        &self.dist
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// One update where the importance weight divides by this state's own
    /// probability of the sampled index.
    pub fn update(&mut self, sampled_index: usize, loss: f64) -> Result<()> {
        let next = corral_update(&self.dist, self.eta, sampled_index, loss)?;
        self.dist = next;
        Ok(())
    }

    /// One update where the sampled index was drawn from a different law
    /// (smoothed / budget-gated); `sampled_prob` is the probability the
    /// index actually had under that law, which keeps the loss estimator
    /// unbiased.
    pub fn update_weighted(
        &mut self,
        sampled_index: usize,
        loss: f64,
        sampled_prob: f64,
    ) -> Result<()> {
        let next = corral_update_weighted(&self.dist, self.eta, sampled_index, loss, sampled_prob)?;
        self.dist = next;
        Ok(())
    }
}

/// The update step, using the distribution's own probability as the
/// importance weight denominator.
pub fn corral_update(
    dist: &SamplingDistribution,
    eta: f64,
    sampled_index: usize,
    loss: f64,
) -> Result<SamplingDistribution> {
    let sampled_prob = *dist.probs().get(sampled_index).ok_or_else(|| {
        Error::Config(format!(
            "sampled index {sampled_index} out of range for {} policies",
            dist.len()
        ))
    })?;
    corral_update_weighted(dist, eta, sampled_index, loss, sampled_prob)
}

/// The update step with an explicit sampling probability for the
/// importance weight. Returns a valid distribution with all entries
/// strictly positive. A zero loss is the identity.
pub fn corral_update_weighted(
    dist: &SamplingDistribution,
    eta: f64,
    sampled_index: usize,
    loss: f64,
    sampled_prob: f64,
) -> Result<SamplingDistribution> {
    if sampled_index >= dist.len() {
        return Err(Error::Config(format!(
            "sampled index {sampled_index} out of range for {} policies",
            dist.len()
        )));
    }
    if !(0.0..=1.0).contains(&loss) {
        return Err(Error::Config(format!("loss {loss} outside [0, 1]")));
    }
    if loss == 0.0 {
        // lbar = 0 forces lambda = 0 and the update to the identity.
        return Ok(dist.clone());
    }
    if !(sampled_prob > 0.0) {
        return Err(Error::Config(format!(
            "sampled probability must be positive, got {sampled_prob}"
        )));
    }

    let m = dist.len();
    let weight = (loss / sampled_prob).min(IMPORTANCE_WEIGHT_CAP);
    let mut lbar = vec![0.0; m];
    lbar[sampled_index] = weight;
    let inv_p: Vec<f64> = dist.probs().iter().map(|&p| 1.0 / p).collect();

    let lambda = solve_lambda(&inv_p, eta, &lbar)?;

    let mut probs = Vec::with_capacity(m);
    for i in 0..m {
        let inv_next = inv_p[i] + eta * (lbar[i] - lambda);
        if !(inv_next > 0.0) {
            return Err(Error::Solver(format!(
                "updated inverse probability non-positive at index {i}: {inv_next}"
            )));
        }
        probs.push(1.0 / inv_next);
    }
    dist.with_probs(probs)
}

/// Finds `lambda` in `[min_i lbar_i, max_i lbar_i]` such that
/// `sum_i 1 / (inv_p_i + eta * (lbar_i - lambda)) = 1`, by bracketed
/// root finding (bisection with secant acceleration).
///
/// The returned value satisfies the residual contract
/// `|sum - 1| <= LAMBDA_RESIDUAL_TOL`.
pub fn solve_lambda(inv_p: &[f64], eta: f64, lbar: &[f64]) -> Result<f64> {
    assert_eq!(inv_p.len(), lbar.len());
    let lo0 = lbar.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = lbar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo0 == hi0 {
        // Degenerate bracket; lambda equals the common value.
        return Ok(lo0);
    }

    let g = |lambda: f64| -> f64 {
        inv_p
            .iter()
            .zip(lbar)
            .map(|(&ip, &lb)| 1.0 / (ip + eta * (lb - lambda)))
            .sum::<f64>()
            - 1.0
    };

    // The valid region keeps every denominator positive: lambda must stay
    // below the smallest pole lbar_i + inv_p_i / eta. The root lies there
    // because the sum diverges to +inf as lambda approaches the pole and
    // is <= 0 at the bracket's lower end.
    let pole = inv_p
        .iter()
        .zip(lbar)
        .map(|(&ip, &lb)| lb + ip / eta)
        .fold(f64::INFINITY, f64::min);

    let mut lo = lo0;
    let mut glo = g(lo);
    if glo >= 0.0 {
        if glo.abs() <= LAMBDA_RESIDUAL_TOL {
            return Ok(lo);
        }
        return Err(Error::Solver(format!(
            "normalization already exceeds 1 at lower bracket (residual {glo:e})"
        )));
    }

    // When the smallest pole sits inside [lo, hi0], the upper bracket end
    // must stay strictly below it; start inside and walk toward the pole
    // until the sum crosses 1 (it diverges to +inf there).
    let mut hi = if hi0 < pole { hi0 } else { lo + (pole - lo) * 0.9375 };
    let mut ghi = g(hi);
    let mut guard = 0;
    while !(ghi.is_finite() && ghi >= 0.0) {
        guard += 1;
        let next = hi + (pole - hi) * 0.5;
        if guard > 200 || !(next > hi) || !next.is_finite() {
            return Err(Error::Solver(
                "root not bracketed after numerical guarding".into(),
            ));
        }
        hi = next;
        ghi = g(hi);
    }

    let mut best = (hi, ghi.abs());
    if glo.abs() < best.1 {
        best = (lo, glo.abs());
    }
    let mut last_width = hi - lo;
    let mut force_bisect = false;

    for iter in 0..LAMBDA_MAX_ITERS {
        // Secant candidate, falling back to bisection whenever it leaves
        // the bracket, stalls, or the previous step shrank poorly.
        let mid = 0.5 * (lo + hi);
        let mut candidate = if force_bisect || ghi == glo {
            mid
        } else {
            let s = hi - ghi * (hi - lo) / (ghi - glo);
            if s.is_finite() && s > lo && s < hi {
                s
            } else {
                mid
            }
        };
        if candidate <= lo || candidate >= hi {
            candidate = mid;
        }

        let gc = g(candidate);
        if gc.abs() < best.1 {
            best = (candidate, gc.abs());
        }
        if gc.abs() <= LAMBDA_RESIDUAL_TOL {
            return Ok(candidate);
        }
        if gc < 0.0 {
            lo = candidate;
            glo = gc;
        } else {
            hi = candidate;
            ghi = gc;
        }
        let width = hi - lo;
        force_bisect = iter % 2 == 1 || width > 0.5 * last_width;
        last_width = width;
        if width <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }

    if best.1 <= LAMBDA_RESIDUAL_TOL {
        return Ok(best.0);
    }
    Err(Error::Solver(format!(
        "lambda residual {:.3e} above tolerance after {} iterations",
        best.1, LAMBDA_MAX_ITERS
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::PolicyGroup;

    fn dist(probs: Vec<f64>) -> SamplingDistribution {
        let n = probs.len();
        let mut groups = vec![PolicyGroup::Cb];
        groups.extend(vec![PolicyGroup::Llm; n - 1]);
        SamplingDistribution::new(probs, groups).unwrap()
    }

    /// Closed-form oracle for M = 2: with A = 1/p[i] + eta*L for the
    /// sampled index and B = 1/p[j] for the other, a = eta*lambda solves
    /// a^2 - (A + B - 2) a + (A B - A - B) = 0; the smaller root keeps
    /// both updated probabilities positive.
    fn quadratic_oracle(p: [f64; 2], eta: f64, i_t: usize, loss: f64) -> (f64, [f64; 2]) {
        let big_l = loss / p[i_t];
        let a_coef = 1.0 / p[i_t] + eta * big_l;
        let b_coef = 1.0 / p[1 - i_t];
        let b = a_coef + b_coef - 2.0;
        let c = a_coef * b_coef - a_coef - b_coef;
        let disc = (b * b - 4.0 * c).sqrt();
        let a_small = (b - disc) / 2.0;
        let lambda = a_small / eta;
        let mut out = [0.0; 2];
        out[i_t] = 1.0 / (a_coef - a_small);
        out[1 - i_t] = 1.0 / (b_coef - a_small);
        (lambda, out)
    }

    #[test]
    fn two_policy_case_matches_quadratic_oracle_and_frozen_values() {
        // Case 1: uniform start, sampled index 0, loss 1.
        let d = dist(vec![0.5, 0.5]);
        let (lam_oracle, p_oracle) = quadratic_oracle([0.5, 0.5], 0.05, 0, 1.0);
        let inv_p = [2.0, 2.0];
        let lbar = [2.0, 0.0];
        let lam = solve_lambda(&inv_p, 0.05, &lbar).unwrap();
        assert!((lam - lam_oracle).abs() < 1e-9, "lam={lam} oracle={lam_oracle}");
        assert!((lam - 0.97500).abs() < 1e-4);

        let next = corral_update(&d, 0.05, 0, 1.0).unwrap();
        assert!((next.prob(0) - p_oracle[0]).abs() < 1e-9);
        assert!((next.prob(1) - p_oracle[1]).abs() < 1e-9);
        assert!((next.prob(0) - 0.48751).abs() < 1e-4);
        assert!((next.prob(1) - 0.51249).abs() < 1e-4);

        // Case 2: skewed start, sampled index 1, loss 1.
        let d = dist(vec![0.9, 0.1]);
        let (lam_oracle, p_oracle) = quadratic_oracle([0.9, 0.1], 0.05, 1, 1.0);
        let next = corral_update(&d, 0.05, 1, 1.0).unwrap();
        assert!((lam_oracle - 0.11561).abs() < 1e-4, "oracle lambda {lam_oracle}");
        assert!((next.prob(0) - p_oracle[0]).abs() < 1e-9);
        assert!((next.prob(1) - p_oracle[1]).abs() < 1e-9);
        assert!((next.prob(0) - 0.90471).abs() < 1e-4);
        assert!((next.prob(1) - 0.09529).abs() < 1e-4);
    }

    #[test]
    fn zero_loss_is_identity() {
        let d = dist(vec![0.3, 0.45, 0.25]);
        let next = corral_update(&d, 0.05, 1, 0.0).unwrap();
        assert_eq!(d.probs(), next.probs());
        let lam = solve_lambda(&[1.0 / 0.3, 1.0 / 0.45, 4.0], 0.05, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(lam, 0.0);
    }

    #[test]
    fn lambda_residual_on_three_policy_case() {
        // Independent plain-bisection oracle for the residual check.
        let inv_p = [3.0, 3.0, 3.0];
        let lbar = [3.0, 0.0, 0.0];
        let eta = 0.05;
        let g = |lambda: f64| -> f64 {
            inv_p
                .iter()
                .zip(&lbar)
                .map(|(&ip, &lb)| 1.0 / (ip + eta * (lb - lambda)))
                .sum::<f64>()
                - 1.0
        };
        let (mut lo, mut hi) = (0.0_f64, 3.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lam_bisect = 0.5 * (lo + hi);

        let lam = solve_lambda(&inv_p, eta, &lbar).unwrap();
        assert!(g(lam).abs() <= LAMBDA_RESIDUAL_TOL);
        assert!((lam - lam_bisect).abs() < 1e-8);
    }

    #[test]
    fn lambda_stays_in_bracket_and_probs_positive() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, "corral-fuzz");
        for _ in 0..500 {
            let m = rng.random_range(2..=8usize);
            let mut p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().max(1e-3)).collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let d = dist(p.clone());
            let i_t = rng.random_range(0..m);
            let loss: f64 = rng.random();
            let eta = 0.005 + rng.random::<f64>() * 0.5;

            let weight = loss / p[i_t];
            let next = corral_update(&d, eta, i_t, loss).unwrap();
            let sum: f64 = next.probs().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(next.probs().iter().all(|&q| q > 0.0));

            if loss > 0.0 {
                let inv_p: Vec<f64> = p.iter().map(|&x| 1.0 / x).collect();
                let mut lbar = vec![0.0; m];
                lbar[i_t] = weight;
                let lam = solve_lambda(&inv_p, eta, &lbar).unwrap();
                assert!(lam >= 0.0 && lam <= weight, "lambda {lam} outside [0, {weight}]");
            }
        }
    }

    #[test]
    fn weighted_update_divides_by_sampled_probability() {
        // Same distribution, different sampling law: the importance weight
        // must follow the law actually sampled from.
        let d = dist(vec![0.5, 0.5]);
        let a = corral_update_weighted(&d, 0.05, 0, 1.0, 0.25).unwrap();
        let b = corral_update(&d, 0.05, 0, 1.0).unwrap();
        // Weight 4 pushes harder than weight 2.
        assert!(a.prob(0) < b.prob(0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = dist(vec![0.5, 0.5]);
        assert!(corral_update(&d, 0.05, 2, 0.5).is_err());
        assert!(corral_update(&d, 0.05, 0, 1.5).is_err());
        assert!(corral_update_weighted(&d, 0.05, 0, 0.5, 0.0).is_err());
        assert!(CorralState::new(d, 0.0).is_err());
    }
}
