//! Regret traces, theoretical bound curves, and empirical decay exponents.

use crate::divergence::DualVector;
use crate::domain::GridDomain;
use crate::engine::RoundRecord;
use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialKind};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub value: f64,
    pub index: usize,
}

/// Grid minimum of the cumulative loss; ties go to the lowest index.
pub fn benchmark(cumulative: &DualVector) -> Benchmark {
    let (value, index) = cumulative.min_with_index();
    Benchmark { value, index }
}

/// Constants entering the regret bound.
#[derive(Debug, Clone)]
pub struct BoundParams {
    /// Dual-norm bound on the losses.
    pub m: f64,
    pub lipschitz: f64,
    pub diameter: f64,
    pub fatness: f64,
    pub dimension: usize,
    pub potential: Potential,
    pub schedule: Schedule,
}

impl BoundParams {
    pub fn new(
        domain: &GridDomain,
        potential: &Potential,
        schedule: &Schedule,
        lipschitz: f64,
        m: f64,
    ) -> Self {
        Self {
            m,
            lipschitz,
            diameter: domain.diameter(),
            fatness: domain.fatness(),
            dimension: domain.dimension(),
            potential: potential.clone(),
            schedule: *schedule,
        }
    }

    /// Homothety ratio `d_t` of the comparator density.
    pub fn homothety(&self, t: usize) -> f64 {
        let t = t as f64;
        match self.potential.kind() {
            PotentialKind::Entropy { .. } => 1.0 / t,
            _ => {
                let n = self.dimension as f64;
                let eps = self.potential.growth().eps;
                t.powf(-(1.0 - self.schedule.alpha()) / (1.0 + n * eps))
            }
        }
    }

    fn evaluate(&self, t: usize, eta_sum: f64) -> f64 {
        let tf = t as f64;
        let ell = self.potential.convexity().ell;
        let d = self.homothety(t);
        let mass = self.fatness * d.powi(self.dimension as i32);
        let comparator = mass * self.potential.f(1.0 / mass);
        let eta_next = self.schedule.learning_rate(t + 1);
        self.m * self.m / (2.0 * ell) * eta_sum / tf
            + self.lipschitz * self.diameter * d
            + comparator / (tf * eta_next)
    }
}

/// Upper bound on `R^{(t)}/t`:
///
/// ```text
/// (M²/2ℓ)·Σ_{τ≤t} η_{τ+1}/t + L·D·d_t + v·d_tⁿ·f(1/(v·d_tⁿ)) / (t·η_{t+1})
/// ```
///
/// with `d_t = t^{−(1−α)/(1+nε)}`, or `d_t = 1/t` for entropy potentials.
pub fn bound_curve(params: &BoundParams, t: usize) -> f64 {
    let t = t.max(1);
    let eta_sum: f64 = (1..=t).map(|tau| params.schedule.learning_rate(tau + 1)).sum();
    params.evaluate(t, eta_sum)
}

/// [`bound_curve`] for `t = 1..=horizon`, sharing the partial sums.
pub fn bound_series(params: &BoundParams, horizon: usize) -> Vec<f64> {
    let mut eta_sum = 0.0;
    (1..=horizon)
        .map(|t| {
            eta_sum += params.schedule.learning_rate(t + 1);
            params.evaluate(t, eta_sum)
        })
        .collect()
}

/// Least-squares slope of `ln value` against `ln t` over `t ∈ [lo, hi]`.
pub fn fit_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .copied()
        .collect();
    if points.len() < 10 {
        return Err(Error::Fit(format!(
            "{} points in window [{}, {}], need at least 10",
            points.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, v)) = points.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, v)| (a + t.ln(), b + v.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (t, v)| {
        let dx = t.ln() - mx;
        (a + dx * (v.ln() - my), b + dx * dx)
    });
    if sxx == 0.0 {
        return Err(Error::Fit("window contains a single abscissa".into()));
    }
    Ok(sxy / sxx)
}

/// Per-round quantities of one run. Index `k` holds round `t = k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub records: Vec<RoundRecord>,
    pub cum_expected_loss: Vec<f64>,
    pub benchmark: Vec<f64>,
    pub argmin: Vec<usize>,
    pub regret: Vec<f64>,
    pub per_round: Vec<f64>,
    pub bound_rhs: Vec<f64>,
    /// Cumulative loss of the uniform density.
    pub uniform_loss: Vec<f64>,
    /// Gap between the grid benchmark and the continuum infimum, at most `L·diag/2`.
    pub benchmark_slack: f64,
    pub l_hat: f64,
    pub m_hat: f64,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Replaces `bound_rhs` with the bound for `params`.
    pub fn attach_bound(&mut self, params: &BoundParams) {
        self.bound_rhs = bound_series(params, self.len());
    }

    /// Rounds at which `R^{(t)}/t` exceeds the bound.
    pub fn bound_violations(&self) -> Vec<usize> {
        self.per_round
            .iter()
            .zip(&self.bound_rhs)
            .enumerate()
            .filter(|(_, (r, b))| r > b)
            .map(|(k, _)| k + 1)
            .collect()
    }

    /// `Σ_{τ≤t} ⟨ℓ^{(τ)}, x^{(τ)} − u⟩` for the uniform comparator `u`.
    pub fn uniform_regret(&self) -> Vec<f64> {
        self.cum_expected_loss
            .iter()
            .zip(&self.uniform_loss)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `(M²/2ℓ)·Σ_{τ≤t} η_τ`.
    pub fn uniform_bound(&self, m: f64, ell: f64) -> Vec<f64> {
        let mut sum = 0.0;
        self.records
            .iter()
            .map(|r| {
                sum += r.eta;
                m * m / (2.0 * ell) * sum
            })
            .collect()
    }

    /// Rounds violating the uniform-comparator bound (beyond `slack`).
    pub fn uniform_bound_violations(&self, m: f64, ell: f64, slack: f64) -> Vec<usize> {
        self.uniform_regret()
            .iter()
            .zip(self.uniform_bound(m, ell))
            .enumerate()
            .filter(|(_, (lhs, rhs))| **lhs > rhs + slack)
            .map(|(k, _)| k + 1)
            .collect()
    }

    /// `(t, R^{(t)}/t)` pairs.
    pub fn per_round_series(&self) -> Vec<(f64, f64)> {
        self.per_round
            .iter()
            .enumerate()
            .map(|(k, v)| ((k + 1) as f64, *v))
            .collect()
    }

    pub fn fit(&self, window: (f64, f64)) -> Result<f64> {
        fit_exponent(&self.per_round_series(), window)
    }

    /// Largest deviation from
    /// `R^{(t)} − R^{(t−1)} = ⟨ℓ^{(t)}, x^{(t)}⟩ − (B^{(t)} − B^{(t−1)})`.
    pub fn consistency_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let (mut prev_r, mut prev_b) = (0.0, 0.0);
        for (k, rec) in self.records.iter().enumerate() {
            let lhs = self.regret[k] - prev_r;
            let rhs = rec.expected_loss - (self.benchmark[k] - prev_b);
            let scale = 1.0 + self.cum_expected_loss[k].abs();
            worst = worst.max((lhs - rhs).abs() / scale);
            prev_r = self.regret[k];
            prev_b = self.benchmark[k];
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn series(f: impl Fn(f64) -> f64, lo: usize, hi: usize, step: usize) -> Vec<(f64, f64)> {
        (lo..=hi).step_by(step).map(|t| (t as f64, f(t as f64))).collect()
    }

    #[test]
    fn benchmark_examples() {
        let d = Arc::new(GridDomain::weighted_line(&[1.0; 4]).unwrap());
        let l = DualVector::new(Arc::clone(&d), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(benchmark(&l), Benchmark { value: 0.0, index: 0 });
        let c = DualVector::constant(d, 2.5);
        assert_eq!(benchmark(&c), Benchmark { value: 2.5, index: 0 });
    }

    #[test]
    fn exact_power_laws() {
        let s = series(|t| t.powf(-0.5), 1, 1000, 7);
        assert_abs_diff_eq!(fit_exponent(&s, (1.0, 1000.0)).unwrap(), -0.5, epsilon = 1e-12);
        let s = series(|t| 3.0 * t.powf(-0.4), 1, 1000, 7);
        assert_abs_diff_eq!(fit_exponent(&s, (1.0, 1000.0)).unwrap(), -0.4, epsilon = 1e-12);
    }

    #[test]
    fn log_corrected_power_law() {
        let s = series(|t| t.powf(-0.5) * t.ln().sqrt(), 100, 10_000, 1);
        let slope = fit_exponent(&s, (100.0, 10_000.0)).unwrap();
        assert!(slope > -0.5 && slope < -0.4, "{slope}");
    }

    #[test]
    fn fit_errors() {
        let s = series(|t| t, 1, 5, 1);
        assert!(matches!(fit_exponent(&s, (1.0, 5.0)), Err(Error::Fit(_))));
        let mut s = series(|t| t, 1, 50, 1);
        s[20].1 = 0.0;
        assert!(matches!(fit_exponent(&s, (1.0, 50.0)), Err(Error::Fit(_))));
    }

    fn unit_params(pot: Potential, schedule: Schedule) -> BoundParams {
        let d = GridDomain::build(Shape::Interval { lo: 0.0, hi: 1.0 }, 64).unwrap();
        BoundParams::new(&d, &pot, &schedule, 1.0, 1.0)
    }

    #[test]
    fn entropy_comparator_term_is_log() {
        let p = unit_params(Potential::entropy(0.0).unwrap(), Schedule::constant(0.5).unwrap());
        let t = 50;
        let eta_sum = 0.5 * t as f64;
        let expected = 0.5 * eta_sum / t as f64
            + p.diameter / t as f64
            + (t as f64).ln() / (t as f64 * 0.5);
        assert_abs_diff_eq!(bound_curve(&p, t), expected, epsilon = 1e-12);
    }

    #[test]
    fn identity_bound_is_finite_at_one() {
        let p = unit_params(Potential::identity(), Schedule::power(1.0, 0.5).unwrap());
        let b = bound_curve(&p, 1);
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn series_matches_pointwise() {
        let p = unit_params(Potential::p_norm(1.5).unwrap(), Schedule::power(1.0, 0.4).unwrap());
        let s = bound_series(&p, 200);
        for t in [1, 2, 17, 200] {
            assert_abs_diff_eq!(s[t - 1], bound_curve(&p, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn p_norm_bound_slope() {
        let p = unit_params(Potential::p_norm(1.5).unwrap(), Schedule::power(1.0, 0.4).unwrap());
        let s = bound_series(&p, 1_000_000);
        let pts: Vec<(f64, f64)> = (0..=60)
            .map(|k| {
                let t = (1e3 * 1e3f64.powf(k as f64 / 60.0)).round() as usize;
                (t as f64, s[t - 1])
            })
            .collect();
        let slope = fit_exponent(&pts, (1e3, 1e6)).unwrap();
        assert!((slope + 0.4).abs() < 0.02, "{slope}");
    }
}
