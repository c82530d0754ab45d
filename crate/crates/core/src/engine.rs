//! The online loop: accumulate losses, pick a learning rate, project.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergence::{lp_norm, pair, Density, DualVector};
use crate::domain::GridDomain;
use crate::error::{param, Error, Result};
use crate::losses::{empirical_lipschitz, LossSource};
use crate::potential::Potential;
use crate::projection::project;
use crate::regret::{benchmark, BoundParams, RegretTrace};
use crate::schedule::Schedule;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub eta: f64,
    pub nu_star: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `⟨ℓ^{(t)}, x^{(t)}⟩`
    pub expected_loss: f64,
    pub support_fraction: f64,
    pub wall_time: Duration,
    /// A sampled action, when sampling is enabled.
    pub play: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tolerance: f64,
    /// Seed for sampling one action per round; `None` disables sampling.
    pub sample_seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tolerance: crate::projection::DEFAULT_TOLERANCE,
            sample_seed: None,
        }
    }
}

/// Runs `horizon` rounds with the default options and tolerance `tol`.
pub fn run(
    domain: &Arc<GridDomain>,
    pot: &Potential,
    schedule: &Schedule,
    source: &mut dyn LossSource,
    horizon: usize,
    tol: f64,
) -> Result<RegretTrace> {
    let options = RunOptions {
        tolerance: tol,
        ..RunOptions::default()
    };
    run_with(domain, pot, schedule, source, horizon, &options)
}

/// Runs the loop and returns its trace, with `bound_rhs` evaluated at the
/// measured constants.
pub fn run_with(
    domain: &Arc<GridDomain>,
    pot: &Potential,
    schedule: &Schedule,
    source: &mut dyn LossSource,
    horizon: usize,
    options: &RunOptions,
) -> Result<RegretTrace> {
    if horizon == 0 {
        return Err(param("horizon", "must be at least 1"));
    }
    let schedule = schedule.validated()?;
    let pairs = domain.adjacent_pairs();
    let uniform = Density::uniform(Arc::clone(domain));
    let dual_exponent = pot.convexity().dual_exponent;
    let mut sampler = options.sample_seed.map(PlaySampler::new);

    let mut cumulative = DualVector::zeros(Arc::clone(domain));
    let mut previous: Option<Density> = None;
    let mut trace = RegretTrace {
        records: Vec::with_capacity(horizon),
        cum_expected_loss: Vec::with_capacity(horizon),
        benchmark: Vec::with_capacity(horizon),
        argmin: Vec::with_capacity(horizon),
        regret: Vec::with_capacity(horizon),
        per_round: Vec::with_capacity(horizon),
        bound_rhs: Vec::new(),
        uniform_loss: Vec::with_capacity(horizon),
        benchmark_slack: 0.0,
        l_hat: 0.0,
        m_hat: 0.0,
    };
    let (mut cum_loss, mut cum_uniform) = (0.0, 0.0);

    for t in 1..=horizon {
        let wrap = |e: Error| Error::Round {
            round: t,
            source: Box::new(e),
        };
        let start = Instant::now();
        let eta = schedule.learning_rate(t);
        let step = project(pot, &cumulative, eta, options.tolerance).map_err(wrap)?;
        let wall_time = start.elapsed();
        let x = step.density;

        let loss = source.next_loss(t, previous.as_ref()).map_err(wrap)?;
        let expected = pair(&loss, &x).map_err(wrap)?;
        cumulative.accumulate(&loss).map_err(wrap)?;
        let best = benchmark(&cumulative);

        cum_loss += expected;
        cum_uniform += pair(&loss, &uniform).map_err(wrap)?;
        trace.l_hat = trace.l_hat.max(empirical_lipschitz(&loss, &pairs));
        trace.m_hat = trace.m_hat.max(lp_norm(loss.values(), dual_exponent, domain));

        trace.cum_expected_loss.push(cum_loss);
        trace.uniform_loss.push(cum_uniform);
        trace.benchmark.push(best.value);
        trace.argmin.push(best.index);
        trace.regret.push(cum_loss - best.value);
        trace.per_round.push((cum_loss - best.value) / t as f64);
        trace.records.push(RoundRecord {
            t,
            eta,
            nu_star: step.nu_star,
            iterations: step.iterations,
            residual: step.residual,
            expected_loss: expected,
            support_fraction: x.support_fraction(),
            wall_time,
            play: sampler.as_mut().map(|s| s.draw(&x)),
        });
        previous = Some(x);
    }

    trace.benchmark_slack = trace.l_hat * domain.cell_diagonal() / 2.0;
    let params = BoundParams::new(domain, pot, &schedule, trace.l_hat, trace.m_hat);
    trace.attach_bound(&params);
    Ok(trace)
}

/// Draws actions: a cell with probability `wᵢ·xᵢ`, then a uniform point in it.
#[derive(Debug, Clone)]
pub struct PlaySampler {
    rng: ChaCha8Rng,
}

impl PlaySampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn draw(&mut self, x: &Density) -> Vec<f64> {
        let domain = x.domain();
        let probs: Vec<f64> = domain
            .weights()
            .iter()
            .zip(x.values())
            .map(|(w, v)| w * v)
            .collect();
        let cell = WeightedIndex::new(&probs)
            .expect("a density has positive mass")
            .sample(&mut self.rng);
        domain
            .center(cell)
            .iter()
            .zip(domain.cell_size())
            .map(|(c, h)| c + h * (self.rng.gen::<f64>() - 0.5))
            .collect()
    }
}

/// One action drawn from `x` with a fresh sampler seeded by `seed`.
pub fn sample_play(x: &Density, seed: u64) -> Vec<f64> {
    PlaySampler::new(seed).draw(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;
    use crate::losses::{FixedSequence, LossFamily, LossGenerator, LossSpec};
    use approx::assert_abs_diff_eq;

    fn unit(res: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::build(Shape::Interval { lo: 0.0, hi: 1.0 }, res).unwrap())
    }

    #[test]
    fn first_round_is_uniform() {
        let d = unit(16);
        let l = DualVector::new(Arc::clone(&d), (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
        let mut src = FixedSequence(vec![l.clone()]);
        let pot = Potential::p_norm(1.5).unwrap();
        let trace = run(&d, &pot, &Schedule::power(1.0, 0.5).unwrap(), &mut src, 1, 1e-12).unwrap();
        let mean = l.values().iter().sum::<f64>() / 16.0;
        assert_abs_diff_eq!(trace.records[0].expected_loss, mean, epsilon = 1e-9);
        assert_abs_diff_eq!(trace.regret[0], mean, epsilon = 1e-9);
        assert_eq!(trace.records[0].support_fraction, 1.0);
    }

    #[test]
    fn constant_losses_have_zero_regret() {
        let d = unit(32);
        let c = DualVector::constant(Arc::clone(&d), 0.7);
        let mut src = FixedSequence(vec![c; 50]);
        let pot = Potential::entropy(0.0).unwrap();
        let trace = run(&d, &pot, &Schedule::constant(1.0).unwrap(), &mut src, 50, 1e-12).unwrap();
        for r in &trace.regret {
            assert!(r.abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn hedge_on_linear_loss_concentrates() {
        let d = unit(64);
        let l = DualVector::new(Arc::clone(&d), d.centers().map(|s| s[0]).collect()).unwrap();
        let mut src = FixedSequence(vec![l.clone(); 30]);
        let pot = Potential::entropy(0.0).unwrap();
        let eta = 0.8;
        let trace = run(&d, &pot, &Schedule::constant(eta).unwrap(), &mut src, 30, 1e-12).unwrap();
        for w in trace.records.windows(2) {
            assert!(w[1].expected_loss < w[0].expected_loss);
        }
        // Closed form: x^{(t)} ∝ e^{−η (t−1) s}.
        for (k, rec) in trace.records.iter().enumerate() {
            let z: f64 = d.centers().map(|s| (-eta * k as f64 * s[0]).exp()).sum();
            let mean: f64 = d
                .centers()
                .map(|s| s[0] * (-eta * k as f64 * s[0]).exp())
                .sum::<f64>()
                / z;
            assert_abs_diff_eq!(rec.expected_loss, mean, epsilon = 1e-9);
        }
    }

    #[test]
    fn trace_is_consistent_and_deterministic() {
        let d = unit(64);
        let spec = LossSpec {
            family: LossFamily::RandomConeMix { k: 3 },
            lipschitz: 1.0,
            bound: 1.0,
            seed: 11,
        };
        let pot = Potential::p_norm(1.25).unwrap();
        let sched = Schedule::power(1.0, 0.4).unwrap();
        let go = || {
            let mut g = LossGenerator::new(spec.clone(), Arc::clone(&d)).unwrap();
            run_with(
                &d,
                &pot,
                &sched,
                &mut g,
                200,
                &RunOptions {
                    tolerance: 1e-10,
                    sample_seed: Some(5),
                },
            )
            .unwrap()
        };
        let (a, b) = (go(), go());
        assert!(a.consistency_error() < 1e-12);
        assert_eq!(a.per_round, b.per_round);
        assert_eq!(
            a.records.iter().map(|r| r.play.clone()).collect::<Vec<_>>(),
            b.records.iter().map(|r| r.play.clone()).collect::<Vec<_>>()
        );
        assert!(a.l_hat <= 1.0 + 1e-9);
        assert!(a.bound_violations().is_empty());
    }

    #[test]
    fn source_failure_names_round() {
        let d = unit(4);
        let mut src = FixedSequence(vec![DualVector::zeros(Arc::clone(&d))]);
        let pot = Potential::identity();
        let err = run(&d, &pot, &Schedule::constant(1.0).unwrap(), &mut src, 3, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Round { round: 2, .. }), "{err:?}");
    }

    #[test]
    fn sampling_stays_in_support() {
        let d = unit(10);
        let x = Density::point_mass(Arc::clone(&d), 3);
        let mut s = PlaySampler::new(1);
        for _ in 0..200 {
            let p = s.draw(&x);
            assert!(p[0] >= 0.3 && p[0] <= 0.4, "{p:?}");
        }
        assert_eq!(sample_play(&x, 9), sample_play(&x, 9));
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let d = unit(5);
        let x = Density::uniform(Arc::clone(&d));
        let mut s = PlaySampler::new(42);
        let n = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[d.locate(&s.draw(&x)).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * 0.2).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }
}
