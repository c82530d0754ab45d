//! Lipschitz, bounded loss sequences on a grid.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergence::{lp_norm, Density, DualVector};
use crate::domain::{euclidean, GridDomain};
use crate::error::{param, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LossFamily {
    /// `min(L‖s − c_t‖, M)` with `c_t` cycling through `path`, each point
    /// held for `dwell` rounds.
    MovingCone { path: Vec<Vec<f64>>, dwell: usize },
    FixedCone { center: Vec<f64> },
    /// Average of `k` cones with seeded random centers, redrawn every round.
    RandomConeMix { k: usize },
    /// `max(M − L‖s − c_t‖, 0)` with `c_t` the mode of the learner's
    /// previous density.
    AdaptiveAdversary,
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::MovingCone { .. } => "moving_cone",
            LossFamily::FixedCone { .. } => "fixed_cone",
            LossFamily::RandomConeMix { .. } => "random_cone_mix",
            LossFamily::AdaptiveAdversary => "adaptive_adversary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub family: LossFamily,
    pub lipschitz: f64,
    pub bound: f64,
    pub seed: u64,
}

impl LossSpec {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(param("lipschitz", format!("{} must be positive", self.lipschitz)));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(param("bound", format!("{} must be positive", self.bound)));
        }
        let check_point = |name: &'static str, p: &[f64]| {
            if p.len() != dimension {
                return Err(param(
                    name,
                    format!("point has dimension {} but the domain has {dimension}", p.len()),
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(param(name, "coordinates must be finite"));
            }
            Ok(())
        };
        match &self.family {
            LossFamily::MovingCone { path, dwell } => {
                if path.is_empty() {
                    return Err(param("path", "needs at least one point"));
                }
                if *dwell == 0 {
                    return Err(param("dwell", "must be at least 1"));
                }
                path.iter().try_for_each(|p| check_point("path", p))
            }
            LossFamily::FixedCone { center } => check_point("center", center),
            LossFamily::RandomConeMix { k } => {
                if *k == 0 {
                    return Err(param("k", "must be at least 1"));
                }
                Ok(())
            }
            LossFamily::AdaptiveAdversary => Ok(()),
        }
    }
}

/// Supplies `ℓ^{(t)}` once `x^{(t)}` has been committed.
pub trait LossSource {
    /// `previous` is `x^{(t−1)}`, absent in the first round.
    fn next_loss(&mut self, t: usize, previous: Option<&Density>) -> Result<DualVector>;
}

/// Evaluates a [`LossSpec`] on a fixed grid.
#[derive(Debug, Clone)]
pub struct LossGenerator {
    spec: LossSpec,
    domain: Arc<GridDomain>,
}

impl LossGenerator {
    pub fn new(spec: LossSpec, domain: Arc<GridDomain>) -> Result<Self> {
        spec.validate(domain.dimension())?;
        Ok(Self { spec, domain })
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    /// Loss for round `t ≥ 1`.
    pub fn generate(&self, t: usize, previous: Option<&Density>) -> Result<DualVector> {
        if t == 0 {
            return Err(param("t", "rounds start at 1"));
        }
        let (lip, m) = (self.spec.lipschitz, self.spec.bound);
        let d = &self.domain;
        let cone = |c: &[f64]| -> Vec<f64> {
            d.centers().map(|s| (lip * euclidean(s, c)).min(m)).collect()
        };
        let values = match &self.spec.family {
            LossFamily::MovingCone { path, dwell } => {
                let c = &path[((t - 1) / dwell) % path.len()];
                cone(c)
            }
            LossFamily::FixedCone { center } => cone(center),
            LossFamily::RandomConeMix { k } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
                rng.set_stream(t as u64);
                let mut acc = vec![0.0; d.len()];
                for _ in 0..*k {
                    let c = d.center(rng.gen_range(0..d.len())).to_vec();
                    for (a, v) in acc.iter_mut().zip(cone(&c)) {
                        *a += v;
                    }
                }
                acc.iter().map(|a| a / *k as f64).collect()
            }
            LossFamily::AdaptiveAdversary => {
                let mode = match previous {
                    Some(x) => {
                        if !Arc::ptr_eq(x.domain(), d) && **x.domain() != **d {
                            return Err(Error::DomainMismatch);
                        }
                        x.argmax()
                    }
                    None => Density::uniform(Arc::clone(d)).argmax(),
                };
                let c = d.center(mode);
                d.centers()
                    .map(|s| (m - lip * euclidean(s, c)).max(0.0))
                    .collect()
            }
        };
        DualVector::new(Arc::clone(d), values)
    }
}

impl LossSource for LossGenerator {
    fn next_loss(&mut self, t: usize, previous: Option<&Density>) -> Result<DualVector> {
        self.generate(t, previous)
    }
}

/// Replays a fixed list of losses; round `t` gets entry `t − 1`.
#[derive(Debug, Clone)]
pub struct FixedSequence(pub Vec<DualVector>);

impl LossSource for FixedSequence {
    fn next_loss(&mut self, t: usize, _previous: Option<&Density>) -> Result<DualVector> {
        self.0
            .get(t.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| param("t", format!("sequence has only {} losses", self.0.len())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredConstants {
    pub l_hat: f64,
    pub m_hat: f64,
}

/// Largest `|ℓᵢ − ℓⱼ| / ‖sᵢ − sⱼ‖` over the given cell pairs.
pub fn empirical_lipschitz(loss: &DualVector, pairs: &[(usize, usize)]) -> f64 {
    let d = loss.domain();
    let v = loss.values();
    pairs
        .iter()
        .map(|&(i, j)| (v[i] - v[j]).abs() / euclidean(d.center(i), d.center(j)))
        .fold(0.0, f64::max)
}

/// Lipschitz constant over adjacent cells and the largest dual norm.
pub fn measure_constants(seq: &[DualVector], dual_exponent: f64) -> Result<MeasuredConstants> {
    let first = seq.first().ok_or_else(|| param("seq", "needs at least one loss"))?;
    let domain = first.domain();
    let pairs = domain.adjacent_pairs();
    let mut out = MeasuredConstants {
        l_hat: 0.0,
        m_hat: 0.0,
    };
    for loss in seq {
        if !Arc::ptr_eq(loss.domain(), domain) && **loss.domain() != **domain {
            return Err(Error::DomainMismatch);
        }
        out.l_hat = out.l_hat.max(empirical_lipschitz(loss, &pairs));
        out.m_hat = out.m_hat.max(lp_norm(loss.values(), dual_exponent, domain));
    }
    Ok(out)
}
