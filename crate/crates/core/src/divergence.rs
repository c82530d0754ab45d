//! Grid functions, the `L²(S)` pairing, and the divergences built on it.

use std::sync::Arc;

use crate::domain::GridDomain;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Tolerance on `Σ wᵢ xᵢ = 1` accepted by [`Density::new`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Floor applied to reference densities in [`Density::interior`].
pub const INTERIOR_FLOOR: f64 = 1e-9;

fn same_domain(a: &Arc<GridDomain>, b: &Arc<GridDomain>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::DomainMismatch)
    }
}

/// A nonnegative grid function with unit mass: an element of the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl Density {
    /// Validates nonnegativity (values above `−1e−12` are clipped to zero)
    /// and unit mass within [`NORMALIZATION_TOL`].
    pub fn new(domain: Arc<GridDomain>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch);
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(Error::InvalidDensity(format!("value {v} at cell {i}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass = weighted_sum(&domain, &values);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(Self { domain, values })
    }

    /// Rescales nonnegative `values` to unit mass.
    pub fn normalized(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch);
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("negative or non-finite value".into()));
        }
        let mass = weighted_sum(&domain, &values);
        if !(mass > 0.0) {
            return Err(Error::InvalidDensity("zero total mass".into()));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(Self { domain, values })
    }

    /// The density `≡ 1`, minimizer of every ω-potential divergence.
    pub fn uniform(domain: Arc<GridDomain>) -> Self {
        let values = vec![1.0; domain.len()];
        Self { domain, values }
    }

    /// Density concentrated on one cell, `1/wᵢ` there and zero elsewhere.
    pub fn point_mass(domain: Arc<GridDomain>, cell: usize) -> Self {
        let mut values = vec![0.0; domain.len()];
        values[cell] = 1.0 / domain.weight(cell);
        Self { domain, values }
    }

    /// Floors `values` at [`INTERIOR_FLOOR`] and renormalizes, giving a
    /// strictly positive density.
    pub fn interior(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        let floored = values.into_iter().map(|v| v.max(INTERIOR_FLOOR)).collect();
        Self::normalized(domain, floored)
    }

    pub(crate) fn from_raw(domain: Arc<GridDomain>, values: Vec<f64>) -> Self {
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        weighted_sum(&self.domain, &self.values)
    }

    /// `λ({x > 0})`.
    pub fn support_measure(&self) -> f64 {
        self.values
            .iter()
            .zip(self.domain.weights())
            .filter(|(v, _)| **v > 0.0)
            .map(|(_, w)| w)
            .sum()
    }

    /// Fraction of cells where the density is positive.
    pub fn support_fraction(&self) -> f64 {
        self.values.iter().filter(|v| **v > 0.0).count() as f64 / self.values.len() as f64
    }

    /// Index of the largest value, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// `max_i |xᵢ − yᵢ|`.
    pub fn sup_distance(&self, other: &Density) -> Result<f64> {
        same_domain(&self.domain, &other.domain)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A finite grid function on the dual side: a loss, a cumulative loss or a
/// dual point `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl DualVector {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DomainMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter {
                name: "dual vector",
                reason: format!("non-finite value at cell {i}"),
            });
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let values = vec![0.0; domain.len()];
        Self { domain, values }
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> Self {
        let values = vec![c; domain.len()];
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &DualVector) -> Result<()> {
        same_domain(&self.domain, &other.domain)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> DualVector {
        DualVector {
            domain: Arc::clone(&self.domain),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn difference(&self, other: &DualVector) -> Result<DualVector> {
        same_domain(&self.domain, &other.domain)?;
        Ok(DualVector {
            domain: Arc::clone(&self.domain),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `(min value, lowest index attaining it)`.
    pub fn min_with_index(&self) -> (f64, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        (self.values[best], best)
    }
}

fn weighted_sum(domain: &GridDomain, values: &[f64]) -> f64 {
    domain.weights().iter().zip(values).map(|(w, v)| w * v).sum()
}

/// `⟨a, x⟩ = Σᵢ wᵢ aᵢ xᵢ`.
pub fn pair(a: &DualVector, x: &Density) -> Result<f64> {
    same_domain(&a.domain, &x.domain)?;
    Ok(a.domain
        .weights()
        .iter()
        .zip(&a.values)
        .zip(&x.values)
        .map(|((w, a), x)| w * a * x)
        .sum())
}

/// Weighted `Lᵖ` norm `(Σᵢ wᵢ |gᵢ|ᵖ)^{1/p}`; `p = ∞` gives `maxᵢ |gᵢ|`.
pub fn lp_norm(g: &[f64], p: f64, domain: &GridDomain) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p ≥ 1, got {p}");
    assert_eq!(g.len(), domain.len(), "grid function length");
    if p.is_infinite() {
        return g.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return weighted_sum(domain, &g.iter().map(|v| v.abs()).collect::<Vec<_>>());
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = domain
        .weights()
        .iter()
        .zip(g)
        .map(|(w, v)| w * (v.abs() / scale).powf(p))
        .sum();
    scale * sum.powf(1.0 / p)
}

/// `ψ_{f_φ}(x) = Σᵢ wᵢ f_φ(xᵢ)`. May be `+∞` for custom potentials whose
/// density diverges at zero.
pub fn csiszar(pot: &Potential, x: &Density) -> f64 {
    x.domain
        .weights()
        .iter()
        .zip(&x.values)
        .map(|(w, &v)| w * pot.f(v))
        .sum()
}

/// Gradient of `ψ_{f_φ}` at an interior density: `φ⁻¹(yᵢ)` per cell.
pub fn csiszar_gradient(pot: &Potential, y: &Density) -> Result<DualVector> {
    if let Some(cell) = y.values.iter().position(|v| *v <= 0.0) {
        return Err(Error::InteriorPoint { cell });
    }
    Ok(DualVector {
        domain: Arc::clone(&y.domain),
        values: y.values.iter().map(|&v| pot.phi_inv(v)).collect(),
    })
}

/// `D_ψ(x, y) = ψ(x) − ψ(y) − ⟨∇ψ(y), x − y⟩` with `y` strictly positive.
pub fn bregman(pot: &Potential, x: &Density, y: &Density) -> Result<f64> {
    same_domain(&x.domain, &y.domain)?;
    if let Some(cell) = y.values.iter().position(|v| *v <= 0.0) {
        return Err(Error::InteriorPoint { cell });
    }
    Ok(x.domain
        .weights()
        .iter()
        .zip(&x.values)
        .zip(&y.values)
        .map(|((w, &a), &b)| w * pot.bregman_scalar(a, b))
        .sum())
}
