//! Weighted-grid discretization of a compact feasible set.
//!
//! A [`GridDomain`] covers the bounding box of a [`Shape`] with a uniform
//! axis-aligned grid and keeps the cells whose centers fall inside the shape
//! (midpoint rule). Every kept cell carries the same weight, renormalized so
//! the weights sum to one: the grid version of the normalized measure
//! `λ(S) = 1`. Integrals become weighted sums over cells.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divergence::Density;
use crate::error::{param, Error, Result};

/// Relative slack used for closed-set membership tests on cell centers.
const MEMBERSHIP_EPS: f64 = 1e-12;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lo).zip(&self.hi).all(|((&x, &lo), &hi)| {
            let eps = MEMBERSHIP_EPS * (hi - lo).abs().max(1.0);
            x >= lo - eps && x <= hi + eps
        })
    }

    fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(lo, hi)| hi - lo).product()
    }

    fn validate(&self, dim: Option<usize>) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::Domain(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        if let Some(n) = dim {
            if self.lo.len() != n {
                return Err(Error::Domain(format!(
                    "box has dimension {}, expected {n}",
                    self.lo.len()
                )));
            }
        }
        for (lo, hi) in self.lo.iter().zip(&self.hi) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain(format!(
                    "box side [{lo}, {hi}] has no positive length"
                )));
            }
        }
        Ok(())
    }
}

/// Description of the compact set `S ⊂ ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// Union of axis-aligned boxes. Each box serves as the convex witness
    /// set of the points it contains.
    Union {
        boxes: Vec<AxisBox>,
    },
    /// Cells of a coarse bitmap over `[lo, hi]`, row-major with the last axis
    /// fastest; `bits` holds one `'0'`/`'1'` per mask cell.
    Mask {
        lo: Vec<f64>,
        hi: Vec<f64>,
        dims: Vec<usize>,
        bits: String,
    },
    /// Explicit cell list with arbitrary positive weights.
    Cells {
        centers: Vec<Vec<f64>>,
        weights: Vec<f64>,
        cell_size: Vec<f64>,
    },
}

/// Convex subset of `S` that contains a given point.
#[derive(Debug, Clone, PartialEq)]
enum WitnessSet {
    Box(AxisBox),
    Ball { center: Vec<f64>, radius: f64 },
}

impl WitnessSet {
    fn contains(&self, p: &[f64]) -> bool {
        match self {
            WitnessSet::Box(b) => b.contains(p),
            WitnessSet::Ball { center, radius } => {
                euclidean(p, center) <= radius * (1.0 + MEMBERSHIP_EPS) + MEMBERSHIP_EPS
            }
        }
    }
}

impl Shape {
    pub fn tag(&self) -> &'static str {
        match self {
            Shape::Interval { .. } => "interval",
            Shape::Box { .. } => "box",
            Shape::Ball { .. } => "ball",
            Shape::Union { .. } => "union",
            Shape::Mask { .. } => "mask",
            Shape::Cells { .. } => "cells",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            Shape::Box { lo, .. } | Shape::Mask { lo, .. } => lo.len(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Union { boxes } => boxes.first().map_or(0, |b| b.lo.len()),
            Shape::Cells { cell_size, .. } => cell_size.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Interval { lo, hi } => AxisBox::new(vec![*lo], vec![*hi]).validate(None),
            Shape::Box { lo, hi } => AxisBox::new(lo.clone(), hi.clone()).validate(None),
            Shape::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Domain("ball center must be a finite point".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Domain(format!(
                        "ball radius {radius} must be positive"
                    )));
                }
                Ok(())
            }
            Shape::Union { boxes } => {
                let first = boxes
                    .first()
                    .ok_or_else(|| Error::Domain("union needs at least one box".into()))?;
                let n = first.lo.len();
                boxes.iter().try_for_each(|b| b.validate(Some(n)))
            }
            Shape::Mask {
                lo,
                hi,
                dims,
                bits,
            } => {
                AxisBox::new(lo.clone(), hi.clone()).validate(None)?;
                if dims.len() != lo.len() || dims.contains(&0) {
                    return Err(Error::Domain(
                        "mask dims must be positive, one per axis".into(),
                    ));
                }
                let expected: usize = dims.iter().product();
                let count = bits.chars().filter(|c| !c.is_whitespace()).count();
                if count != expected {
                    return Err(Error::Domain(format!(
                        "mask has {count} bits, dims require {expected}"
                    )));
                }
                if bits
                    .chars()
                    .any(|c| !c.is_whitespace() && c != '0' && c != '1')
                {
                    return Err(Error::Domain("mask bits must be '0' or '1'".into()));
                }
                Ok(())
            }
            Shape::Cells {
                centers,
                weights,
                cell_size,
            } => {
                if centers.is_empty() || centers.len() != weights.len() {
                    return Err(Error::Domain(
                        "cell list needs one weight per center".into(),
                    ));
                }
                if cell_size.is_empty() || cell_size.iter().any(|h| !(*h > 0.0)) {
                    return Err(Error::Domain("cell sizes must be positive".into()));
                }
                if centers.iter().any(|c| c.len() != cell_size.len()) {
                    return Err(Error::Domain("cell centers have mixed dimension".into()));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::Domain("cell weights must be positive".into()));
                }
                Ok(())
            }
        }
    }

    fn bounding_box(&self) -> AxisBox {
        match self {
            Shape::Interval { lo, hi } => AxisBox::new(vec![*lo], vec![*hi]),
            Shape::Box { lo, hi } | Shape::Mask { lo, hi, .. } => {
                AxisBox::new(lo.clone(), hi.clone())
            }
            Shape::Ball { center, radius } => AxisBox::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Shape::Union { boxes } => {
                let n = boxes[0].lo.len();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for b in boxes {
                    for k in 0..n {
                        lo[k] = lo[k].min(b.lo[k]);
                        hi[k] = hi[k].max(b.hi[k]);
                    }
                }
                AxisBox::new(lo, hi)
            }
            Shape::Cells {
                centers, cell_size, ..
            } => {
                let n = cell_size.len();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for c in centers {
                    for k in 0..n {
                        lo[k] = lo[k].min(c[k] - cell_size[k] / 2.0);
                        hi[k] = hi[k].max(c[k] + cell_size[k] / 2.0);
                    }
                }
                AxisBox::new(lo, hi)
            }
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Shape::Interval { lo, hi } => AxisBox::new(vec![*lo], vec![*hi]).contains(p),
            Shape::Box { lo, hi } => AxisBox::new(lo.clone(), hi.clone()).contains(p),
            Shape::Ball { center, radius } => WitnessSet::Ball {
                center: center.clone(),
                radius: *radius,
            }
            .contains(p),
            Shape::Union { boxes } => boxes.iter().any(|b| b.contains(p)),
            Shape::Mask {
                lo,
                hi,
                dims,
                bits,
            } => {
                let bits: Vec<bool> = bits
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| c == '1')
                    .collect();
                let mut flat = 0usize;
                for k in 0..dims.len() {
                    let rel = (p[k] - lo[k]) / (hi[k] - lo[k]);
                    if !(-MEMBERSHIP_EPS..=1.0 + MEMBERSHIP_EPS).contains(&rel) {
                        return false;
                    }
                    let idx = ((rel * dims[k] as f64).floor() as usize).min(dims[k] - 1);
                    flat = flat * dims[k] + idx;
                }
                bits[flat]
            }
            Shape::Cells {
                centers, cell_size, ..
            } => centers.iter().any(|c| {
                c.iter()
                    .zip(p)
                    .zip(cell_size)
                    .all(|((c, x), h)| (x - c).abs() <= h / 2.0 * (1.0 + MEMBERSHIP_EPS))
            }),
        }
    }

    /// Uniform fatness parameter declared by the generator.
    ///
    /// Convex shapes are 1-fat. A union of boxes is `v`-fat with `v` the
    /// smallest box volume over the summed volumes (a lower bound when boxes
    /// overlap). Cell lists declare their smallest normalized weight.
    pub fn declared_fatness(&self) -> f64 {
        match self {
            Shape::Interval { .. } | Shape::Box { .. } | Shape::Ball { .. } => 1.0,
            Shape::Union { boxes } => {
                let total: f64 = boxes.iter().map(AxisBox::volume).sum();
                let min = boxes
                    .iter()
                    .map(AxisBox::volume)
                    .fold(f64::INFINITY, f64::min);
                min / total
            }
            Shape::Mask { bits, .. } => {
                let on = bits.chars().filter(|&c| c == '1').count().max(1);
                1.0 / on as f64
            }
            Shape::Cells { weights, .. } => {
                let total: f64 = weights.iter().sum();
                weights.iter().fold(f64::INFINITY, |m, w| m.min(*w)) / total
            }
        }
    }

    fn witness_set(&self, p: &[f64]) -> Result<WitnessSet> {
        match self {
            Shape::Interval { lo, hi } => Ok(WitnessSet::Box(AxisBox::new(vec![*lo], vec![*hi]))),
            Shape::Box { lo, hi } => Ok(WitnessSet::Box(AxisBox::new(lo.clone(), hi.clone()))),
            Shape::Ball { center, radius } => Ok(WitnessSet::Ball {
                center: center.clone(),
                radius: *radius,
            }),
            Shape::Union { boxes } => boxes
                .iter()
                .find(|b| b.contains(p))
                .cloned()
                .map(WitnessSet::Box)
                .ok_or_else(|| Error::Domain("point lies outside every box".into())),
            Shape::Mask { .. } | Shape::Cells { .. } => Err(Error::UnsupportedShape(self.tag())),
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A compact set discretized as weighted cells. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    shape: Shape,
    dimension: usize,
    cell_size: Vec<f64>,
    /// Flat `len × dimension` array of cell centers.
    centers: Vec<f64>,
    weights: Vec<f64>,
    diameter: f64,
    fatness: f64,
}

impl GridDomain {
    /// Discretizes `shape` with `resolution` cells per axis over its bounding box.
    pub fn build(shape: Shape, resolution: usize) -> Result<Self> {
        shape.validate()?;
        if let Shape::Cells { .. } = shape {
            return Self::from_cells(shape);
        }
        if resolution < 2 {
            return Err(param("resolution", format!("{resolution} < 2 cells per axis")));
        }
        let n = shape.dimension();
        let bbox = shape.bounding_box();
        let cell_size: Vec<f64> = (0..n)
            .map(|k| (bbox.hi[k] - bbox.lo[k]) / resolution as f64)
            .collect();

        let total = resolution
            .checked_pow(n as u32)
            .ok_or_else(|| param("resolution", "grid too large"))?;
        let mut centers = Vec::new();
        let mut point = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..n).rev() {
                let i = rem % resolution;
                rem /= resolution;
                point[k] = bbox.lo[k] + (i as f64 + 0.5) * cell_size[k];
            }
            if shape.contains(&point) {
                centers.extend_from_slice(&point);
            }
        }
        let count = centers.len() / n;
        if count == 0 {
            return Err(Error::Domain(format!(
                "no cell center of the {}-per-axis grid lies in the {} shape",
                resolution,
                shape.tag()
            )));
        }
        let weights = vec![1.0 / count as f64; count];
        let fatness = shape.declared_fatness();
        Ok(Self::assemble(shape, n, cell_size, centers, weights, fatness))
    }

    fn from_cells(shape: Shape) -> Result<Self> {
        let Shape::Cells {
            centers,
            weights,
            cell_size,
        } = &shape
        else {
            unreachable!()
        };
        let n = cell_size.len();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let flat: Vec<f64> = centers.iter().flatten().copied().collect();
        let cell_size = cell_size.clone();
        let fatness = shape.declared_fatness();
        Ok(Self::assemble(shape, n, cell_size, flat, weights, fatness))
    }

    /// One-dimensional domain with unit-spaced cells and the given
    /// (unnormalized) weights.
    pub fn weighted_line(weights: &[f64]) -> Result<Self> {
        Self::build(
            Shape::Cells {
                centers: (0..weights.len()).map(|i| vec![i as f64 + 0.5]).collect(),
                weights: weights.to_vec(),
                cell_size: vec![1.0],
            },
            0,
        )
    }

    fn assemble(
        shape: Shape,
        dimension: usize,
        cell_size: Vec<f64>,
        centers: Vec<f64>,
        weights: Vec<f64>,
        fatness: f64,
    ) -> Self {
        let mut domain = Self {
            shape,
            dimension,
            cell_size,
            centers,
            weights,
            diameter: 0.0,
            fatness,
        };
        domain.diameter = domain.compute_diameter();
        domain
    }

    /// Replaces the declared fatness `v` with a (typically more conservative) value.
    pub fn with_fatness(mut self, fatness: f64) -> Result<Self> {
        if !(fatness > 0.0 && fatness <= 1.0) {
            return Err(param("fatness", format!("{fatness} is outside (0, 1]")));
        }
        self.fatness = fatness;
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.centers[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.chunks_exact(self.dimension)
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    /// Euclidean length of a cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        self.cell_size.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    /// Over-approximation of `D(S)`: the largest center-to-center distance
    /// plus one cell diagonal.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn fatness(&self) -> f64 {
        self.fatness
    }

    fn compute_diameter(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.len() {
            let a = self.center(i);
            for j in (i + 1)..self.len() {
                let d2: f64 = a
                    .iter()
                    .zip(self.center(j))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                max = max.max(d2);
            }
        }
        max.sqrt() + self.cell_diagonal()
    }

    /// Pairs of cells that are neighbours along one grid axis.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let bbox = self.shape.bounding_box();
        let key = |i: usize| -> Vec<i64> {
            self.center(i)
                .iter()
                .enumerate()
                .map(|(k, c)| ((c - bbox.lo[k]) / self.cell_size[k] - 0.5).round() as i64)
                .collect()
        };
        let index: HashMap<Vec<i64>, usize> = (0..self.len()).map(|i| (key(i), i)).collect();
        let mut pairs = Vec::new();
        for i in 0..self.len() {
            let base = key(i);
            for k in 0..self.dimension {
                let mut next = base.clone();
                next[k] += 1;
                if let Some(&j) = index.get(&next) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Index of the cell containing `p` (nearest center), if `p` lies in a cell.
    pub fn locate(&self, p: &[f64]) -> Option<usize> {
        (0..self.len()).find(|&i| {
            self.center(i)
                .iter()
                .zip(p)
                .zip(&self.cell_size)
                .all(|((c, x), h)| (x - c).abs() <= h / 2.0 * (1.0 + MEMBERSHIP_EPS))
        })
    }
}

/// Uniform density over the homothetic image `{d(s − s*) + s* : s ∈ K_{s*}}`
/// of the convex witness set of cell `point_index`, restricted to grid cells.
///
/// The support always contains the cell of `s*` itself, so the result is a
/// valid density even when the image is thinner than one cell.
pub fn fatness_witness(domain: &Arc<GridDomain>, point_index: usize, d: f64) -> Result<Density> {
    if point_index >= domain.len() {
        return Err(param(
            "point_index",
            format!("{point_index} out of range for {} cells", domain.len()),
        ));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(param("d", format!("homothety ratio {d} outside (0, 1]")));
    }
    let anchor = domain.center(point_index).to_vec();
    let witness = domain.shape().witness_set(&anchor)?;
    let mut preimage = vec![0.0; domain.dimension()];
    let support: Vec<bool> = (0..domain.len())
        .map(|i| {
            if i == point_index {
                return true;
            }
            for (k, (c, a)) in domain.center(i).iter().zip(&anchor).enumerate() {
                preimage[k] = a + (c - a) / d;
            }
            witness.contains(&preimage)
        })
        .collect();
    let mass: f64 = support
        .iter()
        .zip(domain.weights())
        .filter(|(s, _)| **s)
        .map(|(_, w)| w)
        .sum();
    let values = support
        .iter()
        .map(|&s| if s { 1.0 / mass } else { 0.0 })
        .collect();
    Density::new(Arc::clone(domain), values)
}
