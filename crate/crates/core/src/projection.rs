//! The dual-averaging update as a Bregman projection.
//!
//! For an ω-potential regularizer the minimizer of
//! `⟨L, x⟩ + ψ(x)/η` over densities has the closed form
//!
//! ```text
//! x(s) = φ(−η(L(s) + ν*))₊,      Σᵢ wᵢ φ(−η(Lᵢ + ν*))₊ = 1,
//! ```
//!
//! so the update reduces to a scalar root-finding problem in the multiplier
//! `ν*`. The mass `ν ↦ Σ wᵢ φ(−η(Lᵢ + ν))₊` is nonincreasing, and since every
//! cell value lies in `[φ(−η(L_max+ν)), φ(−η(L_min+ν))]` the bracket
//!
//! ```text
//! [−L_max − φ⁻¹(1)/η,  −L_min − φ⁻¹(1)/η]
//! ```
//!
//! always straddles the root for a valid potential.

use std::sync::Arc;

use crate::divergence::{csiszar, pair, Density, DualVector};
use crate::error::{param, Error, Result};
use crate::potential::Potential;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const MAX_DOUBLINGS: usize = 200;
const MAX_BISECTIONS: usize = 1_000_000;
const ORACLE_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub density: Density,
    pub nu_star: f64,
    pub iterations: usize,
    /// `|mass(ν*) − 1|` before the final renormalization.
    pub residual: f64,
}

/// `Σᵢ wᵢ max(φ(−η(Lᵢ + ν)), 0)`; `+∞` once an argument reaches `a`.
pub fn mass(pot: &Potential, losses: &DualVector, eta: f64, nu: f64) -> f64 {
    let a_sup = pot.a_sup();
    let mut total = 0.0;
    for (w, l) in losses.domain().weights().iter().zip(losses.values()) {
        let arg = -eta * (l + nu);
        if arg >= a_sup {
            return f64::INFINITY;
        }
        let v = pot.phi(arg);
        if v > 0.0 {
            total += w * v;
        }
    }
    total
}

/// Solves `x = argmin ⟨L, x⟩ + ψ(x)/η` by bisection on the multiplier.
pub fn project(
    pot: &Potential,
    losses: &DualVector,
    eta: f64,
    tol: f64,
) -> Result<ProjectionResult> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(param("eta", format!("{eta} must be positive and finite")));
    }
    if !(tol > 0.0) {
        return Err(param("tol", format!("{tol} must be positive")));
    }
    let values = losses.values();
    let (l_min, l_max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let shift = pot.phi_inv(1.0) / eta;
    let mass_at = |nu: f64| mass(pot, losses, eta, nu);

    // Invariant: mass(lo) ≥ 1 ≥ mass(hi).
    let mut hi = -l_min - shift;
    let mut lo = -l_max - shift;
    let mut step = 1.0f64.max((l_max - l_min).abs());
    let mut doublings = 0;
    while mass_at(hi) > 1.0 {
        hi += step;
        step *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NoSolution { doublings });
        }
    }
    step = 1.0f64.max((l_max - l_min).abs());
    while mass_at(lo) < 1.0 {
        lo -= step;
        step *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !lo.is_finite() {
            return Err(Error::NoSolution { doublings });
        }
    }

    let mut iterations = 0;
    let (nu_star, m) = loop {
        let mid = 0.5 * (lo + hi);
        let m = mass_at(mid);
        iterations += 1;
        let converged = (hi - lo) <= tol * mid.abs().max(1.0) && (m - 1.0).abs() <= tol;
        if converged {
            break (mid, m);
        }
        if mid <= lo || mid >= hi || iterations >= MAX_BISECTIONS {
            // No representable point strictly inside the bracket remains.
            let best = [(lo, mass_at(lo)), (hi, mass_at(hi)), (mid, m)]
                .into_iter()
                .min_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
                .expect("nonempty");
            if (best.1 - 1.0).abs() <= tol {
                break best;
            }
            return Err(Error::Convergence {
                iterations,
                residual: (best.1 - 1.0).abs(),
            });
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    };

    let values: Vec<f64> = values
        .iter()
        .map(|l| pot.phi(-eta * (l + nu_star)).max(0.0) / m)
        .collect();
    Ok(ProjectionResult {
        density: Density::from_raw(Arc::clone(losses.domain()), values),
        nu_star,
        iterations,
        residual: (m - 1.0).abs(),
    })
}

/// Independent check of [`project`]: minimizes `F(x) = ⟨L, x⟩ + ψ(x)/η`
/// directly over the weighted simplex.
///
/// Each step moves mass between two cells with an exact line search on the
/// exchanged amount. Steps alternate between the pair with the largest
/// second-order predicted decrease and the most violating pair
/// `(argmax g, argmin g)`, where `gᵢ = Lᵢ + f'(xᵢ)/η`. Only `f`, `f'`
/// and `f''` of the potential are used. Intended for small grids (≤ 64 cells).
pub fn oracle_project(pot: &Potential, losses: &DualVector, eta: f64) -> Result<Density> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(param("eta", format!("{eta} must be positive and finite")));
    }
    let domain = Arc::clone(losses.domain());
    let w = domain.weights();
    let l = losses.values();
    let n = w.len();
    let grad = |i: usize, x: f64| l[i] + pot.f_prime(x) / eta;
    let objective = |x: &[f64]| -> f64 {
        (0..n)
            .map(|i| w[i] * (l[i] * x[i] + pot.f(x[i]) / eta))
            .sum()
    };

    let mut x = vec![1.0; n];
    let mut best = (objective(&x), x.clone());
    // Moves the optimal amount of mass from `src` to `dst`; false if none moves.
    let exchange = |x: &mut [f64], (src, dst): (usize, usize)| -> bool {
        let slope = |delta: f64| -> f64 {
            let xs = (x[src] - delta / w[src]).max(0.0);
            let xd = x[dst] + delta / w[dst];
            grad(dst, xd) - grad(src, xs)
        };
        let delta_max = w[src] * x[src];
        let delta = if slope(delta_max) <= 0.0 {
            delta_max
        } else {
            let (mut lo, mut hi) = (0.0, delta_max);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break lo;
                }
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        };
        if delta <= 0.0 {
            return false;
        }
        x[src] = if delta == delta_max {
            0.0
        } else {
            (x[src] - delta / w[src]).max(0.0)
        };
        x[dst] += delta / w[dst];
        true
    };

    for iteration in 0..ORACLE_ITERATIONS {
        let g: Vec<f64> = (0..n).map(|k| grad(k, x[k])).collect();
        // Curvature of F per unit of exchanged mass.
        let h: Vec<f64> = (0..n).map(|k| pot.f_second(x[k]) / (eta * w[k])).collect();
        let Some(top) = (0..n)
            .filter(|&k| x[k] > 0.0)
            .max_by(|&a, &b| g[a].total_cmp(&g[b]))
        else {
            break;
        };
        let bottom = (0..n)
            .min_by(|&a, &b| g[a].total_cmp(&g[b]))
            .expect("nonempty");
        if top == bottom || g[top] - g[bottom] <= 1e-14 * (1.0 + g[top].abs().max(g[bottom].abs())) {
            break;
        }

        let mut pick = (top, bottom);
        if iteration % 2 == 0 {
            let mut gain = 0.0;
            for i in (0..n).filter(|&k| x[k] > 0.0) {
                for j in (0..n).filter(|&k| g[k] < g[i]) {
                    let c = (g[i] - g[j]).powi(2) / (h[i] + h[j]);
                    if c.is_finite() && c > gain {
                        gain = c;
                        pick = (i, j);
                    }
                }
            }
        }
        let mut moved = exchange(&mut x, pick);
        if !moved && pick != (top, bottom) {
            moved = exchange(&mut x, (top, bottom));
        }
        if !moved {
            break;
        }

        let value = objective(&x);
        if value <= best.0 {
            best = (value, x.clone());
        }
    }
    Density::normalized(domain, best.1)
}

/// `ψ*(y) = ⟨y, x*⟩ − ψ(x*)` with `x* = ∇ψ*(y)`.
pub fn conjugate_value(pot: &Potential, y: &DualVector, tol: f64) -> Result<f64> {
    let x = project(pot, &y.scaled(-1.0), 1.0, tol)?.density;
    Ok(pair(y, &x)? - csiszar(pot, &x))
}

/// `ξ(η, L) = −ψ*(−ηL)/η`, the potential whose monotonicity in `η` drives
/// the anytime regret bound.
pub fn xi(pot: &Potential, losses: &DualVector, eta: f64, tol: f64) -> Result<f64> {
    Ok(-conjugate_value(pot, &losses.scaled(-eta), tol)? / eta)
}
