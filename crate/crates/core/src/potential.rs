//! ω-potentials and the Csiszár densities they induce.
//!
//! An ω-potential is an increasing diffeomorphism `φ: (−∞, a) → (ω, ∞)` with
//! `ω ≤ 0`, `φ → ω` at `−∞`, `φ → +∞` at `a`, and `∫₀¹ φ⁻¹(u) du < ∞`. It
//! induces the convex density
//!
//! ```text
//! f_φ(x) = ∫₁ˣ φ⁻¹(u) du,     f_φ(1) = 0,
//! ```
//!
//! whose Csiszár divergence `ψ(x) = ∫ f_φ(x(s)) λ(ds)` is the regularizer of
//! dual averaging. Three families are built in:
//!
//! | family      | φ(u)                    | f_φ(x)                                 | strongly convex w.r.t. |
//! |-------------|-------------------------|----------------------------------------|------------------------|
//! | identity    | u                       | (x² − 1)/2                             | ‖·‖₂, ℓ = 1            |
//! | p-norm      | sign(u)·\|u\|^{1/(p−1)} | (xᵖ − 1)/p                             | ‖·‖_{2/(3−p)}, ℓ = p−1 |
//! | entropy(ω)  | e^{u−1} + ω             | (x−ω)ln(x−ω) − (1−ω)ln(1−ω)            | ‖·‖₁, ℓ = 1/(1−ω)      |
//!
//! Custom potentials supply `φ` and `φ⁻¹`; their `f_φ` is obtained by
//! adaptive quadrature.

use std::fmt;
use std::sync::Arc;

use crate::error::{param, Error, Result};
use crate::quadrature;

/// Default `δ` used as the growth exponent of the entropy certificate.
pub const ENTROPY_GROWTH_EPS: f64 = 0.01;

const CUSTOM_QUAD_TOL: f64 = 1e-10;

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Identity,
    PNorm { p: f64 },
    Entropy { omega: f64 },
    Custom,
}

/// Strong convexity of `ψ_{f_φ}`: modulus `ell` w.r.t. `‖·‖_{primal_exponent}`,
/// whose dual norm is `‖·‖_{dual_exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCertificate {
    pub ell: f64,
    pub primal_exponent: f64,
    pub dual_exponent: f64,
}

impl ConvexityCertificate {
    /// Builds a certificate whose dual index is the conjugate of `primal_exponent`.
    pub fn new(ell: f64, primal_exponent: f64) -> Self {
        Self {
            ell,
            primal_exponent,
            dual_exponent: conjugate_exponent(primal_exponent),
        }
    }
}

/// Growth bound `f_φ(x) ≤ c·x^{1+eps}·(ln x)^{nu_log}` for `x ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCertificate {
    pub c: f64,
    pub eps: f64,
    pub nu_log: f64,
}

impl GrowthCertificate {
    pub fn bound(&self, x: f64) -> f64 {
        let log_factor = if self.nu_log == 0.0 {
            1.0
        } else {
            x.ln().max(0.0).powf(self.nu_log)
        };
        self.c * x.powf(1.0 + self.eps) * log_factor
    }
}

/// Conjugate index `q = p/(p−1)`, with `1 ↔ ∞`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

#[derive(Clone)]
struct CustomMaps {
    phi: ScalarMap,
    phi_inv: ScalarMap,
    twice_differentiable: bool,
    /// `f_φ(0⁺) = −∫₀¹ φ⁻¹`, or `+∞` when the integral diverges.
    f_at_zero: f64,
}

/// An ω-potential together with its certificates. Immutable value object.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    omega: f64,
    a_sup: f64,
    convexity: ConvexityCertificate,
    growth: GrowthCertificate,
    custom: Option<CustomMaps>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("kind", &self.kind)
            .field("omega", &self.omega)
            .field("a_sup", &self.a_sup)
            .field("convexity", &self.convexity)
            .field("growth", &self.growth)
            .finish()
    }
}

impl Potential {
    /// `φ(u) = u`; the Euclidean projection.
    pub fn identity() -> Self {
        Self {
            kind: PotentialKind::Identity,
            omega: f64::NEG_INFINITY,
            a_sup: f64::INFINITY,
            convexity: ConvexityCertificate::new(1.0, 2.0),
            growth: GrowthCertificate {
                c: 1.0,
                eps: 1.0,
                nu_log: 0.0,
            },
            custom: None,
        }
    }

    /// `φ(u) = sign(u)|u|^{1/(p−1)}` for `p ∈ (1, 2]`.
    pub fn p_norm(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(param("p", format!("{p} is outside (1, 2]")));
        }
        Ok(Self {
            kind: PotentialKind::PNorm { p },
            omega: f64::NEG_INFINITY,
            a_sup: f64::INFINITY,
            convexity: ConvexityCertificate {
                ell: p - 1.0,
                primal_exponent: 2.0 / (3.0 - p),
                dual_exponent: 2.0 / (p - 1.0),
            },
            growth: GrowthCertificate {
                c: 1.0 / p,
                eps: p - 1.0,
                nu_log: 0.0,
            },
            custom: None,
        })
    }

    /// `φ(u) = e^{u−1} + ω` for `ω ≤ 0`, with the default growth exponent.
    pub fn entropy(omega: f64) -> Result<Self> {
        Self::entropy_with_growth(omega, ENTROPY_GROWTH_EPS)
    }

    /// Entropy potential whose growth certificate uses exponent `delta`.
    ///
    /// `f_φ(x) ≤ c_ω·x·ln x` with `c_ω = 1 + ln(1−ω)` for `x ≥ 1`, so the
    /// certificate `(c_ω, δ, 1)` holds for every `δ ≥ 0`.
    pub fn entropy_with_growth(omega: f64, delta: f64) -> Result<Self> {
        if !(omega <= 0.0 && omega.is_finite()) {
            return Err(param("omega", format!("{omega} must be finite and ≤ 0")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(param("delta", format!("{delta} must be ≥ 0")));
        }
        Ok(Self {
            kind: PotentialKind::Entropy { omega },
            omega,
            a_sup: f64::INFINITY,
            convexity: ConvexityCertificate::new(1.0 / (1.0 - omega), 1.0),
            growth: GrowthCertificate {
                c: 1.0 + (1.0 - omega).ln(),
                eps: delta,
                nu_log: 1.0,
            },
            custom: None,
        })
    }

    /// A user-supplied potential. `f_φ` is computed by quadrature of `phi_inv`.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        omega: f64,
        a_sup: f64,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        convexity: ConvexityCertificate,
        growth: GrowthCertificate,
        twice_differentiable: bool,
    ) -> Result<Self> {
        if omega > 0.0 || omega.is_nan() {
            return Err(param("omega", format!("{omega} must be ≤ 0")));
        }
        let phi_inv: ScalarMap = Arc::new(phi_inv);
        let integral = {
            let g = Arc::clone(&phi_inv);
            quadrature::integrate(move |u| g(u), 0.0, 1.0, CUSTOM_QUAD_TOL)
        };
        let f_at_zero = if integral.converged && integral.value.is_finite() {
            -integral.value
        } else {
            f64::INFINITY
        };
        Ok(Self {
            kind: PotentialKind::Custom,
            omega,
            a_sup,
            convexity,
            growth,
            custom: Some(CustomMaps {
                phi: Arc::new(phi),
                phi_inv,
                twice_differentiable,
                f_at_zero,
            }),
        })
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Lower limit `ω` of `φ` (`−∞` for the power families).
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Right end `a` of the domain of `φ`.
    pub fn a_sup(&self) -> f64 {
        self.a_sup
    }

    pub fn convexity(&self) -> ConvexityCertificate {
        self.convexity
    }

    pub fn growth(&self) -> GrowthCertificate {
        self.growth
    }

    pub fn is_twice_differentiable(&self) -> bool {
        self.custom
            .as_ref()
            .is_none_or(|c| c.twice_differentiable)
    }

    pub fn name(&self) -> String {
        match self.kind {
            PotentialKind::Identity => "identity".into(),
            PotentialKind::PNorm { p } => format!("pnorm({p})"),
            PotentialKind::Entropy { omega } => format!("entropy({omega})"),
            PotentialKind::Custom => "custom".into(),
        }
    }

    pub fn phi(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => u,
            PotentialKind::PNorm { p } => u.signum() * u.abs().powf(1.0 / (p - 1.0)),
            PotentialKind::Entropy { omega } => (u - 1.0).exp() + omega,
            PotentialKind::Custom => {
                if u >= self.a_sup {
                    f64::INFINITY
                } else {
                    (self.custom_maps().phi)(u)
                }
            }
        }
    }

    pub fn phi_inv(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => x,
            PotentialKind::PNorm { p } => x.signum() * x.abs().powf(p - 1.0),
            PotentialKind::Entropy { omega } => 1.0 + (x - omega).ln(),
            PotentialKind::Custom => (self.custom_maps().phi_inv)(x),
        }
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => 1.0,
            PotentialKind::PNorm { p } => {
                let r = 1.0 / (p - 1.0);
                r * u.abs().powf(r - 1.0)
            }
            PotentialKind::Entropy { .. } => (u - 1.0).exp(),
            PotentialKind::Custom => {
                let h = 1e-6 * u.abs().max(1.0);
                (self.phi(u + h) - self.phi(u - h)) / (2.0 * h)
            }
        }
    }

    /// `f_φ(x)` for `x ≥ 0`; at zero the right limit is returned.
    pub fn f(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => 0.5 * (x * x - 1.0),
            PotentialKind::PNorm { p } => (x.powf(p) - 1.0) / p,
            PotentialKind::Entropy { omega } => xlogx(x - omega) - xlogx(1.0 - omega),
            PotentialKind::Custom => {
                let maps = self.custom_maps();
                if x == 0.0 {
                    return maps.f_at_zero;
                }
                let g = Arc::clone(&maps.phi_inv);
                quadrature::integrate(move |u| g(u), 1.0, x, CUSTOM_QUAD_TOL).value
            }
        }
    }

    /// `f_φ'(x) = φ⁻¹(x)`.
    pub fn f_prime(&self, x: f64) -> f64 {
        self.phi_inv(x)
    }

    /// `f_φ''(x) = (φ⁻¹)'(x) = 1/φ'(φ⁻¹(x))`.
    pub fn f_second(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => 1.0,
            PotentialKind::PNorm { p } => (p - 1.0) * x.powf(p - 2.0),
            PotentialKind::Entropy { omega } => 1.0 / (x - omega),
            PotentialKind::Custom => {
                let h = custom_step(x, 1e-5);
                (self.phi_inv(x + h) - self.phi_inv(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn f_third(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => 0.0,
            PotentialKind::PNorm { p } => (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
            PotentialKind::Entropy { omega } => -1.0 / ((x - omega) * (x - omega)),
            PotentialKind::Custom => {
                let h = custom_step(x, 1e-4);
                (self.phi_inv(x + h) - 2.0 * self.phi_inv(x) + self.phi_inv(x - h)) / (h * h)
            }
        }
    }

    /// Pointwise Bregman term `f(x) − f(y) − f'(y)(x − y)` for `y > 0`.
    pub fn bregman_scalar(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            PotentialKind::Identity => 0.5 * (x - y) * (x - y),
            PotentialKind::Entropy { omega } => {
                let (xs, ys) = (x - omega, y - omega);
                let log_term = if xs == 0.0 { 0.0 } else { xs * (xs / ys).ln() };
                log_term - (x - y)
            }
            _ => self.f(x) - self.f(y) - self.phi_inv(y) * (x - y),
        }
    }

    fn custom_maps(&self) -> &CustomMaps {
        self.custom
            .as_ref()
            .expect("custom potential carries its maps")
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn custom_step(x: f64, rel: f64) -> f64 {
    (rel * x.abs().max(1.0)).min(0.5 * x.abs().max(f64::MIN_POSITIVE))
}

/// One named pass/fail entry of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

/// Checks the defining properties of an ω-potential numerically.
///
/// Meshes smaller than 16 points are enlarged to 16.
pub fn validate_potential(pot: &Potential, mesh_size: usize) -> ValidationReport {
    let m = mesh_size.max(16);
    let mut report = ValidationReport::default();

    report.push(
        "omega",
        pot.omega() <= 0.0,
        format!("omega = {}", pot.omega()),
    );

    // φ strictly increasing on [−8, min(8, a)).
    let u_hi = pot.a_sup().min(8.0);
    let us: Vec<f64> = (0..m)
        .map(|i| -8.0 + (u_hi - 1e-9 + 8.0) * i as f64 / (m - 1) as f64)
        .collect();
    let worst = us
        .windows(2)
        .map(|w| pot.phi(w[1]) - pot.phi(w[0]))
        .fold(f64::INFINITY, f64::min);
    report.push(
        "monotonicity",
        worst > 0.0,
        format!("smallest increment of phi on the mesh: {worst:e}"),
    );

    // φ(φ⁻¹(x)) = x on a mesh of (ω, 100].
    let x_lo = if pot.omega().is_finite() {
        pot.omega() + 1e-3
    } else {
        -10.0
    };
    let inverse_err = (0..m)
        .map(|i| x_lo + (100.0 - x_lo) * i as f64 / (m - 1) as f64)
        .map(|x| (pot.phi(pot.phi_inv(x)) - x).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max);
    report.push(
        "inverse",
        inverse_err <= 1e-9,
        format!("max relative |phi(phi_inv(x)) - x| = {inverse_err:e}"),
    );

    let f1 = pot.f(1.0);
    report.push("f_at_one", f1.abs() <= 1e-12, format!("f(1) = {f1:e}"));

    // ∫₀¹ φ⁻¹ finite: refined midpoint sums stay finite and contract.
    let sums: Vec<f64> = [m, 4 * m, 16 * m, 64 * m]
        .iter()
        .map(|&n| quadrature::midpoint(|u| pot.phi_inv(u), 0.0, 1.0, n))
        .collect();
    let finite = sums.iter().all(|s| s.is_finite());
    let d1 = (sums[1] - sums[0]).abs();
    let d2 = (sums[2] - sums[1]).abs();
    let d3 = (sums[3] - sums[2]).abs();
    let contracting = d2 <= d1 + 1e-12 && d3 <= d2 + 1e-12;
    report.push(
        "integrable_inverse",
        finite && contracting,
        format!("midpoint sums of phi_inv on (0,1]: {sums:?}"),
    );

    let g = pot.growth();
    let violations: Vec<f64> = [1.0, 2.0, 10.0, 1e3, 1e6]
        .into_iter()
        .filter(|&x| pot.f(x) > g.bound(x) * (1.0 + 1e-12) + 1e-12)
        .collect();
    report.push(
        "growth",
        violations.is_empty(),
        format!("growth bound violated at {violations:?}"),
    );

    let c = pot.convexity();
    let conj = inv(c.primal_exponent) + inv(c.dual_exponent);
    report.push(
        "conjugate_exponents",
        (conj - 1.0).abs() <= 1e-12,
        format!("1/p + 1/q = {conj}"),
    );
    report
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Outcome of [`check_pinsker_conditions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerReport {
    pub holds: bool,
    pub first_condition: bool,
    pub second_condition: bool,
    /// `1/(8 φ'(φ⁻¹(1)))`, the modulus against `‖x − y‖₁²`.
    pub tv_constant: f64,
}

/// Evaluates the two sufficient conditions for total-variation strong
/// convexity on `u_mesh`.
///
/// With `w = 1 + f'''(1)/(3 f''(1))` the conditions are, for all `u > 0`,
///
/// ```text
/// (f(u) − f'(1)(u−1))·(1 + (1−w)(u−1)) ≥ f''(1)/2·(u−1)²
/// sgn(u−1)·( f'''(u)/f''(u)·[1 + (1−w)(u−1)] + 3(1−w) ) ≥ 0
/// ```
///
/// and either one holding on the whole mesh suffices.
pub fn check_pinsker_conditions(pot: &Potential, u_mesh: &[f64]) -> Result<PinskerReport> {
    if !pot.is_twice_differentiable() {
        return Err(Error::NotTwiceDifferentiable(
            "the Pinsker conditions need f''' of the density",
        ));
    }
    let f1 = pot.f_prime(1.0);
    let f2 = pot.f_second(1.0);
    let w = 1.0 + pot.f_third(1.0) / (3.0 * f2);
    let k = 1.0 - w;

    let first = u_mesh.iter().filter(|&&u| u > 0.0).all(|&u| {
        let lhs = (pot.f(u) - f1 * (u - 1.0)) * (1.0 + k * (u - 1.0));
        let rhs = 0.5 * f2 * (u - 1.0) * (u - 1.0);
        lhs >= rhs - 1e-12 * rhs.abs().max(1.0)
    });
    let second = u_mesh.iter().filter(|&&u| u > 0.0).all(|&u| {
        let sgn = if u > 1.0 {
            1.0
        } else if u < 1.0 {
            -1.0
        } else {
            0.0
        };
        let val = pot.f_third(u) / pot.f_second(u) * (1.0 + k * (u - 1.0)) + 3.0 * k;
        sgn * val >= -1e-12 * val.abs().max(1.0)
    });

    let tv_constant = 1.0 / (8.0 * pot.phi_prime(pot.phi_inv(1.0)));
    Ok(PinskerReport {
        holds: first || second,
        first_condition: first,
        second_condition: second,
        tv_constant,
    })
}

/// Geometric mesh on `(0, u_max]` with `n` points, dense around zero.
pub fn default_u_mesh(u_max: f64, n: usize) -> Vec<f64> {
    let lo: f64 = 1e-4;
    let n = n.max(2);
    (0..n)
        .map(|i| lo * (u_max / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}
