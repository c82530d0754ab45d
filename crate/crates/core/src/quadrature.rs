//! One-dimensional quadrature used for custom potentials.

/// Nodes and weights of the 5-point Gauss–Legendre rule on `[-1, 1]`.
const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// False when some panel hit the recursion limit before meeting the tolerance.
    pub converged: bool,
}

fn gauss5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]`.
///
/// The rule is open, so integrable endpoint singularities (such as `ln u`
/// at zero) are handled without evaluating `f` at the endpoint.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            converged: true,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let whole = gauss5(&f, lo, hi);
    let mut converged = true;
    let value = refine(&f, lo, hi, whole, tol, tol, 0, &mut converged);
    Quadrature {
        value: sign * value,
        converged,
    }
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    root_tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss5(f, a, mid);
    let right = gauss5(f, mid, b);
    let split = left + right;
    if (split - whole).abs() <= tol || !split.is_finite() {
        return split;
    }
    if depth >= MAX_DEPTH {
        // A panel this narrow only matters if its own error is still large.
        if (split - whole).abs() > root_tol {
            *converged = false;
        }
        return split;
    }
    refine(f, a, mid, left, 0.5 * tol, root_tol, depth + 1, converged)
        + refine(f, mid, b, right, 0.5 * tol, root_tol, depth + 1, converged)
}

/// Composite midpoint rule with `n` panels.
pub fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(7) - 3.0 * x, 0.0, 2.0, 1e-12);
        assert!(q.converged);
        assert!((q.value - (32.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn log_singularity() {
        // ∫₀¹ (1 + ln u) du = 0
        let q = integrate(|u: f64| 1.0 + u.ln(), 0.0, 1.0, 1e-10);
        assert!(q.value.abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let q = integrate(|x: f64| x.exp(), 1.0, 0.0, 1e-12);
        assert!((q.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_converges() {
        let coarse = midpoint(|x: f64| x * x, 0.0, 1.0, 10);
        let fine = midpoint(|x: f64| x * x, 0.0, 1.0, 1000);
        assert!((fine - 1.0 / 3.0).abs() < (coarse - 1.0 / 3.0).abs());
    }
}
