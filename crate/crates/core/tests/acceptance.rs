//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use dualavg_core::potential::default_u_mesh;
use dualavg_core::{
    bregman, check_pinsker_conditions, conjugate_value, lp_norm, oracle_project, project, run,
    xi, AxisBox, Density, DualVector, GridDomain, LossFamily, LossGenerator, LossSpec, Potential,
    RegretTrace, Schedule, Shape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CELLS: usize = 512;
const HORIZON: usize = 10_000;
const TOL: f64 = 1e-10;
const FIT_WINDOW: (f64, f64) = (100.0, 10_000.0);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Run {
    trace: RegretTrace,
    potential: Potential,
    seconds: f64,
}

fn unit_interval() -> Arc<GridDomain> {
    Arc::new(GridDomain::build(Shape::Interval { lo: 0.0, hi: 1.0 }, CELLS).unwrap())
}

fn two_intervals() -> Arc<GridDomain> {
    let shape = Shape::Union {
        boxes: vec![
            AxisBox::new(vec![0.0], vec![0.25]),
            AxisBox::new(vec![0.75], vec![1.0]),
        ],
    };
    Arc::new(
        GridDomain::build(shape, CELLS)
            .unwrap()
            .with_fatness(0.25)
            .unwrap(),
    )
}

fn alternating_cones() -> LossFamily {
    LossFamily::MovingCone {
        path: vec![vec![0.0], vec![1.0]],
        dwell: 1,
    }
}

fn hedge_schedule() -> Schedule {
    Schedule::shifted_log_power(1.0, 0.5, 1.0).unwrap()
}

fn execute(domain: Arc<GridDomain>, potential: Potential, schedule: Schedule, family: LossFamily) -> Run {
    let spec = LossSpec {
        family,
        lipschitz: 1.0,
        bound: 1.0,
        seed: 2024,
    };
    let mut source = LossGenerator::new(spec, Arc::clone(&domain)).unwrap();
    let start = Instant::now();
    let trace = run(&domain, &potential, &schedule, &mut source, HORIZON, TOL).unwrap();
    Run {
        trace,
        potential,
        seconds: start.elapsed().as_secs_f64(),
    }
}

macro_rules! cached_run {
    ($name:ident, $body:expr) => {
        fn $name() -> &'static Run {
            static CELL: OnceLock<Run> = OnceLock::new();
            CELL.get_or_init(|| $body)
        }
    };
}

cached_run!(hedge_run, execute(unit_interval(), Potential::entropy(0.0).unwrap(), hedge_schedule(), alternating_cones()));
cached_run!(pnorm_run, execute(unit_interval(), Potential::p_norm(1.5).unwrap(), Schedule::power(1.0, 0.4).unwrap(), alternating_cones()));
cached_run!(fat_run, execute(two_intervals(), Potential::entropy(0.0).unwrap(), hedge_schedule(), LossFamily::AdaptiveAdversary));
cached_run!(convex_adversary_run, execute(unit_interval(), Potential::entropy(0.0).unwrap(), hedge_schedule(), LossFamily::AdaptiveAdversary));
cached_run!(log_power_run, execute(unit_interval(), Potential::entropy(0.0).unwrap(), Schedule::log_power(1.0, 0.5, 1.0).unwrap(), alternating_cones()));

fn domination(run: &Run) -> (bool, String) {
    let v = run.trace.bound_violations();
    let t = run.trace.len();
    let detail = format!(
        "{} violations; per_round(T) = {:.4e} vs bound {:.4e}; L_hat = {:.4}, M_hat = {:.4}; {:.1} s",
        v.len(),
        run.trace.per_round[t - 1],
        run.trace.bound_rhs[t - 1],
        run.trace.l_hat,
        run.trace.m_hat,
        run.seconds
    );
    (v.is_empty(), detail)
}

fn builtins() -> Vec<Potential> {
    vec![
        Potential::identity(),
        Potential::p_norm(1.25).unwrap(),
        Potential::p_norm(1.5).unwrap(),
        Potential::entropy(0.0).unwrap(),
        Potential::entropy(-1.0).unwrap(),
    ]
}

fn random_line(rng: &mut ChaCha8Rng, cells: usize) -> Arc<GridDomain> {
    let weights: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.2..2.0)).collect();
    Arc::new(GridDomain::weighted_line(&weights).unwrap())
}

fn random_dual(rng: &mut ChaCha8Rng, d: &Arc<GridDomain>, scale: f64) -> DualVector {
    let v = (0..d.len()).map(|_| rng.gen_range(-scale..scale)).collect();
    DualVector::new(Arc::clone(d), v).unwrap()
}

fn random_interior(rng: &mut ChaCha8Rng, d: &Arc<GridDomain>) -> Density {
    let spread = rng.gen_range(0.1..3.0);
    let v = (0..d.len()).map(|_| (spread * rng.gen_range(-1.0..1.0f64)).exp()).collect();
    Density::normalized(Arc::clone(d), v).unwrap()
}

fn c1_hedge_rate() -> Outcome {
    let run = hedge_run();
    let (dominated, detail) = domination(run);
    let slope = run.trace.fit(FIT_WINDOW).unwrap();
    let in_range = (-0.65..=-0.30).contains(&slope);
    Outcome::new(
        dominated && in_range && run.seconds <= 60.0,
        format!("slope {slope:.4} (want [-0.65, -0.30]); {detail}"),
    )
}

fn c2_pnorm_rate() -> Outcome {
    let run = pnorm_run();
    let (dominated, detail) = domination(run);
    let slope = run.trace.fit(FIT_WINDOW).unwrap();
    Outcome::new(
        dominated && slope <= -0.25,
        format!("slope {slope:.4} (want <= -0.25); {detail}"),
    )
}

fn c3_fat_set() -> Outcome {
    let fat = fat_run();
    let convex = convex_adversary_run();
    let (dominated, detail) = domination(fat);
    let t = HORIZON - 1;
    let ratio = fat.trace.per_round[t] / convex.trace.per_round[t];
    Outcome::new(
        dominated && (0.5..=2.0).contains(&ratio),
        format!("per_round ratio vs convex interval {ratio:.4} (want [0.5, 2]); {detail}"),
    )
}

fn c4_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let cells = rng.gen_range(2..=16);
        let d = random_line(&mut rng, cells);
        let l = DualVector::new(Arc::clone(&d), (0..cells).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
        for pot in builtins() {
            for eta in [0.1, 1.0, 10.0] {
                let fast = project(&pot, &l, eta, 1e-12).unwrap().density;
                let slow = oracle_project(&pot, &l, eta).unwrap();
                let gap = fast.sup_distance(&slow).unwrap();
                worst = worst.max(gap);
                if gap > 1e-5 {
                    failures += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        failures == 0 && secs <= 120.0,
        format!("1500 comparisons, {failures} above 1e-5, max sup distance {worst:.3e}; {secs:.1} s"),
    )
}

fn c5_hedge_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pot = Potential::entropy(0.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let cells = rng.gen_range(2..=64);
        let d = random_line(&mut rng, cells);
        let l = random_dual(&mut rng, &d, 5.0);
        let eta = rng.gen_range(0.05..20.0);
        let x = project(&pot, &l, eta, 1e-13).unwrap().density;
        // e^{−ηL}/Z with the exponent shifted by its maximum.
        let shift = l.values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let raw: Vec<f64> = l.values().iter().map(|v| (-eta * (v - shift)).exp()).collect();
        let z: f64 = d.weights().iter().zip(&raw).map(|(w, r)| w * r).sum();
        let expected = Density::new(Arc::clone(&d), raw.iter().map(|r| r / z).collect()).unwrap();
        worst = worst.max(x.sup_distance(&expected).unwrap());
    }
    Outcome::new(worst <= 1e-10, format!("max sup distance {worst:.3e} over 100 instances"))
}

fn c6_strong_convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = random_line(&mut rng, 64);
    let mesh = default_u_mesh(1e4, 4000);
    let pinsker: Vec<(Potential, f64)> = builtins()
        .into_iter()
        .filter_map(|p| {
            let r = check_pinsker_conditions(&p, &mesh).ok()?;
            r.holds.then_some((p, r.tv_constant))
        })
        .collect();
    let p_norms = [1.25, 1.5, 2.0];
    let omegas = [0.0, -1.0];
    let mut violations = 0;
    let mut checks = 0;
    let mut check = |lhs: f64, rhs: f64| {
        checks += 1;
        if lhs - rhs < -1e-9 {
            violations += 1;
        }
    };
    for _ in 0..1000 {
        let x = random_interior(&mut rng, &d);
        let y = random_interior(&mut rng, &d);
        let diff: Vec<f64> = x.values().iter().zip(y.values()).map(|(a, b)| a - b).collect();
        let l1 = lp_norm(&diff, 1.0, &d);
        for p in p_norms {
            let pot = Potential::p_norm(p).unwrap();
            let norm = lp_norm(&diff, 2.0 / (3.0 - p), &d);
            check(bregman(&pot, &x, &y).unwrap(), 0.5 * (p - 1.0) * norm * norm);
        }
        for omega in omegas {
            let pot = Potential::entropy(omega).unwrap();
            check(bregman(&pot, &x, &y).unwrap(), l1 * l1 / (2.0 * (1.0 - omega)));
        }
        for (pot, c) in &pinsker {
            check(bregman(pot, &x, &y).unwrap(), c * l1 * l1);
        }
    }
    Outcome::new(
        violations == 0 && pinsker.len() == builtins().len(),
        format!(
            "{checks} inequality checks, {violations} violations; Pinsker conditions hold for {}/{} built-ins",
            pinsker.len(),
            builtins().len()
        ),
    )
}

fn c7_smoothness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = random_line(&mut rng, 32);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for pot in builtins() {
        let cert = pot.convexity();
        for _ in 0..200 {
            let scale = rng.gen_range(0.1..5.0);
            let y1 = random_dual(&mut rng, &d, scale);
            let y2 = random_dual(&mut rng, &d, scale);
            let x1 = project(&pot, &y1.scaled(-1.0), 1.0, 1e-13).unwrap().density;
            let x2 = project(&pot, &y2.scaled(-1.0), 1.0, 1e-13).unwrap().density;
            let dy = y2.difference(&y1).unwrap();
            let dx: Vec<f64> = x2.values().iter().zip(x1.values()).map(|(a, b)| a - b).collect();
            let dual = lp_norm(dy.values(), cert.dual_exponent, &d);
            let primal = lp_norm(&dx, cert.primal_exponent, &d);
            // Lipschitz gradient of ψ*, then the smoothness bound on D_{ψ*}.
            let gap1 = primal - dual / cert.ell;
            let c1 = conjugate_value(&pot, &y1, 1e-13).unwrap();
            let c2 = conjugate_value(&pot, &y2, 1e-13).unwrap();
            let lin: f64 = d
                .weights()
                .iter()
                .zip(dy.values())
                .zip(x1.values())
                .map(|((w, a), b)| w * a * b)
                .sum();
            let gap2 = (c2 - c1 - lin) - dual * dual / (2.0 * cert.ell);
            for gap in [gap1, gap2] {
                worst = worst.max(gap);
                if gap > 1e-8 {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("1000 dual pairs, {violations} violations, max excess {worst:.3e}"),
    )
}

fn c8_lemma1() -> Outcome {
    let runs = [
        ("hedge", hedge_run()),
        ("p-norm", pnorm_run()),
        ("fat set", fat_run()),
        ("convex adversary", convex_adversary_run()),
        ("log-power", log_power_run()),
    ];
    let mut total = 0;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let ell = r.potential.convexity().ell;
        let v = r.trace.uniform_bound_violations(r.trace.m_hat, ell, 1e-9).len();
        total += v;
        parts.push(format!("{name}: {v}"));
    }
    Outcome::new(total == 0, format!("violations per run: {}", parts.join(", ")))
}

fn c9_xi_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_line(&mut rng, 32);
    let etas: Vec<f64> = (0..20).map(|k| 0.05 * 1.35f64.powi(k)).collect();
    let mut violations = 0;
    let mut checks = 0;
    for pot in builtins() {
        for _ in 0..20 {
            let l = random_dual(&mut rng, &d, 3.0);
            let values: Vec<f64> = etas.iter().map(|&e| xi(&pot, &l, e, 1e-13).unwrap()).collect();
            for w in values.windows(2) {
                checks += 1;
                if w[1] > w[0] + 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    Outcome::new(violations == 0, format!("{checks} consecutive pairs, {violations} increases"))
}

fn c10_log_power() -> Outcome {
    let (dominated, detail) = domination(log_power_run());
    Outcome::new(dominated, detail)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 hedge rate", c1_hedge_rate),
        ("2 p-norm rate", c2_pnorm_rate),
        ("3 non-convex fat set", c3_fat_set),
        ("4 projection oracle equivalence", c4_oracle_equivalence),
        ("5 hedge closed form", c5_hedge_closed_form),
        ("6 strong convexity", c6_strong_convexity),
        ("7 smoothness duality", c7_smoothness),
        ("8 uniform-comparator anytime bound", c8_lemma1),
        ("9 xi monotonicity", c9_xi_monotone),
        ("10 log-corrected schedule", c10_log_power),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
