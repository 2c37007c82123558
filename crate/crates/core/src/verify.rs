//! Seeded randomized verification of the library's structural invariants.
//!
//! Each check draws a handful of random grids, kernels and coefficient
//! fields from a deterministic generator and asserts a property that must
//! hold regardless of the draw: quadrature masses, order preservation,
//! spectral identities, orbit certificates. The same seed always produces
//! the same report, so a failure is reproducible by seed alone.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    assemble_dispersal, build_grid, build_kernel, DispersalOperator, Grid, KernelProfile, Regime,
};
use crate::dynamics::{comparison_test, integrate, IntegrateOptions, SystemSpec};
use crate::fields::{CoefficientField, FieldKind, StateField};
use crate::periodic::{solve_scalar_periodic, ScalarSolveOptions};
use crate::spectral::{principal_spectrum_point, SpectralOptions};

/// One named invariant check.
#[derive(Debug, Clone)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of the full suite.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<VerifyCheck>,
    pub passed: bool,
}

struct Draw {
    op: Arc<DispersalOperator<f64>>,
    period: f64,
}

fn random_regime(rng: &mut ChaCha8Rng) -> Regime {
    match rng.gen_range(0..3) {
        0 => Regime::DirichletType,
        1 => Regime::NeumannType,
        _ => Regime::Periodic,
    }
}

fn random_operator(rng: &mut ChaCha8Rng) -> Draw {
    let regime = random_regime(rng);
    let n = rng.gen_range(10..24usize);
    let extent: f64 = rng.gen_range(1.5..2.5);
    let grid = Arc::new(build_grid(1, vec![extent], vec![n], regime).unwrap());
    let spacing = grid.spacing()[0];
    let radius = (spacing * rng.gen_range(1.5..3.0)).min(0.45 * extent);
    let profile = if rng.gen_bool(0.5) {
        KernelProfile::SmoothBump
    } else {
        KernelProfile::Cosine
    };
    let kernel = Arc::new(build_kernel(&grid, radius, profile).unwrap());
    let op = Arc::new(assemble_dispersal(&grid, &kernel).unwrap());
    let period = rng.gen_range(0.5..2.0);
    Draw { op, period }
}

/// Random smooth space-time field `base + at sin(2 pi t/T + p) + ax cos(pi x/L)`,
/// with amplitudes small enough to keep the field above `floor`.
fn random_field(
    rng: &mut ChaCha8Rng,
    grid: &Grid<f64>,
    period: f64,
    base: f64,
    floor: f64,
) -> CoefficientField<f64> {
    let headroom = (base - floor).max(0.0);
    let at = rng.gen_range(0.0..0.45 * headroom.max(1e-9));
    let ax = rng.gen_range(0.0..0.45 * headroom.max(1e-9));
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let half_len = grid.extents()[0] / 2.0;
    CoefficientField::from_closure(period, FieldKind::General, move |t, _node, coord| {
        base + at * (std::f64::consts::TAU * t / period + phase).sin()
            + ax * (std::f64::consts::PI * coord[0] / half_len).cos()
    })
}

fn random_system(rng: &mut ChaCha8Rng, draw: &Draw) -> SystemSpec<f64> {
    let grid = draw.op.grid();
    let t = draw.period;
    let bases: Vec<f64> = [
        (0.8, 1.4),
        (0.8, 1.4),
        (0.8, 1.2),
        (0.4, 0.7),
        (0.4, 0.7),
        (0.8, 1.2),
    ]
    .iter()
    .map(|&(lo, hi)| rng.gen_range(lo..hi))
    .collect();
    let a1 = random_field(rng, grid, t, bases[0], 0.2);
    let a2 = random_field(rng, grid, t, bases[1], 0.2);
    let b1 = random_field(rng, grid, t, bases[2], 0.3);
    let b2 = random_field(rng, grid, t, bases[3], 0.2);
    let c1 = random_field(rng, grid, t, bases[4], 0.2);
    let c2 = random_field(rng, grid, t, bases[5], 0.3);
    let nu1 = rng.gen_range(0.3..1.2);
    let nu2 = rng.gen_range(0.3..1.2);
    SystemSpec::new(
        Arc::clone(&draw.op),
        nu1,
        nu2,
        t,
        a1,
        a2,
        b1,
        b2,
        c1,
        c2,
    )
    .unwrap()
}

fn random_nonneg_state(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..scale)).collect()
}

fn fast_spectral() -> SpectralOptions<f64> {
    SpectralOptions {
        steps_per_period: 400,
        ..SpectralOptions::default()
    }
}

/// Runs the whole suite with `trials` random draws per check.
pub fn run_verification(seed: u64, trials: usize) -> VerifyReport {
    let trials = trials.max(1);
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    checks.push(check_operator_structure(&mut rng, trials));
    checks.push(check_kernel_symmetry(&mut rng, trials));
    checks.push(check_nonnegativity(&mut rng, trials));
    checks.push(check_order_preservation(&mut rng, trials));
    checks.push(check_zero_point(&mut rng, trials));
    checks.push(check_shift_identity(&mut rng, trials));
    checks.push(check_monotone_in_coefficient(&mut rng, trials));
    checks.push(check_rate_scaling(&mut rng, trials));
    checks.push(check_orbit_certificate(&mut rng, trials));
    checks.push(check_planar_bracketing(&mut rng, trials));

    let passed = checks.iter().all(|c| c.passed);
    VerifyReport {
        seed,
        trials,
        checks,
        passed,
    }
}

/// Row structure of the assembled operator: off-diagonal nonnegativity
/// everywhere; constants annihilated (no-flux, wrapped) or strictly lost
/// (absorbing).
fn check_operator_structure(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    let mut passed = true;
    for _ in 0..trials * 3 {
        let draw = random_operator(rng);
        let op = &draw.op;
        let n = op.len();
        let ones = vec![1.0; n];
        let mut out = vec![0.0; n];
        op.apply(&ones, &mut out);
        for i in 0..n {
            for j in 0..n {
                if i != j && op.matrix().get(i, j) < 0.0 {
                    passed = false;
                    detail = format!("negative off-diagonal at ({i},{j})");
                }
            }
            match op.regime() {
                Regime::NeumannType | Regime::Periodic => {
                    worst = worst.max(out[i].abs());
                    if out[i].abs() > 1e-12 {
                        passed = false;
                        detail = format!("constant not annihilated: row {i} gives {}", out[i]);
                    }
                }
                Regime::DirichletType => {
                    if out[i] > 1e-12 {
                        passed = false;
                        detail = format!("absorbing row {i} has positive sum {}", out[i]);
                    }
                }
            }
        }
    }
    VerifyCheck {
        name: "operator-row-structure",
        passed,
        detail: if passed {
            format!("worst constant residual {worst:.2e}")
        } else {
            detail
        },
    }
}

fn check_kernel_symmetry(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    for _ in 0..trials * 3 {
        let draw = random_operator(rng);
        let op = &draw.op;
        let kernel = op.kernel();
        let n = op.len();
        for i in 0..n {
            for j in 0..n {
                let kij = kernel.value_between(i, j);
                let kji = kernel.value_between(j, i);
                if kij != kji {
                    passed = false;
                    detail = format!("kernel asymmetry at ({i},{j}): {kij} vs {kji}");
                }
                if kij < 0.0 {
                    passed = false;
                    detail = format!("negative kernel value at ({i},{j})");
                }
            }
        }
    }
    VerifyCheck {
        name: "kernel-symmetry",
        passed,
        detail: if passed {
            "bitwise symmetric, nonnegative".to_string()
        } else {
            detail
        },
    }
}

fn check_nonnegativity(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    for _ in 0..trials {
        let draw = random_operator(rng);
        let spec = random_system(rng, &draw);
        let n = spec.grid().len();
        let initial = StateField::new(
            0.0,
            random_nonneg_state(rng, n, 1.5),
            random_nonneg_state(rng, n, 1.5),
        );
        let dt = draw.period / 400.0;
        match integrate(
            &spec,
            &initial,
            0.0,
            2.0 * draw.period,
            IntegrateOptions::new(dt),
        ) {
            Ok(traj) => {
                let min = traj
                    .states()
                    .iter()
                    .map(|s| s.min_component())
                    .fold(f64::INFINITY, f64::min);
                if min < 0.0 {
                    passed = false;
                    detail = format!("negative component {min}");
                }
            }
            Err(e) => {
                passed = false;
                detail = format!("integration failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "nonnegativity-preserved",
        passed,
        detail: if passed {
            "no negative components after clamping".to_string()
        } else {
            detail
        },
    }
}

fn check_order_preservation(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..trials {
        let draw = random_operator(rng);
        let spec = random_system(rng, &draw);
        let n = spec.grid().len();
        // Build an ordered pair: (u, v+gap) <=2 (u+gap, v).
        let u = random_nonneg_state(rng, n, 1.0);
        let v = random_nonneg_state(rng, n, 1.0);
        let gap = rng.gen_range(0.05..0.3);
        let lo = StateField::new(0.0, u.clone(), v.iter().map(|x| x + gap).collect());
        let hi = StateField::new(0.0, u.iter().map(|x| x + gap).collect(), v);
        let dt = draw.period / 400.0;
        match comparison_test(&spec, &lo, &hi, 2.0 * draw.period, 8, dt, 1e-10) {
            Ok(rep) => {
                worst = worst.max(rep.worst_violation);
                if !rep.preserved {
                    passed = false;
                    detail = format!(
                        "order lost at t = {:?} (violation {})",
                        rep.first_failure_time, rep.worst_violation
                    );
                }
            }
            Err(e) => {
                passed = false;
                detail = format!("comparison run failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "competitive-order-preserved",
        passed,
        detail: if passed {
            format!("worst violation {worst:.2e}")
        } else {
            detail
        },
    }
}

/// No-flux and wrapped regimes have spectrum point exactly zero for l = 0.
fn check_zero_point(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for _ in 0..trials * 2 {
        let mut draw = random_operator(rng);
        // Force a conservative regime.
        while draw.op.regime() == Regime::DirichletType {
            draw = random_operator(rng);
        }
        let nu = rng.gen_range(0.3..1.5);
        let zero = CoefficientField::constant(draw.period, 0.0);
        match principal_spectrum_point(&draw.op, nu, &zero, fast_spectral()) {
            Ok(r) => {
                worst = worst.max(r.lambda.abs());
                if r.lambda.abs() > 1e-10 {
                    passed = false;
                    detail = format!(
                        "{} regime: |lambda| = {:.2e}",
                        draw.op.regime().name(),
                        r.lambda.abs()
                    );
                }
            }
            Err(e) => {
                passed = false;
                detail = format!("spectral solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "conservative-zero-point",
        passed,
        detail: if passed {
            format!("worst |lambda| {worst:.2e}")
        } else {
            detail
        },
    }
}

fn check_shift_identity(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let draw = random_operator(rng);
        let nu = rng.gen_range(0.3..1.5);
        let l = random_field(rng, draw.op.grid(), draw.period, 0.5, -0.5);
        let shift = rng.gen_range(-0.5..0.8);
        let shifted = {
            let l = l.clone();
            CoefficientField::from_closure(draw.period, FieldKind::General, move |t, node, c| {
                l.value(t, node, c) + shift
            })
        };
        let base = principal_spectrum_point(&draw.op, nu, &l, fast_spectral());
        let moved = principal_spectrum_point(&draw.op, nu, &shifted, fast_spectral());
        match (base, moved) {
            (Ok(a), Ok(b)) => {
                let err = (b.lambda - a.lambda - shift).abs();
                worst = worst.max(err);
                if err > 1e-8 {
                    passed = false;
                    detail = format!("shift residual {err:.2e} (shift {shift:+.3})");
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                detail = format!("spectral solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "spectral-shift-identity",
        passed,
        detail: if passed {
            format!("worst residual {worst:.2e}")
        } else {
            detail
        },
    }
}

fn check_monotone_in_coefficient(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    for _ in 0..trials {
        let draw = random_operator(rng);
        let nu = rng.gen_range(0.3..1.5);
        let l = random_field(rng, draw.op.grid(), draw.period, 0.4, -0.4);
        let bump = rng.gen_range(0.01..0.2);
        let period = draw.period;
        let bumped = {
            let l = l.clone();
            let half_len = draw.op.grid().extents()[0] / 2.0;
            CoefficientField::from_closure(period, FieldKind::General, move |t, node, c| {
                l.value(t, node, c)
                    + bump * (1.0 + (std::f64::consts::PI * c[0] / half_len).sin() / 2.0)
            })
        };
        let a = principal_spectrum_point(&draw.op, nu, &l, fast_spectral());
        let b = principal_spectrum_point(&draw.op, nu, &bumped, fast_spectral());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                if b.lambda < a.lambda + 1e-12 {
                    passed = false;
                    detail = format!(
                        "bumped point {:.6} did not exceed base {:.6}",
                        b.lambda, a.lambda
                    );
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                detail = format!("spectral solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "spectral-monotonicity",
        passed,
        detail: if passed {
            "strictly increasing under positive bumps".to_string()
        } else {
            detail
        },
    }
}

/// With l = 0 the generator is nu * A, so the point scales linearly in nu.
fn check_rate_scaling(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut draw = random_operator(rng);
        while draw.op.regime() != Regime::DirichletType {
            draw = random_operator(rng);
        }
        let nu = rng.gen_range(0.3..1.0);
        let factor = rng.gen_range(1.5..3.0);
        let zero = CoefficientField::constant(draw.period, 0.0);
        let a = principal_spectrum_point(&draw.op, nu, &zero, fast_spectral());
        let b = principal_spectrum_point(&draw.op, nu * factor, &zero, fast_spectral());
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let err = (b.lambda - factor * a.lambda).abs();
                worst = worst.max(err);
                if err > 1e-8 || a.lambda >= 0.0 {
                    passed = false;
                    detail = format!("scaling residual {err:.2e}, base {:.6}", a.lambda);
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                detail = format!("spectral solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "rate-scaling-absorbing",
        passed,
        detail: if passed {
            format!("worst residual {worst:.2e}")
        } else {
            detail
        },
    }
}

/// A converged scalar orbit is a positive eigenfunction of its own
/// linearization: the spectrum point there must vanish.
fn check_orbit_certificate(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        // No-flux keeps the growth supercritical for sure.
        let draw = loop {
            let d = random_operator(rng);
            if d.op.regime() != Regime::DirichletType {
                break d;
            }
        };
        let nu = rng.gen_range(0.3..1.0);
        let a = random_field(rng, draw.op.grid(), draw.period, 1.0, 0.4);
        let b = random_field(rng, draw.op.grid(), draw.period, 0.8, 0.3);
        let opts = ScalarSolveOptions {
            steps_per_period: 500,
            tol: 1e-10,
            ..ScalarSolveOptions::default()
        };
        match solve_scalar_periodic(&draw.op, nu, &a, &b, opts) {
            Ok(orbit) => match orbit.zero_certificate(fast_spectral()) {
                Ok(cert) => {
                    worst = worst.max(cert.lambda.abs());
                    if cert.lambda.abs() > 1e-5 {
                        passed = false;
                        detail = format!("certificate {:.2e} not zero", cert.lambda);
                    }
                }
                Err(e) => {
                    passed = false;
                    detail = format!("certificate solve failed: {e}");
                }
            },
            Err(e) => {
                passed = false;
                detail = format!("orbit solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "orbit-zero-certificate",
        passed,
        detail: if passed {
            format!("worst |lambda| {worst:.2e}")
        } else {
            detail
        },
    }
}

/// Random forced planar systems under the ratio condition bracket a
/// single positive orbit.
fn check_planar_bracketing(rng: &mut ChaCha8Rng, trials: usize) -> VerifyCheck {
    use crate::ode::{lemma_planar_periodic, ForcedPlanarSystem, PlanarOptions, TimeFunction};
    let mut passed = true;
    let mut detail = String::new();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let period = rng.gen_range(0.5..2.0);
        let b1 = rng.gen_range(0.9..1.3);
        let b2 = rng.gen_range(0.3..0.5);
        let c1 = rng.gen_range(0.3..0.5);
        let c2 = rng.gen_range(0.9..1.3);
        let amp = rng.gen_range(0.0..0.3);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let sys = ForcedPlanarSystem {
            period,
            a1: TimeFunction::from_closure(period, move |t: f64| {
                1.0 + amp * (std::f64::consts::TAU * t / period + phase).sin()
            }),
            a2: TimeFunction::constant(period, rng.gen_range(0.7..1.1)),
            b1: TimeFunction::constant(period, b1),
            b2: TimeFunction::constant(period, b2),
            c1: TimeFunction::constant(period, c1),
            c2: TimeFunction::constant(period, c2),
            d1: TimeFunction::constant(period, rng.gen_range(0.05..0.3)),
            d2: TimeFunction::constant(period, rng.gen_range(0.05..0.3)),
        };
        let opts = PlanarOptions {
            steps_per_period: 4000,
            orbit_samples: 256,
            ..PlanarOptions::default()
        };
        match lemma_planar_periodic(&sys, opts) {
            Ok(pair) => {
                worst = worst.max(pair.gap);
                let positive = pair.upper.u.min_value() > 0.0 && pair.upper.v.min_value() > 0.0;
                if !pair.coincide || !positive {
                    passed = false;
                    detail = format!("gap {:.2e}, positive = {positive}", pair.gap);
                }
            }
            Err(e) => {
                passed = false;
                detail = format!("planar solve failed: {e}");
            }
        }
    }
    VerifyCheck {
        name: "planar-bracketing",
        passed,
        detail: if passed {
            format!("worst gap {worst:.2e}")
        } else {
            detail
        },
    }
}
