//! Acceptance suite: eleven end-to-end criteria covering spectral
//! baselines, the spectral identities, orbit certificates, the comparison
//! principle, coexistence bracketing, proportional uniqueness, extinction,
//! planar two-corner uniqueness, node-by-node reconstruction and report
//! determinism. Each test prints one pass line with its elapsed time and
//! asserts the stated runtime budget.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nlcomp_core::domain::{
    assemble_dispersal, build_grid, build_kernel, DispersalOperator, KernelProfile, Regime,
};
use nlcomp_core::dynamics::{comparison_test, poincare_map, SystemSpec};
use nlcomp_core::fields::{order_compare, CoefficientField, FieldKind, Order, StateField};
use nlcomp_core::ode::{
    lemma_planar_periodic, reconstruct_pointwise, ForcedPlanarSystem, PlanarOptions, TimeFunction,
};
use nlcomp_core::periodic::{
    coexistence_iterate, extinction_run, semitrivial_orbits, CoexistenceOutcome,
};
use nlcomp_core::spectral::{principal_spectrum_point, LinearPeriodMap, SpectralOptions};
use nlcomp_cli::{load_scenario, LoadedScenario};

fn finish(id: u32, name: &str, start: Instant, budget_secs: f64) {
    let elapsed = start.elapsed().as_secs_f64();
    println!("acceptance {id:02} {name}: pass ({elapsed:.1}s)");
    assert!(
        elapsed < budget_secs,
        "{name} took {elapsed:.1}s, budget {budget_secs}s"
    );
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn load(name: &str) -> LoadedScenario {
    load_scenario(&scenario_path(name)).expect("bundled scenario should load")
}

fn operator_1d(regime: Regime, n: usize, extent: f64, radius: f64) -> Arc<DispersalOperator<f64>> {
    let grid = Arc::new(build_grid(1, vec![extent], vec![n], regime).unwrap());
    let kernel = Arc::new(build_kernel(&grid, radius, KernelProfile::SmoothBump).unwrap());
    Arc::new(assemble_dispersal(&grid, &kernel).unwrap())
}

const REGIMES: [Regime; 3] = [Regime::DirichletType, Regime::NeumannType, Regime::Periodic];

/// Random space-time coefficient `base + at sin(2 pi t / T + phase) +
/// ax cos(pi x / half)`, bounded below by `base - at - ax`.
fn random_field(
    rng: &mut ChaCha8Rng,
    period: f64,
    half: f64,
    base: f64,
    headroom: f64,
) -> CoefficientField<f64> {
    let at = rng.gen_range(0.0..0.45 * headroom);
    let ax = rng.gen_range(0.0..0.45 * headroom);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    CoefficientField::from_closure(period, FieldKind::General, move |t, _node, coord| {
        base + at * (std::f64::consts::TAU * t / period + phase).sin()
            + ax * (std::f64::consts::PI * coord[0] / half).cos()
    })
}

#[test]
fn criterion_01_spectral_baselines_by_regime() {
    let start = Instant::now();
    let zero = CoefficientField::constant(1.0, 0.0);
    for regime in [Regime::NeumannType, Regime::Periodic] {
        let op = operator_1d(regime, 64, 2.0, 0.5);
        let r = principal_spectrum_point(&op, 1.0, &zero, SpectralOptions::default()).unwrap();
        assert!(
            r.lambda.abs() <= 1e-12,
            "{regime:?} flat problem gave lambda {}",
            r.lambda
        );
    }
    let op = operator_1d(Regime::DirichletType, 64, 2.0, 0.5);
    let r = principal_spectrum_point(&op, 1.0, &zero, SpectralOptions::default()).unwrap();
    assert!(
        r.lambda < -1e-4,
        "hostile surroundings must drain mass, got {}",
        r.lambda
    );
    finish(1, "spectral-baselines", start, 5.0);
}

#[test]
fn criterion_02_shift_and_monotonicity_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0201);
    for trial in 0..100 {
        let regime = REGIMES[trial % 3];
        let period = rng.gen_range(0.5..2.0);
        let op = operator_1d(regime, 16, 2.0, rng.gen_range(0.3..0.9));
        let nu = rng.gen_range(0.2..1.5);
        let base = rng.gen_range(-0.5..0.8);
        let l = random_field(&mut rng, period, 1.0, base, 0.8);

        let lambda = principal_spectrum_point(&op, nu, &l, SpectralOptions::default())
            .unwrap()
            .lambda;

        // Adding a constant shifts the spectrum point by exactly that much.
        let shift = rng.gen_range(-1.0..1.0);
        let shifted = CoefficientField::from_closure(period, FieldKind::General, {
            let l = l.clone();
            move |t, node, coord| l.value(t, node, coord) + shift
        });
        let lambda_shifted = principal_spectrum_point(&op, nu, &shifted, SpectralOptions::default())
            .unwrap()
            .lambda;
        assert!(
            (lambda_shifted - (lambda + shift)).abs() <= 1e-8,
            "trial {trial}: shift identity off by {}",
            (lambda_shifted - (lambda + shift)).abs()
        );

        // A pointwise-larger zero-order term cannot lower the point.
        let eps = rng.gen_range(0.05..0.5);
        let psi = rng.gen_range(0.0..std::f64::consts::TAU);
        let bigger = CoefficientField::from_closure(period, FieldKind::General, {
            let l = l.clone();
            move |t, node, coord| {
                l.value(t, node, coord)
                    + eps * (1.1 + (std::f64::consts::TAU * t / period + psi).sin())
            }
        });
        let lambda_bigger = principal_spectrum_point(&op, nu, &bigger, SpectralOptions::default())
            .unwrap()
            .lambda;
        assert!(
            lambda_bigger - lambda >= -1e-8,
            "trial {trial}: monotonicity slack {}",
            lambda_bigger - lambda
        );
    }
    finish(2, "shift-and-monotonicity", start, 60.0);
}

#[test]
fn criterion_03_semitrivial_orbits_certify_zero() {
    let start = Instant::now();
    let loaded = load("coexistence_margins.toml");
    let op = loaded.scenario.operator().unwrap();
    let spec = loaded.scenario.system(op).unwrap();
    let semis = semitrivial_orbits(&spec, loaded.scenario.scalar_options()).unwrap();
    for (name, orbit) in [("first resident", &semis.u_star), ("second resident", &semis.v_star)] {
        let cert = orbit
            .zero_certificate(loaded.scenario.spectral_options())
            .unwrap();
        assert!(
            cert.lambda.abs() < 1e-6,
            "{name}: linearization along the orbit gave lambda {}",
            cert.lambda
        );
    }
    finish(3, "orbit-zero-certificates", start, 30.0);
}

#[test]
fn criterion_04_power_iteration_matches_dense_eigendecomposition() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0401);
    for trial in 0..20 {
        let regime = REGIMES[trial % 3];
        let n = rng.gen_range(8..=32usize);
        let extent = rng.gen_range(1.5..3.0);
        let spacing = extent / n as f64;
        let radius = rng.gen_range(1.5 * spacing..0.45 * extent);
        let op = operator_1d(regime, n, extent, radius);
        let nu = rng.gen_range(0.2..1.5);
        let period = rng.gen_range(0.5..2.0);
        let base = rng.gen_range(-0.5..0.8);
        let l = random_field(&mut rng, period, extent / 2.0, base, 0.8);

        let result = principal_spectrum_point(&op, nu, &l, SpectralOptions::default()).unwrap();

        let steps = SpectralOptions::<f64>::default().steps_per_period;
        let mono = LinearPeriodMap::new(Arc::clone(&op), nu, &l, steps)
            .unwrap()
            .monodromy()
            .unwrap();
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| mono.get(i, j));
        let rho = dense
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        let lambda_dense = rho.ln() / period;
        assert!(
            (result.lambda - lambda_dense).abs() <= 1e-8,
            "trial {trial} (n={n}, {regime:?}): {} vs dense {lambda_dense}",
            result.lambda
        );
    }
    finish(4, "power-iteration-vs-dense", start, 120.0);
}

#[test]
fn criterion_05_competitive_order_is_preserved_by_the_flow() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0501);
    for trial in 0..100 {
        let regime = REGIMES[trial % 3];
        let op = operator_1d(regime, 32, 2.0, 0.5);
        let period = rng.gen_range(0.5..1.5);
        let nu1 = rng.gen_range(0.3..1.2);
        let nu2 = rng.gen_range(0.3..1.2);
        fn coeff(rng: &mut ChaCha8Rng, period: f64, lo: f64, hi: f64) -> CoefficientField<f64> {
            let base = rng.gen_range(lo..hi);
            random_field(rng, period, 1.0, base, base - 0.5 * lo)
        }
        let spec = SystemSpec::new(
            Arc::clone(&op),
            nu1,
            nu2,
            period,
            coeff(&mut rng, period, 0.8, 1.4),
            coeff(&mut rng, period, 0.8, 1.4),
            coeff(&mut rng, period, 0.8, 1.2),
            coeff(&mut rng, period, 0.4, 0.7),
            coeff(&mut rng, period, 0.4, 0.7),
            coeff(&mut rng, period, 0.8, 1.2),
        )
        .unwrap();

        // A competitively ordered pair: smaller u goes with larger v.
        let n = 32;
        let mut first = StateField::constant(n, 0.0, 0.0);
        let mut second = StateField::constant(n, 0.0, 0.0);
        for i in 0..n {
            let u_hi = rng.gen_range(0.0..1.5);
            let v_lo = rng.gen_range(0.0..1.5);
            first.u[i] = u_hi * rng.gen_range(0.0..1.0);
            first.v[i] = v_lo + rng.gen_range(0.0..0.5);
            second.u[i] = u_hi;
            second.v[i] = v_lo;
        }

        let report = comparison_test(
            &spec,
            &first,
            &second,
            5.0 * period,
            50,
            period / 400.0,
            1e-10,
        )
        .unwrap();
        assert!(
            report.preserved,
            "trial {trial}: order broke at t = {:?} (violation {})",
            report.first_failure_time, report.worst_violation
        );
    }
    finish(5, "comparison-principle", start, 120.0);
}

/// Shared helper for the two bracketing criteria: runs the two-corner
/// iteration of a bundled scenario and checks the sandwich ordering at
/// every stored slice.
fn bracketed_outcome(loaded: &LoadedScenario) -> (SystemSpec<f64>, CoexistenceOutcome<f64>) {
    let op = loaded.scenario.operator().unwrap();
    let spec = loaded.scenario.system(op).unwrap();
    let outcome = coexistence_iterate(&spec, loaded.scenario.coexistence_options()).unwrap();

    let slices = outcome.upper.u.len_time();
    let period = spec.period();
    for k in 0..slices {
        let t = period * k as f64 / slices as f64;
        let chk = order_compare(
            &outcome.lower.state_at(t),
            &outcome.upper.state_at(t),
            Order::Competitive,
            1e-10,
        );
        assert!(
            chk.holds,
            "sandwich ordering fails at slice {k} (violation {})",
            chk.worst_violation
        );
    }
    (spec, outcome)
}

#[test]
fn criterion_06_margin_scenario_brackets_a_positive_orbit() {
    let start = Instant::now();
    let loaded = load("coexistence_margins.toml");
    let op = loaded.scenario.operator().unwrap();
    let spec = loaded.scenario.system(op).unwrap();

    // The declared exact bounds must support both coexistence margins.
    let (_, declared) = loaded.scenario.resolve_bounds(&spec).unwrap();
    let report =
        nlcomp_core::periodic::evaluate_criteria(&spec, loaded.scenario.criteria_options(declared))
            .unwrap();
    assert!(report.coexistence.holds, "margins: {:?}", report.coexistence);
    assert!(report.coexistence.species1.margin > 0.0);
    assert!(report.coexistence.species2.margin > 0.0);

    let (_, outcome) = bracketed_outcome(&loaded);
    for (name, orbit) in [("upper", &outcome.upper), ("lower", &outcome.lower)] {
        assert!(
            orbit.delta <= 1e-8,
            "{name} corner residual {}",
            orbit.delta
        );
        let min = orbit
            .u
            .min_value()
            .min(orbit.v.min_value());
        assert!(min >= 1e-3, "{name} corner min component {min}");
    }
    finish(6, "coexistence-bracketing", start, 600.0);
}

#[test]
fn criterion_07_proportional_structure_and_basin_of_attraction() {
    let start = Instant::now();

    // Homogeneous symmetric mixture: the orbit is the planar equilibrium,
    // known independently from the 2x2 interaction solve.
    let loaded = load("symmetric_mixture.toml");
    let (spec, outcome) = bracketed_outcome(&loaded);
    let (a, b1, b2, c1, c2) = (1.0, 2.0, 1.0, 1.0, 2.0);
    let det = b1 * c2 - b2 * c1;
    let u_oracle = a * (c2 - c1) / det;
    let v_oracle = a * (b1 - b2) / det;
    let slices = outcome.upper.u.len_time();
    for k in 0..slices {
        let t = spec.period() * k as f64 / slices as f64;
        let s = outcome.upper.state_at(t);
        for i in 0..s.len() {
            assert!(
                (s.u[i] - u_oracle).abs() <= 1e-6 && (s.v[i] - v_oracle).abs() <= 1e-6,
                "slice {k} node {i}: ({}, {}) vs oracle ({u_oracle}, {v_oracle})",
                s.u[i],
                s.v[i]
            );
        }
    }

    // Spatially varying growth: the proportion (b1 - b2)/(c2 - c1) = 1
    // forces v = u nodewise even though neither is constant.
    let varying = load("proportional_varying.toml");
    let (vspec, voutcome) = bracketed_outcome(&varying);
    let uniq = nlcomp_core::periodic::uniqueness_check(
        &vspec,
        &voutcome,
        varying.scenario.scalar_options(),
        varying.scenario.run.uniqueness_tol,
    )
    .unwrap();
    assert!(uniq.holds, "proportional structure: {uniq:?}");
    let vslices = voutcome.upper.u.len_time();
    for k in 0..vslices {
        let t = vspec.period() * k as f64 / vslices as f64;
        let s = voutcome.upper.state_at(t);
        for i in 0..s.len() {
            assert!(
                (s.v[i] - uniq.rho * s.u[i]).abs() <= 1e-6,
                "slice {k} node {i}: v = {} vs rho u = {}",
                s.v[i],
                uniq.rho * s.u[i]
            );
        }
    }

    // Every positive start is pulled onto the same orbit.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0701);
    let reference = &outcome.upper.fixed_point;
    let dt = spec.period() / 400.0;
    for trial in 0..20 {
        let n = reference.len();
        let mut state = StateField::constant(n, 0.0, 0.0);
        for i in 0..n {
            state.u[i] = rng.gen_range(0.05..2.0);
            state.v[i] = rng.gen_range(0.05..2.0);
        }
        let mut converged = false;
        for _ in 0..400 {
            state = poincare_map(&spec, &state, dt).unwrap();
            if state.sup_distance(reference) < 1e-5 {
                converged = true;
                break;
            }
        }
        assert!(
            converged,
            "trial {trial}: still {} away after 400 periods",
            state.sup_distance(reference)
        );
    }
    finish(7, "proportional-orbit-basin", start, 600.0);
}

#[test]
fn criterion_08_dominant_species_drives_the_other_extinct() {
    let start = Instant::now();
    let loaded = load("extinction_drive.toml");
    let op = loaded.scenario.operator().unwrap();
    let spec = loaded.scenario.system(op).unwrap();
    let (_, declared) = loaded.scenario.resolve_bounds(&spec).unwrap();
    let report =
        extinction_run(&spec, None, loaded.scenario.extinction_options(declared)).unwrap();

    assert!(report.criteria.holds, "margins: {:?}", report.criteria);
    assert!(report.extinct, "sup v stayed at {}", report.v_sup_final);
    assert!(
        report.periods <= 200,
        "extinction took {} periods",
        report.periods
    );
    assert!(report.v_sup_final < 1e-6);
    assert!(
        report.u_distance_final < 1e-4,
        "survivor is {} from its single-species orbit",
        report.u_distance_final
    );
    let sandwich = report.sandwich.expect("sandwich check requested");
    assert!(
        sandwich.order_ok,
        "bounding system order violated by {}",
        sandwich.worst_violation
    );
    finish(8, "extinction-drive", start, 300.0);
}

#[test]
fn criterion_09_forced_planar_two_corner_uniqueness() {
    let start = Instant::now();

    // Constant coefficients with the known equilibrium at (1, 1).
    let loaded = load("forced_planar.toml");
    let sys = loaded.scenario.planar_system().unwrap();
    let pair = lemma_planar_periodic(&sys, loaded.scenario.planar_options()).unwrap();
    for (name, orbit) in [("upper", &pair.upper), ("lower", &pair.lower)] {
        assert!(
            (orbit.fixed.0 - 1.0).abs() <= 1e-8 && (orbit.fixed.1 - 1.0).abs() <= 1e-8,
            "{name} fixed point {:?}",
            orbit.fixed
        );
    }
    assert!(pair.gap <= 1e-8, "corner gap {}", pair.gap);
    assert!(pair.coincide);

    // Random systems satisfying the interaction-ratio condition with at
    // least a 10% margin keep the two corners together.
    let mut rng = ChaCha8Rng::seed_from_u64(0x0901);
    fn wave(rng: &mut ChaCha8Rng, period: f64, base: f64, frac: f64) -> TimeFunction<f64> {
        let amp = base * rng.gen_range(0.0..frac);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        TimeFunction::from_closure(period, move |t| {
            base + amp * (std::f64::consts::TAU * t / period + phase).sin()
        })
    }
    for trial in 0..20 {
        let period = rng.gen_range(0.5..2.0);
        let b2 = rng.gen_range(0.6..1.2);
        let c1 = rng.gen_range(0.6..1.2);
        let c2 = rng.gen_range(1.2..2.0);
        // sup b2 and sup c1 carry 20% headroom, inf c2 loses 20%; pick
        // inf b1 another 20% above the resulting ratio requirement.
        let needed = (c1 * 1.2) / (c2 * 0.8) * (b2 * 1.2);
        let b1 = 1.2 * needed / 0.8 + rng.gen_range(0.0..0.5);
        let a1 = rng.gen_range(0.1..0.5);
        let a2 = rng.gen_range(0.1..0.5);
        let d1 = rng.gen_range(0.5..2.5);
        let d2 = rng.gen_range(0.5..2.5);
        let sys = ForcedPlanarSystem {
            period,
            a1: wave(&mut rng, period, a1, 0.2),
            a2: wave(&mut rng, period, a2, 0.2),
            b1: wave(&mut rng, period, b1, 0.2),
            b2: wave(&mut rng, period, b2, 0.2),
            c1: wave(&mut rng, period, c1, 0.2),
            c2: wave(&mut rng, period, c2, 0.2),
            d1: wave(&mut rng, period, d1, 0.3),
            d2: wave(&mut rng, period, d2, 0.3),
        };
        let options = PlanarOptions {
            steps_per_period: 2000,
            ..PlanarOptions::default()
        };
        let pair = lemma_planar_periodic(&sys, options).unwrap();
        assert!(
            pair.ratio_lhs > 1.1 * pair.ratio_rhs,
            "trial {trial} drew a thin margin: {} vs {}",
            pair.ratio_lhs,
            pair.ratio_rhs
        );
        assert!(
            pair.gap <= 1e-8,
            "trial {trial}: corner gap {} (ratio {} vs {})",
            pair.gap,
            pair.ratio_lhs,
            pair.ratio_rhs
        );
    }
    finish(9, "planar-two-corner-uniqueness", start, 60.0);
}

#[test]
fn criterion_10_orbit_reconstructed_node_by_node() {
    let start = Instant::now();
    let loaded = load("coexistence_margins.toml");
    let op = loaded.scenario.operator().unwrap();
    let spec = loaded.scenario.system(op).unwrap();
    let outcome = coexistence_iterate(&spec, loaded.scenario.coexistence_options()).unwrap();
    let orbit = &outcome.upper;
    let options = loaded.scenario.planar_options();

    let n = spec.grid().len();
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(4)
        .min(8);
    let nodes: Vec<usize> = (0..n).collect();
    let worst = std::sync::Mutex::new((0.0f64, 0usize));
    std::thread::scope(|scope| {
        for chunk in nodes.chunks(n.div_ceil(workers)) {
            let worst = &worst;
            let spec = &spec;
            scope.spawn(move || {
                for &node in chunk {
                    let report = reconstruct_pointwise(spec, orbit, node, options).unwrap();
                    let err = report.max_error_u.max(report.max_error_v);
                    let mut w = worst.lock().unwrap();
                    if err > w.0 {
                        *w = (err, node);
                    }
                }
            });
        }
    });
    let (err, node) = *worst.lock().unwrap();
    assert!(
        err < 1e-6,
        "node {node}: planar reconstruction off by {err}"
    );
    finish(10, "node-by-node-reconstruction", start, 300.0);
}

#[test]
fn criterion_11_verify_reports_are_byte_identical() {
    let start = Instant::now();
    let dir = tempfile::TempDir::new().unwrap();
    let mut reports = Vec::new();
    for run in ["first", "second"] {
        let out_dir = dir.path().join(run);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_nlcomp"))
            .args(["verify", "--seed", "42", "--quiet", "--out"])
            .arg(&out_dir)
            .status()
            .expect("binary should spawn");
        assert!(status.success(), "verify run {run} failed");
        reports.push(std::fs::read(out_dir.join("verify.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1], "reports drifted between runs");
    finish(11, "verify-determinism", start, 300.0);
}
