//! One function per subcommand. Each compiles the scenario into core
//! objects, runs the computation, writes its artifacts (JSON report plus
//! CSV where the artifact is a field), and prints a one-line summary
//! unless `--quiet`.

use std::path::Path;

use serde::Serialize;

use nlcomp_core::dynamics::{integrate, Trajectory};
use nlcomp_core::fields::{Bound, CoefficientBounds, StateField};
use nlcomp_core::ode::lemma_planar_periodic;
use nlcomp_core::periodic::{
    coexistence_certificates, coexistence_iterate, evaluate_criteria, extinction_run,
    uniqueness_check, CoexistenceCriteria, CornerDiagnostics, CriterionMargin,
    ExtinctionCriteria, PointwiseCriteria, ScalarOrbit,
};
use nlcomp_core::spectral::{principal_spectrum_point, SpectralMethod, SpectralResult};
use nlcomp_core::verify::run_verification;
use nlcomp_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::output::{
    artifact_path, write_json, write_orbit_csv, write_trajectory_csv, ReportMeta,
};
use crate::scenario::LoadedScenario;

fn meta(command: &str, loaded: &LoadedScenario) -> ReportMeta {
    ReportMeta {
        command: command.to_string(),
        scenario_path: loaded.path.display().to_string(),
        scenario_sha256: loaded.sha256.clone(),
    }
}

fn status(quiet: bool, line: String) {
    if !quiet {
        println!("{line}");
    }
}

// ---------------------------------------------------------------------------
// JSON mirrors of core report types (the core library stays serde-free).

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundJson {
    pub lower: f64,
    pub upper: f64,
}

impl From<Bound<f64>> for BoundJson {
    fn from(b: Bound<f64>) -> Self {
        BoundJson {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundsJson {
    pub a1: BoundJson,
    pub a2: BoundJson,
    pub b1: BoundJson,
    pub b2: BoundJson,
    pub c1: BoundJson,
    pub c2: BoundJson,
}

impl From<CoefficientBounds<f64>> for BoundsJson {
    fn from(b: CoefficientBounds<f64>) -> Self {
        BoundsJson {
            a1: b.a1.into(),
            a2: b.a2.into(),
            b1: b.b1.into(),
            b2: b.b2.into(),
            c1: b.c1.into(),
            c2: b.c2.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginJson {
    pub value: f64,
    pub threshold: f64,
    pub margin: f64,
    pub holds: bool,
}

impl From<CriterionMargin<f64>> for MarginJson {
    fn from(m: CriterionMargin<f64>) -> Self {
        MarginJson {
            value: m.value,
            threshold: m.threshold,
            margin: m.margin,
            holds: m.holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralJson {
    pub lambda: f64,
    pub spectral_radius: f64,
    pub essential_bound: f64,
    pub gap: f64,
    pub gap_tol: f64,
    pub is_principal_eigenvalue: bool,
    pub classification: String,
    pub method: String,
    pub steps_per_period: usize,
    pub iterations: usize,
    pub residual: f64,
}

fn method_str(method: SpectralMethod) -> &'static str {
    match method {
        SpectralMethod::DenseMonodromy => "dense-monodromy",
        SpectralMethod::MatrixFree => "matrix-free",
    }
}

impl From<&SpectralResult<f64>> for SpectralJson {
    fn from(r: &SpectralResult<f64>) -> Self {
        SpectralJson {
            lambda: r.lambda,
            spectral_radius: r.spectral_radius,
            essential_bound: r.essential_bound,
            gap: r.gap,
            gap_tol: r.gap_tol,
            is_principal_eigenvalue: r.is_principal_eigenvalue,
            classification: r.classification.as_str().to_string(),
            method: method_str(r.method).to_string(),
            steps_per_period: r.steps_per_period,
            iterations: r.iterations,
            residual: r.residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarOrbitJson {
    pub sup: f64,
    pub inf: f64,
    pub periods: usize,
    pub residual: f64,
}

impl From<&ScalarOrbit<f64>> for ScalarOrbitJson {
    fn from(o: &ScalarOrbit<f64>) -> Self {
        ScalarOrbitJson {
            sup: o.sup(),
            inf: o.inf(),
            periods: o.periods(),
            residual: o.delta(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CornerJson {
    pub basis: String,
    pub epsilon: f64,
    pub shrink_steps: usize,
    pub one_step_violation: f64,
}

impl From<CornerDiagnostics<f64>> for CornerJson {
    fn from(c: CornerDiagnostics<f64>) -> Self {
        CornerJson {
            basis: c.basis.as_str().to_string(),
            epsilon: c.epsilon,
            shrink_steps: c.shrink_steps,
            one_step_violation: c.one_step_violation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoexistenceCriteriaJson {
    pub species1: MarginJson,
    pub species2: MarginJson,
    pub holds: bool,
}

impl From<CoexistenceCriteria<f64>> for CoexistenceCriteriaJson {
    fn from(c: CoexistenceCriteria<f64>) -> Self {
        CoexistenceCriteriaJson {
            species1: c.species1.into(),
            species2: c.species2.into(),
            holds: c.holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseCriteriaJson {
    pub rates_equal: bool,
    pub growths_match: bool,
    pub b_separated: MarginJson,
    pub c_separated: MarginJson,
    pub holds: bool,
}

impl From<PointwiseCriteria<f64>> for PointwiseCriteriaJson {
    fn from(c: PointwiseCriteria<f64>) -> Self {
        PointwiseCriteriaJson {
            rates_equal: c.rates_equal,
            growths_match: c.growths_match,
            b_separated: c.b_separated.into(),
            c_separated: c.c_separated.into(),
            holds: c.holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtinctionCriteriaJson {
    pub resident_persists: MarginJson,
    pub invader_capped: MarginJson,
    pub growth_order: MarginJson,
    pub rates_equal: bool,
    pub holds: bool,
}

impl From<ExtinctionCriteria<f64>> for ExtinctionCriteriaJson {
    fn from(c: ExtinctionCriteria<f64>) -> Self {
        ExtinctionCriteriaJson {
            resident_persists: c.resident_persists.into(),
            invader_capped: c.invader_capped.into(),
            growth_order: c.growth_order.into(),
            rates_equal: c.rates_equal,
            holds: c.holds,
        }
    }
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Serialize)]
struct SimulateParameters {
    dt: f64,
    periods: usize,
    store_every: usize,
    initial: &'static str,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: SimulateParameters,
    stored_samples: usize,
    csv_rows: usize,
    final_time: f64,
    final_sup_u: f64,
    final_sup_v: f64,
    final_inf_u: f64,
    final_inf_v: f64,
    trajectory_csv: String,
}

fn species_extrema(state: &StateField<f64>) -> (f64, f64, f64, f64) {
    let fold = |xs: &[f64]| {
        xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        })
    };
    let (inf_u, sup_u) = fold(&state.u);
    let (inf_v, sup_v) = fold(&state.v);
    (inf_u, sup_u, inf_v, sup_v)
}

pub fn simulate(loaded: &LoadedScenario, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let op = scenario.operator()?;
    let spec = scenario.system(op)?;
    let n = spec.grid().len();
    let (initial, initial_kind) = match scenario.initial_state(&spec)? {
        Some(state) => (state, "initial-block"),
        None => (StateField::constant(n, 0.5, 0.5), "default-constant-0.5"),
    };
    let periods = scenario.run.simulate_periods;
    let t1 = spec.period() * periods as f64;
    let options = scenario.integrate_options();
    let dt = options.dt;
    let trajectory: Trajectory<f64> =
        integrate(&spec, &initial, 0.0, t1, options).map_err(CliError::from)?;

    let csv_path = artifact_path(out, "trajectory.csv")?;
    let rows = write_trajectory_csv(&csv_path, spec.grid(), &trajectory)?;
    let last = trajectory.last();
    let (inf_u, sup_u, inf_v, sup_v) = species_extrema(last);

    let report = SimulateReport {
        meta: meta("simulate", loaded),
        parameters: SimulateParameters {
            dt,
            periods,
            store_every: scenario.run.store_every,
            initial: initial_kind,
        },
        stored_samples: trajectory.states().len(),
        csv_rows: rows,
        final_time: last.time,
        final_sup_u: sup_u,
        final_sup_v: sup_v,
        final_inf_u: inf_u,
        final_inf_v: inf_v,
        // The sibling artifact by name only: report bytes must depend on
        // the scenario and seed alone, not on where --out points.
        trajectory_csv: "trajectory.csv".to_string(),
    };
    let json_path = artifact_path(out, "simulate.json")?;
    write_json(&json_path, &report)?;
    status(
        quiet,
        format!(
            "[simulate] {periods} periods, {} samples -> {} ({} rows); sup at T: u={sup_u:.6e} v={sup_v:.6e}",
            report.stored_samples,
            csv_path.display(),
            rows
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// spectrum

#[derive(Debug, Serialize)]
struct SpectrumParameters {
    species: u8,
    nu: f64,
    coefficient: String,
    steps_per_period: usize,
    tol: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumReport {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: SpectrumParameters,
    #[serde(flatten)]
    result: SpectralJson,
    perron: Vec<f64>,
}

pub fn spectrum(
    loaded: &LoadedScenario,
    species: u8,
    out: Option<&Path>,
    quiet: bool,
) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let op = scenario.operator()?;
    let spec = scenario.system(op)?;
    let (nu, field, source) = match species {
        1 => (spec.nu1(), spec.a1(), scenario.system.a1.source_string()),
        2 => (spec.nu2(), spec.a2(), scenario.system.a2.source_string()),
        other => {
            return Err(CliError::Validation(format!(
                "--species must be 1 or 2, got {other}"
            )))
        }
    };
    let options = scenario.spectral_options();
    let result = principal_spectrum_point(spec.op(), nu, field, options).map_err(CliError::from)?;

    let report = SpectrumReport {
        meta: meta("spectrum", loaded),
        parameters: SpectrumParameters {
            species,
            nu,
            coefficient: source,
            steps_per_period: options.steps_per_period,
            tol: options.tol,
        },
        result: SpectralJson::from(&result),
        perron: result.perron.clone(),
    };
    let json_path = artifact_path(out, "spectrum.json")?;
    write_json(&json_path, &report)?;
    status(
        quiet,
        format!(
            "[spectrum] species {species}: lambda = {:.12e} ({}) -> {}",
            result.lambda,
            result.classification.as_str(),
            json_path.display()
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// periodic

#[derive(Debug, Serialize)]
struct PeriodicParameters {
    dt: f64,
    tol: f64,
    max_periods: usize,
    orbit_samples: usize,
    epsilon: f64,
    match_tol: f64,
    uniqueness_tol: f64,
    spectral_steps: usize,
}

#[derive(Debug, Serialize)]
struct OrbitJson {
    periods: usize,
    residual: f64,
    min_u: f64,
    min_v: f64,
    max_u: f64,
    max_v: f64,
}

#[derive(Debug, Serialize)]
struct UniquenessJson {
    rho: f64,
    proportionality_error: f64,
    reduced_error: f64,
    semitrivial_u_error: f64,
    semitrivial_v_error: f64,
    tol: f64,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct PeriodicReport {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: PeriodicParameters,
    upper_corner: CornerJson,
    lower_corner: CornerJson,
    upper: OrbitJson,
    lower: OrbitJson,
    gap: f64,
    coincide: bool,
    positive: bool,
    u_star: ScalarOrbitJson,
    v_star: ScalarOrbitJson,
    /// `lambda` of the system linearized at the accepted orbit, per
    /// species; zero up to discretization error.
    certificate_u: f64,
    certificate_v: f64,
    /// Present when the system has the proportional structure (constant
    /// interactions, equal rates, identical growth).
    uniqueness: Option<UniquenessJson>,
    /// Why the proportional structure does not apply, when it doesn't.
    uniqueness_note: Option<String>,
    orbit_csv: String,
}

fn orbit_json(orbit: &nlcomp_core::periodic::PeriodicOrbit<f64>) -> OrbitJson {
    OrbitJson {
        periods: orbit.periods,
        residual: orbit.delta,
        min_u: orbit.u.min_value(),
        min_v: orbit.v.min_value(),
        max_u: orbit.u.max_value(),
        max_v: orbit.v.max_value(),
    }
}

pub fn periodic(loaded: &LoadedScenario, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let op = scenario.operator()?;
    let spec = scenario.system(op)?;
    let options = scenario.coexistence_options();
    let outcome = coexistence_iterate(&spec, options).map_err(CliError::from)?;
    let (cert_u, cert_v) =
        coexistence_certificates(&spec, &outcome.upper, scenario.spectral_options())
            .map_err(CliError::from)?;
    let (uniqueness, uniqueness_note) = match uniqueness_check(
        &spec,
        &outcome,
        scenario.scalar_options(),
        scenario.run.uniqueness_tol,
    ) {
        Ok(r) => (
            Some(UniquenessJson {
                rho: r.rho,
                proportionality_error: r.proportionality_error,
                reduced_error: r.reduced_error,
                semitrivial_u_error: r.semitrivial_u_error,
                semitrivial_v_error: r.semitrivial_v_error,
                tol: r.tol,
                holds: r.holds,
            }),
            None,
        ),
        Err(CoreError::Hypothesis(msg)) => (None, Some(msg)),
        Err(e) => return Err(e.into()),
    };

    let csv_path = artifact_path(out, "orbit.csv")?;
    write_orbit_csv(&csv_path, spec.grid(), &outcome.upper.u, &outcome.upper.v)?;

    let report = PeriodicReport {
        meta: meta("periodic", loaded),
        parameters: PeriodicParameters {
            dt: spec.period() / scenario.steps_per_period() as f64,
            tol: scenario.run.tol,
            max_periods: scenario.run.max_periods,
            orbit_samples: scenario.run.orbit_samples,
            epsilon: scenario.run.epsilon,
            match_tol: scenario.run.match_tol,
            uniqueness_tol: scenario.run.uniqueness_tol,
            spectral_steps: scenario.run.spectral_steps,
        },
        upper_corner: outcome.upper_corner.into(),
        lower_corner: outcome.lower_corner.into(),
        upper: orbit_json(&outcome.upper),
        lower: orbit_json(&outcome.lower),
        gap: outcome.gap,
        coincide: outcome.coincide,
        positive: outcome.positive,
        u_star: ScalarOrbitJson::from(&outcome.semitrivials.u_star),
        v_star: ScalarOrbitJson::from(&outcome.semitrivials.v_star),
        certificate_u: cert_u,
        certificate_v: cert_v,
        uniqueness,
        uniqueness_note,
        // Name only, so the report bytes do not depend on --out.
        orbit_csv: "orbit.csv".to_string(),
    };
    let json_path = artifact_path(out, "periodic.json")?;
    write_json(&json_path, &report)?;
    status(
        quiet,
        format!(
            "[periodic] orbits converged in {}/{} periods, gap {:.3e} (coincide: {}), certificates {:.3e}/{:.3e} -> {}",
            outcome.upper.periods,
            outcome.lower.periods,
            outcome.gap,
            outcome.coincide,
            cert_u,
            cert_v,
            json_path.display()
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// criteria

#[derive(Debug, Serialize)]
struct CriteriaParameters {
    time_samples: usize,
    spectral_steps: usize,
    spectral_tol: f64,
    dt: f64,
    tol: f64,
    max_periods: usize,
    bounds_source: &'static str,
}

#[derive(Debug, Serialize)]
struct InvasionJson {
    lambda_v_at_u_orbit: f64,
    lambda_u_at_v_orbit: f64,
    u_orbit_certificate: f64,
    v_orbit_certificate: f64,
}

#[derive(Debug, Serialize)]
struct CriteriaJsonReport {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: CriteriaParameters,
    bounds: BoundsJson,
    lambda_zero_1: f64,
    lambda_zero_2: f64,
    coexistence: CoexistenceCriteriaJson,
    pointwise: PointwiseCriteriaJson,
    extinction: ExtinctionCriteriaJson,
    ratio_lhs: f64,
    ratio_rhs: f64,
    ratio_holds: bool,
    invasion: Option<InvasionJson>,
    prediction: String,
}

pub fn criteria(loaded: &LoadedScenario, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let op = scenario.operator()?;
    let spec = scenario.system(op)?;
    let (_scanned, declared) = scenario.resolve_bounds(&spec)?;
    let bounds_source = if declared.is_some() {
        "declared-exact"
    } else {
        "mesh-scan"
    };
    let options = scenario.criteria_options(declared);
    let report = evaluate_criteria(&spec, options).map_err(CliError::from)?;

    let json = CriteriaJsonReport {
        meta: meta("criteria", loaded),
        parameters: CriteriaParameters {
            time_samples: scenario.run.time_samples,
            spectral_steps: scenario.run.spectral_steps,
            spectral_tol: scenario.run.spectral_tol,
            dt: spec.period() / scenario.steps_per_period() as f64,
            tol: scenario.run.tol,
            max_periods: scenario.run.max_periods,
            bounds_source,
        },
        bounds: report.bounds.into(),
        lambda_zero_1: report.lambda_zero_1,
        lambda_zero_2: report.lambda_zero_2,
        coexistence: report.coexistence.into(),
        pointwise: report.pointwise.into(),
        extinction: report.extinction.into(),
        ratio_lhs: report.ratio.lhs,
        ratio_rhs: report.ratio.rhs,
        ratio_holds: report.ratio.holds,
        invasion: report.invasion.map(|inv| InvasionJson {
            lambda_v_at_u_orbit: inv.lambda_v_at_u_orbit,
            lambda_u_at_v_orbit: inv.lambda_u_at_v_orbit,
            u_orbit_certificate: inv.u_orbit_certificate,
            v_orbit_certificate: inv.v_orbit_certificate,
        }),
        prediction: report.prediction.as_str().to_string(),
    };
    let json_path = artifact_path(out, "criteria.json")?;
    write_json(&json_path, &json)?;
    status(
        quiet,
        format!(
            "[criteria] prediction: {} (coexistence: {}, extinction: {}) -> {}",
            json.prediction,
            json.coexistence.holds,
            json.extinction.holds,
            json_path.display()
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// extinct

#[derive(Debug, Serialize)]
struct ExtinctParameters {
    dt: f64,
    max_periods: usize,
    extinction_tol: f64,
    survivor_tol: f64,
    spectral_steps: usize,
    initial: &'static str,
    bounds_source: &'static str,
}

#[derive(Debug, Serialize)]
struct ExtinctSampleJson {
    period: usize,
    v_sup: f64,
    u_distance: f64,
}

#[derive(Debug, Serialize)]
struct SandwichJson {
    order_ok: bool,
    worst_violation: f64,
    periods_checked: usize,
}

#[derive(Debug, Serialize)]
struct ExtinctReport {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: ExtinctParameters,
    criteria: ExtinctionCriteriaJson,
    invasion_lambda: f64,
    periods: usize,
    v_sup_final: f64,
    u_distance_final: f64,
    extinct: bool,
    survivor_converged: bool,
    sandwich: Option<SandwichJson>,
    history: Vec<ExtinctSampleJson>,
}

pub fn extinct(loaded: &LoadedScenario, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let op = scenario.operator()?;
    let spec = scenario.system(op)?;
    let (_scanned, declared) = scenario.resolve_bounds(&spec)?;
    let bounds_source = if declared.is_some() {
        "declared-exact"
    } else {
        "mesh-scan"
    };
    let initial = scenario.initial_state(&spec)?;
    let initial_kind = if initial.is_some() {
        "initial-block"
    } else {
        "default-half-semitrivial"
    };
    let options = scenario.extinction_options(declared);
    let report = extinction_run(&spec, initial, options).map_err(CliError::from)?;

    let json = ExtinctReport {
        meta: meta("extinct", loaded),
        parameters: ExtinctParameters {
            dt: spec.period() / scenario.steps_per_period() as f64,
            max_periods: scenario.run.max_periods,
            extinction_tol: scenario.run.extinction_tol,
            survivor_tol: scenario.run.survivor_tol,
            spectral_steps: scenario.run.spectral_steps,
            initial: initial_kind,
            bounds_source,
        },
        criteria: report.criteria.into(),
        invasion_lambda: report.invasion_lambda,
        periods: report.periods,
        v_sup_final: report.v_sup_final,
        u_distance_final: report.u_distance_final,
        extinct: report.extinct,
        survivor_converged: report.survivor_converged,
        sandwich: report.sandwich.map(|s| SandwichJson {
            order_ok: s.order_ok,
            worst_violation: s.worst_violation,
            periods_checked: s.periods_checked,
        }),
        history: report
            .history
            .iter()
            .map(|h| ExtinctSampleJson {
                period: h.period,
                v_sup: h.v_sup,
                u_distance: h.u_distance,
            })
            .collect(),
    };
    let json_path = artifact_path(out, "extinct.json")?;
    write_json(&json_path, &json)?;
    status(
        quiet,
        format!(
            "[extinct] after {} periods: sup v = {:.3e} (extinct: {}), survivor distance = {:.3e} -> {}",
            json.periods,
            json.v_sup_final,
            json.extinct,
            json.u_distance_final,
            json_path.display()
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// lemma31

#[derive(Debug, Serialize)]
struct Lemma31Parameters {
    steps_per_period: usize,
    max_periods: usize,
    orbit_samples: usize,
    match_tol: f64,
}

#[derive(Debug, Serialize)]
struct PlanarOrbitJson {
    u0: f64,
    v0: f64,
    periods: usize,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct Lemma31Report {
    #[serde(flatten)]
    meta: ReportMeta,
    parameters: Lemma31Parameters,
    ratio_lhs: f64,
    ratio_rhs: f64,
    upper: PlanarOrbitJson,
    lower: PlanarOrbitJson,
    gap: f64,
    coincide: bool,
}

pub fn lemma31(loaded: &LoadedScenario, out: Option<&Path>, quiet: bool) -> CliResult<()> {
    let scenario = &loaded.scenario;
    let sys = scenario.planar_system()?;
    let options = scenario.planar_options();
    let pair = lemma_planar_periodic(&sys, options).map_err(CliError::from)?;

    let orbit = |o: &nlcomp_core::ode::PlanarOrbit<f64>| PlanarOrbitJson {
        u0: o.fixed.0,
        v0: o.fixed.1,
        periods: o.periods,
        residual: o.delta,
    };
    let report = Lemma31Report {
        meta: meta("lemma31", loaded),
        parameters: Lemma31Parameters {
            steps_per_period: options.steps_per_period,
            max_periods: options.max_periods,
            orbit_samples: options.orbit_samples,
            match_tol: options.match_tol,
        },
        ratio_lhs: pair.ratio_lhs,
        ratio_rhs: pair.ratio_rhs,
        upper: orbit(&pair.upper),
        lower: orbit(&pair.lower),
        gap: pair.gap,
        coincide: pair.coincide,
    };
    let json_path = artifact_path(out, "lemma31.json")?;
    write_json(&json_path, &report)?;
    status(
        quiet,
        format!(
            "[lemma31] planar orbit at ({:.9}, {:.9}), two-corner gap {:.3e} (coincide: {}) -> {}",
            report.upper.u0,
            report.upper.v0,
            report.gap,
            report.coincide,
            json_path.display()
        ),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Serialize)]
struct VerifyCheckJson {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct VerifyReportJson {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario_sha256: Option<String>,
    seed: u64,
    trials: usize,
    checks: Vec<VerifyCheckJson>,
    passed: bool,
}

pub fn verify(
    loaded: Option<&LoadedScenario>,
    seed: u64,
    trials: usize,
    out: Option<&Path>,
    quiet: bool,
) -> CliResult<()> {
    // When a scenario is given, gate on it compiling cleanly first: the
    // suite then stamps that scenario's report.
    if let Some(l) = loaded {
        let op = l.scenario.operator()?;
        let _ = l.scenario.system(op)?;
        if l.scenario.planar.is_some() {
            let _ = l.scenario.planar_system()?;
        }
    }
    let report = run_verification(seed, trials);
    for check in &report.checks {
        status(
            quiet,
            format!(
                "[verify] {:<28} {} {}",
                check.name,
                if check.passed { "pass" } else { "FAIL" },
                check.detail
            ),
        );
    }
    let json = VerifyReportJson {
        command: "verify".to_string(),
        scenario_path: loaded.map(|l| l.path.display().to_string()),
        scenario_sha256: loaded.map(|l| l.sha256.clone()),
        seed: report.seed,
        trials: report.trials,
        checks: report
            .checks
            .iter()
            .map(|c| VerifyCheckJson {
                name: c.name.to_string(),
                passed: c.passed,
                detail: c.detail.clone(),
            })
            .collect(),
        passed: report.passed,
    };
    let json_path = artifact_path(out, "verify.json")?;
    write_json(&json_path, &json)?;
    status(
        quiet,
        format!(
            "[verify] suite {} (seed {seed}, {trials} trials) -> {}",
            if report.passed { "passed" } else { "FAILED" },
            json_path.display()
        ),
    );
    if !report.passed {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect();
        return Err(CliError::Suite(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            report.checks.len(),
            failed.join(", ")
        )));
    }
    Ok(())
}
