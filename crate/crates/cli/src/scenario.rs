//! Scenario files: a flat TOML description of one experiment — grid,
//! kernel, system coefficients, and run parameters — parsed strictly
//! (unknown keys are rejected) and compiled into core library objects.
//!
//! Coefficients are closed-form expression strings over `t`, `x`, `y`,
//! `T`, `pi` with `sin`/`cos` and `+ - * /` arithmetic, or plain numbers
//! for constants.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use nlcomp_core::domain::{
    assemble_dispersal, build_grid, build_kernel, DispersalOperator, KernelProfile, Regime,
};
use nlcomp_core::dynamics::IntegrateOptions;
use nlcomp_core::fields::{Bound, CoefficientBounds, CoefficientField, StateField};
use nlcomp_core::ode::{ForcedPlanarSystem, PlanarOptions, TimeFunction};
use nlcomp_core::periodic::{
    CoexistenceOptions, CriteriaOptions, ExtinctionOptions, ScalarSolveOptions,
};
use nlcomp_core::spectral::SpectralOptions;
use nlcomp_core::SystemSpec64;

use crate::error::{CliError, CliResult};

/// One experiment description, as parsed from a scenario file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridBlock,
    pub kernel: KernelBlock,
    pub system: SystemBlock,
    #[serde(default)]
    pub run: RunBlock,
    /// Optional initial state for `simulate` and `extinct` (expressions
    /// evaluated at t = 0).
    #[serde(default)]
    pub initial: Option<InitialBlock>,
    /// Optional forced planar system for `lemma31`.
    #[serde(default)]
    pub planar: Option<PlanarBlock>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dimension: usize,
    pub extents: Vec<f64>,
    pub nodes: Vec<usize>,
    /// `dirichlet`, `neumann`, or `periodic`.
    pub regime: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub radius: f64,
    /// `smooth_bump` or `cosine`.
    pub profile: String,
}

/// A coefficient: either a bare number (constant in time and space) or an
/// expression string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Number(f64),
    Expression(String),
}

impl CoefficientSpec {
    /// The coefficient as written in the scenario, for report echoes.
    pub fn source_string(&self) -> String {
        match self {
            CoefficientSpec::Number(v) => format!("{v}"),
            CoefficientSpec::Expression(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub nu1: f64,
    pub nu2: f64,
    pub period: f64,
    pub a1: CoefficientSpec,
    pub a2: CoefficientSpec,
    pub b1: CoefficientSpec,
    pub b2: CoefficientSpec,
    pub c1: CoefficientSpec,
    pub c2: CoefficientSpec,
    /// Optional exact analytic bounds `[lower, upper]` per coefficient;
    /// they replace the mesh scan in the criteria margins.
    #[serde(default)]
    pub bounds: Option<BoundsBlock>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundsBlock {
    pub a1: Option<[f64; 2]>,
    pub a2: Option<[f64; 2]>,
    pub b1: Option<[f64; 2]>,
    pub b2: Option<[f64; 2]>,
    pub c1: Option<[f64; 2]>,
    pub c2: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub u: CoefficientSpec,
    pub v: CoefficientSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarBlock {
    pub period: f64,
    pub a1: CoefficientSpec,
    pub a2: CoefficientSpec,
    pub b1: CoefficientSpec,
    pub b2: CoefficientSpec,
    pub c1: CoefficientSpec,
    pub c2: CoefficientSpec,
    pub d1: CoefficientSpec,
    pub d2: CoefficientSpec,
}

/// Run parameters; every field has a documented default so reports stay
/// traceable when the block is omitted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunBlock {
    /// Integration step; default `period / 2000`.
    pub dt: Option<f64>,
    /// Cap on Poincare-map iterations.
    pub max_periods: usize,
    /// Seed of the randomized property suite.
    pub seed: u64,
    /// Trials per check in the property suite.
    pub trials: usize,
    /// Time samples per period for coefficient-bound scans.
    pub time_samples: usize,
    /// Stored slices per period for converged orbits.
    pub orbit_samples: usize,
    /// Periods integrated by `simulate`.
    pub simulate_periods: usize,
    /// `simulate` stores every k-th step.
    pub store_every: usize,
    /// Fixed-point tolerance (sup norm) for orbit solves.
    pub tol: f64,
    /// Power-iteration residual tolerance.
    pub spectral_tol: f64,
    /// RK4 steps per period for spectral period maps.
    pub spectral_steps: usize,
    /// RK4 steps per period for forced planar solves.
    pub planar_steps: usize,
    /// Sup level under which the doomed species counts as extinct.
    pub extinction_tol: f64,
    /// Distance to the semitrivial fixed point the survivor must reach.
    pub survivor_tol: f64,
    /// Sup gap under which the two bracketing orbits count as one.
    pub match_tol: f64,
    /// Acceptance tolerance for the proportional-structure checks.
    pub uniqueness_tol: f64,
    /// Relative amplitude of the small corner component.
    pub epsilon: f64,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            dt: None,
            max_periods: 10_000,
            seed: 42,
            trials: 100,
            time_samples: 128,
            orbit_samples: 512,
            simulate_periods: 5,
            store_every: 10,
            tol: 1e-9,
            spectral_tol: 1e-13,
            spectral_steps: 500,
            planar_steps: 20_000,
            extinction_tol: 1e-6,
            survivor_tol: 1e-5,
            match_tol: 1e-7,
            uniqueness_tol: 1e-6,
            epsilon: 1e-3,
        }
    }
}

/// A parsed scenario plus the provenance of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub path: PathBuf,
    /// SHA-256 of the scenario file, quoted in every report.
    pub sha256: String,
    pub scenario: Scenario,
}

/// Reads, parses, and range-checks a scenario file. Parse errors carry
/// the offending key and line from the TOML parser.
pub fn load_scenario(path: &Path) -> CliResult<LoadedScenario> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Validation(format!("{} is not UTF-8: {e}", path.display())))?;
    let scenario: Scenario = toml::from_str(text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    scenario.check_ranges()?;
    let sha256 = hex_digest(&bytes);
    Ok(LoadedScenario {
        path: path.to_path_buf(),
        sha256,
        scenario,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn positive(name: &str, value: f64) -> CliResult<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(CliError::Validation(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

impl Scenario {
    /// Range checks beyond what serde enforces; every message names the
    /// offending key. Re-run after flag overrides.
    pub fn check_ranges(&self) -> CliResult<()> {
        positive("kernel.radius", self.kernel.radius)?;
        positive("system.nu1", self.system.nu1)?;
        positive("system.nu2", self.system.nu2)?;
        positive("system.period", self.system.period)?;
        let run = &self.run;
        if let Some(dt) = run.dt {
            positive("run.dt", dt)?;
            if dt > self.system.period / 16.0 {
                return Err(CliError::Validation(format!(
                    "run.dt = {dt} gives fewer than 16 steps per period {}",
                    self.system.period
                )));
            }
        }
        for (name, value) in [
            ("run.max_periods", run.max_periods),
            ("run.trials", run.trials),
            ("run.simulate_periods", run.simulate_periods),
            ("run.store_every", run.store_every),
            ("run.spectral_steps", run.spectral_steps),
            ("run.planar_steps", run.planar_steps),
        ] {
            if value == 0 {
                return Err(CliError::Validation(format!("{name} must be at least 1")));
            }
        }
        if run.time_samples < 64 {
            return Err(CliError::Validation(format!(
                "run.time_samples must be at least 64, got {}",
                run.time_samples
            )));
        }
        if run.orbit_samples < 4 {
            return Err(CliError::Validation(format!(
                "run.orbit_samples must be at least 4, got {}",
                run.orbit_samples
            )));
        }
        for (name, value) in [
            ("run.tol", run.tol),
            ("run.spectral_tol", run.spectral_tol),
            ("run.extinction_tol", run.extinction_tol),
            ("run.survivor_tol", run.survivor_tol),
            ("run.match_tol", run.match_tol),
            ("run.uniqueness_tol", run.uniqueness_tol),
            ("run.epsilon", run.epsilon),
        ] {
            positive(name, value)?;
        }
        if run.epsilon >= 1.0 {
            return Err(CliError::Validation(format!(
                "run.epsilon must be below 1, got {}",
                run.epsilon
            )));
        }
        if let Some(b) = &self.system.bounds {
            for (name, pair) in [
                ("system.bounds.a1", b.a1),
                ("system.bounds.a2", b.a2),
                ("system.bounds.b1", b.b1),
                ("system.bounds.b2", b.b2),
                ("system.bounds.c1", b.c1),
                ("system.bounds.c2", b.c2),
            ] {
                if let Some([lo, hi]) = pair {
                    if !lo.is_finite() || !hi.is_finite() || lo > hi {
                        return Err(CliError::Validation(format!(
                            "{name} must be a finite [lower, upper] pair, got [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> CliResult<Regime> {
        match self.grid.regime.to_ascii_lowercase().as_str() {
            "dirichlet" | "dirichlet_type" | "dirichlet-type" => Ok(Regime::DirichletType),
            "neumann" | "neumann_type" | "neumann-type" => Ok(Regime::NeumannType),
            "periodic" => Ok(Regime::Periodic),
            other => Err(CliError::Validation(format!(
                "grid.regime must be dirichlet, neumann, or periodic, got '{other}'"
            ))),
        }
    }

    pub fn profile(&self) -> CliResult<KernelProfile> {
        match self.kernel.profile.to_ascii_lowercase().as_str() {
            "smooth_bump" | "smooth-bump" => Ok(KernelProfile::SmoothBump),
            "cosine" => Ok(KernelProfile::Cosine),
            other => Err(CliError::Validation(format!(
                "kernel.profile must be smooth_bump or cosine, got '{other}'"
            ))),
        }
    }

    /// Builds the grid, kernel, and dispersal operator.
    pub fn operator(&self) -> CliResult<Arc<DispersalOperator<f64>>> {
        let regime = self.regime()?;
        let grid = build_grid(
            self.grid.dimension,
            self.grid.extents.clone(),
            self.grid.nodes.clone(),
            regime,
        )
        .map_err(|e| CliError::Validation(format!("grid: {e}")))?;
        let grid = Arc::new(grid);
        let kernel = build_kernel(&grid, self.kernel.radius, self.profile()?)
            .map_err(|e| CliError::Validation(format!("kernel: {e}")))?;
        let op = assemble_dispersal(&grid, &Arc::new(kernel))
            .map_err(|e| CliError::Validation(format!("kernel: {e}")))?;
        Ok(Arc::new(op))
    }

    fn coefficient(&self, key: &str, spec: &CoefficientSpec) -> CliResult<CoefficientField<f64>> {
        let period = self.system.period;
        match spec {
            CoefficientSpec::Number(v) => Ok(CoefficientField::constant(period, *v)),
            CoefficientSpec::Expression(src) => CoefficientField::from_expr(period, src)
                .map_err(|e| CliError::Validation(format!("system.{key}: {e}"))),
        }
    }

    /// Compiles the full two-species system.
    pub fn system(&self, op: Arc<DispersalOperator<f64>>) -> CliResult<SystemSpec64> {
        let sys = &self.system;
        SystemSpec64::new(
            op,
            sys.nu1,
            sys.nu2,
            sys.period,
            self.coefficient("a1", &sys.a1)?,
            self.coefficient("a2", &sys.a2)?,
            self.coefficient("b1", &sys.b1)?,
            self.coefficient("b2", &sys.b2)?,
            self.coefficient("c1", &sys.c1)?,
            self.coefficient("c2", &sys.c2)?,
        )
        .map_err(|e| CliError::Validation(format!("system: {e}")))
    }

    /// Scans the coefficient bounds and applies the declared exact bounds
    /// on top. The mesh scan must fall inside every declared pair (mesh
    /// extrema never exceed true extrema) — a scan escaping its declared
    /// bounds proves the declaration wrong and fails validation.
    pub fn resolve_bounds(
        &self,
        spec: &SystemSpec64,
    ) -> CliResult<(CoefficientBounds<f64>, Option<CoefficientBounds<f64>>)> {
        let scanned = spec
            .bounds(self.run.time_samples)
            .map_err(CliError::from)?;
        let Some(block) = &self.system.bounds else {
            return Ok((scanned, None));
        };
        let mut merged = scanned;
        let entries: [(&str, Option<[f64; 2]>, &mut Bound<f64>); 6] = [
            ("a1", block.a1, &mut merged.a1),
            ("a2", block.a2, &mut merged.a2),
            ("b1", block.b1, &mut merged.b1),
            ("b2", block.b2, &mut merged.b2),
            ("c1", block.c1, &mut merged.c1),
            ("c2", block.c2, &mut merged.c2),
        ];
        for (key, declared, slot) in entries {
            let Some([lo, hi]) = declared else { continue };
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            if slot.lower < lo - slack || slot.upper > hi + slack {
                return Err(CliError::Validation(format!(
                    "system.bounds.{key} declares [{lo}, {hi}] but the mesh scan reached \
                     [{}, {}]",
                    slot.lower, slot.upper
                )));
            }
            *slot = Bound {
                lower: lo,
                upper: hi,
            };
        }
        Ok((merged, Some(merged)))
    }

    /// Evaluates the optional initial block at t = 0 on the grid.
    pub fn initial_state(&self, spec: &SystemSpec64) -> CliResult<Option<StateField<f64>>> {
        let Some(block) = &self.initial else {
            return Ok(None);
        };
        let grid = spec.grid();
        let n = grid.len();
        let nodal = |key: &str, cs: &CoefficientSpec| -> CliResult<Vec<f64>> {
            let field = self.coefficient(key, cs).map_err(|e| match e {
                CliError::Validation(msg) => {
                    CliError::Validation(msg.replace("system.", "initial."))
                }
                other => other,
            })?;
            let mut out = vec![0.0f64; n];
            field.fill(0.0, grid, &mut out);
            for (i, &w) in out.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(CliError::Validation(format!(
                        "initial.{key} evaluates to {w} at node {i}; initial states must be \
                         finite and nonnegative"
                    )));
                }
            }
            Ok(out)
        };
        let u = nodal("u", &block.u)?;
        let v = nodal("v", &block.v)?;
        Ok(Some(StateField::new(0.0, u, v)))
    }

    /// Compiles the optional forced planar block.
    pub fn planar_system(&self) -> CliResult<ForcedPlanarSystem<f64>> {
        let Some(block) = &self.planar else {
            return Err(CliError::Validation(
                "this command needs a [planar] block, but the scenario has none".to_string(),
            ));
        };
        positive("planar.period", block.period)?;
        let tf = |key: &str, cs: &CoefficientSpec| -> CliResult<TimeFunction<f64>> {
            match cs {
                CoefficientSpec::Number(v) => Ok(TimeFunction::constant(block.period, *v)),
                CoefficientSpec::Expression(src) => TimeFunction::from_expr(block.period, src)
                    .map_err(|e| CliError::Validation(format!("planar.{key}: {e}"))),
            }
        };
        Ok(ForcedPlanarSystem {
            period: block.period,
            a1: tf("a1", &block.a1)?,
            a2: tf("a2", &block.a2)?,
            b1: tf("b1", &block.b1)?,
            b2: tf("b2", &block.b2)?,
            c1: tf("c1", &block.c1)?,
            c2: tf("c2", &block.c2)?,
            d1: tf("d1", &block.d1)?,
            d2: tf("d2", &block.d2)?,
        })
    }

    /// Integration step: explicit `run.dt` or the period/2000 default.
    pub fn dt(&self) -> f64 {
        self.run
            .dt
            .unwrap_or(self.system.period / 2000.0)
    }

    /// Whole RK4 steps per period implied by the step size.
    pub fn steps_per_period(&self) -> usize {
        ((self.system.period / self.dt()).round() as usize).max(16)
    }

    pub fn integrate_options(&self) -> IntegrateOptions<f64> {
        let mut opts = IntegrateOptions::new(self.dt());
        opts.store_stride = self.run.store_every;
        opts
    }

    pub fn scalar_options(&self) -> ScalarSolveOptions<f64> {
        ScalarSolveOptions {
            steps_per_period: self.steps_per_period(),
            tol: self.run.tol,
            max_periods: self.run.max_periods,
            orbit_samples: self.run.orbit_samples,
            ..ScalarSolveOptions::default()
        }
    }

    pub fn spectral_options(&self) -> SpectralOptions<f64> {
        SpectralOptions {
            steps_per_period: self.run.spectral_steps,
            tol: self.run.spectral_tol,
            ..SpectralOptions::default()
        }
    }

    pub fn criteria_options(
        &self,
        bounds_override: Option<CoefficientBounds<f64>>,
    ) -> CriteriaOptions<f64> {
        CriteriaOptions {
            time_samples: self.run.time_samples,
            spectral: self.spectral_options(),
            scalar: self.scalar_options(),
            compute_invasion: true,
            bounds_override,
        }
    }

    pub fn coexistence_options(&self) -> CoexistenceOptions<f64> {
        CoexistenceOptions {
            scalar: self.scalar_options(),
            spectral: self.spectral_options(),
            epsilon_scale: self.run.epsilon,
            match_tol: self.run.match_tol,
            ..CoexistenceOptions::default()
        }
    }

    pub fn extinction_options(
        &self,
        bounds_override: Option<CoefficientBounds<f64>>,
    ) -> ExtinctionOptions<f64> {
        ExtinctionOptions {
            steps_per_period: self.steps_per_period(),
            max_periods: self.run.max_periods,
            extinction_tol: self.run.extinction_tol,
            u_tol: self.run.survivor_tol,
            scalar: self.scalar_options(),
            spectral: self.spectral_options(),
            bounds_override,
            ..ExtinctionOptions::default()
        }
    }

    pub fn planar_options(&self) -> PlanarOptions<f64> {
        PlanarOptions {
            steps_per_period: self.run.planar_steps,
            max_periods: self.run.max_periods,
            orbit_samples: self.run.orbit_samples,
            match_tol: self.run.match_tol,
            ..PlanarOptions::default()
        }
    }
}
