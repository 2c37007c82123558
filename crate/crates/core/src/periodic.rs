//! Periodic orbits and the coexistence/extinction criteria built on them.
//!
//! Everything here rests on monotonicity of the period (Poincare) map:
//!
//! * scalar logistic-type problems are solved by iterating the period map
//!   downward from a constant super-solution until the iterates stall at
//!   the maximal fixed point, which is the positive periodic orbit when
//!   one exists and zero otherwise;
//! * two-species coexistence states are bracketed between the limits of
//!   two corner iterations that move monotonically in the competitive
//!   order, one downward from (big u, small v) and one upward from
//!   (small u, big v);
//! * extinction is demonstrated dynamically and certified by the sign of
//!   the invader's principal spectrum point along the resident orbit.
//!
//! Monotonicity is asserted at every iterate rather than assumed: a
//! violation beyond slack aborts with an error, because it means the
//! candidate corner was not actually a super/sub-solution pair.

use std::sync::Arc;

use crate::domain::DispersalOperator;
use crate::dynamics::{poincare_map, sanitize_state, SystemSpec, CLAMP_TOL};
use crate::error::{Error, Result};
use crate::fields::{
    order_compare, CoefficientBounds, CoefficientField, CompiledField, Order, SampledField,
    StateField,
};
use crate::linalg::{rk4_advance, Rk4Workspace};
use crate::scalar::{real, real_of_usize, sup_distance, sup_norm, Real};
use crate::spectral::{principal_spectrum_point, SpectralOptions, SpectralResult};

/// Options for the scalar periodic solves.
#[derive(Debug, Clone, Copy)]
pub struct ScalarSolveOptions<F> {
    /// RK4 steps per period.
    pub steps_per_period: usize,
    /// Stop when successive period-map iterates differ by less than this
    /// in sup norm.
    pub tol: F,
    /// Give up (as unresolved) after this many periods.
    pub max_periods: usize,
    /// Stored time samples of the converged orbit.
    pub orbit_samples: usize,
    /// A converged orbit whose minimum falls below `floor_scale * sup` is
    /// rejected as not uniformly positive.
    pub floor_scale: F,
}

/// A converged scalar fixed point whose sup falls this far below the
/// constant super-solution is classified as decay to zero: iterates
/// descend from the ceiling toward the maximal fixed point, so a genuine
/// positive orbit keeps them on the orbit's own scale, while subcritical
/// problems drift arbitrarily low.
pub const DECAY_SCALE: f64 = 1e-4;

impl<F: Real> Default for ScalarSolveOptions<F> {
    fn default() -> Self {
        ScalarSolveOptions {
            steps_per_period: crate::dynamics::DEFAULT_STEPS_PER_PERIOD,
            tol: real(1e-9),
            max_periods: 10_000,
            orbit_samples: 512,
            floor_scale: real(1e-8),
        }
    }
}

/// Internal stepper for `u_t = nu (A u) + u (a - b u)`.
struct ScalarStepper<F: Real> {
    op: Arc<DispersalOperator<F>>,
    nu: F,
    period: F,
    ca: CompiledField<F>,
    cb: CompiledField<F>,
    steps: usize,
    ws: Rk4Workspace<F>,
    abuf: Vec<F>,
    bbuf: Vec<F>,
}

impl<F: Real> ScalarStepper<F> {
    fn new(
        op: &Arc<DispersalOperator<F>>,
        nu: F,
        a: &CoefficientField<F>,
        b: &CoefficientField<F>,
        steps: usize,
    ) -> Result<Self> {
        if !(nu > F::zero()) || !nu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dispersal rate must be positive and finite, got {nu}"
            )));
        }
        if a.period() != b.period() {
            return Err(Error::InvalidInput(format!(
                "coefficient periods disagree: {} vs {}",
                a.period(),
                b.period()
            )));
        }
        let n = op.grid().len();
        Ok(ScalarStepper {
            op: Arc::clone(op),
            nu,
            period: a.period(),
            ca: CompiledField::compile(a, op.grid()),
            cb: CompiledField::compile(b, op.grid()),
            steps,
            ws: Rk4Workspace::new(n),
            abuf: vec![F::zero(); n],
            bbuf: vec![F::zero(); n],
        })
    }

    /// Advances `u` over one period in place; `sample_every > 0` pushes a
    /// copy of the state every that many steps (starting with step 0).
    fn advance_period(
        &mut self,
        u: &mut [F],
        sample_every: usize,
        samples: &mut Vec<Vec<F>>,
    ) -> Result<()> {
        let n = u.len();
        let dt = self.period / real_of_usize::<F>(self.steps);
        if sample_every > 0 {
            samples.push(u.to_vec());
        }
        let op = Arc::clone(&self.op);
        let grid = op.grid().clone();
        let nu = self.nu;
        let (ca, cb) = (&self.ca, &self.cb);
        let (abuf, bbuf) = (&mut self.abuf, &mut self.bbuf);
        let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
            op.apply(y, dy);
            ca.fill(t, &grid, abuf);
            cb.fill(t, &grid, bbuf);
            for i in 0..n {
                dy[i] = nu * dy[i] + y[i] * (abuf[i] - bbuf[i] * y[i]);
            }
        };
        let mut step = 0usize;
        let clamp = real::<F>(CLAMP_TOL);
        let mut on_step = |t: F, y: &mut [F]| -> Result<()> {
            sanitize_state(y, t, n, clamp)?;
            step += 1;
            if sample_every > 0 && step < self.steps && step % sample_every == 0 {
                samples.push(y.to_vec());
            }
            Ok(())
        };
        rk4_advance(u, F::zero(), self.period, dt, &mut self.ws, &mut deriv, &mut on_step)
    }
}

/// A positive periodic orbit of one scalar logistic-type problem,
/// together with the data that produced it.
#[derive(Debug, Clone)]
pub struct ScalarOrbit<F: Real> {
    op: Arc<DispersalOperator<F>>,
    nu: F,
    a: CoefficientField<F>,
    b: CoefficientField<F>,
    orbit: Arc<SampledField<F>>,
    fixed_point: Vec<F>,
    sup: F,
    inf: F,
    periods: usize,
    delta: F,
}

impl<F: Real> ScalarOrbit<F> {
    pub fn nu(&self) -> F {
        self.nu
    }

    pub fn growth(&self) -> &CoefficientField<F> {
        &self.a
    }

    pub fn self_limitation(&self) -> &CoefficientField<F> {
        &self.b
    }

    pub fn orbit(&self) -> &Arc<SampledField<F>> {
        &self.orbit
    }

    /// Nodal values at phase zero (the period-map fixed point).
    pub fn fixed_point(&self) -> &[F] {
        &self.fixed_point
    }

    pub fn sup(&self) -> F {
        self.sup
    }

    pub fn inf(&self) -> F {
        self.inf
    }

    /// Periods iterated before the fixed point resolved.
    pub fn periods(&self) -> usize {
        self.periods
    }

    /// Final sup-norm change between period-map iterates.
    pub fn delta(&self) -> F {
        self.delta
    }

    /// Nodal values at an arbitrary time (periodic cubic interpolation).
    pub fn state_at(&self, t: F) -> Vec<F> {
        let mut out = vec![F::zero(); self.orbit.len_space()];
        self.orbit.fill(t, &mut out);
        out
    }

    /// The spectrum point of the problem linearized at this orbit,
    /// `lambda(nu, a - b * orbit)`. Exactly zero in exact arithmetic: the
    /// orbit itself is the positive eigenfunction.
    pub fn zero_certificate(&self, options: SpectralOptions<F>) -> Result<SpectralResult<F>> {
        let l = CoefficientField::linearized(&self.a, &self.b, Arc::clone(&self.orbit));
        principal_spectrum_point(&self.op, self.nu, &l, options)
    }
}

/// Solves `u_t = nu (A u) + u (a - b u)` for its positive periodic orbit
/// by monotone period-map iteration from a constant super-solution.
///
/// Fails with a hypothesis error when the iterates decay to zero, i.e.
/// when the problem has no positive periodic state.
pub fn solve_scalar_periodic<F: Real>(
    op: &Arc<DispersalOperator<F>>,
    nu: F,
    a: &CoefficientField<F>,
    b: &CoefficientField<F>,
    options: ScalarSolveOptions<F>,
) -> Result<ScalarOrbit<F>> {
    let grid = op.grid();
    let n = grid.len();
    let a_bounds = crate::fields::field_bounds(a, grid, 64)?;
    let b_bounds = crate::fields::field_bounds(b, grid, 64)?;
    if !(b_bounds.lower > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "self-limitation coefficient must be strictly positive; mesh minimum is {}",
            b_bounds.lower
        )));
    }

    // Constant super-solution: above every growth/limitation balance, so
    // the period map pulls it monotonically downward.
    let ceiling = a_bounds.upper.max(F::zero()) / b_bounds.lower + F::one();
    let mut stepper = ScalarStepper::new(op, nu, a, b, options.steps_per_period)?;
    let mut u = vec![ceiling; n];
    let mut scratch = Vec::new();

    let mut periods = 0usize;
    let mut delta = F::infinity();
    let decay_floor = real::<F>(DECAY_SCALE) * ceiling * real(0.1);
    while periods < options.max_periods {
        let prev = u.clone();
        stepper.advance_period(&mut u, 0, &mut scratch)?;
        periods += 1;
        delta = sup_distance(&prev, &u);
        // Monotone decrease is guaranteed for a super-solution start; a
        // violation beyond integrator noise means the setup is broken.
        let mut rise = F::zero();
        for i in 0..n {
            rise = rise.max(u[i] - prev[i]);
        }
        if rise > real::<F>(1e-9) * (F::one() + ceiling) {
            return Err(Error::Monotonicity(format!(
                "scalar period-map iterates rose by {rise} at period {periods}; \
                 the constant start was not a super-solution"
            )));
        }
        if sup_norm(&u) < decay_floor {
            return Err(Error::Hypothesis(format!(
                "no positive periodic state: iterates decayed below {decay_floor} \
                 after {periods} periods"
            )));
        }
        if delta < options.tol {
            break;
        }
    }
    if delta >= options.tol {
        return Err(Error::Unresolved {
            periods,
            delta: crate::scalar::to_f64(delta),
        });
    }

    let sup = sup_norm(&u);
    if sup < real::<F>(DECAY_SCALE) * ceiling {
        return Err(Error::Hypothesis(format!(
            "no positive periodic state: the maximal fixed point has sup {sup}, \
             far below the super-solution scale {ceiling}"
        )));
    }

    // Store one period of the converged orbit on a sample mesh the step
    // count divides evenly.
    let m = options.orbit_samples.max(4);
    let steps = options.steps_per_period.div_ceil(m) * m;
    let mut sampler = ScalarStepper::new(op, nu, a, b, steps)?;
    let mut fixed_point = u.clone();
    let mut samples = Vec::with_capacity(m);
    sampler.advance_period(&mut u, steps / m, &mut samples)?;
    let closure = sup_distance(&fixed_point, &u);
    if closure > real::<F>(10.0) * options.tol {
        return Err(Error::Unresolved {
            periods,
            delta: crate::scalar::to_f64(closure),
        });
    }
    // Use the better-converged return state as the fixed point.
    fixed_point.copy_from_slice(&u);
    samples[0].copy_from_slice(&u);
    let orbit = SampledField::new(a.period(), samples)?;
    let inf = orbit.min_value();
    if !(inf > sup * options.floor_scale) {
        return Err(Error::Hypothesis(format!(
            "periodic state is not uniformly positive: min {inf} vs sup {sup}"
        )));
    }

    Ok(ScalarOrbit {
        op: Arc::clone(op),
        nu,
        a: a.clone(),
        b: b.clone(),
        orbit: Arc::new(orbit),
        fixed_point,
        sup,
        inf,
        periods,
        delta,
    })
}

/// The two single-species periodic orbits of a competition system: the
/// first species alone and the second species alone.
#[derive(Debug, Clone)]
pub struct Semitrivials<F: Real> {
    pub u_star: ScalarOrbit<F>,
    pub v_star: ScalarOrbit<F>,
}

/// Solves both semitrivial problems of `spec`.
pub fn semitrivial_orbits<F: Real>(
    spec: &SystemSpec<F>,
    options: ScalarSolveOptions<F>,
) -> Result<Semitrivials<F>> {
    let u_star = solve_scalar_periodic(spec.op(), spec.nu1(), spec.a1(), spec.b1(), options)?;
    let v_star = solve_scalar_periodic(spec.op(), spec.nu2(), spec.a2(), spec.c2(), options)?;
    Ok(Semitrivials { u_star, v_star })
}

/// One scalar inequality of a criterion: `value > threshold` (or `>=`
/// where noted by the caller), with the margin made explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionMargin<F> {
    pub value: F,
    pub threshold: F,
    pub margin: F,
    pub holds: bool,
}

impl<F: Real> CriterionMargin<F> {
    fn strict(value: F, threshold: F) -> Self {
        CriterionMargin {
            value,
            threshold,
            margin: value - threshold,
            holds: value > threshold,
        }
    }

    fn weak(value: F, threshold: F) -> Self {
        CriterionMargin {
            value,
            threshold,
            margin: value - threshold,
            holds: value >= threshold,
        }
    }
}

/// Margin-based coexistence test: each species must out-grow the worst
/// pressure the other can exert, with the dispersal penalty included
/// through the zero-coefficient spectrum point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoexistenceCriteria<F> {
    /// `inf a1 + lambda(nu1, 0)  >  sup c1 * sup a2 / inf c2`.
    pub species1: CriterionMargin<F>,
    /// `inf a2 + lambda(nu2, 0)  >  sup b2 * sup a1 / inf b1`.
    pub species2: CriterionMargin<F>,
    pub holds: bool,
}

/// Pointwise coexistence test for equal rates and identical growth: the
/// first species limits itself harder than it limits the second, and
/// suffers less cross-competition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseCriteria<F> {
    pub rates_equal: bool,
    pub growths_match: bool,
    /// `inf b1 > sup b2`.
    pub b_separated: CriterionMargin<F>,
    /// `inf c2 > sup c1`.
    pub c_separated: CriterionMargin<F>,
    pub holds: bool,
}

/// Margin-based extinction test for the second species.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionCriteria<F> {
    /// `inf a1 > sup c1 * sup a2 / inf c2` (first species persists).
    pub resident_persists: CriterionMargin<F>,
    /// `sup a2 <= inf a1 * inf b2 / sup b1` (second species is capped).
    pub invader_capped: CriterionMargin<F>,
    /// `inf a1 >= sup a2`.
    pub growth_order: CriterionMargin<F>,
    pub rates_equal: bool,
    pub holds: bool,
}

/// The planar-reduction ratio condition `inf b1 / sup b2 > sup c1 / inf c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCondition<F> {
    pub lhs: F,
    pub rhs: F,
    pub holds: bool,
}

/// Spectrum points along the semitrivial orbits: invasion indicators and
/// the zero certificates of the orbits themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvasionIndicators<F> {
    /// `lambda(nu2, a2 - b2 u*)`: can the second species invade `(u*, 0)`.
    pub lambda_v_at_u_orbit: F,
    /// `lambda(nu1, a1 - c1 v*)`: can the first species invade `(0, v*)`.
    pub lambda_u_at_v_orbit: F,
    /// `lambda(nu1, a1 - b1 u*)`; zero up to discretization error.
    pub u_orbit_certificate: F,
    /// `lambda(nu2, a2 - c2 v*)`; zero up to discretization error.
    pub v_orbit_certificate: F,
}

/// What the margins predict for generic positive initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Coexistence,
    ExtinctionOfSecond,
    Inconclusive,
}

impl Prediction {
    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::Coexistence => "coexistence",
            Prediction::ExtinctionOfSecond => "extinction-of-second",
            Prediction::Inconclusive => "inconclusive",
        }
    }
}

/// Full criteria evaluation of one system.
#[derive(Debug, Clone)]
pub struct CriteriaReport<F: Real> {
    pub bounds: CoefficientBounds<F>,
    /// Spectrum points of the pure dispersal problems (`l = 0`).
    pub lambda_zero_1: F,
    pub lambda_zero_2: F,
    pub coexistence: CoexistenceCriteria<F>,
    pub pointwise: PointwiseCriteria<F>,
    pub extinction: ExtinctionCriteria<F>,
    pub ratio: RatioCondition<F>,
    /// Present when the semitrivial orbits exist and were requested.
    pub invasion: Option<InvasionIndicators<F>>,
    pub prediction: Prediction,
}

/// Options for [`evaluate_criteria`].
#[derive(Debug, Clone, Copy)]
pub struct CriteriaOptions<F> {
    /// Time samples for the coefficient bounds mesh.
    pub time_samples: usize,
    pub spectral: SpectralOptions<F>,
    pub scalar: ScalarSolveOptions<F>,
    /// Also compute the invasion spectrum points (requires two scalar
    /// orbit solves).
    pub compute_invasion: bool,
    /// Exact analytic coefficient bounds, replacing the mesh scan so the
    /// margin inequalities are tested with exact constants.
    pub bounds_override: Option<CoefficientBounds<F>>,
}

impl<F: Real> Default for CriteriaOptions<F> {
    fn default() -> Self {
        CriteriaOptions {
            time_samples: 128,
            spectral: SpectralOptions::default(),
            scalar: ScalarSolveOptions::default(),
            compute_invasion: true,
            bounds_override: None,
        }
    }
}

fn rates_equal<F: Real>(nu1: F, nu2: F) -> bool {
    (nu1 - nu2).abs() <= real::<F>(1e-12) * (F::one() + nu1.abs())
}

/// Sup distance between two coefficients over the evaluation mesh.
fn field_sup_difference<F: Real>(
    f: &CoefficientField<F>,
    g: &CoefficientField<F>,
    grid: &crate::domain::Grid<F>,
    time_samples: usize,
) -> F {
    let n = grid.len();
    let mut fb = vec![F::zero(); n];
    let mut gb = vec![F::zero(); n];
    let mut worst = F::zero();
    for k in 0..time_samples {
        let t = f.period() * real_of_usize::<F>(k) / real_of_usize::<F>(time_samples);
        f.fill(t, grid, &mut fb);
        g.fill(t, grid, &mut gb);
        worst = worst.max(sup_distance(&fb, &gb));
    }
    worst
}

pub(crate) fn extinction_criteria<F: Real>(
    bounds: &CoefficientBounds<F>,
    nu1: F,
    nu2: F,
) -> ExtinctionCriteria<F> {
    let resident_persists = CriterionMargin::strict(
        bounds.a1.lower,
        bounds.c1.upper * bounds.a2.upper / bounds.c2.lower,
    );
    let invader_capped = CriterionMargin::weak(
        bounds.a1.lower * bounds.b2.lower / bounds.b1.upper,
        bounds.a2.upper,
    );
    let growth_order = CriterionMargin::weak(bounds.a1.lower, bounds.a2.upper);
    let eq = rates_equal(nu1, nu2);
    let holds = resident_persists.holds && invader_capped.holds && growth_order.holds && eq;
    ExtinctionCriteria {
        resident_persists,
        invader_capped,
        growth_order,
        rates_equal: eq,
        holds,
    }
}

/// Evaluates every margin criterion and (optionally) the invasion
/// spectrum points of one system.
pub fn evaluate_criteria<F: Real>(
    spec: &SystemSpec<F>,
    options: CriteriaOptions<F>,
) -> Result<CriteriaReport<F>> {
    let bounds = match options.bounds_override {
        Some(b) => b,
        None => spec.bounds(options.time_samples)?,
    };
    let zero = CoefficientField::constant(spec.period(), F::zero());
    let lambda_zero_1 =
        principal_spectrum_point(spec.op(), spec.nu1(), &zero, options.spectral)?.lambda;
    let lambda_zero_2 =
        principal_spectrum_point(spec.op(), spec.nu2(), &zero, options.spectral)?.lambda;

    let species1 = CriterionMargin::strict(
        bounds.a1.lower + lambda_zero_1,
        bounds.c1.upper * bounds.a2.upper / bounds.c2.lower,
    );
    let species2 = CriterionMargin::strict(
        bounds.a2.lower + lambda_zero_2,
        bounds.b2.upper * bounds.a1.upper / bounds.b1.lower,
    );
    let coexistence = CoexistenceCriteria {
        species1,
        species2,
        holds: species1.holds && species2.holds,
    };

    let eq = rates_equal(spec.nu1(), spec.nu2());
    let growth_gap =
        field_sup_difference(spec.a1(), spec.a2(), spec.grid(), options.time_samples);
    let growths_match = growth_gap <= real::<F>(1e-10) * (F::one() + bounds.a1.upper.abs());
    let b_separated = CriterionMargin::strict(bounds.b1.lower, bounds.b2.upper);
    let c_separated = CriterionMargin::strict(bounds.c2.lower, bounds.c1.upper);
    let pointwise = PointwiseCriteria {
        rates_equal: eq,
        growths_match,
        b_separated,
        c_separated,
        holds: eq && growths_match && b_separated.holds && c_separated.holds,
    };

    let extinction = extinction_criteria(&bounds, spec.nu1(), spec.nu2());

    let ratio = {
        let lhs = bounds.b1.lower / bounds.b2.upper;
        let rhs = bounds.c1.upper / bounds.c2.lower;
        RatioCondition {
            lhs,
            rhs,
            holds: lhs > rhs,
        }
    };

    let invasion = if options.compute_invasion {
        match semitrivial_orbits(spec, options.scalar) {
            Ok(semi) => {
                let lu = CoefficientField::linearized(
                    spec.a2(),
                    spec.b2(),
                    Arc::clone(semi.u_star.orbit()),
                );
                let lv = CoefficientField::linearized(
                    spec.a1(),
                    spec.c1(),
                    Arc::clone(semi.v_star.orbit()),
                );
                let lambda_v =
                    principal_spectrum_point(spec.op(), spec.nu2(), &lu, options.spectral)?;
                let lambda_u =
                    principal_spectrum_point(spec.op(), spec.nu1(), &lv, options.spectral)?;
                Some(InvasionIndicators {
                    lambda_v_at_u_orbit: lambda_v.lambda,
                    lambda_u_at_v_orbit: lambda_u.lambda,
                    u_orbit_certificate: semi.u_star.zero_certificate(options.spectral)?.lambda,
                    v_orbit_certificate: semi.v_star.zero_certificate(options.spectral)?.lambda,
                })
            }
            // A missing semitrivial orbit is informative, not fatal: the
            // margins still classify the system.
            Err(Error::Hypothesis(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let coexists = coexistence.holds || pointwise.holds;
    let prediction = if coexists && extinction.holds {
        // Mutually exclusive in exact arithmetic; if rounding puts a
        // system on both sides, refuse to call it.
        Prediction::Inconclusive
    } else if coexists {
        Prediction::Coexistence
    } else if extinction.holds {
        Prediction::ExtinctionOfSecond
    } else {
        Prediction::Inconclusive
    };

    Ok(CriteriaReport {
        bounds,
        lambda_zero_1,
        lambda_zero_2,
        coexistence,
        pointwise,
        extinction,
        ratio,
        invasion,
        prediction,
    })
}

/// A two-species periodic orbit stored as sampled fields plus its
/// period-map fixed point at phase zero.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit<F: Real> {
    pub u: Arc<SampledField<F>>,
    pub v: Arc<SampledField<F>>,
    pub fixed_point: StateField<F>,
    pub periods: usize,
    pub delta: F,
}

impl<F: Real> PeriodicOrbit<F> {
    pub fn state_at(&self, t: F) -> StateField<F> {
        let n = self.u.len_space();
        let mut u = vec![F::zero(); n];
        let mut v = vec![F::zero(); n];
        self.u.fill(t, &mut u);
        self.v.fill(t, &mut v);
        StateField::new(t, u, v)
    }
}

/// Which construction seeded a corner of the coexistence bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CornerBasis {
    /// Positive eigenfunction of the autonomous operator with the
    /// worst-case constant growth (valid when its spectrum point is
    /// positive).
    AutonomousEigenfunction,
    /// The invader's own semitrivial profile, scaled down.
    SemitrivialProportional,
    /// The resident's profile, scaled down (equal-growth systems).
    CrossProportional,
}

impl CornerBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            CornerBasis::AutonomousEigenfunction => "autonomous-eigenfunction",
            CornerBasis::SemitrivialProportional => "semitrivial-proportional",
            CornerBasis::CrossProportional => "cross-proportional",
        }
    }
}

/// How one corner was built and how cleanly its first period-map step
/// moved inward.
#[derive(Debug, Clone, Copy)]
pub struct CornerDiagnostics<F> {
    pub basis: CornerBasis,
    pub epsilon: F,
    pub shrink_steps: usize,
    /// Worst order violation of the one-step inwardness check (must be
    /// within slack).
    pub one_step_violation: F,
}

/// Options for [`coexistence_iterate`].
#[derive(Debug, Clone, Copy)]
pub struct CoexistenceOptions<F> {
    pub scalar: ScalarSolveOptions<F>,
    pub spectral: SpectralOptions<F>,
    /// Initial corner amplitude relative to the resident minimum.
    pub epsilon_scale: F,
    /// How many times to shrink epsilon by 10 when the one-step check
    /// fails.
    pub epsilon_shrinks: usize,
    /// Order slack for the monotonicity checks.
    pub order_slack: F,
    /// The two limits are reported as coinciding when their fixed points
    /// agree within this.
    pub match_tol: F,
}

impl<F: Real> Default for CoexistenceOptions<F> {
    fn default() -> Self {
        CoexistenceOptions {
            scalar: ScalarSolveOptions::default(),
            spectral: SpectralOptions::default(),
            epsilon_scale: real(1e-3),
            epsilon_shrinks: 6,
            order_slack: real(1e-10),
            match_tol: real(1e-7),
        }
    }
}

/// Result of the two-corner coexistence bracketing.
#[derive(Debug, Clone)]
pub struct CoexistenceOutcome<F: Real> {
    /// Limit of the (resident u, small v) corner: largest u, smallest v.
    pub upper: PeriodicOrbit<F>,
    /// Limit of the (small u, resident v) corner: smallest u, largest v.
    pub lower: PeriodicOrbit<F>,
    /// Sup distance between the two limits at phase zero.
    pub gap: F,
    /// Whether the limits agree within the match tolerance (numerically
    /// unique coexistence state).
    pub coincide: bool,
    /// Whether both limits are uniformly positive in both components.
    pub positive: bool,
    pub upper_corner: CornerDiagnostics<F>,
    pub lower_corner: CornerDiagnostics<F>,
    pub semitrivials: Semitrivials<F>,
}

/// Direction of a monotone corner iteration in the competitive order.
#[derive(Clone, Copy, PartialEq, Eq)]
enum IterDirection {
    Decreasing,
    Increasing,
}

/// Iterates the period map from a corner, asserting monotonicity in the
/// competitive order each period, until the iterates stall.
fn monotone_orbit_iteration<F: Real>(
    spec: &SystemSpec<F>,
    corner: StateField<F>,
    direction: IterDirection,
    dt: F,
    tol: F,
    slack: F,
    max_periods: usize,
) -> Result<(StateField<F>, usize, F)> {
    let mut current = corner;
    let mut periods = 0usize;
    let mut delta = F::infinity();
    while periods < max_periods {
        let next = poincare_map(spec, &current, dt)?;
        periods += 1;
        let check = match direction {
            IterDirection::Decreasing => order_compare(&next, &current, Order::Competitive, slack),
            IterDirection::Increasing => order_compare(&current, &next, Order::Competitive, slack),
        };
        if !check.holds {
            return Err(Error::Monotonicity(format!(
                "corner iteration lost monotonicity at period {periods} \
                 (violation {}, node {}, component {})",
                check.worst_violation, check.witness.node, check.witness.component,
            )));
        }
        delta = current.sup_distance(&next);
        current = next;
        if delta < tol {
            return Ok((current, periods, delta));
        }
    }
    Err(Error::Unresolved {
        periods,
        delta: crate::scalar::to_f64(delta),
    })
}

/// Integrates one period from a fixed point, storing a sampled orbit.
fn sample_orbit<F: Real>(
    spec: &SystemSpec<F>,
    fixed_point: &StateField<F>,
    steps_per_period: usize,
    m: usize,
    periods: usize,
    delta: F,
) -> Result<PeriodicOrbit<F>> {
    let m = m.max(4);
    let steps = steps_per_period.div_ceil(m) * m;
    let dt = spec.period() / real_of_usize::<F>(steps);
    let stride = steps / m;
    let traj = crate::dynamics::integrate(
        spec,
        fixed_point,
        F::zero(),
        spec.period(),
        crate::dynamics::IntegrateOptions::new(dt).with_stride(stride),
    )?;
    let states = traj.states();
    // integrate stores the start plus every stride-th step: exactly the
    // m in-period samples followed by the period end.
    let mut us = Vec::with_capacity(m);
    let mut vs = Vec::with_capacity(m);
    for s in states.iter().take(m) {
        us.push(s.u.clone());
        vs.push(s.v.clone());
    }
    let orbit_u = SampledField::new(spec.period(), us)?;
    let orbit_v = SampledField::new(spec.period(), vs)?;
    Ok(PeriodicOrbit {
        u: Arc::new(orbit_u),
        v: Arc::new(orbit_v),
        fixed_point: fixed_point.clone(),
        periods,
        delta,
    })
}

/// Candidate small-component profiles for one corner, most principled
/// first. Shapes are sup-normalized.
fn corner_shapes<F: Real>(
    spec: &SystemSpec<F>,
    invader_is_v: bool,
    semis: &Semitrivials<F>,
    bounds: &CoefficientBounds<F>,
    spectral: SpectralOptions<F>,
) -> Result<Vec<(CornerBasis, Vec<F>)>> {
    let mut shapes = Vec::new();
    // Worst-case constant growth of the invader beneath the resident
    // orbit; a positive spectrum point of the autonomous operator
    // nu [A] + const makes its eigenfunction a growing seed.
    let (nu, constant) = if invader_is_v {
        (
            spec.nu2(),
            bounds.a2.lower - bounds.b2.upper * semis.u_star.sup(),
        )
    } else {
        (
            spec.nu1(),
            bounds.a1.lower - bounds.c1.upper * semis.v_star.sup(),
        )
    };
    let autonomous = CoefficientField::constant(spec.period(), constant);
    let res = principal_spectrum_point(spec.op(), nu, &autonomous, spectral)?;
    if res.lambda > res.gap_tol {
        shapes.push((CornerBasis::AutonomousEigenfunction, res.perron.clone()));
    }
    // The invader's own single-species profile.
    let own = if invader_is_v {
        semis.v_star.fixed_point().to_vec()
    } else {
        semis.u_star.fixed_point().to_vec()
    };
    shapes.push((CornerBasis::SemitrivialProportional, normalized(own)));
    // The resident's profile (useful when growths are identical).
    let cross = if invader_is_v {
        semis.u_star.fixed_point().to_vec()
    } else {
        semis.v_star.fixed_point().to_vec()
    };
    shapes.push((CornerBasis::CrossProportional, normalized(cross)));
    Ok(shapes)
}

fn normalized<F: Real>(mut v: Vec<F>) -> Vec<F> {
    let sup = sup_norm(&v);
    if sup > F::zero() {
        v.iter_mut().for_each(|x| *x = *x / sup);
    }
    v
}

/// Finds a corner that the period map moves inward, shrinking epsilon
/// until the one-step check passes.
#[allow(clippy::too_many_arguments)]
fn find_corner<F: Real>(
    spec: &SystemSpec<F>,
    resident: &[F],
    shapes: &[(CornerBasis, Vec<F>)],
    invader_is_v: bool,
    resident_min: F,
    dt: F,
    options: &CoexistenceOptions<F>,
) -> Result<(StateField<F>, CornerDiagnostics<F>)> {
    let mut last_violation = F::infinity();
    for (basis, shape) in shapes {
        let mut eps = options.epsilon_scale * resident_min;
        for shrink in 0..=options.epsilon_shrinks {
            let small: Vec<F> = shape.iter().map(|&s| eps * s).collect();
            let corner = if invader_is_v {
                StateField::new(F::zero(), resident.to_vec(), small)
            } else {
                StateField::new(F::zero(), small, resident.to_vec())
            };
            let mapped = poincare_map(spec, &corner, dt)?;
            // Inward means decreasing from the (big u, small v) corner and
            // increasing from the (small u, big v) corner.
            let check = if invader_is_v {
                order_compare(&mapped, &corner, Order::Competitive, options.order_slack)
            } else {
                order_compare(&corner, &mapped, Order::Competitive, options.order_slack)
            };
            if check.holds {
                return Ok((
                    corner,
                    CornerDiagnostics {
                        basis: *basis,
                        epsilon: eps,
                        shrink_steps: shrink,
                        one_step_violation: check.worst_violation,
                    },
                ));
            }
            last_violation = check.worst_violation;
            eps = eps * real(0.1);
        }
    }
    Err(Error::Hypothesis(format!(
        "no corner moved inward under the period map (last violation {last_violation}); \
         the system does not satisfy the coexistence construction"
    )))
}

/// Brackets the coexistence state between two monotone corner iterations.
///
/// Both semitrivial orbits must exist. The returned limits satisfy
/// `lower.u <= upper.u` and `upper.v <= lower.v` nodewise; when they
/// coincide the system has a (numerically) unique coexistence orbit.
pub fn coexistence_iterate<F: Real>(
    spec: &SystemSpec<F>,
    options: CoexistenceOptions<F>,
) -> Result<CoexistenceOutcome<F>> {
    let semis = semitrivial_orbits(spec, options.scalar)?;
    let bounds = spec.bounds(128)?;
    let dt = spec.period() / real_of_usize::<F>(options.scalar.steps_per_period);

    // Upper corner: resident u at full strength, invader v small.
    let shapes_v = corner_shapes(spec, true, &semis, &bounds, options.spectral)?;
    let (upper_corner, upper_diag) = find_corner(
        spec,
        semis.u_star.fixed_point(),
        &shapes_v,
        true,
        semis.u_star.inf(),
        dt,
        &options,
    )?;
    let (upper_fp, upper_periods, upper_delta) = monotone_orbit_iteration(
        spec,
        upper_corner,
        IterDirection::Decreasing,
        dt,
        options.scalar.tol,
        options.order_slack,
        options.scalar.max_periods,
    )?;

    // Lower corner: invader u small, resident v at full strength.
    let shapes_u = corner_shapes(spec, false, &semis, &bounds, options.spectral)?;
    let (lower_corner, lower_diag) = find_corner(
        spec,
        semis.v_star.fixed_point(),
        &shapes_u,
        false,
        semis.v_star.inf(),
        dt,
        &options,
    )?;
    let (lower_fp, lower_periods, lower_delta) = monotone_orbit_iteration(
        spec,
        lower_corner,
        IterDirection::Increasing,
        dt,
        options.scalar.tol,
        options.order_slack,
        options.scalar.max_periods,
    )?;

    // The limits must themselves be ordered: lower <=2 upper.
    let sandwich = order_compare(&lower_fp, &upper_fp, Order::Competitive, real(1e-8));
    if !sandwich.holds {
        return Err(Error::Monotonicity(format!(
            "corner limits are not competitively ordered (violation {})",
            sandwich.worst_violation
        )));
    }

    let upper = sample_orbit(
        spec,
        &upper_fp,
        options.scalar.steps_per_period,
        options.scalar.orbit_samples,
        upper_periods,
        upper_delta,
    )?;
    let lower = sample_orbit(
        spec,
        &lower_fp,
        options.scalar.steps_per_period,
        options.scalar.orbit_samples,
        lower_periods,
        lower_delta,
    )?;

    let gap = upper_fp.sup_distance(&lower_fp);
    let coincide = gap < options.match_tol;
    let floor = real::<F>(1e-8);
    let positive = [&upper, &lower].iter().all(|orbit| {
        let u_min = orbit.u.min_value();
        let u_max = orbit.u.max_value();
        let v_min = orbit.v.min_value();
        let v_max = orbit.v.max_value();
        u_min > floor * u_max.max(F::one()) && v_min > floor * v_max.max(F::one())
    });

    Ok(CoexistenceOutcome {
        upper,
        lower,
        gap,
        coincide,
        positive,
        upper_corner: upper_diag,
        lower_corner: lower_diag,
        semitrivials: semis,
    })
}

/// Zero certificates of a coexistence orbit: the spectrum points of each
/// species' problem linearized along the full orbit, both zero in exact
/// arithmetic because the orbit components are positive eigenfunctions.
pub fn coexistence_certificates<F: Real>(
    spec: &SystemSpec<F>,
    orbit: &PeriodicOrbit<F>,
    options: SpectralOptions<F>,
) -> Result<(F, F)> {
    // a1 - b1 u - c1 v, assembled by nesting the linearized combinator.
    let lu = CoefficientField::linearized(spec.a1(), spec.b1(), Arc::clone(&orbit.u));
    let lu = CoefficientField::linearized(&lu, spec.c1(), Arc::clone(&orbit.v));
    let lv = CoefficientField::linearized(spec.a2(), spec.b2(), Arc::clone(&orbit.u));
    let lv = CoefficientField::linearized(&lv, spec.c2(), Arc::clone(&orbit.v));
    let l1 = principal_spectrum_point(spec.op(), spec.nu1(), &lu, options)?;
    let l2 = principal_spectrum_point(spec.op(), spec.nu2(), &lv, options)?;
    Ok((l1.lambda, l2.lambda))
}

/// Structural check for equal-rate systems with constant interaction
/// coefficients and identical growth: the coexistence state is a fixed
/// proportion of a single scalar orbit, and both semitrivial orbits are
/// rescalings of the same normalized orbit.
#[derive(Debug, Clone, Copy)]
pub struct UniquenessReport<F> {
    /// `(b1 - b2) / (c2 - c1)`: the v/u proportion.
    pub rho: F,
    /// `sup |v - rho u| / sup v` over both corner limits.
    pub proportionality_error: F,
    /// Mismatch between the u component and the reduced scalar orbit.
    pub reduced_error: F,
    /// Mismatch of `u* * b1` against the normalized orbit.
    pub semitrivial_u_error: F,
    /// Mismatch of `v* * c2` against the normalized orbit.
    pub semitrivial_v_error: F,
    pub tol: F,
    pub holds: bool,
}

/// Verifies the proportional structure of the coexistence state for
/// constant `b`, `c`, equal rates and identical growth.
pub fn uniqueness_check<F: Real>(
    spec: &SystemSpec<F>,
    outcome: &CoexistenceOutcome<F>,
    scalar: ScalarSolveOptions<F>,
    tol: F,
) -> Result<UniquenessReport<F>> {
    use crate::fields::FieldKind;
    for (name, f) in [
        ("b1", spec.b1()),
        ("b2", spec.b2()),
        ("c1", spec.c1()),
        ("c2", spec.c2()),
    ] {
        if f.kind() != FieldKind::Constant {
            return Err(Error::Hypothesis(format!(
                "the proportional structure needs constant interaction \
                 coefficients, but {name} varies"
            )));
        }
    }
    if !rates_equal(spec.nu1(), spec.nu2()) {
        return Err(Error::Hypothesis(
            "the proportional structure needs equal dispersal rates".to_string(),
        ));
    }
    let grid = spec.grid();
    let growth_gap = field_sup_difference(spec.a1(), spec.a2(), grid, 64);
    if growth_gap > real::<F>(1e-10) {
        return Err(Error::Hypothesis(format!(
            "the proportional structure needs identical growth; sup difference is {growth_gap}"
        )));
    }
    let origin = grid.coord(0);
    let b1 = spec.b1().value(F::zero(), 0, origin);
    let b2 = spec.b2().value(F::zero(), 0, origin);
    let c1 = spec.c1().value(F::zero(), 0, origin);
    let c2 = spec.c2().value(F::zero(), 0, origin);
    if !(b1 > b2) || !(c2 > c1) {
        return Err(Error::Hypothesis(format!(
            "the proportional structure needs b1 > b2 and c2 > c1, \
             got b1={b1}, b2={b2}, c1={c1}, c2={c2}"
        )));
    }
    let rho = (b1 - b2) / (c2 - c1);

    // v = rho u across both limits.
    let mut prop_err = F::zero();
    let mut v_scale = F::zero();
    for orbit in [&outcome.upper, &outcome.lower] {
        for k in 0..orbit.u.len_time() {
            let us = orbit.u.slice(k);
            let vs = orbit.v.slice(k);
            for i in 0..us.len() {
                prop_err = prop_err.max((vs[i] - rho * us[i]).abs());
                v_scale = v_scale.max(vs[i].abs());
            }
        }
    }
    let proportionality_error = prop_err / v_scale.max(real(1e-30));

    // The u component solves the scalar problem with limitation b1 + c1 rho.
    let b_red = CoefficientField::constant(spec.period(), b1 + c1 * rho);
    let reduced = solve_scalar_periodic(spec.op(), spec.nu1(), spec.a1(), &b_red, scalar)?;
    let mut red_err = F::zero();
    let mut red_scale = F::zero();
    let m = outcome.upper.u.len_time();
    for k in 0..m {
        let t = spec.period() * real_of_usize::<F>(k) / real_of_usize::<F>(m);
        let theta = reduced.state_at(t);
        let us = outcome.upper.u.slice(k);
        for i in 0..us.len() {
            red_err = red_err.max((us[i] - theta[i]).abs());
            red_scale = red_scale.max(theta[i].abs());
        }
    }
    let reduced_error = red_err / red_scale.max(real(1e-30));

    // Both semitrivial orbits are rescalings of one normalized orbit
    // (the dispersal term is linear, so scaling commutes with it).
    let unit = CoefficientField::constant(spec.period(), F::one());
    let theta = solve_scalar_periodic(spec.op(), spec.nu1(), spec.a1(), &unit, scalar)?;
    let semi_err = |orbit: &ScalarOrbit<F>, scale: F| -> F {
        let m = orbit.orbit().len_time();
        let mut err = F::zero();
        let mut amp = F::zero();
        for k in 0..m {
            let t = spec.period() * real_of_usize::<F>(k) / real_of_usize::<F>(m);
            let th = theta.state_at(t);
            let own = orbit.orbit().slice(k);
            for i in 0..own.len() {
                err = err.max((own[i] * scale - th[i]).abs());
                amp = amp.max(th[i].abs());
            }
        }
        err / amp.max(real(1e-30))
    };
    let semitrivial_u_error = semi_err(&outcome.semitrivials.u_star, b1);
    let semitrivial_v_error = semi_err(&outcome.semitrivials.v_star, c2);

    let holds = proportionality_error < tol
        && reduced_error < tol
        && semitrivial_u_error < tol
        && semitrivial_v_error < tol;
    Ok(UniquenessReport {
        rho,
        proportionality_error,
        reduced_error,
        semitrivial_u_error,
        semitrivial_v_error,
        tol,
        holds,
    })
}

/// One period-mark record of an extinction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionSample<F> {
    pub period: usize,
    /// Sup of the doomed species.
    pub v_sup: F,
    /// Sup distance of the surviving species from its semitrivial fixed
    /// point.
    pub u_distance: F,
}

/// Cross-system bound check: the solution of the constant-coefficient
/// bounding system stays competitively below the true solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport<F> {
    pub order_ok: bool,
    pub worst_violation: F,
    pub periods_checked: usize,
}

/// Options for [`extinction_run`].
#[derive(Debug, Clone, Copy)]
pub struct ExtinctionOptions<F> {
    pub steps_per_period: usize,
    pub max_periods: usize,
    /// The doomed species counts as extinct below this sup.
    pub extinction_tol: F,
    /// The survivor must be this close to its semitrivial fixed point.
    pub u_tol: F,
    pub scalar: ScalarSolveOptions<F>,
    pub spectral: SpectralOptions<F>,
    /// Also integrate the constant-coefficient bounding system and check
    /// the cross-system order.
    pub check_sandwich: bool,
    /// Abort with a hypothesis error when the margin criteria fail
    /// (instead of running the dynamics regardless).
    pub require_hypotheses: bool,
    /// Exact analytic coefficient bounds, replacing the mesh scan in the
    /// margin criteria and the bounding system.
    pub bounds_override: Option<CoefficientBounds<F>>,
}

impl<F: Real> Default for ExtinctionOptions<F> {
    fn default() -> Self {
        ExtinctionOptions {
            steps_per_period: crate::dynamics::DEFAULT_STEPS_PER_PERIOD,
            max_periods: 2000,
            extinction_tol: real(1e-6),
            u_tol: real(1e-5),
            scalar: ScalarSolveOptions::default(),
            spectral: SpectralOptions::default(),
            check_sandwich: true,
            require_hypotheses: true,
            bounds_override: None,
        }
    }
}

/// Result of an extinction run.
#[derive(Debug, Clone)]
pub struct ExtinctionReport<F: Real> {
    pub criteria: ExtinctionCriteria<F>,
    /// `lambda(nu2, a2 - b2 u*)`: negative certifies decay of the second
    /// species near the semitrivial orbit.
    pub invasion_lambda: F,
    pub history: Vec<ExtinctionSample<F>>,
    pub periods: usize,
    pub v_sup_final: F,
    pub u_distance_final: F,
    /// The doomed species dropped below the extinction tolerance.
    pub extinct: bool,
    /// The survivor settled onto its semitrivial orbit.
    pub survivor_converged: bool,
    pub sandwich: Option<SandwichReport<F>>,
}

/// Runs the dynamics of a system whose margins doom the second species,
/// tracking the decay and certifying it spectrally.
pub fn extinction_run<F: Real>(
    spec: &SystemSpec<F>,
    initial: Option<StateField<F>>,
    options: ExtinctionOptions<F>,
) -> Result<ExtinctionReport<F>> {
    let bounds = match options.bounds_override {
        Some(b) => b,
        None => spec.bounds(128)?,
    };
    let criteria = extinction_criteria(&bounds, spec.nu1(), spec.nu2());
    if options.require_hypotheses && !criteria.holds {
        let mut failed = Vec::new();
        if !criteria.resident_persists.holds {
            failed.push("resident persistence");
        }
        if !criteria.invader_capped.holds {
            failed.push("invader growth cap");
        }
        if !criteria.growth_order.holds {
            failed.push("growth ordering");
        }
        if !criteria.rates_equal {
            failed.push("equal dispersal rates");
        }
        return Err(Error::Hypothesis(format!(
            "extinction margins fail: {}",
            failed.join(", ")
        )));
    }

    let u_star =
        solve_scalar_periodic(spec.op(), spec.nu1(), spec.a1(), spec.b1(), options.scalar)?;
    let linv = CoefficientField::linearized(spec.a2(), spec.b2(), Arc::clone(u_star.orbit()));
    let invasion_lambda =
        principal_spectrum_point(spec.op(), spec.nu2(), &linv, options.spectral)?.lambda;

    let n = spec.grid().len();
    let start = match initial {
        Some(s) => {
            if s.len() != n {
                return Err(Error::GridMismatch(format!(
                    "initial state has {} nodes, the grid has {n}",
                    s.len()
                )));
            }
            s
        }
        None => {
            let u0: Vec<F> = u_star.fixed_point().iter().map(|&x| x * real(0.5)).collect();
            let v0 = bounds.a2.upper / bounds.c2.lower * real(0.5);
            StateField::new(F::zero(), u0, vec![v0; n])
        }
    };

    let dt = spec.period() / real_of_usize::<F>(options.steps_per_period);
    let mut state = start.clone();
    let mut history = Vec::new();
    let mut periods = 0usize;
    let (mut v_sup, mut u_dist);
    loop {
        state = poincare_map(spec, &state, dt)?;
        periods += 1;
        v_sup = sup_norm(&state.v);
        u_dist = sup_distance(&state.u, u_star.fixed_point());
        history.push(ExtinctionSample {
            period: periods,
            v_sup,
            u_distance: u_dist,
        });
        if (v_sup < options.extinction_tol && u_dist < options.u_tol)
            || periods >= options.max_periods
        {
            break;
        }
    }

    let sandwich = if options.check_sandwich {
        Some(sandwich_order_check(spec, &bounds, &start, dt, 20.min(options.max_periods))?)
    } else {
        None
    };

    Ok(ExtinctionReport {
        criteria,
        invasion_lambda,
        history,
        periods,
        v_sup_final: v_sup,
        u_distance_final: u_dist,
        extinct: v_sup < options.extinction_tol,
        survivor_converged: u_dist < options.u_tol,
        sandwich,
    })
}

/// Integrates the constant-coefficient bounding system (worst constants
/// for u, best for v) alongside the true system and verifies that its
/// solution stays competitively below the true one at period marks.
fn sandwich_order_check<F: Real>(
    spec: &SystemSpec<F>,
    bounds: &CoefficientBounds<F>,
    start: &StateField<F>,
    dt: F,
    periods: usize,
) -> Result<SandwichReport<F>> {
    let t = spec.period();
    let c = |v: F| CoefficientField::constant(t, v);
    let bounding = SystemSpec::new(
        Arc::clone(spec.op()),
        spec.nu1(),
        spec.nu2(),
        t,
        c(bounds.a1.lower),
        c(bounds.a2.upper),
        c(bounds.b1.upper),
        c(bounds.b2.lower),
        c(bounds.c1.upper),
        c(bounds.c2.lower),
    )?;
    let mut low = start.clone();
    let mut truth = start.clone();
    let slack = real::<F>(1e-9);
    let mut worst = F::neg_infinity();
    for _ in 0..periods {
        low = poincare_map(&bounding, &low, dt)?;
        truth = poincare_map(spec, &truth, dt)?;
        let check = order_compare(&low, &truth, Order::Competitive, slack);
        worst = worst.max(check.worst_violation);
    }
    Ok(SandwichReport {
        order_ok: worst <= slack,
        worst_violation: worst,
        periods_checked: periods,
    })
}
