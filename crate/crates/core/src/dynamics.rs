//! The coupled two-species competition system and its time stepping.
//!
//! The semidiscrete system on a grid is, per node `x`,
//!
//! ```text
//! u_t = nu1 * (A u)(x) + u * (a1(t,x) - b1(t,x) u - c1(t,x) v)
//! v_t = nu2 * (A v)(x) + v * (a2(t,x) - b2(t,x) u - c2(t,x) v)
//! ```
//!
//! with `A` the assembled dispersal operator. Integration is classical RK4
//! with a fixed nominal step (final step shortened to land on the end
//! time). States are clamped to zero when roundoff drives a component into
//! `(-clamp_tol, 0)`; anything below `-clamp_tol` aborts as a step-size
//! failure rather than being papered over.

use std::sync::Arc;

use crate::domain::{DispersalOperator, Grid};
use crate::error::{Error, Result};
use crate::fields::{
    compute_bounds, field_bounds, CoefficientBounds, CoefficientField, CompiledField, Order,
    OrderWitness, StateField,
};
use crate::linalg::{rk4_advance, Rk4Workspace};
use crate::scalar::{real, to_f64, Real};

/// Default negativity clamp tolerance: components in `(-CLAMP_TOL, 0)` are
/// set to zero, anything at or below `-CLAMP_TOL` aborts the run.
pub const CLAMP_TOL: f64 = 1e-10;

/// Number of RK4 steps per period used when no step size is specified.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;

/// A grid, a dispersal operator, rates and the six periodic coefficients:
/// everything that defines one competition system.
#[derive(Debug, Clone)]
pub struct SystemSpec<F: Real> {
    op: Arc<DispersalOperator<F>>,
    nu1: F,
    nu2: F,
    period: F,
    a1: CoefficientField<F>,
    a2: CoefficientField<F>,
    b1: CoefficientField<F>,
    b2: CoefficientField<F>,
    c1: CoefficientField<F>,
    c2: CoefficientField<F>,
    ca1: CompiledField<F>,
    ca2: CompiledField<F>,
    cb1: CompiledField<F>,
    cb2: CompiledField<F>,
    cc1: CompiledField<F>,
    cc2: CompiledField<F>,
}

impl<F: Real> SystemSpec<F> {
    /// Validates and assembles a system.
    ///
    /// Rates must be positive, every coefficient must carry the system
    /// period, and the self-limitation (`b`) and cross-competition (`c`)
    /// coefficients must be strictly positive on a 64-sample time mesh.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        op: Arc<DispersalOperator<F>>,
        nu1: F,
        nu2: F,
        period: F,
        a1: CoefficientField<F>,
        a2: CoefficientField<F>,
        b1: CoefficientField<F>,
        b2: CoefficientField<F>,
        c1: CoefficientField<F>,
        c2: CoefficientField<F>,
    ) -> Result<Self> {
        if !(nu1 > F::zero()) || !(nu2 > F::zero()) || !nu1.is_finite() || !nu2.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dispersal rates must be positive and finite, got nu1={nu1}, nu2={nu2}"
            )));
        }
        if !(period > F::zero()) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        for (name, f) in [
            ("a1", &a1),
            ("a2", &a2),
            ("b1", &b1),
            ("b2", &b2),
            ("c1", &c1),
            ("c2", &c2),
        ] {
            if f.period() != period {
                return Err(Error::InvalidInput(format!(
                    "coefficient {name} has period {} but the system period is {period}",
                    f.period()
                )));
            }
        }
        let grid = op.grid();
        for (name, f) in [("b1", &b1), ("b2", &b2), ("c1", &c1), ("c2", &c2)] {
            let b = field_bounds(f, grid, 64)?;
            if !(b.lower > F::zero()) {
                return Err(Error::InvalidInput(format!(
                    "coefficient {name} must be strictly positive; mesh minimum is {}",
                    b.lower
                )));
            }
        }
        for (name, f) in [("a1", &a1), ("a2", &a2)] {
            // Evaluate once to surface non-finite expressions early.
            field_bounds(f, grid, 64).map_err(|_| {
                Error::NonFinite(format!("coefficient {name} produced a non-finite sample"))
            })?;
        }

        let ca1 = CompiledField::compile(&a1, grid);
        let ca2 = CompiledField::compile(&a2, grid);
        let cb1 = CompiledField::compile(&b1, grid);
        let cb2 = CompiledField::compile(&b2, grid);
        let cc1 = CompiledField::compile(&c1, grid);
        let cc2 = CompiledField::compile(&c2, grid);
        Ok(SystemSpec {
            op,
            nu1,
            nu2,
            period,
            a1,
            a2,
            b1,
            b2,
            c1,
            c2,
            ca1,
            ca2,
            cb1,
            cb2,
            cc1,
            cc2,
        })
    }

    pub fn op(&self) -> &Arc<DispersalOperator<F>> {
        &self.op
    }

    pub fn grid(&self) -> &Arc<Grid<F>> {
        self.op.grid()
    }

    pub fn nu1(&self) -> F {
        self.nu1
    }

    pub fn nu2(&self) -> F {
        self.nu2
    }

    pub fn period(&self) -> F {
        self.period
    }

    pub fn a1(&self) -> &CoefficientField<F> {
        &self.a1
    }

    pub fn a2(&self) -> &CoefficientField<F> {
        &self.a2
    }

    pub fn b1(&self) -> &CoefficientField<F> {
        &self.b1
    }

    pub fn b2(&self) -> &CoefficientField<F> {
        &self.b2
    }

    pub fn c1(&self) -> &CoefficientField<F> {
        &self.c1
    }

    pub fn c2(&self) -> &CoefficientField<F> {
        &self.c2
    }

    /// Default step size: one two-thousandth of the period.
    pub fn default_dt(&self) -> F {
        self.period / crate::scalar::real_of_usize::<F>(DEFAULT_STEPS_PER_PERIOD)
    }

    /// Mesh bounds of the six coefficients.
    pub fn bounds(&self, time_samples: usize) -> Result<CoefficientBounds<F>> {
        compute_bounds(
            [&self.a1, &self.a2, &self.b1, &self.b2, &self.c1, &self.c2],
            self.grid(),
            time_samples,
        )
    }

    /// Writes the system right-hand side at `(t, u, v)` into `(du, dv)`.
    pub(crate) fn rhs_into(
        &self,
        t: F,
        u: &[F],
        v: &[F],
        du: &mut [F],
        dv: &mut [F],
        buf: &mut RhsBuffers<F>,
    ) {
        let grid = self.grid();
        self.op.apply(u, &mut buf.au);
        self.op.apply(v, &mut buf.av);
        self.ca1.fill(t, grid, &mut buf.a1);
        self.ca2.fill(t, grid, &mut buf.a2);
        self.cb1.fill(t, grid, &mut buf.b1);
        self.cb2.fill(t, grid, &mut buf.b2);
        self.cc1.fill(t, grid, &mut buf.c1);
        self.cc2.fill(t, grid, &mut buf.c2);
        for i in 0..u.len() {
            du[i] = self.nu1 * buf.au[i] + u[i] * (buf.a1[i] - buf.b1[i] * u[i] - buf.c1[i] * v[i]);
            dv[i] = self.nu2 * buf.av[i] + v[i] * (buf.a2[i] - buf.b2[i] * u[i] - buf.c2[i] * v[i]);
        }
    }
}

/// Scratch buffers for right-hand-side evaluation.
#[derive(Debug, Clone)]
pub(crate) struct RhsBuffers<F> {
    au: Vec<F>,
    av: Vec<F>,
    a1: Vec<F>,
    a2: Vec<F>,
    b1: Vec<F>,
    b2: Vec<F>,
    c1: Vec<F>,
    c2: Vec<F>,
}

impl<F: Real> RhsBuffers<F> {
    pub(crate) fn new(n: usize) -> Self {
        RhsBuffers {
            au: vec![F::zero(); n],
            av: vec![F::zero(); n],
            a1: vec![F::zero(); n],
            a2: vec![F::zero(); n],
            b1: vec![F::zero(); n],
            b2: vec![F::zero(); n],
            c1: vec![F::zero(); n],
            c2: vec![F::zero(); n],
        }
    }
}

/// Time derivative of the system at `(t, state)`; allocating convenience
/// around the buffered internal path.
pub fn rhs<F: Real>(spec: &SystemSpec<F>, t: F, state: &StateField<F>) -> StateField<F> {
    let n = state.len();
    assert_eq!(n, spec.grid().len(), "state does not match the grid");
    let mut buf = RhsBuffers::new(n);
    let mut du = vec![F::zero(); n];
    let mut dv = vec![F::zero(); n];
    spec.rhs_into(t, &state.u, &state.v, &mut du, &mut dv, &mut buf);
    StateField::new(t, du, dv)
}

/// Integration options.
#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions<F> {
    /// Nominal RK4 step.
    pub dt: F,
    /// Negativity clamp tolerance (see [`CLAMP_TOL`]).
    pub clamp_tol: F,
    /// Store every k-th step in the trajectory (the initial and final
    /// states are always stored).
    pub store_stride: usize,
}

impl<F: Real> IntegrateOptions<F> {
    pub fn new(dt: F) -> Self {
        IntegrateOptions {
            dt,
            clamp_tol: real(CLAMP_TOL),
            store_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.store_stride = stride.max(1);
        self
    }
}

/// A time-ordered sequence of states produced by one integration.
#[derive(Debug, Clone)]
pub struct Trajectory<F> {
    states: Vec<StateField<F>>,
    dt: F,
}

impl<F: Real> Trajectory<F> {
    /// Wraps externally built states (used for candidate sub/super-solution
    /// pairs). Times must be strictly increasing.
    pub fn from_states(states: Vec<StateField<F>>, dt: F) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidInput(
                "a trajectory needs at least two states".to_string(),
            ));
        }
        for w in states.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::InvalidInput(format!(
                    "trajectory times must increase strictly ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        Ok(Trajectory { states, dt })
    }

    pub fn states(&self) -> &[StateField<F>] {
        &self.states
    }

    pub fn dt(&self) -> F {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &StateField<F> {
        &self.states[0]
    }

    pub fn last(&self) -> &StateField<F> {
        self.states.last().expect("trajectory is nonempty")
    }

    /// Time span covered.
    pub fn duration(&self) -> F {
        self.last().time - self.first().time
    }
}

/// Validates that a state is finite and nonnegative up to the clamp
/// tolerance, clamping the tolerated sliver to zero.
pub(crate) fn sanitize_state<F: Real>(y: &mut [F], t: F, n: usize, clamp_tol: F) -> Result<()> {
    for (i, value) in y.iter_mut().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!(
                "state component {} at t={} (node {})",
                i,
                t,
                i % n
            )));
        }
        if *value < F::zero() {
            if *value <= -clamp_tol {
                return Err(Error::Negativity {
                    time: to_f64(t),
                    node: i % n,
                    value: to_f64(*value),
                    tolerance: to_f64(clamp_tol),
                });
            }
            *value = F::zero();
        }
    }
    Ok(())
}

fn pack<F: Real>(state: &StateField<F>) -> Vec<F> {
    let mut y = Vec::with_capacity(2 * state.len());
    y.extend_from_slice(&state.u);
    y.extend_from_slice(&state.v);
    y
}

fn unpack<F: Real>(y: &[F], n: usize, time: F) -> StateField<F> {
    StateField::new(time, y[..n].to_vec(), y[n..].to_vec())
}

/// Integrates the system from `initial` over `[t0, t1]`, storing states
/// along the way.
pub fn integrate<F: Real>(
    spec: &SystemSpec<F>,
    initial: &StateField<F>,
    t0: F,
    t1: F,
    options: IntegrateOptions<F>,
) -> Result<Trajectory<F>> {
    let n = spec.grid().len();
    if initial.len() != n {
        return Err(Error::GridMismatch(format!(
            "initial state has {} nodes, the grid has {n}",
            initial.len()
        )));
    }
    if !(options.dt > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {}",
            options.dt
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidInput(format!(
            "integration window is empty: [{t0}, {t1}]"
        )));
    }

    let mut y = pack(initial);
    sanitize_state(&mut y, t0, n, options.clamp_tol)?;

    let mut states = vec![unpack(&y, n, t0)];
    let mut buf = RhsBuffers::new(n);
    let mut ws = Rk4Workspace::new(2 * n);
    let mut step_index = 0usize;
    let stride = options.store_stride.max(1);

    let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
        let (u, v) = y.split_at(n);
        let (du, dv) = dy.split_at_mut(n);
        spec.rhs_into(t, u, v, du, dv, &mut buf);
    };
    let mut on_step = |t: F, y: &mut [F]| -> Result<()> {
        sanitize_state(y, t, n, options.clamp_tol)?;
        step_index += 1;
        let is_last = t >= t1;
        if step_index % stride == 0 || is_last {
            states.push(unpack(y, n, t));
        }
        Ok(())
    };
    rk4_advance(&mut y, t0, t1, options.dt, &mut ws, &mut deriv, &mut on_step)?;

    Trajectory::from_states(states, options.dt)
}

/// Integrates without storing intermediate states; returns the final state.
pub fn advance<F: Real>(
    spec: &SystemSpec<F>,
    initial: &StateField<F>,
    t0: F,
    t1: F,
    dt: F,
    clamp_tol: F,
) -> Result<StateField<F>> {
    let n = spec.grid().len();
    if initial.len() != n {
        return Err(Error::GridMismatch(format!(
            "initial state has {} nodes, the grid has {n}",
            initial.len()
        )));
    }
    let mut y = pack(initial);
    sanitize_state(&mut y, t0, n, clamp_tol)?;
    let mut buf = RhsBuffers::new(n);
    let mut ws = Rk4Workspace::new(2 * n);
    let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
        let (u, v) = y.split_at(n);
        let (du, dv) = dy.split_at_mut(n);
        spec.rhs_into(t, u, v, du, dv, &mut buf);
    };
    let mut on_step = |t: F, y: &mut [F]| sanitize_state(y, t, n, clamp_tol);
    rk4_advance(&mut y, t0, t1, dt, &mut ws, &mut deriv, &mut on_step)?;
    Ok(unpack(&y, n, t1))
}

/// The stroboscopic (Poincare) map at phase zero: integrates one period
/// from the given state and restamps the result at time zero so iterates
/// compose without accumulating time.
///
/// `dt` is snapped to an integer number of steps per period so repeated
/// applications use identical step sequences.
pub fn poincare_map<F: Real>(
    spec: &SystemSpec<F>,
    state: &StateField<F>,
    dt: F,
) -> Result<StateField<F>> {
    let steps = steps_per_period(spec.period(), dt);
    let exact_dt = spec.period() / crate::scalar::real_of_usize::<F>(steps);
    let mut out = advance(
        spec,
        state,
        F::zero(),
        spec.period(),
        exact_dt,
        real(CLAMP_TOL),
    )?;
    out.time = F::zero();
    Ok(out)
}

/// Rounds a requested step to a whole number of steps per period.
pub(crate) fn steps_per_period<F: Real>(period: F, dt: F) -> usize {
    assert!(dt > F::zero(), "step size must be positive");
    let raw = (period / dt)
        .round()
        .to_usize()
        .unwrap_or(DEFAULT_STEPS_PER_PERIOD);
    raw.max(1)
}

/// Which side of a solution a candidate trajectory is supposed to be on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// `u_t <= rhs_u` and `v_t >= rhs_v` (competitive sub-solution).
    Sub,
    /// `u_t >= rhs_u` and `v_t <= rhs_v` (competitive super-solution).
    Super,
}

/// Worst defect of a candidate sub/super-solution trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectReport<F> {
    pub kind: SolutionKind,
    /// Largest amount by which the required inequality fails (positive
    /// means violated; nonpositive means the candidate is classified).
    pub worst_violation: F,
    /// Sample index, node and component (0 = u, 1 = v) of the worst
    /// violation.
    pub worst_sample: usize,
    pub worst_witness: OrderWitness,
    /// Extreme signed defects per component, for diagnostics.
    pub defect_u_range: (F, F),
    pub defect_v_range: (F, F),
}

/// Checks a candidate trajectory against the sub- or super-solution defect
/// inequalities using centered differences in time.
///
/// The trajectory must be uniformly sampled with at least 16 samples per
/// period (coarser data cannot resolve the time derivative).
pub fn check_subsuper<F: Real>(
    spec: &SystemSpec<F>,
    candidate: &Trajectory<F>,
    kind: SolutionKind,
) -> Result<DefectReport<F>> {
    let states = candidate.states();
    if states.len() < 3 {
        return Err(Error::InvalidInput(
            "defect check needs at least three samples".to_string(),
        ));
    }
    let n = spec.grid().len();
    if states[0].len() != n {
        return Err(Error::GridMismatch(format!(
            "candidate states have {} nodes, the grid has {n}",
            states[0].len()
        )));
    }
    let duration = candidate.duration();
    let spacing = states[1].time - states[0].time;
    for w in states.windows(2) {
        let d = w[1].time - w[0].time;
        if ((d - spacing) / spacing).abs() > real(1e-8) {
            return Err(Error::InvalidInput(
                "defect check requires uniform time sampling".to_string(),
            ));
        }
    }
    let samples_per_period = spec.period() / spacing;
    if samples_per_period < real(16.0) {
        return Err(Error::InvalidInput(format!(
            "defect check needs at least 16 samples per period, got {samples_per_period} \
             (duration {duration})"
        )));
    }

    let mut buf = RhsBuffers::new(n);
    let mut du = vec![F::zero(); n];
    let mut dv = vec![F::zero(); n];
    let two = real::<F>(2.0);

    let mut worst = F::neg_infinity();
    let mut worst_sample = 1usize;
    let mut worst_witness = OrderWitness {
        node: 0,
        component: 0,
    };
    let mut u_range = (F::infinity(), F::neg_infinity());
    let mut v_range = (F::infinity(), F::neg_infinity());

    for k in 1..states.len() - 1 {
        let s = &states[k];
        spec.rhs_into(s.time, &s.u, &s.v, &mut du, &mut dv, &mut buf);
        for i in 0..n {
            let ut = (states[k + 1].u[i] - states[k - 1].u[i]) / (two * spacing);
            let vt = (states[k + 1].v[i] - states[k - 1].v[i]) / (two * spacing);
            let defect_u = ut - du[i];
            let defect_v = vt - dv[i];
            u_range.0 = u_range.0.min(defect_u);
            u_range.1 = u_range.1.max(defect_u);
            v_range.0 = v_range.0.min(defect_v);
            v_range.1 = v_range.1.max(defect_v);
            // Required signs: super ⇒ defect_u >= 0, defect_v <= 0.
            let (viol_u, viol_v) = match kind {
                SolutionKind::Super => (-defect_u, defect_v),
                SolutionKind::Sub => (defect_u, -defect_v),
            };
            if viol_u > worst {
                worst = viol_u;
                worst_sample = k;
                worst_witness = OrderWitness {
                    node: i,
                    component: 0,
                };
            }
            if viol_v > worst {
                worst = viol_v;
                worst_sample = k;
                worst_witness = OrderWitness {
                    node: i,
                    component: 1,
                };
            }
        }
    }

    Ok(DefectReport {
        kind,
        worst_violation: worst,
        worst_sample,
        worst_witness,
        defect_u_range: u_range,
        defect_v_range: v_range,
    })
}

/// Outcome of a comparison-principle run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<F> {
    /// True when the competitive order held at every sample.
    pub preserved: bool,
    /// Worst order violation over all samples (nonpositive when preserved
    /// exactly).
    pub worst_violation: F,
    /// Time of the first sample at which the order failed, if any.
    pub first_failure_time: Option<F>,
    pub samples_checked: usize,
}

/// Integrates two initially `<=_2`-ordered states and checks that the
/// order is preserved at `samples` equispaced times up to `horizon`.
pub fn comparison_test<F: Real>(
    spec: &SystemSpec<F>,
    first: &StateField<F>,
    second: &StateField<F>,
    horizon: F,
    samples: usize,
    dt: F,
    slack: F,
) -> Result<ComparisonReport<F>> {
    if samples == 0 {
        return Err(Error::InvalidInput(
            "comparison test needs at least one sample".to_string(),
        ));
    }
    let initial = crate::fields::order_compare(first, second, Order::Competitive, slack);
    if !initial.holds {
        return Err(Error::InvalidInput(format!(
            "states are not competitively ordered at t=0 (violation {})",
            initial.worst_violation
        )));
    }

    let clamp = real(CLAMP_TOL);
    let mut lo = first.clone();
    let mut hi = second.clone();
    let mut worst = initial.worst_violation;
    let mut first_failure = None;
    let step = horizon / crate::scalar::real_of_usize::<F>(samples);
    for k in 1..=samples {
        let t_prev = crate::scalar::real_of_usize::<F>(k - 1) * step;
        let t_next = crate::scalar::real_of_usize::<F>(k) * step;
        lo = advance(spec, &lo, t_prev, t_next, dt, clamp)?;
        hi = advance(spec, &hi, t_prev, t_next, dt, clamp)?;
        let chk = crate::fields::order_compare(&lo, &hi, Order::Competitive, slack);
        worst = worst.max(chk.worst_violation);
        if !chk.holds && first_failure.is_none() {
            first_failure = Some(t_next);
        }
    }
    Ok(ComparisonReport {
        preserved: first_failure.is_none(),
        worst_violation: worst,
        first_failure_time: first_failure,
        samples_checked: samples,
    })
}
