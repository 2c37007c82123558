//! Forced planar competition systems and nodewise reconstruction.
//!
//! A two-species competition ODE with positive periodic forcing,
//!
//! ```text
//! u' = u (a1(t) - b1(t) u - c1(t) v) + d1(t)
//! v' = v (a2(t) - b2(t) u - c2(t) v) + d2(t)
//! ```
//!
//! has a positive periodic solution whenever the forcing is positive, and
//! a unique one when self-limitation dominates cross-competition in the
//! ratio sense `inf b1 / sup b2 > sup c1 / inf c2`. The solver brackets it
//! between two corner iterations seeded by forced-logistic auxiliary
//! orbits, mirroring the lattice construction in [`crate::periodic`].
//!
//! The same machinery reconstructs a lattice orbit one node at a time:
//! freezing the nonlocal term of the full system at node `x` turns the
//! node's dynamics into exactly such a forced planar system, with the
//! incoming dispersal mass as forcing. Solving it and comparing against
//! the stored orbit values closes the loop between the two levels of the
//! model.

use std::sync::Arc;

use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::expr::{parse, ParsedExpr};
use crate::fields::{Bound, SampledField};
use crate::linalg::{rk4_advance, Rk4Workspace};
use crate::periodic::PeriodicOrbit;
use crate::scalar::{real, real_of_usize, to_f64, Real};

/// A periodic function of time alone.
#[derive(Clone)]
pub struct TimeFunction<F: Real> {
    period: F,
    repr: TfRepr<F>,
}

#[derive(Clone)]
enum TfRepr<F: Real> {
    Constant(F),
    Expr(Arc<ParsedExpr>),
    Closure(Arc<dyn Fn(F) -> F + Send + Sync>),
    /// One-node sampled data with periodic cubic interpolation.
    Sampled(Arc<SampledField<F>>),
}

impl<F: Real> std::fmt::Debug for TimeFunction<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.repr {
            TfRepr::Constant(c) => format!("constant {c}"),
            TfRepr::Expr(e) => format!("expr {:?}", e.source()),
            TfRepr::Closure(_) => "closure".to_string(),
            TfRepr::Sampled(s) => format!("sampled ({} samples)", s.len_time()),
        };
        write!(f, "TimeFunction[{kind}, period {}]", self.period)
    }
}

impl<F: Real> TimeFunction<F> {
    pub fn constant(period: F, value: F) -> Self {
        TimeFunction {
            period,
            repr: TfRepr::Constant(value),
        }
    }

    /// Parses a `t`-only expression (`x` and `y` are rejected).
    pub fn from_expr(period: F, source: &str) -> Result<Self> {
        let parsed = parse(source).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if parsed.uses_space() {
            return Err(Error::InvalidInput(format!(
                "time function {source:?} must not reference x or y"
            )));
        }
        Ok(TimeFunction {
            period,
            repr: TfRepr::Expr(Arc::new(parsed)),
        })
    }

    pub fn from_closure(period: F, f: impl Fn(F) -> F + Send + Sync + 'static) -> Self {
        TimeFunction {
            period,
            repr: TfRepr::Closure(Arc::new(f)),
        }
    }

    /// Wraps one-node sampled periodic data.
    pub fn from_samples(samples: SampledField<F>) -> Result<Self> {
        if samples.len_space() != 1 {
            return Err(Error::InvalidInput(format!(
                "a time function needs one-node samples, got {}",
                samples.len_space()
            )));
        }
        Ok(TimeFunction {
            period: samples.period(),
            repr: TfRepr::Sampled(Arc::new(samples)),
        })
    }

    pub fn period(&self) -> F {
        self.period
    }

    pub fn value(&self, t: F) -> F {
        match &self.repr {
            TfRepr::Constant(c) => *c,
            TfRepr::Expr(e) => e.eval(t, F::zero(), F::zero(), self.period),
            TfRepr::Closure(f) => f(t),
            TfRepr::Sampled(s) => s.value_at(t, 0),
        }
    }

    /// Min/max over an equispaced sample mesh.
    pub fn bounds(&self, samples: usize) -> Result<Bound<F>> {
        if let TfRepr::Constant(c) = &self.repr {
            return Ok(Bound {
                lower: *c,
                upper: *c,
            });
        }
        let mut lower = F::infinity();
        let mut upper = F::neg_infinity();
        for k in 0..samples.max(4) {
            let t = self.period * real_of_usize::<F>(k) / real_of_usize::<F>(samples.max(4));
            let v = self.value(t);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "time function produced {v} at t = {t}"
                )));
            }
            lower = lower.min(v);
            upper = upper.max(v);
        }
        Ok(Bound { lower, upper })
    }
}

/// The eight periodic coefficients of a forced planar competition system.
#[derive(Debug, Clone)]
pub struct ForcedPlanarSystem<F: Real> {
    pub period: F,
    pub a1: TimeFunction<F>,
    pub a2: TimeFunction<F>,
    pub b1: TimeFunction<F>,
    pub b2: TimeFunction<F>,
    pub c1: TimeFunction<F>,
    pub c2: TimeFunction<F>,
    pub d1: TimeFunction<F>,
    pub d2: TimeFunction<F>,
}

impl<F: Real> ForcedPlanarSystem<F> {
    /// Validates periods, positivity of the interaction coefficients and
    /// strict positivity of the forcing.
    pub fn validate(&self) -> Result<PlanarBounds<F>> {
        for (name, f) in [
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("b1", &self.b1),
            ("b2", &self.b2),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("d1", &self.d1),
            ("d2", &self.d2),
        ] {
            if f.period() != self.period {
                return Err(Error::InvalidInput(format!(
                    "coefficient {name} has period {} but the system period is {}",
                    f.period(),
                    self.period
                )));
            }
        }
        let bounds = PlanarBounds {
            a1: self.a1.bounds(1024)?,
            a2: self.a2.bounds(1024)?,
            b1: self.b1.bounds(1024)?,
            b2: self.b2.bounds(1024)?,
            c1: self.c1.bounds(1024)?,
            c2: self.c2.bounds(1024)?,
            d1: self.d1.bounds(1024)?,
            d2: self.d2.bounds(1024)?,
        };
        for (name, b) in [
            ("b1", bounds.b1),
            ("b2", bounds.b2),
            ("c1", bounds.c1),
            ("c2", bounds.c2),
        ] {
            if !(b.lower > F::zero()) {
                return Err(Error::InvalidInput(format!(
                    "coefficient {name} must be strictly positive; minimum is {}",
                    b.lower
                )));
            }
        }
        for (name, b) in [("d1", bounds.d1), ("d2", bounds.d2)] {
            if !(b.lower > F::zero()) {
                return Err(Error::Hypothesis(format!(
                    "forcing {name} must be strictly positive; minimum is {}",
                    b.lower
                )));
            }
        }
        Ok(bounds)
    }

    fn rhs(&self, t: F, u: F, v: F) -> (F, F) {
        let du = u * (self.a1.value(t) - self.b1.value(t) * u - self.c1.value(t) * v)
            + self.d1.value(t);
        let dv = v * (self.a2.value(t) - self.b2.value(t) * u - self.c2.value(t) * v)
            + self.d2.value(t);
        (du, dv)
    }
}

/// Sampled bounds of the planar coefficients.
#[derive(Debug, Clone, Copy)]
pub struct PlanarBounds<F> {
    pub a1: Bound<F>,
    pub a2: Bound<F>,
    pub b1: Bound<F>,
    pub b2: Bound<F>,
    pub c1: Bound<F>,
    pub c2: Bound<F>,
    pub d1: Bound<F>,
    pub d2: Bound<F>,
}

/// Options for the planar solves.
#[derive(Debug, Clone, Copy)]
pub struct PlanarOptions<F> {
    pub steps_per_period: usize,
    pub tol: F,
    pub max_periods: usize,
    pub orbit_samples: usize,
    /// Order slack for the monotonicity checks.
    pub order_slack: F,
    /// The two corner limits count as one orbit within this.
    pub match_tol: F,
}

impl<F: Real> Default for PlanarOptions<F> {
    fn default() -> Self {
        PlanarOptions {
            steps_per_period: 20_000,
            tol: real(1e-11),
            max_periods: 10_000,
            orbit_samples: 2048,
            order_slack: real(1e-10),
            match_tol: real(1e-8),
        }
    }
}

/// One positive periodic planar orbit.
#[derive(Debug, Clone)]
pub struct PlanarOrbit<F: Real> {
    pub u: Arc<SampledField<F>>,
    pub v: Arc<SampledField<F>>,
    /// Phase-zero values.
    pub fixed: (F, F),
    pub periods: usize,
    pub delta: F,
}

impl<F: Real> PlanarOrbit<F> {
    pub fn state_at(&self, t: F) -> (F, F) {
        (self.u.value_at(t, 0), self.v.value_at(t, 0))
    }
}

/// The bracketing pair of planar orbits.
#[derive(Debug, Clone)]
pub struct PlanarOrbitPair<F: Real> {
    /// Limit from the (big u, small v) corner.
    pub upper: PlanarOrbit<F>,
    /// Limit from the (small u, big v) corner.
    pub lower: PlanarOrbit<F>,
    pub gap: F,
    pub coincide: bool,
    /// `inf b1 / sup b2` vs `sup c1 / inf c2`.
    pub ratio_lhs: F,
    pub ratio_rhs: F,
}

/// RK4 advance of the planar system over one period.
fn planar_period<F: Real>(
    sys: &ForcedPlanarSystem<F>,
    state: &mut [F; 2],
    steps: usize,
    ws: &mut Rk4Workspace<F>,
) -> Result<()> {
    let dt = sys.period / real_of_usize::<F>(steps);
    let mut y = state.to_vec();
    let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
        let (du, dv) = sys.rhs(t, y[0], y[1]);
        dy[0] = du;
        dy[1] = dv;
    };
    let clamp = real::<F>(crate::dynamics::CLAMP_TOL);
    let mut on_step = |t: F, y: &mut [F]| crate::dynamics::sanitize_state(y, t, 2, clamp);
    rk4_advance(&mut y, F::zero(), sys.period, dt, ws, &mut deriv, &mut on_step)?;
    state[0] = y[0];
    state[1] = y[1];
    Ok(())
}

/// Positive periodic orbit of the forced logistic equation
/// `w' = w (alpha(t) - beta(t) w) + d(t)` by monotone descent from a
/// constant super-solution. Returns phase-zero value and sampled orbit.
fn solve_forced_logistic<F: Real>(
    alpha: &TimeFunction<F>,
    beta: &TimeFunction<F>,
    d: &TimeFunction<F>,
    period: F,
    options: PlanarOptions<F>,
) -> Result<(F, SampledField<F>)> {
    let ab = alpha.bounds(1024)?;
    let bb = beta.bounds(1024)?;
    let db = d.bounds(1024)?;
    if !(bb.lower > F::zero()) {
        return Err(Error::InvalidInput(format!(
            "logistic self-limitation must be positive, minimum {}",
            bb.lower
        )));
    }
    // Constant super-solution: above the largest balance of growth and
    // forcing against self-limitation.
    let four = real::<F>(4.0);
    let two = real::<F>(2.0);
    let ceiling =
        (ab.upper + (ab.upper * ab.upper + four * bb.lower * db.upper).sqrt()) / (two * bb.lower)
            + F::one();

    let dt = period / real_of_usize::<F>(options.steps_per_period);
    let mut ws = Rk4Workspace::new(1);
    let clamp = real::<F>(crate::dynamics::CLAMP_TOL);
    let mut advance = |w: &mut F| -> Result<()> {
        let mut y = vec![*w];
        let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
            dy[0] = y[0] * (alpha.value(t) - beta.value(t) * y[0]) + d.value(t);
        };
        let mut on_step = |t: F, y: &mut [F]| crate::dynamics::sanitize_state(y, t, 1, clamp);
        rk4_advance(&mut y, F::zero(), period, dt, &mut ws, &mut deriv, &mut on_step)?;
        *w = y[0];
        Ok(())
    };

    let mut w = ceiling;
    let mut periods = 0usize;
    let mut delta = F::infinity();
    while periods < options.max_periods {
        let prev = w;
        advance(&mut w)?;
        periods += 1;
        delta = (w - prev).abs();
        if w > prev + real::<F>(1e-9) * (F::one() + ceiling) {
            return Err(Error::Monotonicity(format!(
                "forced-logistic iterates rose at period {periods}"
            )));
        }
        if delta < options.tol {
            break;
        }
    }
    if delta >= options.tol {
        return Err(Error::Unresolved {
            periods,
            delta: to_f64(delta),
        });
    }

    // Sample one period.
    let m = options.orbit_samples.max(4);
    let steps = options.steps_per_period.div_ceil(m) * m;
    let sdt = period / real_of_usize::<F>(steps);
    let mut samples = Vec::with_capacity(m);
    let mut y = vec![w];
    samples.push(vec![y[0]]);
    let mut ws2 = Rk4Workspace::new(1);
    let mut step = 0usize;
    let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
        dy[0] = y[0] * (alpha.value(t) - beta.value(t) * y[0]) + d.value(t);
    };
    let mut on_step = |t: F, yy: &mut [F]| -> Result<()> {
        crate::dynamics::sanitize_state(yy, t, 1, clamp)?;
        step += 1;
        if step < steps && step % (steps / m) == 0 {
            samples.push(vec![yy[0]]);
        }
        Ok(())
    };
    rk4_advance(&mut y, F::zero(), period, sdt, &mut ws2, &mut deriv, &mut on_step)?;
    let field = SampledField::new(period, samples)?;
    Ok((w, field))
}

/// Competitive-order comparison of planar states with slack:
/// `(u1, v1) <=2 (u2, v2)` iff `u1 <= u2` and `v1 >= v2`.
fn planar_leq2<F: Real>(first: [F; 2], second: [F; 2], slack: F) -> (bool, F) {
    let viol = (first[0] - second[0]).max(second[1] - first[1]);
    (viol <= slack, viol)
}

/// Iterates the planar period map monotonically from a corner.
fn planar_monotone<F: Real>(
    sys: &ForcedPlanarSystem<F>,
    corner: [F; 2],
    decreasing: bool,
    options: PlanarOptions<F>,
) -> Result<([F; 2], usize, F)> {
    let mut ws = Rk4Workspace::new(2);
    let mut current = corner;
    let mut periods = 0usize;
    let mut delta = F::infinity();
    while periods < options.max_periods {
        let mut next = current;
        planar_period(sys, &mut next, options.steps_per_period, &mut ws)?;
        periods += 1;
        let (ok, viol) = if decreasing {
            planar_leq2(next, current, options.order_slack)
        } else {
            planar_leq2(current, next, options.order_slack)
        };
        if !ok {
            return Err(Error::Monotonicity(format!(
                "planar corner iteration lost monotonicity at period {periods} \
                 (violation {viol})"
            )));
        }
        delta = (next[0] - current[0]).abs().max((next[1] - current[1]).abs());
        current = next;
        if delta < options.tol {
            return Ok((current, periods, delta));
        }
    }
    Err(Error::Unresolved {
        periods,
        delta: to_f64(delta),
    })
}

/// Samples one period of the planar orbit from its fixed point.
fn sample_planar_orbit<F: Real>(
    sys: &ForcedPlanarSystem<F>,
    fixed: [F; 2],
    periods: usize,
    delta: F,
    options: PlanarOptions<F>,
) -> Result<PlanarOrbit<F>> {
    let m = options.orbit_samples.max(4);
    let steps = options.steps_per_period.div_ceil(m) * m;
    let dt = sys.period / real_of_usize::<F>(steps);
    let mut us = Vec::with_capacity(m);
    let mut vs = Vec::with_capacity(m);
    us.push(vec![fixed[0]]);
    vs.push(vec![fixed[1]]);
    let mut y = fixed.to_vec();
    let mut ws = Rk4Workspace::new(2);
    let clamp = real::<F>(crate::dynamics::CLAMP_TOL);
    let mut step = 0usize;
    let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
        let (du, dv) = sys.rhs(t, y[0], y[1]);
        dy[0] = du;
        dy[1] = dv;
    };
    let mut on_step = |t: F, yy: &mut [F]| -> Result<()> {
        crate::dynamics::sanitize_state(yy, t, 2, clamp)?;
        step += 1;
        if step < steps && step % (steps / m) == 0 {
            us.push(vec![yy[0]]);
            vs.push(vec![yy[1]]);
        }
        Ok(())
    };
    rk4_advance(&mut y, F::zero(), sys.period, dt, &mut ws, &mut deriv, &mut on_step)?;
    Ok(PlanarOrbit {
        u: Arc::new(SampledField::new(sys.period, us)?),
        v: Arc::new(SampledField::new(sys.period, vs)?),
        fixed: (fixed[0], fixed[1]),
        periods,
        delta,
    })
}

/// Finds the positive periodic orbit(s) of a forced planar system by
/// bracketing between two corner iterations.
///
/// Requires the ratio condition `inf b1 / sup b2 > sup c1 / inf c2`
/// (uniqueness); the returned pair reports whether the two limits
/// actually coincided.
pub fn lemma_planar_periodic<F: Real>(
    sys: &ForcedPlanarSystem<F>,
    options: PlanarOptions<F>,
) -> Result<PlanarOrbitPair<F>> {
    let bounds = sys.validate()?;
    let ratio_lhs = bounds.b1.lower / bounds.b2.upper;
    let ratio_rhs = bounds.c1.upper / bounds.c2.lower;
    if !(ratio_lhs > ratio_rhs) {
        return Err(Error::Hypothesis(format!(
            "ratio condition fails: inf b1 / sup b2 = {ratio_lhs} is not above \
             sup c1 / inf c2 = {ratio_rhs}"
        )));
    }

    // Forced-logistic auxiliaries. Ignoring competition entirely gives
    // upper orbits; feeding the upper competitor back in gives lower ones.
    let (u_up0, u_up) =
        solve_forced_logistic(&sys.a1, &sys.b1, &sys.d1, sys.period, options)?;
    let (v_up0, v_up) =
        solve_forced_logistic(&sys.a2, &sys.c2, &sys.d2, sys.period, options)?;

    let u_up_arc = Arc::new(u_up);
    let v_up_arc = Arc::new(v_up);
    let a2_eff = {
        let a2 = sys.a2.clone();
        let b2 = sys.b2.clone();
        let uu = Arc::clone(&u_up_arc);
        TimeFunction::from_closure(sys.period, move |t| a2.value(t) - b2.value(t) * uu.value_at(t, 0))
    };
    let a1_eff = {
        let a1 = sys.a1.clone();
        let c1 = sys.c1.clone();
        let vv = Arc::clone(&v_up_arc);
        TimeFunction::from_closure(sys.period, move |t| a1.value(t) - c1.value(t) * vv.value_at(t, 0))
    };
    let (v_dn0, _) = solve_forced_logistic(&a2_eff, &sys.c2, &sys.d2, sys.period, options)?;
    let (u_dn0, _) = solve_forced_logistic(&a1_eff, &sys.b1, &sys.d1, sys.period, options)?;

    // Corner iterations: down from (u_up, v_dn), up from (u_dn, v_up).
    let (upper_fp, upper_periods, upper_delta) =
        planar_monotone(sys, [u_up0, v_dn0], true, options)?;
    let (lower_fp, lower_periods, lower_delta) =
        planar_monotone(sys, [u_dn0, v_up0], false, options)?;

    let (ordered, viol) = planar_leq2(lower_fp, upper_fp, real(1e-9));
    if !ordered {
        return Err(Error::Monotonicity(format!(
            "planar corner limits are not competitively ordered (violation {viol})"
        )));
    }

    let upper = sample_planar_orbit(sys, upper_fp, upper_periods, upper_delta, options)?;
    let lower = sample_planar_orbit(sys, lower_fp, lower_periods, lower_delta, options)?;
    let gap = (upper_fp[0] - lower_fp[0])
        .abs()
        .max((upper_fp[1] - lower_fp[1]).abs());
    Ok(PlanarOrbitPair {
        upper,
        lower,
        gap,
        coincide: gap < options.match_tol,
        ratio_lhs,
        ratio_rhs,
    })
}

/// Result of reconstructing one lattice node from planar dynamics.
#[derive(Debug, Clone)]
pub struct ReconstructionReport<F: Real> {
    pub node: usize,
    /// Max mismatch of the planar orbit against the stored lattice orbit
    /// over the sample mesh, per component.
    pub max_error_u: F,
    pub max_error_v: F,
    pub planar: PlanarOrbitPair<F>,
}

/// Rebuilds the dynamics of a single node of a two-species lattice orbit
/// as a forced planar system and checks that the planar solve reproduces
/// the stored orbit values there.
///
/// At node `x` the lattice system reads, with `m(x)` the local zeroth
/// order multiplier and `K` the pure quadrature convolution,
///
/// ```text
/// u' = u (a1(t,x) + nu1 m(x) - b1 u - c1 v) + nu1 (K u_orbit)(t, x)
/// ```
///
/// so the incoming dispersal mass along the orbit acts as positive
/// periodic forcing and the local multiplier folds into the growth rate.
pub fn reconstruct_pointwise<F: Real>(
    spec: &SystemSpec<F>,
    orbit: &PeriodicOrbit<F>,
    node: usize,
    options: PlanarOptions<F>,
) -> Result<ReconstructionReport<F>> {
    let grid = spec.grid();
    let n = grid.len();
    if node >= n {
        return Err(Error::InvalidInput(format!(
            "node {node} is out of range for a {n}-node grid"
        )));
    }
    if orbit.u.len_space() != n {
        return Err(Error::GridMismatch(format!(
            "orbit has {} nodes, the grid has {n}",
            orbit.u.len_space()
        )));
    }

    let period = spec.period();
    let coord = grid.coord(node);
    let m_node = spec.op().m_unit()[node];
    let (nu1, nu2) = (spec.nu1(), spec.nu2());

    // Incoming dispersal mass at the node along the orbit, sampled on the
    // orbit's own mesh.
    let m_time = orbit.u.len_time();
    let mut d1 = Vec::with_capacity(m_time);
    let mut d2 = Vec::with_capacity(m_time);
    for k in 0..m_time {
        d1.push(vec![nu1 * spec.op().kernel_convolve_at(node, orbit.u.slice(k))]);
        d2.push(vec![nu2 * spec.op().kernel_convolve_at(node, orbit.v.slice(k))]);
    }
    let d1 = TimeFunction::from_samples(SampledField::new(period, d1)?)?;
    let d2 = TimeFunction::from_samples(SampledField::new(period, d2)?)?;

    // Node-local coefficients as time functions; the local multiplier
    // shifts the growth rates.
    let pick = |f: &crate::fields::CoefficientField<F>, shift: F| {
        let f = f.clone();
        TimeFunction::from_closure(period, move |t| f.value(t, node, coord) + shift)
    };
    let sys = ForcedPlanarSystem {
        period,
        a1: pick(spec.a1(), nu1 * m_node),
        a2: pick(spec.a2(), nu2 * m_node),
        b1: pick(spec.b1(), F::zero()),
        b2: pick(spec.b2(), F::zero()),
        c1: pick(spec.c1(), F::zero()),
        c2: pick(spec.c2(), F::zero()),
        d1,
        d2,
    };

    let planar = lemma_planar_periodic(&sys, options)?;

    // Compare against the stored orbit at its sample times.
    let mut err_u = F::zero();
    let mut err_v = F::zero();
    for k in 0..m_time {
        let t = period * real_of_usize::<F>(k) / real_of_usize::<F>(m_time);
        let (pu, pv) = planar.upper.state_at(t);
        err_u = err_u.max((pu - orbit.u.slice(k)[node]).abs());
        err_v = err_v.max((pv - orbit.v.slice(k)[node]).abs());
    }

    Ok(ReconstructionReport {
        node,
        max_error_u: err_u,
        max_error_v: err_v,
        planar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_planar() -> PlanarOptions<f64> {
        PlanarOptions {
            steps_per_period: 4000,
            orbit_samples: 512,
            ..PlanarOptions::default()
        }
    }

    #[test]
    fn forced_logistic_hits_the_quadratic_root()  {
        // w (1 - w) + 1/4 = 0 at w = (1 + sqrt 2) / 2.
        let one = TimeFunction::constant(1.0, 1.0);
        let d = TimeFunction::constant(1.0, 0.25);
        let (w0, orbit) = solve_forced_logistic(&one, &one, &d, 1.0, fast_planar()).unwrap();
        let expected = (1.0 + 2.0f64.sqrt()) / 2.0;
        assert!((w0 - expected).abs() < 1e-9, "{w0} vs {expected}");
        assert!((orbit.min_value() - expected).abs() < 1e-9);
        assert!((orbit.max_value() - expected).abs() < 1e-9);
    }

    #[test]
    fn constant_forced_planar_system_matches_its_equilibrium() {
        // Symmetric system: u = v solves 1.5 u^2 - u - 0.1 = 0.
        let c = |v: f64| TimeFunction::constant(1.0, v);
        let sys = ForcedPlanarSystem {
            period: 1.0,
            a1: c(1.0),
            a2: c(1.0),
            b1: c(1.0),
            b2: c(0.5),
            c1: c(0.5),
            c2: c(1.0),
            d1: c(0.1),
            d2: c(0.1),
        };
        let pair = lemma_planar_periodic(&sys, fast_planar()).unwrap();
        let expected = (1.0 + 1.6f64.sqrt()) / 3.0;
        assert!(pair.coincide, "gap = {}", pair.gap);
        assert!((pair.upper.fixed.0 - expected).abs() < 1e-8, "{:?}", pair.upper.fixed);
        assert!((pair.upper.fixed.1 - expected).abs() < 1e-8, "{:?}", pair.upper.fixed);
    }

    #[test]
    fn ratio_condition_violation_is_a_hypothesis_error() {
        let c = |v: f64| TimeFunction::constant(1.0, v);
        let sys = ForcedPlanarSystem {
            period: 1.0,
            a1: c(1.0),
            a2: c(1.0),
            b1: c(1.0),
            b2: c(2.0),
            c1: c(2.0),
            c2: c(1.0),
            d1: c(0.1),
            d2: c(0.1),
        };
        let res = lemma_planar_periodic(&sys, fast_planar());
        assert!(matches!(res, Err(Error::Hypothesis(_))), "{res:?}");
    }

    #[test]
    fn nonpositive_forcing_is_rejected() {
        let c = |v: f64| TimeFunction::constant(1.0, v);
        let sys = ForcedPlanarSystem {
            period: 1.0,
            a1: c(1.0),
            a2: c(1.0),
            b1: c(1.0),
            b2: c(0.5),
            c1: c(0.5),
            c2: c(1.0),
            d1: c(0.0),
            d2: c(0.1),
        };
        assert!(matches!(
            lemma_planar_periodic(&sys, fast_planar()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn periodic_forcing_is_bracketed_and_positive() {
        let c = |v: f64| TimeFunction::constant(1.0, v);
        let sys = ForcedPlanarSystem {
            period: 1.0,
            a1: TimeFunction::from_expr(1.0, "1 + 0.3*sin(2*pi*t)").unwrap(),
            a2: c(0.9),
            b1: c(1.0),
            b2: c(0.4),
            c1: c(0.3),
            c2: c(1.0),
            d1: TimeFunction::from_expr(1.0, "0.2*(1 + 0.5*sin(2*pi*t))").unwrap(),
            d2: c(0.15),
        };
        let pair = lemma_planar_periodic(&sys, fast_planar()).unwrap();
        assert!(pair.coincide, "gap = {}", pair.gap);
        assert!(pair.upper.u.min_value() > 0.0);
        assert!(pair.upper.v.min_value() > 0.0);
        // The orbit genuinely oscillates with the forcing.
        assert!(pair.upper.u.max_value() - pair.upper.u.min_value() > 0.05);
    }

    #[test]
    fn time_function_expressions_reject_space() {
        assert!(TimeFunction::<f64>::from_expr(1.0, "1 + x").is_err());
        let f = TimeFunction::<f64>::from_expr(2.0, "sin(2*pi*t/T)").unwrap();
        assert!((f.value(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_closes_the_loop_on_a_homogeneous_coexistence_orbit() {
        use crate::domain::{assemble_dispersal, build_grid, build_kernel, KernelProfile, Regime};
        use crate::fields::CoefficientField;
        use crate::periodic::{coexistence_iterate, CoexistenceOptions, ScalarSolveOptions};
        use std::sync::Arc;

        let grid = Arc::new(build_grid(1, vec![2.0], vec![12], Regime::NeumannType).unwrap());
        let kernel = Arc::new(build_kernel(&grid, 0.5, KernelProfile::SmoothBump).unwrap());
        let op = Arc::new(assemble_dispersal(&grid, &kernel).unwrap());
        let f = |v: f64| CoefficientField::constant(1.0, v);
        let spec = crate::dynamics::SystemSpec::new(
            op, 0.5, 0.5, 1.0,
            f(1.0), f(1.0), f(1.0), f(0.5), f(0.5), f(1.0),
        )
        .unwrap();
        let out = coexistence_iterate(
            &spec,
            CoexistenceOptions {
                scalar: ScalarSolveOptions {
                    steps_per_period: 500,
                    ..ScalarSolveOptions::default()
                },
                ..CoexistenceOptions::default()
            },
        )
        .unwrap();
        let report = reconstruct_pointwise(&spec, &out.upper, 6, fast_planar()).unwrap();
        assert!(report.max_error_u < 1e-6, "u error {}", report.max_error_u);
        assert!(report.max_error_v < 1e-6, "v error {}", report.max_error_v);
        assert!(report.planar.coincide);
    }
}
