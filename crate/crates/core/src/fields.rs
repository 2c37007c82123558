//! Time-periodic coefficient fields, nodal state containers, bounds and the
//! two partial orders of the competition system.
//!
//! A [`CoefficientField`] is a `T`-periodic function of time and space
//! evaluated at grid nodes. Fields come from closed-form expressions, plain
//! closures, constants, or periodically sampled data (orbit components) that
//! are interpolated in time with a cubic Catmull-Rom rule. Each field caches
//! how it varies ([`FieldKind`]) so hot loops can avoid re-evaluating
//! space-only or time-only fields per node per stage.

use std::sync::Arc;

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::expr::{self, ParsedExpr};
use crate::scalar::{real, real_of_usize, Real};

/// How a coefficient field varies; used to pick caching strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Neither time nor space dependent.
    Constant,
    /// Space-only; safe to sample once per grid.
    Spatial,
    /// Time-only; one evaluation per time serves every node.
    Temporal,
    /// Varies in both time and space.
    General,
}

/// Uniformly sampled `T`-periodic nodal time series with cubic
/// interpolation; the storage behind orbit-derived coefficient fields.
///
/// `values[k]` holds the nodal vector at `t_k = k T / M` for `k = 0..M-1`
/// (the sample at `t = T` is the sample at `t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField<F> {
    period: F,
    values: Vec<Vec<F>>,
}

impl<F: Real> SampledField<F> {
    /// Wraps one period of uniformly spaced nodal samples (at least 4,
    /// without the duplicated end sample).
    pub fn new(period: F, values: Vec<Vec<F>>) -> Result<Self> {
        if !(period > F::zero()) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "sampled field period must be positive and finite, got {period}"
            )));
        }
        if values.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "sampled field needs at least 4 time samples, got {}",
                values.len()
            )));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidInput(
                "sampled field slices must be nonempty and equally long".to_string(),
            ));
        }
        Ok(SampledField { period, values })
    }

    pub fn period(&self) -> F {
        self.period
    }

    /// Number of time samples per period.
    pub fn len_time(&self) -> usize {
        self.values.len()
    }

    /// Number of nodes per slice.
    pub fn len_space(&self) -> usize {
        self.values[0].len()
    }

    pub fn slice(&self, k: usize) -> &[F] {
        &self.values[k]
    }

    /// Interpolation stencil for time `t`: cell index, the three neighbor
    /// indices (periodic) and the in-cell coordinate.
    fn stencil(&self, t: F) -> ([usize; 4], F) {
        let m = self.values.len();
        let mf = real_of_usize::<F>(m);
        // Fold into [0, M) sample coordinates.
        let mut s = t / self.period;
        s = s - s.floor();
        let mut phase = s * mf;
        if phase >= mf {
            phase = F::zero();
        }
        let cell = phase
            .floor()
            .to_usize()
            .expect("interpolation cell index")
            .min(m - 1);
        let u = phase - real_of_usize::<F>(cell);
        let idx = [
            (cell + m - 1) % m,
            cell,
            (cell + 1) % m,
            (cell + 2) % m,
        ];
        (idx, u)
    }

    /// Catmull-Rom weights for in-cell coordinate `u`.
    fn weights(u: F) -> [F; 4] {
        let half = real::<F>(0.5);
        let u2 = u * u;
        let u3 = u2 * u;
        [
            half * (-u3 + real::<F>(2.0) * u2 - u),
            half * (real::<F>(3.0) * u3 - real::<F>(5.0) * u2 + real::<F>(2.0)),
            half * (-real::<F>(3.0) * u3 + real::<F>(4.0) * u2 + u),
            half * (u3 - u2),
        ]
    }

    /// Interpolated nodal vector at time `t`, written into `out`.
    pub fn fill(&self, t: F, out: &mut [F]) {
        assert_eq!(out.len(), self.len_space(), "sampled field fill length");
        let (idx, u) = self.stencil(t);
        let w = Self::weights(u);
        let rows = [
            &self.values[idx[0]],
            &self.values[idx[1]],
            &self.values[idx[2]],
            &self.values[idx[3]],
        ];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = w[0] * rows[0][i] + w[1] * rows[1][i] + w[2] * rows[2][i] + w[3] * rows[3][i];
        }
    }

    /// Interpolated value at time `t` and one node.
    pub fn value_at(&self, t: F, node: usize) -> F {
        let (idx, u) = self.stencil(t);
        let w = Self::weights(u);
        w[0] * self.values[idx[0]][node]
            + w[1] * self.values[idx[1]][node]
            + w[2] * self.values[idx[2]][node]
            + w[3] * self.values[idx[3]][node]
    }

    /// Discrete mean over the period per node.
    pub fn time_average(&self) -> Vec<F> {
        let n = self.len_space();
        let m = real_of_usize::<F>(self.values.len());
        let mut avg = vec![F::zero(); n];
        for slice in &self.values {
            for (a, &v) in avg.iter_mut().zip(slice) {
                *a = *a + v;
            }
        }
        for a in &mut avg {
            *a = *a / m;
        }
        avg
    }

    /// Smallest sample across the whole period.
    pub fn min_value(&self) -> F {
        self.values
            .iter()
            .flatten()
            .fold(F::infinity(), |m, &v| m.min(v))
    }

    /// Largest sample across the whole period.
    pub fn max_value(&self) -> F {
        self.values
            .iter()
            .flatten()
            .fold(F::neg_infinity(), |m, &v| m.max(v))
    }
}

type FieldClosure<F> = Arc<dyn Fn(F, usize, [F; 2]) -> F + Send + Sync>;

#[derive(Clone)]
enum Repr<F: Real> {
    Constant(F),
    Expr(Arc<ParsedExpr>),
    Closure { kind: FieldKind, f: FieldClosure<F> },
    Sampled(Arc<SampledField<F>>),
    /// `a(t,x) - b(t,x) * w(t,x)` for sampled `w`; the linearization of a
    /// growth term around an orbit.
    Linearized {
        a: Box<CoefficientField<F>>,
        b: Box<CoefficientField<F>>,
        orbit: Arc<SampledField<F>>,
    },
}

/// A `T`-periodic scalar coefficient of the competition system, evaluated
/// at grid nodes.
///
/// The evaluator contract is periodicity: `value(t + T, ...) =
/// value(t, ...)` for all `t`. Expression-backed fields satisfy it whenever
/// the expression uses `t` only through `T`-periodic terms.
#[derive(Clone)]
pub struct CoefficientField<F: Real> {
    period: F,
    repr: Repr<F>,
}

impl<F: Real> std::fmt::Debug for CoefficientField<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = self.kind();
        match &self.repr {
            Repr::Constant(c) => write!(f, "CoefficientField(constant {c})"),
            Repr::Expr(e) => write!(f, "CoefficientField(expr '{}', {kind:?})", e.source()),
            Repr::Closure { .. } => write!(f, "CoefficientField(closure, {kind:?})"),
            Repr::Sampled(s) => write!(
                f,
                "CoefficientField(sampled {}x{})",
                s.len_time(),
                s.len_space()
            ),
            Repr::Linearized { .. } => write!(f, "CoefficientField(linearized, {kind:?})"),
        }
    }
}

impl<F: Real> CoefficientField<F> {
    /// Constant-in-time-and-space field.
    pub fn constant(period: F, value: F) -> Self {
        CoefficientField {
            period,
            repr: Repr::Constant(value),
        }
    }

    /// Parses a closed-form expression (see [`crate::expr`]) with `T` bound
    /// to `period`.
    pub fn from_expr(period: F, source: &str) -> Result<Self> {
        let parsed = expr::parse(source)
            .map_err(|e| Error::InvalidInput(format!("expression '{source}': {e}")))?;
        Ok(CoefficientField {
            period,
            repr: Repr::Expr(Arc::new(parsed)),
        })
    }

    /// Wraps a closure `(t, node, coord) -> value`. `kind` is a promise
    /// about what the closure depends on and enables caching; a wrong kind
    /// silently evaluates the field incorrectly, so only narrow it when
    /// certain.
    pub fn from_closure(
        period: F,
        kind: FieldKind,
        f: impl Fn(F, usize, [F; 2]) -> F + Send + Sync + 'static,
    ) -> Self {
        CoefficientField {
            period,
            repr: Repr::Closure {
                kind,
                f: Arc::new(f),
            },
        }
    }

    /// Wraps sampled periodic data (cubic interpolation in time).
    pub fn from_samples(samples: SampledField<F>) -> Self {
        CoefficientField {
            period: samples.period(),
            repr: Repr::Sampled(Arc::new(samples)),
        }
    }

    /// Builds `a - b * w` for a sampled orbit component `w`: the growth
    /// rate of one species linearized along an orbit.
    pub fn linearized(
        a: &CoefficientField<F>,
        b: &CoefficientField<F>,
        orbit: Arc<SampledField<F>>,
    ) -> Self {
        CoefficientField {
            period: a.period(),
            repr: Repr::Linearized {
                a: Box::new(a.clone()),
                b: Box::new(b.clone()),
                orbit,
            },
        }
    }

    pub fn period(&self) -> F {
        self.period
    }

    pub fn kind(&self) -> FieldKind {
        match &self.repr {
            Repr::Constant(_) => FieldKind::Constant,
            Repr::Expr(e) => match (e.uses_time(), e.uses_space()) {
                (false, false) => FieldKind::Constant,
                (false, true) => FieldKind::Spatial,
                (true, false) => FieldKind::Temporal,
                (true, true) => FieldKind::General,
            },
            Repr::Closure { kind, .. } => *kind,
            Repr::Sampled(_) | Repr::Linearized { .. } => FieldKind::General,
        }
    }

    /// Value at time `t`, node index `node`, node coordinates `coord`.
    pub fn value(&self, t: F, node: usize, coord: [F; 2]) -> F {
        match &self.repr {
            Repr::Constant(c) => *c,
            Repr::Expr(e) => e.eval(t, coord[0], coord[1], self.period),
            Repr::Closure { f, .. } => f(t, node, coord),
            Repr::Sampled(s) => s.value_at(t, node),
            Repr::Linearized { a, b, orbit } => {
                a.value(t, node, coord) - b.value(t, node, coord) * orbit.value_at(t, node)
            }
        }
    }

    /// Evaluates the field at every node of `grid` at time `t`.
    pub fn fill(&self, t: F, grid: &Grid<F>, out: &mut [F]) {
        assert_eq!(out.len(), grid.len(), "field fill length mismatch");
        match &self.repr {
            Repr::Constant(c) => out.fill(*c),
            Repr::Expr(e) => {
                if !e.uses_space() {
                    let v = e.eval(t, F::zero(), F::zero(), self.period);
                    out.fill(v);
                } else {
                    for (i, slot) in out.iter_mut().enumerate() {
                        let c = grid.coord(i);
                        *slot = e.eval(t, c[0], c[1], self.period);
                    }
                }
            }
            Repr::Closure { kind, f } => match kind {
                FieldKind::Constant | FieldKind::Temporal => {
                    let v = f(t, 0, grid.coord(0));
                    out.fill(v);
                }
                _ => {
                    for (i, slot) in out.iter_mut().enumerate() {
                        *slot = f(t, i, grid.coord(i));
                    }
                }
            },
            Repr::Sampled(s) => s.fill(t, out),
            Repr::Linearized { a, b, orbit } => {
                let n = out.len();
                let mut bv = vec![F::zero(); n];
                let mut wv = vec![F::zero(); n];
                a.fill(t, grid, out);
                b.fill(t, grid, &mut bv);
                orbit.fill(t, &mut wv);
                for i in 0..n {
                    out[i] = out[i] - bv[i] * wv[i];
                }
            }
        }
    }

    /// Time average `(1/T) ∫_0^T field(t, x) dt` per node, by the rectangle
    /// rule on `samples` equispaced points (exact up to spectral accuracy
    /// for smooth periodic fields).
    pub fn time_average(&self, grid: &Grid<F>, samples: usize) -> Vec<F> {
        assert!(samples >= 2, "time_average needs at least 2 samples");
        let n = grid.len();
        let mut avg = vec![F::zero(); n];
        let mut buf = vec![F::zero(); n];
        let step = self.period / real_of_usize::<F>(samples);
        for k in 0..samples {
            let t = real_of_usize::<F>(k) * step;
            self.fill(t, grid, &mut buf);
            for (a, &v) in avg.iter_mut().zip(&buf) {
                *a = *a + v;
            }
        }
        let m = real_of_usize::<F>(samples);
        for a in &mut avg {
            *a = *a / m;
        }
        avg
    }
}

/// Inclusive lower/upper bound of a field over the evaluation mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound<F> {
    pub lower: F,
    pub upper: F,
}

impl<F: Real> Bound<F> {
    pub fn width(&self) -> F {
        self.upper - self.lower
    }
}

/// Scans a field over `time_samples` x grid nodes and returns its extremes.
///
/// Errors on non-finite samples (typically a division by zero inside an
/// expression).
pub fn field_bounds<F: Real>(
    field: &CoefficientField<F>,
    grid: &Grid<F>,
    time_samples: usize,
) -> Result<Bound<F>> {
    assert!(time_samples >= 1, "field_bounds needs at least 1 sample");
    let times = match field.kind() {
        FieldKind::Constant | FieldKind::Spatial => 1,
        _ => time_samples,
    };
    let n = grid.len();
    let mut buf = vec![F::zero(); n];
    let step = field.period() / real_of_usize::<F>(times);
    let mut lower = F::infinity();
    let mut upper = F::neg_infinity();
    for k in 0..times {
        let t = real_of_usize::<F>(k) * step;
        field.fill(t, grid, &mut buf);
        for (i, &v) in buf.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "coefficient sample at t={t}, node {i}"
                )));
            }
            lower = lower.min(v);
            upper = upper.max(v);
        }
    }
    Ok(Bound { lower, upper })
}

/// Lower/upper bounds of the six competition coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBounds<F> {
    pub a1: Bound<F>,
    pub a2: Bound<F>,
    pub b1: Bound<F>,
    pub b2: Bound<F>,
    pub c1: Bound<F>,
    pub c2: Bound<F>,
}

/// Computes mesh bounds for the six coefficients `(a1, a2, b1, b2, c1, c2)`
/// over `time_samples` equispaced times.
pub fn compute_bounds<F: Real>(
    coefficients: [&CoefficientField<F>; 6],
    grid: &Grid<F>,
    time_samples: usize,
) -> Result<CoefficientBounds<F>> {
    let [a1, a2, b1, b2, c1, c2] = coefficients;
    Ok(CoefficientBounds {
        a1: field_bounds(a1, grid, time_samples)?,
        a2: field_bounds(a2, grid, time_samples)?,
        b1: field_bounds(b1, grid, time_samples)?,
        b2: field_bounds(b2, grid, time_samples)?,
        c1: field_bounds(c1, grid, time_samples)?,
        c2: field_bounds(c2, grid, time_samples)?,
    })
}

/// Nodal state of the two-species system at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<F> {
    pub time: F,
    pub u: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Real> StateField<F> {
    pub fn new(time: F, u: Vec<F>, v: Vec<F>) -> Self {
        assert_eq!(u.len(), v.len(), "state components must match in length");
        StateField { time, u, v }
    }

    /// Constant state `(u0, v0)` on `n` nodes at time zero.
    pub fn constant(n: usize, u0: F, v0: F) -> Self {
        StateField {
            time: F::zero(),
            u: vec![u0; n],
            v: vec![v0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Smallest component across both species.
    pub fn min_component(&self) -> F {
        let mu = self.u.iter().fold(F::infinity(), |m, &v| m.min(v));
        let mv = self.v.iter().fold(F::infinity(), |m, &v| m.min(v));
        mu.min(mv)
    }

    /// Largest component across both species.
    pub fn max_component(&self) -> F {
        let mu = self.u.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        let mv = self.v.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        mu.max(mv)
    }

    /// Sup distance between two states, over both components.
    pub fn sup_distance(&self, other: &StateField<F>) -> F {
        crate::scalar::sup_distance(&self.u, &other.u)
            .max(crate::scalar::sup_distance(&self.v, &other.v))
    }
}

/// Which partial order to compare with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Componentwise: `u1 <= u2` and `v1 <= v2`.
    Standard,
    /// Competitive: `u1 <= u2` and `v1 >= v2`.
    Competitive,
}

/// Which component and node witnessed the worst violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderWitness {
    pub node: usize,
    /// 0 for the first species, 1 for the second.
    pub component: usize,
}

/// Outcome of an order comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderCheck<F> {
    /// True when the order holds within the given slack.
    pub holds: bool,
    /// Largest amount by which a required inequality fails; nonpositive
    /// when the order holds exactly.
    pub worst_violation: F,
    /// Location of the worst violation (always present; for ordered pairs
    /// it marks the tightest inequality).
    pub witness: OrderWitness,
}

/// Checks `first <= second` in the chosen order, allowing `slack` of
/// floating-point leakage per node.
pub fn order_compare<F: Real>(
    first: &StateField<F>,
    second: &StateField<F>,
    order: Order,
    slack: F,
) -> OrderCheck<F> {
    assert_eq!(first.len(), second.len(), "order_compare length mismatch");
    let mut worst = F::neg_infinity();
    let mut witness = OrderWitness {
        node: 0,
        component: 0,
    };
    for i in 0..first.len() {
        // Violation of u1 <= u2.
        let du = first.u[i] - second.u[i];
        if du > worst {
            worst = du;
            witness = OrderWitness {
                node: i,
                component: 0,
            };
        }
        // Violation of the v inequality, direction depending on the order.
        let dv = match order {
            Order::Standard => first.v[i] - second.v[i],
            Order::Competitive => second.v[i] - first.v[i],
        };
        if dv > worst {
            worst = dv;
            witness = OrderWitness {
                node: i,
                component: 1,
            };
        }
    }
    OrderCheck {
        holds: worst <= slack,
        worst_violation: worst,
        witness,
    }
}

/// A coefficient field specialized to one grid, with space-only and
/// constant fields precomputed. This is the hot-loop representation used
/// by the integrators.
#[derive(Debug, Clone)]
pub enum CompiledField<F: Real> {
    Constant(F),
    Spatial(Vec<F>),
    Live(CoefficientField<F>),
}

impl<F: Real> CompiledField<F> {
    /// Specializes `field` to `grid`.
    pub fn compile(field: &CoefficientField<F>, grid: &Grid<F>) -> Self {
        match field.kind() {
            FieldKind::Constant => CompiledField::Constant(field.value(
                F::zero(),
                0,
                grid.coord(0),
            )),
            FieldKind::Spatial => {
                let mut buf = vec![F::zero(); grid.len()];
                field.fill(F::zero(), grid, &mut buf);
                CompiledField::Spatial(buf)
            }
            _ => CompiledField::Live(field.clone()),
        }
    }

    /// Nodal values at time `t`, written into `out`.
    pub fn fill(&self, t: F, grid: &Grid<F>, out: &mut [F]) {
        match self {
            CompiledField::Constant(c) => out.fill(*c),
            CompiledField::Spatial(values) => out.copy_from_slice(values),
            CompiledField::Live(field) => field.fill(t, grid, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, Regime};
    use std::f64::consts::PI;

    fn grid() -> Grid<f64> {
        build_grid(1, vec![2.0], vec![16], Regime::NeumannType).unwrap()
    }

    #[test]
    fn constant_field_bounds_and_average_are_the_constant() {
        let g = grid();
        let f = CoefficientField::constant(1.0, 2.5);
        let b = field_bounds(&f, &g, 64).unwrap();
        assert_eq!(b.lower, 2.5);
        assert_eq!(b.upper, 2.5);
        let avg = f.time_average(&g, 64);
        assert!(avg.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn sinusoidal_field_bounds_hit_the_extremes_on_aligned_meshes() {
        let g = grid();
        let f = CoefficientField::from_expr(1.0, "1 + 0.5*sin(2*pi*t/T)").unwrap();
        // 64 samples include t = T/4 and t = 3T/4 where sin = +-1.
        let b = field_bounds(&f, &g, 64).unwrap();
        assert!((b.lower - 0.5).abs() < 1e-12);
        assert!((b.upper - 1.5).abs() < 1e-12);
        let avg = f.time_average(&g, 64);
        assert!(avg.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn spatial_field_averages_to_itself() {
        let g = grid();
        let f = CoefficientField::from_expr(1.0, "1 + 0.5*cos(pi*x)").unwrap();
        assert_eq!(f.kind(), FieldKind::Spatial);
        let avg = f.time_average(&g, 8);
        for (i, &v) in avg.iter().enumerate() {
            let expected = 1.0 + 0.5 * (PI * g.coord(i)[0]).cos();
            assert!((v - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn refining_the_time_mesh_only_widens_bounds() {
        let g = grid();
        let f = CoefficientField::from_expr(1.0, "sin(2*pi*t/T) + 0.3*cos(2*pi*t/T)").unwrap();
        let coarse = field_bounds(&f, &g, 64).unwrap();
        let mid = field_bounds(&f, &g, 128).unwrap();
        let fine = field_bounds(&f, &g, 256).unwrap();
        // Doubled meshes are nested, so minima never increase.
        assert!(mid.lower <= coarse.lower);
        assert!(fine.lower <= mid.lower);
        assert!(mid.upper >= coarse.upper);
        assert!(fine.upper >= mid.upper);
    }

    #[test]
    fn bounds_reject_non_finite_fields() {
        let g = grid();
        let f = CoefficientField::from_expr(1.0, "1/(x - x)").unwrap();
        assert!(matches!(
            field_bounds(&f, &g, 4),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn order_comparisons_follow_the_competitive_order() {
        let a = StateField::new(0.0, vec![1.0, 1.0], vec![2.0, 2.0]);
        let b = StateField::new(0.0, vec![1.5, 1.2], vec![1.0, 0.5]);
        // a <=_2 b: u grows, v falls.
        let chk = order_compare(&a, &b, Order::Competitive, 0.0);
        assert!(chk.holds);
        assert!(chk.worst_violation <= 0.0);
        // But not in the standard order.
        let chk = order_compare(&a, &b, Order::Standard, 0.0);
        assert!(!chk.holds);
        assert_eq!(chk.witness.component, 1);
        // Equal states satisfy both orders with zero violation.
        let chk = order_compare(&a, &a, Order::Standard, 0.0);
        assert!(chk.holds);
        assert_eq!(chk.worst_violation, 0.0);
    }

    #[test]
    fn sampled_field_interpolates_smooth_data_at_third_order() {
        // Samples of sin(2 pi t) at M points. Catmull-Rom tangents carry an
        // O(h^2) error, so the interpolant is O(h^3) at generic points:
        // refining the mesh by 2 should cut the error by about 8.
        let build = |m: usize| {
            let values: Vec<Vec<f64>> = (0..m)
                .map(|k| vec![(2.0 * PI * k as f64 / m as f64).sin()])
                .collect();
            SampledField::new(1.0, values).unwrap()
        };
        let s = build(64);
        // Exact at samples.
        assert!((s.value_at(0.25, 0) - 1.0).abs() < 1e-12);
        // Accurate off-sample, converging at third order.
        let t = 0.1234;
        let err = (s.value_at(t, 0) - (2.0 * PI * t).sin()).abs();
        assert!(err < 2e-5, "interpolation error {err}");
        let err2 = (build(128).value_at(t, 0) - (2.0 * PI * t).sin()).abs();
        let ratio = err / err2;
        assert!((5.0..14.0).contains(&ratio), "refinement ratio {ratio}");
        // Wraps periodically, including negative times.
        let e2 = (s.value_at(t + 3.0, 0) - s.value_at(t, 0)).abs();
        assert!(e2 < 1e-12);
        let e3 = (s.value_at(t - 1.0, 0) - s.value_at(t, 0)).abs();
        assert!(e3 < 1e-12);
    }

    #[test]
    fn linearized_field_combines_growth_and_orbit() {
        let g = grid();
        let a = CoefficientField::constant(1.0, 1.0);
        let b = CoefficientField::constant(1.0, 2.0);
        let orbit = Arc::new(
            SampledField::new(1.0, vec![vec![0.25; 16]; 8]).unwrap(),
        );
        let f = CoefficientField::linearized(&a, &b, orbit);
        let mut out = vec![0.0; 16];
        f.fill(0.3, &g, &mut out);
        // 1 - 2 * 0.25 = 0.5 everywhere.
        assert!(out.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert_eq!(f.value(0.7, 3, g.coord(3)), 0.5);
    }

    #[test]
    fn compiled_fields_match_live_evaluation() {
        let g = grid();
        for src in ["2.5", "1 + 0.5*cos(pi*x)", "1 + 0.2*sin(2*pi*t/T)", "t*x"] {
            let f = CoefficientField::from_expr(1.0, src).unwrap();
            let c = CompiledField::compile(&f, &g);
            let mut live = vec![0.0; g.len()];
            let mut compiled = vec![0.0; g.len()];
            for &t in &[0.0, 0.37, 0.99] {
                f.fill(t, &g, &mut live);
                c.fill(t, &g, &mut compiled);
                assert_eq!(live, compiled, "mismatch for '{src}' at t={t}");
            }
        }
    }
}
