//! Minimal dense linear algebra and the shared RK4 stepper.
//!
//! Grids stay at desk scale (a few thousand nodes), so a row-major dense
//! matrix with a straightforward matvec is all the operator algebra needs.
//! The heavier eigendecompositions used to cross-check the spectral solver
//! live in the test suites, not here.

use crate::scalar::{real_of_usize, Real};

/// Row-major dense square-or-rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> DenseMatrix<F> {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: F) {
        self.data[i * self.cols + j] = value;
    }

    /// Immutable view of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable view of row `i`.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Sum of the entries of row `i`.
    pub fn row_sum(&self, i: usize) -> F {
        self.row(i).iter().fold(F::zero(), |acc, &v| acc + v)
    }

    /// `out = self * x`.
    pub fn apply(&self, x: &[F], out: &mut [F]) {
        assert_eq!(x.len(), self.cols, "matvec: input length mismatch");
        assert_eq!(out.len(), self.rows, "matvec: output length mismatch");
        for (i, out_i) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = F::zero();
            for (a, &v) in row.iter().zip(x) {
                acc = acc + *a * v;
            }
            *out_i = acc;
        }
    }

    /// Writes the j-th canonical basis vector into `out`.
    pub fn basis_vector(n: usize, j: usize, out: &mut Vec<F>) {
        out.clear();
        out.resize(n, F::zero());
        out[j] = F::one();
    }
}

/// Scratch space for [`rk4_advance`]; reuse across steps to avoid
/// reallocating five state-sized vectors per call.
#[derive(Debug, Clone)]
pub struct Rk4Workspace<F> {
    k1: Vec<F>,
    k2: Vec<F>,
    k3: Vec<F>,
    k4: Vec<F>,
    stage: Vec<F>,
}

impl<F: Real> Rk4Workspace<F> {
    pub fn new(len: usize) -> Self {
        Rk4Workspace {
            k1: vec![F::zero(); len],
            k2: vec![F::zero(); len],
            k3: vec![F::zero(); len],
            k4: vec![F::zero(); len],
            stage: vec![F::zero(); len],
        }
    }

    fn resize(&mut self, len: usize) {
        if self.k1.len() != len {
            *self = Rk4Workspace::new(len);
        }
    }
}

/// One classical RK4 step of `y' = f(t, y)` with step `dt`, in place.
///
/// `deriv(t, y, dy)` must write the derivative of `y` at time `t` into `dy`.
pub fn rk4_step<F: Real>(
    y: &mut [F],
    t: F,
    dt: F,
    ws: &mut Rk4Workspace<F>,
    deriv: &mut impl FnMut(F, &[F], &mut [F]),
) {
    ws.resize(y.len());
    let half = dt / real_of_usize::<F>(2);
    let sixth = dt / real_of_usize::<F>(6);
    let two = real_of_usize::<F>(2);

    deriv(t, y, &mut ws.k1);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + half * ws.k1[i];
    }
    deriv(t + half, &ws.stage, &mut ws.k2);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + half * ws.k2[i];
    }
    deriv(t + half, &ws.stage, &mut ws.k3);
    for i in 0..y.len() {
        ws.stage[i] = y[i] + dt * ws.k3[i];
    }
    deriv(t + dt, &ws.stage, &mut ws.k4);
    for i in 0..y.len() {
        y[i] = y[i] + sixth * (ws.k1[i] + two * ws.k2[i] + two * ws.k3[i] + ws.k4[i]);
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` with nominal step `dt`,
/// shortening the final step so the integration lands on `t1` exactly.
///
/// `on_step(t, y)` is invoked after every accepted step (with the new time);
/// return an error from it to abort (used for negativity/finite checks).
pub fn rk4_advance<F: Real, E>(
    y: &mut [F],
    t0: F,
    t1: F,
    dt: F,
    ws: &mut Rk4Workspace<F>,
    deriv: &mut impl FnMut(F, &[F], &mut [F]),
    on_step: &mut impl FnMut(F, &mut [F]) -> std::result::Result<(), E>,
) -> std::result::Result<(), E> {
    assert!(dt > F::zero(), "rk4_advance: dt must be positive");
    assert!(t1 >= t0, "rk4_advance: t1 must not precede t0");
    let span = t1 - t0;
    if span == F::zero() {
        return Ok(());
    }
    // Number of whole steps; the remainder becomes one shortened step.
    let whole = (span / dt).floor();
    let whole_steps = whole
        .to_usize()
        .expect("rk4_advance: step count overflows usize");
    for k in 0..whole_steps {
        let t = t0 + real_of_usize::<F>(k) * dt;
        rk4_step(y, t, dt, ws, deriv);
        on_step(t + dt, y)?;
    }
    let t_reached = t0 + real_of_usize::<F>(whole_steps) * dt;
    // The loop reported `(t0 + k*dt) + dt`, which can round up to `t1` even
    // when `t_reached` sits an ulp below it. Take the shortened closing step
    // only when it advances the reported time past the last report; otherwise
    // the remainder is accumulated round-off and the window is already done.
    let last_reported = if whole_steps == 0 {
        t0
    } else {
        t0 + real_of_usize::<F>(whole_steps - 1) * dt + dt
    };
    let rest = t1 - t_reached;
    if rest > F::zero() && t1 > last_reported {
        rk4_step(y, t_reached, rest, ws, deriv);
        on_step(t1, y)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_hand_computation() {
        let mut m = DenseMatrix::<f64>::zeros(2, 3);
        m.set(0, 0, 1.0);
        m.set(0, 1, 2.0);
        m.set(0, 2, 3.0);
        m.set(1, 0, -1.0);
        m.set(1, 2, 0.5);
        let mut out = vec![0.0; 2];
        m.apply(&[1.0, 1.0, 2.0], &mut out);
        assert_eq!(out, vec![9.0, 0.0]);
        assert_eq!(m.row_sum(0), 6.0);
    }

    #[test]
    fn rk4_reproduces_exponential_to_classical_order() {
        // y' = y, y(0) = 1; the local error dt^5/120 accumulates over ten
        // steps to a global error of about 2e-6 at dt = 0.1.
        let mut y = vec![1.0f64];
        let mut ws = Rk4Workspace::new(1);
        rk4_advance(
            &mut y,
            0.0,
            1.0,
            0.1,
            &mut ws,
            &mut |_t, s, ds| ds[0] = s[0],
            &mut |_t, _s| Ok::<(), ()>(()),
        )
        .unwrap();
        assert!((y[0] - 1.0f64.exp()).abs() < 5e-6);
    }

    #[test]
    fn rk4_shortened_final_step_lands_on_t1() {
        // Integrate y' = 1 over [0, 1] with dt = 0.3: 3 whole steps + 0.1.
        let mut y = vec![0.0f64];
        let mut ws = Rk4Workspace::new(1);
        let mut times = Vec::new();
        rk4_advance(
            &mut y,
            0.0,
            1.0,
            0.3,
            &mut ws,
            &mut |_t, _s, ds| ds[0] = 1.0,
            &mut |t, _s| {
                times.push(t);
                Ok::<(), ()>(())
            },
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14);
        assert_eq!(times.len(), 4);
        assert!((times[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rk4_step_error_scales_at_fourth_order() {
        // Self-convergence on y' = cos(t) y: halving dt shrinks the
        // one-period error by ~16x.
        let run = |dt: f64| -> f64 {
            let mut y = vec![1.0f64];
            let mut ws = Rk4Workspace::new(1);
            rk4_advance(
                &mut y,
                0.0,
                2.0,
                dt,
                &mut ws,
                &mut |t, s, ds| ds[0] = t.cos() * s[0],
                &mut |_t, _s| Ok::<(), ()>(()),
            )
            .unwrap();
            y[0]
        };
        let exact = 2.0f64.sin().exp();
        let e1 = (run(0.1) - exact).abs();
        let e2 = (run(0.05) - exact).abs();
        let ratio = e1 / e2;
        assert!(
            (12.0..22.0).contains(&ratio),
            "expected ~16x error reduction, got {ratio}"
        );
    }
}
