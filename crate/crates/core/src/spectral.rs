//! Principal spectrum points of time-periodic linear nonlocal operators.
//!
//! For a dispersal operator `A`, a rate `nu > 0` and a T-periodic
//! coefficient `l(t, x)`, the linear evolution is
//!
//! ```text
//! w_t = nu * (A w)(x) + l(t, x) * w(x).
//! ```
//!
//! The principal spectrum point is `lambda = ln(rho) / T` where `rho` is
//! the spectral radius of the period map `w(0) -> w(T)`. The period map of
//! a Metzler-generated flow with an irreducible kernel is a positive
//! matrix, so `rho` is its Perron root and power iteration converges to it
//! together with the positive eigenvector.
//!
//! Two evaluation paths share the same stepper: a dense path that builds
//! the monodromy matrix once by column probes (worth it on small grids,
//! where power iteration then costs one matrix-vector product per step),
//! and a matrix-free path that integrates one period per iteration.

use std::sync::Arc;

use crate::domain::DispersalOperator;
use crate::error::{Error, Result};
use crate::fields::{CoefficientField, CompiledField};
use crate::linalg::{rk4_advance, DenseMatrix, Rk4Workspace};
use crate::scalar::{real, real_of_usize, sup_distance, Real};

/// Grids at most this large use the dense monodromy path by default.
pub const DENSE_MONODROMY_LIMIT: usize = 96;

/// Default RK4 steps per period for linear problems. The linear flow is
/// smooth, so fourth-order error at 500 steps per period sits far below
/// every tolerance used downstream.
pub const DEFAULT_SPECTRAL_STEPS: usize = 500;

/// Relative scale of the principal-eigenvalue gap tolerance.
pub const GAP_TOL_SCALE: f64 = 1e-7;

/// Options for [`principal_spectrum_point`].
#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions<F> {
    /// RK4 steps per period.
    pub steps_per_period: usize,
    /// Power-iteration convergence tolerance (sup-norm change of the
    /// normalized iterate, and relative change of the radius estimate).
    pub tol: F,
    /// Iteration cap before giving up with an error.
    pub max_iterations: usize,
    /// Time samples used for the coefficient average in the
    /// principal-eigenvalue test.
    pub average_samples: usize,
    /// Skip the dense monodromy path even on small grids.
    pub force_matrix_free: bool,
}

impl<F: Real> Default for SpectralOptions<F> {
    fn default() -> Self {
        SpectralOptions {
            steps_per_period: DEFAULT_SPECTRAL_STEPS,
            tol: real(1e-13),
            max_iterations: 100_000,
            average_samples: 256,
            force_matrix_free: false,
        }
    }
}

/// How the principal spectrum point relates to the essential-spectrum
/// bound `max_x (nu * m(x) + l_avg(x))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// The gap is safely positive: the point is an eigenvalue with a
    /// positive eigenfunction, uniformly in the mesh.
    Principal,
    /// The gap is within tolerance of zero; the continuum problem may or
    /// may not have a principal eigenvalue.
    Indeterminate,
    /// The gap is negative beyond tolerance (only possible through
    /// discretization error; reported rather than hidden).
    NotPrincipal,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Principal => "principal",
            Classification::Indeterminate => "indeterminate",
            Classification::NotPrincipal => "not-principal",
        }
    }
}

/// Which evaluation path produced a spectral result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMethod {
    DenseMonodromy,
    MatrixFree,
}

/// Principal spectrum point of one linear periodic problem.
#[derive(Debug, Clone)]
pub struct SpectralResult<F> {
    /// The principal spectrum point `ln(rho) / T`.
    pub lambda: F,
    /// Spectral radius of the period map.
    pub spectral_radius: F,
    /// `max_x (nu * m(x) + time-average of l)`: the bound the point must
    /// clear for a principal eigenfunction to exist in the continuum.
    pub essential_bound: F,
    /// `lambda - essential_bound`.
    pub gap: F,
    /// Tolerance at which the gap is considered resolved.
    pub gap_tol: F,
    /// Whether the gap is safely positive.
    pub is_principal_eigenvalue: bool,
    pub classification: Classification,
    /// Positive period-map eigenvector at phase zero, sup-normalized.
    pub perron: Vec<F>,
    pub iterations: usize,
    /// `||M w - rho w||_inf` for the returned eigenpair.
    pub residual: F,
    pub method: SpectralMethod,
    pub steps_per_period: usize,
}

/// One-period solution operator of the linear problem; owns its scratch
/// space so repeated applications do not allocate.
pub struct LinearPeriodMap<F: Real> {
    op: Arc<DispersalOperator<F>>,
    nu: F,
    period: F,
    compiled: CompiledField<F>,
    steps: usize,
    ws: Rk4Workspace<F>,
    lbuf: Vec<F>,
}

impl<F: Real> LinearPeriodMap<F> {
    pub fn new(
        op: Arc<DispersalOperator<F>>,
        nu: F,
        l: &CoefficientField<F>,
        steps_per_period: usize,
    ) -> Result<Self> {
        if !(nu > F::zero()) || !nu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dispersal rate must be positive and finite, got {nu}"
            )));
        }
        if steps_per_period < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 steps per period, got {steps_per_period}"
            )));
        }
        let n = op.grid().len();
        let compiled = CompiledField::compile(l, op.grid());
        Ok(LinearPeriodMap {
            op,
            nu,
            period: l.period(),
            compiled,
            steps: steps_per_period,
            ws: Rk4Workspace::new(n),
            lbuf: vec![F::zero(); n],
        })
    }

    pub fn grid_len(&self) -> usize {
        self.op.grid().len()
    }

    pub fn period(&self) -> F {
        self.period
    }

    /// Advances `w` across one period in place.
    pub fn apply(&mut self, w: &mut [F]) -> Result<()> {
        let dt = self.period / real_of_usize::<F>(self.steps);
        let op = Arc::clone(&self.op);
        let nu = self.nu;
        let compiled = &self.compiled;
        let grid = op.grid().clone();
        let lbuf = &mut self.lbuf;
        let mut deriv = |t: F, y: &[F], dy: &mut [F]| {
            op.apply(y, dy);
            compiled.fill(t, &grid, lbuf);
            for i in 0..y.len() {
                dy[i] = nu * dy[i] + lbuf[i] * y[i];
            }
        };
        let mut ok = |_: F, y: &mut [F]| -> Result<()> {
            for value in y.iter() {
                if !value.is_finite() {
                    return Err(Error::NonFinite(
                        "linear period map produced a non-finite state".to_string(),
                    ));
                }
            }
            Ok(())
        };
        rk4_advance(w, F::zero(), self.period, dt, &mut self.ws, &mut deriv, &mut ok)
    }

    /// Builds the full monodromy matrix by integrating one basis vector per
    /// column. Quadratic memory, cubic time; intended for small grids.
    pub fn monodromy(&mut self) -> Result<DenseMatrix<F>> {
        let n = self.grid_len();
        let mut m = DenseMatrix::zeros(n, n);
        let mut w = vec![F::zero(); n];
        for j in 0..n {
            w.iter_mut().for_each(|x| *x = F::zero());
            w[j] = F::one();
            self.apply(&mut w)?;
            for i in 0..n {
                m.set(i, j, w[i]);
            }
        }
        Ok(m)
    }
}

/// Power iteration on an abstract positive map. Returns the Perron root,
/// the sup-normalized eigenvector, the iteration count and the residual.
fn power_iteration<F: Real>(
    n: usize,
    mut map: impl FnMut(&mut Vec<F>) -> Result<()>,
    tol: F,
    max_iterations: usize,
) -> Result<(F, Vec<F>, usize, F)> {
    let mut w = vec![F::one(); n];
    let mut rho_prev = F::nan();
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let mut next = w.clone();
        map(&mut next)?;
        let rho = next.iter().fold(F::zero(), |m, &x| m.max(x.abs()));
        if !(rho > F::zero()) || !rho.is_finite() {
            return Err(Error::PowerIteration {
                iterations,
                residual: f64::NAN,
            });
        }
        next.iter_mut().for_each(|x| *x = *x / rho);
        let vec_change = sup_distance(&w, &next);
        let rho_change = if rho_prev.is_finite() {
            (rho - rho_prev).abs() / (F::one() + rho)
        } else {
            F::infinity()
        };
        w = next;
        rho_prev = rho;
        if iterations >= 3 && vec_change < tol && rho_change < tol {
            // Residual of the final eigenpair.
            let mut check = w.clone();
            map(&mut check)?;
            let mut residual = F::zero();
            for i in 0..n {
                residual = residual.max((check[i] - rho * w[i]).abs());
            }
            return Ok((rho, w, iterations, residual));
        }
        if iterations >= max_iterations {
            let mut check = w.clone();
            map(&mut check)?;
            let mut residual = F::zero();
            for i in 0..n {
                residual = residual.max((check[i] - rho * w[i]).abs());
            }
            return Err(Error::PowerIteration {
                iterations,
                residual: crate::scalar::to_f64(residual),
            });
        }
    }
}

/// Computes the principal spectrum point of `w_t = nu (A w) + l w`.
pub fn principal_spectrum_point<F: Real>(
    op: &Arc<DispersalOperator<F>>,
    nu: F,
    l: &CoefficientField<F>,
    options: SpectralOptions<F>,
) -> Result<SpectralResult<F>> {
    let n = op.grid().len();
    let mut pm = LinearPeriodMap::new(Arc::clone(op), nu, l, options.steps_per_period)?;
    let period = l.period();

    let dense = n <= DENSE_MONODROMY_LIMIT && !options.force_matrix_free;
    let (rho, perron, iterations, residual, method) = if dense {
        let m = pm.monodromy()?;
        let map = |w: &mut Vec<F>| -> Result<()> {
            let mut out = vec![F::zero(); w.len()];
            m.apply(w, &mut out);
            *w = out;
            Ok(())
        };
        let (rho, perron, iters, residual) =
            power_iteration(n, map, options.tol, options.max_iterations)?;
        (rho, perron, iters, residual, SpectralMethod::DenseMonodromy)
    } else {
        let map = |w: &mut Vec<F>| -> Result<()> { pm.apply(w) };
        let (rho, perron, iters, residual) =
            power_iteration(n, map, options.tol, options.max_iterations)?;
        (rho, perron, iters, residual, SpectralMethod::MatrixFree)
    };

    let lambda = rho.ln() / period;

    // Principal-eigenvalue test: lambda must clear max_x of the
    // zeroth-order part nu*m(x) plus the time average of l.
    let l_avg = l.time_average(op.grid(), options.average_samples);
    let m_unit = op.m_unit();
    let mut essential_bound = F::neg_infinity();
    for i in 0..n {
        essential_bound = essential_bound.max(nu * m_unit[i] + l_avg[i]);
    }
    let gap = lambda - essential_bound;
    let gap_tol = real::<F>(GAP_TOL_SCALE) * (F::one() + lambda.abs());
    let classification = if gap > gap_tol {
        Classification::Principal
    } else if gap < -gap_tol {
        Classification::NotPrincipal
    } else {
        Classification::Indeterminate
    };

    Ok(SpectralResult {
        lambda,
        spectral_radius: rho,
        essential_bound,
        gap,
        gap_tol,
        is_principal_eigenvalue: classification == Classification::Principal,
        classification,
        perron,
        iterations,
        residual,
        method,
        steps_per_period: options.steps_per_period,
    })
}
