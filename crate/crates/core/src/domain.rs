//! Spatial discretization: uniform grids, dispersal kernels and the
//! assembled nonlocal dispersal operators.
//!
//! The domain is a 1-D interval or 2-D box centered at the origin, sampled
//! with midpoint nodes and uniform quadrature weights. A dispersal kernel is
//! a nonnegative, radially symmetric profile with compact support whose
//! *discrete* mass (quadrature-weighted sum over the full uniform lattice,
//! or over one period cell in the periodic regime) is normalized to one.
//! Discrete normalization is deliberate: it makes the no-flux and periodic
//! operators annihilate constants exactly on the grid, so their principal
//! spectrum points vanish at machine precision instead of drifting by the
//! quadrature error of an analytically normalized kernel.
//!
//! Three boundary regimes are supported, differing in how dispersal treats
//! the surroundings of the domain:
//! * [`Regime::DirichletType`] — hostile surroundings; mass leaving the
//!   domain is lost: `u -> K u - u`.
//! * [`Regime::NeumannType`] — no flux; only mass exchanged within the
//!   domain counts: `u -> K u - (∫_D k) u`.
//! * [`Regime::Periodic`] — the box is one period cell of a lattice;
//!   offsets wrap around: `u -> K_per u - u`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{real, real_of_usize, Real};

/// Boundary regime of the dispersal operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Hostile surroundings: dispersal mass that leaves the domain is lost.
    DirichletType,
    /// No-flux: only exchange between points inside the domain.
    NeumannType,
    /// Spatially periodic: the domain is one period cell, offsets wrap.
    Periodic,
}

impl Regime {
    /// Stable lowercase name used in reports and scenario files.
    pub fn name(&self) -> &'static str {
        match self {
            Regime::DirichletType => "dirichlet",
            Regime::NeumannType => "neumann",
            Regime::Periodic => "periodic",
        }
    }
}

/// Uniform midpoint grid over a box centered at the origin.
///
/// Axis `k` spans `[-extents[k]/2, extents[k]/2]` with `nodes_per_axis[k]`
/// midpoint nodes. In 2-D the flat node index is `ix * ny + iy` (axis 0
/// slowest). The second coordinate of 1-D nodes is fixed at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<F> {
    dimension: usize,
    extents: Vec<F>,
    nodes_per_axis: Vec<usize>,
    spacing: Vec<F>,
    weight: F,
    coords: Vec<[F; 2]>,
    regime: Regime,
}

/// Builds a uniform midpoint grid.
///
/// `dimension` must be 1 or 2 with matching `extents`/`nodes_per_axis`
/// lengths, extents positive and finite, and at least 3 nodes per axis
/// (3-node axes are only of practical use in the periodic regime, but the
/// floor is not regime-dependent).
pub fn build_grid<F: Real>(
    dimension: usize,
    extents: Vec<F>,
    nodes_per_axis: Vec<usize>,
    regime: Regime,
) -> Result<Grid<F>> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::InvalidGrid(format!(
            "dimension must be 1 or 2, got {dimension}"
        )));
    }
    if extents.len() != dimension {
        return Err(Error::InvalidGrid(format!(
            "extents has {} entries for dimension {dimension}",
            extents.len()
        )));
    }
    if nodes_per_axis.len() != dimension {
        return Err(Error::InvalidGrid(format!(
            "nodes_per_axis has {} entries for dimension {dimension}",
            nodes_per_axis.len()
        )));
    }
    for (k, &l) in extents.iter().enumerate() {
        if !(l > F::zero()) || !l.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "extent of axis {k} must be positive and finite, got {l}"
            )));
        }
    }
    for (k, &n) in nodes_per_axis.iter().enumerate() {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "axis {k} has {n} nodes; at least 3 are required"
            )));
        }
    }

    let spacing: Vec<F> = extents
        .iter()
        .zip(&nodes_per_axis)
        .map(|(&l, &n)| l / real_of_usize::<F>(n))
        .collect();
    let weight = spacing.iter().fold(F::one(), |acc, &h| acc * h);

    let half = real::<F>(0.5);
    let axis_coord = |k: usize, i: usize| -> F {
        spacing[k] * (real_of_usize::<F>(i) + half) - extents[k] / real::<F>(2.0)
    };

    let mut coords = Vec::new();
    match dimension {
        1 => {
            for i in 0..nodes_per_axis[0] {
                coords.push([axis_coord(0, i), F::zero()]);
            }
        }
        2 => {
            for ix in 0..nodes_per_axis[0] {
                for iy in 0..nodes_per_axis[1] {
                    coords.push([axis_coord(0, ix), axis_coord(1, iy)]);
                }
            }
        }
        _ => unreachable!(),
    }

    Ok(Grid {
        dimension,
        extents,
        nodes_per_axis,
        spacing,
        weight,
        coords,
        regime,
    })
}

impl<F: Real> Grid<F> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn extents(&self) -> &[F] {
        &self.extents
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes_per_axis
    }

    pub fn spacing(&self) -> &[F] {
        &self.spacing
    }

    /// Quadrature weight shared by every node (product of spacings).
    pub fn weight(&self) -> F {
        self.weight
    }

    /// Coordinates of node `i`; the second entry is zero in 1-D.
    pub fn coord(&self, i: usize) -> [F; 2] {
        self.coords[i]
    }

    pub fn coords(&self) -> &[[F; 2]] {
        &self.coords
    }

    /// Per-axis integer index of node `i`.
    pub fn axis_indices(&self, i: usize) -> [usize; 2] {
        match self.dimension {
            1 => [i, 0],
            2 => {
                let ny = self.nodes_per_axis[1];
                [i / ny, i % ny]
            }
            _ => unreachable!(),
        }
    }

    /// Physical offset `x_j - x_i`, wrapped into `[-extent/2, extent/2)`
    /// per axis when the regime is periodic.
    pub fn offset_between(&self, i: usize, j: usize) -> [F; 2] {
        let a = self.coords[i];
        let b = self.coords[j];
        let mut out = [b[0] - a[0], b[1] - a[1]];
        if self.regime == Regime::Periodic {
            for k in 0..self.dimension {
                let p = self.extents[k];
                let half = p / real::<F>(2.0);
                while out[k] < -half {
                    out[k] = out[k] + p;
                }
                while out[k] >= half {
                    out[k] = out[k] - p;
                }
            }
        }
        out
    }

    /// True when `other` discretizes the same domain the same way.
    pub fn same_discretization(&self, other: &Grid<F>) -> bool {
        self.dimension == other.dimension
            && self.regime == other.regime
            && self.extents == other.extents
            && self.nodes_per_axis == other.nodes_per_axis
    }
}

/// Radial kernel profile; both choices are nonnegative, even, and vanish
/// outside the open support ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelProfile {
    /// `exp(-1 / (1 - s^2))` for `s = |z|/r < 1`; smooth and compactly
    /// supported.
    SmoothBump,
    /// `1 + cos(pi s)` for `s = |z|/r < 1`; continuously differentiable at
    /// the support edge.
    Cosine,
}

impl KernelProfile {
    /// Stable lowercase name used in reports and scenario files.
    pub fn name(&self) -> &'static str {
        match self {
            KernelProfile::SmoothBump => "smooth_bump",
            KernelProfile::Cosine => "cosine",
        }
    }

    /// Unnormalized profile value at distance `d` for support radius `r`.
    fn raw<F: Real>(&self, d: F, r: F) -> F {
        let s = d / r;
        if s >= F::one() {
            return F::zero();
        }
        match self {
            KernelProfile::SmoothBump => {
                let denom = F::one() - s * s;
                (-(F::one() / denom)).exp()
            }
            KernelProfile::Cosine => F::one() + (real::<F>(std::f64::consts::PI) * s).cos(),
        }
    }
}

/// Dispersal kernel sampled on the integer offset lattice of a grid and
/// normalized so its discrete mass is exactly one.
///
/// For the bounded regimes the mass is taken over the full uniform lattice
/// extension of the grid (so interior rows of the assembled operator see
/// unit mass and boundary rows see less). For the periodic regime the
/// profile is first wrapped onto the period cell by image summation and the
/// mass is taken over one cell, which makes every row see unit mass.
#[derive(Debug, Clone)]
pub struct Kernel<F> {
    grid: Arc<Grid<F>>,
    radius: F,
    profile: KernelProfile,
    /// Raw discrete mass the profile samples were divided by.
    normalization: F,
    /// Normalized samples indexed by integer offset; axis 0 slowest.
    table: Vec<F>,
    /// Offsets per axis run `-(n_k - 1) ..= n_k - 1`.
    table_dims: [usize; 2],
}

/// Samples and normalizes a kernel on the offset lattice of `grid`.
///
/// The radius must exceed the largest grid spacing (otherwise the discrete
/// support degenerates to the origin) and stay below the smallest extent.
pub fn build_kernel<F: Real>(
    grid: &Arc<Grid<F>>,
    radius: F,
    profile: KernelProfile,
) -> Result<Kernel<F>> {
    if !radius.is_finite() || radius <= F::zero() {
        return Err(Error::InvalidKernel(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    let min_extent = grid
        .extents()
        .iter()
        .fold(F::infinity(), |m, &l| m.min(l));
    if radius >= min_extent {
        return Err(Error::InvalidKernel(format!(
            "radius {radius} must be smaller than the smallest extent {min_extent}"
        )));
    }
    let max_spacing = grid
        .spacing()
        .iter()
        .fold(F::zero(), |m, &h| m.max(h));
    if radius <= max_spacing {
        return Err(Error::InvalidKernel(format!(
            "radius {radius} does not exceed the grid spacing {max_spacing}; \
             the discrete support would be empty"
        )));
    }

    let dim = grid.dimension();
    let nx = grid.nodes_per_axis()[0];
    let ny = if dim == 2 { grid.nodes_per_axis()[1] } else { 1 };
    let hx = grid.spacing()[0];
    let hy = if dim == 2 { grid.spacing()[1] } else { F::zero() };

    // Raw profile value at a physical offset.
    let raw_at = |zx: F, zy: F| -> F {
        let d = (zx * zx + zy * zy).sqrt();
        profile.raw(d, radius)
    };

    // Raw value at an integer offset, wrapped by image summation in the
    // periodic regime (one image layer suffices because radius < extent).
    let periodic = grid.regime() == Regime::Periodic;
    let lx = grid.extents()[0];
    let ly = if dim == 2 { grid.extents()[1] } else { F::zero() };
    let value_at_offset = |kx: isize, ky: isize| -> F {
        let zx = real_of_isize::<F>(kx) * hx;
        let zy = if dim == 2 {
            real_of_isize::<F>(ky) * hy
        } else {
            F::zero()
        };
        if !periodic {
            return raw_at(zx, zy);
        }
        let mut acc = F::zero();
        for mx in -1..=1 {
            let ix = zx + real_of_isize::<F>(mx) * lx;
            if dim == 1 {
                acc = acc + raw_at(ix, F::zero());
            } else {
                for my in -1..=1 {
                    acc = acc + raw_at(ix, zy + real_of_isize::<F>(my) * ly);
                }
            }
        }
        acc
    };

    // Discrete raw mass: full-lattice for bounded regimes, one period cell
    // for the periodic regime.
    let weight = grid.weight();
    let mut mass = F::zero();
    if periodic {
        for kx in 0..nx as isize {
            for ky in 0..ny as isize {
                mass = mass + weight * value_at_offset(kx, ky);
            }
        }
    } else {
        let reach_x = (radius / hx).ceil().to_isize().unwrap_or(isize::MAX);
        let reach_y = if dim == 2 {
            (radius / hy).ceil().to_isize().unwrap_or(isize::MAX)
        } else {
            0
        };
        for kx in -reach_x..=reach_x {
            for ky in -reach_y..=reach_y {
                mass = mass + weight * value_at_offset(kx, ky);
            }
        }
    }
    if !(mass > F::zero()) || !mass.is_finite() {
        return Err(Error::InvalidKernel(format!(
            "discrete kernel mass is not positive and finite: {mass}"
        )));
    }

    let dims = [2 * nx - 1, 2 * ny - 1];
    let mut table = vec![F::zero(); dims[0] * dims[1]];
    for kx in -(nx as isize - 1)..=(nx as isize - 1) {
        for ky in -(ny as isize - 1)..=(ny as isize - 1) {
            let idx = ((kx + nx as isize - 1) as usize) * dims[1] + (ky + ny as isize - 1) as usize;
            table[idx] = value_at_offset(kx, ky) / mass;
        }
    }

    Ok(Kernel {
        grid: Arc::clone(grid),
        radius,
        profile,
        normalization: mass,
        table,
        table_dims: dims,
    })
}

fn real_of_isize<F: Real>(k: isize) -> F {
    F::from_isize(k).expect("offset not representable in scalar type")
}

impl<F: Real> Kernel<F> {
    pub fn grid(&self) -> &Arc<Grid<F>> {
        &self.grid
    }

    pub fn radius(&self) -> F {
        self.radius
    }

    pub fn profile(&self) -> KernelProfile {
        self.profile
    }

    /// Raw discrete mass that the samples were normalized by.
    pub fn normalization(&self) -> F {
        self.normalization
    }

    /// Normalized kernel value at integer offset `(kx, ky)`; `ky` must be 0
    /// in 1-D. Offsets beyond the tabulated range are outside the support
    /// and evaluate to zero.
    pub fn value_at_offset(&self, kx: isize, ky: isize) -> F {
        let nx = self.grid.nodes_per_axis()[0] as isize;
        let ny = if self.grid.dimension() == 2 {
            self.grid.nodes_per_axis()[1] as isize
        } else {
            1
        };
        if kx.abs() > nx - 1 || ky.abs() > ny - 1 {
            return F::zero();
        }
        let idx = ((kx + nx - 1) as usize) * self.table_dims[1] + (ky + ny - 1) as usize;
        self.table[idx]
    }

    /// Normalized kernel value for the offset from node `i` to node `j`.
    pub fn value_between(&self, i: usize, j: usize) -> F {
        let ai = self.grid.axis_indices(i);
        let aj = self.grid.axis_indices(j);
        self.value_at_offset(
            aj[0] as isize - ai[0] as isize,
            aj[1] as isize - ai[1] as isize,
        )
    }

    /// Quadrature-weighted sum of the normalized samples over the
    /// normalization lattice; equal to one up to roundoff by construction.
    pub fn discrete_mass(&self) -> F {
        let weight = self.grid.weight();
        let dim = self.grid.dimension();
        let nx = self.grid.nodes_per_axis()[0] as isize;
        let ny = if dim == 2 {
            self.grid.nodes_per_axis()[1] as isize
        } else {
            1
        };
        let mut mass = F::zero();
        if self.grid.regime() == Regime::Periodic {
            for kx in 0..nx {
                for ky in 0..ny {
                    // One period cell; wrap representative offsets into the
                    // tabulated range.
                    let wx = if kx > nx / 2 { kx - nx } else { kx };
                    let wy = if ky > ny / 2 { ky - ny } else { ky };
                    mass = mass + weight * self.value_at_offset(wx, wy);
                }
            }
        } else {
            for kx in -(nx - 1)..=(nx - 1) {
                for ky in -(ny - 1)..=(ny - 1) {
                    mass = mass + weight * self.value_at_offset(kx, ky);
                }
            }
        }
        mass
    }
}

/// Assembled dense dispersal operator at unit rate, together with the
/// pointwise multiplier it splits off.
///
/// The operator acts as `A u = K u + m ⊙ u` where `K` is the (weighted)
/// kernel convolution over the grid and `m` is the regime's multiplier
/// (`-1` for the hostile and periodic regimes, minus the in-domain kernel
/// mass for no-flux). Rates enter by scaling: the species-`i` dispersal
/// term is `nu_i * (A u)`.
#[derive(Debug, Clone)]
pub struct DispersalOperator<F> {
    grid: Arc<Grid<F>>,
    kernel: Arc<Kernel<F>>,
    matrix: DenseMatrix<F>,
    m_unit: Vec<F>,
    row_mass_domain: Vec<F>,
}

/// Assembles the dense dispersal operator for a grid/kernel pair.
pub fn assemble_dispersal<F: Real>(
    grid: &Arc<Grid<F>>,
    kernel: &Arc<Kernel<F>>,
) -> Result<DispersalOperator<F>> {
    if !kernel.grid().same_discretization(grid) {
        return Err(Error::GridMismatch(
            "kernel was sampled on a different grid".to_string(),
        ));
    }
    let n = grid.len();
    let weight = grid.weight();
    let mut matrix = DenseMatrix::zeros(n, n);
    let mut row_mass_domain = vec![F::zero(); n];
    for i in 0..n {
        let row = matrix.row_mut(i);
        let mut mass = F::zero();
        for (j, slot) in row.iter_mut().enumerate() {
            let v = weight * kernel.value_between(i, j);
            *slot = v;
            mass = mass + v;
        }
        row_mass_domain[i] = mass;
    }

    let mut m_unit = vec![F::zero(); n];
    for i in 0..n {
        let m = match grid.regime() {
            Regime::DirichletType | Regime::Periodic => -F::one(),
            Regime::NeumannType => -row_mass_domain[i],
        };
        m_unit[i] = m;
        let d = matrix.get(i, i);
        matrix.set(i, i, d + m);
    }

    Ok(DispersalOperator {
        grid: Arc::clone(grid),
        kernel: Arc::clone(kernel),
        matrix,
        m_unit,
        row_mass_domain,
    })
}

impl<F: Real> DispersalOperator<F> {
    pub fn grid(&self) -> &Arc<Grid<F>> {
        &self.grid
    }

    pub fn kernel(&self) -> &Arc<Kernel<F>> {
        &self.kernel
    }

    pub fn regime(&self) -> Regime {
        self.grid.regime()
    }

    /// Number of nodes the operator acts on.
    pub fn len(&self) -> usize {
        self.m_unit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_unit.is_empty()
    }

    /// Dense matrix of the unit-rate operator.
    pub fn matrix(&self) -> &DenseMatrix<F> {
        &self.matrix
    }

    /// Pointwise multiplier `m(x)` split off by the operator at unit rate.
    pub fn m_unit(&self) -> &[F] {
        &self.m_unit
    }

    /// In-domain kernel mass `∫_D k(y - x) dy` per node (discrete).
    pub fn row_mass_domain(&self) -> &[F] {
        &self.row_mass_domain
    }

    /// `out = A u` at unit rate.
    pub fn apply(&self, u: &[F], out: &mut [F]) {
        self.matrix.apply(u, out);
    }

    /// Kernel convolution `(K u)(x_i)` without the multiplier part.
    pub fn kernel_convolve_at(&self, i: usize, u: &[F]) -> F {
        let mut acc = F::zero();
        for (a, &v) in self.matrix.row(i).iter().zip(u) {
            acc = acc + *a * v;
        }
        acc - self.m_unit[i] * u[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{sup_norm, to_f64};

    fn grid_1d(n: usize, extent: f64, regime: Regime) -> Arc<Grid<f64>> {
        Arc::new(build_grid(1, vec![extent], vec![n], regime).unwrap())
    }

    #[test]
    fn grid_1d_neumann_has_midpoint_nodes_and_uniform_weights() {
        let g = grid_1d(8, 2.0, Regime::NeumannType);
        assert_eq!(g.len(), 8);
        assert_eq!(g.weight(), 0.25);
        assert!((g.coord(0)[0] - (-0.875)).abs() < 1e-15);
        assert!((g.coord(7)[0] - 0.875).abs() < 1e-15);
        let total: f64 = (0..g.len()).map(|_| g.weight()).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_offsets_wrap_to_the_short_way_around() {
        let g = grid_1d(3, 1.0, Regime::Periodic);
        // Nodes at -1/3, 0, 1/3; raw offset 0 -> 2 is 2/3, wrapped is -1/3.
        let off = g.offset_between(0, 2);
        assert!((off[0] - (-1.0 / 3.0)).abs() < 1e-15);
        let off_back = g.offset_between(2, 0);
        assert!((off_back[0] - (1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_2d_enumerates_the_tensor_product() {
        let g: Grid<f64> = build_grid(
            2,
            vec![1.0, 1.0],
            vec![4, 4],
            Regime::DirichletType,
        )
        .unwrap();
        assert_eq!(g.len(), 16);
        assert!((g.weight() - 1.0 / 16.0).abs() < 1e-16);
        // Flat index ix * ny + iy.
        assert_eq!(g.axis_indices(7), [1, 3]);
        let c = g.coord(0);
        assert!((c[0] - (-0.375)).abs() < 1e-15);
        assert!((c[1] - (-0.375)).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            build_grid::<f64>(3, vec![1.0; 3], vec![4; 3], Regime::NeumannType),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            build_grid::<f64>(1, vec![-1.0], vec![8], Regime::NeumannType),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            build_grid::<f64>(1, vec![1.0], vec![2], Regime::NeumannType),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            build_grid::<f64>(1, vec![1.0, 1.0], vec![8], Regime::NeumannType),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn kernel_mass_is_one_by_direct_summation() {
        // Oracle: sum weight * kernel over every lattice offset by hand.
        let g = grid_1d(64, 2.0, Regime::DirichletType);
        let k = build_kernel(&g, 0.5, KernelProfile::SmoothBump).unwrap();
        let h = g.spacing()[0];
        let mut mass = 0.0;
        let reach = (0.5 / h).ceil() as isize;
        for kx in -reach..=reach {
            mass += g.weight() * k.value_at_offset(kx, 0);
        }
        assert!((mass - 1.0).abs() < 1e-15, "mass {mass}");
        assert!((k.discrete_mass() - 1.0).abs() < 1e-15);
        // Support: offsets 0..=15 are inside radius 16h, offset 16 is not.
        assert!(k.value_at_offset(15, 0) > 0.0);
        assert_eq!(k.value_at_offset(16, 0), 0.0);
    }

    #[test]
    fn cosine_kernel_with_radius_two_spacings_is_the_three_point_stencil() {
        // Hand quadrature: raw values 2 at offset 0 and 1 at offsets +-1,
        // raw mass 4h, so normalized samples are 1/(2h) and 1/(4h).
        let g = grid_1d(16, 2.0, Regime::NeumannType);
        let h = g.spacing()[0];
        let k = build_kernel(&g, 2.0 * h, KernelProfile::Cosine).unwrap();
        assert!((k.value_at_offset(0, 0) - 1.0 / (2.0 * h)).abs() < 1e-13);
        assert!((k.value_at_offset(1, 0) - 1.0 / (4.0 * h)).abs() < 1e-13);
        assert_eq!(k.value_at_offset(2, 0), 0.0);
        assert!((k.discrete_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_is_bitwise_symmetric() {
        for regime in [Regime::DirichletType, Regime::Periodic] {
            let g = grid_1d(32, 2.0, regime);
            let k = build_kernel(&g, 0.4, KernelProfile::SmoothBump).unwrap();
            for kx in 0..31isize {
                assert_eq!(
                    k.value_at_offset(kx, 0).to_bits(),
                    k.value_at_offset(-kx, 0).to_bits(),
                    "asymmetry at offset {kx}"
                );
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_radii() {
        let g = grid_1d(16, 2.0, Regime::NeumannType);
        assert!(matches!(
            build_kernel(&g, 2.5, KernelProfile::SmoothBump),
            Err(Error::InvalidKernel(_))
        ));
        // Radius at or below one spacing has empty discrete support.
        assert!(matches!(
            build_kernel(&g, 0.125, KernelProfile::SmoothBump),
            Err(Error::InvalidKernel(_))
        ));
        assert!(matches!(
            build_kernel(&g, 0.0, KernelProfile::SmoothBump),
            Err(Error::InvalidKernel(_))
        ));
    }

    #[test]
    fn neumann_operator_annihilates_constants() {
        let g = grid_1d(32, 2.0, Regime::NeumannType);
        let k = Arc::new(build_kernel(&g, 0.5, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        let ones = vec![1.0; g.len()];
        let mut out = vec![0.0; g.len()];
        op.apply(&ones, &mut out);
        assert!(sup_norm(&out) < 1e-15, "worst {}", sup_norm(&out));
    }

    #[test]
    fn periodic_operator_annihilates_constants() {
        let g = grid_1d(32, 2.0, Regime::Periodic);
        let k = Arc::new(build_kernel(&g, 0.5, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        let ones = vec![1.0; g.len()];
        let mut out = vec![0.0; g.len()];
        op.apply(&ones, &mut out);
        assert!(sup_norm(&out) < 1e-14, "worst {}", sup_norm(&out));
    }

    #[test]
    fn dirichlet_row_sums_are_nonpositive_and_negative_near_the_boundary() {
        let g = grid_1d(32, 2.0, Regime::DirichletType);
        let k = Arc::new(build_kernel(&g, 0.5, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        for i in 0..g.len() {
            let s = op.matrix().row_sum(i);
            assert!(s <= 1e-14, "row {i} sums to {s}");
        }
        // Boundary node: row sum equals in-domain mass minus one, which is
        // markedly negative because half the kernel mass falls outside.
        let s0 = op.matrix().row_sum(0);
        assert!(s0 < -0.2, "boundary row sum {s0}");
        let oracle = op.row_mass_domain()[0] - 1.0;
        assert!((s0 - oracle).abs() < 1e-14);
        // Interior node: full mass, row sum ~ 0.
        let mid = op.matrix().row_sum(g.len() / 2);
        assert!(mid.abs() < 1e-14, "interior row sum {mid}");
    }

    #[test]
    fn operator_matches_brute_force_summation() {
        // Oracle: direct double loop over nodes with kernel lookups,
        // independent of the assembled matrix.
        for regime in [Regime::DirichletType, Regime::NeumannType, Regime::Periodic] {
            let g = grid_1d(8, 2.0, regime);
            let k = Arc::new(build_kernel(&g, 0.6, KernelProfile::Cosine).unwrap());
            let op = assemble_dispersal(&g, &k).unwrap();
            let u: Vec<f64> = (0..8).map(|i| 0.3 + 0.1 * (i as f64).sin()).collect();
            let w = g.weight();
            for i in 0..8 {
                let conv: f64 = (0..8).map(|j| w * k.value_between(i, j) * u[j]).sum();
                let expected = match regime {
                    Regime::DirichletType | Regime::Periodic => conv - u[i],
                    Regime::NeumannType => {
                        let mass: f64 = (0..8).map(|j| w * k.value_between(i, j)).sum();
                        conv - mass * u[i]
                    }
                };
                let mut out = vec![0.0; 8];
                op.apply(&u, &mut out);
                assert!(
                    (out[i] - expected).abs() < 1e-13,
                    "{} node {i}: {} vs {}",
                    regime.name(),
                    out[i],
                    expected
                );
                // Convolution accessor agrees with the plain double sum.
                assert!((op.kernel_convolve_at(i, &u) - conv).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn operator_is_metzler() {
        // Off-diagonal entries are nonnegative, so A + c*I >= 0 entrywise
        // once c clears the most negative diagonal.
        let g = grid_1d(16, 2.0, Regime::DirichletType);
        let k = Arc::new(build_kernel(&g, 0.5, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        let mut worst_diag = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                let a = op.matrix().get(i, j);
                if i != j {
                    assert!(a >= 0.0, "negative off-diagonal at ({i},{j}): {a}");
                } else {
                    worst_diag = worst_diag.min(a);
                }
            }
        }
        let c = -worst_diag;
        for i in 0..16 {
            let shifted = op.matrix().get(i, i) + c;
            assert!(shifted >= -1e-16);
        }
    }

    #[test]
    fn assemble_rejects_mismatched_grid() {
        let g1 = grid_1d(16, 2.0, Regime::NeumannType);
        let g2 = grid_1d(24, 2.0, Regime::NeumannType);
        let k = Arc::new(build_kernel(&g1, 0.5, KernelProfile::SmoothBump).unwrap());
        assert!(matches!(
            assemble_dispersal(&g2, &k),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn two_dimensional_operator_keeps_regime_row_sums() {
        let g: Arc<Grid<f64>> = Arc::new(
            build_grid(2, vec![2.0, 2.0], vec![8, 8], Regime::NeumannType).unwrap(),
        );
        let k = Arc::new(build_kernel(&g, 0.6, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        let ones = vec![1.0; g.len()];
        let mut out = vec![0.0; g.len()];
        op.apply(&ones, &mut out);
        assert!(sup_norm(&out) < 1e-14);

        let gp: Arc<Grid<f64>> = Arc::new(
            build_grid(2, vec![2.0, 2.0], vec![8, 8], Regime::Periodic).unwrap(),
        );
        let kp = Arc::new(build_kernel(&gp, 0.6, KernelProfile::SmoothBump).unwrap());
        let opp = assemble_dispersal(&gp, &kp).unwrap();
        opp.apply(&ones, &mut out);
        assert!(sup_norm(&out) < 1e-13);
    }

    #[test]
    fn generic_scalar_supports_f32_at_reduced_tolerance() {
        let g: Arc<Grid<f32>> =
            Arc::new(build_grid(1, vec![2.0f32], vec![16], Regime::NeumannType).unwrap());
        let k = Arc::new(build_kernel(&g, 0.5f32, KernelProfile::SmoothBump).unwrap());
        let op = assemble_dispersal(&g, &k).unwrap();
        let ones = vec![1.0f32; 16];
        let mut out = vec![0.0f32; 16];
        op.apply(&ones, &mut out);
        assert!(to_f64(sup_norm(&out)) < 1e-6);
        assert!((to_f64(k.discrete_mass()) - 1.0).abs() < 1e-6);
    }
}
