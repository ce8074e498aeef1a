//! Tensor grids for position and velocity, gridded state containers,
//! velocity moments, and weighted phase-space norms.
//!
//! Both domains are centered at the origin: positions span
//! `[-x_extent, x_extent]` per axis and velocities `[-xi_extent, xi_extent]`,
//! so the velocity box is symmetric (odd moments of even data vanish
//! discretely) and the `x.xi` / `|x|^2` functional weights are well posed.
//! Quadrature is the midpoint rule with deterministic compensated reduction.

use crate::error::{Error, Result};
use crate::numerics::pairwise_map_sum;

pub const MAX_DIM: usize = 3;

/// Guard for `exp(a*|xi|^2)`: beyond this the weight overflows f64.
pub const WEIGHT_EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    dim: usize,
    nx: usize,
    nxi: usize,
    x_extent: f64,
    xi_extent: f64,
    dx: f64,
    dxi: f64,
    x_cells: usize,
    xi_cells: usize,
}

impl PhaseGrid {
    pub fn new(dim: usize, nx: usize, nxi: usize, x_extent: f64, xi_extent: f64) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 3, got {dim}")));
        }
        if nx < 3 || nxi < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 cells per axis, got nx={nx}, nxi={nxi}"
            )));
        }
        if !(x_extent > 0.0 && x_extent.is_finite()) || !(xi_extent > 0.0 && xi_extent.is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "extents must be positive and finite, got x_extent={x_extent}, xi_extent={xi_extent}"
            )));
        }
        let x_cells = nx.pow(dim as u32);
        let xi_cells = nxi.pow(dim as u32);
        Ok(Self {
            dim,
            nx,
            nxi,
            x_extent,
            xi_extent,
            dx: 2.0 * x_extent / nx as f64,
            dxi: 2.0 * xi_extent / nxi as f64,
            x_cells,
            xi_cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nxi(&self) -> usize {
        self.nxi
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dxi(&self) -> f64 {
        self.dxi
    }
    pub fn x_lo(&self) -> f64 {
        -self.x_extent
    }
    pub fn x_hi(&self) -> f64 {
        self.x_extent
    }
    pub fn xi_lo(&self) -> f64 {
        -self.xi_extent
    }
    pub fn xi_hi(&self) -> f64 {
        self.xi_extent
    }
    /// Number of position cells, `nx^dim`.
    pub fn x_cells(&self) -> usize {
        self.x_cells
    }
    /// Number of velocity cells, `nxi^dim`.
    pub fn xi_cells(&self) -> usize {
        self.xi_cells
    }
    /// Number of phase cells, `nx^dim * nxi^dim`.
    pub fn phase_cells(&self) -> usize {
        self.x_cells * self.xi_cells
    }
    /// Position cell volume `dx^dim`.
    pub fn x_vol(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }
    /// Velocity cell volume `dxi^dim`.
    pub fn xi_vol(&self) -> f64 {
        self.dxi.powi(self.dim as i32)
    }
    /// Phase cell volume.
    pub fn phase_vol(&self) -> f64 {
        self.x_vol() * self.xi_vol()
    }

    #[inline]
    pub fn x_axis_center(&self, i: usize) -> f64 {
        -self.x_extent + (i as f64 + 0.5) * self.dx
    }
    #[inline]
    pub fn xi_axis_center(&self, i: usize) -> f64 {
        -self.xi_extent + (i as f64 + 0.5) * self.dxi
    }

    /// Decode a flat position index into per-axis indices (row-major).
    #[inline]
    pub fn x_decode(&self, flat: usize, out: &mut [usize; MAX_DIM]) {
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.nx;
            rem /= self.nx;
        }
    }

    #[inline]
    pub fn xi_decode(&self, flat: usize, out: &mut [usize; MAX_DIM]) {
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            out[a] = rem % self.nxi;
            rem /= self.nxi;
        }
    }

    /// Cell-center coordinates of a flat position index.
    #[inline]
    pub fn x_center(&self, flat: usize, out: &mut [f64; MAX_DIM]) {
        let mut idx = [0usize; MAX_DIM];
        self.x_decode(flat, &mut idx);
        for a in 0..self.dim {
            out[a] = self.x_axis_center(idx[a]);
        }
    }

    #[inline]
    pub fn xi_center(&self, flat: usize, out: &mut [f64; MAX_DIM]) {
        let mut idx = [0usize; MAX_DIM];
        self.xi_decode(flat, &mut idx);
        for a in 0..self.dim {
            out[a] = self.xi_axis_center(idx[a]);
        }
    }

    /// Row-major stride of a position axis.
    #[inline]
    pub fn x_stride(&self, axis: usize) -> usize {
        self.nx.pow((self.dim - 1 - axis) as u32)
    }

    /// Periodic neighbor of a flat position index along `axis` at `offset`
    /// cells (may be negative).
    #[inline]
    pub fn x_neighbor(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let stride = self.x_stride(axis);
        let i = (flat / stride) % self.nx;
        let n = self.nx as isize;
        let j = (i as isize + offset).rem_euclid(n) as usize;
        flat + j * stride - i * stride
    }

    /// Largest per-axis velocity magnitude over the domain (the box bound).
    pub fn xi_abs_max(&self) -> f64 {
        self.xi_extent
    }
}

/// Gridded fluid state: density and momentum on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub rho: Vec<f64>,
    /// Momentum components, one position-grid array per axis.
    pub mom: Vec<Vec<f64>>,
    pub t: f64,
}

impl FluidState {
    pub fn new(grid: &PhaseGrid, rho: Vec<f64>, mom: Vec<Vec<f64>>, t: f64) -> Result<Self> {
        if rho.len() != grid.x_cells() || mom.len() != grid.dim() {
            return Err(Error::InvalidGrid("fluid state shape mismatch".into()));
        }
        for (index, &r) in rho.iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite { context: "rho", index });
            }
            if r < 0.0 {
                return Err(Error::NegativeDensity { index, value: r });
            }
        }
        for comp in &mom {
            if comp.len() != grid.x_cells() {
                return Err(Error::InvalidGrid("momentum component shape mismatch".into()));
            }
            if let Some(index) = comp.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { context: "mom", index });
            }
        }
        Ok(Self { rho, mom, t })
    }

    pub fn zero(grid: &PhaseGrid, t: f64) -> Self {
        Self {
            rho: vec![0.0; grid.x_cells()],
            mom: vec![vec![0.0; grid.x_cells()]; grid.dim()],
            t,
        }
    }

    /// Velocity reconstruction: `u = mom/rho` where `rho >= floor`, else 0.
    pub fn velocity(&self, floor: f64) -> Vec<Vec<f64>> {
        self.mom
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(&self.rho)
                    .map(|(&m, &r)| if r >= floor { m / r } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// Gridded particle distribution on the full phase grid, laid out row-major
/// with position axes first: `f[x_flat * xi_cells + xi_flat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub f: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn new(grid: &PhaseGrid, f: Vec<f64>, t: f64) -> Result<Self> {
        if f.len() != grid.phase_cells() {
            return Err(Error::InvalidGrid("kinetic state shape mismatch".into()));
        }
        for (index, &v) in f.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "f", index });
            }
            if v < 0.0 {
                return Err(Error::NegativeDistribution { index, value: v });
            }
        }
        Ok(Self { f, t })
    }

    pub fn zero(grid: &PhaseGrid, t: f64) -> Self {
        Self { f: vec![0.0; grid.phase_cells()], t }
    }
}

/// Velocity moments of the distribution on the position grid.
#[derive(Debug, Clone)]
pub struct MomentFields {
    /// `m0 = int f dxi`
    pub m0: Vec<f64>,
    /// `m1 = int xi f dxi`, one component per axis
    pub m1: Vec<Vec<f64>>,
    /// `m2 = int |xi|^2 f dxi`
    pub m2: Vec<f64>,
}

/// Midpoint-rule velocity moments with compensated, deterministic reduction
/// per position cell.
pub fn velocity_moments(grid: &PhaseGrid, kinetic: &KineticState) -> MomentFields {
    velocity_moments_raw(grid, &kinetic.f)
}

/// Moments of a raw phase-space array (position-major layout).
pub fn velocity_moments_raw(grid: &PhaseGrid, f: &[f64]) -> MomentFields {
    use rayon::prelude::*;
    let nv = grid.xi_cells();
    let dvol = grid.xi_vol();
    let dim = grid.dim();

    // Per-cell moment tuple; cells are independent, so a parallel map stays
    // bit-deterministic.
    let rows: Vec<([f64; 2 + MAX_DIM],)> = (0..grid.x_cells())
        .into_par_iter()
        .map(|xc| {
            let base = xc * nv;
            let slice = &f[base..base + nv];
            let mut out = [0.0f64; 2 + MAX_DIM];
            out[0] = dvol * pairwise_map_sum(nv, |j| slice[j]);
            for a in 0..dim {
                out[1 + a] = dvol
                    * pairwise_map_sum(nv, |j| {
                        let mut xi = [0.0f64; MAX_DIM];
                        grid.xi_center(j, &mut xi);
                        xi[a] * slice[j]
                    });
            }
            out[1 + MAX_DIM] = dvol
                * pairwise_map_sum(nv, |j| {
                    let mut xi = [0.0f64; MAX_DIM];
                    grid.xi_center(j, &mut xi);
                    let sq: f64 = xi[..dim].iter().map(|v| v * v).sum();
                    sq * slice[j]
                });
            (out,)
        })
        .collect();

    let mut m0 = Vec::with_capacity(rows.len());
    let mut m1 = vec![Vec::with_capacity(rows.len()); dim];
    let mut m2 = Vec::with_capacity(rows.len());
    for (row,) in rows {
        m0.push(row[0]);
        for a in 0..dim {
            m1[a].push(row[1 + a]);
        }
        m2.push(row[1 + MAX_DIM]);
    }
    MomentFields { m0, m1, m2 }
}

/// The phase-space weight `(1 + |x|^2 + |xi|^2)^(p/2) * exp(a*|xi|^2)`.
pub fn weight_nu(x: &[f64], xi: &[f64], p: f64, a: f64) -> Result<f64> {
    debug_assert!(p >= 2.0 && a > 0.0);
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let exponent = a * xi2;
    if exponent >= WEIGHT_EXP_LIMIT {
        return Err(Error::WeightOverflow { x: x.to_vec(), xi: xi.to_vec(), exponent });
    }
    let w = (1.0 + x2 + xi2).powf(0.5 * p) * exponent.exp();
    if !w.is_finite() {
        return Err(Error::WeightOverflow { x: x.to_vec(), xi: xi.to_vec(), exponent });
    }
    Ok(w)
}

fn check_weight_feasible(grid: &PhaseGrid, a: f64) -> Result<()> {
    let corner = grid.dim() as f64 * grid.xi_hi() * grid.xi_hi();
    if a * corner >= WEIGHT_EXP_LIMIT {
        return Err(Error::WeightOverflow {
            x: vec![0.0; grid.dim()],
            xi: vec![grid.xi_hi(); grid.dim()],
            exponent: a * corner,
        });
    }
    Ok(())
}

fn weighted_square_integral(grid: &PhaseGrid, g: &[f64], p: f64, a: f64) -> f64 {
    let nv = grid.xi_cells();
    let dvol = grid.phase_vol();
    dvol * pairwise_map_sum(grid.phase_cells(), |c| {
        let (xc, vc) = (c / nv, c % nv);
        let mut x = [0.0f64; MAX_DIM];
        let mut xi = [0.0f64; MAX_DIM];
        grid.x_center(xc, &mut x);
        grid.xi_center(vc, &mut xi);
        let x2: f64 = x[..grid.dim()].iter().map(|v| v * v).sum();
        let xi2: f64 = xi[..grid.dim()].iter().map(|v| v * v).sum();
        let w = (1.0 + x2 + xi2).powf(0.5 * p) * (a * xi2).exp();
        w * g[c] * g[c]
    })
}

/// Discrete weighted L2 norm of a phase field.
pub fn weighted_l2_norm(grid: &PhaseGrid, f: &[f64], p: f64, a: f64) -> Result<f64> {
    if p < 2.0 || a <= 0.0 {
        return Err(Error::Domain(format!("weight requires p >= 2 and a > 0, got p={p}, a={a}")));
    }
    check_weight_feasible(grid, a)?;
    Ok(weighted_square_integral(grid, f, p, a).sqrt())
}

/// Shape of the phase field as a flat-index N-d array (position axes first).
fn phase_shape(grid: &PhaseGrid) -> (Vec<usize>, Vec<f64>) {
    let mut shape = Vec::with_capacity(2 * grid.dim());
    let mut spacing = Vec::with_capacity(2 * grid.dim());
    for _ in 0..grid.dim() {
        shape.push(grid.nx());
        spacing.push(grid.dx());
    }
    for _ in 0..grid.dim() {
        shape.push(grid.nxi());
        spacing.push(grid.dxi());
    }
    (shape, spacing)
}

/// Second-order finite-difference derivative along one axis of a row-major
/// N-d array: central in the interior, one-sided second order at the
/// boundary ring.
pub fn axis_derivative(data: &[f64], shape: &[usize], spacing: f64, axis: usize) -> Vec<f64> {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let inv2h = 1.0 / (2.0 * spacing);
    let mut out = vec![0.0; data.len()];
    for (c, slot) in out.iter_mut().enumerate() {
        let i = (c / stride) % n;
        *slot = if i == 0 {
            (-3.0 * data[c] + 4.0 * data[c + stride] - data[c + 2 * stride]) * inv2h
        } else if i == n - 1 {
            (3.0 * data[c] - 4.0 * data[c - stride] + data[c - 2 * stride]) * inv2h
        } else {
            (data[c + stride] - data[c - stride]) * inv2h
        };
    }
    out
}

/// Discrete weighted Sobolev norm of order `k` (1 or 2): the square root of
/// the weighted square integrals of all mixed (x, xi) derivatives of order
/// `<= k`, derivatives taken as compositions of the one-axis operator in
/// increasing axis order.
pub fn weighted_h_norm(grid: &PhaseGrid, f: &[f64], k: usize, p: f64, a: f64) -> Result<f64> {
    if !(k == 1 || k == 2) {
        return Err(Error::Domain(format!("weighted_h_norm supports k in {{1,2}}, got {k}")));
    }
    if p < 2.0 || a <= 0.0 {
        return Err(Error::Domain(format!("weight requires p >= 2 and a > 0, got p={p}, a={a}")));
    }
    check_weight_feasible(grid, a)?;
    let (shape, spacing) = phase_shape(grid);
    let d = shape.len();

    let mut total = weighted_square_integral(grid, f, p, a);
    let mut firsts: Vec<Vec<f64>> = Vec::with_capacity(d);
    for axis in 0..d {
        let g = axis_derivative(f, &shape, spacing[axis], axis);
        total += weighted_square_integral(grid, &g, p, a);
        firsts.push(g);
    }
    if k == 2 {
        for i in 0..d {
            for j in i..d {
                let g = axis_derivative(&firsts[i], &shape, spacing[j], j);
                total += weighted_square_integral(grid, &g, p, a);
            }
        }
    }
    Ok(total.sqrt())
}

/// Periodic second-order central derivative of a position-grid field.
pub fn pos_central_derivative(grid: &PhaseGrid, g: &[f64], axis: usize) -> Vec<f64> {
    let inv2h = 1.0 / (2.0 * grid.dx());
    (0..g.len())
        .map(|c| (g[grid.x_neighbor(c, axis, 1)] - g[grid.x_neighbor(c, axis, -1)]) * inv2h)
        .collect()
}

/// Plain (unweighted) discrete H1 norm of a position-grid field with
/// periodic central differences.
pub fn h1_norm_pos(grid: &PhaseGrid, g: &[f64]) -> f64 {
    let vol = grid.x_vol();
    let mut total = vol * pairwise_map_sum(g.len(), |c| g[c] * g[c]);
    for axis in 0..grid.dim() {
        let d = pos_central_derivative(grid, g, axis);
        total += vol * pairwise_map_sum(d.len(), |c| d[c] * d[c]);
    }
    total.sqrt()
}
