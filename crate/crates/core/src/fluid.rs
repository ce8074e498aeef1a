//! Conservative finite-volume solver for the compressible subsystem with
//! degenerate viscosity, pressure, and the kinetic drag source, in
//! conservative variables (rho, rho*u) on a periodic box.
//!
//! Convection uses the local Lax-Friedrichs (Rusanov) flux, pressure the
//! cell-centered central gradient, and the viscous stress a face flux with
//! arithmetic-mean face viscosities, so total mass and total momentum
//! telescope to round-off on a periodic domain.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FluidState, MomentFields, PhaseGrid};
use crate::numerics::{map_max, pairwise_map_sum};
use crate::params::{vacuum_safe_pow, ModelParams};

/// Relative slack on the hard step-size checks so a dt computed *from* a
/// bound does not trip it through roundoff.
const CFL_SLACK: f64 = 1.0 + 1e-9;

/// Sound speed `sqrt(gamma rho^(gamma-1))`, zero at vacuum.
#[inline]
pub fn sound_speed(params: &ModelParams, rho: f64) -> f64 {
    (params.gamma * vacuum_safe_pow(rho, params.gamma - 1.0)).sqrt()
}

/// Largest per-axis signal speed `|u_a| + c` over all cells.
pub fn max_signal_speed(params: &ModelParams, state: &FluidState, u: &[Vec<f64>]) -> f64 {
    let n = state.rho.len();
    let m = map_max(n, |c| {
        let cs = sound_speed(params, state.rho[c]);
        let ua = u.iter().map(|comp| comp[c].abs()).fold(0.0f64, f64::max);
        ua + cs
    });
    m.max(0.0)
}

/// Hard convective step bound `dx / (dim * smax)`; infinite for a silent state.
fn convective_limit(grid: &PhaseGrid, smax: f64) -> f64 {
    if smax > 0.0 {
        grid.dx() / (grid.dim() as f64 * smax)
    } else {
        f64::INFINITY
    }
}

/// Explicit viscosity step bound `0.4 dx^2 rho_min_pos / (2 mu_max + |lambda|_max)`.
pub fn viscous_limit(grid: &PhaseGrid, rho: &[f64], mu: &[f64], lambda: &[f64], floor: f64) -> f64 {
    let denom = 2.0 * map_max(mu.len(), |c| mu[c]) + map_max(lambda.len(), |c| lambda[c].abs());
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    let mut rho_min_pos = f64::INFINITY;
    for &r in rho {
        if r >= floor && r < rho_min_pos {
            rho_min_pos = r;
        }
    }
    if !rho_min_pos.is_finite() {
        return f64::INFINITY;
    }
    0.4 * grid.dx() * grid.dx() * rho_min_pos / denom
}

/// Symmetric strain rate `T_ij = (d_i u_j + d_j u_i)/2` from periodic central
/// differences, returned as `dim*dim` position fields indexed `i*dim + j`.
pub fn strain_tensor(grid: &PhaseGrid, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = grid.dim();
    let inv2h = 1.0 / (2.0 * grid.dx());
    let n = grid.x_cells();
    // gradient g[i][j] = d_i u_j
    let mut grad = vec![vec![0.0; n]; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let comp = &u[j];
            let out = &mut grad[i * dim + j];
            for c in 0..n {
                out[c] =
                    (comp[grid.x_neighbor(c, i, 1)] - comp[grid.x_neighbor(c, i, -1)]) * inv2h;
            }
        }
    }
    let mut t = vec![vec![0.0; n]; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            for c in 0..n {
                t[i * dim + j][c] = 0.5 * (grad[i * dim + j][c] + grad[j * dim + i][c]);
            }
        }
    }
    t
}

/// One conservative forward-Euler update of the density.
pub fn continuity_step(
    params: &ModelParams,
    grid: &PhaseGrid,
    state: &FluidState,
    dt: f64,
    floor: f64,
) -> Result<Vec<f64>> {
    let u = state.velocity(floor);
    let smax = max_signal_speed(params, state, &u);
    let limit = convective_limit(grid, smax);
    if dt > limit * CFL_SLACK {
        return Err(Error::CflViolation { dt, required: limit, constraint: "convective" });
    }
    let n = grid.x_cells();
    let dim = grid.dim();
    let lam = dt / grid.dx();

    // face flux per axis, indexed by the cell on the face's left
    let mut fluxes: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for a in 0..dim {
        let flux: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|c| {
                let r = grid.x_neighbor(c, a, 1);
                let (rl, rr) = (state.rho[c], state.rho[r]);
                let (ul, ur) = (u[a][c], u[a][r]);
                let s = (ul.abs() + sound_speed(params, rl))
                    .max(ur.abs() + sound_speed(params, rr));
                0.5 * (rl * ul + rr * ur) - 0.5 * s * (rr - rl)
            })
            .collect();
        fluxes.push(flux);
    }

    let rho_new: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|c| {
            let mut div = 0.0;
            for a in 0..dim {
                div += fluxes[a][c] - fluxes[a][grid.x_neighbor(c, a, -1)];
            }
            // Rusanov under the hard CFL bound is a convex combination, so
            // any negative value is roundoff noise.
            (state.rho[c] - lam * div).max(0.0)
        })
        .collect();
    Ok(rho_new)
}

/// One conservative forward-Euler update of the momentum, including pressure,
/// viscous stress, and the explicit drag source `-rho^m (u m0 - m1)`.
pub fn momentum_step(
    params: &ModelParams,
    grid: &PhaseGrid,
    state: &FluidState,
    moments: &MomentFields,
    dt: f64,
    floor: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = grid.x_cells();
    let dim = grid.dim();
    let u = state.velocity(floor);
    let smax = max_signal_speed(params, state, &u);
    let conv_limit = convective_limit(grid, smax);
    if dt > conv_limit * CFL_SLACK {
        return Err(Error::CflViolation { dt, required: conv_limit, constraint: "convective" });
    }
    let p = params.pressure(&state.rho)?;
    let (mu, lambda) = params.viscosities(&state.rho)?;
    let visc_limit = viscous_limit(grid, &state.rho, &mu, &lambda, floor);
    if dt > visc_limit * CFL_SLACK {
        return Err(Error::CflViolation { dt, required: visc_limit, constraint: "viscous" });
    }
    let drag = params.drag_coefficient(&state.rho)?;
    let drag_stiff = map_max(n, |c| drag[c] * moments.m0[c]);
    if drag_stiff > 0.0 && dt * drag_stiff > 0.5 * CFL_SLACK {
        return Err(Error::CflViolation {
            dt,
            required: 0.5 / drag_stiff,
            constraint: "drag stiffness",
        });
    }

    let inv_h = 1.0 / grid.dx();
    let inv2h = 0.5 * inv_h;

    // cell-centered velocity gradient, needed for tangential face averages
    let mut grad = vec![vec![0.0; n]; dim * dim]; // grad[i*dim+j] = d_i u_j
    for i in 0..dim {
        for j in 0..dim {
            let out = &mut grad[i * dim + j];
            let comp = &u[j];
            for c in 0..n {
                out[c] = (comp[grid.x_neighbor(c, i, 1)] - comp[grid.x_neighbor(c, i, -1)]) * inv2h;
            }
        }
    }

    // total face flux (convective minus viscous stress) per axis and component
    let mut fluxes: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); dim]; dim];
    for a in 0..dim {
        for j in 0..dim {
            let flux: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|c| {
                    let r = grid.x_neighbor(c, a, 1);
                    let s = (u[a][c].abs() + sound_speed(params, state.rho[c]))
                        .max(u[a][r].abs() + sound_speed(params, state.rho[r]));
                    let conv = 0.5 * (state.mom[j][c] * u[a][c] + state.mom[j][r] * u[a][r])
                        - 0.5 * s * (state.mom[j][r] - state.mom[j][c]);
                    // viscous stress S_aj at the face
                    let mu_f = 0.5 * (mu[c] + mu[r]);
                    let dudn = (u[j][r] - u[j][c]) * inv_h; // d_a u_j
                    let dujn = if j == a {
                        dudn
                    } else {
                        0.5 * (grad[j * dim + a][c] + grad[j * dim + a][r]) // d_j u_a
                    };
                    let mut s_aj = mu_f * (dudn + dujn);
                    if j == a {
                        let la_f = 0.5 * (lambda[c] + lambda[r]);
                        let div_f = (u[a][r] - u[a][c]) * inv_h
                            + (0..dim)
                                .filter(|&b| b != a)
                                .map(|b| 0.5 * (grad[b * dim + b][c] + grad[b * dim + b][r]))
                                .sum::<f64>();
                        s_aj += la_f * div_f;
                    }
                    conv - s_aj
                })
                .collect();
            fluxes[a][j] = flux;
        }
    }

    let mut mom_new = Vec::with_capacity(dim);
    for j in 0..dim {
        let comp: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut div = 0.0;
                for a in 0..dim {
                    div += fluxes[a][j][c] - fluxes[a][j][grid.x_neighbor(c, a, -1)];
                }
                let gradp = (p[grid.x_neighbor(c, j, 1)] - p[grid.x_neighbor(c, j, -1)]) * inv2h;
                let drag_j = drag[c] * (u[j][c] * moments.m0[c] - moments.m1[j][c]);
                state.mom[j][c] - dt * (div * inv_h + gradp + drag_j)
            })
            .collect();
        if let Some(index) = comp.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "momentum update", index });
        }
        mom_new.push(comp);
    }
    Ok(mom_new)
}

/// Full second-order (Heun) fluid step over `dt` with moments frozen.
pub fn fluid_step(
    params: &ModelParams,
    grid: &PhaseGrid,
    state: &FluidState,
    moments: &MomentFields,
    dt: f64,
    floor: f64,
) -> Result<FluidState> {
    let rho1 = continuity_step(params, grid, state, dt, floor)?;
    let mom1 = momentum_step(params, grid, state, moments, dt, floor)?;
    let stage = FluidState { rho: rho1, mom: mom1, t: state.t + dt };
    let rho2 = continuity_step(params, grid, &stage, dt, floor)?;
    let mom2 = momentum_step(params, grid, &stage, moments, dt, floor)?;
    let rho: Vec<f64> =
        state.rho.iter().zip(&rho2).map(|(&a, &b)| (0.5 * a + 0.5 * b).max(0.0)).collect();
    let mom: Vec<Vec<f64>> = state
        .mom
        .iter()
        .zip(&mom2)
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(&a, &b)| 0.5 * a + 0.5 * b).collect())
        .collect();
    Ok(FluidState { rho, mom, t: state.t + dt })
}

/// The viscous part of the dissipation functional,
/// `int 2 mu T:T + lambda |div u|^2 dx`, computed two algebraically
/// independent ways: as the symmetric component sum and via the
/// gradient-contraction identity `T:T = (grad u):T`.
pub fn viscous_dissipation_two_routes(
    params: &ModelParams,
    grid: &PhaseGrid,
    state: &FluidState,
    floor: f64,
) -> Result<(f64, f64)> {
    let dim = grid.dim();
    let n = grid.x_cells();
    let u = state.velocity(floor);
    let (mu, lambda) = params.viscosities(&state.rho)?;
    let t = strain_tensor(grid, &u);
    let inv2h = 1.0 / (2.0 * grid.dx());
    let vol = grid.x_vol();

    let route_sym = vol
        * pairwise_map_sum(n, |c| {
            let tt: f64 = (0..dim * dim).map(|k| t[k][c] * t[k][c]).sum();
            let div: f64 = (0..dim).map(|i| t[i * dim + i][c]).sum();
            2.0 * mu[c] * tt + lambda[c] * div * div
        });

    let route_trace = vol
        * pairwise_map_sum(n, |c| {
            let mut contraction = 0.0;
            let mut div = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let dij =
                        (u[j][grid.x_neighbor(c, i, 1)] - u[j][grid.x_neighbor(c, i, -1)]) * inv2h;
                    contraction += dij * t[i * dim + j][c];
                    if i == j {
                        div += dij;
                    }
                }
            }
            2.0 * mu[c] * contraction + lambda[c] * div * div
        });

    Ok((route_sym, route_trace))
}
