//! Strang-split coupled stepping of the kinetic and fluid subsystems,
//! global step-size control, and scenario running.

use std::path::Path;

use crate::diagnostics::functionals;
use crate::error::{Error, Result};
use crate::fluid::{fluid_step, max_signal_speed, viscous_limit};
use crate::grid::{velocity_moments, FluidState, KineticState, PhaseGrid};
use crate::kinetic::vlasov_step;
use crate::numerics::map_max;
use crate::params::ModelParams;
use crate::presets::Preset;
use crate::series::{SeriesMeta, TimeSeries};
use crate::snapshot::write_snapshot;

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ModelParams,
    pub grid: PhaseGrid,
    pub preset: Preset,
    pub t_end: f64,
    pub cfl: f64,
    pub output_every: usize,
    pub density_floor: f64,
    pub config_hash: String,
}

/// The four explicit step-size bounds; any of them may be infinite when the
/// corresponding mechanism is inactive.
#[derive(Debug, Clone, Copy)]
pub struct CflBounds {
    /// `dx / max(|u| + sqrt(gamma rho^(gamma-1)))`
    pub convective: f64,
    /// `0.4 dx^2 rho_min_pos / (2 mu_max + |lambda|_max)`
    pub viscous: f64,
    /// `0.5 / max(rho^m max(1, m0))`
    pub drag: f64,
    /// `dx / max |xi|`
    pub velocity_transport: f64,
}

impl CflBounds {
    pub fn min(&self) -> f64 {
        self.convective.min(self.viscous).min(self.drag).min(self.velocity_transport)
    }
}

pub fn cfl_bounds(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
    floor: f64,
) -> Result<CflBounds> {
    let u = fluid.velocity(floor);
    let smax = max_signal_speed(params, fluid, &u);
    let convective =
        if smax > 0.0 { grid.dx() / smax } else { f64::INFINITY };
    let (mu, lambda) = params.viscosities(&fluid.rho)?;
    let viscous = viscous_limit(grid, &fluid.rho, &mu, &lambda, floor);
    let drag_coeff = params.drag_coefficient(&fluid.rho)?;
    let moments = velocity_moments(grid, kinetic);
    let stiffness = map_max(grid.x_cells(), |c| drag_coeff[c] * moments.m0[c].max(1.0));
    let drag = if stiffness > 0.0 { 0.5 / stiffness } else { f64::INFINITY };
    let velocity_transport = grid.dx() / grid.xi_abs_max();
    Ok(CflBounds { convective, viscous, drag, velocity_transport })
}

/// `dt = cfl * min(convective, viscous, drag, velocity transport)`.
pub fn cfl_dt(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
    cfl: f64,
    floor: f64,
) -> Result<f64> {
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(Error::Domain(format!("cfl number must lie in (0,1), got {cfl}")));
    }
    let bounds = cfl_bounds(params, grid, fluid, kinetic, floor)?;
    let dt = cfl * bounds.min();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::DegenerateState(format!(
            "no finite positive step size (bounds {bounds:?})"
        )));
    }
    Ok(dt)
}

/// One Strang-split coupled step: half kinetic transport with the initial
/// fluid fields, a full fluid step with the mid-state kinetic moments, and a
/// second half kinetic transport with the updated fluid fields.
pub fn step(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
    dt: f64,
    floor: f64,
) -> Result<(FluidState, KineticState)> {
    let k_half = vlasov_step(params, grid, kinetic, fluid, 0.5 * dt, floor)?;
    let moments = velocity_moments(grid, &k_half);
    let fluid_new = fluid_step(params, grid, fluid, &moments, dt, floor)?;
    let k_new = vlasov_step(params, grid, &k_half, &fluid_new, 0.5 * dt, floor)?;
    Ok((fluid_new, k_new))
}

/// Advance a scenario to `t_end`, recording the functionals every
/// `output_every` steps (the total step count is rounded up so the records
/// stay uniformly spaced and the final state is recorded).
///
/// When `snapshot_dir` is given, a binary snapshot is written at each
/// record; if a sub-step fails, the last valid state is snapshotted and the
/// error reports its path.
pub fn run(scenario: &Scenario, snapshot_dir: Option<&Path>) -> Result<TimeSeries> {
    let Scenario { params, grid, preset, t_end, cfl, output_every, density_floor, config_hash } =
        scenario;
    if *t_end < 0.0 {
        return Err(Error::Domain(format!("t_end must be >= 0, got {t_end}")));
    }
    if *output_every == 0 {
        return Err(Error::Domain("output_every must be >= 1".into()));
    }
    let (mut fluid, mut kinetic) = preset.materialize(params, grid)?;
    let meta = SeriesMeta {
        dim: grid.dim(),
        nx: grid.nx(),
        nxi: grid.nxi(),
        x_extent: grid.x_hi(),
        xi_extent: grid.xi_hi(),
        gamma: params.gamma,
        delta: params.delta,
        m_drag: params.m_drag,
        alpha: params.alpha,
        beta: params.beta,
        rho_inf: params.rho_inf,
        density_floor: *density_floor,
        config_hash: config_hash.clone(),
    };

    let mut records = Vec::new();
    records.push(functionals(params, grid, &fluid, &kinetic, *density_floor, 0.0)?);
    if let Some(dir) = snapshot_dir {
        write_snapshot(&dir.join("snapshot_000000.bin"), grid, &fluid, &kinetic)?;
    }
    if *t_end == 0.0 {
        return Ok(TimeSeries { meta, records });
    }

    let dt0 = cfl_dt(params, grid, &fluid, &kinetic, *cfl, *density_floor)?;
    let raw_steps = (t_end / dt0).ceil().max(1.0) as usize;
    let n_steps = raw_steps.div_ceil(*output_every) * *output_every;
    let dt = t_end / n_steps as f64;

    for k in 0..n_steps {
        match step(params, grid, &fluid, &kinetic, dt, *density_floor) {
            Ok((f_new, k_new)) => {
                fluid = f_new;
                kinetic = k_new;
            }
            Err(e) => {
                if let Some(dir) = snapshot_dir {
                    let path = dir.join("snapshot_abort.bin");
                    write_snapshot(&path, grid, &fluid, &kinetic)?;
                    return Err(Error::RunAborted { step: k, snapshot: path, source: Box::new(e) });
                }
                return Err(e);
            }
        }
        if (k + 1) % output_every == 0 {
            let t = (k + 1) as f64 * dt;
            records.push(functionals(params, grid, &fluid, &kinetic, *density_floor, t)?);
            if let Some(dir) = snapshot_dir {
                write_snapshot(
                    &dir.join(format!("snapshot_{:06}.bin", k + 1)),
                    grid,
                    &fluid,
                    &kinetic,
                )?;
            }
        }
    }
    let series = TimeSeries { meta, records };
    series.validate()?;
    Ok(series)
}
