//! Successive-approximation (Picard) experiment on the reformulated system.
//!
//! Each iterate solves the linear system with coefficients frozen from the
//! previous iterate over a short horizon [0, T]: the sound variable n is
//! stepped by its transport equation with compression source, the
//! distribution by the kinetic kernel with rate (n^{k+1})^{m theta} and
//! carrier velocity u^k, and the velocity by its advection-diffusion
//! equation with pressure, degenerate Lame diffusion, viscosity-gradient
//! coupling, and drag source. Residual norms between consecutive iterates
//! are reported together with their contraction ratios.

use crate::coupled::Scenario;
use crate::error::{Error, Result};
use crate::grid::{h1_norm_pos, velocity_moments_raw, weighted_l2_norm, PhaseGrid};
use crate::kinetic::vlasov_step_with_rate;
use crate::numerics::map_max;
use crate::params::{vacuum_safe_pow, ModelParams};

pub struct PicardOptions {
    pub iters: usize,
    /// Horizon; when absent the module picks one from the coefficient
    /// magnitudes of the initial data.
    pub t_short: Option<f64>,
    pub weight_p: f64,
    pub weight_a: f64,
}

#[derive(Debug, Clone)]
pub struct PicardIteration {
    pub k: usize,
    /// sup over time of ||n^k - n^{k-1}||_{H^1}
    pub n_res: f64,
    /// sup over time of ||u^k - u^{k-1}||_{H^1}
    pub u_res: f64,
    /// sup over time of the weighted L2 distance of the distributions
    pub f_res: f64,
    /// sup over time of the squared-sum residual
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub t_short: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub iterations: Vec<PicardIteration>,
    /// `h^{k+1} / h^k` for consecutive iterations
    pub ratios: Vec<f64>,
    pub diverged: bool,
    pub iterate0_note: &'static str,
}

impl PicardReport {
    pub fn table(&self) -> String {
        let mut out = format!(
            "T_short = {:.6e}, dt = {:.6e}, steps = {}\n{}\n",
            self.t_short, self.dt, self.n_steps, self.iterate0_note
        );
        out.push_str("k    |n residual|   |u residual|   |f residual|   h^k           ratio\n");
        for (i, it) in self.iterations.iter().enumerate() {
            let ratio = if i == 0 {
                "-".to_string()
            } else {
                format!("{:.4e}", self.ratios[i - 1])
            };
            out.push_str(&format!(
                "{:<4} {:<14.4e} {:<14.4e} {:<14.4e} {:<14.4e} {}\n",
                it.k, it.n_res, it.u_res, it.f_res, it.h, ratio
            ));
        }
        if self.diverged {
            out.push_str("warning: residual growth exceeded 10x between iterates\n");
        }
        out
    }
}

/// Frozen-coefficient trajectories of one iterate.
struct Traj {
    n: Vec<Vec<f64>>,
    u: Vec<Vec<Vec<f64>>>,
    f: Vec<Vec<f64>>,
}

struct Ops<'a> {
    grid: &'a PhaseGrid,
    params: &'a ModelParams,
}

impl Ops<'_> {
    fn d(&self, g: &[f64], axis: usize) -> Vec<f64> {
        crate::grid::pos_central_derivative(self.grid, g, axis)
    }

    fn laplacian(&self, g: &[f64]) -> Vec<f64> {
        let grid = self.grid;
        let inv_h2 = 1.0 / (grid.dx() * grid.dx());
        (0..g.len())
            .map(|c| {
                let mut acc = 0.0;
                for a in 0..grid.dim() {
                    acc += g[grid.x_neighbor(c, a, 1)] - 2.0 * g[c] + g[grid.x_neighbor(c, a, -1)];
                }
                acc * inv_h2
            })
            .collect()
    }

    fn divergence(&self, u: &[Vec<f64>]) -> Vec<f64> {
        let n = u[0].len();
        let mut div = vec![0.0; n];
        for (a, comp) in u.iter().enumerate() {
            let da = self.d(comp, a);
            for c in 0..n {
                div[c] += da[c];
            }
        }
        div
    }

    /// `-u_adv . grad(g) + source`
    fn transport_rhs(&self, g: &[f64], u_adv: &[Vec<f64>], source: &[f64]) -> Vec<f64> {
        let n = g.len();
        let mut rhs = source.to_vec();
        for a in 0..self.grid.dim() {
            let da = self.d(g, a);
            for c in 0..n {
                rhs[c] -= u_adv[a][c] * da[c];
            }
        }
        rhs
    }

    /// Right-hand side of the linearized velocity equation.
    #[allow(clippy::too_many_arguments)]
    fn velocity_rhs(
        &self,
        u: &[Vec<f64>],
        n_new: &[f64],
        u_prev: &[Vec<f64>],
        m0: &[f64],
        m1: &[Vec<f64>],
    ) -> Vec<Vec<f64>> {
        let p = self.params;
        let dim = self.grid.dim();
        let nc = n_new.len();
        let theta = p.theta();
        let press: Vec<f64> =
            n_new.iter().map(|&v| vacuum_safe_pow(v.max(0.0), theta * (p.gamma - 1.0))).collect();
        let n_sq: Vec<f64> = n_new.iter().map(|&v| v * v).collect();
        let drag_coef: Vec<f64> =
            n_new.iter().map(|&v| vacuum_safe_pow(v.max(0.0), theta * (p.m_drag - 1.0))).collect();
        let div_u = self.divergence(u);
        let div_u_prev = self.divergence(u_prev);
        let grad_n2: Vec<Vec<f64>> = (0..dim).map(|a| self.d(&n_sq, a)).collect();
        // gradient of the previous-iterate velocity, d_i u_prev_j
        let mut grad_prev = vec![vec![0.0; nc]; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                grad_prev[i * dim + j] = self.d(&u_prev[j], i);
            }
        }

        let mut rhs = vec![vec![0.0; nc]; dim];
        for j in 0..dim {
            let grad_press = self.d(&press, j);
            let lap = self.laplacian(&u[j]);
            let grad_div = self.d(&div_u, j);
            let mut comp = vec![0.0; nc];
            // advection: -(u_prev . grad) u_j
            for a in 0..dim {
                let da = self.d(&u[j], a);
                for c in 0..nc {
                    comp[c] -= u_prev[a][c] * da[c];
                }
            }
            for c in 0..nc {
                // pressure
                comp[c] -= p.gamma / (p.gamma - 1.0) * grad_press[c];
                // degenerate Lame diffusion: -n^2 L u
                comp[c] += n_sq[c] * (p.alpha * lap[c] + (p.alpha + p.beta) * grad_div[c]);
                // viscosity-gradient coupling with the previous iterate
                let mut couple = 0.0;
                for i in 0..dim {
                    let sym = p.alpha * (grad_prev[i * dim + j][c] + grad_prev[j * dim + i][c]);
                    let tr = if i == j { p.beta * div_u_prev[c] } else { 0.0 };
                    couple += grad_n2[i][c] * (sym + tr);
                }
                comp[c] += p.delta / (p.delta - 1.0) * couple;
                // drag source
                comp[c] -= drag_coef[c] * (u_prev[j][c] * m0[c] - m1[j][c]);
            }
            rhs[j] = comp;
        }
        rhs
    }
}

fn heun_scalar(
    ops: &Ops,
    g: &[f64],
    dt: f64,
    rhs: impl Fn(&Ops, &[f64], usize) -> Vec<f64>,
) -> Vec<f64> {
    let r1 = rhs(ops, g, 0);
    let stage: Vec<f64> = g.iter().zip(&r1).map(|(&v, &r)| v + dt * r).collect();
    let r2 = rhs(ops, &stage, 1);
    g.iter().zip(stage.iter().zip(&r2)).map(|(&v, (&s, &r))| 0.5 * v + 0.5 * (s + dt * r)).collect()
}

fn heun_vector(
    ops: &Ops,
    u: &[Vec<f64>],
    dt: f64,
    rhs: impl Fn(&Ops, &[Vec<f64>], usize) -> Vec<Vec<f64>>,
) -> Vec<Vec<f64>> {
    let r1 = rhs(ops, u, 0);
    let stage: Vec<Vec<f64>> = u
        .iter()
        .zip(&r1)
        .map(|(c, r)| c.iter().zip(r).map(|(&v, &rr)| v + dt * rr).collect())
        .collect();
    let r2 = rhs(ops, &stage, 1);
    u.iter()
        .zip(stage.iter().zip(&r2))
        .map(|(c0, (c1, r))| {
            c0.iter()
                .zip(c1.iter().zip(r))
                .map(|(&v0, (&v1, &rr))| 0.5 * v0 + 0.5 * (v1 + dt * rr))
                .collect()
        })
        .collect()
}

fn drag_rate(params: &ModelParams, n: &[f64]) -> Vec<f64> {
    let expo = params.m_drag * params.theta();
    n.iter().map(|&v| vacuum_safe_pow(v.max(0.0), expo)).collect()
}

/// Run the successive-approximation experiment and report residuals.
pub fn picard_iterate(scenario: &Scenario, opts: &PicardOptions) -> Result<PicardReport> {
    if opts.iters < 2 {
        return Err(Error::Domain(format!("picard needs at least 2 iterations, got {}", opts.iters)));
    }
    let params = &scenario.params;
    let grid = &scenario.grid;
    let ops = Ops { grid, params };
    let (fluid0, kin0) = scenario.preset.materialize(params, grid)?;
    let n0 = params.to_sound_field(&fluid0.rho)?;
    let u0 = fluid0.velocity(scenario.density_floor);
    let f0 = kin0.f;
    let theta = params.theta();

    // coefficient magnitudes of the initial data
    let nc = grid.x_cells();
    let umax = (0..grid.dim()).map(|a| map_max(nc, |c| u0[a][c].abs())).fold(0.0f64, f64::max);
    let nmax = map_max(nc, |c| n0[c]);
    let rate_max = vacuum_safe_pow(nmax, params.m_drag * theta);
    let moments0 = velocity_moments_raw(grid, &f0);
    let m0max = map_max(nc, |c| moments0.m0[c]);

    let t_short = opts.t_short.unwrap_or_else(|| {
        let stiff = 1.0 + umax + rate_max * (1.0 + m0max) + params.alpha * nmax * nmax;
        0.25 / stiff
    });
    if !(t_short > 0.0) || !t_short.is_finite() {
        return Err(Error::Domain(format!("invalid picard horizon {t_short}")));
    }

    let dx = grid.dx();
    let diff = (2.0 * params.alpha + params.beta.abs()) * nmax * nmax;
    let mut dt = 0.5
        * [
            if umax > 0.0 { dx / umax } else { f64::INFINITY },
            if diff > 0.0 { 0.25 * dx * dx / (grid.dim() as f64 * diff) } else { f64::INFINITY },
            if rate_max > 0.0 { 0.5 / (rate_max * (1.0 + m0max)) } else { f64::INFINITY },
            dx / grid.xi_abs_max(),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !dt.is_finite() {
        dt = t_short;
    }
    let n_steps = ((t_short / dt).ceil() as usize).max(2);
    let dt = t_short / n_steps as f64;

    let levels = n_steps + 1;
    let wp = opts.weight_p.max(4.0) - 2.0; // residual weight exponent, >= 2

    // iterate 0: transport of n by u0, heat flow of u with coefficient n0^2
    // (frozen in time), kinetic transport with frozen initial coefficients
    let mut prev = {
        let mut n_lv = Vec::with_capacity(levels);
        let mut u_lv = Vec::with_capacity(levels);
        let mut f_lv = Vec::with_capacity(levels);
        n_lv.push(n0.clone());
        u_lv.push(u0.clone());
        f_lv.push(f0.clone());
        let zero_src = vec![0.0; nc];
        let n0_sq: Vec<f64> = n0.iter().map(|&v| v * v).collect();
        let rate0 = drag_rate(params, &n0);
        for _ in 0..n_steps {
            let n_prev = n_lv.last().unwrap();
            let n_next =
                heun_scalar(&ops, n_prev, dt, |o, g, _| o.transport_rhs(g, &u0, &zero_src));
            n_lv.push(n_next);
            let u_prev_lv = u_lv.last().unwrap();
            let u_next = heun_vector(&ops, u_prev_lv, dt, |o, u, _| {
                (0..grid.dim())
                    .map(|j| {
                        let lap = o.laplacian(&u[j]);
                        (0..nc).map(|c| n0_sq[c] * lap[c]).collect()
                    })
                    .collect()
            });
            u_lv.push(u_next);
            let f_prev = f_lv.last().unwrap();
            let kin = crate::grid::KineticState { f: f_prev.clone(), t: 0.0 };
            let stepped = vlasov_step_with_rate(grid, &kin, &rate0, &u0, dt)?;
            f_lv.push(stepped.f);
        }
        Traj { n: n_lv, u: u_lv, f: f_lv }
    };

    let mut iterations = Vec::new();
    let mut diverged = false;

    for k in 1..=opts.iters {
        // n^{k+1}: transport by u^k with compression source -theta^{-1} n^k div u^k
        let mut n_lv = Vec::with_capacity(levels);
        n_lv.push(n0.clone());
        for j in 0..n_steps {
            let cur = n_lv.last().unwrap().clone();
            let next = heun_scalar(&ops, &cur, dt, |o, g, stage| {
                let lvl = j + stage;
                let div_uk = o.divergence(&prev.u[lvl]);
                let src: Vec<f64> =
                    (0..nc).map(|c| -(1.0 / theta) * prev.n[lvl][c] * div_uk[c]).collect();
                o.transport_rhs(g, &prev.u[lvl], &src)
            });
            n_lv.push(next);
        }

        // f^{k+1}: kinetic kernel with rate (n^{k+1})^{m theta}, carrier u^k
        let mut f_lv = Vec::with_capacity(levels);
        f_lv.push(f0.clone());
        for j in 0..n_steps {
            let rate = drag_rate(params, &n_lv[j]);
            let kin = crate::grid::KineticState { f: f_lv[j].clone(), t: 0.0 };
            let stepped = vlasov_step_with_rate(grid, &kin, &rate, &prev.u[j], dt)?;
            f_lv.push(stepped.f);
        }
        let (m0s, m1s) = moments_of(grid, &f_lv);

        // u^{k+1}
        let mut u_lv = Vec::with_capacity(levels);
        u_lv.push(u0.clone());
        for j in 0..n_steps {
            let cur = u_lv.last().unwrap().clone();
            let next = heun_vector(&ops, &cur, dt, |o, u, stage| {
                let lvl = j + stage;
                o.velocity_rhs(u, &n_lv[lvl], &prev.u[lvl], &m0s[lvl], &m1s[lvl])
            });
            for comp in &next {
                if let Some(idx) = comp.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { context: "picard velocity", index: idx });
                }
            }
            u_lv.push(next);
        }

        // residuals against the previous iterate
        let mut n_res = 0.0f64;
        let mut u_res = 0.0f64;
        let mut f_res = 0.0f64;
        let mut h = 0.0f64;
        for lvl in 0..levels {
            let dn: Vec<f64> =
                n_lv[lvl].iter().zip(&prev.n[lvl]).map(|(a, b)| a - b).collect();
            let n_norm = h1_norm_pos(grid, &dn);
            let mut u_sq = 0.0;
            for a in 0..grid.dim() {
                let du: Vec<f64> =
                    u_lv[lvl][a].iter().zip(&prev.u[lvl][a]).map(|(x, y)| x - y).collect();
                let nn = h1_norm_pos(grid, &du);
                u_sq += nn * nn;
            }
            let df: Vec<f64> = f_lv[lvl].iter().zip(&prev.f[lvl]).map(|(a, b)| a - b).collect();
            let f_norm = weighted_l2_norm(grid, &df, wp, opts.weight_a)?;
            n_res = n_res.max(n_norm);
            u_res = u_res.max(u_sq.sqrt());
            f_res = f_res.max(f_norm);
            h = h.max(n_norm * n_norm + u_sq + f_norm * f_norm);
        }
        if let Some(last) = iterations.last() {
            let last: &PicardIteration = last;
            if last.h > 0.0 && h > 10.0 * last.h {
                diverged = true;
            }
        }
        iterations.push(PicardIteration { k, n_res, u_res, f_res, h });

        prev = Traj { n: n_lv, u: u_lv, f: f_lv };
    }

    let ratios = iterations
        .windows(2)
        .map(|w| if w[0].h > 0.0 { w[1].h / w[0].h } else { 0.0 })
        .collect();
    Ok(PicardReport {
        t_short,
        dt,
        n_steps,
        iterations,
        ratios,
        diverged,
        iterate0_note: "iterate-0 velocity diffusion coefficient: n0 frozen in time",
    })
}

#[allow(clippy::type_complexity)]
fn moments_of(grid: &PhaseGrid, f_lv: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let mut m0s = Vec::with_capacity(f_lv.len());
    let mut m1s = Vec::with_capacity(f_lv.len());
    for f in f_lv {
        let m = velocity_moments_raw(grid, f);
        m0s.push(m.m0);
        m1s.push(m.m1);
    }
    (m0s, m1s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use std::collections::BTreeMap;

    fn scenario(preset: Preset, nx: usize, nxi: usize) -> Scenario {
        Scenario {
            params: ModelParams::new(1.4, 1.2, 2.0, 0.05, 0.02, 0.2, 1, true).unwrap(),
            grid: PhaseGrid::new(1, nx, nxi, 4.0, 5.0).unwrap(),
            preset,
            t_end: 1.0,
            cfl: 0.4,
            output_every: 10,
            density_floor: 1e-10,
            config_hash: "picard-test".into(),
        }
    }

    fn opts(iters: usize, t_short: Option<f64>) -> PicardOptions {
        PicardOptions { iters, t_short, weight_p: 2.0, weight_a: 1.0 }
    }

    #[test]
    fn equilibrium_fixed_point_has_zero_residuals() {
        let sc = scenario(Preset::Equilibrium, 24, 16);
        let report = picard_iterate(&sc, &opts(3, None)).unwrap();
        for it in &report.iterations {
            assert_eq!(it.h, 0.0, "k={}: h={}", it.k, it.h);
        }
        assert!(!report.diverged);
    }

    #[test]
    fn smooth_small_data_contracts() {
        let g = PhaseGrid::new(1, 48, 48, 4.0, 5.0).unwrap();
        let mut args = BTreeMap::new();
        args.insert("rho_amp".to_string(), 0.1);
        args.insert("f_amp".to_string(), 0.2);
        let preset = Preset::from_config("gaussian_cloud", &args, &g).unwrap();
        let sc = scenario(preset, 48, 48);
        let report = picard_iterate(&sc, &opts(6, None)).unwrap();
        assert!(!report.diverged, "{}", report.table());
        for (i, r) in report.ratios.iter().enumerate() {
            if i >= 1 {
                // ratios h^{k+1}/h^k for k >= 2
                assert!(*r < 1.0, "ratio {} at k={} not contracting\n{}", r, i + 1, report.table());
            }
        }
    }

    #[test]
    fn halving_the_horizon_at_least_halves_the_first_residual() {
        let g = PhaseGrid::new(1, 32, 32, 4.0, 5.0).unwrap();
        let mut args = BTreeMap::new();
        args.insert("rho_amp".to_string(), 0.1);
        args.insert("f_amp".to_string(), 0.2);
        let preset = Preset::from_config("gaussian_cloud", &args, &g).unwrap();
        let sc = scenario(preset, 32, 32);
        let full = picard_iterate(&sc, &opts(2, Some(0.2))).unwrap();
        let half = picard_iterate(&sc, &opts(2, Some(0.1))).unwrap();
        let h1_full = full.iterations[0].h;
        let h1_half = half.iterations[0].h;
        assert!(
            h1_half <= 0.5 * h1_full,
            "h1(T/2) = {h1_half} vs h1(T) = {h1_full}"
        );
    }
}
