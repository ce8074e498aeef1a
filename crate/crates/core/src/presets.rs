//! Scenario presets: closed-form initial data with compact kinetic support,
//! gridded materialization, and the streaming quadrature used by the
//! certifier.
//!
//! Every preset is separable in phase space, `f0(x, xi) = F(x) G(xi)`, which
//! the certifier exploits to evaluate the six-dimensional functionals as
//! products of three-dimensional quadratures.

use std::collections::BTreeMap;

use crate::diagnostics::FunctionalRecord;
use crate::error::{Error, Result};
use crate::grid::{FluidState, KineticState, PhaseGrid, MAX_DIM};
use crate::numerics::pairwise_map_sum;
use crate::params::{vacuum_safe_pow, ModelParams};

/// `(1 - s^2)^4` inside `|s| < 1`, zero outside: a C^3 cutoff with exactly
/// compact support.
#[inline]
fn quartic_bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        q * q * q * q
    }
}

/// Quintic smoothstep on [0, 1].
#[inline]
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// Uniform gas at the far-field density, no flow, no particles.
    Equilibrium,
    /// Gaussian density perturbation over the background, zero velocity, and
    /// a separable Gaussian particle cloud truncated to compact support.
    GaussianCloud {
        rho_amp: f64,
        rho_sigma: f64,
        /// uniform initial fluid velocity along the first axis
        u0: f64,
        f_amp: f64,
        f_x_sigma: f64,
        f_xi_sigma: f64,
        /// mean particle velocity along the first axis
        f_xi_center: f64,
        x_cut: f64,
        xi_cut: f64,
    },
    /// Density vanishing identically inside a ball with a smooth transition
    /// to the background outside.
    VacuumPatch { radius: f64, width: f64 },
    /// Uniform gas streaming against a particle cloud with opposed mean
    /// velocity; the cloud is uniform in position.
    Counterflow {
        rho0: f64,
        u0: f64,
        f_amp: f64,
        f_xi_center: f64,
        f_xi_sigma: f64,
        xi_cut: f64,
    },
    /// Concentrated Gaussian density with tuned initial functionals for the
    /// blow-up certifier; no flow, no particles.
    BlowupCandidate { mass: f64, sigma: f64 },
}

fn take(map: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    map.remove(key).unwrap_or(default)
}

impl Preset {
    /// Build a preset from its config name and numeric parameters. Unknown
    /// names and unknown parameters are rejected.
    pub fn from_config(
        name: &str,
        params: &BTreeMap<String, f64>,
        grid: &PhaseGrid,
    ) -> Result<Preset> {
        let mut p = params.clone();
        let preset = match name {
            "equilibrium" => Preset::Equilibrium,
            "gaussian_cloud" => {
                let f_xi_center = take(&mut p, "f_xi_center", 1.5);
                Preset::GaussianCloud {
                    rho_amp: take(&mut p, "rho_amp", 0.2),
                    rho_sigma: take(&mut p, "rho_sigma", 1.0),
                    u0: take(&mut p, "u0", 0.0),
                    f_amp: take(&mut p, "f_amp", 0.5),
                    f_x_sigma: take(&mut p, "f_x_sigma", 1.0),
                    f_xi_sigma: take(&mut p, "f_xi_sigma", 0.6),
                    f_xi_center,
                    x_cut: take(&mut p, "x_cut", 0.8 * grid.x_hi()),
                    xi_cut: take(
                        &mut p,
                        "xi_cut",
                        (0.85 * grid.xi_hi() - f_xi_center.abs()).max(0.1),
                    ),
                }
            }
            "vacuum_patch" => Preset::VacuumPatch {
                radius: take(&mut p, "radius", 1.0),
                width: take(&mut p, "width", 0.5),
            },
            "counterflow" => Preset::Counterflow {
                rho0: take(&mut p, "rho0", 0.15),
                u0: take(&mut p, "u0", 0.1),
                f_amp: take(&mut p, "f_amp", 0.3),
                f_xi_center: take(&mut p, "f_xi_center", -1.5),
                f_xi_sigma: take(&mut p, "f_xi_sigma", 0.5),
                xi_cut: take(&mut p, "xi_cut", 2.0),
            },
            "blowup_candidate" => Preset::BlowupCandidate {
                mass: take(&mut p, "mass", 1.0),
                sigma: take(&mut p, "sigma", 2.0),
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        if let Some(key) = p.keys().next() {
            return Err(Error::Domain(format!("unknown parameter `{key}` for preset `{name}`")));
        }
        Ok(preset)
    }

    /// Fluid density and velocity at a point.
    pub fn rho_u_at(&self, params: &ModelParams, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let mut u = [0.0f64; MAX_DIM];
        let rho = match self {
            Preset::Equilibrium => params.rho_inf,
            Preset::GaussianCloud { rho_amp, rho_sigma, u0, .. } => {
                u[0] = *u0;
                params.rho_inf + rho_amp * (-r2 / (2.0 * rho_sigma * rho_sigma)).exp()
            }
            Preset::VacuumPatch { radius, width } => {
                let r = r2.sqrt();
                params.rho_inf * smoothstep((r - radius) / width)
            }
            Preset::Counterflow { rho0, u0, .. } => {
                u[0] = *u0;
                *rho0
            }
            Preset::BlowupCandidate { mass, sigma } => {
                let dim = x.len() as f64;
                let norm = (2.0 * std::f64::consts::PI).powf(0.5 * dim) * sigma.powf(dim);
                mass / norm * (-r2 / (2.0 * sigma * sigma)).exp()
            }
        };
        (rho, u)
    }

    /// Position factor of the separable particle distribution.
    pub fn f_x_factor(&self, x: &[f64]) -> f64 {
        match self {
            Preset::GaussianCloud { f_amp, f_x_sigma, x_cut, .. } => {
                if *f_amp == 0.0 {
                    return 0.0;
                }
                let r2: f64 = x.iter().map(|v| v * v).sum();
                f_amp
                    * (-r2 / (2.0 * f_x_sigma * f_x_sigma)).exp()
                    * quartic_bump(r2.sqrt() / x_cut)
            }
            Preset::Counterflow { f_amp, .. } => *f_amp,
            _ => 0.0,
        }
    }

    /// Velocity factor of the separable particle distribution.
    pub fn f_xi_factor(&self, xi: &[f64]) -> f64 {
        match self {
            Preset::GaussianCloud { f_xi_sigma, f_xi_center, xi_cut, .. }
            | Preset::Counterflow { f_xi_sigma, f_xi_center, xi_cut, .. } => {
                let mut r2 = 0.0;
                for (a, &v) in xi.iter().enumerate() {
                    let d = if a == 0 { v - f_xi_center } else { v };
                    r2 += d * d;
                }
                (-r2 / (2.0 * f_xi_sigma * f_xi_sigma)).exp() * quartic_bump(r2.sqrt() / xi_cut)
            }
            _ => 0.0,
        }
    }

    pub fn has_particles(&self) -> bool {
        matches!(
            self,
            Preset::GaussianCloud { f_amp, .. } | Preset::Counterflow { f_amp, .. } if *f_amp != 0.0
        )
    }

    /// Check the state invariants the preset must deliver: nonnegative
    /// density and a kinetic support inside the velocity box with a 10%
    /// margin.
    pub fn validate(&self, params: &ModelParams, grid: &PhaseGrid) -> Result<()> {
        match self {
            Preset::Equilibrium => Ok(()),
            Preset::GaussianCloud { rho_amp, f_xi_center, xi_cut, x_cut, f_amp, .. } => {
                if params.rho_inf + rho_amp < 0.0 {
                    return Err(Error::Domain(format!(
                        "gaussian_cloud requires rho_inf + rho_amp >= 0, got {}",
                        params.rho_inf + rho_amp
                    )));
                }
                if *f_amp < 0.0 {
                    return Err(Error::Domain("f_amp must be >= 0".into()));
                }
                if *f_amp > 0.0 && f_xi_center.abs() + xi_cut > 0.9 * grid.xi_hi() {
                    return Err(Error::Domain(format!(
                        "kinetic support |{f_xi_center}| + {xi_cut} exceeds 90% of the \
                         velocity extent {}",
                        grid.xi_hi()
                    )));
                }
                if *x_cut > 0.9 * grid.x_hi() {
                    return Err(Error::Domain(format!(
                        "position support {x_cut} exceeds 90% of the position extent {}",
                        grid.x_hi()
                    )));
                }
                Ok(())
            }
            Preset::VacuumPatch { radius, width } => {
                if params.rho_inf <= 0.0 {
                    return Err(Error::Domain(
                        "vacuum_patch needs a positive far-field density".into(),
                    ));
                }
                if !(*radius > 0.0 && *width > 0.0) {
                    return Err(Error::Domain("radius and width must be positive".into()));
                }
                if radius + width > 0.9 * grid.x_hi() {
                    return Err(Error::Domain(
                        "vacuum transition must finish inside 90% of the box".into(),
                    ));
                }
                Ok(())
            }
            Preset::Counterflow { rho0, f_amp, f_xi_center, xi_cut, .. } => {
                if *rho0 < 0.0 || *f_amp < 0.0 {
                    return Err(Error::Domain("rho0 and f_amp must be >= 0".into()));
                }
                if *f_amp > 0.0 && f_xi_center.abs() + xi_cut > 0.9 * grid.xi_hi() {
                    return Err(Error::Domain(format!(
                        "kinetic support |{f_xi_center}| + {xi_cut} exceeds 90% of the \
                         velocity extent {}",
                        grid.xi_hi()
                    )));
                }
                Ok(())
            }
            Preset::BlowupCandidate { mass, sigma } => {
                if params.rho_inf != 0.0 {
                    return Err(Error::Domain(
                        "blowup_candidate requires rho_inf = 0 (finite total mass)".into(),
                    ));
                }
                if !(*mass > 0.0 && *sigma > 0.0) {
                    return Err(Error::Domain("mass and sigma must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Grid the preset at t = 0.
    pub fn materialize(
        &self,
        params: &ModelParams,
        grid: &PhaseGrid,
    ) -> Result<(FluidState, KineticState)> {
        self.validate(params, grid)?;
        let dim = grid.dim();
        let n = grid.x_cells();
        let mut rho = vec![0.0; n];
        let mut mom = vec![vec![0.0; n]; dim];
        let mut fx = vec![0.0; n];
        for c in 0..n {
            let mut x = [0.0f64; MAX_DIM];
            grid.x_center(c, &mut x);
            let (r, u) = self.rho_u_at(params, &x[..dim]);
            rho[c] = r;
            for a in 0..dim {
                mom[a][c] = r * u[a];
            }
            fx[c] = self.f_x_factor(&x[..dim]);
        }
        let mut f = vec![0.0; grid.phase_cells()];
        if self.has_particles() {
            let nv = grid.xi_cells();
            let mut gxi = vec![0.0; nv];
            for (vc, g) in gxi.iter_mut().enumerate() {
                let mut xi = [0.0f64; MAX_DIM];
                grid.xi_center(vc, &mut xi);
                *g = self.f_xi_factor(&xi[..dim]);
            }
            for xc in 0..n {
                if fx[xc] == 0.0 {
                    continue;
                }
                for vc in 0..nv {
                    f[xc * nv + vc] = fx[xc] * gxi[vc];
                }
            }
        }
        Ok((FluidState::new(grid, rho, mom, 0.0)?, KineticState::new(grid, f, 0.0)?))
    }
}

/// Initial functionals by streaming quadrature at a certification
/// resolution, exploiting the separability of the preset's distribution.
/// The kinetic quadrature never materializes the phase grid.
pub fn certify_functionals(
    preset: &Preset,
    params: &ModelParams,
    resolution: usize,
    x_extent: f64,
    xi_extent: f64,
) -> Result<FunctionalRecord> {
    let dim = params.dim;
    let grid = PhaseGrid::new(dim, resolution, resolution, x_extent, xi_extent)?;
    preset.validate(params, &grid)?;
    let n = grid.x_cells();
    let nv = grid.xi_cells();
    let xvol = grid.x_vol();
    let vvol = grid.xi_vol();
    let gamma = params.gamma;

    let with_x = |f: &(dyn Fn(&[f64], f64, &[f64; MAX_DIM]) -> f64 + Sync)| -> f64 {
        xvol * pairwise_map_sum(n, |c| {
            let mut x = [0.0f64; MAX_DIM];
            grid.x_center(c, &mut x);
            let (rho, u) = preset.rho_u_at(params, &x[..dim]);
            f(&x[..dim], rho, &u)
        })
    };

    let mass_rho = with_x(&|_, rho, _| rho);
    let mut mom_rho = Vec::with_capacity(dim);
    for a in 0..dim {
        mom_rho.push(with_x(&move |_, rho, u| rho * u[a]));
    }
    let w_rho = with_x(&|x, rho, u| rho * (0..dim).map(|a| u[a] * x[a]).sum::<f64>());
    let i_rho = 0.5 * with_x(&|x, rho, _| rho * x.iter().map(|v| v * v).sum::<f64>());
    let e_k = 0.5 * with_x(&|_, rho, u| rho * (0..dim).map(|a| u[a] * u[a]).sum::<f64>());
    let e_i = with_x(&|_, rho, _| vacuum_safe_pow(rho, gamma)) / (gamma - 1.0);

    // separable kinetic factors
    let fx = |c: usize| {
        let mut x = [0.0f64; MAX_DIM];
        grid.x_center(c, &mut x);
        preset.f_x_factor(&x[..dim])
    };
    let gxi = |c: usize| {
        let mut xi = [0.0f64; MAX_DIM];
        grid.xi_center(c, &mut xi);
        preset.f_xi_factor(&xi[..dim])
    };
    let x0m = xvol * pairwise_map_sum(n, fx);
    let mut x1 = vec![0.0; dim];
    for (a, slot) in x1.iter_mut().enumerate() {
        *slot = xvol
            * pairwise_map_sum(n, |c| {
                let mut x = [0.0f64; MAX_DIM];
                grid.x_center(c, &mut x);
                x[a] * fx(c)
            });
    }
    let x2 = xvol
        * pairwise_map_sum(n, |c| {
            let mut x = [0.0f64; MAX_DIM];
            grid.x_center(c, &mut x);
            x[..dim].iter().map(|v| v * v).sum::<f64>() * fx(c)
        });
    let v0 = vvol * pairwise_map_sum(nv, gxi);
    let mut v1 = vec![0.0; dim];
    for (a, slot) in v1.iter_mut().enumerate() {
        *slot = vvol
            * pairwise_map_sum(nv, |c| {
                let mut xi = [0.0f64; MAX_DIM];
                grid.xi_center(c, &mut xi);
                xi[a] * gxi(c)
            });
    }
    let v2 = vvol
        * pairwise_map_sum(nv, |c| {
            let mut xi = [0.0f64; MAX_DIM];
            grid.xi_center(c, &mut xi);
            xi[..dim].iter().map(|v| v * v).sum::<f64>() * gxi(c)
        });

    let mass_f = x0m * v0;
    let mom_f: Vec<f64> = (0..dim).map(|a| x0m * v1[a]).collect();
    let w_f: f64 = (0..dim).map(|a| x1[a] * v1[a]).sum();
    let i_f = 0.5 * x2 * v0;
    let e_f = 0.5 * x0m * v2;

    // dissipation of the initial data: the shipped presets all have
    // spatially uniform velocity, so the viscous part vanishes and the drag
    // part factorizes through the velocity moments of G.
    let v0c = v0;
    let v1c = v1.clone();
    let v2c = v2;
    let dissipation = with_x(&move |x, rho, u| {
        let fx_here = preset.f_x_factor(x);
        if fx_here == 0.0 {
            return 0.0;
        }
        let usq: f64 = (0..dim).map(|a| u[a] * u[a]).sum();
        let udotv1: f64 = (0..dim).map(|a| u[a] * v1c[a]).sum();
        vacuum_safe_pow(rho, params.m_drag) * fx_here * (usq * v0c - 2.0 * udotv1 + v2c)
    });

    let w = w_rho + w_f;
    let i = i_rho + i_f;
    let e = e_k + e_i + e_f;
    Ok(FunctionalRecord {
        t: 0.0,
        mass_rho,
        mass_f,
        mom_rho,
        mom_f,
        w_rho,
        w_f,
        i_rho,
        i_f,
        e_k,
        e_i,
        e_f,
        dissipation,
        j: i - w + e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::functionals;

    fn params_1d() -> ModelParams {
        ModelParams::new(1.4, 1.2, 2.0, 0.05, 0.02, 0.2, 1, true).unwrap()
    }

    #[test]
    fn unknown_preset_and_parameter_rejected() {
        let g = PhaseGrid::new(1, 16, 16, 4.0, 5.0).unwrap();
        assert!(matches!(
            Preset::from_config("warp_drive", &BTreeMap::new(), &g),
            Err(Error::UnknownPreset(_))
        ));
        let mut p = BTreeMap::new();
        p.insert("flux_capacitance".to_string(), 1.21);
        assert!(Preset::from_config("equilibrium", &p, &g).is_err());
    }

    #[test]
    fn equilibrium_materializes_uniform() {
        let p = params_1d();
        let g = PhaseGrid::new(1, 16, 16, 4.0, 5.0).unwrap();
        let preset = Preset::from_config("equilibrium", &BTreeMap::new(), &g).unwrap();
        let (fluid, kin) = preset.materialize(&p, &g).unwrap();
        assert!(fluid.rho.iter().all(|&r| r == 0.2));
        assert!(fluid.mom[0].iter().all(|&m| m == 0.0));
        assert!(kin.f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_cloud_with_zero_amplitudes_is_equilibrium() {
        let p = params_1d();
        let g = PhaseGrid::new(1, 32, 32, 4.0, 5.0).unwrap();
        let mut args = BTreeMap::new();
        args.insert("rho_amp".to_string(), 0.0);
        args.insert("f_amp".to_string(), 0.0);
        let cloud = Preset::from_config("gaussian_cloud", &args, &g).unwrap();
        let eq = Preset::from_config("equilibrium", &BTreeMap::new(), &g).unwrap();
        let (fa, ka) = cloud.materialize(&p, &g).unwrap();
        let (fb, kb) = eq.materialize(&p, &g).unwrap();
        assert_eq!(fa.rho, fb.rho);
        assert_eq!(ka.f, kb.f);
    }

    #[test]
    fn presets_satisfy_state_invariants() {
        let p = params_1d();
        let g = PhaseGrid::new(1, 32, 48, 4.0, 5.0).unwrap();
        for name in ["equilibrium", "gaussian_cloud", "vacuum_patch", "counterflow"] {
            let preset = Preset::from_config(name, &BTreeMap::new(), &g).unwrap();
            let (fluid, kin) = preset.materialize(&p, &g).unwrap();
            assert!(fluid.rho.iter().all(|&r| r >= 0.0), "{name}");
            assert!(kin.f.iter().all(|&v| v >= 0.0), "{name}");
        }
    }

    #[test]
    fn kinetic_support_margin_enforced() {
        let g = PhaseGrid::new(1, 16, 16, 4.0, 2.0).unwrap(); // tight velocity box
        let mut args = BTreeMap::new();
        args.insert("f_xi_center".to_string(), 1.5);
        args.insert("xi_cut".to_string(), 1.0);
        let preset = Preset::from_config("gaussian_cloud", &args, &g).unwrap();
        assert!(preset.validate(&params_1d(), &g).is_err());
    }

    #[test]
    fn vacuum_patch_has_true_vacuum_core() {
        let mut p = params_1d();
        p.rho_inf = 0.5;
        let g = PhaseGrid::new(1, 64, 8, 4.0, 4.0).unwrap();
        let preset = Preset::from_config("vacuum_patch", &BTreeMap::new(), &g).unwrap();
        let (fluid, _) = preset.materialize(&p, &g).unwrap();
        let mid = g.x_cells() / 2;
        assert_eq!(fluid.rho[mid], 0.0);
        assert!((fluid.rho[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn certify_functionals_match_gridded_quadrature_in_1d() {
        // the streaming separable quadrature and the full gridded functional
        // evaluation are independent routes to the same numbers
        let p = params_1d();
        let g = PhaseGrid::new(1, 64, 64, 4.0, 5.0).unwrap();
        let preset = Preset::from_config("counterflow", &BTreeMap::new(), &g).unwrap();
        let (fluid, kin) = preset.materialize(&p, &g).unwrap();
        let gridded = functionals(&p, &g, &fluid, &kin, 1e-10, 0.0).unwrap();
        let streamed = certify_functionals(&preset, &p, 64, 4.0, 5.0).unwrap();
        for (a, b, label) in [
            (gridded.mass_rho, streamed.mass_rho, "m_rho"),
            (gridded.mass_f, streamed.mass_f, "m_f"),
            (gridded.w_f, streamed.w_f, "w_f"),
            (gridded.i_f, streamed.i_f, "i_f"),
            (gridded.e_f, streamed.e_f, "e_f"),
            (gridded.e_k, streamed.e_k, "e_k"),
            (gridded.e_i, streamed.e_i, "e_i"),
            (gridded.mom_f[0], streamed.mom_f[0], "mom_f"),
            (gridded.dissipation, streamed.dissipation, "dissipation"),
        ] {
            assert!(
                (a - b).abs() <= 1e-11 * a.abs().max(1.0),
                "{label}: gridded {a} vs streamed {b}"
            );
        }
    }

    #[test]
    fn blowup_candidate_gaussian_mass_is_calibrated() {
        let p = ModelParams::new(1.4, 1.2, 2.0, 3.0, -1.7129736126206454, 0.0, 3, false).unwrap();
        let preset = Preset::BlowupCandidate { mass: 1.0, sigma: 2.0 };
        let r = certify_functionals(&preset, &p, 48, 14.0, 4.0).unwrap();
        assert!((r.mass_rho - 1.0).abs() < 1e-10, "mass {}", r.mass_rho);
        assert!((r.i_rho - 6.0).abs() < 1e-9, "I0 {}", r.i_rho);
        // internal energy of the profile (analytic): A^0.4 * 1.4^-1.5 / 0.4
        let a = 1.0 / ((2.0 * std::f64::consts::PI).powf(1.5) * 8.0);
        let e_i = a.powf(0.4) * 1.4f64.powf(-1.5) / 0.4;
        assert!((r.e_i - e_i).abs() < 1e-10 * e_i, "E_i {} vs {}", r.e_i, e_i);
    }
}
