//! Time-series functionals of the coupled state and machine checks of the
//! exact conservation/dissipation identities and functional inequalities.

use crate::blowup;
use crate::error::{Error, Result};
use crate::fluid::strain_tensor;
use crate::grid::{velocity_moments, FluidState, KineticState, PhaseGrid, MAX_DIM};
use crate::numerics::pairwise_map_sum;
use crate::params::ModelParams;

/// One time-stamped evaluation of all tracked functionals.
///
/// Scalars follow the usual split: masses `m_rho`, `m_f`; momentum vectors
/// `M_rho`, `M_f`; momentum weights `W_rho = int rho u.x`,
/// `W_f = int (x.xi) f`; inertia `I = (int rho|x|^2)/2 + (int f|x|^2)/2`;
/// energies `E_k + E_i + E_f`; the dissipation functional; and
/// `J = I - (t+1) W + (t+1)^2 E`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalRecord {
    pub t: f64,
    pub mass_rho: f64,
    pub mass_f: f64,
    pub mom_rho: Vec<f64>,
    pub mom_f: Vec<f64>,
    pub w_rho: f64,
    pub w_f: f64,
    pub i_rho: f64,
    pub i_f: f64,
    pub e_k: f64,
    pub e_i: f64,
    pub e_f: f64,
    pub dissipation: f64,
    pub j: f64,
}

impl FunctionalRecord {
    pub fn w_total(&self) -> f64 {
        self.w_rho + self.w_f
    }
    pub fn i_total(&self) -> f64 {
        self.i_rho + self.i_f
    }
    pub fn e_total(&self) -> f64 {
        self.e_k + self.e_i + self.e_f
    }
    pub fn mom_total(&self) -> Vec<f64> {
        self.mom_rho.iter().zip(&self.mom_f).map(|(a, b)| a + b).collect()
    }
    pub fn mom_total_norm(&self) -> f64 {
        self.mom_total().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    /// Violation of the discrete Cauchy-Schwarz inequality
    /// `J >= (t+1)^2 E_i` with a `1e-12 |J|` round-off allowance
    /// (positive means violated).
    pub fn j_lower_bound_violation(&self) -> f64 {
        (self.t + 1.0) * (self.t + 1.0) * self.e_i - self.j - 1e-12 * self.j.abs()
    }
}

/// The dissipation functional
/// `int 2 mu(rho) T:T + lambda(rho) |div u|^2 dx + int rho^m |u-xi|^2 f`.
///
/// The drag part expands through the velocity moments:
/// `|u|^2 m0 - 2 u.m1 + m2` pointwise.
pub fn dissipation(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
    floor: f64,
) -> Result<f64> {
    let moments = velocity_moments(grid, kinetic);
    dissipation_with_moments(params, grid, fluid, &moments, floor)
}

pub fn dissipation_with_moments(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    moments: &crate::grid::MomentFields,
    floor: f64,
) -> Result<f64> {
    let dim = grid.dim();
    let u = fluid.velocity(floor);
    let (mu, lambda) = params.viscosities(&fluid.rho)?;
    let t = strain_tensor(grid, &u);
    let vol = grid.x_vol();
    let viscous = vol
        * pairwise_map_sum(grid.x_cells(), |c| {
            let tt: f64 = (0..dim * dim).map(|k| t[k][c] * t[k][c]).sum();
            let div: f64 = (0..dim).map(|i| t[i * dim + i][c]).sum();
            2.0 * mu[c] * tt + lambda[c] * div * div
        });
    let drag = params.drag_coefficient(&fluid.rho)?;
    let kinetic_part = vol
        * pairwise_map_sum(grid.x_cells(), |c| {
            let usq: f64 = (0..dim).map(|a| u[a][c] * u[a][c]).sum();
            let udotm1: f64 = (0..dim).map(|a| u[a][c] * moments.m1[a][c]).sum();
            drag[c] * (usq * moments.m0[c] - 2.0 * udotm1 + moments.m2[c])
        });
    Ok(viscous + kinetic_part)
}

/// Evaluate every functional by compensated quadrature on a centered domain.
pub fn functionals(
    params: &ModelParams,
    grid: &PhaseGrid,
    fluid: &FluidState,
    kinetic: &KineticState,
    floor: f64,
    t: f64,
) -> Result<FunctionalRecord> {
    let dim = grid.dim();
    let vol = grid.x_vol();
    let u = fluid.velocity(floor);
    let rho = &fluid.rho;
    let n = grid.x_cells();

    let xc_buf = |c: usize| {
        let mut x = [0.0f64; MAX_DIM];
        grid.x_center(c, &mut x);
        x
    };

    let mass_rho = vol * pairwise_map_sum(n, |c| rho[c]);
    let mut mom_rho = Vec::with_capacity(dim);
    for a in 0..dim {
        mom_rho.push(vol * pairwise_map_sum(n, |c| rho[c] * u[a][c]));
    }
    let w_rho = vol
        * pairwise_map_sum(n, |c| {
            let x = xc_buf(c);
            let ux: f64 = (0..dim).map(|a| u[a][c] * x[a]).sum();
            rho[c] * ux
        });
    let i_rho = 0.5
        * vol
        * pairwise_map_sum(n, |c| {
            let x = xc_buf(c);
            let x2: f64 = x[..dim].iter().map(|v| v * v).sum();
            rho[c] * x2
        });
    let e_k = 0.5
        * vol
        * pairwise_map_sum(n, |c| {
            let u2: f64 = (0..dim).map(|a| u[a][c] * u[a][c]).sum();
            rho[c] * u2
        });
    let pressure = params.pressure(rho)?;
    let e_i = vol * pairwise_map_sum(n, |c| pressure[c]) / (params.gamma - 1.0);

    let moments = velocity_moments(grid, kinetic);
    let mass_f = vol * pairwise_map_sum(n, |c| moments.m0[c]);
    let mut mom_f = Vec::with_capacity(dim);
    for a in 0..dim {
        mom_f.push(vol * pairwise_map_sum(n, |c| moments.m1[a][c]));
    }
    let w_f = vol
        * pairwise_map_sum(n, |c| {
            let x = xc_buf(c);
            (0..dim).map(|a| x[a] * moments.m1[a][c]).sum::<f64>()
        });
    let i_f = 0.5
        * vol
        * pairwise_map_sum(n, |c| {
            let x = xc_buf(c);
            let x2: f64 = x[..dim].iter().map(|v| v * v).sum();
            moments.m0[c] * x2
        });
    let e_f = 0.5 * vol * pairwise_map_sum(n, |c| moments.m2[c]);

    let dissipation = dissipation_with_moments(params, grid, fluid, &moments, floor)?;

    let w = w_rho + w_f;
    let i = i_rho + i_f;
    let e = e_k + e_i + e_f;
    let tp = t + 1.0;
    let j = i - tp * w + tp * tp * e;

    Ok(FunctionalRecord {
        t,
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
        j,
    })
}

/// Result of one identity/inequality check over a series.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub id: &'static str,
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub applicable: bool,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.applicable).all(|c| c.passed)
    }
    /// Machine-readable summary, `PASS k/N` over the applicable checks.
    pub fn summary_line(&self) -> String {
        let applicable: Vec<_> = self.checks.iter().filter(|c| c.applicable).collect();
        let passed = applicable.iter().filter(|c| c.passed).count();
        format!(
            "{} {}/{}",
            if passed == applicable.len() { "PASS" } else { "FAIL" },
            passed,
            applicable.len()
        )
    }
    pub fn table(&self) -> String {
        let mut out = String::from(
            "id       residual      tolerance     status  check\n\
             ----------------------------------------------------------------\n",
        );
        for c in &self.checks {
            let status = if !c.applicable {
                "n/a"
            } else if c.passed {
                "pass"
            } else {
                "FAIL"
            };
            out.push_str(&format!(
                "{:<8} {:<13.4e} {:<13.4e} {:<7} {}\n",
                c.id, c.max_residual, c.tolerance, status, c.name
            ));
        }
        out
    }
}

/// Metadata needed by the constant-bearing checks (e)-(g).
#[derive(Debug, Clone)]
pub struct CheckContext {
    pub dim: usize,
    pub params: ModelParams,
}

fn centered_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = if j == 0 {
            (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
        } else if j == n - 1 {
            (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt)
        } else {
            (values[j + 1] - values[j - 1]) / (2.0 * dt)
        };
    }
    out
}

fn rate_check(
    id: &'static str,
    name: &'static str,
    derivative_of: &[f64],
    matches: &[f64],
    dt: f64,
    tol: f64,
) -> IdentityCheck {
    let d = centered_derivative(derivative_of, dt);
    // The scale floor absorbs the round-off of the difference stencils on a
    // constant series (the one-sided endpoint stencil does not cancel
    // bit-exactly), which would otherwise read as an O(1) residual on
    // equilibria where both sides vanish.
    let value_scale = derivative_of.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-12 * value_scale / dt).max(f64::MIN_POSITIVE);
    let scale = d.iter().chain(matches.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(floor);
    let max_residual =
        d.iter().zip(matches).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max) / scale;
    IdentityCheck { id, name, max_residual, tolerance: tol, applicable: true, passed: max_residual <= tol }
}

/// Machine-check the conservation identities, rate identities, and
/// functional inequalities along a uniformly spaced series.
///
/// Checks (a) mass/momentum conservation, (b) dE/dt = -dissipation,
/// (c) dI/dt = W, (d) the momentum bound, (e) the internal-energy lower
/// bound (3-D only), (f) the quadratic inertia bound, and (g) the J decay
/// bound (inside the hypothesis window).
pub fn check_identities(
    ctx: &CheckContext,
    records: &[FunctionalRecord],
    tol_conservation: f64,
    tol_rate: f64,
) -> Result<IdentityReport> {
    if records.len() < 3 {
        return Err(Error::Domain(format!(
            "identity checks need at least 3 records, got {}",
            records.len()
        )));
    }
    let dt = records[1].t - records[0].t;
    if !(dt > 0.0) {
        return Err(Error::Domain("series times must be strictly increasing".into()));
    }
    for w in records.windows(2) {
        let step = w[1].t - w[0].t;
        if (step - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Domain("identity checks need uniform record spacing".into()));
        }
    }
    let mut checks = Vec::new();
    let tiny = f64::MIN_POSITIVE;

    // (a) conservation of m_rho, m_f, and the total momentum vector
    let drift = |get: &dyn Fn(&FunctionalRecord) -> f64, scale: f64| -> f64 {
        let v0 = get(&records[0]);
        records.iter().map(|r| (get(r) - v0).abs()).fold(0.0f64, f64::max) / scale.max(tiny)
    };
    let m_rho_res = drift(&|r| r.mass_rho, records[0].mass_rho.abs());
    checks.push(IdentityCheck {
        id: "a.m_rho",
        name: "fluid mass conserved",
        max_residual: m_rho_res,
        tolerance: tol_conservation,
        applicable: true,
        passed: m_rho_res <= tol_conservation,
    });
    let mf_scale = records[0].mass_f.abs().max(1e-12 * records[0].mass_rho.abs());
    let m_f_res = drift(&|r| r.mass_f, mf_scale);
    checks.push(IdentityCheck {
        id: "a.m_f",
        name: "kinetic mass conserved",
        max_residual: m_f_res,
        tolerance: tol_conservation,
        applicable: true,
        passed: m_f_res <= tol_conservation,
    });
    let m0_vec = records[0].mom_total();
    let m0_norm = m0_vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mom_scale =
        m0_norm.max(1e-12 * (records[0].mass_rho.abs() + records[0].mass_f.abs())).max(tiny);
    let mom_res = records
        .iter()
        .map(|r| {
            let m = r.mom_total();
            m.iter().zip(&m0_vec).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
        .fold(0.0f64, f64::max)
        / mom_scale;
    checks.push(IdentityCheck {
        id: "a.M",
        name: "total momentum conserved",
        max_residual: mom_res,
        tolerance: tol_conservation,
        applicable: true,
        passed: mom_res <= tol_conservation,
    });

    // (b) dE/dt = -dissipation
    let e: Vec<f64> = records.iter().map(|r| r.e_total()).collect();
    let neg_diss: Vec<f64> = records.iter().map(|r| -r.dissipation).collect();
    checks.push(rate_check("b", "dE/dt matches -dissipation", &e, &neg_diss, dt, tol_rate));

    // (c) dI/dt = W
    let i: Vec<f64> = records.iter().map(|r| r.i_total()).collect();
    let w: Vec<f64> = records.iter().map(|r| r.w_total()).collect();
    checks.push(rate_check("c", "dI/dt matches W", &i, &w, dt, tol_rate));

    // (d) M^2 <= 4 max(m_rho, m_f) (E_k + E_f) + 1e-12
    let d_res = records
        .iter()
        .map(|r| {
            let m2 = r.mom_total_norm().powi(2);
            m2 - 4.0 * r.mass_rho.max(r.mass_f) * (r.e_k + r.e_f)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(IdentityCheck {
        id: "d",
        name: "momentum bounded by mass and kinetic energies",
        max_residual: d_res,
        tolerance: 1e-12,
        applicable: true,
        passed: d_res <= 1e-12,
    });

    // The constant-bearing inequalities (e)-(g) are statements about
    // finite-mass three-dimensional data: the constants embed the 3-D
    // integration identities (the factor 3(gamma-1), the coefficients
    // 2a+3b and 2a+9b) and every functional in them presumes an integrable
    // density. A periodic background (rho_inf > 0) or a 1-D run reports
    // them as not applicable.
    let finite_mass_3d = ctx.dim == 3 && ctx.params.rho_inf == 0.0;

    // (e) E_i >= C0 / I_rho^{3(gamma-1)/2}
    let gamma = ctx.params.gamma;
    let e_applicable = finite_mass_3d && records[0].mass_rho > 0.0 && records[0].i_rho > 0.0;
    let e_res = if e_applicable {
        let c0 = blowup::constant_c0(records[0].mass_rho, gamma)?;
        records
            .iter()
            .map(|r| {
                let lower = c0 / r.i_rho.powf(1.5 * (gamma - 1.0));
                (lower - r.e_i) / lower.abs().max(tiny)
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    } else {
        0.0
    };
    checks.push(IdentityCheck {
        id: "e",
        name: "internal energy above the mass-concentration bound",
        max_residual: e_res,
        tolerance: tol_rate,
        applicable: e_applicable,
        passed: !e_applicable || e_res <= tol_rate,
    });

    // (f) I(t) <= I(0) + C1 t + C2 t^2
    let f_applicable = finite_mass_3d
        && ctx.params.delta > 1.0
        && ctx.params.delta < gamma
        && records[0].mass_rho > 0.0
        && records[0].e_total() >= 0.0;
    let f_res = if f_applicable {
        let (c1, c2) = blowup::constants_c1_c2(
            records[0].w_total(),
            records[0].e_total(),
            records[0].mass_rho,
            &ctx.params,
        )?;
        let i0 = records[0].i_total();
        let t0 = records[0].t;
        records
            .iter()
            .map(|r| {
                let tau = r.t - t0;
                let bound = i0 + c1 * tau + c2 * tau * tau;
                (r.i_total() - bound) / bound.abs().max(tiny)
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    } else {
        0.0
    };
    checks.push(IdentityCheck {
        id: "f",
        name: "inertia below its quadratic bound",
        max_residual: f_res,
        tolerance: tol_rate,
        applicable: f_applicable,
        passed: !f_applicable || f_res <= tol_rate,
    });

    // (g) J(t) <= C3 (t+1)^{2-3(gamma-1)} inside the hypothesis window
    let j0 = records[0].j;
    let g_applicable = finite_mass_3d
        && blowup::window_ok(gamma, ctx.params.delta)
        && j0 >= 0.0
        && records[0].mass_rho > 0.0
        && blowup::constant_c3(j0, records[0].mass_rho, &ctx.params).is_ok();
    let g_res = if g_applicable {
        let c3 = blowup::constant_c3(j0, records[0].mass_rho, &ctx.params)?;
        records
            .iter()
            .map(|r| {
                let bound = c3 * (r.t + 1.0).powf(2.0 - 3.0 * (gamma - 1.0));
                (r.j - bound) / bound.abs().max(tiny)
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    } else {
        0.0
    };
    checks.push(IdentityCheck {
        id: "g",
        name: "J below its decay bound",
        max_residual: g_res,
        tolerance: tol_rate,
        applicable: g_applicable,
        passed: !g_applicable || g_res <= tol_rate,
    });

    Ok(IdentityReport { checks })
}
