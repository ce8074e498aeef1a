//! Explicit blow-up constants, the Gronwall trichotomy, and the finite-time
//! blow-up certifier for initial data.
//!
//! The certifier evaluates, from the initial functionals alone, the constants
//! C0, c_mu, C1, C2, C3, checks the hypothesis window `1 < gamma < 5/3`,
//! `gamma - 1/3 < delta < gamma`, reports both sufficient conditions
//! (`C0 > C2*C3` as stated, and the asymptotic comparison
//! `C0 > C3*C2^{3(gamma-1)/2}` implied by the bounding curves), and estimates
//! the earliest time at which the internal-energy lower bound exceeds the
//! upper bound.

use crate::diagnostics::FunctionalRecord;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Largest admissible time for the horizon search.
const HORIZON_T_MAX: f64 = 1e8;
/// Absolute bisection tolerance in t.
const HORIZON_TOL: f64 = 1e-10;
const HORIZON_MAX_ITER: usize = 200;

/// `C0 = (4 pi / 3)^(1-gamma) (m_rho0 / 2)^((5 gamma - 3)/2) / (gamma - 1)`.
///
/// The ratio `pi^{3/2} / Gamma(5/2)` is evaluated analytically:
/// `Gamma(5/2) = 3 sqrt(pi) / 4`, so the base is `4 pi / 3`.
pub fn constant_c0(m_rho0: f64, gamma: f64) -> Result<f64> {
    if gamma < 1.0 + 1e-9 {
        return Err(Error::Domain(format!("C0 requires gamma > 1 (got {gamma})")));
    }
    if !(m_rho0 > 0.0) || !m_rho0.is_finite() {
        return Err(Error::Domain(format!("C0 requires m_rho(0) > 0 (got {m_rho0})")));
    }
    let base = 4.0 * std::f64::consts::PI / 3.0;
    let expo = 0.5 * (5.0 * gamma - 3.0);
    Ok(base.powf(1.0 - gamma) * (0.5 * m_rho0).powf(expo) / (gamma - 1.0))
}

/// `c_mu = m_rho0^((gamma-delta)/(gamma-1)) (gamma-1)^((delta-1)/(gamma-1))
/// E0^((delta-1)/(gamma-1))`, requiring `1 < delta < gamma`.
pub fn constant_c_mu(m_rho0: f64, e0: f64, gamma: f64, delta: f64) -> Result<f64> {
    if !(delta > 1.0 && delta < gamma) {
        return Err(Error::Domain(format!(
            "c_mu requires 1 < delta < gamma (got delta={delta}, gamma={gamma})"
        )));
    }
    if !(m_rho0 > 0.0) || e0 < 0.0 {
        return Err(Error::Domain(format!(
            "c_mu requires m_rho(0) > 0 and E(0) >= 0 (got {m_rho0}, {e0})"
        )));
    }
    let q1 = (gamma - delta) / (gamma - 1.0);
    let q2 = (delta - 1.0) / (gamma - 1.0);
    let e_pow = if e0 == 0.0 { 0.0 } else { e0.powf(q2) };
    Ok(m_rho0.powf(q1) * (gamma - 1.0).powf(q2) * e_pow)
}

/// `C1 = W0 + (2 alpha + 3 beta)/(delta - 1) * c_mu` and
/// `C2 = max{2, 3(gamma-1)} E0 / 2`.
pub fn constants_c1_c2(w0: f64, e0: f64, m_rho0: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let c_mu = constant_c_mu(m_rho0, e0, params.gamma, params.delta)?;
    let c1 = w0 + (2.0 * params.alpha + 3.0 * params.beta) / (params.delta - 1.0) * c_mu;
    let c2 = 0.5 * 2.0f64.max(3.0 * (params.gamma - 1.0)) * e0;
    Ok((c1, c2))
}

/// `C3 = (J0^q + (2 alpha + 9 beta) m_rho0^q (gamma-1)^((delta-gamma)/(gamma-1))
/// (gamma-delta) / (4 (1 - 3(gamma-delta))))^(1/q)` with
/// `q = (gamma-delta)/(gamma-1)`. When `2 alpha + 9 beta = 0` this reduces to
/// `C3 = J0` exactly.
pub fn constant_c3(j0: f64, m_rho0: f64, params: &ModelParams) -> Result<f64> {
    let (gamma, delta) = (params.gamma, params.delta);
    if !(delta > 1.0 && delta < gamma) {
        return Err(Error::Domain(format!(
            "C3 requires 1 < delta < gamma (got delta={delta}, gamma={gamma})"
        )));
    }
    if 1.0 - 3.0 * (gamma - delta) <= 0.0 {
        return Err(Error::Domain(format!(
            "C3 requires delta > gamma - 1/3 (got delta={delta}, gamma={gamma})"
        )));
    }
    if j0 < 0.0 {
        return Err(Error::Domain(format!("C3 requires J(0) >= 0 (got {j0})")));
    }
    let s = 2.0 * params.alpha + 9.0 * params.beta;
    if s == 0.0 {
        return Ok(j0);
    }
    let q = (gamma - delta) / (gamma - 1.0);
    let j_pow = if j0 == 0.0 { 0.0 } else { j0.powf(q) };
    let inner = j_pow
        + s * m_rho0.powf(q) * (gamma - 1.0).powf((delta - gamma) / (gamma - 1.0))
            * (gamma - delta)
            / (4.0 * (1.0 - 3.0 * (gamma - delta)));
    if inner < 0.0 {
        return Err(Error::Domain(format!(
            "C3 undefined for these coefficients (inner expression {inner} < 0)"
        )));
    }
    Ok(inner.powf(1.0 / q))
}

/// Inputs of the Gronwall differential inequality
/// `f' <= a f/(t+1) + b f^c/(t+1)^(2c)` with `f >= 0`, `c <= 1`.
#[derive(Debug, Clone, Copy)]
pub struct GronwallInput {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub f0: f64,
}

impl GronwallInput {
    pub fn new(a: f64, b: f64, c: f64, f0: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(Error::Domain(format!("a, b, c must be positive (got {a}, {b}, {c})")));
        }
        if c > 1.0 {
            return Err(Error::Domain(format!("Gronwall bound requires c <= 1 (got {c})")));
        }
        if f0 < 0.0 {
            return Err(Error::Domain(format!("f0 must be >= 0 (got {f0})")));
        }
        Ok(Self { a, b, c, f0 })
    }
}

/// Equality tolerance for the degenerate case `2c + a(1-c) = 1`.
const GRONWALL_CASE_TOL: f64 = 1e-12;

/// Upper bound on f(t) by the Gronwall trichotomy.
///
/// - `c = 1`:                     `f0 e^b (t+1)^a`
/// - `c < 1`, `2c + a(1-c) = 1`:  `(f0^(1-c)(t+1)^(1-2c)
///   + b(1-c)(t+1)^(1-2c) ln(t+1))^(1/(1-c))`
/// - `c < 1`, `2c + a(1-c) != 1`: `(f0^(1-c)(t+1)^(a(1-c))
///   + b(1-c)/(1-(2c+a(1-c))) ((t+1)^(1-2c) - (t+1)^(a(1-c))))^(1/(1-c))`
///
/// The two `c < 1` cases integrate the saturated inequality exactly.
pub fn gronwall_bound(input: &GronwallInput, t: f64) -> Result<f64> {
    let GronwallInput { a, b, c, f0 } = *input;
    if c > 1.0 {
        return Err(Error::Domain(format!("c must be <= 1, got {c}")));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    let tp = t + 1.0;
    if c == 1.0 {
        return Ok(f0 * b.exp() * tp.powf(a));
    }
    let omc = 1.0 - c;
    let g0 = if f0 == 0.0 { 0.0 } else { f0.powf(omc) };
    let degenerate = (2.0 * c + a * omc - 1.0).abs() <= GRONWALL_CASE_TOL;
    let g = if degenerate {
        g0 * tp.powf(1.0 - 2.0 * c) + b * omc * tp.powf(1.0 - 2.0 * c) * tp.ln()
    } else {
        let a1c = a * omc;
        g0 * tp.powf(a1c)
            + b * omc / (1.0 - (2.0 * c + a1c)) * (tp.powf(1.0 - 2.0 * c) - tp.powf(a1c))
    };
    Ok(g.max(0.0).powf(1.0 / omc))
}

/// Everything the certifier derives from the initial data.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub window_ok: bool,
    pub m_rho0: f64,
    pub i0: f64,
    pub w0: f64,
    pub e0: f64,
    pub j0: f64,
    pub c0: f64,
    pub c2: f64,
    pub c_mu: Option<f64>,
    pub c1: Option<f64>,
    pub c3: Option<f64>,
    /// The stated sufficient condition `C0 > C2 * C3`.
    pub predicate_paper: Option<bool>,
    /// The asymptotic comparison `C0 > C3 * C2^(3(gamma-1)/2)`.
    pub predicate_asymptotic: Option<bool>,
    /// Earliest `t >= 0` where the lower bounding curve exceeds the upper.
    pub horizon: Option<f64>,
}

/// Hypothesis window of the blow-up statement.
pub fn window_ok(gamma: f64, delta: f64) -> bool {
    gamma > 1.0 && gamma < 5.0 / 3.0 && delta > gamma - 1.0 / 3.0 && delta < gamma && delta > 1.0
}

/// The incompatible bounding curves on the internal energy:
/// lower `C0 / (I0 + C1 t + C2 t^2)^(3(gamma-1)/2)`,
/// upper `C3 / (t+1)^(3(gamma-1))`.
pub fn bounding_curves(report: &BlowupReport, gamma: f64, t: f64) -> Result<(f64, f64)> {
    let (c1, c3) = match (report.c1, report.c3) {
        (Some(c1), Some(c3)) => (c1, c3),
        _ => {
            return Err(Error::Domain(
                "bounding curves require a report with C1 and C3 defined".into(),
            ))
        }
    };
    let e2 = 1.5 * (gamma - 1.0);
    let q = report.i0 + c1 * t + report.c2 * t * t;
    let lower = if q > 0.0 { report.c0 / q.powf(e2) } else { f64::INFINITY };
    let upper = c3 / (t + 1.0).powf(2.0 * e2);
    Ok((lower, upper))
}

fn horizon_gap(c0: f64, c1: f64, c2: f64, c3: f64, i0: f64, e2: f64, t: f64) -> f64 {
    let q = i0 + c1 * t + c2 * t * t;
    if q <= 0.0 {
        return f64::INFINITY;
    }
    c0 * (t + 1.0).powf(2.0 * e2) - c3 * q.powf(e2)
}

fn find_horizon(c0: f64, c1: f64, c2: f64, c3: f64, i0: f64, gamma: f64) -> Option<f64> {
    let e2 = 1.5 * (gamma - 1.0);
    let g = |t: f64| horizon_gap(c0, c1, c2, c3, i0, e2, t);
    if g(0.0) > 0.0 {
        return Some(0.0);
    }
    // geometric pre-bracketing
    let mut lo = 0.0f64;
    let mut hi = None;
    let mut t = 1e-6;
    while t <= HORIZON_T_MAX {
        if g(t) > 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
        t *= 2.0;
    }
    let mut hi = hi?;
    for _ in 0..HORIZON_MAX_ITER {
        if hi - lo <= HORIZON_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Certify finite-time blow-up from the initial functionals.
///
/// Requires the 3-D functionals (the constant C0 embeds three-dimensional
/// geometry) and positive finite initial mass. A negative J(0) signals an
/// inconsistency between the data and the quadrature and is rejected.
pub fn blowup_certify(initial: &FunctionalRecord, params: &ModelParams) -> Result<BlowupReport> {
    if params.dim != 3 {
        return Err(Error::Domain(format!(
            "blow-up certification requires dim = 3 functionals (got dim = {})",
            params.dim
        )));
    }
    let m_rho0 = initial.mass_rho;
    if !(m_rho0 > 0.0) || !m_rho0.is_finite() {
        return Err(Error::Domain(format!("m_rho(0) must be finite and > 0 (got {m_rho0})")));
    }
    let i0 = initial.i_total();
    let w0 = initial.w_total();
    let e0 = initial.e_total();
    let j0 = i0 - w0 + e0;
    if j0 < 0.0 {
        return Err(Error::Domain(format!(
            "J(0) = I(0) - W(0) + E(0) = {j0} < 0: initial data/quadrature inconsistency"
        )));
    }
    let gamma = params.gamma;
    let c0 = constant_c0(m_rho0, gamma)?;
    let c2 = 0.5 * 2.0f64.max(3.0 * (gamma - 1.0)) * e0;
    if !window_ok(gamma, params.delta) {
        return Ok(BlowupReport {
            window_ok: false,
            m_rho0,
            i0,
            w0,
            e0,
            j0,
            c0,
            c2,
            c_mu: None,
            c1: None,
            c3: None,
            predicate_paper: None,
            predicate_asymptotic: None,
            horizon: None,
        });
    }
    let c_mu = constant_c_mu(m_rho0, e0, gamma, params.delta)?;
    let (c1, _) = constants_c1_c2(w0, e0, m_rho0, params)?;
    let c3 = constant_c3(j0, m_rho0, params)?;
    let predicate_paper = c0 > c2 * c3;
    let e2 = 1.5 * (gamma - 1.0);
    let predicate_asymptotic = c0 > c3 * c2.powf(e2);
    let horizon = find_horizon(c0, c1, c2, c3, i0, gamma);
    Ok(BlowupReport {
        window_ok: true,
        m_rho0,
        i0,
        w0,
        e0,
        j0,
        c0,
        c2,
        c_mu: Some(c_mu),
        c1: Some(c1),
        c3: Some(c3),
        predicate_paper: Some(predicate_paper),
        predicate_asymptotic: Some(predicate_asymptotic),
        horizon,
    })
}

impl BlowupReport {
    /// Text form, one `key=value` per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("window_ok", self.window_ok.to_string());
        push("m_rho0", format!("{:.17e}", self.m_rho0));
        push("I0", format!("{:.17e}", self.i0));
        push("W0", format!("{:.17e}", self.w0));
        push("E0", format!("{:.17e}", self.e0));
        push("J0", format!("{:.17e}", self.j0));
        push("C0", format!("{:.17e}", self.c0));
        push("C2", format!("{:.17e}", self.c2));
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.17e}"));
        push("c_mu", opt(self.c_mu));
        push("C1", opt(self.c1));
        push("C3", opt(self.c3));
        let optb = |v: Option<bool>| v.map_or("undefined".to_string(), |x| x.to_string());
        push("predicate_paper", optb(self.predicate_paper));
        push("predicate_asymptotic", optb(self.predicate_asymptotic));
        push("horizon", self.horizon.map_or("none".to_string(), |x| format!("{x:.12e}")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, delta: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(gamma, delta, 2.0, alpha, beta, 0.0, 3, false).unwrap()
    }

    fn record(m_rho: f64, i: f64, w: f64, e_k: f64, e_i: f64) -> FunctionalRecord {
        FunctionalRecord {
            t: 0.0,
            mass_rho: m_rho,
            mass_f: 0.0,
            mom_rho: vec![0.0; 3],
            mom_f: vec![0.0; 3],
            w_rho: w,
            w_f: 0.0,
            i_rho: i,
            i_f: 0.0,
            e_k,
            e_i,
            e_f: 0.0,
            dissipation: 0.0,
            j: i - w + (e_k + e_i),
        }
    }

    #[test]
    fn c0_examples() {
        // gamma guard just above 1
        assert!(constant_c0(1.0, 1.0 + 1e-10).is_err());
        // oracle value for m_rho0=2, gamma=1.4 (50-digit arithmetic):
        // (4 pi/3)^(-0.4) / 0.4
        let c0 = constant_c0(2.0, 1.4).unwrap();
        assert!((c0 - 1.4096281533112070).abs() < 1e-14 * c0);
        // power law: (5 gamma - 3)/2 = 2 at gamma = 1.4
        let c0_doubled = constant_c0(4.0, 1.4).unwrap();
        assert!((c0_doubled / c0 - 4.0).abs() < 1e-13);
    }

    #[test]
    fn c_mu_examples() {
        assert_eq!(constant_c_mu(1.0, 0.0, 1.4, 1.2).unwrap(), 0.0);
        let v = constant_c_mu(1.0, 1.0, 1.4, 1.2).unwrap();
        assert!((v - 0.4f64.sqrt()).abs() < 1e-15);
        // delta -> gamma^-: exponents tend to (0, 1), c_mu -> (gamma-1) E0
        let near = constant_c_mu(1.0, 2.0, 1.4, 1.4 - 1e-9).unwrap();
        assert!((near - 0.4 * 2.0).abs() < 1e-6);
        assert!(constant_c_mu(1.0, 1.0, 1.4, 1.5).is_err());
    }

    #[test]
    fn c1_c2_examples() {
        let p = params(1.4, 1.2, 1.0, 0.0);
        let (_, c2) = constants_c1_c2(0.0, 1.0, 1.0, &p).unwrap();
        assert_eq!(c2, 1.0); // max{2, 1.2}/2 * 1
        let p16 = params(1.6, 1.35, 1.0, 0.0);
        let (_, c2) = constants_c1_c2(0.0, 1.0, 1.0, &p16).unwrap();
        assert_eq!(c2, 1.0); // max{2, 1.8} = 2 throughout gamma < 5/3
        // 2 alpha + 3 beta = 0 annihilates the c_mu term
        let p0 = params(1.4, 1.2, 1.5, -1.0);
        let (c1, _) = constants_c1_c2(0.75, 1.0, 1.0, &p0).unwrap();
        assert_eq!(c1, 0.75);
    }

    #[test]
    fn c3_examples() {
        // 2 alpha + 9 beta = 0 reduces exactly to J0 (alpha=4.5, beta=-1)
        let p = params(1.4, 1.2, 4.5, -1.0);
        assert_eq!(2.0 * p.alpha + 9.0 * p.beta, 0.0);
        let j0 = 0.7312345678901234;
        assert_eq!(constant_c3(j0, 2.3, &p).unwrap(), j0);
        assert_eq!(constant_c3(0.0, 1.0, &p).unwrap(), 0.0);

        // frozen oracle: gamma=1.4, delta=1.2, m0=1, J0=1, alpha=1, beta=0
        // inner = 1 + 2 * 0.4^{-1/2} * 0.2/1.6, C3 = inner^2
        let p = params(1.4, 1.2, 1.0, 0.0);
        let inner = 1.0 + 2.0 * 0.4f64.powf(-0.5) * 0.2 / 1.6;
        let c3 = constant_c3(1.0, 1.0, &p).unwrap();
        assert!((c3 - inner * inner).abs() < 1e-14 * c3);

        // negative inner expression is a domain error
        let pneg = params(1.4, 1.2, 3.0, -0.65); // 2a+9b = 0.15 > 0 fine
        assert!(constant_c3(1.0, 1.0, &pneg).is_ok());
        let pneg = params(1.4, 1.2, 3.0, -1.9); // 2a+9b = -11.1, 2a+3b = 0.3
        assert!(constant_c3(1e-6, 1.0, &pneg).is_err());
    }

    #[test]
    fn gronwall_examples() {
        // c = 1: f0 e^b (t+1)^a
        let g = GronwallInput::new(1.0, 0.5, 1.0, 1.0).unwrap();
        let v = gronwall_bound(&g, 1.0).unwrap();
        assert!((v - 2.0 * 0.5f64.exp()).abs() < 1e-14);
        // t = 0 collapses to f0 in both c < 1 cases (the c = 1 bound keeps
        // its e^b headroom at t = 0 by construction)
        for (a, c) in [(0.25, 0.4), ((1.0 - 0.6) / 0.7, 0.3)] {
            let g = GronwallInput::new(a, 0.9, c, 2.5).unwrap();
            let v = gronwall_bound(&g, 0.0).unwrap();
            assert!((v - 2.5).abs() < 1e-12, "c={c}: {v}");
        }
        let g1 = GronwallInput::new(0.7, 0.9, 1.0, 2.5).unwrap();
        assert!((gronwall_bound(&g1, 0.0).unwrap() - 2.5 * 0.9f64.exp()).abs() < 1e-12);
        // c > 1 rejected
        assert!(GronwallInput::new(1.0, 1.0, 1.1, 1.0).is_err());
    }

    #[test]
    fn gronwall_case_boundary_consistency() {
        // As c -> 1^- the non-degenerate bound tends to the sharp limit
        // f0 (t+1)^a e^{b(1 - 1/(t+1))}; the c = 1 branch keeps the stated
        // (relaxed) bound f0 e^b (t+1)^a, which must dominate the limit.
        let (a, b, f0, t) = (0.8, 0.6, 1.7, 3.0f64);
        let c = 1.0 - 1e-8;
        let near = gronwall_bound(&GronwallInput::new(a, b, c, f0).unwrap(), t).unwrap();
        let tp = t + 1.0;
        let sharp = f0 * tp.powf(a) * (b * (1.0 - 1.0 / tp)).exp();
        assert!((near - sharp).abs() / sharp < 1e-6, "near={near}, sharp={sharp}");
        let at_one = gronwall_bound(&GronwallInput::new(a, b, 1.0, f0).unwrap(), t).unwrap();
        assert!(at_one >= sharp);
    }

    #[test]
    fn certify_window_gate() {
        let p = ModelParams::new(1.8, 1.6, 2.0, 1.0, 0.0, 0.0, 3, false).unwrap();
        let r = record(1.0, 1.0, 0.0, 0.0, 0.5);
        let rep = blowup_certify(&r, &p).unwrap();
        assert!(!rep.window_ok);
        assert!(rep.predicate_paper.is_none());
        assert!(rep.predicate_asymptotic.is_none());
        assert!(rep.horizon.is_none());
    }

    #[test]
    fn certify_reduced_condition() {
        // 2 alpha + 9 beta = 0: C3 = J0; data with C2*J0 < C0 certifies.
        let p = ModelParams::new(1.4, 1.2, 2.0, 4.5, -1.0, 0.0, 3, false).unwrap();
        let r = record(0.01, 7.3143e-3, 0.0, 0.0, 1.2195e-3);
        let rep = blowup_certify(&r, &p).unwrap();
        assert!(rep.window_ok);
        assert_eq!(rep.c3.unwrap(), rep.j0);
        assert!(rep.c0 > rep.c2 * rep.c3.unwrap());
        assert_eq!(rep.predicate_paper, Some(true));
    }

    #[test]
    fn certify_rejects_wrong_dim_and_bad_j0() {
        let p1 = ModelParams::new(1.4, 1.2, 2.0, 1.0, 0.0, 0.0, 1, false).unwrap();
        let r = record(1.0, 1.0, 0.0, 0.0, 0.5);
        assert!(blowup_certify(&r, &p1).is_err());
        let p3 = ModelParams::new(1.4, 1.2, 2.0, 1.0, 0.0, 0.0, 3, false).unwrap();
        let bad = record(1.0, 0.1, 5.0, 0.0, 0.5); // J0 < 0
        assert!(blowup_certify(&bad, &p3).is_err());
    }

    #[test]
    fn horizon_crossing_is_a_sign_change() {
        // Gaussian-density data (mass 1, sigma 2) with beta tuned so C3
        // falls strictly between C0/I0^0.6 and C0/C2^0.6: the curves then
        // cross at an interior time.
        let gamma = 1.4;
        let p = ModelParams::new(gamma, 1.2, 2.0, 3.0, -1.7129736126206454, 0.0, 3, false).unwrap();
        let e0 = 0.21807407516500024; // internal energy of the profile
        let r = record(1.0, 6.0, 0.0, 0.0, e0);
        let rep = blowup_certify(&r, &p).unwrap();
        assert!(rep.window_ok);
        assert_eq!(rep.predicate_paper, Some(true));
        let t_star = rep.horizon.expect("horizon should exist");
        assert!((t_star - 2.682635050884556).abs() < 1e-6, "horizon {t_star}");
        let (lo, up) = bounding_curves(&rep, gamma, t_star).unwrap();
        assert!(
            (lo - up).abs() <= 1e-8 * up.abs().max(1.0),
            "curves should cross at the horizon: lower={lo}, upper={up}"
        );
        // sign change across the bisection tolerance
        let (lo_m, up_m) = bounding_curves(&rep, gamma, (t_star - 1e-9).max(0.0)).unwrap();
        let (lo_p, up_p) = bounding_curves(&rep, gamma, t_star + 1e-9).unwrap();
        assert!(lo_m <= up_m * (1.0 + 1e-12));
        assert!(lo_p >= up_p * (1.0 - 1e-12));
    }

    #[test]
    fn bounding_curves_endpoint_and_monotonicity() {
        let p = ModelParams::new(1.4, 1.2, 2.0, 4.5, -1.0, 0.0, 3, false).unwrap();
        let r = record(0.01, 7.3143e-3, 0.0, 0.0, 1.2195e-3);
        let rep = blowup_certify(&r, &p).unwrap();
        let (lo0, up0) = bounding_curves(&rep, 1.4, 0.0).unwrap();
        let expected_lo = rep.c0 / rep.i0.powf(0.6);
        assert!((lo0 - expected_lo).abs() < 1e-15 * expected_lo.abs());
        assert!((up0 - rep.c3.unwrap()).abs() < 1e-15 * up0.abs());
        let mut prev = lo0;
        for k in 1..50 {
            let (lo, _) = bounding_curves(&rep, 1.4, k as f64 * 0.3).unwrap();
            assert!(lo < prev);
            prev = lo;
        }
    }

    #[test]
    fn predicates_depend_only_on_functionals() {
        let p = ModelParams::new(1.4, 1.2, 2.0, 4.5, -1.0, 0.0, 3, false).unwrap();
        let r = record(0.01, 7.3143e-3, 0.0, 0.0, 1.2195e-3);
        let a = blowup_certify(&r, &p).unwrap();
        let b = blowup_certify(&r.clone(), &p).unwrap();
        assert_eq!(a.predicate_paper, b.predicate_paper);
        assert_eq!(a.c0.to_bits(), b.c0.to_bits());
    }
}
