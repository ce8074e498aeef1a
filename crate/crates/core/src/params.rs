//! Model coefficients and constitutive laws shared by every solver module.

use crate::error::{Error, Result};

/// Immutable model parameters. Safe to share across threads.
///
/// The constitutive laws are `p(rho) = rho^gamma`, `mu(rho) = alpha rho^delta`,
/// `lambda(rho) = beta rho^delta`, and the drag factor `rho^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub delta: f64,
    pub m_drag: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho_inf: f64,
    pub dim: usize,
}

/// Powers of a nonnegative density. `0^x = 0` for `x > 0` by explicit branch,
/// so vacuum never produces `0^0` or NaN.
#[inline]
pub fn vacuum_safe_pow(rho: f64, exponent: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else {
        rho.powf(exponent)
    }
}

/// The entropy-compatible second viscosity coefficient, `2*alpha*(delta - 1)`.
pub fn bd_beta(alpha: f64, delta: f64) -> f64 {
    2.0 * alpha * (delta - 1.0)
}

impl ModelParams {
    /// Validates the shared admissibility constraints:
    /// `gamma > 1`, `m > 1`, `alpha > 0`, `2*alpha + 3*beta >= 0`, `delta > 1`,
    /// `rho_inf >= 0`, `dim` in {1, 3}. With `strict_admissibility` the
    /// exponent window `1 < delta <= min((gamma+1)/2, 3, (2m+1)/3)` is
    /// enforced as well.
    pub fn new(
        gamma: f64,
        delta: f64,
        m_drag: f64,
        alpha: f64,
        beta: f64,
        rho_inf: f64,
        dim: usize,
        strict_admissibility: bool,
    ) -> Result<Self> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        for (name, v) in [
            ("gamma", gamma),
            ("delta", delta),
            ("m", m_drag),
            ("alpha", alpha),
            ("beta", beta),
            ("rho_inf", rho_inf),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite, got {v}"));
            }
        }
        if gamma <= 1.0 {
            return fail(format!("gamma must be > 1, got {gamma}"));
        }
        if m_drag <= 1.0 {
            return fail(format!("m must be > 1, got {m_drag}"));
        }
        if alpha <= 0.0 {
            return fail(format!("alpha must be > 0, got {alpha}"));
        }
        if 2.0 * alpha + 3.0 * beta < 0.0 {
            return fail(format!(
                "2*alpha + 3*beta >= 0 required, got {}",
                2.0 * alpha + 3.0 * beta
            ));
        }
        if delta <= 1.0 {
            return fail(format!("delta must be > 1, got {delta}"));
        }
        if rho_inf < 0.0 {
            return fail(format!("rho_inf must be >= 0, got {rho_inf}"));
        }
        if dim != 1 && dim != 3 {
            return fail(format!("dim must be 1 or 3, got {dim}"));
        }
        if strict_admissibility {
            let cap = ((gamma + 1.0) / 2.0).min(3.0).min((2.0 * m_drag + 1.0) / 3.0);
            if delta > cap {
                return fail(format!(
                    "strict admissibility requires 1 < delta <= min((gamma+1)/2, 3, (2m+1)/3) \
                     = {cap}; got delta = {delta}"
                ));
            }
        }
        Ok(Self { gamma, delta, m_drag, alpha, beta, rho_inf, dim })
    }

    /// The reformulation exponent `theta = 2/(delta - 1)`.
    pub fn theta(&self) -> f64 {
        2.0 / (self.delta - 1.0)
    }

    /// Far-field sound variable `n_inf = rho_inf^((delta-1)/2)`.
    pub fn n_inf(&self) -> f64 {
        vacuum_safe_pow(self.rho_inf, 0.5 * (self.delta - 1.0))
    }

    pub fn pressure_scalar(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 {
            return Err(Error::NegativeDensity { index: 0, value: rho });
        }
        Ok(vacuum_safe_pow(rho, self.gamma))
    }

    /// Pointwise pressure `rho^gamma`. Errors name the first negative cell.
    pub fn pressure(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.map_power(rho, self.gamma)
    }

    /// Pointwise viscosity pair `(alpha rho^delta, beta rho^delta)`.
    pub fn viscosities(&self, rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let base = self.map_power(rho, self.delta)?;
        let mu: Vec<f64> = base.iter().map(|&b| self.alpha * b).collect();
        let lambda: Vec<f64> = base.iter().map(|&b| self.beta * b).collect();
        Ok((mu, lambda))
    }

    /// Pointwise drag factor `rho^m`.
    pub fn drag_coefficient(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.map_power(rho, self.m_drag)
    }

    /// Sound variable `n = rho^((delta-1)/2)`.
    pub fn to_sound_variable(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 {
            return Err(Error::NegativeDensity { index: 0, value: rho });
        }
        Ok(vacuum_safe_pow(rho, 0.5 * (self.delta - 1.0)))
    }

    /// Inverse of [`Self::to_sound_variable`]: `rho = n^(2/(delta-1))`.
    pub fn from_sound_variable(&self, n: f64) -> Result<f64> {
        if n < 0.0 {
            return Err(Error::Domain(format!("sound variable must be >= 0, got {n}")));
        }
        Ok(vacuum_safe_pow(n, self.theta()))
    }

    pub fn to_sound_field(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.map_power(rho, 0.5 * (self.delta - 1.0))
    }

    fn map_power(&self, rho: &[f64], exponent: f64) -> Result<Vec<f64>> {
        rho.iter()
            .enumerate()
            .map(|(index, &r)| {
                if r < 0.0 {
                    Err(Error::NegativeDensity { index, value: r })
                } else {
                    Ok(vacuum_safe_pow(r, exponent))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(1.4, 1.2, 2.0, 1.0, 0.4, 0.0, 1, true).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let p = params();
        assert_eq!(p.pressure(&[0.0]).unwrap()[0], 0.0);
        assert_eq!(p.pressure(&[1.0]).unwrap()[0], 1.0);
        // 2^1.4 against a high-precision power oracle.
        let expected = 2.6390158215457884f64;
        assert!((p.pressure(&[2.0]).unwrap()[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn pressure_rejects_negative_with_index() {
        let p = params();
        match p.pressure(&[1.0, -0.5, 2.0]) {
            Err(Error::NegativeDensity { index: 1, value }) => assert_eq!(value, -0.5),
            other => panic!("expected NegativeDensity at index 1, got {other:?}"),
        }
    }

    #[test]
    fn viscosities_examples() {
        let p = params();
        let (mu, la) = p.viscosities(&[1.0, 0.0]).unwrap();
        assert_eq!((mu[0], la[0]), (1.0, 0.4));
        assert_eq!((mu[1], la[1]), (0.0, 0.0));
        // rho=4, delta=1.2, alpha=1, beta=0.4: 4^1.2 = 5.278031643091577
        let (mu, la) = p.viscosities(&[4.0]).unwrap();
        let base = 5.278031643091577f64;
        assert!((mu[0] - base).abs() < 1e-14);
        assert!((la[0] - 0.4 * base).abs() < 1e-14);
    }

    #[test]
    fn drag_examples() {
        let p = params();
        assert_eq!(p.drag_coefficient(&[0.0, 1.0, 2.0]).unwrap(), vec![0.0, 1.0, 4.0]);
    }

    #[test]
    fn bd_beta_examples() {
        assert_eq!(bd_beta(1.0, 1.5), 1.0);
        assert_eq!(bd_beta(0.5, 2.0), 1.0);
        let eps = 1e-9;
        let b = bd_beta(1.0, 1.0 + eps);
        assert!((b - 2.0 * eps).abs() < 1e-6 * 2.0 * eps);
        // 2*alpha + 3*bd_beta > 0 for admissible (alpha, delta).
        for &(a, d) in &[(0.3, 1.01), (2.0, 1.5), (5.0, 2.9)] {
            assert!(2.0 * a + 3.0 * bd_beta(a, d) > 0.0);
        }
    }

    #[test]
    fn sound_variable_round_trip() {
        let p = params();
        assert_eq!(p.to_sound_variable(0.0).unwrap(), 0.0);
        assert_eq!(p.to_sound_variable(1.0).unwrap(), 1.0);
        let n4 = p.to_sound_variable(4.0).unwrap();
        assert!((n4 - 1.148698354997035f64).abs() < 1e-14); // 4^0.1
        let mut rho = 1e-12;
        while rho <= 1e12 {
            let rt = p.from_sound_variable(p.to_sound_variable(rho).unwrap()).unwrap();
            assert!((rt - rho).abs() <= 1e-14 * rho, "round trip failed at rho={rho}");
            rho *= 10.0;
        }
    }

    #[test]
    fn theta_relation_exact_to_roundoff() {
        for delta in [1.05, 1.2, 1.5, 2.0, 2.9] {
            let p = ModelParams::new(5.0, delta, 5.0, 1.0, 0.0, 0.0, 1, true).unwrap();
            let prod = p.theta() * (delta - 1.0);
            assert!((prod - 2.0).abs() <= f64::EPSILON * 2.0);
        }
    }

    #[test]
    fn strict_admissibility_window() {
        // delta above (gamma+1)/2 rejected only when strict.
        assert!(ModelParams::new(1.4, 1.3, 2.0, 1.0, 0.0, 0.0, 3, true).is_err());
        assert!(ModelParams::new(1.4, 1.3, 2.0, 1.0, 0.0, 0.0, 3, false).is_ok());
        // the (2m+1)/3 cap binds for small m.
        assert!(ModelParams::new(5.0, 2.0, 2.0, 1.0, 0.0, 0.0, 3, true).is_err());
    }

    #[test]
    fn monotone_in_rho() {
        let p = params();
        let mut x = 0.0f64;
        let mut prev_p = 0.0;
        let mut prev_mu = 0.0;
        let mut prev_d = 0.0;
        while x < 20.0 {
            let pr = p.pressure(&[x]).unwrap()[0];
            let (mu, _) = p.viscosities(&[x]).unwrap();
            let d = p.drag_coefficient(&[x]).unwrap()[0];
            assert!(pr >= prev_p && mu[0] >= prev_mu && d >= prev_d);
            prev_p = pr;
            prev_mu = mu[0];
            prev_d = d;
            x += 0.37;
        }
    }
}
