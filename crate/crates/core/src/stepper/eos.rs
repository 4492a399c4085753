use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal energy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum Eos {
    /// `eps(rho) = k rho^gamma`
    Polytropic { k: f64, gamma: f64 },
    /// `eps(rho, s) = k exp(s / (cv rho)) rho^gamma`
    IdealGas { k: f64, cv: f64, gamma: f64 },
}

/// Relative separation below which difference quotients fall back to the
/// derivative at the midpoint.
const COINCIDENCE: f64 = 1e-8;

fn coincident(x: f64, y: f64) -> bool {
    (y - x).abs() <= COINCIDENCE * 1f64.max(x.abs()).max(y.abs())
}

fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidIterate(format!("nonpositive density {rho}")))
    }
}

impl Eos {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Eos::Polytropic { k, gamma } => k > 0.0 && gamma > 0.0,
            Eos::IdealGas { k, cv, gamma } => k > 0.0 && cv > 0.0 && gamma > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("equation of state parameters must be positive: {self:?}")))
        }
    }

    pub fn uses_entropy(&self) -> bool {
        matches!(self, Eos::IdealGas { .. })
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            Eos::Polytropic { gamma, .. } | Eos::IdealGas { gamma, .. } => gamma,
        }
    }

    /// `eps(rho, s)`; the entropy is ignored by the polytropic law.
    pub fn energy(&self, rho: f64, s: f64) -> Result<f64> {
        check_density(rho)?;
        Ok(match *self {
            Eos::Polytropic { k, gamma } => k * rho.powf(gamma),
            Eos::IdealGas { k, cv, gamma } => k * (s / (cv * rho)).exp() * rho.powf(gamma),
        })
    }

    /// `d eps / d rho`
    pub fn d_rho(&self, rho: f64, s: f64) -> Result<f64> {
        let e = self.energy(rho, s)?;
        Ok(match *self {
            Eos::Polytropic { gamma, .. } => gamma * e / rho,
            Eos::IdealGas { cv, gamma, .. } => e * (gamma / rho - s / (cv * rho * rho)),
        })
    }

    /// `d eps / d s`
    pub fn d_s(&self, rho: f64, s: f64) -> Result<f64> {
        let e = self.energy(rho, s)?;
        Ok(match *self {
            Eos::Polytropic { .. } => 0.0,
            Eos::IdealGas { cv, .. } => e / (cv * rho),
        })
    }

    /// `(eps(y) - eps(x)) / (y - x)` at zero entropy.
    pub fn delta(&self, x: f64, y: f64) -> Result<f64> {
        self.delta1(x, y, 0.0)
    }

    /// `(eps(rho', s) - eps(rho, s)) / (rho' - rho)`
    ///
    /// The difference of energies is formed as `eps(rho) expm1(g' - g)` with
    /// `g = log eps` differenced analytically, so nearby arguments do not
    /// lose digits to cancellation.
    pub fn delta1(&self, rho: f64, rho_p: f64, s: f64) -> Result<f64> {
        check_density(rho)?;
        check_density(rho_p)?;
        if coincident(rho, rho_p) {
            return self.d_rho(0.5 * (rho + rho_p), s);
        }
        let d = rho_p - rho;
        let dg = match *self {
            Eos::Polytropic { gamma, .. } => gamma * (d / rho).ln_1p(),
            Eos::IdealGas { cv, gamma, .. } => gamma * (d / rho).ln_1p() - s / cv * d / (rho * rho_p),
        };
        Ok(self.energy(rho, s)? * dg.exp_m1() / d)
    }

    /// `(eps(rho, s') - eps(rho, s)) / (s' - s)`
    pub fn delta2(&self, s: f64, s_p: f64, rho: f64) -> Result<f64> {
        check_density(rho)?;
        let Eos::IdealGas { cv, .. } = *self else {
            return Ok(0.0);
        };
        if coincident(s, s_p) {
            return self.d_s(rho, 0.5 * (s + s_p));
        }
        let d = s_p - s;
        Ok(self.energy(rho, s)? * (d / (cv * rho)).exp_m1() / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polytropic_derivative_matches_finite_difference() {
        let eos = Eos::Polytropic { k: 2.0, gamma: 1.4 };
        let h = 1e-6;
        let fd = (eos.energy(1.3 + h, 0.0).unwrap() - eos.energy(1.3 - h, 0.0).unwrap()) / (2.0 * h);
        assert!((eos.d_rho(1.3, 0.0).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn quotients_match_direct_evaluation() {
        let poly = Eos::Polytropic { k: 1.0, gamma: 5.0 / 3.0 };
        assert!((poly.delta(1.0, 2.0).unwrap() - (2f64.powf(5.0 / 3.0) - 1.0)).abs() < 1e-14);
        let gas = Eos::IdealGas { k: 1.0, cv: 1.0, gamma: 5.0 / 3.0 };
        let e = std::f64::consts::E;
        assert!((gas.delta2(0.0, 1.0, 1.0).unwrap() - (e - 1.0)).abs() < 1e-14);
        assert!((gas.delta1(1.0, 2.0, 0.0).unwrap() - (2f64.powf(5.0 / 3.0) - 1.0)).abs() < 1e-14);
        let (r0, r1, s) = (1.3, 0.7, 0.4);
        let direct = (gas.energy(r1, s).unwrap() - gas.energy(r0, s).unwrap()) / (r1 - r0);
        assert!((gas.delta1(r0, r1, s).unwrap() - direct).abs() < 1e-13);
    }

    #[test]
    fn nearby_arguments_keep_full_precision() {
        // the exact quotient of x^2 is x + y
        let eos = Eos::Polytropic { k: 1.0, gamma: 2.0 };
        let (x, y) = (1.1, 1.1 + 3e-7);
        assert!((eos.delta(x, y).unwrap() - (x + y)).abs() < 1e-14);
        assert_eq!(eos.delta(x, x).unwrap(), 2.0 * x);
    }

    #[test]
    fn ideal_gas_partials_match_finite_differences() {
        let eos = Eos::IdealGas { k: 1.0, cv: 1.0, gamma: 5.0 / 3.0 };
        let (r, s, h) = (1.7, 0.4, 1e-6);
        let fr = (eos.energy(r + h, s).unwrap() - eos.energy(r - h, s).unwrap()) / (2.0 * h);
        let fs = (eos.energy(r, s + h).unwrap() - eos.energy(r, s - h).unwrap()) / (2.0 * h);
        assert!((eos.d_rho(r, s).unwrap() - fr).abs() < 1e-8);
        assert!((eos.d_s(r, s).unwrap() - fs).abs() < 1e-8);
    }
}
