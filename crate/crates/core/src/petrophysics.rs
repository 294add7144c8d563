//! Constitutive closures: saturation normalization, capillary pressure,
//! relative permeability, mobilities, and the porosity/permeability damage
//! model driven by retained particle volumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to the normalized saturation so that `ln S` and its
/// derivative stay finite.
pub const MIN_NORMALIZED_SATURATION: f64 = 1e-4;

/// Porosity never drops below this value under deposition.
pub const MIN_POROSITY: f64 = 1e-3;

/// Rock and fluid constants, all in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockFluidParams {
    /// Irreducible water saturation.
    pub swr: f64,
    /// Residual oil saturation.
    pub snr: f64,
    /// Exponent of the water relative permeability curve.
    pub exp_w: f64,
    /// Exponent of the oil relative permeability curve.
    pub exp_n: f64,
    pub krw0: f64,
    pub krn0: f64,
    /// Viscosities (Pa s).
    pub mu_w: f64,
    pub mu_n: f64,
    /// Capillary pressure scale `B_c` (Pa).
    pub capillary_scale: f64,
    /// Initial porosity.
    pub phi0: f64,
    /// Seepage constant of plugged pores.
    pub plugged_seepage: f64,
    /// Exponent of the permeability damage law.
    pub damage_exponent: f64,
    /// Flow-efficiency loss per unit entrapped volume fraction.
    pub flow_efficiency_coef: f64,
    /// Densities (kg/m^3).
    pub rho_w: f64,
    pub rho_n: f64,
    /// Gravitational acceleration magnitude (m/s^2) acting along -y; zero
    /// disables gravity.
    pub gravity: f64,
}

impl Default for RockFluidParams {
    fn default() -> Self {
        RockFluidParams {
            swr: 0.001,
            snr: 0.001,
            exp_w: 2.0,
            exp_n: 2.0,
            krw0: 1.0,
            krn0: 1.0,
            mu_w: 1e-3,
            mu_n: 0.45e-3,
            capillary_scale: 50e5,
            phi0: 0.3,
            plugged_seepage: 0.6,
            damage_exponent: 3.0,
            flow_efficiency_coef: 0.01,
            rho_w: 1000.0,
            rho_n: 800.0,
            gravity: 0.0,
        }
    }
}

impl RockFluidParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, constraint: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(key, constraint))
            }
        };
        check(self.swr >= 0.0, "rock.swr", "swr >= 0")?;
        check(self.snr >= 0.0, "rock.snr", "snr >= 0")?;
        check(self.swr + self.snr < 1.0, "rock.swr", "S_wr + S_nr < 1")?;
        check(self.exp_w > 0.0, "rock.a", "a > 0")?;
        check(self.exp_n > 0.0, "rock.b", "b > 0")?;
        check(self.krw0 > 0.0 && self.krw0 <= 1.0, "rock.krw0", "krw0 in (0, 1]")?;
        check(self.krn0 > 0.0 && self.krn0 <= 1.0, "rock.krn0", "krn0 in (0, 1]")?;
        check(self.mu_w > 0.0, "rock.mu_w_cp", "mu_w > 0")?;
        check(self.mu_n > 0.0, "rock.mu_n_cp", "mu_n > 0")?;
        check(self.capillary_scale >= 0.0, "rock.bc_bar", "B_c >= 0")?;
        check(self.phi0 > 0.0 && self.phi0 < 1.0, "rock.phi0", "phi0 in (0, 1)")?;
        check(
            (0.0..=1.0).contains(&self.plugged_seepage),
            "rock.kf",
            "kf in [0, 1]",
        )?;
        check(
            (2.5..=3.5).contains(&self.damage_exponent),
            "rock.damage_exponent",
            "l in [2.5, 3.5]",
        )?;
        check(self.flow_efficiency_coef >= 0.0, "rock.gamma_f", "gamma_f >= 0")?;
        check(self.rho_w > 0.0 && self.rho_n > 0.0, "rock.rho_w_kg_per_m3", "densities > 0")?;
        check(self.gravity >= 0.0, "rock.gravity_m_per_s2", "gravity >= 0")?;
        Ok(())
    }

    /// Mobile saturation span `1 - S_nr - S_wr`.
    pub fn mobile_span(&self) -> f64 {
        1.0 - self.snr - self.swr
    }

    pub fn max_water_saturation(&self) -> f64 {
        1.0 - self.snr
    }

    /// Normalized saturation, clamped to `[1e-4, 1]`.
    pub fn normalized_saturation(&self, sw: f64) -> f64 {
        ((sw - self.swr) / self.mobile_span()).clamp(MIN_NORMALIZED_SATURATION, 1.0)
    }

    /// `p_c = -B_c ln S` (Pa).
    pub fn capillary_pressure(&self, s: f64) -> f64 {
        -self.capillary_scale * s.ln()
    }

    /// `dp_c/dS_w`, chained through the normalization.
    pub fn capillary_pressure_derivative(&self, s: f64) -> f64 {
        -self.capillary_scale / (s * self.mobile_span())
    }

    pub fn relative_permeabilities(&self, s: f64) -> (f64, f64) {
        (
            self.krw0 * s.powf(self.exp_w),
            self.krn0 * (1.0 - s).powf(self.exp_n),
        )
    }

    pub fn mobilities(&self, sw: f64) -> Mobilities {
        let s = ((sw - self.swr) / self.mobile_span()).clamp(0.0, 1.0);
        let (krw, krn) = self.relative_permeabilities(s);
        let water = krw / self.mu_w;
        let oil = krn / self.mu_n;
        let total = water + oil;
        Mobilities {
            water,
            oil,
            total,
            water_fraction: water / total,
        }
    }

    /// Capillary potential `p_c + (rho_n - rho_w) g y` at height `y`.
    pub fn capillary_potential(&self, sw: f64, y: f64) -> f64 {
        self.capillary_pressure(self.normalized_saturation(sw))
            + (self.rho_n - self.rho_w) * self.gravity * y
    }

    /// Derivative of the capillary potential with respect to `S_w`.
    pub fn capillary_potential_derivative(&self, sw: f64) -> f64 {
        self.capillary_pressure_derivative(self.normalized_saturation(sw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobilities {
    pub water: f64,
    pub oil: f64,
    pub total: f64,
    pub water_fraction: f64,
}

/// `phi = phi0 - (v1 + v2)`, floored at [`MIN_POROSITY`]. The flag reports
/// whether the floor was hit.
pub fn update_porosity(phi0: f64, v1: f64, v2: f64) -> (f64, bool) {
    let phi = phi0 - (v1 + v2);
    if phi < MIN_POROSITY {
        log::warn!("porosity clamped: phi0 {phi0} - v1 {v1} - v2 {v2} < {MIN_POROSITY}");
        (MIN_POROSITY, true)
    } else {
        (phi, false)
    }
}

/// Fraction of unplugged pores, `1 - gamma_f v2`, in `[0, 1]`.
pub fn flow_efficiency(v2: f64, gamma_f: f64) -> f64 {
    (1.0 - gamma_f * v2).clamp(0.0, 1.0)
}

/// `K = K0 [(1 - f) k_f + f phi/phi0]^l`.
pub fn update_permeability(k0: f64, phi: f64, phi0: f64, f: f64, kf: f64, l: f64) -> f64 {
    k0 * ((1.0 - f) * kf + f * phi / phi0).powf(l)
}

/// Deposited mass per fluid volume to volume fraction.
pub fn sigma_to_volume(sigma: f64, rho_b: f64) -> f64 {
    sigma / rho_b
}
