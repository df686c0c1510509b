//! Model parameters and the homogeneous state.

use alloc::format;

use crate::error::{Error, Result};

/// All constants of the reaction-diffusion-advection system.
///
/// Serialized names follow the usual symbols (`Q_m`, `K_bg`, ...). The defaults are
/// the reference set used for the eigenvalue figures, with `r = 1` and `P_h = 0.2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelParams {
    /// Diffusivity of biomass and internal phosphorus (m²/day).
    pub alpha: f64,
    /// Diffusivity of dissolved phosphorus (m²/day).
    pub beta: f64,
    /// Advection scalar for biomass and internal phosphorus.
    #[cfg_attr(feature = "serde", serde(rename = "beta_B"))]
    pub beta_b: f64,
    /// Advection scalar for dissolved phosphorus.
    #[cfg_attr(feature = "serde", serde(rename = "beta_P"))]
    pub beta_p: f64,
    /// Maximum production rate (1/day).
    pub r: f64,
    /// Quota at which growth ceases (mgP/mgC).
    #[cfg_attr(feature = "serde", serde(rename = "Q_m"))]
    pub q_min: f64,
    /// Quota at which uptake ceases (mgP/mgC).
    #[cfg_attr(feature = "serde", serde(rename = "Q_M"))]
    pub q_max: f64,
    /// Epilimnion depth (m).
    pub z_m: f64,
    /// Biomass-specific light attenuation (m²/mgC).
    pub k: f64,
    /// Background light attenuation (1/m).
    #[cfg_attr(feature = "serde", serde(rename = "K_bg"))]
    pub k_bg: f64,
    /// Half-saturation of light-limited production (µmol/(m²·day)).
    #[cfg_attr(feature = "serde", serde(rename = "H"))]
    pub half_sat_light: f64,
    /// Surface light intensity (µmol/(m²·day)).
    #[cfg_attr(feature = "serde", serde(rename = "I_in"))]
    pub i_in: f64,
    /// Loss rate (1/day).
    #[cfg_attr(feature = "serde", serde(rename = "l"))]
    pub loss: f64,
    /// Exchange rate across the thermocline (m/day).
    #[cfg_attr(feature = "serde", serde(rename = "D"))]
    pub exchange: f64,
    /// Maximum phosphorus uptake rate (mgP/mgC/day).
    #[cfg_attr(feature = "serde", serde(rename = "rho_m"))]
    pub rho_max: f64,
    /// Dissolved phosphorus in the hypolimnion (mgP/m²).
    #[cfg_attr(feature = "serde", serde(rename = "P_h"))]
    pub p_h: f64,
    /// Half-saturation of phosphorus uptake (mgP/m²).
    #[cfg_attr(feature = "serde", serde(rename = "M"))]
    pub half_sat_p: f64,
    /// External phosphorus source (mgP/m²/day).
    #[cfg_attr(feature = "serde", serde(rename = "P_in"))]
    pub p_in: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            alpha: 0.01,
            beta: 0.02,
            beta_b: 0.05,
            beta_p: 0.075,
            r: 1.0,
            q_min: 0.004,
            q_max: 0.04,
            z_m: 5.0,
            k: 0.0004,
            k_bg: 0.3,
            half_sat_light: 120.0,
            i_in: 300.0,
            loss: 0.35,
            exchange: 0.02,
            rho_max: 1.0,
            p_h: 0.2,
            half_sat_p: 1.5,
            p_in: 0.0,
        }
    }
}

/// Parameters that can be varied by name, e.g. as sensitivity factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    Alpha,
    Beta,
    BetaB,
    BetaP,
    R,
    QMin,
    QMax,
    ZM,
    K,
    KBg,
    HalfSatLight,
    IIn,
    Loss,
    Exchange,
    RhoMax,
    PH,
    HalfSatP,
    PIn,
}

impl Parameter {
    pub const ALL: [Parameter; 18] = [
        Parameter::Alpha,
        Parameter::Beta,
        Parameter::BetaB,
        Parameter::BetaP,
        Parameter::R,
        Parameter::QMin,
        Parameter::QMax,
        Parameter::ZM,
        Parameter::K,
        Parameter::KBg,
        Parameter::HalfSatLight,
        Parameter::IIn,
        Parameter::Loss,
        Parameter::Exchange,
        Parameter::RhoMax,
        Parameter::PH,
        Parameter::HalfSatP,
        Parameter::PIn,
    ];

    /// Conventional symbol, as used in configuration files and reports.
    pub fn symbol(self) -> &'static str {
        match self {
            Parameter::Alpha => "alpha",
            Parameter::Beta => "beta",
            Parameter::BetaB => "beta_B",
            Parameter::BetaP => "beta_P",
            Parameter::R => "r",
            Parameter::QMin => "Q_m",
            Parameter::QMax => "Q_M",
            Parameter::ZM => "z_m",
            Parameter::K => "k",
            Parameter::KBg => "K_bg",
            Parameter::HalfSatLight => "H",
            Parameter::IIn => "I_in",
            Parameter::Loss => "l",
            Parameter::Exchange => "D",
            Parameter::RhoMax => "rho_m",
            Parameter::PH => "P_h",
            Parameter::HalfSatP => "M",
            Parameter::PIn => "P_in",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Parameter> {
        Parameter::ALL.iter().copied().find(|p| p.symbol() == s)
    }
}

impl ModelParams {
    /// Checks positivity, the quota ordering and finiteness.
    ///
    /// Transport coefficients, the exchange rate `D`, `P_h` and `P_in` may be zero,
    /// which switches the corresponding process off.
    pub fn validate(&self) -> Result<()> {
        for param in Parameter::ALL {
            let value = self.get(param);
            let name = param.symbol();
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{value} is not finite"),
                });
            }
            let ok = match param {
                Parameter::PH
                | Parameter::PIn
                | Parameter::Exchange
                | Parameter::Alpha
                | Parameter::Beta
                | Parameter::BetaB
                | Parameter::BetaP => value >= 0.0,
                _ => value > 0.0,
            };
            if !ok {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{value} is out of range"),
                });
            }
        }
        if self.q_min >= self.q_max {
            return Err(Error::InvalidParameter {
                name: "Q_m",
                reason: format!("Q_m = {} must be below Q_M = {}", self.q_min, self.q_max),
            });
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn get(&self, param: Parameter) -> f64 {
        match param {
            Parameter::Alpha => self.alpha,
            Parameter::Beta => self.beta,
            Parameter::BetaB => self.beta_b,
            Parameter::BetaP => self.beta_p,
            Parameter::R => self.r,
            Parameter::QMin => self.q_min,
            Parameter::QMax => self.q_max,
            Parameter::ZM => self.z_m,
            Parameter::K => self.k,
            Parameter::KBg => self.k_bg,
            Parameter::HalfSatLight => self.half_sat_light,
            Parameter::IIn => self.i_in,
            Parameter::Loss => self.loss,
            Parameter::Exchange => self.exchange,
            Parameter::RhoMax => self.rho_max,
            Parameter::PH => self.p_h,
            Parameter::HalfSatP => self.half_sat_p,
            Parameter::PIn => self.p_in,
        }
    }

    pub fn set(&mut self, param: Parameter, value: f64) {
        let slot = match param {
            Parameter::Alpha => &mut self.alpha,
            Parameter::Beta => &mut self.beta,
            Parameter::BetaB => &mut self.beta_b,
            Parameter::BetaP => &mut self.beta_p,
            Parameter::R => &mut self.r,
            Parameter::QMin => &mut self.q_min,
            Parameter::QMax => &mut self.q_max,
            Parameter::ZM => &mut self.z_m,
            Parameter::K => &mut self.k,
            Parameter::KBg => &mut self.k_bg,
            Parameter::HalfSatLight => &mut self.half_sat_light,
            Parameter::IIn => &mut self.i_in,
            Parameter::Loss => &mut self.loss,
            Parameter::Exchange => &mut self.exchange,
            Parameter::RhoMax => &mut self.rho_max,
            Parameter::PH => &mut self.p_h,
            Parameter::HalfSatP => &mut self.half_sat_p,
            Parameter::PIn => &mut self.p_in,
        };
        *slot = value;
    }

    pub fn with(mut self, param: Parameter, value: f64) -> Self {
        self.set(param, value);
        self
    }

    /// Combined first-order removal rate `l + D/z_m` of biomass and internal phosphorus.
    pub fn removal_rate(&self) -> f64 {
        self.loss + self.exchange / self.z_m
    }

    /// Vertical exchange rate `D/z_m`.
    pub fn dilution(&self) -> f64 {
        self.exchange / self.z_m
    }
}

/// Spatially homogeneous state: biomass, internal and dissolved phosphorus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HomState {
    /// Biomass `B` (mgC/m²).
    pub biomass: f64,
    /// Internal phosphorus `p` (mgP/m²).
    pub internal_p: f64,
    /// Dissolved phosphorus `P` (mgP/m²).
    pub dissolved_p: f64,
}

impl HomState {
    pub const fn new(biomass: f64, internal_p: f64, dissolved_p: f64) -> Self {
        HomState {
            biomass,
            internal_p,
            dissolved_p,
        }
    }

    /// Builds a state from biomass, cell quota and dissolved phosphorus.
    pub fn from_quota(biomass: f64, quota: f64, dissolved_p: f64) -> Self {
        HomState::new(biomass, quota * biomass, dissolved_p)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.biomass, self.internal_p, self.dissolved_p]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        HomState::new(a[0], a[1], a[2])
    }

    /// `p/B`, or `None` when the biomass is zero.
    pub fn quota(&self) -> Option<f64> {
        (self.biomass > 0.0).then(|| self.internal_p / self.biomass)
    }

    /// Checks nonnegativity and, for positive biomass, the quota bounds.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let [b, p, pd] = self.to_array();
        if !(b >= 0.0 && p >= 0.0 && pd >= 0.0) {
            return Err(Error::domain(format!(
                "state components must be nonnegative, got ({b}, {p}, {pd})"
            )));
        }
        if let Some(q) = self.quota() {
            let slack = 1e-9 * params.q_max;
            if q < params.q_min - slack || q > params.q_max + slack {
                return Err(Error::domain(format!(
                    "cell quota {q} outside [{}, {}]",
                    params.q_min, params.q_max
                )));
            }
        }
        Ok(())
    }
}
