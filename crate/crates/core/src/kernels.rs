//! Closed-form reaction kernels, extinction quantities and bounds.
//!
//! All functions are pure in `(state, params)`. The checked variants validate
//! their domain and return [`Error::Domain`]; the solvers use the unchecked
//! `*_rate` helpers together with [`quota_for_growth`], which keeps the quota
//! inside `[Q_m, Q_M]` and switches to the extinction quota as `B -> 0`.

use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::{HomState, ModelParams};
use crate::EPS_BIOMASS;

/// Light intensity at depth `s` under biomass `B`: `I_in exp(-(K_bg + k B) s)`.
pub fn light_intensity(depth: f64, biomass: f64, params: &ModelParams) -> Result<f64> {
    if !(depth >= 0.0) || !(biomass >= 0.0) {
        return Err(Error::domain(format!(
            "light intensity needs s >= 0 and B >= 0, got s = {depth}, B = {biomass}"
        )));
    }
    Ok(intensity(depth, biomass, params))
}

fn intensity(depth: f64, biomass: f64, params: &ModelParams) -> f64 {
    params.i_in * (-(params.k_bg + params.k * biomass) * depth).exp()
}

/// Depth-averaged light limitation of growth,
/// `h(B) = ln[(H + I_in)/(H + I(z_m, B))] / (z_m (k B + K_bg))`.
///
/// Negative biomass (integrator round-off) is treated as zero.
pub fn growth_h(biomass: f64, params: &ModelParams) -> f64 {
    let b = biomass.max(0.0);
    let attenuation = params.k * b + params.k_bg;
    let bottom = intensity(params.z_m, b, params);
    let ratio = (params.half_sat_light + params.i_in) / (params.half_sat_light + bottom);
    ratio.ln() / (params.z_m * attenuation)
}

/// `dh/dB`.
pub fn growth_h_derivative(biomass: f64, params: &ModelParams) -> f64 {
    let b = biomass.max(0.0);
    let attenuation = params.k * b + params.k_bg;
    let bottom = intensity(params.z_m, b, params);
    params.k * bottom / (attenuation * (params.half_sat_light + bottom))
        - params.k * growth_h(b, params) / attenuation
}

/// Quota-limited uptake per unit biomass,
/// `rho_m ((Q_M - Q)/(Q_M - Q_m)) P/(P + M)`.
pub fn uptake_rho(quota: f64, dissolved_p: f64, params: &ModelParams) -> Result<f64> {
    if !(quota >= params.q_min && quota <= params.q_max) {
        return Err(Error::domain(format!(
            "quota {quota} outside [{}, {}]",
            params.q_min, params.q_max
        )));
    }
    if !(dissolved_p >= 0.0) {
        return Err(Error::domain(format!("dissolved phosphorus {dissolved_p} < 0")));
    }
    Ok(rho_rate(quota, dissolved_p, params))
}

pub(crate) fn rho_rate(quota: f64, dissolved_p: f64, params: &ModelParams) -> f64 {
    params.rho_max * (params.q_max - quota) / (params.q_max - params.q_min)
        * saturation(dissolved_p, params)
}

/// `P/(P + M)`, with negative round-off clipped to zero.
fn saturation(dissolved_p: f64, params: &ModelParams) -> f64 {
    let pd = dissolved_p.max(0.0);
    pd / (pd + params.half_sat_p)
}

/// Areal uptake without the `p/B` singularity,
/// `eta = rho_m ((Q_M B - p)/(Q_M - Q_m)) P/(P + M)`.
pub fn uptake_eta(biomass: f64, internal_p: f64, dissolved_p: f64, params: &ModelParams) -> f64 {
    params.rho_max * (params.q_max * biomass - internal_p) / (params.q_max - params.q_min)
        * saturation(dissolved_p, params)
}

/// `rho_m/(Q_M - Q_m) * P/(P + M)`.
pub fn rho_tilde(dissolved_p: f64, params: &ModelParams) -> f64 {
    params.rho_max / (params.q_max - params.q_min) * saturation(dissolved_p, params)
}

/// Weight on `Q_m` in the extinction quota, `r h(0) / (rho~(P_h) + r h(0))`.
pub fn q_hat_weight(params: &ModelParams) -> f64 {
    let growth = params.r * growth_h(0.0, params);
    growth / (rho_tilde(params.p_h, params) + growth)
}

/// Limiting cell quota of a vanishing population, an interpolation between `Q_m` and `Q_M`.
pub fn q_hat(params: &ModelParams) -> f64 {
    let w = q_hat_weight(params);
    w * params.q_min + (1.0 - w) * params.q_max
}

/// Basic reproductive index `r h(0) (1 - Q_m/Q^) / (l + D/z_m)`.
pub fn r0(params: &ModelParams) -> f64 {
    let growth = params.r * growth_h(0.0, params) * (1.0 - params.q_min / q_hat(params));
    (growth / params.removal_rate()).max(0.0)
}

/// Biomass level above which net growth is negative everywhere,
/// `(1/k) [ r ((Q_M - Q_m)/Q_M) ln((H + I_in)/H) / (z_m l + D) - K_bg ]`.
///
/// A negative value means biomass decays from any initial condition.
pub fn b_bar(params: &ModelParams) -> f64 {
    let light = ((params.half_sat_light + params.i_in) / params.half_sat_light).ln();
    let stoich = (params.q_max - params.q_min) / params.q_max;
    (params.r * stoich * light / (params.z_m * params.loss + params.exchange) - params.k_bg)
        / params.k
}

/// Quota used in the growth term of the solvers.
///
/// Blends `p/B` with the extinction quota, `(p + eps Q^)/(B + eps)`, then clamps the
/// result into `[Q_m, Q_M]`. For `B >> eps` this is `p/B`; as `B, p -> 0` it tends to
/// `Q^`. `eps` is in biomass units.
pub fn quota_for_growth(biomass: f64, internal_p: f64, eps: f64, q_hat: f64, params: &ModelParams) -> f64 {
    let b = biomass.max(0.0);
    let q = (internal_p + eps * q_hat) / (b + eps);
    q.clamp(params.q_min, params.q_max)
}

/// Reaction rates `(dB, dp, dP)` for a given growth quota. No domain checks.
pub fn reaction_rates(state: [f64; 3], quota: f64, params: &ModelParams) -> [f64; 3] {
    let [b, p, pd] = state;
    let removal = params.removal_rate();
    let growth = params.r * (1.0 - params.q_min / quota) * growth_h(b, params) * b;
    let eta = uptake_eta(b, p, pd, params);
    [
        growth - removal * b,
        eta - removal * p,
        params.dilution() * (params.p_h - pd) + params.p_in - eta + params.loss * p,
    ]
}

/// Reaction part of the homogeneous system at a valid state.
///
/// Uses the exact quota `p/B`, or `Q^` when `B` is below [`EPS_BIOMASS`].
pub fn reaction_rhs(state: &HomState, params: &ModelParams) -> Result<[f64; 3]> {
    state.validate(params)?;
    let quota = if state.biomass < EPS_BIOMASS {
        q_hat(params)
    } else {
        if state.internal_p <= 0.0 {
            return Err(Error::domain("positive biomass with zero internal phosphorus"));
        }
        state.internal_p / state.biomass
    };
    Ok(reaction_rates(state.to_array(), quota, params))
}

/// Jacobian of [`reaction_rhs`] with respect to `(B, p, P)`.
///
/// At `B = 0` the ratio `B/p` in the growth derivatives is replaced by `1/Q^`.
pub fn reaction_jacobian(state: &HomState, params: &ModelParams) -> [[f64; 3]; 3] {
    let [b, p, pd] = state.to_array();
    let b_over_p = if b < EPS_BIOMASS { 1.0 / q_hat(params) } else { b / p };
    let h = growth_h(b, params);
    let dh = growth_h_derivative(b, params);
    let removal = params.removal_rate();
    let qm = params.q_min;
    let sat = saturation(pd, params);
    let dsat = params.half_sat_p / ((pd.max(0.0) + params.half_sat_p) * (pd.max(0.0) + params.half_sat_p));
    let span = params.q_max - params.q_min;

    let a11 = -removal + params.r * (1.0 - 2.0 * qm * b_over_p) * h + params.r * (1.0 - qm * b_over_p) * dh * b;
    let a12 = params.r * qm * b_over_p * b_over_p * h;
    let a21 = params.rho_max * params.q_max / span * sat;
    let a22 = -removal - params.rho_max / span * sat;
    let a23 = params.rho_max * (params.q_max * b - p) / span * dsat;
    let a31 = -a21;
    let a32 = params.rho_max / span * sat + params.loss;
    let a33 = -params.dilution() - a23;
    [[a11, a12, 0.0], [a21, a22, a23], [a31, a32, a33]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Parameter;
    use proptest::prelude::*;

    fn reference() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn light_at_surface_is_incoming_light() {
        let p = reference();
        for b in [0.0, 1.0, 100.0] {
            assert_eq!(light_intensity(0.0, b, &p).unwrap(), p.i_in);
        }
    }

    #[test]
    fn light_at_five_metres_without_biomass() {
        // 300 e^{-1.5} to 30 digits: 66.9390480445289486799841412292
        let v = light_intensity(5.0, 0.0, &reference()).unwrap();
        assert!((v - 66.939_048_044_528_95).abs() < 1e-10);
    }

    #[test]
    fn light_rejects_negative_inputs() {
        let p = reference();
        assert!(light_intensity(-1.0, 0.0, &p).is_err());
        assert!(light_intensity(1.0, -1.0, &p).is_err());
    }

    #[test]
    fn light_decreases_with_biomass() {
        let p = reference();
        let a = light_intensity(2.0, 1.0, &p).unwrap();
        let b = light_intensity(2.0, 10.0, &p).unwrap();
        assert!(a > b);
    }

    #[test]
    fn growth_h_at_zero_biomass() {
        // ln(420 / (120 + 300 e^{-1.5})) / 1.5 evaluated at extended precision.
        let h = growth_h(0.0, &reference());
        assert!((h - 0.539_648_062_560_536_8).abs() < 1e-12, "{h}");
    }

    #[test]
    fn growth_h_positive_and_decreasing() {
        let p = reference();
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let b = 0.1 * i as f64;
            let h = growth_h(b, &p);
            assert!(h > 0.0);
            assert!(h < prev);
            prev = h;
        }
    }

    #[test]
    fn growth_h_derivative_matches_central_difference() {
        let p = reference();
        for b in [0.5, 3.0, 17.0, 120.0] {
            let e = 1e-5;
            let fd = (growth_h(b + e, &p) - growth_h(b - e, &p)) / (2.0 * e);
            assert!((fd - growth_h_derivative(b, &p)).abs() < 1e-9);
        }
    }

    #[test]
    fn uptake_rho_corner_values() {
        let p = reference();
        assert_eq!(uptake_rho(p.q_max, 3.0, &p).unwrap(), 0.0);
        let big = uptake_rho(p.q_min, 1e12, &p).unwrap();
        assert!((big - p.rho_max).abs() < 1e-9);
        let mid = uptake_rho(0.5 * (p.q_min + p.q_max), p.half_sat_p, &p).unwrap();
        assert!((mid - p.rho_max / 4.0).abs() < 1e-15);
        assert!(uptake_rho(p.q_min * 0.5, 1.0, &p).is_err());
        assert!(uptake_rho(p.q_max * 1.5, 1.0, &p).is_err());
    }

    #[test]
    fn uptake_eta_corner_values() {
        let p = reference();
        assert_eq!(uptake_eta(0.0, 0.0, 4.0, &p), 0.0);
        assert_eq!(uptake_eta(3.0, 3.0 * p.q_max, 4.0, &p), 0.0);
        let eta = uptake_eta(2.0, 0.02, 1.5, &p);
        let rho = uptake_rho(0.01, 1.5, &p).unwrap();
        assert!((eta - 2.0 * rho).abs() < 1e-15);
    }

    #[test]
    fn q_hat_limits() {
        let p = reference().with(Parameter::PH, 0.0);
        assert_eq!(q_hat(&p), p.q_min);
        let p = reference().with(Parameter::PH, 1e9).with(Parameter::RhoMax, 1e9);
        assert!((q_hat(&p) - p.q_max).abs() < 1e-9);
    }

    #[test]
    fn q_hat_reference_value() {
        // rho~(0.2) = (1/0.036) 0.2/1.7 and h(0) composed separately.
        let p = reference().with(Parameter::R, 0.7);
        let rt = 1.0 / 0.036 * 0.2 / 1.7;
        let h0 = 0.539_648_062_560_536_8;
        let expected = (rt * 0.04 + 0.7 * 0.004 * h0) / (rt + 0.7 * h0);
        assert!((q_hat(&p) - expected).abs() < 1e-14);
        assert!((q_hat(&p) - 0.036_27).abs() < 5e-6);
    }

    #[test]
    fn r0_reference_cases() {
        let base = reference();
        assert_eq!(r0(&base.with(Parameter::R, 0.7).with(Parameter::PH, 0.0)), 0.0);
        let r = r0(&base.with(Parameter::R, 0.7).with(Parameter::PH, 0.2));
        assert!((r - 0.9494).abs() < 5e-4, "{r}");
        let r = r0(&base.with(Parameter::R, 1.0).with(Parameter::PH, 0.2));
        assert!((r - 1.3497).abs() < 5e-4, "{r}");
    }

    #[test]
    fn b_bar_behaviour() {
        let p = reference();
        assert!(b_bar(&p.with(Parameter::KBg, 1e3)) < 0.0);
        // Root of f(B) = (r (Q_M-Q_m)/Q_M ln((H+I)/H) / (z_m (kB + K_bg)) - l - D/z_m) B.
        let bb = b_bar(&p);
        assert!(bb > 0.0);
        let light = ((p.half_sat_light + p.i_in) / p.half_sat_light).ln();
        let f = p.r / (p.z_m * (p.k * bb + p.k_bg)) * ((p.q_max - p.q_min) / p.q_max) * light
            - p.loss
            - p.exchange / p.z_m;
        assert!(f.abs() < 1e-12);
        // B_bar + K_bg/k scales as 1/k.
        let p2 = p.with(Parameter::K, 2.0 * p.k);
        let lhs = b_bar(&p2) + p2.k_bg / p2.k;
        let rhs = 0.5 * (bb + p.k_bg / p.k);
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs());
    }

    #[test]
    fn extinction_state_is_at_rest() {
        let p = reference();
        let rates = reaction_rhs(&HomState::new(0.0, 0.0, p.p_h), &p).unwrap();
        assert_eq!(rates, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn reported_positive_equilibrium_is_nearly_at_rest() {
        let p = reference().with(Parameter::R, 1.0).with(Parameter::PH, 0.2);
        let rates = reaction_rhs(&HomState::new(16.2785, 0.1920, 0.0080), &p).unwrap();
        for r in rates {
            assert!(r.abs() < 1e-3, "{rates:?}");
        }
    }

    #[test]
    fn reaction_rejects_zero_internal_phosphorus() {
        let p = reference();
        assert!(reaction_rhs(&HomState::new(1.0, 0.0, 1.0), &p).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = reference();
        let s = HomState::new(7.0, 0.1, 0.3);
        let jac = reaction_jacobian(&s, &p);
        let base = s.to_array();
        for j in 0..3 {
            let e = 1e-7 * base[j].abs().max(1e-3);
            let mut hi = base;
            let mut lo = base;
            hi[j] += e;
            lo[j] -= e;
            let fh = reaction_rhs(&HomState::from_array(hi), &p).unwrap();
            let fl = reaction_rhs(&HomState::from_array(lo), &p).unwrap();
            for i in 0..3 {
                let fd = (fh[i] - fl[i]) / (2.0 * e);
                assert!((fd - jac[i][j]).abs() < 1e-5 * (1.0 + fd.abs()), "({i},{j}) {fd} vs {}", jac[i][j]);
            }
        }
    }

    #[test]
    fn growth_quota_blends_to_extinction_quota() {
        let p = reference();
        let qh = q_hat(&p);
        assert_eq!(quota_for_growth(0.0, 0.0, 1e-12, qh, &p), qh);
        let q = quota_for_growth(5.0, 0.05, 1e-12, qh, &p);
        assert!((q - 0.01).abs() < 1e-12);
        assert_eq!(quota_for_growth(1.0, 1.0, 1e-12, qh, &p), p.q_max);
    }

    proptest! {
        #[test]
        fn rho_bounded_and_monotone(t in 0.0f64..=1.0, pd in 0.0f64..50.0, dp in 0.0f64..5.0, dq in 0.0f64..=1.0) {
            let p = reference();
            let q = p.q_min + t * (p.q_max - p.q_min);
            let v = uptake_rho(q, pd, &p).unwrap();
            prop_assert!((0.0..=p.rho_max).contains(&v));
            prop_assert!(uptake_rho(q, pd + dp, &p).unwrap() >= v);
            let q2 = q + dq * (p.q_max - q);
            prop_assert!(uptake_rho(q2, pd, &p).unwrap() <= v);
        }

        #[test]
        fn eta_equals_rho_times_biomass(b in 1e-3f64..500.0, t in 0.0f64..=1.0, pd in 0.0f64..20.0) {
            let p = reference();
            let q = p.q_min + t * (p.q_max - p.q_min);
            let eta = uptake_eta(b, q * b, pd, &p);
            let rho = uptake_rho(q, pd, &p).unwrap() * b;
            prop_assert!((eta - rho).abs() <= 1e-12 * rho.abs().max(1e-300) + 1e-15);
        }

        #[test]
        fn q_hat_is_a_convex_combination(ph in 0.0f64..10.0, r in 0.1f64..3.0) {
            let p = reference().with(Parameter::PH, ph).with(Parameter::R, r);
            let q = q_hat(&p);
            prop_assert!(q >= p.q_min && q <= p.q_max);
            let h0 = growth_h(0.0, &p);
            let w = r * h0 / (rho_tilde(ph, &p) + r * h0);
            prop_assert!((w - q_hat_weight(&p)).abs() < 1e-15);
            prop_assert!((q - (w * p.q_min + (1.0 - w) * p.q_max)).abs() < 1e-15);
        }

        #[test]
        fn r0_increases_with_hypolimnion_phosphorus(ph in 1e-3f64..5.0, dph in 1e-3f64..5.0) {
            let p = reference();
            let lo = r0(&p.with(Parameter::PH, ph));
            let hi = r0(&p.with(Parameter::PH, ph + dph));
            prop_assert!(lo > 0.0);
            prop_assert!(hi > lo);
        }

        #[test]
        fn phosphorus_exchange_cancels(b in 1e-3f64..300.0, t in 0.0f64..=1.0, pd in 0.0f64..20.0, pin in 0.0f64..0.3) {
            let p = reference().with(Parameter::PIn, pin);
            let q = p.q_min + t * (p.q_max - p.q_min);
            let s = HomState::from_quota(b, q, pd);
            let [_, dp, dpd] = reaction_rhs(&s, &p).unwrap();
            let expected = p.dilution() * (p.p_h - pd) + p.p_in - p.dilution() * s.internal_p;
            prop_assert!((dp + dpd - expected).abs() <= 1e-12 * (1.0 + expected.abs() + dp.abs()));
        }
    }
}
