//! Aggregated decoherence reports: every transition and dephasing channel
//! of the circuit at one operating point, in the shape of the budget
//! tables.

use super::dephasing::{
    aharonov_casher_dephasing, dephasing_first_order, dephasing_second_order, quadrature_sum,
    shot_noise_dephasing, ChargeDispersion, StencilDiag, Superinductor,
};
use super::spectral::ThermalQp;
use super::transitions::{
    charge_transition_rates, flux_transition_rates, qp_transition_rates, ChannelRates,
};
use crate::basis::ProductBasis;
use crate::circuit::{CircuitParams, FluxBias, NoiseEnvironment};
use crate::eigen::Spectrum;
use crate::error::Result;
use serde::{Deserialize, Serialize};

/// All golden-rule transition channels at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub channels: Vec<ChannelRates>,
    /// Provenance of the quasiparticle spectral density.
    pub qp_model: String,
}

impl RateReport {
    pub fn find(&self, label: &str) -> Option<&ChannelRates> {
        self.channels.iter().find(|c| c.label == label)
    }

    /// Bit-flip rate summed over the per-family totals, 1/s.
    pub fn bit_flip_total(&self) -> f64 {
        ["charge:total", "flux:total", "qp:total"]
            .iter()
            .filter_map(|l| self.find(l))
            .map(ChannelRates::gamma_1)
            .sum()
    }

    /// Heating rate summed over the per-family totals, 1/s.
    pub fn heating_total(&self) -> f64 {
        ["charge:total", "flux:total", "qp:total"]
            .iter()
            .filter_map(|l| self.find(l))
            .map(ChannelRates::gamma_up)
            .sum()
    }
}

/// Every transition channel: charge (per capacitor), flux (per loop), and
/// quasiparticle (per junction and superinductor), with per-family totals.
pub fn transition_report(
    spec: &Spectrum,
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    env: &NoiseEnvironment,
) -> Result<RateReport> {
    let qp = ThermalQp::from_env(env);
    let mut channels = charge_transition_rates(spec, params, basis, env)?;
    channels.extend(flux_transition_rates(spec, params, bias, basis, env)?);
    channels.extend(qp_transition_rates(spec, params, bias, basis, Some(&qp))?);
    use super::spectral::QpModel;
    Ok(RateReport { channels, qp_model: qp.describe() })
}

/// One dephasing channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingChannel {
    pub label: String,
    /// Echo dephasing rate, 1/s.
    pub gamma: f64,
    /// Stencil diagnostics when the rate came from a derivative.
    pub diag: Option<StencilDiag>,
}

impl DephasingChannel {
    pub fn t_phi_s(&self) -> f64 {
        1.0 / self.gamma
    }
}

/// The dephasing side of the budget table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingReport {
    pub channels: Vec<DephasingChannel>,
}

impl DephasingReport {
    pub fn find(&self, label: &str) -> Option<&DephasingChannel> {
        self.channels.iter().find(|c| c.label == label)
    }

    /// Largest single-channel rate among the headline channels, 1/s.
    pub fn worst_rate(&self) -> f64 {
        self.channels
            .iter()
            .filter(|c| !c.label.ends_with(":averaged"))
            .map(|c| c.gamma)
            .fold(0.0, f64::max)
    }
}

/// Resonator inputs of the shot-noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotNoiseInputs {
    /// Logical dispersive shift, angular 1/s.
    pub chi_logical: f64,
    /// Resonator linewidth, angular 1/s.
    pub kappa: f64,
    /// Thermal photon number.
    pub n_th: f64,
}

fn flux_a_rad(env: &NoiseEnvironment) -> f64 {
    // sqrt(A_Phi) in uPhi0 -> radians of loop phase
    env.a_flux_sqrt * 1e-6 * 2.0 * std::f64::consts::PI
}

const FLUX_STEP: f64 = 0.1;
const EJ_STEP: f64 = 0.05;
const FREQ_FLOOR_GHZ: f64 = 1e-9;

/// Assemble the dephasing table. `freq` returns the qubit frequency in GHz
/// at a shifted operating point and is re-invoked by the derivative
/// stencils; `spec`/`basis` feed the Aharonov-Casher structure factors;
/// `shot` is the resonator input when a readout configuration is in play.
pub fn dephasing_report(
    freq: &mut dyn FnMut(&CircuitParams, &FluxBias) -> Result<f64>,
    params: &CircuitParams,
    bias: &FluxBias,
    env: &NoiseEnvironment,
    spec: &Spectrum,
    basis: &ProductBasis,
    shot: Option<ShotNoiseInputs>,
) -> Result<DephasingReport> {
    let mut channels = Vec::new();
    let sqrt_a = flux_a_rad(env);

    // flux loops: first order vanishes at the double sweet spot, so both
    // orders are evaluated and added
    for (label, is_kite) in [("flux:fluxonium", false), ("flux:kite", true)] {
        let mut f = |x: f64| {
            let mut b = *bias;
            if is_kite {
                b.d_phi_ek = x;
            } else {
                b.d_phi_ef = x;
            }
            freq(params, &b)
        };
        let x0 = if is_kite { bias.d_phi_ek } else { bias.d_phi_ef };
        let r1 = dephasing_first_order(&mut f, x0, sqrt_a, FLUX_STEP, FREQ_FLOOR_GHZ)?;
        let r2 = dephasing_second_order(&mut f, x0, sqrt_a * sqrt_a, FLUX_STEP, FREQ_FLOOR_GHZ)?;
        channels.push(DephasingChannel {
            label: label.into(),
            gamma: r1.gamma + r2.gamma,
            diag: Some(r2.diag),
        });
    }

    // critical-current noise per junction, independent 1/f sources combined
    // in quadrature; fluctuations act on E_J alone (capacitances pinned)
    let mut frozen = params.clone();
    frozen.cap_lock = false;
    let mut cc_rates = Vec::new();
    for (label, junction) in
        [("cc:kite_jj_1", 0usize), ("cc:kite_jj_2", 1), ("cc:fluxonium_jj", 2)]
    {
        let e_j = match junction {
            0 => params.e_j1k(),
            1 => params.e_j2k(),
            _ => params.e_jf,
        };
        let mut f = |x: f64| {
            let mut p = frozen.clone();
            match junction {
                // vary one kite junction alone: e_j1k = e_jk + de/2,
                // e_j2k = e_jk - de/2
                0 => {
                    p.e_jk += 0.5 * x;
                    p.de_jk += x;
                }
                1 => {
                    p.e_jk += 0.5 * x;
                    p.de_jk -= x;
                }
                _ => p.e_jf += x,
            }
            freq(&p, bias)
        };
        let r = dephasing_first_order(&mut f, 0.0, env.a_ej_rel * e_j, EJ_STEP, FREQ_FLOOR_GHZ)?;
        cc_rates.push(r.gamma);
        channels.push(DephasingChannel { label: label.into(), gamma: r.gamma, diag: Some(r.diag) });
    }
    channels.push(DephasingChannel {
        label: "cc:total".into(),
        gamma: quadrature_sum(&cc_rates),
        diag: None,
    });

    // gate-charge dispersion
    let nu_0 = {
        let b = FluxBias { n_g: 0.0, ..*bias };
        freq(params, &b)?
    };
    let nu_half = {
        let b = FluxBias { n_g: 0.5, ..*bias };
        freq(params, &b)?
    };
    let disp = ChargeDispersion::from_extremes(nu_0, nu_half);
    channels.push(DephasingChannel {
        label: "charge:dispersion".into(),
        gamma: disp.gamma_conservative(env.a_ng_sqrt),
        diag: None,
    });
    channels.push(DephasingChannel {
        label: "charge:dispersion:averaged".into(),
        gamma: disp.gamma_averaged(env.a_ng_sqrt),
        diag: None,
    });

    if let Some(s) = shot {
        channels.push(DephasingChannel {
            label: "shot".into(),
            gamma: shot_noise_dephasing(s.chi_logical, s.kappa, s.n_th),
            diag: None,
        });
    }

    // Aharonov-Casher phase slips in the three superinductors
    let mut ac_sum = 0.0;
    for (label, which, n_array) in [
        ("ac:fluxonium", Superinductor::Fluxonium, params.n_array_f),
        ("ac:kite_1", Superinductor::Kite1, params.n_array_k),
        ("ac:kite_2", Superinductor::Kite2, params.n_array_k),
    ] {
        let gamma = aharonov_casher_dephasing(
            basis,
            spec,
            which,
            n_array,
            env.ej_array,
            env.ec_array,
        )?;
        ac_sum += gamma;
        channels.push(DephasingChannel { label: label.into(), gamma, diag: None });
    }
    channels.push(DephasingChannel { label: "ac:total".into(), gamma: ac_sum, diag: None });

    Ok(DephasingReport { channels })
}
