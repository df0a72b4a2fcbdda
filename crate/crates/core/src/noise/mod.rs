//! Decoherence engine: spectral densities, golden-rule transition rates,
//! and 1/f / shot-noise / phase-slip dephasing channels.

pub mod dephasing;
pub mod report;
pub mod spectral;
pub mod transitions;

pub use dephasing::{
    aharonov_casher_dephasing, dephasing_first_order, dephasing_second_order, derivative_first,
    derivative_second, phase_slip_amplitude_ghz, quadrature_sum, shot_noise_dephasing,
    structure_factor, ChargeDispersion, DephasingRate, StencilDiag, Superinductor,
};
pub use report::{
    dephasing_report, transition_report, DephasingChannel, DephasingReport, RateReport,
    ShotNoiseInputs,
};
pub use spectral::{golden_rule, QpModel, SpectralDensity, ThermalQp};
pub use transitions::{
    capacitor_rates, charge_transition_rates, flux_transition_rates, qp_transition_rates,
    sum_channels, ChannelRates, MIN_STATES,
};

use crate::error::Result;

// 5-node Gauss-Hermite quadrature (nodes of H_5, weights for exp(-t^2))
pub const GH_NODES: [f64; 5] =
    [0.0, 0.95857246461381851, -0.95857246461381851, 2.0201828704560856, -2.0201828704560856];
pub const GH_WEIGHTS: [f64; 5] =
    [0.94530872048294190, 0.39361932315224116, 0.39361932315224116, 0.019953242059045913,
        0.019953242059045913];

/// Mean of `f` over a Gaussian-distributed parameter of standard deviation
/// `sigma` centered at zero, by 5-node Gauss-Hermite quadrature. Used to
/// average figures of merit over fabrication scatter of the kite asymmetry.
pub fn asymmetry_average(sigma: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if sigma == 0.0 {
        return f(0.0);
    }
    let mut acc = 0.0;
    for (t, w) in GH_NODES.iter().zip(GH_WEIGHTS) {
        acc += w * f(std::f64::consts::SQRT_2 * sigma * t)?;
    }
    Ok(acc / std::f64::consts::PI.sqrt())
}
