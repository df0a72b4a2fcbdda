//! Golden-rule transition rates: charge, flux, and quasiparticle channels,
//! with per-element breakdowns.

use super::spectral::{QpModel, SpectralDensity};
use crate::basis::ProductBasis;
use crate::circuit::{
    build_branch_map, capacitance_matrix, Branch, CircuitParams, FluxBias, NoiseEnvironment,
    N_DOF,
};
use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::hamiltonian::{
    branch_phase_operator, charge_combination_operator, flux_derivative_operator, FluxLoop,
};
use crate::operator::SparseOperator;
use crate::units::{ELEM_CHARGE, HBAR, PLANCK_H, REDUCED_FLUX_QUANTUM};
use serde::{Deserialize, Serialize};

/// Minimum spectrum size for the heating sums of Table 1.
pub const MIN_STATES: usize = 8;

/// Transition rates of one noise coupling (one capacitor, loop, junction,
/// or inductor), in 1/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRates {
    pub label: String,
    /// Upward rate within the computational space.
    pub gamma_ge: f64,
    /// Downward rate within the computational space.
    pub gamma_eg: f64,
    /// Heating rate out of g to all higher states.
    pub gamma_g_up: f64,
    /// Heating rate out of e to all higher states.
    pub gamma_e_up: f64,
}

impl ChannelRates {
    pub fn zero(label: impl Into<String>) -> Self {
        ChannelRates {
            label: label.into(),
            gamma_ge: 0.0,
            gamma_eg: 0.0,
            gamma_g_up: 0.0,
            gamma_e_up: 0.0,
        }
    }

    /// Bit-flip rate Gamma_1 = Gamma_{g->e} + Gamma_{e->g}.
    pub fn gamma_1(&self) -> f64 {
        self.gamma_ge + self.gamma_eg
    }

    /// Total heating rate out of the computational space, averaged over the
    /// two computational states.
    pub fn gamma_up(&self) -> f64 {
        0.5 * (self.gamma_g_up + self.gamma_e_up)
    }

    pub fn add(&mut self, other: &ChannelRates) {
        self.gamma_ge += other.gamma_ge;
        self.gamma_eg += other.gamma_eg;
        self.gamma_g_up += other.gamma_g_up;
        self.gamma_e_up += other.gamma_e_up;
    }
}

/// Sum a set of channel rows into an aggregate row.
pub fn sum_channels(label: impl Into<String>, rows: &[ChannelRates]) -> ChannelRates {
    let mut total = ChannelRates::zero(label);
    for r in rows {
        total.add(r);
    }
    total
}

fn require_states(spec: &Spectrum, context: &str) -> Result<()> {
    if spec.len() < MIN_STATES {
        return Err(Error::NotEnoughStates {
            have: spec.len(),
            need: MIN_STATES,
            context: context.into(),
        });
    }
    Ok(())
}

/// Golden-rule rows for one coupling operator. `kernel(nu_if)` is the rate
/// per squared matrix element at the signed transition frequency (GHz),
/// already carrying all prefactors, so Gamma_{i->f} = |<f|O|i>|^2 kernel.
fn channel_rows(
    spec: &Spectrum,
    op: &SparseOperator,
    label: &str,
    kernel: impl Fn(f64) -> f64,
) -> ChannelRates {
    let mut rates = ChannelRates::zero(label);
    let me2 = |i: usize, f: usize| op.expectation(&spec.states[f], &spec.states[i]).norm_sqr();
    let nu = |i: usize, f: usize| spec.energies[i] - spec.energies[f];
    rates.gamma_ge = me2(0, 1) * kernel(nu(0, 1));
    rates.gamma_eg = me2(1, 0) * kernel(nu(1, 0));
    for f in 2..spec.len() {
        rates.gamma_g_up += me2(0, f) * kernel(nu(0, f));
        rates.gamma_e_up += me2(1, f) * kernel(nu(1, f));
    }
    rates
}

/// Branch-voltage operator of one capacitor, in volts:
/// V_B = 2e m_B C^-1 n_D with the branch row m_B and C^-1 in 1/fF.
pub fn branch_voltage_operator(
    basis: &ProductBasis,
    row: [f64; N_DOF],
    c_inv: &nalgebra::Matrix4<f64>,
) -> SparseOperator {
    let mut weights = [0.0; N_DOF];
    for (b, w) in weights.iter_mut().enumerate() {
        for (a, m) in row.iter().enumerate() {
            *w += m * c_inv[(a, b)];
        }
    }
    // 1/fF -> 1/F brings the prefactor to volts
    charge_combination_operator(basis, weights).scaled(2.0 * ELEM_CHARGE * 1e15)
}

/// Golden-rule rows for a single capacitor given its voltage operator (V)
/// and capacitance (fF). Exposed for oracle tests against the linear-circuit
/// limit Gamma = omega/Q.
pub fn capacitor_rates(
    spec: &Spectrum,
    v_op: &SparseOperator,
    c_ff: f64,
    env: &NoiseEnvironment,
    label: &str,
) -> ChannelRates {
    let s = SpectralDensity::ChargeCapacitor { c_ff, q_cap: env.q_cap, t: env.t };
    channel_rows(spec, v_op, label, |nu| s.eval(nu) / (HBAR * HBAR))
}

/// Charge-noise transition rates, one row per capacitor plus the sum.
pub fn charge_transition_rates(
    spec: &Spectrum,
    params: &CircuitParams,
    basis: &ProductBasis,
    env: &NoiseEnvironment,
) -> Result<Vec<ChannelRates>> {
    require_states(spec, "charge transition heating sums")?;
    let cm = capacitance_matrix(params)?;
    let map = build_branch_map();
    let capacitors = [
        ("charge:shunt", Branch::Shunt, params.c_sh),
        ("charge:fluxonium_jj", Branch::FluxoniumJunction, params.c_jf),
        ("charge:kite_jj_1", Branch::Kite1Junction, params.c_jk),
        ("charge:kite_jj_2", Branch::Kite2Junction, params.c_jk),
    ];
    let mut rows = Vec::with_capacity(capacitors.len() + 1);
    for (label, branch, c_ff) in capacitors {
        let v_op = branch_voltage_operator(basis, map.row(branch), &cm.c_inv);
        rows.push(capacitor_rates(spec, &v_op, c_ff, env, label));
    }
    rows.push(sum_channels("charge:total", &rows));
    Ok(rows)
}

/// Flux-noise transition rates, one row per loop plus the sum. The coupling
/// operator is dH/d(delta Phi) = (2 pi / Phi0) dH/d(delta phi), converted
/// from GHz/rad to J/Wb.
pub fn flux_transition_rates(
    spec: &Spectrum,
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    env: &NoiseEnvironment,
) -> Result<Vec<ChannelRates>> {
    require_states(spec, "flux transition heating sums")?;
    let s = SpectralDensity::FluxOneOverF { a_sqrt_uphi0: env.a_flux_sqrt, t: env.t };
    let loops = [("flux:fluxonium_loop", FluxLoop::Fluxonium), ("flux:kite_loop", FluxLoop::Kite)];
    let mut rows = Vec::with_capacity(loops.len() + 1);
    for (label, which) in loops {
        let op = flux_derivative_operator(params, bias, basis, which)
            .scaled(PLANCK_H * 1e9 / REDUCED_FLUX_QUANTUM);
        rows.push(channel_rows(spec, &op, label, |nu| s.eval(nu) / (HBAR * HBAR)));
    }
    rows.push(sum_channels("flux:total", &rows));
    Ok(rows)
}

/// Quasiparticle transition rates: cos/sin(phi_B/2) tunneling across the
/// three junctions and linearized-phase coupling in the three
/// superinductors, plus the sum. The spectral-density model is mandatory.
pub fn qp_transition_rates(
    spec: &Spectrum,
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    model: Option<&dyn QpModel>,
) -> Result<Vec<ChannelRates>> {
    require_states(spec, "quasiparticle heating sums")?;
    let model = model.ok_or(Error::MissingQpModel)?;
    let junctions = [
        ("qp:fluxonium_jj", Branch::FluxoniumJunction, params.e_jf),
        ("qp:kite_jj_1", Branch::Kite1Junction, params.e_j1k()),
        ("qp:kite_jj_2", Branch::Kite2Junction, params.e_j2k()),
    ];
    let inductors = [
        ("qp:fluxonium_inductor", Branch::FluxoniumInductor, params.e_lf),
        ("qp:kite_inductor_1", Branch::Kite1Inductor, params.e_lk),
        ("qp:kite_inductor_2", Branch::Kite2Inductor, params.e_lk),
    ];
    let mut rows = Vec::with_capacity(junctions.len() + inductors.len() + 1);
    for (label, branch, e_j) in junctions {
        let cos_op = branch_phase_operator(bias, basis, branch, 0.5, f64::cos);
        let sin_op = branch_phase_operator(bias, basis, branch, 0.5, f64::sin);
        // 16 E_J / h with E_J = h nu: prefactor 16 nu in 1/s for nu in GHz
        let pre = 16.0 * e_j * 1e9;
        let mut row = channel_rows(spec, &cos_op, label, |nu| pre * model.s_cos(nu));
        row.add(&channel_rows(spec, &sin_op, label, |nu| pre * model.s_sin(nu)));
        rows.push(row);
    }
    for (label, branch, e_l) in inductors {
        let phi_op = branch_phase_operator(bias, basis, branch, 1.0, |x| x);
        let pre = 4.0 * e_l * 1e9;
        rows.push(channel_rows(spec, &phi_op, label, |nu| pre * model.s_linear(nu)));
    }
    rows.push(sum_channels("qp:total", &rows));
    Ok(rows)
}
