//! Spectral densities of the noise environments coupled to the circuit.
//!
//! Frequency arguments are signed transition frequencies `nu_if` in GHz,
//! with `nu_if = eps_i - eps_f`: positive means the circuit emits energy
//! into the bath, negative means it absorbs. Detailed balance at the bath
//! temperature relates the two signs, so downward rates always dominate
//! upward rates by the Boltzmann factor.

use crate::units::{thermal_energy_ghz, HBAR, PLANCK_H};
use num_complex::Complex64;

/// Fermi's golden rule: Gamma = |me|^2 S / hbar^2, in SI units. The caller
/// supplies the matrix element in the units whose square, multiplied by the
/// spectral density, yields (J s)^2 / s.
pub fn golden_rule(me: Complex64, s_at: f64) -> f64 {
    me.norm_sqr() * s_at / (HBAR * HBAR)
}

/// Bosonic occupation factors of the charge bath: 1/(1 - e^(-x)) on the
/// emission side and 1/(e^x - 1) on the absorption side, x = h|nu|/kT.
fn bosonic_factor(nu_ghz: f64, t_kelvin: f64) -> f64 {
    let x = nu_ghz.abs() / thermal_energy_ghz(t_kelvin);
    if nu_ghz >= 0.0 {
        // occupation + 1, written to stay finite for large x
        1.0 / (1.0 - (-x).exp())
    } else {
        1.0 / (x.exp() - 1.0)
    }
}

/// Default quasiparticle spectral-density model: thermalized quasiparticles
/// of density `x_qp` with gap `delta` and gap difference `d_delta` across
/// each junction. Above the gap-difference threshold the density follows
/// the standard sqrt(2 Delta / h nu) dependence; below it, transitions
/// require thermal activation across the residual energy mismatch. This is
/// a documented approximation standing in for externally tabulated forms,
/// and the same shape is used for the cos, sin, and linearized couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalQp {
    pub x_qp: f64,
    /// Superconducting gap, GHz.
    pub delta: f64,
    /// Gap difference across a junction, GHz.
    pub d_delta: f64,
    /// Quasiparticle temperature, K.
    pub t: f64,
}

impl ThermalQp {
    pub fn from_env(env: &crate::circuit::NoiseEnvironment) -> Self {
        ThermalQp { x_qp: env.x_qp, delta: env.delta, d_delta: env.d_delta, t: env.t }
    }

    fn magnitude(&self, nu_abs: f64) -> f64 {
        let kt = thermal_energy_ghz(self.t);
        let floor = self.d_delta.max(1e-6);
        if nu_abs >= floor {
            self.x_qp * (2.0 * self.delta / nu_abs).sqrt()
        } else {
            self.x_qp * (2.0 * self.delta / floor).sqrt() * (-(floor - nu_abs) / kt).exp()
        }
    }
}

/// Pluggable quasiparticle spectral densities (dimensionless), evaluated at
/// a signed transition frequency in GHz. No default is injected by the
/// engine; callers must pass a model explicitly.
pub trait QpModel {
    /// Density paired with the cos(phi_B/2) junction operator.
    fn s_cos(&self, nu_ghz: f64) -> f64;
    /// Density paired with the sin(phi_B/2) junction operator.
    fn s_sin(&self, nu_ghz: f64) -> f64;
    /// Density paired with the linearized superinductor phase operator.
    fn s_linear(&self, nu_ghz: f64) -> f64;
    /// Human-readable provenance string recorded in reports.
    fn describe(&self) -> String;
}

impl QpModel for ThermalQp {
    fn s_cos(&self, nu_ghz: f64) -> f64 {
        let boltz = if nu_ghz >= 0.0 {
            1.0
        } else {
            (-nu_ghz.abs() / thermal_energy_ghz(self.t)).exp()
        };
        self.magnitude(nu_ghz.abs()) * boltz
    }

    fn s_sin(&self, nu_ghz: f64) -> f64 {
        self.s_cos(nu_ghz)
    }

    fn s_linear(&self, nu_ghz: f64) -> f64 {
        self.s_cos(nu_ghz)
    }

    fn describe(&self) -> String {
        format!(
            "thermal-qp x_qp={} delta={}GHz d_delta={}GHz T={}K",
            self.x_qp, self.delta, self.d_delta, self.t
        )
    }
}

/// Named spectral-density families of the transition channels.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// Capacitor charge bath, S = (2 hbar C / Q) x bosonic factors.
    /// Evaluates to J s F.
    ChargeCapacitor { c_ff: f64, q_cap: f64, t: f64 },
    /// 1/f flux bath with detailed balance,
    /// S = (A_Phi/|omega|) * 2/(1 + e^(-h nu/kT)). Evaluates to Wb^2 s.
    FluxOneOverF { a_sqrt_uphi0: f64, t: f64 },
    /// Junction quasiparticle bath (dimensionless).
    QpJunction(ThermalQp),
    /// Superinductor quasiparticle bath (dimensionless).
    QpInductor(ThermalQp),
}

impl SpectralDensity {
    /// Evaluate at a signed transition frequency in GHz.
    pub fn eval(&self, nu_ghz: f64) -> f64 {
        match self {
            SpectralDensity::ChargeCapacitor { c_ff, q_cap, t } => {
                2.0 * HBAR * (c_ff * 1e-15) / q_cap * bosonic_factor(nu_ghz, *t)
            }
            SpectralDensity::FluxOneOverF { a_sqrt_uphi0, t } => {
                let a_phi = (a_sqrt_uphi0 * 1e-6 * crate::units::FLUX_QUANTUM).powi(2);
                let omega = crate::units::ghz_to_angular(nu_ghz).abs().max(f64::MIN_POSITIVE);
                let x = PLANCK_H * nu_ghz * 1e9 / (crate::units::BOLTZMANN_K * t);
                a_phi / omega * 2.0 / (1.0 + (-x).exp())
            }
            SpectralDensity::QpJunction(m) | SpectralDensity::QpInductor(m) => m.s_cos(nu_ghz),
        }
    }
}
