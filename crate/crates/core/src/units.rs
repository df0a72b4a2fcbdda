//! Unit conventions and physical constants.
//!
//! Every energy in this crate is stored as a frequency in GHz (implicitly
//! times Planck's constant h), every capacitance in fF, every phase in
//! radians, every temperature in K, and every rate in 1/s. All conversions
//! between these conventions live in this module and nowhere else.

/// Planck constant, J s.
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK_H / (2.0 * std::f64::consts::PI);

/// Elementary charge, C.
pub const ELEM_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant, J/K.
pub const BOLTZMANN_K: f64 = 1.380_649e-23;

/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK_H / (2.0 * ELEM_CHARGE);

/// Reduced flux quantum Phi0/2pi, Wb.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * std::f64::consts::PI);

/// Charging energy E_C = e^2/2C of a capacitance given in fF, returned in GHz.
pub fn charging_energy_ghz(c_ff: f64) -> f64 {
    ELEM_CHARGE * ELEM_CHARGE / (2.0 * c_ff * 1e-15 * PLANCK_H) * 1e-9
}

/// Prefactor of the kinetic quadratic form (2e)^2/2 in GHz per (1/fF).
///
/// The kinetic Hamiltonian is `kinetic_prefactor_ghz() * n^T (C in fF)^-1 n`.
/// For a single mode this reduces to the familiar `4 E_C n^2`.
pub fn kinetic_prefactor_ghz() -> f64 {
    // (2e)^2 / 2 / h, expressed in GHz * fF
    2.0 * ELEM_CHARGE * ELEM_CHARGE / PLANCK_H * 1e15 * 1e-9
}

/// Thermal energy k_B T of a temperature in K, returned in GHz.
pub fn thermal_energy_ghz(t_kelvin: f64) -> f64 {
    BOLTZMANN_K * t_kelvin / PLANCK_H * 1e-9
}

/// Angular frequency in rad/s of a transition energy given in GHz.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_ghz * 1e9
}

/// Bose-Einstein occupation of a mode at |f| GHz and temperature T in K.
pub fn bose_occupation(f_ghz: f64, t_kelvin: f64) -> f64 {
    let x = f_ghz.abs() / thermal_energy_ghz(t_kelvin);
    1.0 / (x.exp() - 1.0)
}
