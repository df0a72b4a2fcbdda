//! Dispersive readout: level-repulsion dispersive shifts, the logical and
//! erasure shift combinations, and the erasure-check error budget.

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::units::{ghz_to_angular, thermal_energy_ghz};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Readout resonator and erasure-check settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfig {
    /// Bare resonator frequency, GHz.
    pub omega_r: f64,
    /// Qubit-resonator coupling, GHz.
    pub g_r: f64,
    /// Resonator linewidth, angular 1/s.
    pub kappa: f64,
    /// Steady photon number during an erasure check.
    pub n_bar_erasure: f64,
    /// Resonator temperature, K.
    pub t_res: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig {
            omega_r: 7.0,
            g_r: 0.3,
            kappa: 2.0 * std::f64::consts::PI * 0.5e6,
            n_bar_erasure: 5.0,
            t_res: 0.040,
        }
    }
}

impl ReadoutConfig {
    /// Thermal photon number of the resonator at its own frequency.
    pub fn n_thermal(&self) -> f64 {
        1.0 / ((self.omega_r / thermal_energy_ghz(self.t_res)).exp() - 1.0)
    }
}

/// Dispersive shifts of the resonator conditioned on the qubit level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersiveShifts {
    /// chi_i per level, GHz.
    pub chi: Vec<f64>,
    /// Set when the bare resonator sits within 10 kappa of a transition.
    pub resonance_warning: bool,
}

impl DispersiveShifts {
    /// Logical shift (chi_e - chi_g)/2, GHz.
    pub fn chi_logical(&self) -> f64 {
        0.5 * (self.chi[1] - self.chi[0])
    }

    /// Erasure shift (chi_f - chi_g)/2 against leakage level f, GHz.
    pub fn chi_erasure(&self) -> f64 {
        0.5 * (self.chi[2] - self.chi[0])
    }
}

/// Minimum spectrum size for a converged shift sum.
pub const MIN_SHIFT_STATES: usize = 10;

/// Second-order dispersive shifts from level repulsion:
/// chi_i = g_r^2 sum_{j != i} |n_ij|^2 2 w_ij / (w_ij^2 - w_r^2) with
/// w_ij = eps_j - eps_i, reported for the lowest `levels` states in GHz.
/// `n_mat` holds the coupling-operator matrix elements in the eigenbasis.
pub fn dispersive_shifts(
    spec: &Spectrum,
    n_mat: &DMatrix<Complex64>,
    cfg: &ReadoutConfig,
    levels: usize,
) -> Result<DispersiveShifts> {
    if spec.len() < MIN_SHIFT_STATES {
        return Err(Error::NotEnoughStates {
            have: spec.len(),
            need: MIN_SHIFT_STATES,
            context: "dispersive shift sum".into(),
        });
    }
    let k = spec.len();
    assert_eq!(n_mat.nrows(), k);
    let kappa_ghz = cfg.kappa / ghz_to_angular(1.0);
    let mut resonance_warning = false;
    let mut chi = Vec::with_capacity(levels);
    for i in 0..levels.min(k) {
        let mut s = 0.0;
        for j in 0..k {
            if j == i {
                continue;
            }
            let w_ij = spec.energies[j] - spec.energies[i];
            if (w_ij.abs() - cfg.omega_r).abs() < 10.0 * kappa_ghz {
                resonance_warning = true;
            }
            s += n_mat[(i, j)].norm_sqr() * 2.0 * w_ij
                / (w_ij * w_ij - cfg.omega_r * cfg.omega_r);
        }
        chi.push(cfg.g_r * cfg.g_r * s);
    }
    Ok(DispersiveShifts { chi, resonance_warning })
}

/// Error budget of a continuously monitored erasure check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureBudget {
    /// Erasure detection rate, 1/s.
    pub gamma_msmt: f64,
    /// Logical error probability per erasure-check lifetime.
    pub p_err: f64,
    /// The p_err formula requires chi_erasure >> kappa; false when
    /// chi_erasure < 3 kappa.
    pub p_err_valid: bool,
    /// Shot-noise dephasing during the check, 1/s.
    pub gamma_phi_sn: f64,
}

/// Closed-form erasure-check budget: Gamma_msmt = n_bar kappa / 2,
/// p_err = kappa^2 chi_logical^2 / (32 chi_erasure^4), plus the shot-noise
/// dephasing from the thermal resonator population. Shifts in angular 1/s.
pub fn erasure_budget(chi_logical: f64, chi_erasure: f64, cfg: &ReadoutConfig) -> ErasureBudget {
    let p_err = if chi_erasure == 0.0 {
        f64::INFINITY
    } else {
        cfg.kappa * cfg.kappa * chi_logical * chi_logical / (32.0 * chi_erasure.powi(4))
    };
    ErasureBudget {
        gamma_msmt: 0.5 * cfg.n_bar_erasure * cfg.kappa,
        p_err,
        p_err_valid: chi_erasure.abs() >= 3.0 * cfg.kappa,
        gamma_phi_sn: crate::noise::shot_noise_dephasing(chi_logical, cfg.kappa, cfg.n_thermal()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_level_embedded(omega_q: f64, n_ge: f64) -> (Spectrum, DMatrix<Complex64>) {
        // two coupled levels padded with far-detuned spectators carrying no
        // matrix elements, so the sum reduces to the textbook pair
        let k = MIN_SHIFT_STATES;
        let mut energies = vec![0.0, omega_q];
        energies.extend((2..k).map(|i| 1e6 + i as f64));
        let spec = Spectrum {
            energies,
            states: vec![Vec::new(); k],
            residuals: vec![0.0; k],
            basis_hash: String::new(),
            converged: vec![true; k],
            edge_masses: vec![0.0; k],
            tol: 1e-9,
        };
        let mut n_mat = DMatrix::<Complex64>::zeros(k, k);
        n_mat[(0, 1)] = Complex64::from(n_ge);
        n_mat[(1, 0)] = Complex64::from(n_ge);
        (spec, n_mat)
    }

    #[test]
    fn two_level_shifts_are_equal_and_opposite() {
        let (omega_q, n_ge) = (5.0, 0.4);
        let (spec, n_mat) = two_level_embedded(omega_q, n_ge);
        let cfg = ReadoutConfig { omega_r: 6.2, ..ReadoutConfig::default() };
        let d = dispersive_shifts(&spec, &n_mat, &cfg, 2).unwrap();
        let expected = cfg.g_r * cfg.g_r * n_ge * n_ge * 2.0 * omega_q
            / (omega_q * omega_q - cfg.omega_r * cfg.omega_r);
        assert_relative_eq!(d.chi[0], expected, max_relative = 1e-12);
        assert_relative_eq!(d.chi[1], -expected, max_relative = 1e-12);
        // large-detuning check against the +-g^2 n^2 (1/Delta + 1/Sigma) form
        let delta = omega_q - cfg.omega_r;
        let sigma = omega_q + cfg.omega_r;
        let textbook = cfg.g_r * cfg.g_r * n_ge * n_ge * (1.0 / delta + 1.0 / sigma);
        assert_relative_eq!(d.chi[0], textbook, max_relative = 1e-12);
    }

    #[test]
    fn shifts_scale_quadratically_and_evenly_in_the_coupling() {
        let (spec, n_mat) = two_level_embedded(5.0, 0.4);
        let base = ReadoutConfig { omega_r: 6.2, ..ReadoutConfig::default() };
        let d1 = dispersive_shifts(&spec, &n_mat, &base, 2).unwrap();
        let d2 = dispersive_shifts(
            &spec,
            &n_mat,
            &ReadoutConfig { g_r: 2.0 * base.g_r, ..base },
            2,
        )
        .unwrap();
        let dm = dispersive_shifts(&spec, &n_mat, &ReadoutConfig { g_r: -base.g_r, ..base }, 2)
            .unwrap();
        assert_relative_eq!(d2.chi[0], 4.0 * d1.chi[0], max_relative = 1e-12);
        assert_eq!(dm.chi, d1.chi);
        let d0 =
            dispersive_shifts(&spec, &n_mat, &ReadoutConfig { g_r: 0.0, ..base }, 2).unwrap();
        assert_eq!(d0.chi, vec![0.0, 0.0]);
    }

    #[test]
    fn near_resonant_configuration_is_flagged() {
        let (spec, n_mat) = two_level_embedded(5.0, 0.4);
        let far = ReadoutConfig { omega_r: 6.2, ..ReadoutConfig::default() };
        let near = ReadoutConfig { omega_r: 5.0 + 1e-9, ..far };
        assert!(!dispersive_shifts(&spec, &n_mat, &far, 2).unwrap().resonance_warning);
        assert!(dispersive_shifts(&spec, &n_mat, &near, 2).unwrap().resonance_warning);
    }

    #[test]
    fn short_spectra_are_rejected() {
        let (mut spec, n_mat) = two_level_embedded(5.0, 0.4);
        spec.energies.truncate(4);
        let cfg = ReadoutConfig::default();
        let err = dispersive_shifts(&spec, &n_mat, &cfg, 2);
        assert!(matches!(err, Err(Error::NotEnoughStates { have: 4, .. })));
    }

    #[test]
    fn erasure_budget_scalings() {
        let cfg = ReadoutConfig::default();
        let chi_er = 10.0 * cfg.kappa;
        let b = erasure_budget(0.0, chi_er, &cfg);
        assert_eq!(b.p_err, 0.0);
        assert!(b.p_err_valid);
        assert_relative_eq!(b.gamma_msmt, 0.5 * 5.0 * cfg.kappa, max_relative = 1e-12);

        // quartic law: doubling chi_erasure wins 16x
        let chi_log = 0.05 * chi_er;
        let b1 = erasure_budget(chi_log, chi_er, &cfg);
        let b2 = erasure_budget(chi_log, 2.0 * chi_er, &cfg);
        assert_relative_eq!(b1.p_err / b2.p_err, 16.0, max_relative = 1e-12);
        // quadratic in the logical shift
        let bh = erasure_budget(0.5 * chi_log, chi_er, &cfg);
        assert_relative_eq!(b1.p_err / bh.p_err, 4.0, max_relative = 1e-12);
        // validity cutoff
        assert!(!erasure_budget(chi_log, 2.9 * cfg.kappa, &cfg).p_err_valid);
    }

    #[test]
    fn shot_noise_in_budget_matches_small_chi_closed_form() {
        // chi << kappa: Gamma ~ 4 n_th chi^2 / kappa
        let cfg = ReadoutConfig::default();
        let chi = 1e-3 * cfg.kappa;
        let b = erasure_budget(chi, 10.0 * cfg.kappa, &cfg);
        let approx = 4.0 * cfg.n_thermal() * chi * chi / cfg.kappa;
        assert_relative_eq!(b.gamma_phi_sn, approx, max_relative = 1e-5);
    }
}
