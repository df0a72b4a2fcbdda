//! Echo dephasing rates: 1/f charge, flux, and critical-current channels
//! via frequency derivatives, resonator shot noise, and Aharonov-Casher
//! phase slips in the superinductors.

use crate::basis::{ProductBasis, DOF_DELTA_K, DOF_PHI_F, DOF_SIGMA_K};
use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::operator::shift_state;
use crate::units::ghz_to_angular;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Diagnostics of a converged derivative stencil.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StencilDiag {
    /// Accepted derivative (finest step).
    pub value: f64,
    /// Previous (coarser) estimate it was checked against.
    pub coarse: f64,
    /// Step the accepted value was computed at.
    pub step: f64,
}

const MAX_HALVINGS: usize = 8;
const AGREEMENT: f64 = 0.05;

fn five_point_first(f: &mut dyn FnMut(f64) -> Result<f64>, x0: f64, h: f64) -> Result<f64> {
    let (f2p, f1p, f1m, f2m) = (f(x0 + 2.0 * h)?, f(x0 + h)?, f(x0 - h)?, f(x0 - 2.0 * h)?);
    Ok((-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12.0 * h))
}

fn five_point_second(f: &mut dyn FnMut(f64) -> Result<f64>, x0: f64, h: f64) -> Result<f64> {
    let f0 = f(x0)?;
    let (f2p, f1p, f1m, f2m) = (f(x0 + 2.0 * h)?, f(x0 + h)?, f(x0 - h)?, f(x0 - 2.0 * h)?);
    Ok((-f2p + 16.0 * f1p - 30.0 * f0 + 16.0 * f1m - f2m) / (12.0 * h * h))
}

fn converge_stencil(
    mut eval: impl FnMut(f64) -> Result<f64>,
    h0: f64,
    scale: f64,
    what: &str,
) -> Result<StencilDiag> {
    let mut h = h0;
    let mut coarse = eval(h)?;
    for _ in 0..MAX_HALVINGS {
        h *= 0.5;
        let fine = eval(h)?;
        if (fine - coarse).abs() <= AGREEMENT * fine.abs().max(scale) {
            return Ok(StencilDiag { value: fine, coarse, step: h });
        }
        coarse = fine;
    }
    Err(Error::DerivativeNonConvergence(format!(
        "{what}: estimates did not stabilize (last {coarse} at step {h}, floor {scale})"
    )))
}

/// First derivative by a 5-point central stencil with step-halving until
/// successive estimates agree within 5% (or within the absolute floor
/// `scale`, for derivatives that vanish at a sweet spot).
pub fn derivative_first(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    x0: f64,
    h0: f64,
    scale: f64,
) -> Result<StencilDiag> {
    converge_stencil(|h| five_point_first(f, x0, h), h0, scale, "first derivative")
}

/// Second derivative, same convergence protocol.
pub fn derivative_second(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    x0: f64,
    h0: f64,
    scale: f64,
) -> Result<StencilDiag> {
    converge_stencil(|h| five_point_second(f, x0, h), h0, scale, "second derivative")
}

/// Echo dephasing rate of one 1/f channel, with the derivative diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingRate {
    /// Rate, 1/s.
    pub gamma: f64,
    /// The frequency derivative behind it, angular (rad/s per unit of x
    /// for first order, per unit^2 for second order).
    pub derivative: f64,
    pub diag: StencilDiag,
}

impl DephasingRate {
    pub fn t_phi_s(&self) -> f64 {
        1.0 / self.gamma
    }
}

/// First-order 1/f dephasing: Gamma = sqrt(A) |d omega_q / dx|. `freq_fn`
/// returns the qubit frequency in GHz at a shifted parameter value;
/// `scale_ghz` is the absolute floor for the derivative (in GHz per unit x)
/// below which it counts as a sweet spot.
pub fn dephasing_first_order(
    freq_fn: &mut dyn FnMut(f64) -> Result<f64>,
    x0: f64,
    sqrt_a: f64,
    h0: f64,
    scale_ghz: f64,
) -> Result<DephasingRate> {
    let diag = derivative_first(freq_fn, x0, h0, scale_ghz)?;
    let derivative = ghz_to_angular(diag.value);
    Ok(DephasingRate { gamma: sqrt_a * derivative.abs(), derivative, diag })
}

/// Second-order 1/f dephasing: Gamma = A |d^2 omega_q / dx^2|.
pub fn dephasing_second_order(
    freq_fn: &mut dyn FnMut(f64) -> Result<f64>,
    x0: f64,
    a: f64,
    h0: f64,
    scale_ghz: f64,
) -> Result<DephasingRate> {
    let diag = derivative_second(freq_fn, x0, h0, scale_ghz)?;
    let derivative = ghz_to_angular(diag.value);
    Ok(DephasingRate { gamma: a * derivative.abs(), derivative, diag })
}

/// Quadrature combination of independent 1/f dephasing rates.
pub fn quadrature_sum(rates: &[f64]) -> f64 {
    rates.iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// Gate-charge dephasing from the cosine dispersion law
/// omega_q(n_g) = omega_0 + delta_omega cos(2 pi n_g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeDispersion {
    /// Half the peak-to-peak frequency excursion, GHz.
    pub delta_nu: f64,
    /// Mean qubit frequency, GHz.
    pub nu_mean: f64,
}

impl ChargeDispersion {
    /// Build from diagonalizations at the two dispersion extremes.
    pub fn from_extremes(nu_at_0: f64, nu_at_half: f64) -> Self {
        ChargeDispersion {
            delta_nu: 0.5 * (nu_at_0 - nu_at_half),
            nu_mean: 0.5 * (nu_at_0 + nu_at_half),
        }
    }

    /// Qubit frequency at a gate charge, GHz.
    pub fn freq(&self, n_g: f64) -> f64 {
        self.nu_mean + self.delta_nu * (2.0 * std::f64::consts::PI * n_g).cos()
    }

    /// Instantaneous first-order rate at a gate charge:
    /// Gamma = sqrt(A_ng) |2 pi delta_omega sin(2 pi n_g)|.
    pub fn gamma_at(&self, n_g: f64, sqrt_a_ng: f64) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        sqrt_a_ng * (two_pi * ghz_to_angular(self.delta_nu) * (two_pi * n_g).sin()).abs()
    }

    /// The conservative worst-case bias n_g = 0.25.
    pub fn gamma_conservative(&self, sqrt_a_ng: f64) -> f64 {
        self.gamma_at(0.25, sqrt_a_ng)
    }

    /// Rate averaged over a uniformly diffusing gate charge: the mean of
    /// |sin| is 2/pi of its peak.
    pub fn gamma_averaged(&self, sqrt_a_ng: f64) -> f64 {
        self.gamma_conservative(sqrt_a_ng) * 2.0 / std::f64::consts::PI
    }
}

/// Shot-noise dephasing from thermal photons in the readout resonator:
/// Gamma = n_th kappa chi^2 / (kappa^2/4 + chi^2). `chi` and `kappa` in
/// angular 1/s.
pub fn shot_noise_dephasing(chi: f64, kappa: f64, n_th: f64) -> f64 {
    if chi == 0.0 {
        return 0.0;
    }
    n_th * kappa * chi * chi / (kappa * kappa / 4.0 + chi * chi)
}

/// Phase-slip dispersion amplitude of one array junction, GHz:
/// eps_ps = (4 sqrt(2)/pi) hbar omega_p sqrt(1/z) e^(-4/(pi z)) with
/// hbar omega_p = sqrt(8 E_J E_C) and z = sqrt(8 E_C/E_J)/(2 pi).
pub fn phase_slip_amplitude_ghz(ej_array: f64, ec_array: f64) -> f64 {
    let hbar_wp = (8.0 * ej_array * ec_array).sqrt();
    let z = (8.0 * ec_array / ej_array).sqrt() / (2.0 * std::f64::consts::PI);
    4.0 * std::f64::consts::SQRT_2 / std::f64::consts::PI
        * hbar_wp
        * (1.0 / z).sqrt()
        * (-4.0 / (std::f64::consts::PI * z)).exp()
}

/// The three superinductors and their phase-slip shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Superinductor {
    Fluxonium,
    Kite1,
    Kite2,
}

impl Superinductor {
    /// (degree of freedom, shift in radians) pairs of one phase slip.
    pub fn shifts(self) -> Vec<(usize, f64)> {
        use std::f64::consts::PI;
        match self {
            Superinductor::Fluxonium => vec![(DOF_PHI_F, -2.0 * PI)],
            Superinductor::Kite1 => vec![(DOF_SIGMA_K, -PI), (DOF_DELTA_K, -PI)],
            Superinductor::Kite2 => vec![(DOF_SIGMA_K, -PI), (DOF_DELTA_K, PI)],
        }
    }
}

/// Structure factor F_ge = <e|e'> - <g|g'> where the primed states carry
/// the listed grid shifts. Errors if a shift is not a whole number of grid
/// points.
pub fn structure_factor(
    basis: &ProductBasis,
    spec: &Spectrum,
    shifts: &[(usize, f64)],
) -> Result<Complex64> {
    if spec.len() < 2 {
        return Err(Error::NotEnoughStates {
            have: spec.len(),
            need: 2,
            context: "structure factor".into(),
        });
    }
    let mut overlaps = [Complex64::ZERO; 2];
    for (k, ov) in overlaps.iter_mut().enumerate() {
        let mut shifted = spec.states[k].clone();
        for &(dof, theta) in shifts {
            let points = basis.specs[dof].points_in_shift(theta, crate::hamiltonian::dof_name(dof))?;
            shifted = shift_state(basis, &shifted, dof, points);
        }
        *ov = spec.states[k].iter().zip(&shifted).map(|(a, b)| a.conj() * b).sum();
    }
    Ok(overlaps[1] - overlaps[0])
}

/// Aharonov-Casher dephasing of one superinductor:
/// Gamma = pi sqrt(N_array) eps_ps |F_ge|.
pub fn aharonov_casher_dephasing(
    basis: &ProductBasis,
    spec: &Spectrum,
    which: Superinductor,
    n_array: usize,
    ej_array: f64,
    ec_array: f64,
) -> Result<f64> {
    let f_ge = structure_factor(basis, spec, &which.shifts())?;
    let eps = ghz_to_angular(phase_slip_amplitude_ghz(ej_array, ec_array));
    Ok(std::f64::consts::PI * (n_array as f64).sqrt() * eps * f_ge.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let (a, b, x0) = (0.7, -2.3, 0.4);
        let mut f = |x: f64| Ok(a + b * (x - x0) * (x - x0));
        let d1 = derivative_first(&mut f, x0, 0.05, 1e-9).unwrap();
        let d2 = derivative_second(&mut f, x0, 0.05, 1e-9).unwrap();
        assert!(d1.value.abs() < 1e-8, "first derivative {}", d1.value);
        assert_relative_eq!(d2.value, 2.0 * b, epsilon = 1e-8);
    }

    #[test]
    fn first_order_rate_scales_with_amplitude_and_slope() {
        let mut f = |x: f64| Ok(5.0 + 0.3 * x);
        let r = dephasing_first_order(&mut f, 0.0, 2e-6, 0.01, 1e-12).unwrap();
        assert_relative_eq!(r.gamma, 2e-6 * ghz_to_angular(0.3), max_relative = 1e-6);
    }

    #[test]
    fn nonsmooth_function_fails_with_diagnostics() {
        // |x| has no stable stencil derivative at 0 at any step size
        let mut f = |x: f64| Ok(x.abs());
        let err = derivative_second(&mut f, 0.0, 0.1, 1e-12);
        assert!(matches!(err, Err(Error::DerivativeNonConvergence(_))));
    }

    #[test]
    fn dispersion_model_is_periodic_and_even() {
        let d = ChargeDispersion::from_extremes(5.0002, 5.0000);
        assert_relative_eq!(d.freq(0.3), d.freq(0.7), epsilon = 1e-9);
        assert_relative_eq!(d.freq(0.3), d.freq(1.3), epsilon = 1e-9);
        assert_relative_eq!(d.freq(-0.2), d.freq(0.2), epsilon = 1e-9);
        // worst case at n_g = 0.25, zero slope at the extremes
        assert_eq!(d.gamma_at(0.0, 1e-4), 0.0);
        assert!(d.gamma_conservative(1e-4) > d.gamma_at(0.1, 1e-4));
    }

    #[test]
    fn gate_charge_averaging_gives_a_modest_improvement() {
        let d = ChargeDispersion::from_extremes(5.0002, 5.0000);
        let improvement = d.gamma_conservative(1e-4) / d.gamma_averaged(1e-4) - 1.0;
        assert!((0.3..0.7).contains(&improvement), "improvement {improvement}");
    }

    #[test]
    fn shot_noise_limits() {
        assert_eq!(shot_noise_dephasing(0.0, 1e6, 0.1), 0.0);
        // chi >> kappa saturates at n_th kappa
        let g = shot_noise_dephasing(1e9, 1e5, 0.07);
        assert_relative_eq!(g, 0.07 * 1e5, max_relative = 1e-6);
        // chi << kappa limit: 4 n_th chi^2 / kappa
        let g = shot_noise_dephasing(10.0, 1e6, 0.07);
        assert_relative_eq!(g, 4.0 * 0.07 * 100.0 / 1e6, max_relative = 1e-6);
    }

    fn toy_spectrum() -> (crate::basis::ProductBasis, Spectrum) {
        let basis = crate::basis::ProductBasis::new([
            BasisSpec::Periodic { count: 4 },
            BasisSpec::Open { n: 4, delta: PI / 2.0 },
            BasisSpec::Open { n: 2, delta: PI / 2.0 },
            BasisSpec::Open { n: 2, delta: PI / 2.0 },
        ])
        .unwrap();
        let dim = basis.dim();
        let mut states = Vec::new();
        let mut rng = 1234567u64;
        for _ in 0..2 {
            let mut v: Vec<num_complex::Complex64> = (0..dim)
                .map(|_| {
                    rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    num_complex::Complex64::new(
                        ((rng >> 33) as f64) / (1u64 << 31) as f64 - 1.0,
                        ((rng >> 13) as f64 % 65536.0) / 32768.0 - 1.0,
                    )
                })
                .collect();
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut v {
                *z /= n;
            }
            states.push(v);
        }
        let spec = Spectrum {
            energies: vec![0.0, 1e-3],
            states,
            residuals: vec![0.0, 0.0],
            basis_hash: basis.spec_hash(),
            converged: vec![true, true],
            edge_masses: vec![0.0, 0.0],
            tol: 1e-7,
        };
        (basis, spec)
    }

    #[test]
    fn structure_factor_bounds_and_identity_shift() {
        let (basis, spec) = toy_spectrum();
        let f0 = structure_factor(&basis, &spec, &[(DOF_PHI_F, 0.0)]).unwrap();
        assert!(f0.norm() < 1e-12, "identity shift gave {f0}");
        for which in [Superinductor::Fluxonium, Superinductor::Kite1, Superinductor::Kite2] {
            let f = structure_factor(&basis, &spec, &which.shifts()).unwrap();
            assert!(f.norm() <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn incommensurate_shift_is_rejected() {
        let basis = crate::basis::ProductBasis::new([
            BasisSpec::Periodic { count: 4 },
            BasisSpec::Open { n: 4, delta: 1.0 },
            BasisSpec::Open { n: 2, delta: PI / 2.0 },
            BasisSpec::Open { n: 2, delta: PI / 2.0 },
        ])
        .unwrap();
        let (_, spec) = toy_spectrum();
        let err = structure_factor(&basis, &spec, &[(DOF_PHI_F, -2.0 * PI)]);
        assert!(matches!(err, Err(Error::IncommensurateGrid { .. })));
    }

    #[test]
    fn phase_slip_amplitude_decays_with_array_impedance() {
        // heavier junctions (larger E_J/E_C) slip exponentially less
        let light = phase_slip_amplitude_ghz(10.0, 1.2);
        let heavy = phase_slip_amplitude_ghz(60.0, 1.2);
        assert!(heavy < light * 1e-2, "heavy {heavy} vs light {light}");
        assert!(heavy > 0.0);
    }

    #[test]
    fn quadrature_sum_dominated_by_largest() {
        let total = quadrature_sum(&[3.0, 4.0]);
        assert_relative_eq!(total, 5.0, epsilon = 1e-12);
        assert_eq!(quadrature_sum(&[]), 0.0);
    }
}
