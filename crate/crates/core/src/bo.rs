//! Reduced two-variable model of the circuit and its Born-Oppenheimer
//! treatment, plus the one-dimensional two-harmonic toy model.
//!
//! The fast degree of freedom (the fluxonium phase) is solved on an open
//! grid with a sinc-DVR kinetic matrix, which converges exponentially in
//! the grid spacing and makes the 1e-6 GHz convergence contract cheap.
//! The slow rotor reuses the finite-difference machinery of the full
//! model. The toy model is assembled in the charge basis, which is exact
//! for a single periodic variable.

use crate::basis::{BasisSpec, ProductBasis};
use crate::eigen::{dense_lowest_k, Spectrum};
use crate::error::{Error, Result};
use crate::hamiltonian::kinetic_operator;
use crate::operator::SparseOperator;
use crate::units;
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Parameters of the reduced two-variable circuit model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    /// Charging energy of the slow phase, GHz.
    pub e_c: f64,
    /// Charging energy of the fluxonium phase, GHz.
    pub e_cf: f64,
    /// Fluxonium inductive energy, GHz.
    pub e_l: f64,
    /// Fluxonium Josephson energy, GHz.
    pub e_j: f64,
    /// Second-harmonic kite energy, GHz (positive in this convention).
    pub e_j2k: f64,
    /// First-harmonic kite asymmetry energy, GHz.
    pub e_j1k: f64,
    /// Fluxonium loop flux, radians.
    pub phi_ef: f64,
    /// Kite loop flux, radians.
    pub phi_ek: f64,
    /// Gate charge, Cooper pairs.
    pub n_g: f64,
}

impl ReducedParams {
    /// A representative point deep enough in the BO regime for the
    /// qualitative structure (double wells at phi = 0, pi) to appear.
    pub fn representative() -> Self {
        ReducedParams {
            e_c: 0.005,
            e_cf: 2.5,
            e_l: 0.6,
            e_j: 1.0,
            e_j2k: 5.0,
            e_j1k: 0.3,
            phi_ef: PI,
            phi_ek: PI,
            n_g: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("e_c", self.e_c),
            ("e_cf", self.e_cf),
            ("e_l", self.e_l),
            ("e_j", self.e_j),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The model is built on E_C << E_Cf; outside that regime the
    /// adiabatic elimination is unjustified. Advisory only.
    pub fn bo_regime_warning(&self) -> Option<String> {
        if self.e_c * 5.0 > self.e_cf {
            Some(format!(
                "BO regime requires E_C << E_Cf; got E_C = {} GHz, E_Cf = {} GHz",
                self.e_c, self.e_cf
            ))
        } else {
            None
        }
    }
}

/// Fast potential at slow phase `phi`:
/// E_L/2 phi_f^2 - E_J cos(phi_ef - phi_f)
/// + E_J2k cos 2(phi - phi_f) - E_J1k cos(phi - phi_f).
fn fast_potential(p: &ReducedParams, phi: f64, phi_f: f64) -> f64 {
    0.5 * p.e_l * phi_f * phi_f - p.e_j * (p.phi_ef - phi_f).cos()
        + p.e_j2k * (2.0 * (phi - phi_f)).cos()
        - p.e_j1k * (phi - phi_f).cos()
}

/// Ground pair (energy, wavefunction) of `4 E_Cf n_f^2 + V(phi_f)` on an
/// open sinc-DVR grid of `2n + 1` points with spacing `delta`.
fn dvr_ground(e_cf: f64, n: usize, delta: f64, v: impl Fn(f64) -> f64) -> (f64, Vec<f64>) {
    let len = 2 * n + 1;
    let coeff = 4.0 * e_cf / (delta * delta);
    let mut h = DMatrix::<f64>::zeros(len, len);
    for i in 0..len {
        let phi_f = (i as f64 - n as f64) * delta;
        h[(i, i)] = coeff * PI * PI / 3.0 + v(phi_f);
        for j in 0..i {
            let d = (i - j) as f64;
            let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
            let t = coeff * sign * 2.0 / (d * d);
            h[(i, j)] = t;
            h[(j, i)] = t;
        }
    }
    let eig = h.symmetric_eigen();
    let mut best = 0;
    for i in 1..len {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut state: Vec<f64> = (0..len).map(|i| eig.eigenvectors[(i, best)]).collect();
    // deterministic sign: largest-magnitude entry positive
    let anchor = state
        .iter()
        .cloned()
        .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if anchor < 0.0 {
        for s in &mut state {
            *s = -*s;
        }
    }
    (eig.eigenvalues[best], state)
}

/// Half-extent of the fast grid, radians.
const FAST_EXTENT: f64 = 4.0 * PI;

fn fast_ground_refined(
    e_cf: f64,
    tol: f64,
    v: impl Fn(f64) -> f64 + Copy,
) -> (f64, Vec<f64>, f64) {
    let mut delta = PI / 8.0;
    let mut n = (FAST_EXTENT / delta).round() as usize;
    let (mut energy, mut state) = dvr_ground(e_cf, n, delta, v);
    for _ in 0..4 {
        let delta2 = delta / 2.0;
        let n2 = 2 * n;
        let (e2, s2) = dvr_ground(e_cf, n2, delta2, v);
        let change = (e2 - energy).abs();
        energy = e2;
        state = s2;
        delta = delta2;
        n = n2;
        if change < tol {
            break;
        }
    }
    (energy, state, delta)
}

/// Ground energy of the fast Hamiltonian at slow phase `phi`, converged
/// to 1e-6 GHz under grid refinement.
pub fn h_fast_ground(phi: f64, p: &ReducedParams) -> Result<f64> {
    p.validate()?;
    let (energy, _, _) = fast_ground_refined(p.e_cf, 1e-7, |phi_f| fast_potential(p, phi, phi_f));
    Ok(energy)
}

/// The slow-phase value (0 or pi) at which the flux-biased fast
/// Hamiltonian of the sweet-spot analysis is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlowWell {
    Zero,
    Pi,
}

/// Ground energy of the flux-biased fast Hamiltonian at phi = 0 or pi:
/// 4 E_Cf n_f^2 + E_L/2 phi_f^2 - E_J cos(phi_ef - phi_f)
/// + E_J2k cos 2 phi_f -+ E_kphi (pi - phi_ek) sin phi_f -+ E_J1k cos phi_f.
/// The kite-flux energy scale `e_k_phi` is a free parameter of the model.
pub fn h_fast_flux_ground(p: &ReducedParams, well: SlowWell, e_k_phi: f64) -> Result<f64> {
    p.validate()?;
    let sign = match well {
        SlowWell::Zero => 1.0,
        SlowWell::Pi => -1.0,
    };
    let flux_coeff = sign * e_k_phi * (PI - p.phi_ek);
    let (energy, _, _) = fast_ground_refined(p.e_cf, 1e-7, |phi_f| {
        0.5 * p.e_l * phi_f * phi_f - p.e_j * (p.phi_ef - phi_f).cos()
            + p.e_j2k * (2.0 * phi_f).cos()
            - flux_coeff * phi_f.sin()
            - sign * p.e_j1k * phi_f.cos()
    });
    Ok(energy)
}

/// Deep-BO qubit splitting epsilon_fast(pi) - epsilon_fast(0) of the
/// flux-biased model.
pub fn deep_bo_splitting(p: &ReducedParams, e_k_phi: f64) -> Result<f64> {
    Ok(h_fast_flux_ground(p, SlowWell::Pi, e_k_phi)? - h_fast_flux_ground(p, SlowWell::Zero, e_k_phi)?)
}

/// The BO potential sampled on a periodic slow-phase grid.
#[derive(Debug, Clone)]
pub struct BOPotential {
    /// Slow-phase grid points, radians.
    pub phi: Vec<f64>,
    /// U_BO values, GHz.
    pub u: Vec<f64>,
    /// Fast ground-state wavefunction at each grid point.
    pub fast_grounds: Vec<Vec<f64>>,
    /// Fast-grid spacing the cache was computed at, radians.
    pub fast_delta: f64,
}

impl BOPotential {
    /// Index of the grid point closest to `phi` (mod 2 pi).
    pub fn nearest(&self, phi: f64) -> usize {
        let count = self.phi.len() as f64;
        let step = 2.0 * PI / count;
        let idx = ((phi + PI) / step).rem_euclid(count);
        (idx.round() as usize) % self.phi.len()
    }
}

/// Probability mass of a rotor state within `halfwidth` of `center`
/// (periodic distance).
pub fn well_mass(phi: &[f64], state: &[Complex64], center: f64, halfwidth: f64) -> f64 {
    phi.iter()
        .zip(state)
        .filter(|(&x, _)| {
            let mut d = (x - center).rem_euclid(2.0 * PI);
            if d > PI {
                d = 2.0 * PI - d;
            }
            d <= halfwidth
        })
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Sample U_BO on `phi_points` grid points and diagonalize the slow
/// Hamiltonian 4 E_C (n - n_g)^2 + U_BO(phi) on the same grid.
pub fn bo_spectrum(p: &ReducedParams, phi_points: usize) -> Result<(BOPotential, Spectrum)> {
    p.validate()?;
    if phi_points < 32 {
        return Err(Error::Domain(format!(
            "BO slow grid needs at least 32 points, got {phi_points}"
        )));
    }
    let basis = ProductBasis::new([
        BasisSpec::Periodic { count: phi_points },
        BasisSpec::Open { n: 0, delta: 1.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
    ])?;
    let mut pot = BOPotential {
        phi: (0..phi_points).map(|i| basis.specs[0].value(i)).collect(),
        u: Vec::with_capacity(phi_points),
        fast_grounds: Vec::with_capacity(phi_points),
        fast_delta: 0.0,
    };
    for &phi in &pot.phi {
        let (e, state, delta) =
            fast_ground_refined(p.e_cf, 1e-7, |phi_f| fast_potential(p, phi, phi_f));
        pot.u.push(e);
        pot.fast_grounds.push(state);
        pot.fast_delta = delta;
    }
    let mut c_inv = Matrix4::<f64>::zeros();
    c_inv[(0, 0)] = 4.0 * p.e_c / units::kinetic_prefactor_ghz();
    let mut h = kinetic_operator(&basis, &c_inv, p.n_g);
    h.add_assign(&SparseOperator::diagonal(&basis, pot.u.clone()));
    let spec = dense_lowest_k(&h, &basis, 6.min(phi_points))?;
    Ok((pot, spec))
}

/// Suppression and dispersion metrics of the toy two-harmonic qubit.
#[derive(Debug, Clone, Copy)]
pub struct ToyMetrics {
    /// |<e|n|g>|.
    pub charge_elem: f64,
    /// |<e|phi_wrapped|g>| with the phase operator diagonal on the grid.
    pub phase_elem: f64,
    /// Qubit splitting e_1 - e_0 at the requested gate charge, GHz.
    pub splitting: f64,
    /// |e_0(n_g = 1/2) - e_0(n_g = 0)|, GHz.
    pub dispersion_g: f64,
    /// |e_1(n_g = 1/2) - e_1(n_g = 0)|, GHz.
    pub dispersion_e: f64,
}

/// Charge-basis matrix of 4 E_C (n - n_g)^2 + E_J1 cos phi + E_J2 cos 2phi
/// on n in [-n_max, n_max]. cos phi couples n <-> n+-1 with weight 1/2 and
/// cos 2phi couples n <-> n+-2.
fn toy_charge_matrix(e_j1: f64, e_j2: f64, e_c: f64, n_g: f64, n_max: usize) -> DMatrix<f64> {
    let len = 2 * n_max + 1;
    let mut h = DMatrix::<f64>::zeros(len, len);
    for i in 0..len {
        let n = i as f64 - n_max as f64;
        h[(i, i)] = 4.0 * e_c * (n - n_g) * (n - n_g);
        if i + 1 < len {
            h[(i, i + 1)] = 0.5 * e_j1;
            h[(i + 1, i)] = 0.5 * e_j1;
        }
        if i + 2 < len {
            h[(i, i + 2)] = 0.5 * e_j2;
            h[(i + 2, i)] = 0.5 * e_j2;
        }
    }
    h
}

fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(h.nrows(), h.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Charge-basis truncation for the toy model; converged far beyond 1e-8
/// for the energy scales of interest.
const TOY_N_MAX: usize = 40;
/// Periodic grid the toy eigenstates are synthesized on.
const TOY_GRID: usize = 257;

/// Spectrum and protection metrics of U = E_J1 cos phi + E_J2 cos 2phi
/// with kinetic energy 4 E_C (n - n_g)^2. Solved in the charge basis
/// (exact for a periodic variable); eigenstates are synthesized onto a
/// periodic phase grid for the Spectrum and the wrapped-phase element.
pub fn toy_two_harmonic(
    e_j1: f64,
    e_j2: f64,
    e_c: f64,
    n_g: f64,
) -> Result<(Spectrum, ToyMetrics)> {
    if !(e_c > 0.0) {
        return Err(Error::Domain(format!("toy E_C must be positive, got {e_c}")));
    }
    let k = 4;
    let (vals, vecs) = sorted_eigen(&toy_charge_matrix(e_j1, e_j2, e_c, n_g, TOY_N_MAX));
    let len = 2 * TOY_N_MAX + 1;

    // exact charge matrix element in the charge basis
    let mut charge_elem = 0.0;
    for i in 0..len {
        let n = i as f64 - TOY_N_MAX as f64;
        charge_elem += vecs[(i, 1)] * n * vecs[(i, 0)];
    }
    let charge_elem = charge_elem.abs();

    // synthesize states on the periodic grid: psi(phi_j) ~ sum_n c_n e^{i n phi_j}
    let basis = ProductBasis::new([
        BasisSpec::Periodic { count: TOY_GRID },
        BasisSpec::Open { n: 0, delta: 1.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
    ])?;
    let phi: Vec<f64> = (0..TOY_GRID).map(|i| basis.specs[0].value(i)).collect();
    let norm = 1.0 / (TOY_GRID as f64).sqrt();
    let mut states: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for col in 0..k {
        let state: Vec<Complex64> = phi
            .iter()
            .map(|&x| {
                let mut z = Complex64::ZERO;
                for i in 0..len {
                    let n = i as f64 - TOY_N_MAX as f64;
                    z += vecs[(i, col)] * Complex64::new(0.0, n * x).exp();
                }
                z * norm
            })
            .collect();
        states.push(state);
    }
    let phase_elem = phi
        .iter()
        .enumerate()
        .map(|(j, &x)| states[1][j].conj() * x * states[0][j])
        .sum::<Complex64>()
        .norm();

    // charge dispersion between the n_g = 0 and n_g = 1/2 extremes
    let (v0, _) = sorted_eigen(&toy_charge_matrix(e_j1, e_j2, e_c, 0.0, TOY_N_MAX));
    let (v5, _) = sorted_eigen(&toy_charge_matrix(e_j1, e_j2, e_c, 0.5, TOY_N_MAX));
    let metrics = ToyMetrics {
        charge_elem,
        phase_elem,
        splitting: vals[1] - vals[0],
        dispersion_g: (v5[0] - v0[0]).abs(),
        dispersion_e: (v5[1] - v0[1]).abs(),
    };
    let spec = Spectrum {
        energies: vals[..k].to_vec(),
        states,
        residuals: vec![0.0; k],
        basis_hash: basis.spec_hash(),
        converged: vec![true; k],
        edge_masses: vec![0.0; k],
        tol: 1e-12,
    };
    Ok((spec, metrics))
}
