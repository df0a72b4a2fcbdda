//! High-level orchestration: building grids, solving the full circuit, and
//! wiring spectra into the gate, readout, and noise layers.

use crate::basis::{BasisSpec, ProductBasis, DOF_PHI};
use crate::circuit::{CircuitParams, FluxBias};
use crate::dynamics::CzQubit;
use crate::eigen::{self, Spectrum};
use crate::error::Result;
use crate::hamiltonian::{
    assemble_hamiltonian, charge_combination_operator, phase_function_operator,
};
use crate::operator::SparseOperator;

/// Largest dimension handed to the dense oracle instead of the iterative
/// solver.
pub const DENSE_CUTOFF: usize = 4096;

/// The production grid scaled by `scale` (1.0 = reference resolution).
pub fn circuit_basis(scale: f64) -> Result<ProductBasis> {
    ProductBasis::new(ProductBasis::scaled_spec(&ProductBasis::default_spec(), scale)?)
}

/// Charge operator conjugate to the qubit phase phi.
pub fn qubit_charge_operator(basis: &ProductBasis) -> SparseOperator {
    let mut w = [0.0; 4];
    w[DOF_PHI] = 1.0;
    charge_combination_operator(basis, w)
}

/// Lowest-k spectrum of the circuit on the given grid: dense below
/// `DENSE_CUTOFF`, thick-restart Krylov above it.
pub fn solve_circuit(
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    k: usize,
    tol: f64,
) -> Result<Spectrum> {
    let h = assemble_hamiltonian(params, bias, basis)?;
    if basis.dim() <= DENSE_CUTOFF {
        eigen::dense_lowest_k(&h, basis, k)
    } else {
        eigen::lowest_k(&h, basis, k, tol)
    }
}

/// Qubit splitting eps_e - eps_g in GHz at one bias point.
pub fn qubit_frequency(
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    tol: f64,
) -> Result<f64> {
    let spec = solve_circuit(params, bias, basis, 4, tol)?;
    spec.transition(0, 1)
}

/// Package a solved circuit as one side of the CZ gate: truncated energies
/// referenced to the ground state plus cos/sin of the qubit phase in the
/// eigenbasis.
pub fn cz_qubit(spec: &Spectrum, basis: &ProductBasis, levels: usize) -> CzQubit {
    let k = levels.min(spec.len());
    let truncated = Spectrum {
        energies: spec.energies[..k].to_vec(),
        states: spec.states[..k].to_vec(),
        residuals: spec.residuals[..k].to_vec(),
        basis_hash: spec.basis_hash.clone(),
        converged: spec.converged[..k].to_vec(),
        edge_masses: spec.edge_masses[..k].to_vec(),
        tol: spec.tol,
    };
    let mut coeffs = [0.0; 4];
    coeffs[DOF_PHI] = 1.0;
    let cos_op = phase_function_operator(basis, coeffs, 0.0, f64::cos);
    let sin_op = phase_function_operator(basis, coeffs, 0.0, f64::sin);
    CzQubit {
        energies: truncated.energies.iter().map(|e| e - truncated.energies[0]).collect(),
        cos_phi: eigen::eigenbasis_matrix(&truncated, &cos_op),
        sin_phi: eigen::eigenbasis_matrix(&truncated, &sin_op),
    }
}

/// A small grid for fast full-circuit studies; suitable for qualitative
/// structure, not converged rates.
pub fn coarse_basis() -> Result<ProductBasis> {
    ProductBasis::new([
        BasisSpec::Periodic { count: 5 },
        BasisSpec::Open { n: 3, delta: std::f64::consts::PI / 3.0 },
        BasisSpec::Open { n: 2, delta: std::f64::consts::PI / 2.0 },
        BasisSpec::Open { n: 2, delta: std::f64::consts::PI / 2.0 },
    ])
}
