//! Assembly of the circuit Hamiltonian and related operators on the
//! product basis.
//!
//! The potential follows the branch construction: quadratic terms on the
//! three inductors and negative cosines on the three junctions, each branch
//! phase an affine function of the dynamical phases and external fluxes.
//! Charge operators are discretized with second-order central stencils:
//! n_d = -i d/dphi_d with the antisymmetric two-point stencil, n_d^2 with
//! the three-point second-derivative stencil, and cross terms as products
//! of first-derivative stencils. The periodic axis wraps, open axes use
//! hard-wall boundaries.

use crate::basis::{ProductBasis, DOF_NAMES};
use crate::circuit::{
    build_branch_map, capacitance_matrix, Branch, BranchMap, CircuitParams, FluxBias, N_DOF,
};
use crate::error::Result;
use crate::operator::{AxisStencil, SparseOperator, Term};
use crate::units;
use nalgebra::Matrix4;
use num_complex::Complex64;

fn first_derivative_taps(delta: f64) -> Vec<(i64, f64)> {
    vec![(1, 0.5 / delta), (-1, -0.5 / delta)]
}

fn second_derivative_taps(delta: f64) -> Vec<(i64, f64)> {
    let d2 = delta * delta;
    vec![(1, 1.0 / d2), (0, -2.0 / d2), (-1, 1.0 / d2)]
}

/// Evaluate `f(sum_d coeffs[d] * phi_d + offset)` on every grid point and
/// return the values in flat-index order.
pub fn phase_function_values(
    basis: &ProductBasis,
    coeffs: [f64; N_DOF],
    offset: f64,
    f: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let dims = basis.dims();
    let mut out = Vec::with_capacity(basis.dim());
    for i0 in 0..dims[0] {
        let s0 = offset + coeffs[0] * basis.specs[0].value(i0);
        for i1 in 0..dims[1] {
            let s1 = s0 + coeffs[1] * basis.specs[1].value(i1);
            for i2 in 0..dims[2] {
                let s2 = s1 + coeffs[2] * basis.specs[2].value(i2);
                for i3 in 0..dims[3] {
                    out.push(f(s2 + coeffs[3] * basis.specs[3].value(i3)));
                }
            }
        }
    }
    out
}

/// Diagonal operator `f(branch linear combination + flux offset)`.
pub fn phase_function_operator(
    basis: &ProductBasis,
    coeffs: [f64; N_DOF],
    offset: f64,
    f: impl Fn(f64) -> f64,
) -> SparseOperator {
    SparseOperator::diagonal(basis, phase_function_values(basis, coeffs, offset, f))
}

/// The charge operator n_d = -i d/dphi_d of one degree of freedom.
pub fn charge_operator(basis: &ProductBasis, dof: usize) -> SparseOperator {
    let delta = basis.specs[dof].delta();
    SparseOperator::new(
        basis,
        vec![Term::Axis {
            coeff: Complex64::new(0.0, -1.0),
            stencil: AxisStencil { dof, taps: first_derivative_taps(delta) },
        }],
        true,
    )
}

/// A real linear combination `sum_d weights[d] * n_d` of the four charge
/// operators. Used for the branch-voltage operators of the charge-noise
/// channel.
pub fn charge_combination_operator(basis: &ProductBasis, weights: [f64; N_DOF]) -> SparseOperator {
    let mut terms = Vec::new();
    for (dof, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            let delta = basis.specs[dof].delta();
            terms.push(Term::Axis {
                coeff: Complex64::new(0.0, -w),
                stencil: AxisStencil { dof, taps: first_derivative_taps(delta) },
            });
        }
    }
    SparseOperator::new(basis, terms, true)
}

/// Kinetic operator `(2e)^2/2 n^T C^-1 n` with the gate charge substituted
/// on the periodic block: every occurrence of n_phi is replaced by
/// n_phi - n_g.
pub fn kinetic_operator(basis: &ProductBasis, c_inv: &Matrix4<f64>, n_g: f64) -> SparseOperator {
    let k = units::kinetic_prefactor_ghz();
    let deltas: Vec<f64> = (0..N_DOF).map(|d| basis.specs[d].delta()).collect();
    let mut terms = Vec::new();
    // diagonal-in-DOF terms: k_aa n_a^2 = -k_aa d^2/dphi_a^2
    for a in 0..N_DOF {
        let coeff = k * c_inv[(a, a)];
        terms.push(Term::Axis {
            coeff: Complex64::from(-coeff),
            stencil: AxisStencil { dof: a, taps: second_derivative_taps(deltas[a]) },
        });
    }
    // cross terms: 2 k_ab n_a n_b = -2 k_ab D1_a D1_b
    for a in 0..N_DOF {
        for b in (a + 1)..N_DOF {
            let coeff = 2.0 * k * c_inv[(a, b)];
            if coeff != 0.0 {
                terms.push(Term::AxisPair {
                    coeff: Complex64::from(-coeff),
                    a: AxisStencil { dof: a, taps: first_derivative_taps(deltas[a]) },
                    b: AxisStencil { dof: b, taps: first_derivative_taps(deltas[b]) },
                });
            }
        }
    }
    if n_g != 0.0 {
        // -2 n_g sum_a k_0a n_a, plus the constant k_00 n_g^2
        for a in 0..N_DOF {
            let coeff = -2.0 * n_g * k * c_inv[(0, a)];
            if coeff != 0.0 {
                terms.push(Term::Axis {
                    coeff: Complex64::new(0.0, -coeff),
                    stencil: AxisStencil { dof: a, taps: first_derivative_taps(deltas[a]) },
                });
            }
        }
        terms.push(Term::Axis {
            coeff: Complex64::from(k * c_inv[(0, 0)] * n_g * n_g),
            stencil: AxisStencil { dof: 0, taps: vec![(0, 1.0)] },
        });
    }
    SparseOperator::new(basis, terms, true)
}

/// The six inductive-element contributions to the potential, as
/// (branch, energy, is_junction) in construction order.
fn potential_elements(params: &CircuitParams) -> [(Branch, f64, bool); 6] {
    [
        (Branch::FluxoniumInductor, params.e_lf, false),
        (Branch::Kite1Inductor, params.e_lk, false),
        (Branch::Kite2Inductor, params.e_lk, false),
        (Branch::FluxoniumJunction, params.e_jf, true),
        (Branch::Kite1Junction, params.e_j1k(), true),
        (Branch::Kite2Junction, params.e_j2k(), true),
    ]
}

/// Scalar potential at a classical phase point, used as an oracle and by
/// the reduced-model module.
pub fn potential_at(params: &CircuitParams, bias: &FluxBias, phases: [f64; N_DOF]) -> f64 {
    let map = build_branch_map();
    let mut u = 0.0;
    for (branch, energy, is_junction) in potential_elements(params) {
        let phase = map.evaluate(branch, phases, bias);
        if is_junction {
            u -= energy * phase.cos();
        } else {
            u += 0.5 * energy * phase * phase;
        }
    }
    u
}

/// Potential energy on every grid point, flat-index order.
pub fn potential_values(params: &CircuitParams, bias: &FluxBias, basis: &ProductBasis) -> Vec<f64> {
    let map = build_branch_map();
    let mut diag = vec![0.0; basis.dim()];
    for (branch, energy, is_junction) in potential_elements(params) {
        let coeffs = map.row(branch);
        let offset = map.flux_offset(branch, bias);
        let vals = phase_function_values(basis, coeffs, offset, |x| {
            if is_junction {
                -energy * x.cos()
            } else {
                0.5 * energy * x * x
            }
        });
        for (d, v) in diag.iter_mut().zip(vals) {
            *d += v;
        }
    }
    diag
}

/// Full circuit Hamiltonian: kinetic quadratic form plus the six-element
/// potential, Hermitian by construction, deterministic term ordering.
pub fn assemble_hamiltonian(
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
) -> Result<SparseOperator> {
    params.validate()?;
    let cm = capacitance_matrix(params)?;
    let mut h = kinetic_operator(basis, &cm.c_inv, bias.n_g_mod());
    let u = potential_values(params, bias, basis);
    h.add_assign(&SparseOperator::diagonal(basis, u));
    Ok(h)
}

/// Loop selector for flux-derivative operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxLoop {
    Fluxonium,
    Kite,
}

/// Analytic dH/d(delta phi_e) for one loop, in GHz per radian, as a
/// diagonal operator. Dynamical fluxes appear only on inductor branches,
/// so the derivative is linear in the branch phase.
pub fn flux_derivative_operator(
    params: &CircuitParams,
    bias: &FluxBias,
    basis: &ProductBasis,
    which: FluxLoop,
) -> SparseOperator {
    let map = build_branch_map();
    let (branch, energy, sign) = match which {
        // d/d(dphi_ef) of E_Lf/2 (phi_f + dphi_ef)^2
        FluxLoop::Fluxonium => (Branch::FluxoniumInductor, params.e_lf, 1.0),
        // d/d(dphi_ek) of E_Lk/2 (phi_sk - phi_dk - dphi_ek)^2
        FluxLoop::Kite => (Branch::Kite2Inductor, params.e_lk, -1.0),
    };
    let coeffs = map.row(branch);
    let offset = map.flux_offset(branch, bias);
    phase_function_operator(basis, coeffs, offset, |x| sign * energy * x)
}

/// Diagonal operator of a function of one branch phase, e.g. cos(phi_B/2)
/// via `scale = 0.5`.
pub fn branch_phase_operator(
    bias: &FluxBias,
    basis: &ProductBasis,
    branch: Branch,
    scale: f64,
    f: impl Fn(f64) -> f64,
) -> SparseOperator {
    let map = build_branch_map();
    let row = map.row(branch);
    let coeffs = [row[0] * scale, row[1] * scale, row[2] * scale, row[3] * scale];
    let offset = map.flux_offset(branch, bias) * scale;
    phase_function_operator(basis, coeffs, offset, f)
}

/// Probability mass within `edge_points` grid points of any open-axis
/// boundary. Large values flag a basis too small for the potential minima.
pub fn edge_mass(basis: &ProductBasis, state: &[Complex64], edge_points: usize) -> f64 {
    let dims = basis.dims();
    let mut mass = 0.0;
    for (flat, z) in state.iter().enumerate() {
        let idx = basis.grid_index(flat);
        let mut at_edge = false;
        for d in 1..4 {
            if idx[d] < edge_points || idx[d] + edge_points >= dims[d] {
                at_edge = true;
                break;
            }
        }
        if at_edge {
            mass += z.norm_sqr();
        }
    }
    mass
}

/// Name lookup for diagnostics.
pub fn dof_name(dof: usize) -> &'static str {
    DOF_NAMES[dof]
}

/// Re-export of the branch map builder for callers assembling custom
/// operators.
pub fn branch_map() -> BranchMap {
    build_branch_map()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSpec;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn small_basis() -> ProductBasis {
        ProductBasis::new([
            BasisSpec::Periodic { count: 7 },
            BasisSpec::Open { n: 3, delta: PI / 4.0 },
            BasisSpec::Open { n: 2, delta: PI / 3.0 },
            BasisSpec::Open { n: 2, delta: PI / 3.0 },
        ])
        .unwrap()
    }

    #[test]
    fn phase_function_on_fluxonium_junction_branch() {
        // f = cos on phi_Jf at phi_ef = pi: entries cos(pi - phi_f)
        let basis = small_basis();
        let bias = FluxBias::sweet_spot();
        let map = build_branch_map();
        let op = phase_function_operator(
            &basis,
            map.row(Branch::FluxoniumJunction),
            map.flux_offset(Branch::FluxoniumJunction, &bias),
            f64::cos,
        );
        let dense = op.to_dense();
        for flat in 0..basis.dim() {
            let phi_f = basis.phase_values(flat)[1];
            assert_relative_eq!(dense[(flat, flat)].re, (PI - phi_f).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_function_affine_offset() {
        // identity on phi_Lf with d_phi_ef = 0.1: entries phi_f + 0.1
        let basis = small_basis();
        let mut bias = FluxBias::sweet_spot();
        bias.d_phi_ef = 0.1;
        let map = build_branch_map();
        let op = phase_function_operator(
            &basis,
            map.row(Branch::FluxoniumInductor),
            map.flux_offset(Branch::FluxoniumInductor, &bias),
            |x| x,
        );
        let dense = op.to_dense();
        for flat in 0..basis.dim() {
            let phi_f = basis.phase_values(flat)[1];
            assert_relative_eq!(dense[(flat, flat)].re, phi_f + 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn potential_matches_hand_evaluation_at_origin() {
        // At the grid point (0,0,0,0) with both fluxes pi the six terms are
        // E_Lf/2 * 0 + 2 * E_Lk/2 * 0 - E_Jf cos(pi) - E_J1k cos(pi) - E_J2k cos(-2pi)
        let params = CircuitParams::optimized();
        let bias = FluxBias::sweet_spot();
        let hand = params.e_jf + params.e_j1k() - params.e_j2k();
        let u = potential_at(&params, &bias, [0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(u, hand, epsilon = 1e-12);

        // and the diagonal assembly agrees with the scalar oracle everywhere
        let basis = small_basis();
        let vals = potential_values(&params, &bias, &basis);
        for flat in (0..basis.dim()).step_by(17) {
            let u_ref = potential_at(&params, &bias, basis.phase_values(flat));
            assert_relative_eq!(vals[flat], u_ref, epsilon = 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let params = CircuitParams::optimized();
        let mut bias = FluxBias::sweet_spot();
        bias.n_g = 0.25;
        let basis = small_basis();
        let h = assemble_hamiltonian(&params, &bias, &basis).unwrap();
        assert!(h.hermiticity_defect() < 1e-10 * params.e_jf);
    }

    #[test]
    fn flux_derivative_matches_finite_difference() {
        let params = CircuitParams::optimized();
        let basis = small_basis();
        let bias = FluxBias::sweet_spot();
        for which in [FluxLoop::Fluxonium, FluxLoop::Kite] {
            let analytic = flux_derivative_operator(&params, &bias, &basis, which);
            let eps = 1e-6;
            let mut bias_p = bias;
            let mut bias_m = bias;
            match which {
                FluxLoop::Fluxonium => {
                    bias_p.d_phi_ef = eps;
                    bias_m.d_phi_ef = -eps;
                }
                FluxLoop::Kite => {
                    bias_p.d_phi_ek = eps;
                    bias_m.d_phi_ek = -eps;
                }
            }
            let up = potential_values(&params, &bias_p, &basis);
            let um = potential_values(&params, &bias_m, &basis);
            let dense = analytic.to_dense();
            for flat in 0..basis.dim() {
                let fd = (up[flat] - um[flat]) / (2.0 * eps);
                assert!(
                    (dense[(flat, flat)].re - fd).abs() < 1e-6,
                    "flux derivative mismatch at {flat}"
                );
            }
        }
    }

    #[test]
    fn edge_mass_flags_boundary_states() {
        let basis = small_basis();
        let dim = basis.dim();
        // all mass on an interior point vs a boundary point of phi_f
        let interior = basis.flat_index([0, 3, 2, 2]);
        let mut v = vec![Complex64::ZERO; dim];
        v[interior] = Complex64::ONE;
        assert!(edge_mass(&basis, &v, 1) < 1e-12);
        let boundary = basis.flat_index([0, 0, 2, 2]);
        let mut w = vec![Complex64::ZERO; dim];
        w[boundary] = Complex64::ONE;
        assert!(edge_mass(&basis, &w, 1) > 0.99);
    }
}
