use harmonium::eigen;
use harmonium::model;
use harmonium::{CircuitParams, FluxBias};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scale: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.25);
    let rel: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let k: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4);
    let tol: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1e-7);

    let mut params = CircuitParams::optimized().with_relative_asymmetry(rel);
    params.apply_cap_lock().unwrap();
    let bias = FluxBias::sweet_spot();
    let basis = model::circuit_basis(scale).unwrap();
    eprintln!("scale {scale}: dims {:?}, dim {}", basis.dims(), basis.dim());
    let t0 = Instant::now();
    let spec = model::solve_circuit(&params, &bias, &basis, k, tol).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let nu = spec.transition(0, 1).unwrap();
    let n_mat = eigen::eigenbasis_matrix(&spec, &model::qubit_charge_operator(&basis));
    println!(
        "scale {scale} rel {rel}: freq = {:.9e} GHz, |<e|n|g>| = {:.6e}, e0 = {:.9}, solve {dt:.1} s, residuals {:?}, converged {:?}, edge {:?}",
        nu,
        n_mat[(0, 1)].norm(),
        spec.energies[0],
        &spec.residuals[..k.min(4)],
        &spec.converged[..k.min(4)],
        &spec.edge_masses[..k.min(4)],
    );
    for i in 0..spec.len() {
        eprintln!("  e[{i}] - e0 = {:.6e} GHz", spec.energies[i] - spec.energies[0]);
    }
}
