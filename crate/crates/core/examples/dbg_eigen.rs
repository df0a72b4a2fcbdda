use harmonium::basis::{BasisSpec, ProductBasis};
use harmonium::eigen::{lowest_k_with, SolveOptions};
use harmonium::hamiltonian::{kinetic_operator, phase_function_operator};
use nalgebra::Matrix4;
use std::f64::consts::PI;

fn main() {
    let basis = ProductBasis::new([
        BasisSpec::Periodic { count: 1 },
        BasisSpec::Open { n: 512, delta: PI / 128.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
        BasisSpec::Open { n: 0, delta: 1.0 },
    ])
    .unwrap();
    let e_c = 2.5;
    let e_l = 1.0;
    let mut c_inv = Matrix4::<f64>::zeros();
    c_inv[(1, 1)] = 4.0 * e_c / harmonium::units::kinetic_prefactor_ghz();
    let mut h = kinetic_operator(&basis, &c_inv, 0.0);
    h.add_assign(&phase_function_operator(&basis, [0.0, 1.0, 0.0, 0.0], 0.0, |x| {
        0.5 * e_l * x * x
    }));
    let opts = SolveOptions { tol: 1e-9, max_restarts: 12, ..SolveOptions::default() };
    match lowest_k_with(&h, &basis, 4, opts) {
        Ok(s) => println!("energies: {:?}\nres: {:?}", &s.energies, &s.residuals),
        Err(e) => println!("error: {e}"),
    }
    println!("omega = {}", (8.0 * e_c * e_l).sqrt());
}
