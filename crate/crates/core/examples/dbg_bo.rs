use harmonium::bo::*;
use std::f64::consts::PI;

fn main() {
    for (e_j, e_j1k, e_c) in [
        (1.0, 0.3, 0.008),
        (1.0, 0.35, 0.008),
        (1.0, 0.4, 0.008),
        (1.0, 0.3, 0.005),
        (1.0, 0.35, 0.005),
        (1.0, 0.0, 0.008),
    ] {
        let mut p = ReducedParams::representative();
        p.e_j = e_j;
        p.e_j1k = e_j1k;
        p.e_c = e_c;
        let e0 = h_fast_ground(0.0, &p).unwrap();
        let epi = h_fast_ground(PI, &p).unwrap();
        let (pot, spec) = bo_spectrum(&p, 64).unwrap();
        let m0 = well_mass(&pot.phi, &spec.states[0], 0.0, PI / 2.0);
        let m1 = well_mass(&pot.phi, &spec.states[1], PI, PI / 2.0);
        let emid = h_fast_ground(PI / 2.0, &p).unwrap();
        println!(
            "e_j={e_j} e_j1k={e_j1k} e_c={e_c}: deps={:.5} barrier={:.5} gap01={:.5} m0(0)={:.3} m1(pi)={:.3}",
            epi - e0,
            emid - e0,
            spec.energies[1] - spec.energies[0],
            m0,
            m1
        );
    }
    for set in [
        vec![4.0, 8.0, 16.0, 24.0, 40.0],
        vec![8.0, 16.0, 24.0, 40.0, 64.0],
        vec![16.0, 24.0, 40.0, 64.0, 100.0],
    ] {
        let e_c = 0.3;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for ratio in &set {
            let e_j2 = -e_c * ratio;
            let (_, m) = toy_two_harmonic(0.15, e_j2, e_c, 0.25).unwrap();
            xs.push(ratio.sqrt());
            ys.push(m.charge_elem.ln());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        println!("ratios {:?}: slope={:.4} r2={:.5} ys={:?}", set, sxy / sxx, sxy * sxy / (sxx * syy), ys);
    }
}
