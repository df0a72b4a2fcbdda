use harmonium::dynamics::PulseSchedule;
use harmonium::eigen::{self, hermitian_eigen};
use harmonium::{model, Config};
use num_complex::Complex64;

fn apply_exp(h: &nalgebra::DMatrix<Complex64>, dt_ns: f64, psi: &[Complex64]) -> Vec<Complex64> {
    let (vals, vecs) = hermitian_eigen(h);
    let mut out = vec![Complex64::ZERO; psi.len()];
    for (lam, v) in vals.iter().zip(&vecs) {
        let amp: Complex64 = v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * lam * dt_ns);
        let c = amp * phase;
        for (o, vi) in out.iter_mut().zip(v) {
            *o += c * vi;
        }
    }
    out
}

fn cf4_step(
    h_at: &dyn Fn(f64) -> nalgebra::DMatrix<Complex64>,
    t: f64,
    dt: f64,
    psi: &[Complex64],
) -> Vec<Complex64> {
    let s3 = 3.0_f64.sqrt();
    let a1 = h_at(t + (0.5 - s3 / 6.0) * dt);
    let a2 = h_at(t + (0.5 + s3 / 6.0) * dt);
    let x1 = (3.0 - 2.0 * s3) / 12.0;
    let x2 = (3.0 + 2.0 * s3) / 12.0;
    let b_first = a1.map(|z| z * 2.0 * x2) + a2.map(|z| z * 2.0 * x1);
    let b_second = a1.map(|z| z * 2.0 * x1) + a2.map(|z| z * 2.0 * x2);
    let mid = apply_exp(&b_first, 0.5 * dt, psi);
    apply_exp(&b_second, 0.5 * dt, &mid)
}

fn main() {
    let cfg = Config::from_json(r#"{"basis": {"scale": 0.1, "k": 12, "tol": 1e-6}}"#).unwrap();
    let basis = model::circuit_basis(cfg.basis.scale).unwrap();
    let spec =
        model::solve_circuit(&cfg.circuit, &cfg.bias, &basis, cfg.basis.k, cfg.basis.tol).unwrap();
    let k = 8;
    let energies: Vec<f64> = spec.energies[..k].iter().map(|e| e - spec.energies[0]).collect();
    let n_full = eigen::eigenbasis_matrix(&spec, &model::qubit_charge_operator(&basis));
    let n_mat = nalgebra::DMatrix::from_fn(k, k, |i, j| n_full[(i, j)]);
    let pulse = PulseSchedule {
        carrier_ghz: spec.energies[2] - spec.energies[0] - 0.5,
        duration_ns: 40.0,
        amplitude_ghz: 0.05,
        phase: 0.0,
    };
    let h_at = move |t: f64| {
        let eps = pulse.drive(t);
        let mut h = n_mat.map(|z| z * eps);
        for i in 0..k {
            h[(i, i)] += Complex64::from(energies[i]);
        }
        h
    };
    // replicate the adaptive loop with diagnostics
    let mut psi = vec![Complex64::ZERO; k];
    psi[0] = Complex64::ONE;
    let t_end = 40.0;
    let mut t = 0.0;
    let mut dt: f64 = 0.01;
    let mut rejects = 0usize;
    let mut steps = 0usize;
    while t < t_end {
        let dt_eff = dt.min(t_end - t);
        let coarse = cf4_step(&h_at, t, dt_eff, &psi);
        let half = cf4_step(&h_at, t, 0.5 * dt_eff, &psi);
        let fine = cf4_step(&h_at, t + 0.5 * dt_eff, 0.5 * dt_eff, &half);
        let err: f64 =
            coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let accepted = err <= 1e-11;
        if accepted {
            psi = fine;
            t += dt_eff;
            steps += 1;
        } else {
            rejects += 1;
            if dt < 1e-6 {
                println!("stuck: t = {t:.6}, dt = {dt:.3e}, err = {err:.3e}");
                if dt < 4e-8 {
                    break;
                }
            }
        }
        let factor = if err > 0.0 { 0.9 * (1e-11 / err).powf(0.2) } else { 2.0 };
        dt *= factor.clamp(0.2, 2.0);
    }
    println!("done: t = {t:.4}, steps = {steps}, rejects = {rejects}");
    println!("evolved psi: {:?}", psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
    for dt in [1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
        let coarse = cf4_step(&h_at, t, dt, &psi);
        let half = cf4_step(&h_at, t, 0.5 * dt, &psi);
        let fine = cf4_step(&h_at, t + 0.5 * dt, 0.5 * dt, &half);
        let err: f64 =
            coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        println!("evolved-state dt = {dt:.1e}  err = {err:.3e}");
    }

    let psi = {
        let mut p = vec![Complex64::ZERO; k];
        p[0] = Complex64::ONE;
        p
    };
    let t = 4.55;
    for dt in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
        let coarse = cf4_step(&h_at, t, dt, &psi);
        let half = cf4_step(&h_at, t, 0.5 * dt, &psi);
        let fine = cf4_step(&h_at, t + 0.5 * dt, 0.5 * dt, &half);
        let err: f64 =
            coarse.iter().zip(&fine).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = fine.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        println!("dt = {dt:.1e}  err = {err:.3e}  norm-1 = {:.3e}", norm - 1.0);
    }
    // examine H at the stuck time
    let ts = 5.711846;
    for off in [0.0, 1e-8, 5e-8] {
        let h = h_at(ts + off);
        let (vals, _) = hermitian_eigen(&h);
        let mut sorted = vals.clone();
        sorted.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
        println!("t+{off:.0e}: min gap = {:.3e}, eps = {:.6e}", gaps.iter().cloned().fold(f64::INFINITY, f64::min), pulse.drive(ts + off));
    }
    // also check hermitian_eigen reconstruction quality at a sample H
    let h = h_at(4.55);
    let (vals, vecs) = hermitian_eigen(&h);
    let mut worst = 0.0_f64;
    for (lam, v) in vals.iter().zip(&vecs) {
        let hv = &h * nalgebra::DVector::from_column_slice(v);
        let r: f64 = hv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b * *lam).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    println!("worst eigen residual = {worst:.3e}");
    // orthonormality
    let mut worst_ortho = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let d: Complex64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a.conj() * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst_ortho = worst_ortho.max((d - Complex64::from(target)).norm());
        }
    }
    println!("worst orthonormality deviation = {worst_ortho:.3e}");
}
