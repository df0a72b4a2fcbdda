//! Batch front door for the harmonium simulator: config loading, subcommand
//! dispatch, and CSV/JSON artifact emission with a run manifest.
//!
//! Every flag can also be set through an environment variable with the
//! `HARMONIUM_` prefix (e.g. `HARMONIUM_SEED`, `HARMONIUM_GRID_SCALE`).

use clap::{Parser, Subcommand, ValueEnum};
use harmonium::bo::{self, ReducedParams};
use harmonium::dynamics::{self, PulseSchedule};
use harmonium::eigen::{self, Spectrum};
use harmonium::model;
use harmonium::noise::{self, ShotNoiseInputs};
use harmonium::optimize::{self, Bounds, OptimizeOptions};
use harmonium::readout::{self, ReadoutConfig};
use harmonium::units;
use harmonium::{Config, Error, ProductBasis, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "harmonium", version, about = "Harmonium qubit simulator")]
struct Cli {
    /// Run configuration (strict JSON); defaults to the optimized circuit.
    #[arg(long, global = true, env = "HARMONIUM_CONFIG")]
    config: Option<PathBuf>,

    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = "out", env = "HARMONIUM_OUT_DIR")]
    out_dir: PathBuf,

    /// RNG seed for stochastic subcommands.
    #[arg(long, global = true, default_value_t = 17, env = "HARMONIUM_SEED")]
    seed: u64,

    /// Worker threads (recorded; evaluation is currently serial).
    #[arg(long, global = true, default_value_t = 1, env = "HARMONIUM_THREADS")]
    threads: usize,

    /// Override the configured grid scale (multiplies all grid counts).
    #[arg(long, global = true, env = "HARMONIUM_GRID_SCALE")]
    grid_scale: Option<f64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lowest-k energies and convergence diagnostics of the full circuit.
    Spectrum {
        /// Number of levels to report (defaults to the configured k).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Born-Oppenheimer potential and slow-mode wavefunctions of the
    /// reduced two-variable model.
    Bo {
        /// Slow-phase grid points.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Transition (bit-flip and heating) rate table for every channel.
    Rates,
    /// Dephasing rate table for every channel.
    Dephasing,
    /// Optimize the five circuit energies against the worst decoherence
    /// rate.
    Optimize {
        /// Objective evaluation budget.
        #[arg(long, default_value_t = 60)]
        budget: usize,
        /// Bounds as JSON {"lo": [...5], "hi": [...5]} over
        /// (E_Jk, E_Jf, E_Lk, E_Lf, C_sh).
        #[arg(long)]
        bounds: Option<String>,
    },
    /// Propagate a drive pulse (Raman-style charge drive or CZ coupler).
    Gate {
        #[arg(long, value_enum, default_value_t = GateKind::Raman)]
        kind: GateKind,
        /// Carrier frequency, GHz (Raman; defaults to the g->2 transition
        /// minus the detuning).
        #[arg(long)]
        carrier: Option<f64>,
        /// Raman detuning from the intermediate level, GHz.
        #[arg(long, default_value_t = 0.5)]
        detuning: f64,
        /// Pulse duration, ns.
        #[arg(long, default_value_t = 150.0)]
        duration: f64,
        /// Peak drive amplitude: GHz (Raman) or radians of coupler flux
        /// excursion (CZ).
        #[arg(long, default_value_t = 0.05)]
        amplitude: f64,
        /// Truncated levels carried through the propagation.
        #[arg(long, default_value_t = 16)]
        levels: usize,
        /// CZ coupler junction energy, GHz (both junctions).
        #[arg(long, default_value_t = 0.2)]
        e_j_coupler: f64,
    },
    /// Dispersive shifts vs resonator frequency plus the erasure budget.
    Readout {
        #[arg(long, default_value_t = 4.0)]
        omega_min: f64,
        #[arg(long, default_value_t = 10.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Sweep the kite asymmetry and record the qubit frequency.
    Sweep {
        /// Relative asymmetry dE_Jk/E_Jk at the start of the sweep.
        #[arg(long, default_value_t = 0.002)]
        from: f64,
        /// Relative asymmetry at the end of the sweep.
        #[arg(long, default_value_t = 0.03)]
        to: f64,
        #[arg(long, default_value_t = 7)]
        points: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GateKind {
    Raman,
    Cz,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    config_hash: String,
    code_version: String,
    seed: u64,
    threads: usize,
    grid_scale: f64,
    wall_time_s: f64,
    converged: bool,
    outputs: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence { .. }
                | Error::DerivativeNonConvergence(_)
                | Error::StepUnderflow { .. }
                | Error::NotEnoughStates { .. } => 3,
                _ => 2,
            }
        }
    });
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(scale) = cli.grid_scale {
        if !(scale > 0.0) {
            return Err(Error::Config(format!("--grid-scale must be positive, got {scale}")));
        }
        cfg.basis.scale = scale;
    }
    std::fs::create_dir_all(&cli.out_dir)?;

    let (name, outputs, converged) = match &cli.cmd {
        Cmd::Spectrum { levels } => cmd_spectrum(cli, &cfg, *levels)?,
        Cmd::Bo { points } => cmd_bo(cli, *points)?,
        Cmd::Rates => cmd_rates(cli, &cfg)?,
        Cmd::Dephasing => cmd_dephasing(cli, &cfg)?,
        Cmd::Optimize { budget, bounds } => cmd_optimize(cli, &cfg, *budget, bounds.as_deref())?,
        Cmd::Gate { kind, carrier, detuning, duration, amplitude, levels, e_j_coupler } => {
            cmd_gate(cli, &cfg, *kind, *carrier, *detuning, *duration, *amplitude, *levels, *e_j_coupler)?
        }
        Cmd::Readout { omega_min, omega_max, points } => {
            cmd_readout(cli, &cfg, *omega_min, *omega_max, *points)?
        }
        Cmd::Sweep { from, to, points } => cmd_sweep(cli, &cfg, *from, *to, *points)?,
    };

    let manifest = RunManifest {
        subcommand: name.into(),
        config_hash: cfg.hash(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        seed: cli.seed,
        threads: cli.threads,
        grid_scale: cfg.basis.scale,
        wall_time_s: started.elapsed().as_secs_f64(),
        converged,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(&cli.out_dir.join("manifest.json"), &manifest)?;
    if !converged {
        return Err(Error::NonConvergence { residuals: vec![], iterations: 0, tol: cfg.basis.tol });
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn solve(cfg: &Config) -> Result<(ProductBasis, Spectrum)> {
    let basis = model::circuit_basis(cfg.basis.scale)?;
    let spec =
        model::solve_circuit(&cfg.circuit, &cfg.bias, &basis, cfg.basis.k, cfg.basis.tol)?;
    Ok((basis, spec))
}

type CmdResult = Result<(&'static str, Vec<PathBuf>, bool)>;

fn cmd_spectrum(cli: &Cli, cfg: &Config, levels: Option<usize>) -> CmdResult {
    let (_, spec) = solve(cfg)?;
    let k = levels.unwrap_or(spec.len()).min(spec.len());
    let rows: Vec<Vec<String>> = (0..k)
        .map(|i| {
            vec![
                i.to_string(),
                format!("{:.12e}", spec.energies[i]),
                format!("{:.12e}", spec.energies[i] - spec.energies[0]),
                format!("{:.3e}", spec.residuals[i]),
                spec.converged[i].to_string(),
            ]
        })
        .collect();
    let path = cli.out_dir.join("spectrum.csv");
    write_csv(
        &path,
        "level,energy_ghz,excitation_ghz,residual_ghz,converged",
        &rows,
    )?;
    let converged = spec.converged[..k].iter().all(|&c| c);
    Ok(("spectrum", vec![path], converged))
}

fn cmd_bo(cli: &Cli, points: usize) -> CmdResult {
    let p = ReducedParams::representative();
    let (pot, spec) = bo::bo_spectrum(&p, points)?;
    let rows: Vec<Vec<String>> = pot
        .phi
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            vec![
                format!("{phi:.12e}"),
                format!("{:.12e}", pot.u[i]),
                format!("{:.12e}", spec.states[0][i].norm_sqr()),
                format!("{:.12e}", spec.states[1][i].norm_sqr()),
            ]
        })
        .collect();
    let path = cli.out_dir.join("bo.csv");
    write_csv(&path, "phi_rad,u_bo_ghz,psi_g_sq,psi_e_sq", &rows)?;
    Ok(("bo", vec![path], spec.converged.iter().all(|&c| c)))
}

fn rate_rows(report: &noise::RateReport) -> Vec<Vec<String>> {
    report
        .channels
        .iter()
        .map(|c| {
            vec![
                c.label.clone(),
                format!("{:.6e}", c.gamma_ge),
                format!("{:.6e}", c.gamma_eg),
                format!("{:.6e}", c.gamma_g_up),
                format!("{:.6e}", c.gamma_e_up),
                format!("{:.6e}", 1.0 / c.gamma_1()),
            ]
        })
        .collect()
}

#[derive(Serialize)]
struct RatesProvenance {
    grid_dims: [usize; 4],
    levels: usize,
    tol: f64,
    qp_model: String,
    quadrature_nodes: Vec<f64>,
    quadrature_weights: Vec<f64>,
}

fn cmd_rates(cli: &Cli, cfg: &Config) -> CmdResult {
    let (basis, spec) = solve(cfg)?;
    let report = noise::transition_report(&spec, &cfg.circuit, &cfg.bias, &basis, &cfg.noise)?;
    let csv = cli.out_dir.join("rates.csv");
    write_csv(
        &csv,
        "channel,gamma_ge_per_s,gamma_eg_per_s,gamma_g_up_per_s,gamma_e_up_per_s,t1_s",
        &rate_rows(&report),
    )?;
    let json = cli.out_dir.join("rates_provenance.json");
    write_json(
        &json,
        &RatesProvenance {
            grid_dims: basis.dims(),
            levels: spec.len(),
            tol: cfg.basis.tol,
            qp_model: report.qp_model.clone(),
            quadrature_nodes: noise::GH_NODES.to_vec(),
            quadrature_weights: noise::GH_WEIGHTS.to_vec(),
        },
    )?;
    Ok(("rates", vec![csv, json], spec.converged.iter().all(|&c| c)))
}

fn shot_inputs(basis: &ProductBasis, spec: &Spectrum) -> Result<Option<ShotNoiseInputs>> {
    if spec.len() < readout::MIN_SHIFT_STATES {
        return Ok(None);
    }
    let rd = ReadoutConfig::default();
    let n_mat = eigen::eigenbasis_matrix(spec, &model::qubit_charge_operator(basis));
    let shifts = readout::dispersive_shifts(spec, &n_mat, &rd, 3)?;
    Ok(Some(ShotNoiseInputs {
        chi_logical: units::ghz_to_angular(shifts.chi_logical()),
        kappa: rd.kappa,
        n_th: rd.n_thermal(),
    }))
}

fn cmd_dephasing(cli: &Cli, cfg: &Config) -> CmdResult {
    let (basis, spec) = solve(cfg)?;
    let shot = shot_inputs(&basis, &spec)?;
    let scale = cfg.basis.scale;
    let k = cfg.basis.k.min(4).max(2);
    let tol = cfg.basis.tol;
    let mut freq = move |p: &harmonium::CircuitParams, b: &harmonium::FluxBias| {
        let basis = model::circuit_basis(scale)?;
        let spec = model::solve_circuit(p, b, &basis, k, tol)?;
        spec.transition(0, 1)
    };
    let report =
        noise::dephasing_report(&mut freq, &cfg.circuit, &cfg.bias, &cfg.noise, &spec, &basis, shot)?;
    let rows: Vec<Vec<String>> = report
        .channels
        .iter()
        .map(|c| {
            vec![
                c.label.clone(),
                format!("{:.6e}", c.gamma),
                format!("{:.6e}", c.t_phi_s()),
            ]
        })
        .collect();
    let path = cli.out_dir.join("dephasing.csv");
    write_csv(&path, "channel,gamma_phi_per_s,t_phi_s", &rows)?;
    Ok(("dephasing", vec![path], spec.converged.iter().all(|&c| c)))
}

/// Worst asymmetry-averaged decoherence rate (bit-flip plus dephasing,
/// heating excluded) at one parameter point. The search uses the
/// configured grid; converged tables should be re-run at full scale.
fn objective(cfg: &Config, x: &[f64; 5]) -> Result<f64> {
    let mut params = cfg.circuit.clone();
    params.e_jk = x[0];
    params.e_jf = x[1];
    params.e_lk = x[2];
    params.e_lf = x[3];
    params.c_sh = x[4];
    params.cap_lock = true;
    params = params.with_relative_asymmetry(0.01);
    params.apply_cap_lock()?;
    params.validate()?;
    let basis = model::circuit_basis(cfg.basis.scale)?;
    let k = cfg.basis.k.max(noise::MIN_STATES);
    let sigma = 0.25 * params.de_jk;
    noise::asymmetry_average(sigma, |d| {
        let mut p = params.clone();
        p.de_jk += d;
        let spec = model::solve_circuit(&p, &cfg.bias, &basis, k, cfg.basis.tol)?;
        let rates = noise::transition_report(&spec, &p, &cfg.bias, &basis, &cfg.noise)?;
        let mut worst = rates.bit_flip_total();
        let scale = cfg.basis.scale;
        let tol = cfg.basis.tol;
        let mut freq = move |q: &harmonium::CircuitParams, b: &harmonium::FluxBias| {
            let basis = model::circuit_basis(scale)?;
            let spec = model::solve_circuit(q, b, &basis, 4, tol)?;
            spec.transition(0, 1)
        };
        let deph =
            noise::dephasing_report(&mut freq, &p, &cfg.bias, &cfg.noise, &spec, &basis, None)?;
        worst = worst.max(deph.worst_rate());
        Ok(worst)
    })
}

fn cmd_optimize(cli: &Cli, cfg: &Config, budget: usize, bounds: Option<&str>) -> CmdResult {
    let bounds = match bounds {
        Some(text) => {
            serde_json::from_str::<Bounds>(text).map_err(|e| Error::Config(e.to_string()))?
        }
        None => Bounds::around([35.0, 50.0, 11.0, 14.0, 1500.0], 1.0 / 3.0, 3.0),
    };
    let opts = OptimizeOptions { budget, seed: cli.seed, ..OptimizeOptions::default() };

    // resumable runs: cached evaluations are replayed instead of recomputed
    let checkpoint = cli.out_dir.join("optimize_checkpoint.json");
    let mut cache: Vec<optimize::Evaluation> = if checkpoint.exists() {
        serde_json::from_str(&std::fs::read_to_string(&checkpoint)?)?
    } else {
        Vec::new()
    };
    let mut f = |x: &[f64; 5]| -> Result<f64> {
        if let Some(hit) = cache.iter().find(|e| e.x.iter().zip(x).all(|(a, b)| a == b)) {
            return Ok(hit.value);
        }
        let value = objective(cfg, x)?;
        cache.push(optimize::Evaluation { x: *x, value });
        write_json(&checkpoint, &cache)?;
        Ok(value)
    };
    let result = optimize::optimize(&mut f, &bounds, &opts)?;
    let path = cli.out_dir.join("optimize.json");
    write_json(&path, &result)?;
    Ok(("optimize", vec![path, checkpoint], true))
}

#[derive(Serialize)]
struct GateArtifact {
    kind: String,
    duration_ns: f64,
    amplitude: f64,
    carrier_ghz: Option<f64>,
    populations: Option<Vec<f64>>,
    leakage: f64,
    norm_drift: f64,
    theta_rad: Option<f64>,
    fidelity: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_gate(
    cli: &Cli,
    cfg: &Config,
    kind: GateKind,
    carrier: Option<f64>,
    detuning: f64,
    duration: f64,
    amplitude: f64,
    levels: usize,
    e_j_coupler: f64,
) -> CmdResult {
    let (basis, spec) = solve(cfg)?;
    match kind {
        GateKind::Raman => {
            let k = levels.min(spec.len());
            let truncated = truncate(&spec, k);
            let carrier = match carrier {
                Some(c) => c,
                None => truncated.transition(0, 2)? - detuning,
            };
            let energies: Vec<f64> =
                truncated.energies.iter().map(|e| e - truncated.energies[0]).collect();
            let n_mat =
                eigen::eigenbasis_matrix(&truncated, &model::qubit_charge_operator(&basis));
            let pulse = PulseSchedule {
                carrier_ghz: carrier,
                duration_ns: duration,
                amplitude_ghz: amplitude,
                phase: 0.0,
            };
            let mut psi0 = vec![Complex64::ZERO; k];
            psi0[0] = Complex64::ONE;
            let run = dynamics::propagate(&energies, &n_mat, &pulse, &psi0, 200)?;
            let csv = cli.out_dir.join("gate_populations.csv");
            let mut header = String::from("t_ns");
            for i in 0..k {
                header.push_str(&format!(",p{i}"));
            }
            let rows: Vec<Vec<String>> = run
                .trace
                .iter()
                .map(|(t, pops)| {
                    let mut row = vec![format!("{t:.6e}")];
                    row.extend(pops.iter().map(|p| format!("{p:.9e}")));
                    row
                })
                .collect();
            write_csv(&csv, &header, &rows)?;
            let json = cli.out_dir.join("gate.json");
            write_json(
                &json,
                &GateArtifact {
                    kind: "raman".into(),
                    duration_ns: duration,
                    amplitude,
                    carrier_ghz: Some(carrier),
                    populations: Some(run.populations.clone()),
                    leakage: run.leakage(),
                    norm_drift: run.norm_drift,
                    theta_rad: None,
                    fidelity: None,
                },
            )?;
            Ok(("gate", vec![csv, json], run.norm_drift < 1e-6))
        }
        GateKind::Cz => {
            let q = model::cz_qubit(&spec, &basis, levels.min(spec.len()).min(6));
            let pulse = PulseSchedule {
                carrier_ghz: 0.0,
                duration_ns: duration,
                amplitude_ghz: amplitude,
                phase: 0.0,
            };
            let run = dynamics::cz_gate(&q, &q, e_j_coupler, e_j_coupler, &pulse, 0)?;
            let json = cli.out_dir.join("gate.json");
            write_json(
                &json,
                &GateArtifact {
                    kind: "cz".into(),
                    duration_ns: duration,
                    amplitude,
                    carrier_ghz: None,
                    populations: None,
                    leakage: run.leakage,
                    norm_drift: run.norm_drift,
                    theta_rad: Some(run.theta),
                    fidelity: Some(run.fidelity),
                },
            )?;
            Ok(("gate", vec![json], run.norm_drift < 1e-6))
        }
    }
}

fn truncate(spec: &Spectrum, k: usize) -> Spectrum {
    Spectrum {
        energies: spec.energies[..k].to_vec(),
        states: spec.states[..k].to_vec(),
        residuals: spec.residuals[..k].to_vec(),
        basis_hash: spec.basis_hash.clone(),
        converged: spec.converged[..k].to_vec(),
        edge_masses: spec.edge_masses[..k].to_vec(),
        tol: spec.tol,
    }
}

fn cmd_readout(cli: &Cli, cfg: &Config, omega_min: f64, omega_max: f64, points: usize) -> CmdResult {
    if points < 2 || !(omega_max > omega_min) {
        return Err(Error::Config(format!(
            "readout sweep needs at least 2 points and omega_max > omega_min, got {points} in [{omega_min}, {omega_max}]"
        )));
    }
    let (basis, spec) = solve(cfg)?;
    let n_mat = eigen::eigenbasis_matrix(&spec, &model::qubit_charge_operator(&basis));
    let mut rd = ReadoutConfig::default();
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let omega = omega_min + (omega_max - omega_min) * i as f64 / (points - 1) as f64;
        rd.omega_r = omega;
        let shifts = readout::dispersive_shifts(&spec, &n_mat, &rd, 3)?;
        rows.push(vec![
            format!("{omega:.9e}"),
            format!("{:.9e}", shifts.chi[0]),
            format!("{:.9e}", shifts.chi[1]),
            format!("{:.9e}", shifts.chi[2]),
            format!("{:.9e}", shifts.chi_logical()),
            format!("{:.9e}", shifts.chi_erasure()),
            shifts.resonance_warning.to_string(),
        ]);
    }
    let csv = cli.out_dir.join("readout.csv");
    write_csv(
        &csv,
        "omega_r_ghz,chi_g_ghz,chi_e_ghz,chi_f_ghz,chi_logical_ghz,chi_erasure_ghz,resonance_warning",
        &rows,
    )?;
    let rd = ReadoutConfig::default();
    let shifts = readout::dispersive_shifts(&spec, &n_mat, &rd, 3)?;
    let budget = readout::erasure_budget(
        units::ghz_to_angular(shifts.chi_logical()),
        units::ghz_to_angular(shifts.chi_erasure()),
        &rd,
    );
    let json = cli.out_dir.join("readout_budget.json");
    write_json(&json, &budget)?;
    Ok(("readout", vec![csv, json], spec.converged.iter().all(|&c| c)))
}

fn cmd_sweep(cli: &Cli, cfg: &Config, from: f64, to: f64, points: usize) -> CmdResult {
    if points < 2 {
        return Err(Error::Config(format!("sweep needs at least 2 points, got {points}")));
    }
    let basis = model::circuit_basis(cfg.basis.scale)?;
    let mut rows = Vec::with_capacity(points);
    let mut all_converged = true;
    for i in 0..points {
        let rel = from + (to - from) * i as f64 / (points - 1) as f64;
        let mut params = cfg.circuit.with_relative_asymmetry(rel);
        params.apply_cap_lock()?;
        let spec = model::solve_circuit(&params, &cfg.bias, &basis, 4, cfg.basis.tol)?;
        all_converged &= spec.converged.iter().all(|&c| c);
        rows.push(vec![
            format!("{rel:.9e}"),
            format!("{:.9e}", params.de_jk),
            format!("{:.12e}", spec.transition(0, 1)?),
        ]);
    }
    let csv = cli.out_dir.join("sweep.csv");
    write_csv(&csv, "rel_asymmetry,de_jk_ghz,freq_ghz", &rows)?;
    Ok(("sweep", vec![csv], all_converged))
}
