//! `multiwell`: expansion dynamics in wider lattices — density snapshots,
//! the core-region fraction N_3w/N over time, and a comparison table across
//! initial trap curvatures (self-trapping).

use serde::Serialize;

use quenchci::error::Result;
use quenchci::model::Model;
use quenchci::observables::{density_at_time, region_moment_series, sigma2_series, RegionSpec};
use quenchci::quench::{evolve, ground_state, QuenchProtocol};

use crate::config::RunConfig;
use crate::output::{fmt_f64, Csv, RunWriter};

#[derive(Serialize)]
struct MultiwellSummary {
    omega_i_sq: f64,
    kept_states: usize,
    completeness_defect: f64,
    min_core_fraction: f64,
    final_core_fraction: f64,
    max_escaped_fraction: f64,
}

pub fn run(cfg: &RunConfig, writer: &mut RunWriter) -> Result<()> {
    cfg.validate()?;
    let model = Model::build(cfg.model_config())?;
    writer.stage("model");
    let omega_list: Vec<f64> = if cfg.multiwell.omega_i_sq_list.is_empty() {
        vec![cfg.trap.omega_i_sq]
    } else {
        cfg.multiwell.omega_i_sq_list.clone()
    };
    let core = RegionSpec::core_3w();
    let n = model.config.n_bosons as f64;
    let mut fractions: Vec<Vec<f64>> = Vec::new();
    let mut sigmas: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut summaries = Vec::new();
    for (run_idx, &omega_i) in omega_list.iter().enumerate() {
        let protocol = QuenchProtocol {
            omega_i_sq: omega_i,
            omega_f_sq: cfg.trap.omega_f_sq,
            t_final: cfg.time.t_final,
            dt_sample: cfg.time.dt_sample,
        };
        protocol.validate()?;
        let (_, psi0) = ground_state(&model, omega_i)?;
        let result = evolve(&model, &protocol, &psi0, cfg.evolve.opts())?;
        let series = region_moment_series(&result, &model, &core)?;
        let frac: Vec<f64> = series.n_d.iter().map(|v| v / n).collect();
        let s2 = sigma2_series(&result, &model)?;
        let minf = frac.iter().cloned().fold(f64::INFINITY, f64::min);
        summaries.push(MultiwellSummary {
            omega_i_sq: omega_i,
            kept_states: result.n_kept(),
            completeness_defect: result.defect,
            min_core_fraction: minf,
            final_core_fraction: *frac.last().expect("nonempty"),
            max_escaped_fraction: 1.0 - minf,
        });
        times = result.times.clone();
        fractions.push(frac);
        sigmas.push(s2);
        // density snapshots for the first initial curvature only
        if run_idx == 0 && cfg.multiwell.density_every > 0.0 {
            let mut csv = Csv::new(&["t", "x", "rho"]);
            let x = &model.orbitals.grid.points;
            let mut t = 0.0;
            while t <= cfg.time.t_final + 1e-9 {
                let rho = density_at_time(&result, &model, t);
                for j in 0..x.len() {
                    csv.row(&[fmt_f64(t), fmt_f64(x[j]), fmt_f64(rho[j])]);
                }
                t += cfg.multiwell.density_every;
            }
            writer.write("density.csv", &csv.into_string())?;
        }
        writer.stage(&format!("evolve_wi_{omega_i}"));
    }

    let mut header: Vec<String> = vec!["t".into()];
    header.extend(omega_list.iter().map(|o| format!("core_frac_wi_{o}")));
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut frac_csv = Csv::new(&refs);
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(fractions.iter().map(|f| fmt_f64(f[i])));
        frac_csv.row(&row);
    }
    writer.write("core_fraction.csv", &frac_csv.into_string())?;

    let mut header: Vec<String> = vec!["t".into()];
    header.extend(omega_list.iter().map(|o| format!("sigma2_x_l_wi_{o}")));
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut s_csv = Csv::new(&refs);
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(sigmas.iter().map(|s| fmt_f64(s[i])));
        s_csv.row(&row);
    }
    writer.write("sigma2.csv", &s_csv.into_string())?;
    writer.write_json("summary.json", &summaries)?;
    writer.write("resolved.toml", &cfg.to_toml_string())?;
    writer.finish("multiwell")?;
    println!(
        "multiwell: {} initial curvature(s), S = {} -> {}",
        omega_list.len(),
        cfg.system.n_sites,
        writer.dir().display()
    );
    Ok(())
}
