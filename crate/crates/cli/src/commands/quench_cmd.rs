//! `quench`: evolve the pre-quench ground state under the post-quench
//! Hamiltonian and emit observable, population and Fourier series.

use serde::Serialize;

use quenchci::error::Result;
use quenchci::model::Model;
use quenchci::observables::{
    fourier_branches, region_moment_series, sigma2_series, temporal_variance,
    time_averaged_variance, BranchSpectrum, RegionSpec, VariancePair,
};
use quenchci::quench::{evolve, ground_state, state_prep_search};
use quenchci::scan::dominant_label;

use crate::commands::resolve_targets;
use crate::config::RunConfig;
use crate::output::{fmt_f64, Csv, RunWriter};

#[derive(Serialize)]
struct QuenchReport {
    initial_energy: f64,
    initial_dominant_label: String,
    initial_dominant_weight: f64,
    kept_states: usize,
    completeness_defect: f64,
    time_averaged: VariancePair,
    temporal: VariancePair,
    branches: BranchSpectrum,
    state_preparation: Vec<PrepEntry>,
}

#[derive(Serialize)]
struct PrepEntry {
    target: String,
    threshold: f64,
    earliest_time: Option<f64>,
    max_population: f64,
}

pub fn run(cfg: &RunConfig, writer: &mut RunWriter) -> Result<()> {
    cfg.validate()?;
    let protocol = cfg.protocol();
    protocol.validate()?;
    let model = Model::build(cfg.model_config())?;
    writer.stage("model");
    let (e0, psi0) = ground_state(&model, protocol.omega_i_sq)?;
    let init_label = dominant_label(
        psi0.as_slice().expect("contiguous"),
        &model.pbasis,
        &model.basis,
        quenchci::ci::Parity::Even,
    );
    let result = evolve(&model, &protocol, &psi0, cfg.evolve.opts())?;
    writer.stage("evolve");

    // observable time series
    let whole = RegionSpec::whole(&model);
    let core = RegionSpec::core_3w();
    let s2_l = sigma2_series(&result, &model)?;
    let core_series = region_moment_series(&result, &model, &core)?;
    let n = model.config.n_bosons as f64;
    let mut ts_csv = Csv::new(&["t", "sigma2_x_l", "sigma2_x_3w", "n_3w_frac", "x_mean_3w"]);
    for (i, &t) in result.times.iter().enumerate() {
        ts_csv.row(&[
            fmt_f64(t),
            fmt_f64(s2_l[i]),
            fmt_f64(core_series.var_x[i]),
            fmt_f64(core_series.n_d[i] / n),
            fmt_f64(core_series.mean_x[i]),
        ]);
    }
    writer.write("timeseries.csv", &ts_csv.into_string())?;

    // populations
    let targets = resolve_targets(&model, cfg, &psi0)?;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(targets.iter().map(|(_, l)| l.clone()));
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut pop_csv = Csv::new(&header_refs);
    let series: Vec<Vec<f64>> =
        targets.iter().map(|(col, _)| result.population_series(*col)).collect();
    for (i, &t) in result.times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(series.iter().map(|s| fmt_f64(s[i])));
        pop_csv.row(&row);
    }
    writer.write("populations.csv", &pop_csv.into_string())?;

    // spectra and scalar responses
    let branches = fourier_branches(&result, &model, &whole)?;
    let mut f_csv = Csv::new(&["omega_fourier", "magnitude"]);
    for (w, m) in branches.freqs.iter().zip(branches.magnitudes.iter()) {
        f_csv.row(&[fmt_f64(*w), fmt_f64(*m)]);
    }
    writer.write("fourier.csv", &f_csv.into_string())?;
    let ta = time_averaged_variance(&result, &model, &whole)?;
    let dt = temporal_variance(&result, &model, &whole)?;
    let threshold = cfg.populations.prep_threshold;
    let preparation = targets
        .iter()
        .zip(series.iter())
        .map(|((_, label), s)| PrepEntry {
            target: label.clone(),
            threshold,
            earliest_time: state_prep_search(&result.times, s, threshold),
            max_population: s.iter().cloned().fold(0.0, f64::max),
        })
        .collect();
    let report = QuenchReport {
        initial_energy: e0,
        initial_dominant_label: init_label.label,
        initial_dominant_weight: init_label.weight,
        kept_states: result.n_kept(),
        completeness_defect: result.defect,
        time_averaged: ta,
        temporal: dt,
        branches,
        state_preparation: preparation,
    };
    writer.stage("observables");
    writer.write_json("report.json", &report)?;
    writer.write("resolved.toml", &cfg.to_toml_string())?;
    writer.finish("quench")?;
    println!(
        "quench {} -> {}: kept {} states (defect {:.1e}) -> {}",
        protocol.omega_i_sq,
        protocol.omega_f_sq,
        result.n_kept(),
        result.defect,
        writer.dir().display()
    );
    Ok(())
}
