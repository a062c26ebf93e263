//! `response-scan`: quench the fixed initial state to every curvature on a
//! grid and tabulate the response scalars, with the scan grid augmented
//! around detected avoided crossings so that narrow resonances are sampled.

use quenchci::ci::Parity;
use quenchci::error::{Error, Result};
use quenchci::model::Model;
use quenchci::observables::{response_scalars, RegionSpec};
use quenchci::quench::{evolve, ground_state};
use quenchci::scan::{detect_crossings, scan_spectrum, AvoidedCrossing, DetectConfig};

use crate::config::RunConfig;
use crate::output::{fmt_f64, Csv, RunWriter};

pub fn run(cfg: &RunConfig, writer: &mut RunWriter) -> Result<()> {
    cfg.validate()?;
    if cfg.scan.omega_sq_max > cfg.trap.omega_i_sq {
        return Err(Error::Config(format!(
            "response scan range tops at {} but the initial curvature is {}",
            cfg.scan.omega_sq_max, cfg.trap.omega_i_sq
        )));
    }
    let model = Model::build(cfg.model_config())?;
    writer.stage("model");

    // crossings within the scan window guide the grid refinement
    let detect_cfg = DetectConfig {
        max_levels: cfg.scan.refine_max_levels,
        rel_tol: cfg.scan.refine_rel_tol,
        max_pairs: usize::MAX,
    };
    let base_grid = cfg.scan.grid();
    let n_states = cfg.scan.n_states.min(model.block_dim(Parity::Even));
    let spectrum = scan_spectrum(&model, Parity::Even, &base_grid, n_states)?;
    let crossings = detect_crossings(&model, &spectrum, &detect_cfg)?;
    writer.stage("crossings");

    let mut grid = base_grid.clone();
    for c in &crossings {
        let w = c.width.max(1e-4);
        for o in [
            c.omega_sq_c - 2.0 * w,
            c.omega_sq_c - w,
            c.omega_sq_c - 0.5 * w,
            c.omega_sq_c,
            c.omega_sq_c + 0.5 * w,
            c.omega_sq_c + w,
            c.omega_sq_c + 2.0 * w,
        ] {
            if o > cfg.scan.omega_sq_min && o < cfg.scan.omega_sq_max {
                grid.push(o);
            }
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let (_, psi0) = ground_state(&model, cfg.trap.omega_i_sq)?;
    let whole = RegionSpec::whole(&model);
    let core = RegionSpec::core_3w();
    let mut csv = Csv::new(&[
        "omega_f_sq",
        "timeavg_integral",
        "timeavg_spectral",
        "timeavg_tinf",
        "deltat_integral",
        "deltat_spectral",
        "deltat_tinf",
        "deltat_3w_integral",
        "excluded_lines",
        "nearest_crossing",
        "nearest_class",
    ]);
    let rows: Vec<Result<Vec<String>>> = {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|&omega_f| {
                let protocol = quenchci::quench::QuenchProtocol {
                    omega_i_sq: cfg.trap.omega_i_sq,
                    omega_f_sq: omega_f,
                    t_final: cfg.time.t_final,
                    dt_sample: cfg.time.dt_sample,
                };
                let r = evolve(&model, &protocol, &psi0, cfg.evolve.opts())?;
                let scalars = response_scalars(&r, &model, &whole)?;
                let (ta, dt) = (scalars.time_averaged, scalars.temporal);
                let dt3 = response_scalars(&r, &model, &core)?.temporal;
                let nearest = nearest_crossing(&crossings, omega_f);
                Ok(vec![
                    fmt_f64(omega_f),
                    fmt_f64(ta.integral),
                    fmt_f64(ta.spectral.unwrap_or(f64::NAN)),
                    fmt_f64(ta.spectral_tinf.unwrap_or(f64::NAN)),
                    fmt_f64(dt.integral),
                    fmt_f64(dt.spectral.unwrap_or(f64::NAN)),
                    fmt_f64(dt.spectral_tinf.unwrap_or(f64::NAN)),
                    fmt_f64(dt3.integral),
                    dt.excluded_lines.to_string(),
                    nearest.map(|c| fmt_f64(c.omega_sq_c)).unwrap_or_else(|| "".into()),
                    nearest
                        .map(|c| format!("{:?}", c.class))
                        .unwrap_or_else(|| "".into()),
                ])
            })
            .collect()
    };
    for row in rows {
        csv.row(&row?);
    }
    writer.stage("scan");
    writer.write("response.csv", &csv.into_string())?;
    writer.write_json("crossings.json", &crossings)?;
    writer.write("resolved.toml", &cfg.to_toml_string())?;
    writer.finish("response-scan")?;
    println!(
        "response-scan: {} quench points, {} crossings annotated -> {}",
        grid.len(),
        crossings.len(),
        writer.dir().display()
    );
    Ok(())
}

fn nearest_crossing(crossings: &[AvoidedCrossing], omega: f64) -> Option<&AvoidedCrossing> {
    crossings.iter().min_by(|a, b| {
        (a.omega_sq_c - omega)
            .abs()
            .partial_cmp(&(b.omega_sq_c - omega).abs())
            .unwrap()
    })
}
