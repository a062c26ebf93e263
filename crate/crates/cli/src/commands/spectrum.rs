//! `spectrum`: sweep the trap curvature, emit per-curve energies and labels
//! for both parity blocks, and the detected avoided crossings.

use quenchci::ci::Parity;
use quenchci::error::Result;
use quenchci::model::Model;
use quenchci::scan::{detect_crossings, scan_spectrum, DetectConfig};

use crate::commands::parity_name;
use crate::config::RunConfig;
use crate::output::{fmt_f64, Csv, RunWriter};

pub fn run(cfg: &RunConfig, writer: &mut RunWriter) -> Result<()> {
    cfg.validate()?;
    let model = Model::build(cfg.model_config())?;
    writer.stage("model");
    let grid = cfg.scan.grid();
    let detect_cfg = DetectConfig {
        max_levels: cfg.scan.refine_max_levels,
        rel_tol: cfg.scan.refine_rel_tol,
        max_pairs: usize::MAX,
    };
    let mut csv = Csv::new(&["omega_sq", "parity", "curve", "energy", "label", "weight"]);
    let mut all_crossings = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let n_states = cfg.scan.n_states.min(model.block_dim(parity));
        let scan = scan_spectrum(&model, parity, &grid, n_states)?;
        for p in &scan.points {
            for k in 0..n_states {
                csv.row(&[
                    fmt_f64(p.omega_sq),
                    parity_name(parity).to_string(),
                    k.to_string(),
                    fmt_f64(p.energies[k]),
                    p.labels[k].label.clone(),
                    fmt_f64(p.labels[k].weight),
                ]);
            }
        }
        let crossings = detect_crossings(&model, &scan, &detect_cfg)?;
        all_crossings.extend(crossings);
        if !scan.ambiguities.is_empty() {
            eprintln!(
                "note: continuation ambiguity at {} point(s) in the {} block",
                scan.ambiguities.len(),
                parity_name(parity)
            );
        }
    }
    writer.stage("scan");
    writer.write("spectrum.csv", &csv.into_string())?;
    writer.write_json("crossings.json", &all_crossings)?;
    writer.write("resolved.toml", &cfg.to_toml_string())?;
    writer.finish("spectrum")?;
    println!(
        "spectrum: {} scan points, {} crossings detected -> {}",
        grid.len(),
        all_crossings.len(),
        writer.dir().display()
    );
    Ok(())
}
