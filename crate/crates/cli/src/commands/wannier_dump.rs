//! `wannier-dump`: write the Wannier orbital amplitudes and their
//! band/site/center/width bookkeeping for plotting.

use quenchci::error::Result;
use quenchci::grid::{build_grid, single_particle_eigs, PotentialSpec};
use quenchci::orbitals::{classify_bands, wannier_states};

use crate::config::RunConfig;
use crate::output::{fmt_f64, Csv, RunWriter};

pub fn run(cfg: &RunConfig, writer: &mut RunWriter) -> Result<()> {
    cfg.validate()?;
    let grid = build_grid(cfg.system.n_grid, cfg.system.n_sites)?;
    let spec = PotentialSpec {
        v0: cfg.system.v0,
        omega_sq: if cfg.system.wannier_at_initial_trap { cfg.trap.omega_i_sq } else { 0.0 },
        n_sites: cfg.system.n_sites,
        g: cfg.system.g,
    };
    let n_orb = cfg.system.n_sites * cfg.system.n_bands;
    let eigs = single_particle_eigs(&grid, &spec, (n_orb + 3).min(cfg.system.n_grid))?;
    let classified = classify_bands(&eigs, cfg.system.n_sites, cfg.system.n_bands)?;
    let w = wannier_states(&classified, cfg.system.n_bands)?;
    writer.stage("wannier");

    let mut header: Vec<String> = vec!["x".into()];
    for k in 0..w.len() {
        let band = w.band_of.as_ref().expect("bands")[k];
        let site = w.site_of.as_ref().expect("sites")[k];
        header.push(format!("w_b{band}_s{site}"));
    }
    let refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&refs);
    let inv_sqrt_dx = 1.0 / w.grid.weight.sqrt();
    for j in 0..w.grid.n_points {
        let mut row = vec![fmt_f64(w.grid.points[j])];
        for k in 0..w.len() {
            row.push(fmt_f64(w.vectors[[j, k]] * inv_sqrt_dx));
        }
        csv.row(&row);
    }
    writer.write("wannier.csv", &csv.into_string())?;

    let mut info = Csv::new(&["orbital", "band", "site", "energy", "center", "rms_width"]);
    for k in 0..w.len() {
        info.row(&[
            k.to_string(),
            w.band_of.as_ref().unwrap()[k].to_string(),
            w.site_of.as_ref().unwrap()[k].to_string(),
            fmt_f64(w.energies[k]),
            fmt_f64(w.centers.as_ref().unwrap()[k]),
            fmt_f64(w.widths.as_ref().unwrap()[k]),
        ]);
    }
    writer.write("orbitals.csv", &info.into_string())?;
    writer.write("resolved.toml", &cfg.to_toml_string())?;
    writer.finish("wannier-dump")?;
    println!("wannier-dump: {} orbitals -> {}", w.len(), writer.dir().display());
    Ok(())
}
