//! Subcommand implementations.

pub mod multiwell;
pub mod quench_cmd;
pub mod response_scan;
pub mod selftest;
pub mod spectrum;
pub mod wannier_dump;

use quenchci::ci::Parity;
use quenchci::error::{Error, Result};
use quenchci::fock::{format_label, reflect_state, ComboParity};
use quenchci::model::Model;

use crate::config::{parse_target, RunConfig};

/// Resolve a population-target string to a parity-block column and a
/// display label.
pub fn resolve_target(model: &Model, text: &str) -> Result<(usize, String)> {
    let (occ, _combo) = parse_target(text, model.basis.n_orbitals, model.basis.n_bosons)?;
    let (refl, _) = reflect_state(&occ, model.basis.n_sites);
    let idx = model.basis.index(&occ);
    let ridx = model.basis.index(&refl);
    let rep = idx.min(ridx);
    // locate the even-block column whose representative matches
    for (col, bc) in model.pbasis.even_cols.iter().enumerate() {
        if bc.rep == rep {
            let combo = if bc.partner.is_some() {
                ComboParity::Symmetric
            } else {
                ComboParity::None
            };
            let disp = bc.partner.unwrap_or(bc.rep);
            let label = format_label(&model.basis.states[disp], model.basis.n_sites, combo);
            return Ok((col, label));
        }
    }
    Err(Error::Config(format!(
        "target '{text}' has no even-parity combination (odd self-reflection sign)"
    )))
}

/// Population targets: explicit ones from the config, or the dominant
/// contributions of the given block vector.
pub fn resolve_targets(
    model: &Model,
    cfg: &RunConfig,
    psi0: &ndarray::Array1<f64>,
) -> Result<Vec<(usize, String)>> {
    if !cfg.populations.targets.is_empty() {
        return cfg
            .populations
            .targets
            .iter()
            .map(|t| resolve_target(model, t))
            .collect();
    }
    let count = if cfg.populations.auto_count == 0 { 8 } else { cfg.populations.auto_count };
    let mut weighted: Vec<(usize, f64)> =
        psi0.iter().enumerate().map(|(c, v)| (c, v * v)).collect();
    weighted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(weighted
        .into_iter()
        .take(count)
        .map(|(col, _)| {
            let bc = &model.pbasis.even_cols[col];
            let combo = if bc.partner.is_some() {
                ComboParity::Symmetric
            } else {
                ComboParity::None
            };
            (col, format_label(
                &model.basis.states[bc.partner.unwrap_or(bc.rep)],
                model.basis.n_sites,
                combo,
            ))
        })
        .collect())
}

pub fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}
