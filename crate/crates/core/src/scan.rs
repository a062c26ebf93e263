//! Trap-frequency spectrum scans: per-point diagonalization, eigenvector
//! continuation, dominant number-state labels, and avoided-crossing
//! detection with adaptive refinement.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::ci::{Parity, ParityBasis};
use crate::error::{Error, Result};
use crate::fock::{format_label, ComboParity, FockBasis};
use crate::linalg;
use crate::model::Model;

/// Dominant number-state (or parity-combination) contribution of a
/// block-coordinate eigenvector.
#[derive(Debug, Clone, Serialize)]
pub struct DominantLabel {
    /// Block column of the dominant combination.
    pub col: usize,
    pub label: String,
    pub weight: f64,
}

/// One scan point: the lowest tracked eigenpairs of one parity block.
#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub omega_sq: f64,
    pub energies: Array1<f64>,
    /// Row k = k-th eigenvector in block coordinates.
    pub vectors: Array2<f64>,
    pub labels: Vec<DominantLabel>,
}

/// Scan of one parity block over a trap-curvature grid.
pub struct SpectralScan {
    pub parity: Parity,
    pub n_tracked: usize,
    pub points: Vec<ScanPoint>,
    /// tracking[i][k]: index at point i+1 of the curve that continues
    /// tracked state k of point i (maximal-overlap assignment).
    pub tracking: Vec<Vec<usize>>,
    /// Scan points where two continuation overlaps competed within 1e-3.
    pub ambiguities: Vec<usize>,
}

/// Width class of an avoided crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossingClass {
    VeryNarrow,
    Narrow,
    Wide,
}

pub const VERY_NARROW_WIDTH: f64 = 4e-3;

/// A detected avoided crossing between two adjacent curves of one block.
#[derive(Debug, Clone, Serialize)]
pub struct AvoidedCrossing {
    pub parity: Parity,
    /// Sorted-curve indices (k, k+1) within the block.
    pub pair: (usize, usize),
    /// Location of the minimal gap on the omega^2 axis.
    pub omega_sq_c: f64,
    pub min_gap: f64,
    /// Width along omega^2 from the two-level fit 2*Delta/|s1-s2|.
    pub width: f64,
    pub class: CrossingClass,
    /// Diabat slopes from the two-level fit.
    pub slopes: (f64, f64),
    /// Dominant labels (lower, upper) just left and just right of the
    /// crossing window.
    pub labels_left: (String, String),
    pub labels_right: (String, String),
    /// Exact label swap across the window.
    pub label_exchange: bool,
    /// Worst relative slope mismatch between the continued diabats.
    pub slope_mismatch: f64,
    /// Omega^2 extent of the label/slope evaluation window.
    pub window: (f64, f64),
}

/// Dominant label of a block-coordinate vector: argmax of the squared
/// coefficient over combination states, ties broken by basis order.
pub fn dominant_label(
    vec: &[f64],
    pbasis: &ParityBasis,
    basis: &FockBasis,
    parity: Parity,
) -> DominantLabel {
    let cols = match parity {
        Parity::Even => &pbasis.even_cols,
        Parity::Odd => &pbasis.odd_cols,
    };
    let mut best = 0usize;
    let mut best_w = -1.0;
    for (c, v) in vec.iter().enumerate() {
        let w = v * v;
        if w > best_w + 1e-15 {
            best_w = w;
            best = c;
        }
    }
    let col = &cols[best];
    let combo = match (col.partner, parity) {
        (None, _) => ComboParity::None,
        (Some(_), Parity::Even) => ComboParity::Symmetric,
        (Some(_), Parity::Odd) => ComboParity::Antisymmetric,
    };
    DominantLabel {
        col: best,
        label: format_label(
            &basis.states[col.partner.unwrap_or(col.rep)],
            basis.n_sites,
            combo,
        ),
        weight: best_w,
    }
}

fn solve_point(
    model: &Model,
    omega_sq: f64,
    parity: Parity,
    n_solve: usize,
) -> Result<ScanPoint> {
    let eig = model.solve_block_lowest(omega_sq, parity, n_solve)?;
    let labels = (0..eig.values.len())
        .map(|k| {
            dominant_label(
                eig.vectors.row(k).as_slice().expect("contiguous row"),
                &model.pbasis,
                &model.basis,
                parity,
            )
        })
        .collect();
    Ok(ScanPoint { omega_sq, energies: eig.values, vectors: eig.vectors, labels })
}

/// Diagonalize one parity block on a grid of trap curvatures and track the
/// lowest `n_states` curves across points by maximal-overlap assignment.
pub fn scan_spectrum(
    model: &Model,
    parity: Parity,
    omega_sq_grid: &[f64],
    n_states: usize,
) -> Result<SpectralScan> {
    let dim = model.block_dim(parity);
    if n_states > dim {
        return Err(Error::Config(format!(
            "n_states = {n_states} exceeds block dimension {dim}"
        )));
    }
    let buffer = (n_states + 4).min(dim);
    let points: Vec<ScanPoint> = omega_sq_grid
        .par_iter()
        .map(|&o| solve_point(model, o, parity, buffer))
        .collect::<Result<Vec<_>>>()?;
    let mut tracking = Vec::with_capacity(points.len().saturating_sub(1));
    let mut ambiguities = Vec::new();
    for i in 0..points.len().saturating_sub(1) {
        let a = &points[i].vectors;
        let b = &points[i + 1].vectors;
        let overlap = linalg::gemm(a, false, b, true).mapv(f64::abs);
        let tracked = overlap.slice(ndarray::s![..n_states, ..]).to_owned();
        let assignment = linalg::assign_max(&tracked);
        for k in 0..n_states {
            let chosen = tracked[[k, assignment[k]]];
            let mut runner_up = 0.0f64;
            for j in 0..tracked.ncols() {
                if j != assignment[k] {
                    runner_up = runner_up.max(tracked[[k, j]]);
                }
            }
            if (chosen - runner_up).abs() < 1e-3 {
                ambiguities.push(i);
                break;
            }
        }
        tracking.push(assignment);
    }
    Ok(SpectralScan { parity, n_tracked: n_states, points, tracking, ambiguities })
}

/// Refinement/detection knobs (decision D6 defaults).
#[derive(Debug, Clone, Copy)]
pub struct DetectConfig {
    pub max_levels: usize,
    pub rel_tol: f64,
    pub max_pairs: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig { max_levels: 12, rel_tol: 0.01, max_pairs: usize::MAX }
    }
}

/// Find avoided crossings among the tracked curves of a scan.
///
/// Each interior local minimum of an adjacent-pair gap is refined by
/// bisection (re-diagonalizing the block), then characterized by a local
/// two-level fit: diabat slopes from the sorted curves outside the crossing
/// window, width = min_gap / |s1 - s2|, and the label exchange across the
/// window.
pub fn detect_crossings(
    model: &Model,
    scan: &SpectralScan,
    cfg: &DetectConfig,
) -> Result<Vec<AvoidedCrossing>> {
    let n = scan.points.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    let parity = scan.parity;
    let mut out = Vec::new();
    for k in 0..scan.n_tracked.saturating_sub(1) {
        let gap = |p: &ScanPoint| p.energies[k + 1] - p.energies[k];
        let minima: Vec<usize> = (1..n - 1)
            .filter(|&i| {
                let (g0, g1, g2) = (
                    gap(&scan.points[i - 1]),
                    gap(&scan.points[i]),
                    gap(&scan.points[i + 1]),
                );
                g1 < g0 && g1 < g2
            })
            .collect();
        for (mi, &i) in minima.iter().enumerate() {
            // refine the minimum by interval bisection
            let mut lo = scan.points[i - 1].omega_sq;
            let mut hi = scan.points[i + 1].omega_sq;
            let mut omega_c = scan.points[i].omega_sq;
            let mut min_gap = gap(&scan.points[i]);
            let solve_gap = |o: f64| -> Result<f64> {
                let e = model.solve_block_lowest(o, parity, k + 2)?;
                Ok(e.values[k + 1] - e.values[k])
            };
            for _level in 0..cfg.max_levels {
                let prev = min_gap;
                let ml = 0.5 * (lo + omega_c);
                let mr = 0.5 * (omega_c + hi);
                let gl = solve_gap(ml)?;
                let gr = solve_gap(mr)?;
                // keep the bracketing triplet around the smallest value
                if gl <= min_gap && gl <= gr {
                    hi = omega_c;
                    omega_c = ml;
                    min_gap = gl;
                } else if gr <= min_gap {
                    lo = omega_c;
                    omega_c = mr;
                    min_gap = gr;
                } else {
                    lo = ml;
                    hi = mr;
                }
                if (prev - min_gap).abs() <= cfg.rel_tol * prev.abs() {
                    break;
                }
            }
            // first-pass width estimate from slopes a few grid steps out
            let step = (scan.points[1].omega_sq - scan.points[0].omega_sq).abs();
            let grid_index = |omega: f64| -> usize {
                let mut best = 0usize;
                let mut d = f64::INFINITY;
                for (idx, p) in scan.points.iter().enumerate() {
                    let dd = (p.omega_sq - omega).abs();
                    if dd < d {
                        d = dd;
                        best = idx;
                    }
                }
                best
            };
            let ic = grid_index(omega_c);
            // each sorted curve changes slope from one diabat's to the
            // other's across the crossing, so the same-curve left/right
            // slope difference estimates |s1 - s2|; the probe distance must
            // sit outside the crossing core, so iterate it against the
            // width estimate
            let side_slope = |curve: usize, left: bool, d: usize| -> f64 {
                let (a, b) = if left {
                    (ic.saturating_sub(d), ic.saturating_sub(1).max(1))
                } else {
                    ((ic + 1).min(n - 2), (ic + d).min(n - 1))
                };
                (scan.points[b].energies[curve] - scan.points[a].energies[curve])
                    / (scan.points[b].omega_sq - scan.points[a].omega_sq).max(1e-12)
            };
            let mut probe = 4usize;
            let mut width_est = f64::INFINITY;
            for _ in 0..8 {
                let ds_est = (side_slope(k, true, probe) - side_slope(k, false, probe))
                    .abs()
                    .max(
                        (side_slope(k + 1, true, probe) - side_slope(k + 1, false, probe))
                            .abs(),
                    );
                width_est = min_gap / ds_est.max(1e-9);
                let needed = (1.5 * width_est / step).ceil() as usize;
                if needed <= probe || probe >= n {
                    break;
                }
                probe = needed.min(n);
            }
            // window edges at +-1.5 estimated widths (at least one grid
            // step), clamped to the midpoints toward adjacent minima of the
            // same pair so composite regions keep their crossings separate
            let half = (1.5 * width_est).max(step);
            let lo_bound = if mi > 0 { (minima[mi - 1] + i) / 2 } else { 0 };
            let hi_bound =
                if mi + 1 < minima.len() { (i + minima[mi + 1]).div_ceil(2) } else { n - 1 };
            let il = grid_index(omega_c - half).clamp(lo_bound, i);
            let ir = grid_index(omega_c + half).clamp(i, hi_bound);
            // diabat slopes: least-squares over up to 4 points outward from
            // each window edge
            let fit = |edge: usize, curve: usize, leftward: bool| -> f64 {
                let mut xs: Vec<f64> = Vec::new();
                let mut ys: Vec<f64> = Vec::new();
                for d in 0..4usize {
                    let idx = if leftward {
                        edge.checked_sub(d)
                    } else {
                        let v = edge + d;
                        (v < n).then_some(v)
                    };
                    if let Some(idx) = idx {
                        xs.push(scan.points[idx].omega_sq);
                        ys.push(scan.points[idx].energies[curve]);
                    }
                }
                least_squares_slope(&xs, &ys)
            };
            let sl_lower = fit(il, k, true);
            let sl_upper = fit(il, k + 1, true);
            let sr_lower = fit(ir, k, false);
            let sr_upper = fit(ir, k + 1, false);
            // diabats: lower-left continues into upper-right and vice versa
            let s1 = 0.5 * (sl_lower + sr_upper);
            let s2 = 0.5 * (sl_upper + sr_lower);
            let ds = (s1 - s2).abs().max(1e-12);
            let width = min_gap / ds;
            // nearly parallel curves produce shallow spurious minima rather
            // than exchanges; drop anything wider than half the scan range
            let scan_range = scan.points[n - 1].omega_sq - scan.points[0].omega_sq;
            if width > 0.5 * scan_range {
                continue;
            }
            // slope-exchange mismatch on the crossing's own slope scale
            let mismatch1 = (sl_lower - sr_upper).abs() / ds;
            let mismatch2 = (sl_upper - sr_lower).abs() / ds;
            let labels_left = (
                scan.points[il].labels[k].label.clone(),
                scan.points[il].labels[k + 1].label.clone(),
            );
            let labels_right = (
                scan.points[ir].labels[k].label.clone(),
                scan.points[ir].labels[k + 1].label.clone(),
            );
            let label_exchange =
                labels_left.0 == labels_right.1 && labels_left.1 == labels_right.0;
            let class = if width < VERY_NARROW_WIDTH {
                CrossingClass::VeryNarrow
            } else if parity == Parity::Even && k == 0 {
                CrossingClass::Wide
            } else {
                CrossingClass::Narrow
            };
            out.push(AvoidedCrossing {
                parity,
                pair: (k, k + 1),
                omega_sq_c: omega_c,
                min_gap,
                width,
                class,
                slopes: (s1, s2),
                labels_left,
                labels_right,
                label_exchange,
                slope_mismatch: mismatch1.max(mismatch2),
                window: (scan.points[il].omega_sq, scan.points[ir].omega_sq),
            });
            if out.len() >= cfg.max_pairs {
                return Ok(out);
            }
        }
    }
    out.sort_by(|a, b| a.omega_sq_c.partial_cmp(&b.omega_sq_c).unwrap());
    Ok(out)
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den.max(1e-300)
}
