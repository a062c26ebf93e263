//! Observables over states and quench evolutions: one-body density, region
//! moments (count, mean position, position variance), the time-averaged and
//! temporal variances in both their integral and spectral forms, and the
//! Fourier branch analysis of the whole-line variance signal.

use ndarray::{Array1, Array2};
use serde::Serialize;
use std::f64::consts::PI;

use crate::ci::Parity;
use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::grid::OrbitalSet;
use crate::model::Model;
use crate::quench::QuenchResult;

/// Spatial window for restricted observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionSpec {
    pub x_lo: f64,
    pub x_hi: f64,
}

impl RegionSpec {
    pub fn whole(model: &Model) -> Self {
        RegionSpec { x_lo: model.orbitals.grid.x_min, x_hi: model.orbitals.grid.x_max }
    }

    /// The three core sites around the center.
    pub fn core_3w() -> Self {
        RegionSpec { x_lo: -1.5 * PI, x_hi: 1.5 * PI }
    }

    pub fn custom(x_lo: f64, x_hi: f64) -> Result<Self> {
        if x_lo >= x_hi {
            return Err(Error::Config(format!("empty region [{x_lo}, {x_hi}]")));
        }
        Ok(RegionSpec { x_lo, x_hi })
    }

    pub fn covers_box(&self, model: &Model) -> bool {
        let g = &model.orbitals.grid;
        self.x_lo <= g.x_min + 1e-12 && self.x_hi >= g.x_max - 1e-12
    }
}

/// One-body reduced density matrix of a (complex) full-basis state given by
/// its real and imaginary parts.
fn one_body_rdm(
    re: &[f64],
    im: &[f64],
    basis: &FockBasis,
) -> Array2<f64> {
    let m = basis.n_orbitals;
    let mut gamma = Array2::<f64>::zeros((m, m));
    let mut moved = vec![0u8; m];
    for (n, occ) in basis.states.iter().enumerate() {
        let wn = re[n] * re[n] + im[n] * im[n];
        if wn != 0.0 {
            for p in 0..m {
                gamma[[p, p]] += wn * occ[p] as f64;
            }
        }
        // off-diagonal: gamma_pq += Re(conj(c_m) c_n) sqrt(n_q (n_p + 1))
        if re[n] == 0.0 && im[n] == 0.0 {
            continue;
        }
        moved.copy_from_slice(occ);
        for q in 0..m {
            if occ[q] == 0 {
                continue;
            }
            for p in 0..m {
                if p == q {
                    continue;
                }
                moved[q] -= 1;
                moved[p] += 1;
                let idx = basis.index(&moved);
                moved[p] -= 1;
                moved[q] += 1;
                let overlap = re[idx] * re[n] + im[idx] * im[n];
                if overlap != 0.0 {
                    let amp = (occ[q] as f64 * (occ[p] as f64 + 1.0)).sqrt();
                    gamma[[p, q]] += overlap * amp;
                }
            }
        }
    }
    gamma
}

/// One-body density on the grid for a real full-basis state; the quadrature
/// sum of the result times the grid weight equals the particle number.
pub fn one_body_density(
    state: &Array1<f64>,
    basis: &FockBasis,
    orbitals: &OrbitalSet,
) -> Array1<f64> {
    let zeros = vec![0.0; state.len()];
    let gamma = one_body_rdm(state.as_slice().expect("contiguous"), &zeros, basis);
    density_from_rdm(&gamma, orbitals)
}

fn density_from_rdm(gamma: &Array2<f64>, orbitals: &OrbitalSet) -> Array1<f64> {
    let n = orbitals.grid.n_points;
    let m = orbitals.len();
    let w = &orbitals.vectors;
    let inv_dx = 1.0 / orbitals.grid.weight;
    let mut rho = Array1::<f64>::zeros(n);
    for p in 0..m {
        for q in 0..m {
            let g = gamma[[p, q]];
            if g == 0.0 {
                continue;
            }
            for j in 0..n {
                rho[j] += g * w[[j, p]] * w[[j, q]] * inv_dx;
            }
        }
    }
    rho
}

/// Density snapshot of an evolving state at time `t`.
pub fn density_at_time(
    result: &QuenchResult,
    model: &Model,
    t: f64,
) -> Array1<f64> {
    let k = result.n_kept();
    let dim = model.block_dim(Parity::Even);
    let mut re_block = vec![0.0f64; dim];
    let mut im_block = vec![0.0f64; dim];
    for kk in 0..k {
        let ph = result.energies[kk] * t;
        let (c, s) = (ph.cos(), ph.sin());
        let amp = result.coeffs[kk];
        for j in 0..dim {
            let v = amp * result.vectors[[kk, j]];
            re_block[j] += v * c;
            im_block[j] -= v * s;
        }
    }
    let re = model.pbasis.to_full(&re_block, Parity::Even);
    let im = model.pbasis.to_full(&im_block, Parity::Even);
    let gamma = one_body_rdm(
        re.as_slice().expect("contiguous"),
        im.as_slice().expect("contiguous"),
        &model.basis,
    );
    density_from_rdm(&gamma, &model.orbitals)
}

/// Region moments of a static real state: (N_D, <x>_D, sigma^2_D).
pub fn region_moments(
    state: &Array1<f64>,
    basis: &FockBasis,
    orbitals: &OrbitalSet,
    region: &RegionSpec,
) -> Result<(f64, f64, f64)> {
    let ops = crate::ci::region_integrals(orbitals, region.x_lo, region.x_hi);
    let zeros = vec![0.0; state.len()];
    let gamma = one_body_rdm(state.as_slice().expect("contiguous"), &zeros, basis);
    let trace = |k: &Array2<f64>| -> f64 {
        let mut acc = 0.0;
        for p in 0..gamma.nrows() {
            for q in 0..gamma.ncols() {
                acc += gamma[[p, q]] * k[[p, q]];
            }
        }
        acc
    };
    let n_d = trace(&ops.overlap);
    if n_d < 1e-12 {
        return Err(Error::EmptyRegion);
    }
    let mean = trace(&ops.x1) / n_d;
    let var = trace(&ops.x2) / n_d - mean * mean;
    Ok((n_d, mean, var))
}

/// Time series of the region moments along a quench evolution.
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub n_d: Vec<f64>,
    /// Mean position; NaN where the region carries no density.
    pub mean_x: Vec<f64>,
    /// Position variance per Eq.-of-motion normalization; NaN where empty.
    pub var_x: Vec<f64>,
}

pub fn region_moment_series(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<MomentSeries> {
    let ops = model.region_ops(region.x_lo, region.x_hi);
    let m0 = result.op_in_eigenbasis(&model.one_body_block(&ops.overlap, Parity::Even)?);
    let m1 = result.op_in_eigenbasis(&model.one_body_block(&ops.x1, Parity::Even)?);
    let m2 = result.op_in_eigenbasis(&model.one_body_block(&ops.x2, Parity::Even)?);
    let s0 = result.expectation_series(&m0);
    let s1 = result.expectation_series(&m1);
    let s2 = result.expectation_series(&m2);
    let mut mean_x = Vec::with_capacity(s0.len());
    let mut var_x = Vec::with_capacity(s0.len());
    for i in 0..s0.len() {
        if s0[i] < 1e-12 {
            mean_x.push(f64::NAN);
            var_x.push(f64::NAN);
        } else {
            let mean = s1[i] / s0[i];
            mean_x.push(mean);
            var_x.push(s2[i] / s0[i] - mean * mean);
        }
    }
    Ok(MomentSeries { times: result.times.clone(), n_d: s0, mean_x, var_x })
}

/// Cosine-line decomposition of a one-body expectation along the evolution:
/// f(t) = constant + sum_i 2 A_i cos(omega_i t).
pub struct LineSpectrum {
    pub constant: f64,
    /// (omega > 0, amplitude A) pairs, same-frequency lines merged.
    pub lines: Vec<(f64, f64)>,
}

impl LineSpectrum {
    pub fn of_operator(result: &QuenchResult, op_eig: &Array2<f64>) -> Self {
        let k = result.n_kept();
        let mut constant = 0.0;
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for a in 0..k {
            let ca = result.coeffs[a];
            constant += ca * ca * op_eig[[a, a]];
            for b in 0..a {
                let amp = ca * result.coeffs[b] * op_eig[[a, b]];
                if amp.abs() > 1e-16 {
                    raw.push((result.energies[a] - result.energies[b], amp));
                }
            }
        }
        raw.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut lines: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (w, a) in raw {
            match lines.last_mut() {
                Some(last) if (w - last.0).abs() < 1e-12 => last.1 += a,
                _ => lines.push((w, a)),
            }
        }
        LineSpectrum { constant, lines }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.constant + self.lines.iter().map(|(w, a)| 2.0 * a * (w * t).cos()).sum::<f64>()
    }
}

/// A dual-form scalar: the sampled-integral route and the spectral routes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VariancePair {
    /// Time-domain trapezoid over the sampled series.
    pub integral: f64,
    /// Exact finite-T spectral evaluation (whole-line regions only).
    pub spectral: Option<f64>,
    /// T -> infinity spectral form, near-degenerate pairs dropped.
    pub spectral_tinf: Option<f64>,
    /// Number of line pairs excluded as near-degenerate (|dE| < 2 pi / T).
    pub excluded_lines: usize,
}

fn trapezoid_mean(times: &[f64], series: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (series[i] + series[i - 1]) * (times[i] - times[i - 1]);
    }
    acc / (times[times.len() - 1] - times[0])
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Whole-line variance series sigma^2_{x,L}(t) = <x^2>(t)/N (the whole-line
/// <x> vanishes identically in the even block).
pub fn sigma2_series(result: &QuenchResult, model: &Model) -> Result<Vec<f64>> {
    let x2 = result.op_in_eigenbasis(&model.pbasis.project(&model.x2_op, Parity::Even));
    let n = model.config.n_bosons as f64;
    Ok(result
        .expectation_series(&x2)
        .into_iter()
        .map(|v| v / n)
        .collect())
}

/// Variance series for an arbitrary region (Eq. 3/4 normalization).
pub fn sigma2_series_region(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<Vec<f64>> {
    if region.covers_box(model) {
        sigma2_series(result, model)
    } else {
        Ok(region_moment_series(result, model, region)?.var_x)
    }
}

fn whole_line_lines(result: &QuenchResult, model: &Model) -> LineSpectrum {
    let x2 =
        result.op_in_eigenbasis(&model.pbasis.project(&model.x2_op, Parity::Even));
    let n = model.config.n_bosons as f64;
    let mut ls = LineSpectrum::of_operator(result, &x2);
    ls.constant /= n;
    for l in &mut ls.lines {
        l.1 /= n;
    }
    ls
}

/// Both response scalars of one quench and region, sharing the sampled
/// series and line decomposition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResponseScalars {
    pub time_averaged: VariancePair,
    pub temporal: VariancePair,
}

/// Cap on the line count entering the O(L^2) exact finite-T temporal
/// variance; lines are kept by descending amplitude until their cumulative
/// weight covers all but 1e-10 of the total.
const MAX_EXACT_LINES: usize = 6000;

pub fn response_scalars(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<ResponseScalars> {
    let series = sigma2_series_region(result, model, region)?;
    let shifted: Vec<f64> = series.iter().map(|v| v - series[0]).collect();
    let ta_integral = trapezoid_mean(&result.times, &shifted);
    let mean = trapezoid_mean(&result.times, &series);
    let sq: Vec<f64> = series.iter().map(|v| (v - mean) * (v - mean)).collect();
    let dt_integral = trapezoid_mean(&result.times, &sq);
    if !region.covers_box(model) {
        return Ok(ResponseScalars {
            time_averaged: VariancePair {
                integral: ta_integral,
                spectral: None,
                spectral_tinf: None,
                excluded_lines: 0,
            },
            temporal: VariancePair {
                integral: dt_integral,
                spectral: None,
                spectral_tinf: None,
                excluded_lines: 0,
            },
        });
    }
    let t_total = *result.times.last().expect("nonempty times");
    let ls = whole_line_lines(result, model);
    let omega_min = 2.0 * PI / t_total;
    let mut ta_exact = 0.0;
    let mut ta_tinf = 0.0;
    let mut dt_tinf = 0.0;
    let mut excluded = 0;
    for &(w, a) in &ls.lines {
        ta_exact += 2.0 * a * (sinc(w * t_total) - 1.0);
        if w >= omega_min {
            ta_tinf += -2.0 * a;
            dt_tinf += 2.0 * a * a;
        } else {
            excluded += 1;
        }
    }
    // exact finite-T temporal variance: the fluctuating part is
    // sum_i 2 A_i (cos(w_i t) - sinc(w_i T)); its pairwise time averages
    // reduce to sincs of frequency sums and differences
    let mut lines = ls.lines.clone();
    lines.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    let total_amp: f64 = lines.iter().map(|l| l.1.abs()).sum();
    let mut cum = 0.0;
    let mut keep = lines.len();
    for (i, l) in lines.iter().enumerate() {
        cum += l.1.abs();
        if cum >= total_amp * (1.0 - 1e-10) {
            keep = i + 1;
            break;
        }
    }
    lines.truncate(keep.min(MAX_EXACT_LINES));
    let mut dt_exact = 0.0;
    for &(wi, ai) in &lines {
        let si = sinc(wi * t_total);
        for &(wj, aj) in &lines {
            let sj = sinc(wj * t_total);
            let cross =
                0.5 * (sinc((wi - wj) * t_total) + sinc((wi + wj) * t_total)) - si * sj;
            dt_exact += 4.0 * ai * aj * cross;
        }
    }
    Ok(ResponseScalars {
        time_averaged: VariancePair {
            integral: ta_integral,
            spectral: Some(ta_exact),
            spectral_tinf: Some(ta_tinf),
            excluded_lines: excluded,
        },
        temporal: VariancePair {
            integral: dt_integral,
            spectral: Some(dt_exact),
            spectral_tinf: Some(dt_tinf),
            excluded_lines: excluded,
        },
    })
}

/// Time-averaged variance shift per the dual-form contract: the running
/// average of sigma^2(t) - sigma^2(0) against its spectral evaluations.
pub fn time_averaged_variance(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<VariancePair> {
    Ok(response_scalars(result, model, region)?.time_averaged)
}

/// Temporal variance of the variance signal (response intensity), again in
/// integral and spectral forms.
pub fn temporal_variance(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<VariancePair> {
    Ok(response_scalars(result, model, region)?.temporal)
}

/// Discrete spectrum of the sampled variance signal plus the predicted
/// eigen-decomposition lines (whole-line region).
#[derive(Debug, Clone, Serialize)]
pub struct BranchSpectrum {
    /// DFT frequency grid (angular, E_R/hbar).
    pub freqs: Vec<f64>,
    /// Amplitude-normalized magnitudes of the mean-subtracted signal.
    pub magnitudes: Vec<f64>,
    /// Predicted lines (frequency, amplitude), merged within one DFT bin.
    pub predicted: Vec<(f64, f64)>,
    /// DFT peaks above 5% of the maximum paired to predicted lines.
    pub pairing: Vec<PeakPairing>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakPairing {
    pub freq_dft: f64,
    pub magnitude: f64,
    /// Nearest predicted line within one frequency bin, if any.
    pub freq_predicted: Option<f64>,
    pub amp_predicted: Option<f64>,
}

/// Rectangular-window magnitude spectrum of a sampled series, normalized so
/// a pure cosine of amplitude A peaks near A.
pub fn dft_magnitudes(times: &[f64], series: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = series.len();
    let t_total = times[n - 1] - times[0];
    let mean = series.iter().sum::<f64>() / n as f64;
    let n_freq = n / 2 + 1;
    let mut freqs = Vec::with_capacity(n_freq);
    let mut mags = Vec::with_capacity(n_freq);
    for m in 0..n_freq {
        let w = 2.0 * PI * m as f64 / t_total;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &f) in series.iter().enumerate() {
            let ph = w * times[k];
            re += (f - mean) * ph.cos();
            im -= (f - mean) * ph.sin();
        }
        freqs.push(w);
        mags.push(2.0 * (re * re + im * im).sqrt() / n as f64);
    }
    (freqs, mags)
}

/// Fourier branch analysis of sigma^2(t) over a region; predicted lines and
/// pairing are produced for whole-line regions.
pub fn fourier_branches(
    result: &QuenchResult,
    model: &Model,
    region: &RegionSpec,
) -> Result<BranchSpectrum> {
    let series = sigma2_series_region(result, model, region)?;
    let (freqs, magnitudes) = dft_magnitudes(&result.times, &series);
    let t_total = *result.times.last().expect("nonempty");
    let bin = 2.0 * PI / t_total;
    let predicted: Vec<(f64, f64)> = if region.covers_box(model) {
        let ls = whole_line_lines(result, model);
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for &(w, a) in &ls.lines {
            match merged.last_mut() {
                Some(last) if (w - last.0).abs() < bin => {
                    // coherent same-bin superposition; amplitudes add signed
                    last.1 += 2.0 * a;
                }
                _ => merged.push((w, 2.0 * a)),
            }
        }
        merged.into_iter().map(|(w, a)| (w, a.abs())).collect()
    } else {
        Vec::new()
    };
    let peak_floor = 0.05 * magnitudes.iter().cloned().fold(0.0f64, f64::max);
    let mut pairing = Vec::new();
    for m in 1..magnitudes.len().saturating_sub(1) {
        if magnitudes[m] > peak_floor
            && magnitudes[m] >= magnitudes[m - 1]
            && magnitudes[m] > magnitudes[m + 1]
        {
            let w = freqs[m];
            let best = predicted
                .iter()
                .filter(|(pw, _)| (pw - w).abs() <= bin)
                .min_by(|a, b| {
                    (a.0 - w).abs().partial_cmp(&(b.0 - w).abs()).unwrap()
                });
            pairing.push(PeakPairing {
                freq_dft: w,
                magnitude: magnitudes[m],
                freq_predicted: best.map(|p| p.0),
                amp_predicted: best.map(|p| p.1),
            });
        }
    }
    Ok(BranchSpectrum { freqs, magnitudes, predicted, pairing })
}
