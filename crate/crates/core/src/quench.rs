//! Quench protocol: prepare the even-parity ground state at the initial
//! trap curvature and evolve it under the post-quench Hamiltonian by exact
//! spectral decomposition (timestep-free).

use ndarray::{Array1, Array2};

use crate::ci::Parity;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Model;

pub const DEFECT_THRESHOLD: f64 = 1e-8;

/// Quench parameters; curvatures in E_R^2/hbar^2, times in hbar/E_R.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct QuenchProtocol {
    pub omega_i_sq: f64,
    pub omega_f_sq: f64,
    pub t_final: f64,
    pub dt_sample: f64,
}

impl QuenchProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.omega_f_sq > self.omega_i_sq {
            return Err(Error::Config(format!(
                "quench must lower the trap: omega_f_sq = {} > omega_i_sq = {}",
                self.omega_f_sq, self.omega_i_sq
            )));
        }
        if self.omega_f_sq < 0.0 {
            return Err(Error::Config("omega_f_sq must be non-negative".into()));
        }
        if self.t_final <= 0.0 {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.dt_sample <= 0.0 || self.dt_sample > self.t_final {
            return Err(Error::Config(
                "dt_sample must be positive and no larger than t_final".into(),
            ));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_final / self.dt_sample).round() as usize;
        (0..=n).map(|k| k as f64 * self.dt_sample).collect()
    }
}

/// Even-parity ground state at the given curvature: energy and block
/// coordinates, sign fixed so the largest-magnitude coefficient is positive.
pub fn ground_state(model: &Model, omega_sq: f64) -> Result<(f64, Array1<f64>)> {
    let dim = model.block_dim(Parity::Even);
    let eig = model.solve_block_lowest(omega_sq, Parity::Even, 2.min(dim))?;
    if eig.values.len() > 1 {
        let gap = eig.values[1] - eig.values[0];
        if gap < 1e-10 {
            return Err(Error::DegenerateGround { gap });
        }
    }
    let mut v = eig.vectors.row(0).to_owned();
    let mut imax = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    Ok((eig.values[0], v))
}

/// Spectrally decomposed post-quench evolution in the even block.
#[derive(Debug)]
pub struct QuenchResult {
    pub protocol: QuenchProtocol,
    /// Post-quench eigenvalues of the kept states (lowest K, ascending).
    pub energies: Array1<f64>,
    /// Overlap coefficients of the initial state with the kept eigenstates.
    pub coeffs: Array1<f64>,
    /// Row k = k-th kept eigenvector in block coordinates.
    pub vectors: Array2<f64>,
    /// 1 - sum of kept |c_k|^2.
    pub defect: f64,
    pub times: Vec<f64>,
    pub initial_energy: f64,
}

/// Spectral-truncation choices (decision D7).
#[derive(Debug, Clone, Copy, Default)]
pub struct EvolveOpts {
    /// Keep only the lowest-energy eigenstates, starting from this count
    /// and doubling until the completeness defect falls below threshold.
    /// `None` keeps the full block (defect exactly zero).
    pub k_start: Option<usize>,
    /// Hard cap on the kept count; an excessive defect at the cap errors.
    pub k_cap: Option<usize>,
}

/// Evolve `psi0` (even-block coordinates) under H(omega_f_sq).
///
/// The full block is diagonalized once; `opts` selects how many of the
/// lowest eigenstates are kept for the stored expansion, with automatic
/// escalation while the completeness defect exceeds `DEFECT_THRESHOLD`.
pub fn evolve(
    model: &Model,
    protocol: &QuenchProtocol,
    psi0: &Array1<f64>,
    opts: EvolveOpts,
) -> Result<QuenchResult> {
    protocol.validate()?;
    let dim = model.block_dim(Parity::Even);
    if psi0.len() != dim {
        return Err(Error::Config("psi0 dimension does not match the even block".into()));
    }
    let eig = model.solve_block(protocol.omega_f_sq, Parity::Even)?;
    let psi_col = psi0
        .as_slice()
        .expect("contiguous")
        .to_vec();
    let psi_mat = Array2::from_shape_vec((dim, 1), psi_col).expect("column");
    let c_all = linalg::matmul(&eig.vectors, &psi_mat);
    let weight_of = |k_keep: usize| -> f64 {
        (0..k_keep).map(|k| c_all[[k, 0]] * c_all[[k, 0]]).sum()
    };
    let mut k_keep = opts.k_start.unwrap_or(dim).min(dim);
    while k_keep < dim && 1.0 - weight_of(k_keep) > DEFECT_THRESHOLD {
        k_keep = (k_keep * 2).min(dim);
    }
    if let Some(cap) = opts.k_cap {
        if k_keep > cap {
            return Err(Error::CompletenessDefect {
                defect: 1.0 - weight_of(cap),
                threshold: DEFECT_THRESHOLD,
                k: cap,
            });
        }
    }
    let defect = if k_keep == dim { 0.0 } else { (1.0 - weight_of(k_keep)).max(0.0) };
    let energies = eig.values.slice(ndarray::s![..k_keep]).to_owned();
    let vectors = eig.vectors.slice(ndarray::s![..k_keep, ..]).to_owned();
    let coeffs = Array1::from_iter((0..k_keep).map(|k| c_all[[k, 0]]));
    let initial_energy = energies
        .iter()
        .zip(coeffs.iter())
        .map(|(e, c)| e * c * c)
        .sum::<f64>()
        / (1.0 - defect);
    Ok(QuenchResult {
        protocol: *protocol,
        energies,
        coeffs,
        vectors,
        defect,
        times: protocol.sample_times(),
        initial_energy,
    })
}

impl QuenchResult {
    pub fn n_kept(&self) -> usize {
        self.energies.len()
    }

    /// Transform a dense even-block operator into the kept eigenbasis.
    pub fn op_in_eigenbasis(&self, block_op: &Array2<f64>) -> Array2<f64> {
        let vo = linalg::matmul(&self.vectors, block_op);
        linalg::gemm(&vo, false, &self.vectors, true)
    }

    /// Expectation series of an operator given in the kept eigenbasis.
    ///
    /// Evaluated through the cosine-line decomposition
    /// `<O>(t) = sum_kl c_k c_l O_kl cos((E_k - E_l) t)`, dropping lines
    /// whose amplitude is below 1e-14 of the largest (their total weight is
    /// negligible against every tolerance in use).
    pub fn expectation_series(&self, op_eig: &Array2<f64>) -> Vec<f64> {
        let k = self.n_kept();
        let mut constant = 0.0;
        let mut lines: Vec<(f64, f64)> = Vec::new();
        let mut amax = 0.0f64;
        for a in 0..k {
            let ca = self.coeffs[a];
            constant += ca * ca * op_eig[[a, a]];
            for b in 0..a {
                amax = amax.max((ca * self.coeffs[b] * op_eig[[a, b]]).abs());
            }
        }
        let cut = 1e-14 * amax.max(1e-300);
        for a in 0..k {
            let ca = self.coeffs[a];
            for b in 0..a {
                let amp = ca * self.coeffs[b] * op_eig[[a, b]];
                if amp.abs() > cut {
                    lines.push((self.energies[a] - self.energies[b], 2.0 * amp));
                }
            }
        }
        self.times
            .iter()
            .map(|&t| {
                constant
                    + lines
                        .iter()
                        .map(|&(w, a)| a * (w * t).cos())
                        .sum::<f64>()
            })
            .collect()
    }

    /// Population series of one block combination state.
    pub fn population_series(&self, block_col: usize) -> Vec<f64> {
        let proj: Vec<f64> = (0..self.n_kept())
            .map(|k| self.vectors[[k, block_col]])
            .collect();
        self.times
            .iter()
            .map(|&t| {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..self.n_kept() {
                    let ph = self.energies[k] * t;
                    re += self.coeffs[k] * proj[k] * ph.cos();
                    im += self.coeffs[k] * proj[k] * ph.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    /// Fidelity |<psi(0)|psi(t)>| series.
    pub fn fidelity_series(&self) -> Vec<f64> {
        self.times
            .iter()
            .map(|&t| {
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..self.n_kept() {
                    let w = self.coeffs[k] * self.coeffs[k];
                    let ph = self.energies[k] * t;
                    re += w * ph.cos();
                    im += w * ph.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    /// Norm of the kept expansion (constant in time).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Earliest sampled time at which `series` reaches `threshold`, or None.
pub fn state_prep_search(times: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    times
        .iter()
        .zip(series.iter())
        .find(|(_, &p)| p >= threshold)
        .map(|(&t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use approx::assert_abs_diff_eq;

    fn model() -> Model {
        Model::build(ModelConfig {
            n_bosons: 4,
            n_sites: 3,
            v0: 9.0,
            g: 1.0,
            n_grid: 200,
            n_bands: 1,
            wannier_omega_sq: 0.0,
            basis_cap: None,
        })
        .unwrap()
    }

    #[test]
    fn protocol_validation() {
        let bad = QuenchProtocol { omega_i_sq: 0.4, omega_f_sq: 0.8, t_final: 10.0, dt_sample: 0.1 };
        assert!(bad.validate().is_err());
        let bad_dt = QuenchProtocol { omega_i_sq: 0.8, omega_f_sq: 0.4, t_final: 1.0, dt_sample: 2.0 };
        assert!(bad_dt.validate().is_err());
    }

    #[test]
    fn initial_state_reproduced_at_t_zero() {
        let m = model();
        let (_, psi0) = ground_state(&m, 0.8).unwrap();
        let p = QuenchProtocol { omega_i_sq: 0.8, omega_f_sq: 0.5, t_final: 5.0, dt_sample: 0.5 };
        let r = evolve(&m, &p, &psi0, EvolveOpts::default()).unwrap();
        let f = r.fidelity_series();
        assert_abs_diff_eq!(f[0], 1.0, epsilon = 1e-12);
        assert!(r.defect <= DEFECT_THRESHOLD);
    }

    #[test]
    fn eigenstate_is_stationary() {
        let m = model();
        let eig = m.solve_block_lowest(0.5, Parity::Even, 3).unwrap();
        let psi = eig.vectors.row(2).to_owned();
        let p = QuenchProtocol { omega_i_sq: 0.5, omega_f_sq: 0.5, t_final: 20.0, dt_sample: 1.0 };
        let r = evolve(&m, &p, &psi, EvolveOpts::default()).unwrap();
        for col in 0..m.block_dim(Parity::Even).min(8) {
            let series = r.population_series(col);
            let first = series[0];
            for &v in &series {
                assert_abs_diff_eq!(v, first, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn norm_and_energy_conserved() {
        let m = model();
        let (e0, psi0) = ground_state(&m, 0.8).unwrap();
        let p = QuenchProtocol { omega_i_sq: 0.8, omega_f_sq: 0.3, t_final: 50.0, dt_sample: 1.0 };
        let r = evolve(&m, &p, &psi0, EvolveOpts::default()).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-8);
        // <H_f> via the eigenbasis operator must stay constant
        let h_eig = Array2::from_diag(&r.energies);
        let series = r.expectation_series(&h_eig);
        let first = series[0];
        for &v in &series {
            assert!((v - first).abs() < 1e-10 * first.abs());
        }
        assert!(e0 > 0.0);
    }

    #[test]
    fn fidelity_never_exceeds_one() {
        let m = model();
        let (_, psi0) = ground_state(&m, 0.7).unwrap();
        let p = QuenchProtocol { omega_i_sq: 0.7, omega_f_sq: 0.2, t_final: 80.0, dt_sample: 0.5 };
        let r = evolve(&m, &p, &psi0, EvolveOpts::default()).unwrap();
        for f in r.fidelity_series() {
            assert!(f <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn state_prep_edge_cases() {
        let times = vec![0.0, 1.0, 2.0];
        let series = vec![0.7, 0.2, 0.9];
        assert_eq!(state_prep_search(&times, &series, 0.5), Some(0.0));
        assert_eq!(state_prep_search(&times, &series, 1.01), None);
        assert_eq!(state_prep_search(&times, &series, 0.8), Some(2.0));
    }

    #[test]
    fn completeness_cap_errors() {
        let m = model();
        let (_, psi0) = ground_state(&m, 0.8).unwrap();
        let p = QuenchProtocol { omega_i_sq: 0.8, omega_f_sq: 0.1, t_final: 5.0, dt_sample: 0.5 };
        let err = evolve(&m, &p, &psi0, EvolveOpts { k_start: Some(1), k_cap: Some(1) }).unwrap_err();
        assert!(matches!(err, Error::CompletenessDefect { .. }));
    }
}
