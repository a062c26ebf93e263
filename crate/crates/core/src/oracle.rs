//! Independent reference calculations used by the tests and the selftest
//! command: a closed-form two-site model, a brute-force dense Hamiltonian
//! built from explicit ladder-operator matrices (no occupation-walking
//! shared with the main assembly), and resolution-ladder convergence
//! reports.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::ci::TwoBodyIntegrals;
use crate::error::{Error, Result};
use crate::fock::{build_basis, FockBasis};
use crate::linalg;
use crate::model::{Model, ModelConfig};
use crate::observables::{sigma2_series, RegionSpec};
use crate::quench::{evolve, ground_state, EvolveOpts, QuenchProtocol};

/// Exact eigenvalues of two bosons on two sites:
/// H = -J (a1+ a2 + h.c.) + eps n_2 + (U/2) sum n(n-1),
/// basis {|2,0>, |1,1>, |0,2>}.
///
/// The characteristic cubic is solved in closed form (trigonometric
/// Cardano); eigenvalues return ascending.
pub fn two_site_two_boson(j_hop: f64, u_onsite: f64, eps: f64) -> [f64; 3] {
    let s2 = 2.0f64.sqrt();
    // matrix entries
    let d = [u_onsite, eps, u_onsite + 2.0 * eps];
    let o = -j_hop * s2;
    // char poly: det(H - x) = -x^3 + c2 x^2 + c1 x + c0
    let c2 = d[0] + d[1] + d[2];
    let c1 = -(d[0] * d[1] + d[0] * d[2] + d[1] * d[2]) + 2.0 * o * o;
    let c0 = d[0] * d[1] * d[2] - o * o * (d[0] + d[2]);
    // monic form x^3 + p2 x^2 + p1 x + p0 = 0
    let p2 = -c2;
    let p1 = -c1;
    let p0 = -c0;
    // depressed cubic t^3 + pt + q with x = t - p2/3
    let shift = p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = p0 - p1 * p2 / 3.0 + 2.0 * p2 * p2 * p2 / 27.0;
    let mut roots = if p.abs() < 1e-300 {
        let r = (-q).cbrt();
        [r, r, r]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        [
            m * theta.cos(),
            m * (theta - 2.0 * std::f64::consts::PI / 3.0).cos(),
            m * (theta - 4.0 * std::f64::consts::PI / 3.0).cos(),
        ]
    };
    for r in &mut roots {
        *r -= shift;
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

pub const BRUTE_FORCE_CAP: usize = 5000;

/// Annihilation-operator matrix a_p between the N-boson and (N-1)-boson
/// bases: <m| a_p |n> = sqrt(n_p) for m = n - e_p.
fn ladder_down(basis_n: &FockBasis, basis_nm1: &FockBasis, p: usize) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((basis_nm1.len(), basis_n.len()));
    let mut tmp = vec![0u8; basis_n.n_orbitals];
    for (col, occ) in basis_n.states.iter().enumerate() {
        if occ[p] == 0 {
            continue;
        }
        tmp.copy_from_slice(occ);
        tmp[p] -= 1;
        let row = basis_nm1.index(&tmp);
        a[[row, col]] = (occ[p] as f64).sqrt();
    }
    a
}

/// Dense many-body Hamiltonian assembled naively from ladder-operator
/// matrix products: H = sum h_pq a+_p a_q + 1/2 sum W_pqrs a+_p a+_q a_r a_s.
pub fn dense_brute_force(
    basis: &FockBasis,
    h: &Array2<f64>,
    two_body: Option<&TwoBodyIntegrals>,
) -> Result<Array2<f64>> {
    let dim = basis.len();
    if dim > BRUTE_FORCE_CAP {
        return Err(Error::BasisCap { size: dim, cap: BRUTE_FORCE_CAP });
    }
    let m = basis.n_orbitals;
    let n = basis.n_bosons;
    let basis_nm1 = build_basis(n - 1, basis.n_sites, basis.n_bands, None)?;
    let downs: Vec<Array2<f64>> = (0..m).map(|p| ladder_down(basis, &basis_nm1, p)).collect();
    let mut ham = Array2::<f64>::zeros((dim, dim));
    for p in 0..m {
        for q in 0..m {
            if h[[p, q]] == 0.0 {
                continue;
            }
            // a+_p a_q = (a_p)^T a_q between the N and N-1 sectors
            let prod = linalg::gemm(&downs[p], true, &downs[q], false);
            ham.scaled_add(h[[p, q]], &prod);
        }
    }
    if let Some(w) = two_body {
        if n >= 2 {
            let basis_nm2 = build_basis(n - 2, basis.n_sites, basis.n_bands, None)?;
            let downs2: Vec<Array2<f64>> =
                (0..m).map(|p| ladder_down(&basis_nm1, &basis_nm2, p)).collect();
            // B_rs = a_r a_s as (N-2) x N matrices
            let mut pair_mats: Vec<Array2<f64>> = Vec::with_capacity(m * m);
            for r in 0..m {
                for s in 0..m {
                    pair_mats.push(linalg::matmul(&downs2[r], &downs[s]));
                }
            }
            for p in 0..m {
                for q in 0..m {
                    // K_pq = sum_rs W_pqrs B_rs
                    let mut k = Array2::<f64>::zeros((basis_nm2.len(), dim));
                    for r in 0..m {
                        for s in 0..m {
                            let wv = w.get(p, q, r, s);
                            if wv != 0.0 {
                                k.scaled_add(wv, &pair_mats[r * m + s]);
                            }
                        }
                    }
                    let bpq = &pair_mats[p * m + q];
                    let prod = linalg::gemm(bpq, true, &k, false);
                    ham.scaled_add(0.5, &prod);
                }
            }
        }
    }
    Ok(ham)
}

/// Full spectrum from the brute-force dense Hamiltonian.
pub fn brute_force_spectrum(
    basis: &FockBasis,
    h: &Array2<f64>,
    two_body: Option<&TwoBodyIntegrals>,
) -> Result<Array1<f64>> {
    linalg::eigvals(&dense_brute_force(basis, h, two_body)?)
}

/// One rung of a resolution ladder.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderRung {
    pub n_grid: usize,
    pub n_bands: usize,
}

/// Convergence data of one rung against the reference (last) rung.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_grid: usize,
    pub n_bands: usize,
    pub ground_energy: f64,
    /// max_t |sigma^2 - sigma^2_ref| / max_t |sigma^2_ref|; None for the
    /// reference rung itself.
    pub sigma2_max_rel_dev: Option<f64>,
}

/// Run the quench on every rung and report ground energies and the relative
/// deviation of sigma^2_{x,L}(t) from the final (reference) rung.
pub fn convergence_report(
    base: &ModelConfig,
    rungs: &[LadderRung],
    protocol: &QuenchProtocol,
) -> Result<Vec<ConvergenceRow>> {
    let mut series: Vec<(LadderRung, f64, Vec<f64>)> = Vec::new();
    for r in rungs {
        let cfg = ModelConfig { n_grid: r.n_grid, n_bands: r.n_bands, ..*base };
        let model = Model::build(cfg)?;
        let (e0, psi0) = ground_state(&model, protocol.omega_i_sq)?;
        let res = evolve(&model, protocol, &psi0, EvolveOpts::default())?;
        let s2 = sigma2_series(&res, &model)?;
        let _ = RegionSpec::whole(&model);
        series.push((*r, e0, s2));
    }
    let (ref_rung, _, ref_s2) = series.last().expect("at least one rung").clone();
    let ref_max = ref_s2.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    Ok(series
        .iter()
        .map(|(r, e0, s2)| {
            let dev = if r.n_grid == ref_rung.n_grid && r.n_bands == ref_rung.n_bands {
                None
            } else {
                Some(
                    s2.iter()
                        .zip(ref_s2.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                        / ref_max,
                )
            };
            ConvergenceRow {
                n_grid: r.n_grid,
                n_bands: r.n_bands,
                ground_energy: *e0,
                sigma2_max_rel_dev: dev,
            }
        })
        .collect())
}

/// Reference spectrum of non-interacting bosons: sums of single-particle
/// energies over all occupation patterns.
pub fn noninteracting_spectrum(basis: &FockBasis, sp_energies: &[f64]) -> Array1<f64> {
    let mut out: Vec<f64> = basis
        .states
        .iter()
        .map(|occ| {
            occ.iter()
                .enumerate()
                .map(|(p, &n)| n as f64 * sp_energies[p])
                .sum()
        })
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Array1::from(out)
}
