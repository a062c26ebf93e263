//! The sparse occupation-walking assembly against the independent dense
//! ladder-matrix construction, across interaction strengths and trap
//! curvatures.

use quenchci::ci::{assemble_operator, Parity};
use quenchci::linalg;
use quenchci::model::{Model, ModelConfig};
use quenchci::oracle::{brute_force_spectrum, dense_brute_force};

fn model(n_bosons: usize, n_bands: usize, g: f64) -> Model {
    Model::build(ModelConfig {
        n_bosons,
        n_sites: 3,
        v0: 9.0,
        g,
        n_grid: 150,
        n_bands,
        wannier_omega_sq: 0.0,
        basis_cap: None,
    })
    .unwrap()
}

#[test]
fn spectra_agree_across_configurations() {
    for (n, bands, g, omega_sq) in [
        (2usize, 1usize, 0.0, 0.0),
        (2, 2, 1.0, 0.3),
        (3, 2, 4.0, 0.8),
        (4, 1, 0.5, 0.56),
    ] {
        let m = model(n, bands, g);
        let h1 = m.one_body.h_at(omega_sq);
        let reference = brute_force_spectrum(&m.basis, &h1, Some(&m.two_body)).unwrap();
        let sparse = assemble_operator(&m.basis, &h1, Some(&m.two_body), None).unwrap();
        let spectrum = linalg::eigvals(&sparse.to_dense()).unwrap();
        let scale = reference[reference.len() - 1].abs().max(1.0);
        for k in 0..spectrum.len() {
            assert!(
                (spectrum[k] - reference[k]).abs() < 1e-9 * scale,
                "level {k}: sparse {} vs dense {} (N={n} bands={bands} g={g})",
                spectrum[k],
                reference[k]
            );
        }
    }
}

#[test]
fn full_triple_well_case_matches_to_1e9() {
    // the production configuration: N = 4, three bands, g = 1
    let m = model(4, 3, 1.0);
    let h1 = m.one_body.h_at(0.8);
    let dense = dense_brute_force(&m.basis, &h1, Some(&m.two_body)).unwrap();
    let sparse = assemble_operator(&m.basis, &h1, Some(&m.two_body), None).unwrap();
    let ds = sparse.to_dense();
    let mut worst = 0.0f64;
    for i in 0..dense.nrows() {
        for j in 0..dense.ncols() {
            worst = worst.max((dense[[i, j]] - ds[[i, j]]).abs());
        }
    }
    assert!(worst < 1e-9, "matrix deviation {worst}");
}

#[test]
fn parity_block_union_matches_brute_force() {
    let m = model(3, 2, 2.0);
    let h1 = m.one_body.h_at(0.45);
    let reference = brute_force_spectrum(&m.basis, &h1, Some(&m.two_body)).unwrap();
    let mut union: Vec<f64> = linalg::eigvals(&m.hamiltonian_block(0.45, Parity::Even))
        .unwrap()
        .into_iter()
        .chain(linalg::eigvals(&m.hamiltonian_block(0.45, Parity::Odd)).unwrap())
        .collect();
    union.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for k in 0..union.len() {
        assert!((union[k] - reference[k]).abs() < 1e-9);
    }
}
