//! End-to-end model assembly: grid, Wannier orbitals, number-state basis,
//! parity machinery and the sparse many-body operators, with solvers per
//! trap curvature.
//!
//! The trap enters linearly in omega^2, so the Hamiltonian at any curvature
//! is `H(omega_sq) = H_lattice + (omega_sq/4) X2`; both pieces are kept
//! sparse and projected into a parity block on demand.

use ndarray::{Array1, Array2};

use crate::ci::{
    assemble_operator, compute_integrals, parity_blocks, region_integrals, ManyBodyOperator,
    OneBodyIntegrals, Parity, ParityBasis, RegionOperators, TwoBodyIntegrals,
};
use crate::error::{Error, Result};
use crate::fock::{build_basis, FockBasis, ParityInfo};
use crate::grid::{build_grid, single_particle_eigs, OrbitalSet, PotentialSpec};
use crate::linalg::{self, Eigh};
use crate::orbitals::{classify_bands, wannier_states};

/// Everything needed to build a model.
#[derive(Debug, Clone, Copy)]
pub struct ModelConfig {
    pub n_bosons: usize,
    pub n_sites: usize,
    pub v0: f64,
    pub g: f64,
    pub n_grid: usize,
    pub n_bands: usize,
    /// Trap curvature used for the Wannier construction potential
    /// (0 = trap-free lattice; the `wannier_at_initial_trap` option).
    pub wannier_omega_sq: f64,
    pub basis_cap: Option<usize>,
}

/// Assembled model: fixed orbital set, basis, and trap-split operators.
pub struct Model {
    pub config: ModelConfig,
    pub orbitals: OrbitalSet,
    pub one_body: OneBodyIntegrals,
    pub two_body: TwoBodyIntegrals,
    pub basis: FockBasis,
    pub parity: ParityInfo,
    pub pbasis: ParityBasis,
    /// Trap-free many-body Hamiltonian (kinetic + lattice + interaction).
    pub h_lattice_op: ManyBodyOperator,
    /// Many-body x^2 operator (whole line).
    pub x2_op: ManyBodyOperator,
}

impl Model {
    pub fn build(config: ModelConfig) -> Result<Model> {
        let grid = build_grid(config.n_grid, config.n_sites)?;
        let sp_spec = PotentialSpec {
            v0: config.v0,
            omega_sq: config.wannier_omega_sq,
            n_sites: config.n_sites,
            g: config.g,
        };
        let n_orb = config.n_sites * config.n_bands;
        let n_states = (n_orb + config.n_sites.max(2)).min(config.n_grid);
        let eigs = single_particle_eigs(&grid, &sp_spec, n_states)?;
        let classified = classify_bands(&eigs, config.n_sites, config.n_bands)?;
        let orbitals = wannier_states(&classified, config.n_bands)?;
        let (one_body, two_body) = compute_integrals(&orbitals, config.v0, config.g)?;
        let basis = build_basis(config.n_bosons, config.n_sites, config.n_bands, config.basis_cap)?;
        let parity = ParityInfo::build(&basis);
        let pbasis = ParityBasis::build(&parity);
        let h_lattice_op =
            assemble_operator(&basis, &one_body.h_lattice, Some(&two_body), None)?;
        let x2_op = assemble_operator(&basis, &one_body.x2, None, None)?;
        // both operators must commute with reflection
        parity_blocks(&h_lattice_op, &parity)?;
        Ok(Model {
            config,
            orbitals,
            one_body,
            two_body,
            basis,
            parity,
            pbasis,
            h_lattice_op,
            x2_op,
        })
    }

    pub fn block_dim(&self, parity: Parity) -> usize {
        self.pbasis.dim(parity)
    }

    /// Dense parity block of H(omega_sq).
    pub fn hamiltonian_block(&self, omega_sq: f64, parity: Parity) -> Array2<f64> {
        let mut h = self.pbasis.project(&self.h_lattice_op, parity);
        let x2 = self.pbasis.project(&self.x2_op, parity);
        h.scaled_add(0.25 * omega_sq, &x2);
        h
    }

    pub fn solve_block(&self, omega_sq: f64, parity: Parity) -> Result<Eigh> {
        linalg::eigh(&self.hamiltonian_block(omega_sq, parity))
    }

    pub fn solve_block_lowest(&self, omega_sq: f64, parity: Parity, k: usize) -> Result<Eigh> {
        linalg::eigh_lowest(&self.hamiltonian_block(omega_sq, parity), k)
    }

    /// Dense parity block of an arbitrary one-body operator given by its
    /// orbital matrix.
    pub fn one_body_block(&self, mat: &Array2<f64>, parity: Parity) -> Result<Array2<f64>> {
        let op = assemble_operator(&self.basis, mat, None, None)?;
        Ok(self.pbasis.project(&op, parity))
    }

    /// Region-restricted one-body kernels over the model's orbitals.
    pub fn region_ops(&self, x_lo: f64, x_hi: f64) -> RegionOperators {
        region_integrals(&self.orbitals, x_lo, x_hi)
    }

    /// Expand a parity-block vector to the full number-state basis.
    pub fn to_full(&self, v: &Array1<f64>, parity: Parity) -> Array1<f64> {
        self.pbasis.to_full(v.as_slice().expect("contiguous"), parity)
    }

    /// Sanity check: an even-block coordinate vector's norm must be carried
    /// entirely by the even block when expanded and re-projected.
    pub fn odd_leakage(&self, v: &Array1<f64>) -> f64 {
        let full = self.to_full(v, Parity::Even);
        let odd = self
            .pbasis
            .to_block(full.as_slice().expect("contiguous"), Parity::Odd);
        odd.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        PotentialSpec {
            v0: self.v0,
            omega_sq: self.wannier_omega_sq,
            n_sites: self.n_sites,
            g: self.g,
        }
        .validate()?;
        if self.n_bosons == 0 {
            return Err(Error::Config("n_bosons must be positive".into()));
        }
        if self.n_bands == 0 {
            return Err(Error::Config("n_bands must be positive".into()));
        }
        if self.n_grid < 2 * self.n_sites * self.n_bands {
            return Err(Error::Config(format!(
                "n_grid = {} too small for {} orbitals",
                self.n_grid,
                self.n_sites * self.n_bands
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_model() -> Model {
        Model::build(ModelConfig {
            n_bosons: 2,
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
    fn block_dims_sum_to_basis() {
        let m = small_model();
        assert_eq!(
            m.block_dim(Parity::Even) + m.block_dim(Parity::Odd),
            m.basis.len()
        );
    }

    #[test]
    fn single_particle_consistency() {
        // N = 1 CI spectrum equals the one-body spectrum in the Wannier span
        let m = Model::build(ModelConfig {
            n_bosons: 1,
            n_sites: 3,
            v0: 9.0,
            g: 1.0,
            n_grid: 200,
            n_bands: 2,
            wannier_omega_sq: 0.0,
            basis_cap: None,
        })
        .unwrap();
        let omega_sq = 0.3;
        let h1 = m.one_body.h_at(omega_sq);
        let sp = linalg::eigvals(&h1).unwrap();
        let mut all: Vec<f64> = linalg::eigvals(&m.hamiltonian_block(omega_sq, Parity::Even))
            .unwrap()
            .into_iter()
            .chain(
                linalg::eigvals(&m.hamiltonian_block(omega_sq, Parity::Odd))
                    .unwrap(),
            )
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..sp.len() {
            assert_abs_diff_eq!(all[k], sp[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn variational_monotonicity_in_bands() {
        let mut prev = f64::INFINITY;
        for n_bands in 1..=3 {
            let m = Model::build(ModelConfig {
                n_bosons: 2,
                n_sites: 3,
                v0: 9.0,
                g: 1.0,
                n_grid: 200,
                n_bands,
                wannier_omega_sq: 0.0,
                basis_cap: None,
            })
            .unwrap();
            let e0 = m.solve_block_lowest(0.4, Parity::Even, 1).unwrap().values[0];
            assert!(e0 < prev + 1e-12, "ground energy rose with more bands");
            prev = e0;
        }
    }
}
