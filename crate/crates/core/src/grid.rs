//! sin-DVR spatial grid and the single-particle problem for the
//! lattice-plus-trap potential.
//!
//! Units: energies in E_R, lengths in 1/k, times in hbar/E_R. In these units
//! the one-body Hamiltonian reads
//!
//! ```text
//! h = -d^2/dx^2 + v0 sin^2(x) + (omega_sq / 4) x^2
//! ```
//!
//! with hard walls at x = +-S pi / 2 for an S-site lattice.

use ndarray::{Array1, Array2};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;

/// Interior collocation grid of a hard-wall box.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// Strictly increasing interior points; endpoints excluded.
    pub points: Array1<f64>,
    /// Uniform quadrature weight (the grid spacing).
    pub weight: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn box_length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Physical parameters of the lattice-plus-trap model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialSpec {
    /// Lattice depth in E_R.
    pub v0: f64,
    /// Trap curvature omega^2 in E_R^2/hbar^2.
    pub omega_sq: f64,
    /// Number of lattice sites (odd; center well at x = 0).
    pub n_sites: usize,
    /// Contact coupling in E_R / k.
    pub g: f64,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites % 2 == 0 || self.n_sites == 0 {
            return Err(Error::Config(format!(
                "n_sites must be a positive odd integer, got {}",
                self.n_sites
            )));
        }
        if self.v0 < 0.0 || self.omega_sq < 0.0 || self.g < 0.0 {
            return Err(Error::Config(
                "v0, omega_sq and g must all be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Potential value at a point (lattice plus trap).
    pub fn potential(&self, x: f64) -> f64 {
        self.v0 * x.sin().powi(2) + 0.25 * self.omega_sq * x * x
    }
}

/// Build the interior grid for an S-site box with hard walls at +-S pi/2.
pub fn build_grid(n_points: usize, n_sites: usize) -> Result<Grid> {
    if n_sites % 2 == 0 || n_sites == 0 {
        return Err(Error::Config(format!(
            "n_sites must be a positive odd integer, got {n_sites}"
        )));
    }
    if n_points < 2 {
        return Err(Error::Config(format!(
            "n_points must be at least 2, got {n_points}"
        )));
    }
    let half = n_sites as f64 * PI / 2.0;
    let (x_min, x_max) = (-half, half);
    let weight = (x_max - x_min) / (n_points as f64 + 1.0);
    let points = Array1::from_iter((1..=n_points).map(|j| x_min + weight * j as f64));
    Ok(Grid { n_points, x_min, x_max, points, weight })
}

/// Kinetic operator -d^2/dx^2 in the sin-DVR, exact within the sine basis.
///
/// Closed form for the hard-wall box (particle-in-a-box DVR): unitarily
/// equivalent to diag((n pi / L)^2), so its spectrum reproduces the box
/// levels to machine precision.
pub fn kinetic_matrix(grid: &Grid) -> Array2<f64> {
    let n = grid.n_points;
    let np1 = n as f64 + 1.0;
    let l = grid.box_length();
    let pref = PI * PI / (2.0 * l * l);
    let mut t = Array2::<f64>::zeros((n, n));
    for j in 1..=n {
        for jp in 1..=j {
            let v = if j == jp {
                pref * ((2.0 * np1 * np1 + 1.0) / 3.0
                    - 1.0 / (PI * j as f64 / np1).sin().powi(2))
            } else {
                let d = PI * (j as f64 - jp as f64) / (2.0 * np1);
                let s = PI * (j as f64 + jp as f64) / (2.0 * np1);
                let sign = if (j - jp) % 2 == 0 { 1.0 } else { -1.0 };
                pref * sign * (1.0 / d.sin().powi(2) - 1.0 / s.sin().powi(2))
            };
            t[[j - 1, jp - 1]] = v;
            t[[jp - 1, j - 1]] = v;
        }
    }
    t
}

/// Potential sampled on the grid (diagonal of the DVR Hamiltonian).
pub fn potential_on_grid(grid: &Grid, spec: &PotentialSpec) -> Array1<f64> {
    grid.points.mapv(|x| spec.potential(x))
}

/// Which single-particle basis an `OrbitalSet` is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Delocalized eigenstates of the one-body Hamiltonian.
    Eigen,
    /// Site-localized Wannier states, ordered by (band, site).
    Wannier,
}

/// A set of single-particle orbitals on the DVR grid.
///
/// `vectors` holds one orbital per column, normalized in the discrete l2
/// sense (sum of squared components = 1); the continuum amplitude at grid
/// point j is `vectors[(j, k)] / sqrt(grid.weight)`.
#[derive(Debug, Clone)]
pub struct OrbitalSet {
    pub grid: Grid,
    pub energies: Array1<f64>,
    pub vectors: Array2<f64>,
    pub basis_kind: BasisKind,
    /// Band index per orbital; set by band classification.
    pub band_of: Option<Vec<usize>>,
    /// Site index per orbital (Wannier basis only).
    pub site_of: Option<Vec<usize>>,
    /// Position-operator eigenvalue per orbital (Wannier basis only).
    pub centers: Option<Vec<f64>>,
    /// rms spatial width per orbital (Wannier basis only).
    pub widths: Option<Vec<f64>>,
}

impl OrbitalSet {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Discrete overlap <i|j>.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.vectors.column(i).dot(&self.vectors.column(j))
    }
}


/// Fix the global sign per decision D2: the first component (scanning from
/// the left wall) whose magnitude exceeds 1e-6 is made positive.
pub(crate) fn fix_phase_leftmost(mut col: ndarray::ArrayViewMut1<f64>) {
    if let Some(&v) = col.iter().find(|v| v.abs() > 1e-6) {
        if v < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Lowest `n_states` eigenpairs of the one-body Hamiltonian.
///
/// Eigenvectors are l2-orthonormal, carry definite parity (the potential is
/// even; degenerate clusters are resolved by re-diagonalizing the reflection
/// within the cluster), and have their global sign fixed by decision D2.
pub fn single_particle_eigs(
    grid: &Grid,
    spec: &PotentialSpec,
    n_states: usize,
) -> Result<OrbitalSet> {
    spec.validate()?;
    if n_states > grid.n_points {
        return Err(Error::Config(format!(
            "n_states = {} exceeds grid size {}",
            n_states, grid.n_points
        )));
    }
    let mut h = kinetic_matrix(grid);
    let v = potential_on_grid(grid, spec);
    for j in 0..grid.n_points {
        h[[j, j]] += v[j];
    }
    let eig = linalg::eigh_lowest(&h, n_states)?;
    // rows of eig.vectors are eigenvectors; collect into columns
    let n = grid.n_points;
    let mut vectors = Array2::<f64>::zeros((n, n_states));
    for k in 0..n_states {
        for j in 0..n {
            vectors[[j, k]] = eig.vectors[[k, j]];
        }
    }
    resolve_parity_clusters(&eig.values, &mut vectors);
    for k in 0..n_states {
        fix_phase_leftmost(vectors.column_mut(k));
    }
    Ok(OrbitalSet {
        grid: grid.clone(),
        energies: eig.values,
        vectors,
        basis_kind: BasisKind::Eigen,
        band_of: None,
        site_of: None,
        centers: None,
        widths: None,
    })
}

/// Parity of an eigenvector: +1, -1, or None if mixed beyond `tol`.
pub fn parity_of(v: &[f64], tol: f64) -> Option<i8> {
    let n = v.len();
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for j in 0..n {
        let r = v[n - 1 - j];
        even += (v[j] - r).powi(2);
        odd += (v[j] + r).powi(2);
    }
    if even.sqrt() < tol {
        Some(1)
    } else if odd.sqrt() < tol {
        Some(-1)
    } else {
        None
    }
}

/// Within clusters of near-degenerate eigenvalues (gap < 1e-9), rotate the
/// eigenvectors so each is a reflection eigenstate.
fn resolve_parity_clusters(values: &Array1<f64>, vectors: &mut Array2<f64>) {
    let m = values.len();
    let n = vectors.nrows();
    let mut k = 0;
    while k < m {
        let mut kend = k + 1;
        while kend < m && values[kend] - values[kend - 1] < 1e-9 {
            kend += 1;
        }
        let width = kend - k;
        if width > 1 {
            // reflection matrix in the cluster subspace
            let mut r = Array2::<f64>::zeros((width, width));
            for a in 0..width {
                for b in 0..width {
                    let mut s = 0.0;
                    for j in 0..n {
                        s += vectors[[n - 1 - j, k + a]] * vectors[[j, k + b]];
                    }
                    r[[a, b]] = s;
                }
            }
            if let Ok(re) = linalg::eigh(&r) {
                let old: Vec<Array1<f64>> =
                    (0..width).map(|a| vectors.column(k + a).to_owned()).collect();
                for a in 0..width {
                    for j in 0..n {
                        let mut s = 0.0;
                        for b in 0..width {
                            s += re.vectors[[a, b]] * old[b][j];
                        }
                        vectors[[j, k + a]] = s;
                    }
                }
            }
        }
        k = kend;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = build_grid(300, 3).unwrap();
        assert_abs_diff_eq!(g.x_min, -1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(g.x_max, 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weight, 3.0 * PI / 301.0, epsilon = 1e-15);
        assert_eq!(g.points.len(), 300);
        let g7 = build_grid(560, 7).unwrap();
        assert_abs_diff_eq!(g7.x_max, 3.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn tiny_grid_points() {
        let g = build_grid(3, 1).unwrap();
        assert_abs_diff_eq!(g.points[0], -PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.points[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.points[2], PI / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(10, 2).is_err());
        assert!(build_grid(1, 3).is_err());
        assert!(build_grid(10, 0).is_err());
    }

    #[test]
    fn kinetic_is_symmetric_and_exact_in_box_levels() {
        let g = build_grid(120, 3).unwrap();
        let t = kinetic_matrix(&g);
        for i in 0..g.n_points {
            for j in 0..g.n_points {
                assert_eq!(t[[i, j]], t[[j, i]]);
            }
        }
        let e = linalg::eigvals(&t).unwrap();
        // box levels (n/S)^2 for box length S*pi
        for n in 1..=g.n_points {
            let want = (n as f64 / 3.0).powi(2);
            assert_abs_diff_eq!(e[n - 1], want, epsilon = 1e-8 * want.max(1.0));
        }
    }

    #[test]
    fn kinetic_matches_sine_transform_construction() {
        let g = build_grid(40, 3).unwrap();
        let t = kinetic_matrix(&g);
        let n = g.n_points;
        let np1 = n as f64 + 1.0;
        let l = g.box_length();
        let mut u = Array2::<f64>::zeros((n, n));
        for j in 1..=n {
            for m in 1..=n {
                u[[j - 1, m - 1]] = (2.0 / np1).sqrt() * (PI * j as f64 * m as f64 / np1).sin();
            }
        }
        let mut ref_t = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            for jp in 0..n {
                let mut s = 0.0;
                for m in 1..=n {
                    let k2 = (PI * m as f64 / l).powi(2);
                    s += u[[j, m - 1]] * k2 * u[[jp, m - 1]];
                }
                ref_t[[j, jp]] = s;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(t[[i, j]], ref_t[[i, j]], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn potential_values() {
        let spec = PotentialSpec { v0: 9.0, omega_sq: 0.0, n_sites: 3, g: 0.0 };
        assert_abs_diff_eq!(spec.potential(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.potential(PI / 2.0), 9.0, epsilon = 1e-12);
        let spec2 = PotentialSpec { v0: 9.0, omega_sq: 0.8, n_sites: 3, g: 0.0 };
        assert_abs_diff_eq!(spec2.potential(PI), 0.2 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn harmonic_limit_energies() {
        // v0 = 0, omega_sq = 4 => h = -d2/dx2 + x^2 with levels 2(n + 1/2)
        let g = build_grid(600, 15).unwrap();
        let spec = PotentialSpec { v0: 0.0, omega_sq: 4.0, n_sites: 15, g: 0.0 };
        let orb = single_particle_eigs(&g, &spec, 4).unwrap();
        for n in 0..4 {
            assert_abs_diff_eq!(orb.energies[n], 2.0 * (n as f64 + 0.5), epsilon = 1e-4);
        }
    }

    #[test]
    fn lattice_bands_below_barrier() {
        let g = build_grid(300, 3).unwrap();
        let spec = PotentialSpec { v0: 9.0, omega_sq: 0.0, n_sites: 3, g: 0.0 };
        let orb = single_particle_eigs(&g, &spec, 12).unwrap();
        // two full bands of three lie below the barrier; the third band is
        // above it but still lattice-structured
        let below: usize = orb.energies.iter().filter(|&&e| e < 9.0).count();
        assert_eq!(below, 6);
        // clean gaps delimiting three bands of three
        assert!(orb.energies[3] - orb.energies[2] > 10.0 * (orb.energies[2] - orb.energies[0]));
        assert!(orb.energies[6] - orb.energies[5] > 1.0);
    }

    #[test]
    fn eigenvectors_orthonormal_and_parity_definite() {
        let g = build_grid(240, 3).unwrap();
        let spec = PotentialSpec { v0: 9.0, omega_sq: 0.3, n_sites: 3, g: 0.0 };
        let orb = single_particle_eigs(&g, &spec, 9).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((orb.overlap(i, j) - want).abs() < 1e-10);
            }
            let col = orb.vectors.column(i).to_owned();
            assert!(
                parity_of(col.as_slice().unwrap(), 1e-8).is_some(),
                "state {i} lacks definite parity"
            );
        }
    }

    #[test]
    fn eigenvalues_converge_with_grid() {
        let spec = PotentialSpec { v0: 9.0, omega_sq: 0.0, n_sites: 3, g: 0.0 };
        let e300 = single_particle_eigs(&build_grid(300, 3).unwrap(), &spec, 20)
            .unwrap()
            .energies;
        let e600 = single_particle_eigs(&build_grid(600, 3).unwrap(), &spec, 20)
            .unwrap()
            .energies;
        for k in 0..20 {
            assert!((e300[k] - e600[k]).abs() < 1e-8, "state {k} moved");
        }
    }
}
