//! Dense symmetric eigensolvers and matrix products on top of the system
//! OpenBLAS/LAPACK, plus a small optimal-assignment solver used by the
//! eigenvector continuation.
//!
//! Everything here works with row-major `ndarray` arrays. Eigenvector sets
//! are returned with **row k = k-th eigenvector**, which makes the common
//! patterns `c = V . psi` (overlaps) and `O_eig = V O V^T` direct calls with
//! no transposition copies: a row-major buffer is the column-major buffer of
//! the transpose, so LAPACK's column-eigenvector output lands exactly in
//! this layout.

use ndarray::{Array1, Array2};
use std::os::raw::c_int;

use crate::error::{Error, Result};

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        w: *mut f64,
        work: *mut f64,
        lwork: *const c_int,
        iwork: *mut c_int,
        liwork: *const c_int,
        info: *mut c_int,
    );

    fn dsyevr_(
        jobz: *const u8,
        range: *const u8,
        uplo: *const u8,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        vl: *const f64,
        vu: *const f64,
        il: *const c_int,
        iu: *const c_int,
        abstol: *const f64,
        m: *mut c_int,
        w: *mut f64,
        z: *mut f64,
        ldz: *const c_int,
        isuppz: *mut c_int,
        work: *mut f64,
        lwork: *const c_int,
        iwork: *mut c_int,
        liwork: *const c_int,
        info: *mut c_int,
    );

    fn dgemm_(
        transa: *const u8,
        transb: *const u8,
        m: *const c_int,
        n: *const c_int,
        k: *const c_int,
        alpha: *const f64,
        a: *const f64,
        lda: *const c_int,
        b: *const f64,
        ldb: *const c_int,
        beta: *const f64,
        c: *mut f64,
        ldc: *const c_int,
    );

    fn openblas_set_num_threads(n: c_int);
}

/// Pin the BLAS thread count (reduction order inside OpenBLAS is fixed for a
/// given count, which keeps outputs bit-stable across reruns).
pub fn set_blas_threads(n: usize) {
    unsafe { openblas_set_num_threads(n.max(1) as c_int) }
}

/// Eigendecomposition of a real symmetric matrix.
///
/// `values` ascending; `vectors` holds the k-th orthonormal eigenvector in
/// row k.
pub struct Eigh {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

fn as_flat(a: &Array2<f64>) -> Vec<f64> {
    debug_assert_eq!(a.nrows(), a.ncols());
    match a.as_slice() {
        Some(s) => s.to_vec(),
        None => a.iter().cloned().collect(),
    }
}

/// Full eigendecomposition via LAPACK `dsyevd` (divide and conquer).
pub fn eigh(a: &Array2<f64>) -> Result<Eigh> {
    let n = a.nrows();
    let mut buf = as_flat(a);
    let mut w = vec![0.0; n];
    let nn = n as c_int;
    let (jobz, uplo) = (b'V', b'L');
    let mut info: c_int = 0;
    unsafe {
        let mut wq = [0.0f64];
        let mut iwq = [0 as c_int];
        let m1: c_int = -1;
        dsyevd_(
            &jobz, &uplo, &nn, buf.as_mut_ptr(), &nn, w.as_mut_ptr(),
            wq.as_mut_ptr(), &m1, iwq.as_mut_ptr(), &m1, &mut info,
        );
        if info == 0 {
            let lwork = wq[0] as c_int;
            let liwork = iwq[0];
            let mut work = vec![0.0f64; lwork as usize];
            let mut iwork = vec![0 as c_int; liwork as usize];
            dsyevd_(
                &jobz, &uplo, &nn, buf.as_mut_ptr(), &nn, w.as_mut_ptr(),
                work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
            );
        }
    }
    if info != 0 {
        return Err(Error::Eigensolver { routine: "dsyevd", info, n });
    }
    // LAPACK writes eigenvectors into the columns of the column-major buffer,
    // i.e. into the rows of the row-major view.
    let vectors = Array2::from_shape_vec((n, n), buf).expect("square buffer");
    Ok(Eigh { values: Array1::from(w), vectors })
}

/// Eigenvalues only (`dsyevd`, jobz = 'N').
pub fn eigvals(a: &Array2<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    let mut buf = as_flat(a);
    let mut w = vec![0.0; n];
    let nn = n as c_int;
    let (jobz, uplo) = (b'N', b'L');
    let mut info: c_int = 0;
    unsafe {
        let mut wq = [0.0f64];
        let mut iwq = [0 as c_int];
        let m1: c_int = -1;
        dsyevd_(&jobz, &uplo, &nn, buf.as_mut_ptr(), &nn, w.as_mut_ptr(),
                wq.as_mut_ptr(), &m1, iwq.as_mut_ptr(), &m1, &mut info);
        if info == 0 {
            let lwork = wq[0] as c_int;
            let liwork = iwq[0];
            let mut work = vec![0.0f64; lwork as usize];
            let mut iwork = vec![0 as c_int; liwork as usize];
            dsyevd_(&jobz, &uplo, &nn, buf.as_mut_ptr(), &nn, w.as_mut_ptr(),
                    work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
        }
    }
    if info != 0 {
        return Err(Error::Eigensolver { routine: "dsyevd", info, n });
    }
    Ok(Array1::from(w))
}

/// Lowest `k` eigenpairs via LAPACK `dsyevr`.
pub fn eigh_lowest(a: &Array2<f64>, k: usize) -> Result<Eigh> {
    let n = a.nrows();
    let k = k.min(n);
    if k == n {
        return eigh(a);
    }
    let mut buf = as_flat(a);
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n * k];
    let mut isuppz = vec![0 as c_int; 2 * k.max(1)];
    let nn = n as c_int;
    let (jobz, range, uplo) = (b'V', b'I', b'L');
    let (vl, vu) = (0.0f64, 0.0f64);
    let (il, iu) = (1 as c_int, k as c_int);
    let abstol = 0.0f64; // default tolerance: safe minimum handled by LAPACK
    let mut m: c_int = 0;
    let mut info: c_int = 0;
    unsafe {
        let mut wq = [0.0f64];
        let mut iwq = [0 as c_int];
        let m1: c_int = -1;
        dsyevr_(
            &jobz, &range, &uplo, &nn, buf.as_mut_ptr(), &nn, &vl, &vu, &il, &iu,
            &abstol, &mut m, w.as_mut_ptr(), z.as_mut_ptr(), &nn, isuppz.as_mut_ptr(),
            wq.as_mut_ptr(), &m1, iwq.as_mut_ptr(), &m1, &mut info,
        );
        if info == 0 {
            let lwork = wq[0] as c_int;
            let liwork = iwq[0];
            let mut work = vec![0.0f64; lwork as usize];
            let mut iwork = vec![0 as c_int; liwork as usize];
            dsyevr_(
                &jobz, &range, &uplo, &nn, buf.as_mut_ptr(), &nn, &vl, &vu, &il, &iu,
                &abstol, &mut m, w.as_mut_ptr(), z.as_mut_ptr(), &nn, isuppz.as_mut_ptr(),
                work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
            );
        }
    }
    if info != 0 || (m as usize) < k {
        return Err(Error::Eigensolver { routine: "dsyevr", info, n });
    }
    w.truncate(k);
    // z is n x k column-major: flat index i + j*n, which is exactly the
    // row-major (k, n) layout with row j = eigenvector j.
    let vectors = Array2::from_shape_vec((k, n), z).expect("z buffer");
    Ok(Eigh { values: Array1::from(w), vectors })
}

/// `C = op(A) . op(B)` through `dgemm`.
///
/// `ta`/`tb` request the transpose of the corresponding factor.
pub fn gemm(a: &Array2<f64>, ta: bool, b: &Array2<f64>, tb: bool) -> Array2<f64> {
    let (am, ak) = if ta { (a.ncols(), a.nrows()) } else { (a.nrows(), a.ncols()) };
    let (bk, bn) = if tb { (b.ncols(), b.nrows()) } else { (b.nrows(), b.ncols()) };
    assert_eq!(ak, bk, "gemm: inner dimensions differ");
    let abuf = a.as_standard_layout();
    let bbuf = b.as_standard_layout();
    let mut c = vec![0.0f64; am * bn];
    // Row-major X equals column-major X^T, so compute C^T = op(B)^T op(A)^T in
    // column-major terms: swap the factor order and reinterpret the flags.
    let transa = if tb { b'T' } else { b'N' };
    let transb = if ta { b'T' } else { b'N' };
    let m = bn as c_int;
    let n = am as c_int;
    let kk = ak as c_int;
    let lda = if tb { bk } else { bn } as c_int;
    let ldb = if ta { am } else { ak } as c_int;
    let ldc = bn as c_int;
    let (alpha, beta) = (1.0f64, 0.0f64);
    unsafe {
        dgemm_(
            &transa, &transb, &m, &n, &kk, &alpha,
            bbuf.as_slice().unwrap().as_ptr(), &lda,
            abuf.as_slice().unwrap().as_ptr(), &ldb,
            &beta, c.as_mut_ptr(), &ldc,
        );
    }
    Array2::from_shape_vec((am, bn), c).expect("gemm output")
}

/// `A . B`.
pub fn matmul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    gemm(a, false, b, false)
}

/// Maximum-total-score assignment (Hungarian / shortest augmenting path).
///
/// `score` has `nr <= nc`; returns for each row the column it is assigned
/// to, maximizing the summed score. Used for eigenvector continuation where
/// the score matrix is |<v_i | v'_j>|.
pub fn assign_max(score: &Array2<f64>) -> Vec<usize> {
    let nr = score.nrows();
    let nc = score.ncols();
    assert!(nr <= nc, "assign_max: more rows than columns");
    let big = score.iter().cloned().fold(0.0f64, f64::max);
    let cost = |i: usize, j: usize| big - score[[i, j]];
    let inf = f64::INFINITY;
    // 1-based columns; column 0 is the virtual root. p[j] = row matched to j.
    let mut p = vec![usize::MAX; nc + 1];
    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc + 1];
    for i in 0..nr {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; nc + 1];
        let mut way = vec![0usize; nc + 1];
        let mut used = vec![false; nc + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=nc {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=nc {
                if used[j] {
                    if p[j] != usize::MAX {
                        u[p[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == usize::MAX {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    let mut out = vec![usize::MAX; nr];
    for j in 1..=nc {
        if p[j] != usize::MAX {
            out[p[j]] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn eigh_two_by_two() {
        let a = arr2(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = eigh(&a).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-12);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(e.vectors[[0, 0]].abs(), s, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[[1, 1]].abs(), s, epsilon = 1e-12);
    }

    #[test]
    fn eigh_residuals_and_orthonormality() {
        let n = 40;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = 1.0 / (1.0 + (i as f64 - j as f64).powi(2)) + if i == j { i as f64 } else { 0.0 };
            }
        }
        let e = eigh(&a).unwrap();
        for k in 0..n {
            let v = e.vectors.row(k);
            let av = a.dot(&v);
            for i in 0..n {
                assert_abs_diff_eq!(av[i], e.values[k] * v[i], epsilon = 1e-9);
            }
        }
        let g = matmul(&e.vectors, &e.vectors.t().to_owned());
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g[[i, j]], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eigh_lowest_matches_full() {
        let n = 30;
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = ((i * j) as f64).sin() / 3.0 + if i == j { 2.0 * i as f64 } else { 0.0 };
            }
        }
        let a = &a.clone() + &a.t(); // symmetrize
        let full = eigh(&a).unwrap();
        let part = eigh_lowest(&a, 7).unwrap();
        for k in 0..7 {
            assert_abs_diff_eq!(part.values[k], full.values[k], epsilon = 1e-10);
            let dot: f64 = part
                .vectors
                .row(k)
                .iter()
                .zip(full.vectors.row(k).iter())
                .map(|(x, y)| x * y)
                .sum();
            assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn gemm_matches_ndarray() {
        let a = arr2(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let b = arr2(&[[7.0, 8.0], [9.0, 10.0], [11.0, 12.0]]);
        let c = matmul(&a, &b);
        let want = a.dot(&b);
        assert_eq!(c, want);
        let ct = gemm(&b, true, &a, true);
        assert_eq!(ct, b.t().dot(&a.t()));
        let cta = gemm(&a, false, &a, true);
        assert_eq!(cta, a.dot(&a.t()));
    }

    #[test]
    fn assignment_beats_greedy_and_matches_brute_force() {
        let cases = [
            arr2(&[[1.0, 2.0], [2.0, 4.0]]),
            arr2(&[[0.9, 0.8, 0.1], [0.8, 0.7, 0.2], [0.3, 0.9, 0.8]]),
            arr2(&[[0.0, 1.0, 0.5], [1.0, 0.0, 0.5]]),
        ];
        for score in cases {
            let got = assign_max(&score);
            let best = brute_force(&score);
            let total: f64 = got.iter().enumerate().map(|(i, &j)| score[[i, j]]).sum();
            assert_abs_diff_eq!(total, best, epsilon = 1e-12);
            let mut seen = got.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), got.len(), "assignment must be injective");
        }
    }

    fn brute_force(score: &Array2<f64>) -> f64 {
        fn rec(score: &Array2<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == score.nrows() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for j in 0..score.ncols() {
                if !used[j] {
                    used[j] = true;
                    let v = score[[row, j]] + rec(score, row + 1, used);
                    used[j] = false;
                    best = best.max(v);
                }
            }
            best
        }
        rec(score, 0, &mut vec![false; score.ncols()])
    }
}
