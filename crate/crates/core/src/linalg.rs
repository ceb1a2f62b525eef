//! Sparse symmetric matrices, direct factorizations, and the two
//! generalized-eigenvalue routines the studies rely on: the smallest
//! eigenpairs of a symmetric pencil (S, N) with N positive definite, and the
//! largest absolute eigenvalue of such a pencil.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;
use faer::Side;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric sparse matrix stored both as deduplicated triplets (for cheap
/// linear combinations and matvecs) and as a faer CSC matrix (for
/// factorizations).
#[derive(Clone, Debug)]
pub struct SpMat {
    n: usize,
    triplets: Vec<(u32, u32, f64)>,
    csc: SparseColMat<usize, f64>,
}

impl SpMat {
    /// Build from raw triplets; duplicates are summed.
    pub fn from_triplets(n: usize, raw: &[(usize, usize, f64)]) -> Result<SpMat> {
        let mut sorted: Vec<(u32, u32, f64)> = raw
            .iter()
            .map(|&(r, c, v)| (r as u32, c as u32, v))
            .collect();
        sorted.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if let Some(last) = triplets.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            triplets.push((r, c, v));
        }
        triplets.retain(|&(_, _, v)| v != 0.0);
        Self::from_clean_triplets(n, triplets)
    }

    fn from_clean_triplets(n: usize, triplets: Vec<(u32, u32, f64)>) -> Result<SpMat> {
        let faer_triplets: Vec<faer::sparse::Triplet<usize, usize, f64>> = triplets
            .iter()
            .map(|&(r, c, v)| faer::sparse::Triplet::new(r as usize, c as usize, v))
            .collect();
        let csc = SparseColMat::try_new_from_triplets(n, n, &faer_triplets)
            .map_err(|e| Error::Numerical(format!("sparse build failed: {e:?}")))?;
        Ok(SpMat { n, triplets, csc })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.triplets {
            y[r as usize] += v * x[c as usize];
        }
        y
    }

    /// uᵀ A v.
    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        self.triplets
            .iter()
            .map(|&(r, c, val)| u[r as usize] * val * v[c as usize])
            .sum()
    }

    /// a·A + b·B entry-wise.
    pub fn linear_combo(a: f64, ma: &SpMat, b: f64, mb: &SpMat) -> Result<SpMat> {
        assert_eq!(ma.n, mb.n, "dimension mismatch in linear_combo");
        let mut merged: Vec<(u32, u32, f64)> =
            Vec::with_capacity(ma.triplets.len() + mb.triplets.len());
        merged.extend(ma.triplets.iter().map(|&(r, c, v)| (r, c, a * v)));
        merged.extend(mb.triplets.iter().map(|&(r, c, v)| (r, c, b * v)));
        merged.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut triplets: Vec<(u32, u32, f64)> = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if let Some(last) = triplets.last_mut() {
                if last.0 == r && last.1 == c {
                    last.2 += v;
                    continue;
                }
            }
            triplets.push((r, c, v));
        }
        Self::from_clean_triplets(ma.n, triplets)
    }

    /// Sparse Cholesky; fails if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<Factor> {
        let llt = self
            .csc
            .as_ref()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Numerical(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Factor { inner: FactorKind::Llt(llt), n: self.n })
    }

    /// Sparse LU for symmetric-indefinite systems.
    pub fn lu(&self) -> Result<Factor> {
        let lu = self
            .csc
            .as_ref()
            .sp_lu()
            .map_err(|e| Error::Numerical(format!("sparse LU failed: {e:?}")))?;
        Ok(Factor { inner: FactorKind::Lu(lu), n: self.n })
    }
}

enum FactorKind {
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

/// A direct factorization handle with slice-based solves.
pub struct Factor {
    inner: FactorKind,
    n: usize,
}

impl Factor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = faer::Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = match &self.inner {
            FactorKind::Llt(f) => f.solve(&b),
            FactorKind::Lu(f) => f.solve(&b),
        };
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

fn dense_sym_eig(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = a.len();
    let mat = faer::Mat::from_fn(m, m, |i, j| a[i][j]);
    let ev = mat
        .self_adjoint_eigen(Side::Lower)
        .expect("dense symmetric eigendecomposition");
    let vals = ev.S().column_vector();
    let vecs = ev.U();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let values = order.iter().map(|&i| vals[i]).collect();
    let vectors = order
        .iter()
        .map(|&c| (0..m).map(|r| vecs[(r, c)]).collect())
        .collect();
    (values, vectors)
}

fn n_dot(nmat: &SpMat, a: &[f64], b: &[f64]) -> f64 {
    nmat.quad_form(a, b)
}

/// Orthonormalize the columns of `basis` in the N-inner product by modified
/// Gram-Schmidt (two passes). Columns that collapse are replaced by fresh
/// random vectors.
fn n_orthonormalize(nmat: &SpMat, basis: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let m = basis.len();
    for i in 0..m {
        for _attempt in 0..3 {
            for _pass in 0..2 {
                for j in 0..i {
                    let c = n_dot(nmat, &basis[i], &basis[j]);
                    let (head, tail) = basis.split_at_mut(i);
                    let qj = &head[j];
                    for (x, q) in tail[0].iter_mut().zip(qj.iter()) {
                        *x -= c * q;
                    }
                }
            }
            let norm = n_dot(nmat, &basis[i], &basis[i]).max(0.0).sqrt();
            if norm > 1e-14 {
                for x in basis[i].iter_mut() {
                    *x /= norm;
                }
                break;
            }
            for x in basis[i].iter_mut() {
                *x = rng.random::<f64>() - 0.5;
            }
        }
    }
}

/// Largest |θ| over the pencil A v = θ N v (A symmetric, N positive
/// definite), via block subspace iteration on (N⁻¹A)², which is insensitive
/// to ±θ ties. Deterministic for a fixed seed.
pub fn pencil_max_abs(a: &SpMat, nmat: &SpMat, seed: u64) -> Result<f64> {
    let n = a.dim();
    let block = 4.min(n);
    let nfact = nmat.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    n_orthonormalize(nmat, &mut basis, &mut rng);

    let mut top = 0.0f64;
    let mut stable = 0usize;
    for _iter in 0..300 {
        // Z = (N⁻¹ A) X, then Rayleigh-Ritz for (N⁻¹A)² in the N-inner
        // product: B = (AX)ᵀ N⁻¹ (AX).
        let ax: Vec<Vec<f64>> = basis.iter().map(|x| a.matvec(x)).collect();
        let z: Vec<Vec<f64>> = ax.iter().map(|r| nfact.solve(r)).collect();
        let mut b = vec![vec![0.0; block]; block];
        for i in 0..block {
            for j in 0..=i {
                let v = ax[i].iter().zip(z[j].iter()).map(|(p, q)| p * q).sum();
                b[i][j] = v;
                b[j][i] = v;
            }
        }
        let (vals, _) = dense_sym_eig(&b);
        let theta2 = vals.last().copied().unwrap_or(0.0).max(0.0);
        if (theta2.sqrt() - top).abs() <= 1e-11 * (1.0 + top) {
            stable += 1;
            if stable >= 3 {
                return Ok(theta2.sqrt());
            }
        } else {
            stable = 0;
        }
        top = theta2.sqrt();
        basis = z;
        n_orthonormalize(nmat, &mut basis, &mut rng);
    }
    Ok(top)
}

/// The k smallest eigenvalues (ascending) and N-orthonormal eigenvectors of
/// the pencil S v = θ N v, S symmetric, N positive definite. Shift-invert
/// subspace iteration with an adaptive shift kept strictly below the
/// spectrum (verified by Cholesky of S − σN).
pub fn smallest_pencil_eigs(
    s: &SpMat,
    nmat: &SpMat,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = s.dim();
    if k == 0 || k > n {
        return Err(Error::Numerical(format!("requested {k} eigenpairs of a {n}-dim pencil")));
    }
    let m = (k + 4).min(n);
    let rho = pencil_max_abs(s, nmat, seed ^ 0x9e37_79b9)?;
    let scale = 1.0 + rho;

    // A shift below the whole spectrum always exists; back off until the
    // shifted matrix is positive definite.
    let mut sigma = -1.05 * rho - 1e-3 * scale;
    let mut fact = None;
    for _ in 0..40 {
        let shifted = SpMat::linear_combo(1.0, s, -sigma, nmat)?;
        match shifted.cholesky() {
            Ok(f) => {
                fact = Some(f);
                break;
            }
            Err(_) => sigma = 2.0 * sigma - scale,
        }
    }
    let mut fact =
        fact.ok_or_else(|| Error::Numerical("could not bracket the pencil spectrum".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    n_orthonormalize(nmat, &mut basis, &mut rng);

    let mut theta = vec![0.0f64; m];
    for iter in 0..400 {
        // One shift-invert step: X ← (S − σN)⁻¹ N X.
        basis = basis
            .iter()
            .map(|x| fact.solve(&nmat.matvec(x)))
            .collect();
        n_orthonormalize(nmat, &mut basis, &mut rng);

        // Rayleigh-Ritz on the N-orthonormal basis.
        let sx: Vec<Vec<f64>> = basis.iter().map(|x| s.matvec(x)).collect();
        let mut proj = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v = basis[i].iter().zip(sx[j].iter()).map(|(p, q)| p * q).sum();
                proj[i][j] = v;
                proj[j][i] = v;
            }
        }
        let (vals, vecs) = dense_sym_eig(&proj);
        let mut rotated: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
        for (c, dst) in rotated.iter_mut().enumerate() {
            for (r, src) in basis.iter().enumerate() {
                let w = vecs[c][r];
                for (d, x) in dst.iter_mut().zip(src.iter()) {
                    *d += w * x;
                }
            }
        }
        basis = rotated;
        theta.copy_from_slice(&vals);

        // Convergence check on the k wanted pairs.
        let mut converged = true;
        for i in 0..k {
            let sv = s.matvec(&basis[i]);
            let nv = nmat.matvec(&basis[i]);
            let res: f64 = sv
                .iter()
                .zip(nv.iter())
                .map(|(a, b)| (a - theta[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let bound: f64 = nv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if res > 1e-9 * scale.max(bound * (1.0 + theta[i].abs())) {
                converged = false;
                break;
            }
        }
        if converged {
            break;
        }

        // Every few sweeps, move the shift toward the bottom Ritz value to
        // sharpen the spectral transform (keeping it strictly below the
        // spectrum, as certified by a successful Cholesky).
        if iter % 6 == 5 {
            let spread = (theta[m - 1] - theta[0]).max(1e-3 * scale);
            let mut candidate = theta[0] - 0.25 * spread;
            let mut accepted = false;
            for _ in 0..4 {
                if candidate >= sigma {
                    let shifted = SpMat::linear_combo(1.0, s, -candidate, nmat)?;
                    if let Ok(f) = shifted.cholesky() {
                        sigma = candidate;
                        fact = f;
                        accepted = true;
                        break;
                    }
                }
                candidate = 0.5 * (candidate + sigma);
            }
            let _ = accepted;
        }
    }

    basis.truncate(k);
    theta.truncate(k);
    Ok((theta, basis))
}
