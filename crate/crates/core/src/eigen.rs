//! Lowest eigenpairs of real symmetric operators.
//!
//! Small problems are materialized and handed to a dense symmetric
//! eigensolver. Larger ones go through a thick-restart Lanczos iteration
//! with full reorthogonalization: the Krylov basis is expanded up to a fixed
//! size, Rayleigh-Ritz is applied to the projected matrix, and the lowest Ritz
//! vectors plus the current residual direction seed the next cycle.
//!
//! Every returned eigenvector has unit Euclidean norm and its
//! largest-magnitude component positive, so results are reproducible
//! regardless of the start vector's sign.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A real symmetric linear map on `R^dim`.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit Euclidean norm, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// `‖A v - λ v‖₂` for each pair.
    pub residuals: Vec<f64>,
    /// Operator applications used (0 for the dense path).
    pub matvecs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Converged when `residual <= max(rel_tol * |λ|, abs_tol)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_matvecs: usize,
    /// Krylov basis size per restart cycle; `None` picks one from `k`.
    pub max_basis: Option<usize>,
    pub seed: u64,
    /// Problems up to this dimension are solved densely.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_matvecs: 50_000,
            max_basis: None,
            seed: 0x5eed_b0b0,
            dense_threshold: 1024,
        }
    }
}

impl SolverOptions {
    fn converged(&self, value: f64, residual: f64) -> bool {
        residual <= (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

/// Lowest `k` eigenpairs, dense or iterative depending on the dimension.
pub fn lowest_eigenpairs<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    check_count(op.dim(), k)?;
    if op.dim() <= opts.dense_threshold {
        Ok(dense_lowest(materialize(op), k))
    } else {
        lanczos_lowest(op, k, opts)
    }
}

fn check_count(dim: usize, k: usize) -> Result<()> {
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    Ok(())
}

pub fn materialize<Op: SymmetricOperator + ?Sized>(op: &Op) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    // symmetrize away rounding in the operator
    let t = m.transpose();
    (m + t) * 0.5
}

/// Full dense diagonalization, keeping the lowest `k` pairs.
pub fn dense_lowest(matrix: DMatrix<f64>, k: usize) -> EigenPairs {
    let n = matrix.nrows();
    let k = k.min(n);
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut av = vec![0.0; n];
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        normalize(&mut v);
        fix_sign(&mut v);
        matrix.apply(&v, &mut av);
        residuals.push(residual_norm(&av, &v, lambda));
        values.push(lambda);
        vectors.push(v);
    }
    EigenPairs {
        values,
        vectors,
        residuals,
        matvecs: 0,
    }
}

/// Thick-restart Lanczos for the `k` lowest eigenpairs.
pub fn lanczos_lowest<Op: SymmetricOperator + ?Sized>(
    op: &Op,
    k: usize,
    opts: &SolverOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    check_count(n, k)?;
    let max_basis = opts
        .max_basis
        .unwrap_or_else(|| (2 * k + 40).max(60))
        .max(k + 2)
        .min(n);
    if max_basis >= n {
        // the Krylov space would be the whole space anyway
        return Ok(dense_lowest(materialize(op), k));
    }
    let keep = k + (max_basis - k) / 3;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut start);

    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
    let mut proj = DMatrix::<f64>::zeros(max_basis, max_basis);
    let mut matvecs = 0usize;

    loop {
        // expand
        while images.len() < max_basis {
            let j = images.len();
            let mut w = vec![0.0; n];
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            for i in 0..=j {
                let hij = dot(&basis[i], &w);
                proj[(i, j)] = hij;
                proj[(j, i)] = hij;
            }
            let w_norm = norm(&w);
            let mut r = w.clone();
            images.push(w);
            orthogonalize(&mut r, &basis);
            let mut beta = norm(&r);
            if beta <= 1e-12 * w_norm.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue from a fresh random direction
                r = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                orthogonalize(&mut r, &basis);
                beta = norm(&r);
                if beta <= 1e-12 {
                    break;
                }
            }
            r.iter_mut().for_each(|x| *x /= beta);
            basis.push(r);
        }

        let m = images.len();
        let small = proj.view((0, 0), (m, m)).into_owned();
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let p = keep.min(m);

        let mut ritz = Vec::with_capacity(p);
        let mut ritz_images = Vec::with_capacity(p);
        let mut thetas = Vec::with_capacity(p);
        for &idx in order.iter().take(p) {
            let s = eig.eigenvectors.column(idx);
            ritz.push(combine(&basis[..m], s.as_slice()));
            ritz_images.push(combine(&images[..m], s.as_slice()));
            thetas.push(eig.eigenvalues[idx]);
        }
        let residuals: Vec<f64> = (0..k)
            .map(|l| residual_norm(&ritz_images[l], &ritz[l], thetas[l]))
            .collect();
        let done = (0..k).all(|l| opts.converged(thetas[l], residuals[l]));
        if done || m == n {
            let mut vectors = Vec::with_capacity(k);
            let mut final_res = Vec::with_capacity(k);
            for l in 0..k {
                let mut v = ritz[l].clone();
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                fix_sign(&mut v);
                vectors.push(v);
                final_res.push(residuals[l] / nv);
            }
            return Ok(EigenPairs {
                values: thetas[..k].to_vec(),
                vectors,
                residuals: final_res,
                matvecs,
            });
        }
        if matvecs >= opts.max_matvecs || basis.len() <= m {
            return Err(Error::NoConvergence {
                context: "lanczos".into(),
                iterations: matvecs,
                residuals,
            });
        }

        // restart with the kept Ritz vectors and the residual direction
        let residual_dir = basis.pop().expect("basis holds the next Lanczos vector");
        basis = ritz;
        basis.push(residual_dir);
        images = ritz_images;
        proj.fill(0.0);
        for (l, t) in thetas.iter().enumerate() {
            proj[(l, l)] = *t;
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(v: &mut [f64]) {
    let nv = norm(v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    }
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn orthogonalize(r: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
}

fn combine(vectors: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; vectors[0].len()];
    for (v, &c) in vectors.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

fn residual_norm(av: &[f64], v: &[f64], lambda: f64) -> f64 {
    av.iter()
        .zip(v)
        .map(|(a, x)| {
            let d = a - lambda * x;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
