//! Restarted Lanczos iteration for the lowest eigenpair of a Hermitian sector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fix_gauge, residual_norm, Eigenpair, SolverSettings};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseSectorHamiltonian;

// Ritz values are re-evaluated every CHECK_EVERY steps once the basis holds
// at least MIN_STEPS vectors.
const CHECK_EVERY: usize = 4;
const MIN_STEPS: usize = 8;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        // conj(x) * y
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn random_unit(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Lowest Ritz pair of the tridiagonal matrix `(alpha, beta)`: value and the
/// coefficient vector in the Lanczos basis.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty tridiagonal");
    (theta, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Lanczos with optional full reorthogonalization (classical Gram-Schmidt with
/// a conditional second pass). The Krylov basis is rebuilt from the current Ritz
/// vector every `restart_dim` steps.
pub fn lanczos_lowest(h: &SparseSectorHamiltonian, settings: &SolverSettings) -> Result<Eigenpair> {
    let dim = h.dim();
    let bound_for = |e: f64| settings.tol * e.abs().max(1.0);
    let krylov_cap = settings.restart_dim.min(dim);

    let mut start = random_unit(dim, settings.seed);
    let mut spent = 0usize;
    let mut best_residual = f64::INFINITY;

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(krylov_cap + 1);
    let mut w = vec![Complex64::default(); dim];

    loop {
        basis.clear();
        basis.push(start.clone());
        let mut alpha: Vec<f64> = Vec::with_capacity(krylov_cap);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov_cap);
        let mut ritz: Option<(f64, Vec<f64>)> = None;

        for step in 0..krylov_cap {
            h.apply_into(&basis[step], &mut w)?;
            spent += 1;

            let a = dot(&basis[step], &w).re;
            axpy(Complex64::new(-a, 0.0), &basis[step], &mut w);
            if step > 0 {
                axpy(Complex64::new(-beta[step - 1], 0.0), &basis[step - 1], &mut w);
            }
            if settings.reorth {
                for _pass in 0..2 {
                    let before = norm(&w);
                    for v in &basis {
                        let c = dot(v, &w);
                        axpy(-c, v, &mut w);
                    }
                    if norm(&w) > 0.7 * before {
                        break;
                    }
                }
            }
            let b = norm(&w);
            alpha.push(a);

            let scale = alpha.iter().map(|x| x.abs()).fold(b, f64::max).max(1.0);
            let breakdown = b <= 1e-13 * scale;
            let last = step + 1 == krylov_cap || spent >= settings.max_iter;
            let check = breakdown || last || (step + 1 >= MIN_STEPS && (step + 1) % CHECK_EVERY == 0) || step + 1 == dim;

            if check {
                let (theta, y) = tridiagonal_lowest(&alpha, &beta);
                let estimate = b * y.last().copied().unwrap_or(0.0).abs();
                ritz = Some((theta, y));
                if breakdown || last || estimate <= 0.1 * bound_for(theta) {
                    break;
                }
            }
            beta.push(b);
            let inv = 1.0 / b;
            basis.push(w.iter().map(|x| x * inv).collect());
        }

        let (_, y) = ritz.expect("at least one Ritz evaluation per cycle");
        let mut x = vec![Complex64::default(); dim];
        for (coef, v) in y.iter().zip(&basis) {
            axpy(Complex64::new(*coef, 0.0), v, &mut x);
        }
        let n = norm(&x);
        x.iter_mut().for_each(|c| *c /= n);

        // Rayleigh quotient and true residual from one extra product
        h.apply_into(&x, &mut w)?;
        spent += 1;
        let energy = dot(&x, &w).re;
        let residual = w
            .iter()
            .zip(&x)
            .map(|(hx, xi)| (hx - xi * energy).norm_sqr())
            .sum::<f64>()
            .sqrt();

        if residual <= bound_for(energy) {
            fix_gauge(&mut x);
            let residual = residual_norm(h, energy, &x)?;
            return Ok(Eigenpair {
                energy,
                vector: x,
                residual,
                iterations: spent,
            });
        }
        if spent >= settings.max_iter {
            return Err(Error::NotConverged {
                iterations: spent,
                residual: best_residual.min(residual),
            });
        }

        best_residual = best_residual.min(residual);
        start = x;
    }
}
