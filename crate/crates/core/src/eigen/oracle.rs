//! Brute-force reference: the full real-space Hamiltonian in the product basis
//! `|n>_e (x) |m>_ph`, diagonalized densely. Used only to validate the sector
//! pipeline on small rings.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::polish;
use crate::error::{Error, Result};
use crate::fock::BasisIndexMap;
use crate::model::ModelParams;

/// Largest product-space dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 5000;

#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    /// Every eigenvalue, ascending.
    pub eigenvalues: Vec<f64>,
    /// Ground eigenvector, product index `n * D_ph + rank(m)`.
    pub ground: Vec<f64>,
    pub phonon_dim: usize,
    pub sites: usize,
}

impl DenseSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Spacing between the two lowest levels.
    pub fn gap(&self) -> f64 {
        self.eigenvalues.get(1).map_or(f64::INFINITY, |e| e - self.eigenvalues[0])
    }

    /// `Tr_ph |psi><psi|` for the ground vector.
    pub fn excitation_density(&self) -> DMatrix<Complex64> {
        let psi: Vec<Complex64> = self.ground.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        partial_trace_phonons(&psi, self.sites, self.phonon_dim)
    }
}

/// `rho_{n n'} = sum_m psi(n, m) conj(psi(n', m))` for a product-basis vector.
pub fn partial_trace_phonons(psi: &[Complex64], sites: usize, phonon_dim: usize) -> DMatrix<Complex64> {
    assert_eq!(psi.len(), sites * phonon_dim);
    DMatrix::from_fn(sites, sites, |n, np| {
        let a = &psi[n * phonon_dim..(n + 1) * phonon_dim];
        let b = &psi[np * phonon_dim..(np + 1) * phonon_dim];
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    })
}

/// Real-space Hamiltonian `H_0 + H_P + H_BM` on the truncated product space.
pub fn real_space_hamiltonian(params: &ModelParams) -> Result<(BasisIndexMap, DMatrix<f64>)> {
    params.validate()?;
    let basis = BasisIndexMap::enumerate(params.n_sites, params.n_ph)?;
    let n = params.n_sites;
    let d = basis.len();
    let total = n
        .checked_mul(d)
        .filter(|&t| t <= MAX_ORACLE_DIM)
        .ok_or_else(|| {
            Error::Sizing(format!(
                "dense oracle limited to {MAX_ORACLE_DIM} states, N * D_ph = {n} * {d}"
            ))
        })?;

    let idx = |site: usize, m: &[u8]| site * d + basis.rank(m).expect("config in basis");
    let mut h = DMatrix::<f64>::zeros(total, total);
    let cap = params.n_ph;
    let t = params.t_e;
    let gp = params.g_p * params.omega_ph;
    let gb = params.g_bm * params.omega_ph;

    // every nonzero action of (a_s + a_s^dagger) on m, as (m', amplitude)
    let displace = |m: &[u8], s: usize| -> Vec<(Vec<u8>, f64)> {
        let mut out = Vec::new();
        let tot: usize = m.iter().map(|&x| x as usize).sum();
        if tot < cap {
            let mut up = m.to_vec();
            up[s] += 1;
            out.push((up, (m[s] as f64 + 1.0).sqrt()));
        }
        if m[s] > 0 {
            let mut down = m.to_vec();
            down[s] -= 1;
            out.push((down, (m[s] as f64).sqrt()));
        }
        out
    };

    for site in 0..n {
        for c in 0..d {
            let m = basis.occupations(c);
            let col = site * d + c;
            let phonons: usize = m.iter().map(|&x| x as usize).sum();
            h[(col, col)] += params.omega_ph * phonons as f64;

            // bonds (b, b+1) touching `site`: hop across it with (X_{b+1} - X_b)
            for (b, dest) in [(site, (site + 1) % n), ((site + n - 1) % n, (site + n - 1) % n)] {
                let b1 = (b + 1) % n;
                h[(idx(dest, m), col)] += -t;
                for (mm, amp) in displace(m, b1) {
                    h[(idx(dest, &mm), col)] += gp * amp;
                }
                for (mm, amp) in displace(m, b) {
                    h[(idx(dest, &mm), col)] -= gp * amp;
                }
            }
            // density at `site` couples to X_{site-1} - X_{site+1}
            for (mm, amp) in displace(m, (site + n - 1) % n) {
                h[(idx(site, &mm), col)] += gb * amp;
            }
            for (mm, amp) in displace(m, (site + 1) % n) {
                h[(idx(site, &mm), col)] -= gb * amp;
            }
        }
    }
    Ok((basis, h))
}

/// Full spectrum and ground vector of the unreduced Hamiltonian.
pub fn dense_oracle(params: &ModelParams) -> Result<DenseSpectrum> {
    let (basis, h) = real_space_hamiltonian(params)?;
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let (e0, v) = polish(&h, eigenvalues[0], eig.eigenvectors.column(order[0]).into_owned());
    let mut eigenvalues = eigenvalues;
    eigenvalues[0] = e0;
    let ground = v.iter().copied().collect();
    Ok(DenseSpectrum {
        eigenvalues,
        ground,
        phonon_dim: basis.len(),
        sites: params.n_sites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric() {
        let p = ModelParams::new(1.0, 0.5, 0.25, 4, 2).unwrap();
        let (_, h) = real_space_hamiltonian(&p).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn no_phonons_gives_free_band() {
        let p = ModelParams::new(1.0, 0.9, 0.3, 4, 0).unwrap();
        let es = dense_oracle(&p).unwrap();
        let mut band: Vec<f64> = (0..4)
            .map(|j| -2.0 * (2.0 * std::f64::consts::PI * j as f64 / 4.0).cos())
            .collect();
        band.sort_by(f64::total_cmp);
        for (a, b) in es.eigenvalues.iter().zip(&band) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let p = ModelParams::new(1.0, 0.5, 0.25, 8, 9).unwrap();
        assert!(matches!(dense_oracle(&p), Err(Error::Sizing(_))));
    }

    #[test]
    fn density_has_unit_trace() {
        let p = ModelParams::new(1.0, 0.5, 0.25, 4, 2).unwrap();
        let rho = dense_oracle(&p).unwrap().excitation_density();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
}
