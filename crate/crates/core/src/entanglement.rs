//! Excitation-phonon entanglement of a ground-state record.
//!
//! The reduced excitation density matrix of a Bloch state is translation
//! invariant up to a phase,
//!
//! ```text
//! rho_{n n'} = N^{-1} e^{iK(n-n')} sum_m C_m conj(C_{T_{n-n'} m}),
//! ```
//!
//! so it is built from `N` correlation sums instead of a partial trace over the
//! product space. The entanglement spectrum is `xi_a = -ln p_a` for the
//! eigenvalues `p_a` of `rho`; vanishing eigenvalues map to `+inf`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eigen::GroundStateRecord;
use crate::error::{Error, Result};
use crate::fock::{translate_into, BasisIndexMap};
use crate::hamiltonian::{ring_phase, Momentum};

/// Eigenvalues below this are treated as exact zeros.
pub const ZERO_WEIGHT: f64 = 1e-14;
/// Most negative roundoff eigenvalue tolerated before `rho` is rejected.
pub const NEGATIVE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    pub entries: DMatrix<Complex64>,
    pub momentum: Momentum,
}

impl ReducedDensityMatrix {
    pub fn sites(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.sites();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues from the discrete Fourier transform of the first row,
    /// `p_q = sum_n rho_{0 n} e^{iqn}`, ascending. Valid because `rho` is circulant
    /// up to the Bloch phase.
    pub fn circulant_eigenvalues(&self) -> Vec<f64> {
        let n = self.sites();
        let mut out: Vec<f64> = (0..n as i64)
            .map(|q| {
                (0..n)
                    .map(|c| self.entries[(0, c)] * ring_phase(q * c as i64, n))
                    .sum::<Complex64>()
                    .re
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Eigenvalues from the dense Hermitian eigensolver, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.sites();
        let eig = self
            .entries
            .clone()
            .try_symmetric_eigen(f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| Error::Eigen("reduced density matrix eigensolver failed".into()))?;
        let mut p: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        p.sort_by(f64::total_cmp);
        Ok(p)
    }
}

/// Entanglement spectrum, ascending in `xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSpectrum {
    /// `-ln p_a`; `f64::INFINITY` for vanishing weights.
    pub xis: Vec<f64>,
    /// `p_a = e^{-xi_a}`, descending.
    pub weights: Vec<f64>,
}

impl EntanglementSpectrum {
    /// Builds the spectrum from raw reduced-density eigenvalues in any order.
    pub fn from_weights(raw: &[f64]) -> Result<Self> {
        let mut weights = Vec::with_capacity(raw.len());
        for &p in raw {
            if !p.is_finite() || p < -NEGATIVE_SLACK {
                return Err(Error::Eigen(format!(
                    "reduced density matrix has eigenvalue {p:e}, not positive semidefinite"
                )));
            }
            weights.push(if p < ZERO_WEIGHT { 0.0 } else { p.min(1.0) });
        }
        weights.sort_by(|a, b| b.total_cmp(a));
        let xis = weights
            .iter()
            .map(|&p| if p == 0.0 { f64::INFINITY } else { (-p.ln()).max(0.0) })
            .collect();
        Ok(Self { xis, weights })
    }

    pub fn len(&self) -> usize {
        self.xis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xis.is_empty()
    }

    /// Smallest entanglement-spectrum value `xi_1`.
    pub fn leading(&self) -> f64 {
        self.xis[0]
    }

    /// `-sum p ln p` evaluated on the weights directly.
    pub fn shannon_entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }
}

/// Reduced excitation density matrix of the ground state.
pub fn reduced_density(gs: &GroundStateRecord, basis: &BasisIndexMap) -> Result<ReducedDensityMatrix> {
    let n = basis.sites();
    if gs.coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            actual: gs.coeffs.len(),
        });
    }
    if gs.momentum.sites() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gs.momentum.sites(),
        });
    }
    let c = &gs.coeffs;

    // corr[d] = sum_m C_m conj(C_{T_d m})
    let mut corr = vec![Complex64::default(); n];
    corr[0] = c.iter().map(|x| x.norm_sqr()).sum::<f64>().into();
    let mut shifted = vec![0u8; n];
    for (i, m) in basis.iter().enumerate() {
        if c[i] == Complex64::default() {
            continue;
        }
        for (d, slot) in corr.iter_mut().enumerate().skip(1) {
            translate_into(m, d as i64, &mut shifted);
            let j = basis.rank(&shifted).expect("translation preserves the phonon number");
            *slot += c[i] * c[j].conj();
        }
    }

    let inv_n = 1.0 / n as f64;
    let k = gs.momentum;
    let entries = DMatrix::from_fn(n, n, |row, col| {
        let d = (row + n - col) % n;
        if d == 0 {
            Complex64::new(corr[0].re * inv_n, 0.0)
        } else if row > col {
            k.bloch_phase(d as i64) * corr[d] * inv_n
        } else {
            // mirror of the lower triangle keeps rho Hermitian bit for bit
            let dm = (col + n - row) % n;
            (k.bloch_phase(dm as i64) * corr[dm] * inv_n).conj()
        }
    });
    Ok(ReducedDensityMatrix {
        entries,
        momentum: k,
    })
}

/// Entanglement spectrum from the eigenvalues of `rho`.
pub fn spectrum(rho: &ReducedDensityMatrix) -> Result<EntanglementSpectrum> {
    EntanglementSpectrum::from_weights(&rho.eigenvalues()?)
}

/// `S_E = sum_a xi_a e^{-xi_a}`, with infinite `xi` contributing zero.
pub fn entropy(es: &EntanglementSpectrum) -> f64 {
    es.xis
        .iter()
        .filter(|x| x.is_finite())
        .map(|&x| x * (-x).exp())
        .sum()
}

/// Ground state expanded in the product basis: index `n * D_ph + rank(m)`,
/// amplitude `N^{-1/2} e^{iKn} C_{T_{-n} m}`.
pub fn product_amplitudes(gs: &GroundStateRecord, basis: &BasisIndexMap) -> Result<Vec<Complex64>> {
    let n = basis.sites();
    let d = basis.len();
    if gs.coeffs.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: gs.coeffs.len(),
        });
    }
    let norm = (n as f64).sqrt().recip();
    let mut psi = vec![Complex64::default(); n * d];
    let mut shifted = vec![0u8; n];
    for (i, m) in basis.iter().enumerate() {
        for site in 0..n {
            translate_into(m, site as i64, &mut shifted);
            let j = basis.rank(&shifted).expect("translation preserves the phonon number");
            psi[site * d + j] = gs.momentum.bloch_phase(site as i64) * gs.coeffs[i] * norm;
        }
    }
    Ok(psi)
}

/// Entanglement spectrum from the singular values `e^{-xi/2}` of the `N x D_ph`
/// entanglement matrix of the product-basis expansion.
pub fn svd_cross_check(gs: &GroundStateRecord, basis: &BasisIndexMap) -> Result<EntanglementSpectrum> {
    let n = basis.sites();
    let d = basis.len();
    let psi = product_amplitudes(gs, basis)?;
    // row-major N x D
    let m = DMatrix::from_row_slice(n, d, &psi);
    let svd = m
        .try_svd(false, false, f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::Eigen("SVD of the entanglement matrix failed".into()))?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

    let mut sigma = sigma;
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma.resize(n, 0.0);
    let zero_sigma = ZERO_WEIGHT.sqrt();
    let xis = sigma
        .iter()
        .map(|&s| {
            if s < zero_sigma {
                f64::INFINITY
            } else {
                (-2.0 * s.min(1.0).ln()).max(0.0)
            }
        })
        .collect();
    let weights = sigma
        .iter()
        .map(|&s| if s < zero_sigma { 0.0 } else { (s * s).min(1.0) })
        .collect();
    Ok(EntanglementSpectrum { xis, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{ground_state_over_k, SolverSettings};
    use crate::model::ModelParams;

    fn record(n: usize, nph: usize, gp: f64, gb: f64, w: f64) -> (GroundStateRecord, BasisIndexMap) {
        let basis = BasisIndexMap::enumerate(n, nph).unwrap();
        let params = ModelParams::new(w, gp, gb, n, nph).unwrap();
        let gs = ground_state_over_k(&params, &basis, &SolverSettings::default()).unwrap();
        (gs, basis)
    }

    #[test]
    fn bare_state_is_separable() {
        let (gs, basis) = record(6, 3, 0.25, 0.25, 1.0);
        let rho = reduced_density(&gs, &basis).unwrap();
        for v in rho.entries.iter() {
            assert!((v - Complex64::new(1.0 / 6.0, 0.0)).norm() < 1e-12);
        }
        let es = spectrum(&rho).unwrap();
        assert!(es.xis[0].abs() < 1e-12);
        assert!(es.xis[1..].iter().all(|x| x.is_infinite()));
        assert!(entropy(&es).abs() < 1e-12);
        let svd = svd_cross_check(&gs, &basis).unwrap();
        assert!(svd.xis[0].abs() < 1e-12);
        assert!(svd.xis[1..].iter().all(|x| x.is_infinite()));
    }

    #[test]
    fn synthetic_weights() {
        let es = EntanglementSpectrum::from_weights(&[0.0, 0.5, 0.5, 0.0]).unwrap();
        assert!((entropy(&es) - 2f64.ln()).abs() < 1e-15);
        let flat = EntanglementSpectrum::from_weights(&[0.125; 8]).unwrap();
        for x in &flat.xis {
            assert!((x - 8f64.ln()).abs() < 1e-15);
        }
        assert!((8f64.ln() - 2.0794).abs() < 1e-4);
        assert!((entropy(&flat) - 8f64.ln()).abs() < 1e-15);
        assert!(EntanglementSpectrum::from_weights(&[1.0 + 1e-9, -1e-9]).is_err());
        let clamp = EntanglementSpectrum::from_weights(&[1.0, -5e-13, 3e-15]).unwrap();
        assert_eq!(clamp.weights, vec![1.0, 0.0, 0.0]);
        assert_eq!(clamp.xis[0], 0.0);
    }

    #[test]
    fn invariants_for_coupled_state() {
        let (gs, basis) = record(6, 4, 0.7, 0.25, 1.0);
        let rho = reduced_density(&gs, &basis).unwrap();
        assert_eq!(rho.hermiticity_defect(), 0.0);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        for i in 0..6 {
            assert!((rho.entries[(i, i)].re - 1.0 / 6.0).abs() < 1e-12);
        }
        let eig = rho.eigenvalues().unwrap();
        let dft = rho.circulant_eigenvalues();
        for (a, b) in eig.iter().zip(&dft) {
            assert!((a - b).abs() < 1e-10);
        }
        let es = spectrum(&rho).unwrap();
        let s = entropy(&es);
        assert!(s > 0.0 && s <= 6f64.ln());
        assert!((s - es.shannon_entropy()).abs() < 1e-12);
        assert!((es.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn global_phase_does_not_matter() {
        let (mut gs, basis) = record(5, 3, 0.9, 0.1, 0.5);
        let a = spectrum(&reduced_density(&gs, &basis).unwrap()).unwrap();
        let phase = Complex64::from_polar(1.0, 0.731);
        gs.coeffs.iter_mut().for_each(|c| *c *= phase);
        let b = spectrum(&reduced_density(&gs, &basis).unwrap()).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn length_mismatch() {
        let (mut gs, basis) = record(4, 2, 0.5, 0.25, 1.0);
        gs.coeffs.pop();
        assert!(reduced_density(&gs, &basis).is_err());
        assert!(svd_cross_check(&gs, &basis).is_err());
    }
}
