//! Lowest eigenpairs of sector matrices and the global ground state over `K`.

mod lanczos;
pub mod oracle;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::BasisIndexMap;
use crate::hamiltonian::{Momentum, SparseSectorHamiltonian};
use crate::model::ModelParams;

pub use lanczos::lanczos_lowest;
pub use oracle::{dense_oracle, DenseSpectrum};

/// Sectors at or below this dimension are diagonalized densely.
pub const DENSE_FALLBACK_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Residual tolerance: `|H v - E v| <= tol * max(1, |E|)`.
    pub tol: f64,
    /// Cap on matrix-vector products across all restarts.
    pub max_iter: usize,
    /// Full reorthogonalization against every stored Lanczos vector.
    pub reorth: bool,
    /// Seed for the start vector.
    pub seed: u64,
    /// Krylov dimension before an explicit restart.
    pub restart_dim: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            reorth: true,
            seed: 20_240_917,
            restart_dim: 150,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.restart_dim < 2 {
            return Err(Error::InvalidParameter("restart_dim must be at least 2".into()));
        }
        Ok(())
    }

    /// Settings for the sector with momentum index `j`, so that each sector draws
    /// an independent but reproducible start vector.
    pub fn for_sector(&self, j: i64) -> Self {
        Self {
            seed: self
                .seed
                .wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            ..*self
        }
    }
}

/// Lowest eigenpair of one sector.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<Complex64>,
    /// `|H v - E v|` re-evaluated with one extra product.
    pub residual: f64,
    /// Matrix-vector products spent.
    pub iterations: usize,
}

/// Lowest eigenvalue and a unit eigenvector of `h`.
pub fn lowest_eigenpair(h: &SparseSectorHamiltonian, settings: &SolverSettings) -> Result<Eigenpair> {
    settings.validate()?;
    if h.dim() == 0 {
        return Err(Error::Sizing("empty sector".into()));
    }
    if h.dim() <= DENSE_FALLBACK_DIM {
        return dense_lowest(h);
    }
    lanczos_lowest(h, settings)
}

fn dense_lowest(h: &SparseSectorHamiltonian) -> Result<Eigenpair> {
    let (energy, mut vector) = dense_hermitian_lowest(h.to_dense())?;
    fix_gauge(&mut vector);
    let residual = residual_norm(h, energy, &vector)?;
    Ok(Eigenpair {
        energy,
        vector,
        residual,
        iterations: 0,
    })
}

pub(crate) fn dense_hermitian_lowest(m: DMatrix<Complex64>) -> Result<(f64, Vec<Complex64>)> {
    let dim = m.nrows();
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 100 * dim.max(10))
        .ok_or_else(|| Error::Eigen("dense Hermitian eigensolver did not converge".into()))?;
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let col = eig.eigenvectors.column(idx).into_owned();
    let (energy, v) = polish(&m, energy, col);
    Ok((energy, v.iter().copied().collect()))
}

/// Shifted inverse iteration from an approximate eigenpair. The QR sweep alone
/// can leave eigenvector residuals far above rounding level; a couple of solves
/// bring them back down. Returns the iterate with the smallest residual.
pub(crate) fn polish<T>(m: &DMatrix<T>, energy: f64, v: DVector<T>) -> (f64, DVector<T>)
where
    T: ComplexField<RealField = f64>,
{
    let residual = |e: f64, v: &DVector<T>| (m * v - v * T::from_real(e)).norm();
    let mut best = (residual(energy, &v), energy, v.normalize());
    let dim = m.nrows();
    for _ in 0..3 {
        let shift = best.1 - 1e-10 * best.1.abs().max(1.0);
        let shifted = m - DMatrix::<T>::identity(dim, dim) * T::from_real(shift);
        let Some(x) = shifted.lu().solve(&best.2) else {
            break;
        };
        let x = x.normalize();
        let e = (x.adjoint() * m * &x)[(0, 0)].clone().real();
        let r = residual(e, &x);
        if !(r < best.0) {
            break;
        }
        best = (r, e, x);
    }
    (best.1, best.2)
}

/// Rotates the global phase so the largest component is real and positive.
pub(crate) fn fix_gauge(v: &mut [Complex64]) {
    let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
    else {
        return;
    };
    if big.norm() == 0.0 {
        return;
    }
    let phase = big.conj() / big.norm();
    v.iter_mut().for_each(|x| *x *= phase);
}

pub fn residual_norm(h: &SparseSectorHamiltonian, energy: f64, v: &[Complex64]) -> Result<f64> {
    let hv = h.apply(v)?;
    Ok(hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Global ground state over every allowed total quasimomentum.
#[derive(Clone, Debug)]
pub struct GroundStateRecord {
    pub momentum: Momentum,
    pub energy: f64,
    /// Unit-norm coefficients in the `|K_gs, m>` basis.
    pub coeffs: Vec<Complex64>,
    /// `-K_gs` when the ground state is the degenerate `+-K` pair.
    pub degenerate_partner: Option<Momentum>,
    /// Lowest energy of every sector, ascending in `K`.
    pub sector_energies: Vec<(Momentum, f64)>,
    pub params: ModelParams,
}

impl GroundStateRecord {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_partner.is_some()
    }

    pub fn sector_energy(&self, k: Momentum) -> Option<f64> {
        self.sector_energies
            .iter()
            .find(|(m, _)| *m == k)
            .map(|&(_, e)| e)
    }

    /// `|<Psi_{k=0}|psi_gs>|^2` for the bare Bloch state with no phonons.
    pub fn bare_overlap(&self) -> f64 {
        if self.momentum.index() == 0 {
            self.coeffs[0].norm_sqr()
        } else {
            0.0
        }
    }
}

/// Solves one sector: assembly plus lowest eigenpair.
pub fn solve_sector(
    k: Momentum,
    basis: &BasisIndexMap,
    params: &ModelParams,
    settings: &SolverSettings,
) -> Result<Eigenpair> {
    let h = SparseSectorHamiltonian::assemble(k, basis, params)?;
    lowest_eigenpair(&h, &settings.for_sector(k.index()))
}

/// Runs every sector and selects the global minimum. When `+-K` tie within
/// `10 tol`, the non-negative member is reported and `-K` becomes the partner.
pub fn ground_state_over_k(
    params: &ModelParams,
    basis: &BasisIndexMap,
    settings: &SolverSettings,
) -> Result<GroundStateRecord> {
    params.validate()?;
    settings.validate()?;
    let momenta = Momentum::allowed(params.n_sites);
    let solve = |k: &Momentum| solve_sector(*k, basis, params, settings);

    #[cfg(feature = "parallel")]
    let pairs: Vec<Eigenpair> = {
        use rayon::prelude::*;
        momenta.par_iter().map(solve).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<Eigenpair> = momenta.iter().map(solve).collect::<Result<_>>()?;

    select_ground_state(params, &momenta, pairs, settings.tol)
}

fn select_ground_state(
    params: &ModelParams,
    momenta: &[Momentum],
    mut pairs: Vec<Eigenpair>,
    tol: f64,
) -> Result<GroundStateRecord> {
    let tie = 10.0 * tol;
    let sector_energies: Vec<(Momentum, f64)> =
        momenta.iter().copied().zip(pairs.iter().map(|p| p.energy)).collect();

    let mut best = (0..pairs.len())
        .min_by(|&a, &b| {
            pairs[a]
                .energy
                .total_cmp(&pairs[b].energy)
                .then(momenta[a].index().abs().cmp(&momenta[b].index().abs()))
        })
        .expect("at least two sectors");

    let mut partner = None;
    let k = momenta[best];
    if !k.is_self_conjugate() {
        let mirror = momenta.iter().position(|m| *m == k.negate()).expect("mirror sector");
        if (pairs[mirror].energy - pairs[best].energy).abs() <= tie {
            if k.index() < 0 {
                best = mirror;
            }
            partner = Some(momenta[best].negate());
        }
    }

    let chosen = std::mem::take(&mut pairs[best]);
    Ok(GroundStateRecord {
        momentum: momenta[best],
        energy: chosen.energy,
        coeffs: chosen.vector,
        degenerate_partner: partner,
        sector_energies,
        params: *params,
    })
}

impl Default for Eigenpair {
    fn default() -> Self {
        Self {
            energy: f64::NAN,
            vector: Vec::new(),
            residual: f64::NAN,
            iterations: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(e: f64) -> Eigenpair {
        Eigenpair {
            energy: e,
            vector: vec![Complex64::new(1.0, 0.0)],
            residual: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn tie_break_prefers_non_negative_member() {
        let params = ModelParams::new(1.0, 0.5, 0.25, 4, 0).unwrap();
        let momenta = Momentum::allowed(4); // -1, 0, 1, 2
        let rec = select_ground_state(
            &params,
            &momenta,
            vec![pair(-3.0), pair(-2.0), pair(-3.0 + 1e-12), pair(0.0)],
            1e-10,
        )
        .unwrap();
        assert_eq!(rec.momentum.index(), 1);
        assert_eq!(rec.degenerate_partner.unwrap().index(), -1);

        let rec = select_ground_state(
            &params,
            &momenta,
            vec![pair(-1.0), pair(-2.0), pair(-1.0), pair(0.0)],
            1e-10,
        )
        .unwrap();
        assert_eq!(rec.momentum.index(), 0);
        assert!(rec.degenerate_partner.is_none());
    }

    #[test]
    fn self_conjugate_sector_has_no_partner() {
        let params = ModelParams::new(1.0, 0.5, 0.25, 4, 0).unwrap();
        let momenta = Momentum::allowed(4);
        let rec = select_ground_state(
            &params,
            &momenta,
            vec![pair(1.0), pair(0.0), pair(1.0), pair(-1.0)],
            1e-10,
        )
        .unwrap();
        assert_eq!(rec.momentum.index(), 2);
        assert!(rec.degenerate_partner.is_none());
    }

    #[test]
    fn settings_validation() {
        let mut s = SolverSettings::default();
        assert!(s.validate().is_ok());
        s.tol = 0.0;
        assert!(s.validate().is_err());
        let s = SolverSettings {
            max_iter: 0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let base = SolverSettings::default();
        assert_ne!(base.for_sector(1).seed, base.for_sector(-1).seed);
        assert_eq!(base.for_sector(0).seed, base.seed);
    }

    #[test]
    fn gauge_fix() {
        let mut v = vec![Complex64::new(0.0, 0.6), Complex64::new(0.0, -0.8)];
        fix_gauge(&mut v);
        assert!((v[1] - Complex64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((v[0] - Complex64::new(-0.6, 0.0)).norm() < 1e-15);
    }
}
